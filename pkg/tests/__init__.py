"""
Test suite for PyPrbGAN
"""
