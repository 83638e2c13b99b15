"""
Binary parameter checkpoints

Layout (little-endian):
    8 bytes   magic "PRBGAN01"
    uint32    tensor count
    per tensor:
        uint32            rank
        rank x uint64     extents
        float64[...]      row-major payload
"""

from pathlib import Path
from typing import List, Sequence, Union
import logging
import struct

import numpy as np

from pyprbgan.core.errors import ContractError
from pyprbgan.nn.layers import LayerSpec, MlpParams

logger = logging.getLogger(__name__)

MAGIC = b"PRBGAN01"


def save_tensors(file_path: Path, tensors: Sequence[np.ndarray]) -> Path:
    """
    Write tensors to a checkpoint file

    Args:
        file_path: Destination
        tensors: Arrays to store, in order

    Returns:
        Path written
    """
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)

    with open(file_path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(tensors)))
        for tensor in tensors:
            array = np.asarray(tensor, dtype="<f8")
            f.write(struct.pack("<I", array.ndim))
            if array.ndim:
                f.write(struct.pack(f"<{array.ndim}Q", *array.shape))
            f.write(array.tobytes(order="C"))

    logger.debug(f"Saved {len(tensors)} tensors to {file_path}")
    return file_path


def load_tensors(file_path: Path) -> List[np.ndarray]:
    """
    Read every tensor from a checkpoint file

    Raises:
        ContractError: If the magic header is wrong or the file is truncated
    """
    data = Path(file_path).read_bytes()
    if data[:len(MAGIC)] != MAGIC:
        raise ContractError(f"{file_path} is not a PRBGAN01 checkpoint")

    offset = len(MAGIC)

    def read(fmt: str) -> tuple:
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(data):
            raise ContractError(f"{file_path} is truncated")
        values = struct.unpack_from(fmt, data, offset)
        offset += size
        return values

    (count,) = read("<I")
    tensors = []
    for _ in range(count):
        (rank,) = read("<I")
        shape = read(f"<{rank}Q") if rank else ()
        n_bytes = 8 * int(np.prod(shape, dtype=np.int64))
        if offset + n_bytes > len(data):
            raise ContractError(f"{file_path} is truncated")
        array = np.frombuffer(data, dtype="<f8", count=n_bytes // 8, offset=offset)
        tensors.append(array.reshape(shape).astype(np.float64))
        offset += n_bytes

    return tensors


def save_params(file_path: Path, params: MlpParams) -> Path:
    """Write MLP parameters (w0, b0, w1, b1, ...)"""
    return save_tensors(file_path, params.values())


def load_params(file_path: Path, spec: Sequence[LayerSpec]) -> MlpParams:
    """Read MLP parameters saved by save_params for the given layer chain"""
    return MlpParams.from_values(list(spec), load_tensors(file_path))
