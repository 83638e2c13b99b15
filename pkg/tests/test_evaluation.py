"""
Tests for histograms, JS divergence, mode coverage and artifact files
"""

import pytest
import numpy as np

from pyprbgan.core.errors import ContractError
from pyprbgan.data.synthetic import MixtureSpec, grid_mixture, paper_mixture, sample
from pyprbgan.evaluation.coverage import ModeCoverageReport, mode_coverage
from pyprbgan.evaluation.histogram import Histogram, default_range, histogram, js_divergence, sample_jsd
from pyprbgan.evaluation.plots import plot_histograms
from pyprbgan.utils.file_parsers import read_histogram_csv, read_report_text, read_samples_csv, read_telemetry
from pyprbgan.utils.output_writers import (
    TelemetryWriter,
    format_report,
    write_histogram_csv,
    write_report_text,
    write_samples_csv,
)


def hist_from_counts(counts):
    counts = np.asarray(counts, dtype=np.int64)
    return Histogram(edges=np.arange(len(counts) + 1, dtype=np.float64), counts=counts,
                     total=int(counts.sum()))


def direct_jsd(p, q):
    """JSD by explicit summation over non-empty bins"""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    m = 0.5 * (p + q)
    total = 0.0
    for a, b, c in zip(p, q, m):
        if a > 0:
            total += 0.5 * a * np.log(a / c)
        if b > 0:
            total += 0.5 * b * np.log(b / c)
    return total


class TestHistogram:
    """Test equal-width binning"""

    def test_midpoint_goes_right(self):
        """Test a sample on an inner edge falls in the upper bin"""
        h = histogram(np.array([0.5]), bins=2, value_range=(0.0, 1.0))
        np.testing.assert_array_equal(h.counts, [0, 1])

    def test_last_bin_closed(self):
        """Test the upper range limit is counted in the last bin"""
        h = histogram(np.array([1.0]), bins=4, value_range=(0.0, 1.0))
        np.testing.assert_array_equal(h.counts, [0, 0, 0, 1])
        assert h.out_of_range == 0

    def test_uniform_counts(self):
        """Test uniform samples fill bins within 3 binomial sigma"""
        samples = np.random.default_rng(0).uniform(0.0, 1.0, size=100000)
        h = histogram(samples, bins=10, value_range=(0.0, 1.0))
        sigma = np.sqrt(100000 * 0.1 * 0.9)
        assert np.all(np.abs(h.counts - 10000) < 3 * sigma)

    def test_all_out_of_range(self):
        """Test samples outside the range are tracked separately"""
        h = histogram(np.array([5.0, 6.0, -3.0]), bins=3, value_range=(0.0, 1.0))
        np.testing.assert_array_equal(h.counts, [0, 0, 0])
        assert h.out_of_range == 3
        np.testing.assert_array_equal(h.normalized(), [0.0, 0.0, 0.0])

    def test_conservation(self):
        """Test in-range counts plus out-of-range mass equal n"""
        samples = np.random.default_rng(1).normal(size=1000)
        h = histogram(samples, bins=20, value_range=(-1.0, 1.0))
        assert h.counts.sum() + h.out_of_range == 1000
        assert np.all(np.diff(h.edges) > 0)

    def test_invalid_inputs(self):
        """Test empty samples, zero bins and empty ranges are rejected"""
        with pytest.raises(ContractError):
            histogram(np.array([]), bins=10)
        with pytest.raises(ContractError):
            histogram(np.array([1.0]), bins=0, value_range=(0.0, 2.0))
        with pytest.raises(ContractError):
            histogram(np.array([1.0]), bins=5, value_range=(1.0, 1.0))

    def test_default_range(self):
        """Test the default range pads the real extent by 5"""
        assert default_range(np.array([10.0, 110.0])) == (5.0, 115.0)


class TestJsDivergence:
    """Test the Jensen-Shannon divergence"""

    def test_self(self):
        """Test a histogram is at distance 0 from itself"""
        h = hist_from_counts([3, 1, 4, 1, 5])
        assert js_divergence(h, h) == 0.0

    def test_disjoint(self):
        """Test disjoint one-hot histograms reach ln 2"""
        assert abs(js_divergence(hist_from_counts([1, 0]), hist_from_counts([0, 1])) - np.log(2.0)) < 1e-15

    def test_direct_summation(self):
        """Test [0.5, 0.5] vs [1, 0] against explicit summation"""
        value = js_divergence(hist_from_counts([1, 1]), hist_from_counts([2, 0]))
        assert abs(value - direct_jsd([0.5, 0.5], [1.0, 0.0])) < 1e-14
        assert abs(value - 0.75 * np.log(4.0 / 3.0)) < 1e-14

    def test_symmetry_and_bounds(self):
        """Test symmetry and the [0, ln 2] range on random histograms"""
        rng = np.random.default_rng(2)
        for _ in range(20):
            a, b = hist_from_counts(rng.integers(0, 10, 8)), hist_from_counts(rng.integers(0, 10, 8))
            if a.counts.sum() == 0 or b.counts.sum() == 0:
                continue
            forward, reverse = js_divergence(a, b), js_divergence(b, a)
            assert abs(forward - reverse) < 1e-15
            assert 0.0 <= forward <= np.log(2.0)
            assert abs(forward - direct_jsd(a.normalized(), b.normalized())) < 1e-12

    def test_out_of_range_mass_counts(self):
        """Test samples outside the range push the divergence up"""
        real = Histogram(edges=np.array([0.0, 1.0, 2.0]), counts=np.array([50, 50]), total=100)
        away = Histogram(edges=real.edges, counts=np.array([0, 0]), total=100)
        assert abs(js_divergence(real, away) - np.log(2.0)) < 1e-15

        mostly_away = Histogram(edges=real.edges, counts=np.array([1, 1]), total=200)
        value = js_divergence(real, mostly_away)
        assert abs(value - direct_jsd([0.5, 0.5, 0.0], [0.005, 0.005, 0.99])) < 1e-14
        assert value > 0.6

    def test_sample_jsd_out_of_range(self):
        """Test a generator placing everything outside the real range scores ln 2"""
        real = sample(paper_mixture(), 2000, np.random.default_rng(4))
        assert abs(sample_jsd(real, np.full((2000, 1), 500.0)) - np.log(2.0)) < 1e-15

    def test_edge_mismatch(self):
        """Test histograms on different bins are rejected"""
        a = hist_from_counts([1, 2])
        b = Histogram(edges=np.array([0.0, 1.5, 2.0]), counts=np.array([1, 2]), total=3)
        with pytest.raises(ContractError):
            js_divergence(a, b)

    def test_sample_jsd(self):
        """Test samples from one distribution score below samples from another"""
        rng = np.random.default_rng(3)
        real = sample(paper_mixture(), 5000, rng)
        same = sample(paper_mixture(), 5000, rng)
        collapsed = rng.normal(60.0, 2.0, size=(5000, 1))
        assert sample_jsd(real, same) < sample_jsd(real, collapsed)


class TestModeCoverage:
    """Test mode capture counting"""

    def test_samples_from_spec(self):
        """Test real samples capture every mode"""
        spec = paper_mixture()
        report = mode_coverage(sample(spec, 10000, np.random.default_rng(0)), spec, tau=0.02)
        assert report.modes_captured == 5
        assert report.high_quality_fraction > 0.99
        assert report.jsd is None

    def test_single_mean(self):
        """Test samples piled on one mean capture exactly one mode"""
        spec = paper_mixture()
        report = mode_coverage(np.full((100, 1), 60.0), spec)
        assert report.modes_captured == 1
        assert [m.captured for m in report.modes] == [False, False, True, False, False]
        assert report.modes[2].mass_fraction == 1.0

    def test_far_samples(self):
        """Test samples away from every mode capture nothing"""
        report = mode_coverage(np.full((50, 1), 1000.0), paper_mixture())
        assert report.modes_captured == 0
        assert report.high_quality_fraction == 0.0

    def test_monotone_in_tau(self):
        """Test raising tau never increases the captured count"""
        spec = paper_mixture()
        skewed = np.concatenate([np.full(900, 10.0), np.full(80, 60.0), np.full(20, 110.0)])[:, None]
        counts = [mode_coverage(skewed, spec, tau=t).modes_captured for t in (0.01, 0.02, 0.05, 0.1, 0.5)]
        assert counts == sorted(counts, reverse=True)
        assert counts[0] == 3 and counts[-1] == 1

    def test_jsd_with_real(self):
        """Test the JSD field is filled for 1-D mixtures given real samples"""
        spec = paper_mixture()
        rng = np.random.default_rng(5)
        report = mode_coverage(sample(spec, 2000, rng), spec, real=sample(spec, 2000, rng))
        assert 0.0 <= report.jsd <= np.log(2.0)

    def test_grid(self):
        """Test 2-D capture uses every coordinate"""
        spec = grid_mixture(size=2, spacing=2.0, std=0.1)
        points = np.array([[0.0, 0.0]] * 10 + [[2.0, 2.0]] * 10 + [[0.0, 2.5]] * 10)
        report = mode_coverage(points, spec, tau=0.2)
        assert report.modes_captured == 2

    def test_invalid_inputs(self):
        """Test empty samples, bad tau and width mismatches are rejected"""
        spec = paper_mixture()
        with pytest.raises(ContractError):
            mode_coverage(np.empty((0, 1)), spec)
        with pytest.raises(ContractError):
            mode_coverage(np.zeros((5, 1)), spec, tau=1.0)
        with pytest.raises(ContractError):
            mode_coverage(np.zeros((5, 2)), spec)

    def test_dict_roundtrip(self):
        """Test reports rebuild from their dict form"""
        spec = MixtureSpec.from_arrays(means=[0.0, 5.0], stds=[1.0, 1.0])
        report = mode_coverage(np.array([[0.1], [4.9], [0.0]]), spec)
        assert ModeCoverageReport.from_dict(report.to_dict()) == report


class TestArtifacts:
    """Test artifact writers and readers"""

    def test_histogram_csv(self, tmp_path):
        """Test histogram CSV keeps edges, counts and out-of-range mass"""
        samples = np.random.default_rng(6).normal(size=500)
        h = histogram(samples, bins=7, value_range=(-1.0, 1.0))
        path = write_histogram_csv(tmp_path / "h.csv", h)
        assert path.read_text().splitlines()[0] == "bin_lo,bin_hi,count"
        loaded = read_histogram_csv(path)
        np.testing.assert_array_equal(loaded.edges, h.edges)
        np.testing.assert_array_equal(loaded.counts, h.counts)
        assert loaded.out_of_range == h.out_of_range > 0

    def test_samples_csv(self, tmp_path):
        """Test samples read back exactly"""
        rng = np.random.default_rng(7)
        samples = rng.normal(size=(500, 3)) * np.array([1.0, 1e3, 1e-3]) + rng.uniform(0.0, 120.0, size=(500, 1))
        loaded = read_samples_csv(write_samples_csv(tmp_path / "s.csv", samples))
        np.testing.assert_array_equal(loaded, samples)

    def test_samples_csv_errors(self, tmp_path):
        """Test missing and non-numeric sample files are rejected"""
        with pytest.raises(ContractError):
            read_samples_csv(tmp_path / "missing.csv")
        bad = tmp_path / "bad.csv"
        bad.write_text("x0\nabc\n")
        with pytest.raises(ContractError):
            read_samples_csv(bad)

    def test_report_text(self, tmp_path):
        """Test the key: value report"""
        report = mode_coverage(np.full((10, 1), 20.0), paper_mixture())
        path = write_report_text(tmp_path / "r.txt", report)
        fields = read_report_text(path)
        assert fields["modes_captured"] == "1"
        assert fields["jsd"] == "none"
        assert fields["mode_1.captured"] == "true"
        assert float(fields["mode_1.mass_fraction"]) == 1.0
        assert format_report(report) == path.read_text()

    def test_telemetry(self, tmp_path):
        """Test NDJSON telemetry reads back as a frame"""
        with TelemetryWriter(tmp_path / "t.ndjson") as writer:
            writer.write({"kind": "step", "step": 1, "grad_norms": {"generator": 0.5}})
            writer.write({"kind": "step", "step": 2, "grad_norms": {"generator": np.float64(0.25)}})
        df = read_telemetry(tmp_path / "t.ndjson")
        assert list(df["step"]) == [1, 2]
        assert list(df["grad_norms.generator"]) == [0.5, 0.25]

    def test_plot(self, tmp_path):
        """Test the histogram figure is written"""
        rng = np.random.default_rng(8)
        real = sample(paper_mixture(), 1000, rng)
        path = plot_histograms(real, real + 1.0, tmp_path / "fig.png", bins=30)
        assert path.exists() and path.stat().st_size > 0


if __name__ == "__main__":
    pytest.main([__file__])
