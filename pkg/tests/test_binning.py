import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_monotone_partition
from sqlcalib.binning import monotonic_bins, uniform_bins, write_partition_csv

samples = st.lists(
    st.tuples(st.floats(min_value=0, max_value=1), st.integers(min_value=0, max_value=1)),
    min_size=1,
    max_size=12,
)


class TestUniform:
    def test_point_lands_in_tenth_bin(self):
        part = uniform_bins([0.95], [1], 10)
        (hit,) = [b for b in part.bins if b.count]
        assert (hit.lo, hit.hi) == (0.9, 1.0)

    def test_conf_of_one_goes_to_last_bin(self):
        part = uniform_bins([1.0], [1], 10)
        assert part.bins[-1].count == 1

    def test_two_singleton_bins(self):
        part = uniform_bins([0.95, 0.85], [1, 0], 10)
        nonempty = [b for b in part.bins if b.count]
        assert [b.accuracy for b in nonempty] == [0.0, 1.0]
        assert [b.count for b in part.bins] == [0] * 8 + [1, 1]

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            uniform_bins([0.5], [1, 0], 10)

    def test_needs_at_least_one_bin(self):
        with pytest.raises(ValueError):
            uniform_bins([0.5], [1], 0)

    @given(samples, st.integers(min_value=1, max_value=20))
    @settings(max_examples=200)
    def test_invariants(self, data, n_bins):
        confs = [d[0] for d in data]
        labels = [d[1] for d in data]
        part = uniform_bins(confs, labels, n_bins)
        assert part.n == len(confs)
        assert len(part.bins) == n_bins
        for b in part.bins:
            assert b.lo <= b.mean_conf <= b.hi
            assert 0.0 <= b.accuracy <= 1.0
        # ordered, non-overlapping, tiling [0, 1]
        for left, right in zip(part.bins, part.bins[1:]):
            assert left.hi == right.lo


class TestMonotonic:
    def test_separated_labels_make_two_bins(self):
        part = monotonic_bins([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1], min_bin_count=1)
        assert [(b.count, b.accuracy) for b in part.bins] == [(2, 0.0), (2, 1.0)]

    def test_all_labels_equal_single_bin(self):
        part = monotonic_bins([0.2, 0.5, 0.6, 0.9], [1, 1, 1, 1])
        assert len(part.bins) == 1
        assert part.bins[0].count == 4

    def test_ties_in_confidence_stay_together(self):
        part = monotonic_bins([0.5, 0.5, 0.5, 0.9], [0, 1, 0, 1])
        for b in part.bins:
            assert not (b.lo < 0.5 < b.hi and b.count < 3)
        counts = [b.count for b in part.bins]
        assert counts == [3, 1]

    def test_min_bin_count_exceeding_n(self):
        with pytest.raises(ValueError):
            monotonic_bins([0.5], [1], min_bin_count=2)

    def test_min_bin_count_merges_small_bins(self):
        part = monotonic_bins([0.1, 0.5, 0.6, 0.9], [0, 0, 1, 1], min_bin_count=2)
        assert all(b.count >= 2 for b in part.bins)
        accs = [b.accuracy for b in part.bins]
        assert accs == sorted(accs)

    @given(samples)
    @settings(max_examples=200, deadline=None)
    def test_matches_exhaustive_optimum(self, data):
        confs = [d[0] for d in data]
        labels = [d[1] for d in data]
        part = monotonic_bins(confs, labels)
        oracle_obj, oracle_bins = brute_monotone_partition(confs, labels)
        assert part.objective() == pytest.approx(oracle_obj, abs=1e-9)
        assert [(b.count, b.accuracy) for b in part.bins] == [
            (c, pytest.approx(a, abs=1e-12)) for c, a in oracle_bins
        ]

    @given(samples)
    @settings(max_examples=200, deadline=None)
    def test_invariants(self, data):
        confs = [d[0] for d in data]
        labels = [d[1] for d in data]
        part = monotonic_bins(confs, labels)
        assert part.n == len(confs)
        accs = [b.accuracy for b in part.bins]
        assert all(a <= b for a, b in zip(accs, accs[1:]))
        for b in part.bins:
            assert b.lo <= b.mean_conf <= b.hi
            assert b.count >= 1

    def test_no_worse_than_uniform_on_separable_data(self):
        rng = np.random.Generator(np.random.PCG64(6))
        raw = rng.random(200)
        labels = (raw >= 0.5).astype(int)
        confs = labels.astype(float)  # score equals label: accuracy monotone in conf
        mono = monotonic_bins(confs.tolist(), labels.tolist())
        uni = uniform_bins(confs.tolist(), labels.tolist(), 10)
        assert mono.objective() <= uni.objective() + 1e-12


def test_partition_csv(tmp_path):
    part = uniform_bins([0.95, 0.85, 0.2], [1, 0, 0], 4)
    path = tmp_path / "bins.csv"
    write_partition_csv(part, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "bin_lo,bin_hi,count,mean_conf,accuracy"
    assert len(lines) == 5
    first = lines[1].split(",")
    assert float(first[0]) == 0.0 and int(first[2]) == 1
