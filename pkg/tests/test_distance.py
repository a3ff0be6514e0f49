import numpy as np
import pytest

from htsbench.distance import (DistanceDistribution, DtwParams, distribution_shift,
                               dtw, pairwise_distribution, pooled_bin_edges,
                               z_normalize)
from htsbench.transforms import apply_transform

from conftest import build_dataset


def brute_force_dtw(a, b, q):
    """Enumerate every admissible alignment path (oracle for short series)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def walk(i, j, acc):
        acc = acc + abs(a[i] - b[j]) ** q
        if i == len(a) - 1 and j == len(b) - 1:
            return acc
        best = np.inf
        if i + 1 < len(a):
            best = min(best, walk(i + 1, j, acc))
        if j + 1 < len(b):
            best = min(best, walk(i, j + 1, acc))
        if i + 1 < len(a) and j + 1 < len(b):
            best = min(best, walk(i + 1, j + 1, acc))
        return best

    return walk(0, 0, 0.0) ** (1.0 / q)


class TestDtw:
    def test_self_distance_zero(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            x = rng.normal(size=rng.integers(1, 20))
            assert dtw(x, x, DtwParams(q=2)) == 0.0

    def test_frozen_small_cases(self):
        assert dtw([0.0, 0.0], [1.0, 1.0], DtwParams(q=1)) == 2.0
        assert dtw([1.0, 2.0, 3.0], [2.0, 3.0, 4.0], DtwParams(q=1)) == 2.0

    @pytest.mark.parametrize("q", [1.0, 2.0])
    def test_matches_brute_force(self, q):
        rng = np.random.default_rng(17)
        for _ in range(60):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(1, 7))
            x = rng.integers(-5, 6, size=n).astype(float)
            y = rng.integers(-5, 6, size=m).astype(float)
            assert dtw(x, y, DtwParams(q=q)) == brute_force_dtw(x, y, q)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.normal(size=8)
            y = rng.normal(size=11)
            assert dtw(x, y) == pytest.approx(dtw(y, x), abs=0.0)

    def test_window_zero_is_pointwise_norm(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=12)
        y = rng.normal(size=12)
        got = dtw(x, y, DtwParams(q=2, window=0))
        expected = float(np.sqrt(np.sum(np.abs(x - y) ** 2)))
        assert got == pytest.approx(expected, rel=1e-12)

    def test_wide_window_equals_unbanded(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=10)
        y = rng.normal(size=14)
        wide = dtw(x, y, DtwParams(q=2, window=14))
        free = dtw(x, y, DtwParams(q=2))
        assert wide == free

    def test_banded_result_never_below_unbanded(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=9)
        y = rng.normal(size=9)
        free = dtw(x, y, DtwParams(q=1))
        for window in range(0, 9):
            assert dtw(x, y, DtwParams(q=1, window=window)) >= free

    def test_errors(self):
        with pytest.raises(ValueError):
            dtw([], [1.0])
        with pytest.raises(ValueError):
            dtw([1.0, 2.0, 3.0, 4.0], [1.0], DtwParams(q=1, window=1))
        with pytest.raises(ValueError):
            DtwParams(q=0)
        with pytest.raises(ValueError):
            DtwParams(q=1, window=-1)


def test_z_normalize():
    x = np.array([2.0, 4.0, 6.0])
    z = z_normalize(x)
    assert z.mean() == pytest.approx(0.0, abs=1e-12)
    assert z.std() == pytest.approx(1.0, rel=1e-12)
    assert np.array_equal(z_normalize(np.full(5, 3.0)), np.zeros(5))


@pytest.fixture
def identical_triplet():
    vals = np.sin(np.arange(20) / 2.0) + 2.0
    return build_dataset(
        {"a": vals, "b": vals.copy(), "c": vals.copy()},
        {sid: {"U": "u"} for sid in ("a", "b", "c")},
        ["U"], name="triplet")


class TestPairwiseDistribution:
    def test_identical_series_all_zero(self, identical_triplet):
        dist = pairwise_distribution(identical_triplet)
        assert len(dist.pairs) == 3
        assert np.array_equal(dist.values, np.zeros(3))
        assert dist.mean == 0.0

    def test_pair_count(self):
        rng = np.random.default_rng(2)
        values = {f"s{i}": rng.normal(size=15) for i in range(4)}
        ds = build_dataset(values, {sid: {"U": "u"} for sid in values}, ["U"])
        dist = pairwise_distribution(ds)
        assert len(dist.pairs) == 6

    def test_zero_sigma_copy_has_identical_distribution(self, seasonal_dataset):
        original = pairwise_distribution(seasonal_dataset)
        rng = np.random.default_rng(0)
        copied = build_dataset(
            {sid: apply_transform(seasonal_dataset.bottom[sid], "magnitude_warp",
                                  0.0, 4, rng).values
             for sid in seasonal_dataset.series_ids},
            seasonal_dataset.schema.membership,
            seasonal_dataset.schema.dimensions,
            seasonal_period=seasonal_dataset.seasonal_period)
        again = pairwise_distribution(copied)
        assert np.array_equal(original.values, again.values)

    def test_aggregate_level_selection(self, seasonal_dataset):
        dist = pairwise_distribution(seasonal_dataset,
                                     level=[("g1", "a"), ("g1", "b")])
        assert dist.pairs == (("g1/a", "g1/b"),)

    def test_needs_two_series(self, seasonal_dataset):
        with pytest.raises(ValueError):
            pairwise_distribution(seasonal_dataset, level=[("g1", "a")])


class TestDistributionShift:
    def test_identical(self):
        d = DistanceDistribution(pairs=(("a", "b"), ("a", "c")),
                                 values=np.array([1.0, 2.0]))
        shift = distribution_shift(d, d)
        assert shift.mean_delta == 0.0
        assert shift.sd_delta == 0.0

    def test_constant_offset(self):
        base = DistanceDistribution(pairs=(("a", "b"), ("a", "c"), ("b", "c")),
                                    values=np.array([1.0, 2.0, 3.0]))
        moved = DistanceDistribution(pairs=base.pairs, values=base.values + 1.0)
        shift = distribution_shift(base, moved)
        assert shift.mean_delta == pytest.approx(1.0, abs=1e-12)
        assert shift.sd_delta == pytest.approx(0.0, abs=1e-12)


def test_histogram_counts_sum_to_pairs():
    rng = np.random.default_rng(9)
    d = DistanceDistribution(
        pairs=tuple((f"a{i}", f"b{i}") for i in range(50)),
        values=rng.uniform(0.0, 5.0, 50))
    edges = pooled_bin_edges([d], bins=40)
    assert len(edges) == 41
    assert d.histogram(edges).sum() == 50
