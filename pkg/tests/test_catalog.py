import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from recsynth.catalog import (
    ItemCatalog,
    add_sparse_noise,
    apply_noise,
    cell_count,
    user_item_affinity,
    vectorize_catalog,
)
from recsynth.errors import ConfigError, DataError
from recsynth.primitives import RngStream

# published item/category incidence, columns in preference order
ICAT = np.array([
    [0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0, 0, 0],
    [0, 1, 1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 1, 0, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 1, 0, 1],
    [0, 0, 0, 0, 0, 1, 0, 1, 0, 0],
    [0, 0, 0, 1, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 1, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 1, 0, 1, 0],
    [0, 0, 1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0, 0, 0],
    [1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
])

# sample preference rows for users 0-4
PREFS = np.array([
    [0.408, 0.026, 0.020, 0.041, 0.002, 0.002, 0.004, 0.009, 0.487, 0.002],
    [0.002, 0.077, 0.017, 0.015, 0.009, 0.457, 0.041, 0.271, 0.107, 0.002],
    [0.554, 0.156, 0.039, 0.041, 0.027, 0.010, 0.021, 0.015, 0.135, 0.003],
    [0.005, 0.038, 0.012, 0.000, 0.003, 0.252, 0.003, 0.674, 0.009, 0.002],
    [0.002, 0.229, 0.003, 0.001, 0.000, 0.137, 0.001, 0.623, 0.000, 0.002],
])

# the matching user-item sample, visible item columns only
AFFINITY_COLUMNS = (0, 1, 2, 3, 4, 5, 17, 18, 19, 20, 21, 22)
AFFINITY = np.array([
    [0.002, 0.041, 0.046, 0.002, 0.513, 0.006, 0.009, 0.004, 0.041, 0.004, 0.408, 0.408],
    [0.457, 0.015, 0.094, 0.009, 0.184, 0.043, 0.271, 0.041, 0.015, 0.041, 0.002, 0.002],
    [0.010, 0.041, 0.195, 0.027, 0.291, 0.024, 0.015, 0.021, 0.041, 0.021, 0.554, 0.554],
    [0.252, 0.000, 0.050, 0.003, 0.048, 0.006, 0.674, 0.003, 0.000, 0.003, 0.005, 0.005],
    [0.137, 0.001, 0.233, 0.000, 0.230, 0.003, 0.623, 0.001, 0.001, 0.001, 0.002, 0.002],
])


class TestVectorize:
    def test_default_matches_published(self, default_spec):
        np.testing.assert_array_equal(vectorize_catalog(default_spec.catalog, default_spec.preference_categories), ICAT)

    def test_shopping_mall_row(self, default_spec):
        icat = vectorize_catalog(default_spec.catalog, default_spec.preference_categories)
        cats = default_spec.preference_categories
        assert {cats[j] for j in np.flatnonzero(icat[2])} == {"Shop", "Relax"}
        assert {cats[j] for j in np.flatnonzero(icat[21])} == {"Beach"}

    def test_all_categories(self):
        cats = ("a", "b", "c")
        icat = vectorize_catalog(ItemCatalog.from_records([(0, "all", cats)]), cats)
        np.testing.assert_array_equal(icat, [[1, 1, 1]])

    def test_unknown_category(self):
        with pytest.raises(ConfigError, match="'z'"):
            vectorize_catalog(ItemCatalog.from_records([(0, "x", ("z",))]), ("a", "b"))

    def test_ids_contiguous(self):
        with pytest.raises(ConfigError, match="contiguous"):
            ItemCatalog.from_records([(0, "a", ("a",)), (2, "b", ("a",))])

    def test_nonempty_categories(self):
        with pytest.raises(ConfigError):
            ItemCatalog.from_records([(0, "a", ())])


class TestAffinity:
    def test_reproduces_published_sample(self):
        got = user_item_affinity(PREFS, ICAT)[:, AFFINITY_COLUMNS]
        # the printed inputs carry 3 decimals, so sums can sit exactly on the 0.001 band
        assert np.max(np.abs(got - AFFINITY)) <= 0.001 + 1e-12

    @pytest.mark.parametrize("item,expected", [(21, 0.408), (2, 0.046), (4, 0.513)])
    def test_user0(self, item, expected):
        assert user_item_affinity(PREFS[:1], ICAT)[0, item] == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            user_item_affinity(np.ones((1, 3)) / 3, ICAT)

    def test_bounds_and_duplicate_columns(self, small_bundle):
        A = small_bundle.affinity
        assert A.min() >= 0.0 and A.max() <= 1.0
        np.testing.assert_array_equal(A[:, 21], A[:, 22])
        np.testing.assert_array_equal(A[:, 12], A[:, 13])

    @given(st.integers(0, 2**32 - 1))
    def test_bounds_property(self, seed):
        rng = np.random.default_rng(seed)
        P = rng.dirichlet(np.full(10, 0.3), size=20)
        A = user_item_affinity(P, np.ones((4, 10)))
        assert A.min() >= 0 and A.max() <= 1


class TestNoise:
    def test_zero_density(self):
        M = np.random.default_rng(0).uniform(size=(50, 23))
        noisy, cells = add_sparse_noise(M, 0.0, RngStream(1))
        np.testing.assert_array_equal(noisy, M)
        assert cells.size == 0

    def test_default_cell_count(self):
        M = np.zeros((100_000, 23))
        noisy, cells = add_sparse_noise(M, 0.01, RngStream(2))
        assert cells.size == 23_000 == len(np.unique(cells))
        assert np.count_nonzero(noisy) == 23_000

    def test_only_selected_cells_change(self):
        M = np.random.default_rng(1).uniform(0, 0.5, size=(400, 23))
        noisy, cells = add_sparse_noise(M, 0.05, RngStream(3))
        changed = np.flatnonzero((noisy != M).reshape(-1))
        assert set(changed.tolist()) <= set(cells.tolist())
        assert cells.size == cell_count(0.05, 400, 23)

    def test_clamp(self):
        out = apply_noise(np.array([[0.95]]), [0], [0.9])
        assert out[0, 0] == 1.0

    def test_signed_stays_in_range(self):
        M = np.random.default_rng(2).uniform(size=(300, 23))
        noisy, _ = add_sparse_noise(M, 0.2, RngStream(4), signed=True)
        assert noisy.min() >= 0 and noisy.max() <= 1
        assert (noisy < M).any()

    def test_input_untouched(self):
        M = np.zeros((10, 10))
        add_sparse_noise(M, 0.5, RngStream(5))
        assert not M.any()

    def test_bad_density(self):
        with pytest.raises(ConfigError):
            add_sparse_noise(np.zeros((2, 2)), 1.5, RngStream(0))

    @pytest.mark.parametrize("density,n,m,expected", [(0.15, 100_000, 23, 345_000), (0.01, 100_000, 23, 23_000),
                                                      (0.5, 1, 3, 2), (0.15, 1, 23, 3)])
    def test_cell_count(self, density, n, m, expected):
        assert cell_count(density, n, m) == expected
