from fractions import Fraction

import numpy as np
import pytest

from src.certeval.errors import DimensionError, InputError
from src.certeval.labels import (
    CertaintyScheme,
    ClassMap,
    ExpertMap,
    Tile,
    Tiling,
    certainty_weight,
    tile_composition,
)


class TestCertaintyScheme:
    """Grade weights and their invariants."""

    @pytest.mark.parametrize(
        "grade, expected",
        [("sure", Fraction(2, 3)), ("moderately-sure", Fraction(1, 2)), ("not-sure", Fraction(1, 3))],
    )
    def test_default_weights(self, grade, expected):
        assert certainty_weight(grade, CertaintyScheme.default()) == expected

    def test_tokens_and_names_agree(self):
        scheme = CertaintyScheme.default()
        for token, name in (("s", "sure"), ("m", "moderately-sure"), ("n", "not-sure")):
            assert certainty_weight(token, scheme) == certainty_weight(name, scheme)

    def test_unknown_grade(self):
        with pytest.raises(InputError):
            certainty_weight("maybe", CertaintyScheme.default())

    def test_parse(self):
        assert CertaintyScheme.parse("2/3, 1/2, 1/3") == CertaintyScheme.default()

    def test_weights_must_decrease(self):
        with pytest.raises(InputError):
            CertaintyScheme.parse("1/2,2/3,1/3")

    def test_weights_in_unit_interval(self):
        with pytest.raises(InputError):
            CertaintyScheme.parse("3/2,1/2,1/3")
        with pytest.raises(InputError):
            CertaintyScheme.parse("1/2,1/3,0")

    def test_uniform_is_allowed(self):
        scheme = CertaintyScheme.uniform()
        assert scheme.weights == (1, 1, 1)

    def test_integer_weights(self):
        numerators, denominator = CertaintyScheme.default().integer_weights()
        assert denominator == 6
        assert list(numerators) == [4, 3, 2]


class TestExpertMap:
    """Expert map construction."""

    def test_from_arrays_broadcasts_grades(self):
        expert = ExpertMap.from_arrays([[1, 2], [2, 1]], grades="m")
        assert expert.shape == (2, 2)
        assert (expert.grades == 1).all()
        assert not expert.boundary.any()

    def test_arrays_are_read_only(self):
        expert = ExpertMap.from_arrays([[1, 2]])
        with pytest.raises(ValueError):
            expert.labels[0, 0] = 2

    def test_class_out_of_range(self):
        with pytest.raises(InputError):
            ExpertMap.from_arrays([[1, 4]], num_classes=3)

    def test_grade_grid_shape_mismatch(self):
        with pytest.raises(DimensionError):
            ExpertMap(np.ones((2, 2)), np.zeros((2, 3)), np.zeros((2, 2)), np.zeros((2, 2)), 1)

    def test_pixel_weights(self):
        expert = ExpertMap.from_arrays([[1, 1]], grades=np.array([[0, 2]]))
        np.testing.assert_allclose(expert.pixel_weights(CertaintyScheme.default()), [[2 / 3, 1 / 3]])


class TestClassMap:
    """Predicted class maps."""

    def test_masked_pixels_are_zeroed(self):
        pred = ClassMap(np.array([[1, 2]]), 2, np.array([[False, True]]))
        assert pred.labels.tolist() == [[1, 0]]

    def test_shape_check(self):
        pred = ClassMap(np.ones((2, 2), dtype=int), 1)
        with pytest.raises(DimensionError):
            pred.check_against(ExpertMap.from_arrays(np.ones((2, 3), dtype=int)))


class TestTiling:
    """Tile layout."""

    def test_non_overlapping(self):
        tiles = list(Tiling(4).tiles(8, 8))
        assert [(t.row, t.col) for t in tiles] == [(0, 0), (0, 4), (4, 0), (4, 4)]

    def test_overlapping_step(self):
        tiles = list(Tiling(32, step=4).tiles(40, 40))
        assert len(tiles) == 3 * 3

    def test_anchor(self):
        tiles = list(Tiling(4, anchor=(1, 2)).tiles(8, 8))
        assert [(t.row, t.col) for t in tiles] == [(1, 2)]

    def test_center(self):
        assert Tile(0, 0, 4).center == (1, 1)
        assert Tile(8, 4, 5).center == (10, 6)

    def test_invalid(self):
        with pytest.raises(InputError):
            Tiling(0)
        with pytest.raises(InputError):
            Tiling(4, step=0)


class TestTileComposition:
    """Per-tile certainty-weighted class masses."""

    def test_fractional_tile(self):
        labels = np.ones((16, 16), dtype=int)
        labels.flat[156:] = 3
        expert = ExpertMap.from_arrays(labels, num_classes=3)
        composition = tile_composition(expert, Tile(0, 0, 16), CertaintyScheme.uniform())
        assert composition == [(1, Fraction(156, 256)), (3, Fraction(100, 256))]

    def test_moderately_sure_homogeneous_tile(self):
        expert = ExpertMap.from_arrays(np.ones((16, 16), dtype=int), grades="m")
        composition = tile_composition(expert, Tile(0, 0, 16), CertaintyScheme.default())
        assert composition == [(1, Fraction(1, 2))]

    def test_sure_homogeneous_tile(self):
        expert = ExpertMap.from_arrays(np.full((16, 16), 2), grades="s")
        composition = tile_composition(expert, Tile(0, 0, 16), CertaintyScheme.default())
        assert composition == [(2, Fraction(2, 3))]

    def test_masses_sum_to_weight_total(self):
        rng = np.random.default_rng(7)
        labels = rng.integers(0, 4, size=(8, 8))
        grades = rng.integers(0, 3, size=(8, 8))
        expert = ExpertMap.from_arrays(labels, grades=grades, num_classes=3)
        scheme = CertaintyScheme.default()
        composition = tile_composition(expert, Tile(0, 0, 8), scheme)
        expected = sum((scheme.weights[g] for g in grades.ravel()), Fraction(0)) / 64
        assert sum(mass for _, mass in composition) == expected
        assert all(mass >= 0 for _, mass in composition)
