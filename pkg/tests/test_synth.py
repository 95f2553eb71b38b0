import numpy as np
import pytest
from scipy import ndimage

from src.certeval.boundary import extract_predicted_boundary, extract_reference_boundary, boundary_image
from src.certeval.errors import InputError
from src.certeval.labels import CertaintyScheme
from src.certeval.matching import match
from src.certeval.synth import SynthSpec, gen_synthetic, write_synthetic


class TestGenSynthetic:
    """Synthetic expert / prediction pairs."""

    @pytest.mark.parametrize("kind", ["straight-edge", "two-region", "checkerboard"])
    def test_no_corruption(self, kind):
        expert, pred = gen_synthetic(SynthSpec(kind, size=32))
        found = extract_predicted_boundary(pred)
        ref = extract_reference_boundary(expert, CertaintyScheme.default())
        assert np.array_equal(found.coords, ref.coords)
        assert np.array_equal(pred.labels, expert.labels)

    def test_shift_distances(self):
        expert, pred = gen_synthetic(SynthSpec("straight-edge", size=32, shift=3))
        table = match(extract_predicted_boundary(pred), extract_reference_boundary(expert, CertaintyScheme.default()))
        assert sorted(set(table.distance.tolist())) == [2.0, 3.0]
        assert table.distance.max() == 3.0

    def test_spurious_pixels_are_isolated(self):
        expert, pred = gen_synthetic(SynthSpec("straight-edge", size=32, corruption="spurious", spurious=4, seed=42))
        found = boundary_image(extract_predicted_boundary(pred)) > 0
        ref = boundary_image(extract_reference_boundary(expert, CertaintyScheme.default())) > 0
        _, components = ndimage.label(found & ~ref)
        assert components == 4
        assert (np.argwhere(pred.labels != expert.labels).shape[0]) == 4

    def test_orthogonal_cross(self):
        expert, pred = gen_synthetic(SynthSpec("straight-edge", size=16, corruption="orthogonal-cross"))
        assert np.array_equal(pred.labels, expert.labels.T)

    def test_grades(self):
        expert, _ = gen_synthetic(SynthSpec("two-region", size=16, grade="m", boundary_grade="n"))
        ref = extract_reference_boundary(expert, CertaintyScheme.default())
        assert (expert.grades == 1).all()
        assert ref.weights == pytest.approx([1 / 3] * len(ref))

    def test_seed_reproducible(self):
        spec = SynthSpec("checkerboard", size=32, corruption="spurious", spurious=3, cell=16, seed=7)
        assert gen_synthetic(spec)[1] == gen_synthetic(spec)[1]

    def test_seed_changes_placement(self):
        a = gen_synthetic(SynthSpec("straight-edge", size=64, corruption="spurious", spurious=3, seed=1))[1]
        b = gen_synthetic(SynthSpec("straight-edge", size=64, corruption="spurious", spurious=3, seed=2))[1]
        assert a != b

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "spiral"},
            {"corruption": "blur"},
            {"size": 2},
            {"shift": 16},
            {"spurious": -1},
            {"grade": "x"},
            {"kind": "checkerboard", "cell": 0},
        ],
    )
    def test_invalid_specs(self, kwargs):
        with pytest.raises(InputError):
            SynthSpec(**kwargs)

    def test_too_many_spurious(self):
        with pytest.raises(InputError):
            gen_synthetic(SynthSpec("checkerboard", size=8, corruption="spurious", spurious=50))


class TestWriteSynthetic:
    """File output."""

    def test_byte_identical_for_equal_seeds(self, tmp_path):
        spec = SynthSpec("straight-edge", size=16, corruption="spurious", spurious=2, seed=5)
        first = write_synthetic(spec, tmp_path / "a")
        second = write_synthetic(spec, tmp_path / "b")
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes()

    def test_file_names(self, tmp_path):
        expert_path, pred_path = write_synthetic(SynthSpec("two-region", size=8), tmp_path)
        assert expert_path.name == "two-region.uem"
        assert pred_path.name == "two-region.ucm"
        assert pred_path.read_text().startswith("UCM1 8 8 2\n")
