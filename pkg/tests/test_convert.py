import numpy as np
import pytest

from src.certeval.convert import convert, read_mapping, to_class_map, to_expert_map
from src.certeval.errors import FormatError, InputError
from src.certeval.labels import ClassMap, ExpertMap
from utils.map_parser import MapParser
from utils.pgm import PgmReader


@pytest.fixture
def expert_table(tmp_path):
    path = tmp_path / "expert.csv"
    path.write_text("value,class,grade,boundary_grade\n# sand\n10,1,s\n20,2,m\n30,2,n,s\n")
    return path


@pytest.fixture
def class_table(tmp_path):
    path = tmp_path / "class.csv"
    path.write_text("10,1\n20,2\n255,-\n")
    return path


class TestReadMapping:
    """Mapping tables."""

    def test_rows(self, expert_table):
        mapping = read_mapping(expert_table)
        assert sorted(mapping) == [10, 20, 30]
        assert mapping[20].grade == 1
        assert mapping[30].boundary_grade == 0

    def test_duplicate_value(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("1,1\n1,2\n")
        with pytest.raises(FormatError) as err:
            read_mapping(path)
        assert err.value.line == 2

    def test_bad_grade(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,1,q\n")
        with pytest.raises(FormatError):
            read_mapping(path)


class TestConvert:
    """PGM to UEM1 / UCM1."""

    def test_constant_image(self, tmp_path):
        path = tmp_path / "one.pgm"
        PgmReader.write(path, np.ones((4, 3), dtype=np.uint8), binary=False)
        table = tmp_path / "map.csv"
        table.write_text("1,1,s\n")
        expert = convert(path, table, tmp_path / "out.uem")
        assert expert == ExpertMap.from_arrays(np.ones((4, 3), dtype=int), num_classes=1)
        assert MapParser.read_expert_map(tmp_path / "out.uem") == expert

    def test_expert_round_trip(self, tmp_path, expert_table):
        image = np.array([[10, 20], [30, 10]], dtype=np.uint8)
        PgmReader.write(tmp_path / "e.pgm", image)
        written = convert(tmp_path / "e.pgm", expert_table, tmp_path / "e.uem")
        direct = to_expert_map(image, read_mapping(expert_table))
        assert written == direct
        assert MapParser.read_expert_map(tmp_path / "e.uem") == direct
        assert direct.boundary.tolist() == [[False, False], [True, False]]

    def test_class_map_with_mask(self, tmp_path, class_table):
        image = np.array([[10, 255], [20, 20]], dtype=np.uint8)
        PgmReader.write(tmp_path / "c.pgm", image)
        pred = convert(tmp_path / "c.pgm", class_table, tmp_path / "c.ucm")
        assert isinstance(pred, ClassMap)
        assert pred.mask.tolist() == [[False, True], [False, False]]
        assert MapParser.read_class_map(tmp_path / "c.ucm") == pred

    def test_unmapped_value(self, tmp_path, class_table):
        image = np.array([[10, 10], [10, 7]], dtype=np.uint8)
        with pytest.raises(InputError) as err:
            to_class_map(image, read_mapping(class_table))
        assert "7" in str(err.value)
        assert "row 1, col 1" in str(err.value)

    def test_expert_map_cannot_be_masked(self, class_table):
        with pytest.raises(InputError):
            to_expert_map(np.array([[10]], dtype=np.uint8), read_mapping(class_table))

    def test_output_suffix(self, tmp_path, class_table):
        PgmReader.write(tmp_path / "c.pgm", np.full((2, 2), 10, dtype=np.uint8))
        with pytest.raises(InputError):
            convert(tmp_path / "c.pgm", class_table, tmp_path / "c.txt")
