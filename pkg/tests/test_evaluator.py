import json
import shutil
from fractions import Fraction

import numpy as np
import pytest

import main
from src.certeval.direction import GvfConfig
from src.certeval.errors import DimensionError, FormatError, InputError, NumericalError
from src.certeval.evaluator import EvalRun, render_text, run_eval, summarize_reports
from src.certeval.labels import ClassMap, ExpertMap, Tiling
from src.certeval.matching import SegScores, aggregate
from src.certeval.synth import SynthSpec, write_synthetic
from utils.map_parser import MapParser

FAST_GVF = GvfConfig(max_iterations=50)


@pytest.fixture
def perfect_pair(tmp_path):
    return write_synthetic(SynthSpec("straight-edge", size=32), tmp_path / "perfect")


@pytest.fixture
def corpus(tmp_path):
    """Two images, the second with two experts."""
    edge = write_synthetic(SynthSpec("straight-edge", size=32, shift=2, grade="m"), tmp_path / "edge")
    region = write_synthetic(SynthSpec("two-region", size=32, shift=1, boundary_grade="n"), tmp_path / "region")
    second_expert = tmp_path / "region" / "second.uem"
    labels = MapParser.read_expert_map(region[0]).labels.copy()
    labels[:4, :4] = 2
    MapParser.write(second_expert, ExpertMap.from_arrays(labels, grades="n", num_classes=2))
    return [
        (str(edge[1]), (str(edge[0]),)),
        (str(region[1]), (str(region[0]), str(second_expert))),
    ]


class TestRunEval:
    """Corpus evaluation."""

    def test_perfect_run(self, perfect_pair):
        expert_path, pred_path = perfect_pair
        report = run_eval(EvalRun(images=((pred_path, (expert_path,)),), tiling=Tiling(16), gvf=FAST_GVF))
        conf = report.confusion
        assert conf["gcr"] == [1.0, 1.0]
        assert conf["ecr"] == [0.0, 0.0]
        assert conf["flags"]["not_evaluated_rows"] == [0]
        for variant in ("plain", "nef", "gvf"):
            assert report.segmentation["aggregate"][variant]["fd_pct"] == 0.0

    def test_deterministic(self, corpus):
        run = EvalRun(images=tuple(corpus), tiling=Tiling(8, step=4), gvf=FAST_GVF)
        assert run_eval(run).to_json() == run_eval(run).to_json()

    def test_order_independent(self, corpus):
        forward = EvalRun(images=tuple(corpus), tiling=Tiling(8), gvf=FAST_GVF, workers=2)
        backward = EvalRun(
            images=tuple((pred, tuple(reversed(experts))) for pred, experts in reversed(corpus)),
            tiling=Tiling(8),
            gvf=FAST_GVF,
        )
        assert run_eval(forward).to_json() == run_eval(backward).to_json()

    def test_identical_experts(self, perfect_pair, tmp_path):
        expert_path, pred_path = perfect_pair
        copy = tmp_path / "copy.uem"
        shutil.copy(expert_path, copy)
        single = run_eval(EvalRun(images=((pred_path, (expert_path,)),), tiling=Tiling(8), variants=("nef",)))
        double = run_eval(EvalRun(images=((pred_path, (expert_path, str(copy))),), tiling=Tiling(8), variants=("nef",)))
        for row_single, row_double in zip(single.confusion["cm"], double.confusion["cm"]):
            for a, b in zip(row_single, row_double):
                assert 2 * Fraction(a["exact"]) == Fraction(b["exact"])
        assert single.confusion["Ncm"] == double.confusion["Ncm"]

    def test_aggregate_recomputes_from_per_image(self, corpus):
        report = run_eval(EvalRun(images=tuple(corpus), tiling=Tiling(8), variants=("plain", "nef")))
        for variant in ("plain", "nef"):
            per_image = [
                SegScores(s["wdc_raw"], 0.0, variant, pair["pixels"])
                for pair in report.segmentation["per_image"]
                for s in pair["scores"]
                if s["variant"] == variant
            ]
            assert report.segmentation["aggregate"][variant]["wdc_raw"] == aggregate(per_image).wdc

    def test_meta(self, corpus):
        report = run_eval(EvalRun(images=tuple(corpus), tiling=Tiling(8, step=4), variants=("nef",)))
        meta = report.meta
        assert meta["tiling"] == {"size": 8, "step": 4, "anchor": [0, 0]}
        assert meta["scheme"] == "2/3,1/2,1/3"
        assert meta["a"] == "1/6"
        assert meta["pairs"] == 3

    def test_dimension_mismatch(self, tmp_path):
        small = write_synthetic(SynthSpec("straight-edge", size=16), tmp_path / "small")
        large = write_synthetic(SynthSpec("straight-edge", size=32), tmp_path / "large")
        with pytest.raises(DimensionError):
            run_eval(EvalRun(images=((str(small[1]), (str(large[0]),)),), tiling=Tiling(8)))

    def test_bad_file_named(self, tmp_path, perfect_pair):
        bad = tmp_path / "bad.uem"
        bad.write_text("UEM1 2 1 1\n1:s\n")
        with pytest.raises(FormatError) as err:
            run_eval(EvalRun(images=((str(perfect_pair[1]), (str(bad),)),)))
        assert "bad.uem" in str(err.value)

    def test_single_class_corpus(self, tmp_path):
        expert = tmp_path / "e.uem"
        pred = tmp_path / "p.ucm"
        MapParser.write(expert, ExpertMap.from_arrays(np.ones((8, 8), dtype=int)))
        MapParser.write(pred, ClassMap(np.ones((8, 8), dtype=int), 1))
        report = run_eval(EvalRun(images=((str(pred), (str(expert),)),), tiling=Tiling(4), variants=("plain",)))
        assert report.confusion["ecr"] is None
        assert report.segmentation["aggregate"]["plain"]["wdc_raw"] == 1.0

    def test_single_row_image_skips_direction_variants(self, perfect_pair, tmp_path, caplog):
        strip_expert = tmp_path / "strip.uem"
        strip_pred = tmp_path / "strip.ucm"
        strip_expert.write_text("UEM1 2 1 3\n1:s 3:m\n")
        MapParser.write(strip_pred, ClassMap(np.array([[1, 3]]), 3))
        expert_path, pred_path = perfect_pair
        images = ((str(strip_pred), (str(strip_expert),)), (str(pred_path), (str(expert_path),)))

        with caplog.at_level("WARNING"):
            report = run_eval(EvalRun(images=images, tiling=Tiling(1), variants=("plain", "nef", "gvf"), gvf=FAST_GVF))

        per_image = {pair["pred"]: [s["variant"] for s in pair["scores"]] for pair in report.segmentation["per_image"]}
        assert per_image[str(strip_pred)] == ["plain", "nef"]
        assert per_image[str(pred_path)] == ["plain", "nef", "gvf"]
        assert report.segmentation["aggregate"]["gvf"]["pixels"] == 32 * 32
        assert report.segmentation["aggregate"]["nef"]["pixels"] == 32 * 32 + 2
        assert "too small for direction fields" in caplog.text

    def test_only_single_row_images(self, tmp_path):
        expert = tmp_path / "strip.uem"
        pred = tmp_path / "strip.ucm"
        expert.write_text("UEM1 2 1 3\n1:s 3:m\n")
        MapParser.write(pred, ClassMap(np.array([[1, 3]]), 3))
        report = run_eval(EvalRun(images=((str(pred), (str(expert),)),), tiling=Tiling(1), variants=("nef", "grad")))
        assert sorted(report.segmentation["aggregate"]) == ["nef"]

    def test_dump_dir(self, perfect_pair, tmp_path):
        expert_path, pred_path = perfect_pair
        dump = tmp_path / "dump"
        run_eval(EvalRun(images=((pred_path, (expert_path,)),), variants=("gvf",), gvf=FAST_GVF, dump_dir=str(dump)))
        names = sorted(p.name for p in dump.iterdir())
        assert "straight-edge.found.ubm" in names
        assert "straight-edge.ref.ubm" in names
        assert "straight-edge.found.gvf.uvf" in names

    @pytest.mark.parametrize(
        "kwargs",
        [{"images": ()}, {"variants": ("sobel",)}, {"workers": 0}, {"a": 0}],
    )
    def test_invalid_run(self, perfect_pair, kwargs):
        params = {"images": ((str(perfect_pair[1]), (str(perfect_pair[0]),)),)}
        params.update(kwargs)
        with pytest.raises(InputError):
            EvalRun(**params)


class TestReportRendering:
    """Text report and summaries."""

    def test_text_report(self, corpus):
        text = render_text(run_eval(EvalRun(images=tuple(corpus), tiling=Tiling(8), variants=("nef",))))
        assert text.startswith("Normalized confusion matrix (%)")
        assert "GCR (%)" in text
        assert "ECR (%)" in text
        assert "nef" in text

    def test_summarize(self, corpus):
        reports = [
            json.loads(run_eval(EvalRun(images=tuple(corpus), tiling=Tiling(8), variants=("nef",))).to_json()),
            json.loads(run_eval(EvalRun(images=tuple(corpus), tiling=Tiling(4), variants=("nef",))).to_json()),
        ]
        summary = summarize_reports(reports)
        assert summary["reports"] == 2
        values = [r["segmentation"]["aggregate"]["nef"]["fd_pct"] for r in reports]
        assert summary["segmentation"]["nef"]["fd_pct"]["mean"] == pytest.approx(round(sum(values) / 2, 2))
        assert summary["segmentation"]["nef"]["fd_pct"]["std"] == 0.0

    def test_summarize_nothing(self):
        with pytest.raises(InputError):
            summarize_reports([])


class TestCommandLine:
    """End-to-end runs through main.main."""

    def test_synth_then_evaluate(self, tmp_path):
        assert main.main(["synth", "--kind", "straight-edge", "--size", "32", "--shift", "3", "--seed", "42",
                          "--out-dir", str(tmp_path)]) == 0
        out = tmp_path / "report.json"
        code = main.main([
            "evaluate",
            "--pred", str(tmp_path / "straight-edge.ucm"),
            "--expert", str(tmp_path / "straight-edge.uem"),
            "--scheme", "2/3,1/2,1/3",
            "--tile", "16", "--step", "8",
            "--variants", "plain,nef,gvf",
            "--a", "1/6", "--mu", "0.2", "--max-iter", "50",
            "--out", str(out),
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert set(report) == {"meta", "confusion", "segmentation"}
        assert report["meta"]["tiling"]["step"] == 8
        assert report["segmentation"]["aggregate"]["nef"]["fd_pct"] > 0

    def test_expert_groups(self, corpus, tmp_path):
        out = tmp_path / "report.txt"
        code = main.main([
            "evaluate",
            "--pred", corpus[0][0], corpus[1][0],
            "--expert", ",".join(corpus[0][1]), ",".join(corpus[1][1]),
            "--tile", "8", "--variants", "nef", "--format", "text", "--out", str(out),
        ])
        assert code == 0
        assert out.read_text().startswith("Normalized confusion matrix")

    def test_convert(self, tmp_path):
        from utils.pgm import PgmReader

        PgmReader.write(tmp_path / "g.pgm", np.ones((4, 4), dtype=np.uint8))
        (tmp_path / "map.csv").write_text("1,1,s\n")
        code = main.main(["convert", "--in", str(tmp_path / "g.pgm"), "--map", str(tmp_path / "map.csv"),
                          "--out", str(tmp_path / "g.uem")])
        assert code == 0
        assert MapParser.read_expert_map(tmp_path / "g.uem").shape == (4, 4)

    def test_summarize(self, corpus, tmp_path):
        paths = []
        for tile in (4, 8):
            path = tmp_path / f"r{tile}.json"
            assert main.main(["evaluate", "--pred", corpus[0][0], "--expert", corpus[0][1][0],
                              "--tile", str(tile), "--variants", "plain", "--out", str(path)]) == 0
            paths.append(str(path))
        out = tmp_path / "summary.json"
        assert main.main(["summarize", *paths, "--out", str(out)]) == 0
        assert json.loads(out.read_text())["reports"] == 2

    def test_input_error_exit_code(self, tmp_path):
        code = main.main(["evaluate", "--pred", str(tmp_path / "missing.ucm"), "--expert", str(tmp_path / "x.uem")])
        assert code == 2

    def test_mismatched_expert_groups(self, corpus):
        code = main.main(["evaluate", "--pred", corpus[0][0], corpus[1][0], "--expert", corpus[0][1][0]])
        assert code == 2

    def test_single_row_map_evaluates(self, tmp_path):
        (tmp_path / "row.uem").write_text("UEM1 2 1 3\n1:s 3:m\n")
        (tmp_path / "row.ucm").write_text("UCM1 2 1 3\n1 3\n")
        out = tmp_path / "row.json"
        code = main.main(["evaluate", "--pred", str(tmp_path / "row.ucm"), "--expert", str(tmp_path / "row.uem"),
                          "--tile", "1", "--variants", "plain,nef,gvf", "--out", str(out)])
        assert code == 0
        assert "gvf" not in json.loads(out.read_text())["segmentation"]["aggregate"]

    def test_numerical_error_exit_code(self, perfect_pair, monkeypatch):
        def diverge(run):
            raise NumericalError("GVF solver diverged", 17)

        monkeypatch.setattr(main, "run_eval", diverge)
        code = main.main(["evaluate", "--pred", str(perfect_pair[1]), "--expert", str(perfect_pair[0])])
        assert code == 3
