from pathlib import Path

import numpy as np
import pytest

from render_figures import CsvFormatError, FigureSpec, render
from render_figures.cli import main

DATA = Path(__file__).parent / "data"
FIG1 = DATA / "fig1_field.csv"
FIG2A = DATA / "fig2_case1.csv"
FIG2B = DATA / "fig2_case2.csv"
FIG3 = DATA / "fig3_attack_trace.csv"

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class TestFig1:
    def test_renders_heatmap(self, tmp_path):
        out = tmp_path / "fig1.png"
        res = render(FigureSpec(1, (str(FIG1),), str(out)))
        assert out.read_bytes()[:8] == PNG_MAGIC
        assert res["u"].shape == (res["t"].size, res["x"].size)

    def test_incomplete_grid_rejected(self, tmp_path):
        broken = tmp_path / "broken.csv"
        lines = FIG1.read_text().splitlines()
        broken.write_text("\n".join(lines[:-1]) + "\n")  # drop one node row
        with pytest.raises(CsvFormatError, match="broken.csv"):
            render(FigureSpec(1, (str(broken),), str(tmp_path / "x.png")))


class TestFig2:
    def test_two_series(self, tmp_path):
        out = tmp_path / "fig2.png"
        res = render(FigureSpec(2, (str(FIG2A), str(FIG2B)), str(out)))
        assert out.read_bytes()[:8] == PNG_MAGIC
        assert len(res["series"]) == 2

    def test_identical_series_overlap(self, tmp_path):
        out = tmp_path / "fig2.png"
        res = render(FigureSpec(2, (str(FIG2A), str(FIG2A)), str(out)))
        t1, y1 = res["series"][0]
        t2, y2 = res["series"][1]
        np.testing.assert_array_equal(t1, t2)
        np.testing.assert_array_equal(y1, y2)


class TestFig3:
    def test_marker_at_recorded_detection_sample(self, tmp_path):
        out = tmp_path / "fig3.png"
        res = render(FigureSpec(3, (str(FIG3),), str(out), threshold=1e-4))
        assert out.read_bytes()[:8] == PNG_MAGIC
        assert len(res["markers"]) == 1
        _, t_marker, _ = res["markers"][0]
        # the golden trace flags detection from its 13th row (t = 6.0)
        assert t_marker == 6.0
        assert res["threshold"] == 1e-4

    def test_no_marker_without_flags(self, tmp_path):
        clean = tmp_path / "clean.csv"
        lines = FIG3.read_text().splitlines()
        body = [line.rsplit(",", 1)[0] + ",0" for line in lines[1:]]
        clean.write_text(lines[0] + "\n" + "\n".join(body) + "\n")
        res = render(FigureSpec(3, (str(clean),), str(tmp_path / "f.png")))
        assert res["markers"] == []


class TestSchemaValidation:
    def test_missing_file(self, tmp_path):
        with pytest.raises(CsvFormatError, match="not found"):
            render(FigureSpec(2, (str(tmp_path / "nope.csv"),), str(tmp_path / "f.png")))

    def test_wrong_header_names_file_and_row(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("time,value\n0,1\n")
        with pytest.raises(CsvFormatError, match=r"bad.csv: row 1"):
            render(FigureSpec(2, (str(bad),), str(tmp_path / "f.png")))

    def test_short_row_names_row_number(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,y\n0.0,1.0\n0.5\n")
        with pytest.raises(CsvFormatError, match=r"bad.csv: row 3"):
            render(FigureSpec(2, (str(bad),), str(tmp_path / "f.png")))

    def test_non_numeric_cell(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,y\n0.0,chilly\n")
        with pytest.raises(CsvFormatError, match=r"bad.csv: row 2.*'chilly'"):
            render(FigureSpec(2, (str(bad),), str(tmp_path / "f.png")))

    def test_empty_file(self, tmp_path):
        bad = tmp_path / "empty.csv"
        bad.write_text("")
        with pytest.raises(CsvFormatError, match="row 1"):
            render(FigureSpec(2, (str(bad),), str(tmp_path / "f.png")))

    def test_spec_validation(self, tmp_path):
        with pytest.raises(ValueError):
            FigureSpec(7, (str(FIG1),), str(tmp_path / "f.png"))
        with pytest.raises(ValueError):
            FigureSpec(1, (), str(tmp_path / "f.png"))


class TestReproducibility:
    @pytest.mark.parametrize(
        "figure,inputs,threshold",
        [
            (1, (FIG1,), None),
            (2, (FIG2A, FIG2B), None),
            (3, (FIG3,), 1e-4),
        ],
    )
    def test_rerender_same_arrays(self, tmp_path, figure, inputs, threshold):
        paths = tuple(str(p) for p in inputs)
        r1 = render(FigureSpec(figure, paths, str(tmp_path / "a.png"), threshold))
        r2 = render(FigureSpec(figure, paths, str(tmp_path / "b.png"), threshold))
        if figure == 1:
            np.testing.assert_array_equal(r1["u"], r2["u"])
        else:
            for (t1, v1), (t2, v2) in zip(r1["series"], r2["series"]):
                np.testing.assert_array_equal(t1, t2)
                np.testing.assert_array_equal(v1, v2)


class TestCli:
    def test_all_three_figures(self, tmp_path, capsys):
        assert main(["--figure", "1", "--in", str(FIG1), "--out", str(tmp_path / "f1.png")]) == 0
        assert (
            main(["--figure", "2", "--in", str(FIG2A), str(FIG2B), "--out", str(tmp_path / "f2.png")])
            == 0
        )
        assert (
            main(
                ["--figure", "3", "--in", str(FIG3), "--out", str(tmp_path / "f3.png"),
                 "--threshold", "1e-4"]
            )
            == 0
        )
        for name in ("f1.png", "f2.png", "f3.png"):
            assert (tmp_path / name).read_bytes()[:8] == PNG_MAGIC

    def test_schema_violation_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,wrong\n0,1\n")
        rc = main(["--figure", "2", "--in", str(bad), "--out", str(tmp_path / "f.png")])
        assert rc == 1
        err = capsys.readouterr().err
        assert "bad.csv" in err and "row 1" in err
