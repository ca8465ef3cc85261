"""Render every figure family from golden fixtures; fail loudly on bad schema."""

import shutil
from pathlib import Path

import pytest

from ttfigures import RENDERERS, SchemaError, render
from ttfigures.cli import main

FIXTURES = Path(__file__).parent / "fixtures"

ALL_FAMILIES = sorted(RENDERERS)


@pytest.mark.parametrize("figure_id", ALL_FAMILIES)
def test_renders_from_golden_fixture(figure_id, tmp_path):
    out = tmp_path / f"{figure_id}.png"
    result = render(figure_id, FIXTURES / figure_id, out)
    assert result == out
    assert out.exists()
    assert out.stat().st_size > 1000


@pytest.mark.parametrize("figure_id", ALL_FAMILIES)
def test_render_is_idempotent_and_deterministic(figure_id, tmp_path):
    out1 = tmp_path / "first.png"
    out2 = tmp_path / "second.png"
    render(figure_id, FIXTURES / figure_id, out1)
    render(figure_id, FIXTURES / figure_id, out2)
    assert out1.read_bytes() == out2.read_bytes()


def test_inputs_never_mutated(tmp_path):
    src = FIXTURES / "time-scan" / "results.csv"
    work = tmp_path / "in"
    work.mkdir()
    shutil.copy(src, work / "results.csv")
    before = (work / "results.csv").read_bytes()
    render("time-scan", work, tmp_path / "fig.png")
    assert (work / "results.csv").read_bytes() == before


def test_missing_column_named(tmp_path):
    work = tmp_path / "in"
    work.mkdir()
    lines = (FIXTURES / "time-scan" / "results.csv").read_text().splitlines()
    header = lines[0].replace("j_avg", "javg")
    (work / "results.csv").write_text("\n".join([header] + lines[1:]) + "\n")
    with pytest.raises(SchemaError, match="j_avg"):
        render("time-scan", work, tmp_path / "fig.png")


def test_empty_csv_rejected(tmp_path):
    work = tmp_path / "in"
    work.mkdir()
    header = (FIXTURES / "recapture" / "results.csv").read_text().splitlines()[0]
    (work / "results.csv").write_text(header + "\n")
    with pytest.raises(SchemaError, match="no data rows"):
        render("recapture", work, tmp_path / "fig.png")


def test_missing_file_rejected(tmp_path):
    with pytest.raises(SchemaError, match="not found"):
        render("convergence", tmp_path, tmp_path / "fig.png")


def test_unknown_figure_id():
    with pytest.raises(SchemaError, match="unknown figure id"):
        render("spectrogram", FIXTURES, "out.png")


class TestCli:
    def test_render_ok(self, tmp_path, capsys):
        out = tmp_path / "fig.png"
        code = main(["render", "improvement", str(FIXTURES / "improvement"), str(out)])
        assert code == 0
        assert out.exists()
        assert str(out) in capsys.readouterr().out

    def test_schema_error_exit_code(self, tmp_path, capsys):
        code = main(["render", "qsl-distance", str(tmp_path), str(tmp_path / "f.png")])
        assert code == 2
        err = capsys.readouterr().err
        assert "error:" in err and "not found" in err
