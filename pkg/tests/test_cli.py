import csv
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from fovea_dvs import aer_io, pipeline
from fovea_dvs.cli import main
from fovea_dvs.events import EventStream
from fovea_dvs.pipeline import SCENARIOS, Scenario

SVG = "{http://www.w3.org/2000/svg}"


def run(*argv):
    return main([str(a) for a in argv])


def write_aer(path, stream):
    with open(path, "wb") as fh:
        aer_io.write_events(stream, fh)


def event_markers(svg_path):
    root = ET.parse(svg_path).getroot()
    counts = {}
    for g in root.iter(SVG + "g"):
        if g.get("id") in ("on-events", "off-events"):
            counts[g.get("id")] = len(list(g.iter(SVG + "use")))
    return counts


@pytest.fixture(scope="module")
def raw(tmp_path_factory):
    out = tmp_path_factory.mktemp("raw")
    assert run("synth", "--frames", 6, "--out", out) == 0
    return out


def test_synth_writes_one_file_per_class(raw, capsys):
    names = sorted(p.name for p in raw.iterdir())
    assert names == [f"class{k}_rep0.aer" for k in range(7)]


def test_synth_reports_counts_and_grows_with_bar_count(tmp_path, capsys):
    run("synth", "--frames", 6, "--classes", 6, "--reps", 2, "--out", tmp_path)
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 12
    counts = [int(line.split(": ")[1].split()[0]) for line in lines[::2]]
    assert counts == sorted(counts) and counts[0] > 0


def test_synth_is_byte_identical_on_rerun(raw, tmp_path):
    run("synth", "--frames", 6, "--out", tmp_path)
    for p in raw.iterdir():
        assert (tmp_path / p.name).read_bytes() == p.read_bytes()


def test_filter_single_file_summary(raw, tmp_path, capsys):
    dst = tmp_path / "f.aer"
    assert run("filter", raw / "class1_rep0.aer", "--cell-type", "off-parasol",
               "--edge-mode", "circular", "--out", dst) == 0
    out = capsys.readouterr().out
    assert "events in" in out and "events out" in out
    assert len(pipeline.read_stream(dst)) > 0


def test_filter_on_and_off_midget_differ(raw, tmp_path):
    outs = []
    for cell in ("off-midget", "on-midget"):
        dst = tmp_path / f"{cell}.aer"
        run("filter", raw / "class2_rep0.aer", "--cell-type", cell, "--edge-mode", "zero", "--out", dst)
        outs.append(dst.read_bytes())
    assert outs[0] != outs[1]


def test_filter_silent_recording_gives_empty_output(tmp_path):
    src, dst = tmp_path / "in.aer", tmp_path / "out.aer"
    write_aer(src, EventStream())
    assert run("filter", src, "--cell-type", "on-parasol", "--edge-mode", "zero", "--out", dst) == 0
    assert len(pipeline.read_stream(dst)) == 0
    assert dst.stat().st_size == aer_io.AER_HEADER_SIZE


def test_filter_unknown_cell_type_lists_presets(raw, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run("filter", raw / "class0_rep0.aer", "--cell-type", "midget", "--edge-mode", "zero",
            "--out", tmp_path / "x.aer")
    assert exc.value.code == 2
    err = capsys.readouterr().err
    for name in ("off-midget", "on-midget", "off-parasol", "on-parasol"):
        assert name in err


def test_missing_input_is_nonzero_exit(tmp_path, capsys):
    assert run("raster", tmp_path / "absent.aer", "--out", tmp_path / "r.csv") == 1
    assert "error" in capsys.readouterr().err


def test_unwritable_output_is_nonzero_exit(raw, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("synth", "--frames", 3, "--classes", 1, "--out", blocker / "sub") == 1


@pytest.fixture(scope="module")
def staged(raw, tmp_path_factory):
    """frames -> train -> eval on the reduced geometry."""
    root = tmp_path_factory.mktemp("staged")
    assert run("frames", raw, "--frames", 6, "--out", root / "ds") == 0
    assert run("train", root / "ds", "--geometry", "reduced", "--epochs", 1, "--out", root / "m.scn") == 0
    assert run("eval", root / "m.scn", root / "ds", "--out", root / "ev") == 0
    return root


def test_frames_outputs(staged):
    frames = pipeline.load_dataset(staged / "ds").frames
    assert frames.shape == (42, 128, 128) and frames.dtype == np.float32
    with open(staged / "ds" / pipeline.INDEX_FILE) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 42 and sum(r["split"] == "test" for r in rows) == 7


def test_checkpoint_is_reduced_geometry(staged):
    data = (staged / "m.scn").read_bytes()
    assert data[:4] == b"SCN1"
    assert pipeline.load_model(staged / "m.scn").input_size == 32


def test_eval_writes_report_and_confusion(staged):
    rows = pipeline.read_report(staged / "ev" / "report.csv")
    assert list(rows[0]) == ["scenario", "cell_type", "circ_shift", "accuracy"]
    assert rows == [{"scenario": "Unfiltered", "cell_type": "-", "circ_shift": "-",
                     "accuracy": rows[0]["accuracy"]}]
    with open(staged / "ev" / "confusion.csv") as fh:
        table = list(csv.reader(fh))
    assert len(table) == 8 and all(len(r) == 8 for r in table)
    assert [sum(map(int, r[1:])) for r in table[1:]] == [1] * 7


def test_eval_geometry_mismatch_fails(staged, capsys):
    assert run("eval", staged / "m.scn", staged / "ds", "--geometry", "full", "--out", staged / "bad") == 1
    assert "error" in capsys.readouterr().err


def test_train_is_byte_identical_on_rerun(staged):
    again = staged / "again.scn"
    run("train", staged / "ds", "--geometry", "reduced", "--epochs", 1, "--out", again)
    assert again.read_bytes() == (staged / "m.scn").read_bytes()


def test_raster_empty_stream(tmp_path):
    src = tmp_path / "e.aer"
    write_aer(src, EventStream())
    assert run("raster", src, "--out", tmp_path / "r.csv", "--svg", tmp_path / "r.svg") == 0
    assert (tmp_path / "r.csv").read_text() == "t_us,x,y,neuron,polarity\n"
    assert event_markers(tmp_path / "r.svg") == {"on-events": 0, "off-events": 0}


def test_raster_ten_events(tmp_path):
    events = [(1000 * i, 3 * i, i, 1 if i % 3 else -1) for i in range(10)]
    src = tmp_path / "ten.aer"
    write_aer(src, EventStream(128, 128, events))
    run("raster", src, "--out", tmp_path / "r.csv", "--svg", tmp_path / "r.svg")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert len(lines) == 11
    assert lines[2] == "1000,3,1,131,1"
    assert event_markers(tmp_path / "r.svg") == {"on-events": 6, "off-events": 4}
    text = (tmp_path / "r.svg").read_text()
    assert "#0000ff" in text and "#ff0000" in text
    run("raster", src, "--out", tmp_path / "r2.csv", "--svg", tmp_path / "r2.svg")
    assert (tmp_path / "r2.svg").read_bytes() == (tmp_path / "r.svg").read_bytes()


def test_kernel_export(tmp_path):
    assert run("kernel", "--cell-type", "on-midget", "--out", tmp_path / "k.csv") == 0
    lines = (tmp_path / "k.csv").read_text().splitlines()
    assert lines[0] == "11" and len(lines) == 12


def test_scenario_table_layout():
    assert len(SCENARIOS) == 9
    assert SCENARIOS[0].row(65.0) == ["Unfiltered", "-", "-", "65.0"]
    assert Scenario("off_parasol", "circular").row(100.0) == ["Filtered", "off-center parasol", "1", "100.0"]
    assert [s.row(0)[2] for s in SCENARIOS[1:]] == ["0"] * 4 + ["1"] * 4
    assert len({s.key for s in SCENARIOS}) == 9


def test_repro_report_has_nine_rows(tmp_path, capsys):
    out = tmp_path / "repro"
    assert run("repro", "--frames", 4, "--epochs", 1, "--geometry", "reduced", "--out", out) == 0
    rows = pipeline.read_report(out / "report.csv")
    assert len(rows) == 9
    assert [r["cell_type"] for r in rows[1:5]] == [
        "off-center midget", "on-center midget", "off-center parasol", "on-center parasol"]
    for s in SCENARIOS:
        assert (out / s.key / "model.scn").exists()
        assert (out / s.key / "confusion.csv").exists()
    assert all(0 <= float(r["accuracy"]) <= 100 for r in rows)


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "fovea_dvs", "kernel", "--cell-type", "off-midget", "--out", tmp_path / "k.csv"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "k.csv").read_text().startswith("5\n")
