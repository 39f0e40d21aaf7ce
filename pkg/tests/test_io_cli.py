import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from swarmcov import io
from swarmcov.assess import REPORT_SCHEMA
from swarmcov.cli import main
from swarmcov.domain import QuadratureGrid, RectDomain, SwarmConfig
from swarmcov.metric import TrajectorySeries
from swarmcov.pdf_bench import ErrorSampleSet

SMALL = ["--grid", "48x70", "--quiet"]

METRIC_SCHEMA = {
    "type": "object",
    "required": ["e", "e_hat", "N", "delta", "grid", "kernel", "density_id"],
    "properties": {"e": {"type": "number", "minimum": 0}, "e_hat": {"type": "number"},
                   "N": {"type": "integer", "minimum": 1}, "delta": {"type": "number"},
                   "grid": {"type": "object", "required": ["nx", "ny"]},
                   "kernel": {"type": "string"}, "density_id": {"type": "string"}},
}
EXTREMA_SCHEMA = {
    "type": "object",
    "required": ["e_minus", "e_plus", "n_starts", "seeds", "per_start", "argmin_csv", "argmax_csv"],
    "properties": {"per_start": {"type": "array", "items": {"type": "object",
                                                             "required": ["value", "iters"]}}},
}
PDF_SCHEMA = {
    "type": "object",
    "required": ["mu", "sigma", "residual", "M", "N", "delta", "diagnostics"],
}


def run(argv):
    return main(argv)


# ---------------------------------------------------------------- file formats

def test_positions_round_trip(tmp_path):
    s = SwarmConfig(np.random.default_rng(0).uniform(0, 1, (7, 2)) * [48, 70])
    io.write_positions(tmp_path / "p.csv", s)
    back = io.read_positions(tmp_path / "p.csv", RectDomain(0, 48, 0, 70))
    assert np.array_equal(back.positions, s.positions)


def test_trajectory_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    traj = TrajectorySeries([0.0, 0.5, 3.0], [SwarmConfig(rng.uniform(0, 1, (4, 2))) for _ in range(3)])
    io.write_positions(tmp_path / "t.csv", traj)
    back = io.read_positions(tmp_path / "t.csv")
    assert np.array_equal(back.times, traj.times)
    for a, b in zip(back.frames, traj.frames):
        assert np.array_equal(a.positions, b.positions)


@pytest.mark.parametrize("body, message", [
    ("x,y\n1,2\n3,oops\n", ":3: non-numeric"),
    ("x,z\n1,2\n", ":1: header"),
    ("x,y\n1,2,3\n", ":2: expected 2 fields"),
    ("x,y\n1,2\n100,5\n", "line 3 (100, 5)"),
    ("", ":1: empty file"),
])
def test_positions_errors_name_the_line(tmp_path, body, message):
    (tmp_path / "bad.csv").write_text(body)
    with pytest.raises(io.InputError, match=message.replace("(", r"\(").replace(")", r"\)")):
        io.read_positions(tmp_path / "bad.csv", RectDomain(0, 48, 0, 70))


def test_grid_density_round_trip(tmp_path):
    g = QuadratureGrid(RectDomain(0, 2, -1, 1), 3, 4)
    vals = np.arange(1.0, 13.0).reshape(3, 4)
    io.write_grid_density(tmp_path / "g.csv", g, vals)
    rho = io.read_grid_density(tmp_path / "g.csv")
    assert np.array_equal(rho.values, vals) and rho.domain == g.domain


def test_samples_and_series_round_trip(tmp_path):
    s = ErrorSampleSet(np.random.default_rng(2).uniform(0.4, 0.6, 25), 200, 2.0, "ring", 7, False)
    io.write_samples(tmp_path / "s.csv", s)
    b = io.read_samples(tmp_path / "s.csv")
    assert np.array_equal(b.values, s.values)
    assert (b.n_robots, b.delta, b.density_id, b.seed, b.normalized_blob) == (200, 2.0, "ring", 7, False)
    t, e = np.arange(5.0), np.random.default_rng(3).uniform(size=5)
    io.write_series(tmp_path / "e.csv", t, e)
    t2, e2 = io.read_series(tmp_path / "e.csv")
    assert np.array_equal(t, t2) and np.array_equal(e, e2)


def test_scenario_validation(tmp_path):
    d = io.ring_scenario_dict()
    sc = io.scenario_from_dict(d)
    assert (sc.grid.nx, sc.grid.ny) == (100, 100) and sc.kernel.delta == 2.0
    bad = dict(d, colour="red")
    with pytest.raises(io.InputError, match="unknown key"):
        io.scenario_from_dict(bad)
    with pytest.raises(io.InputError, match="unknown type"):
        io.scenario_from_dict(dict(d, density={"type": "spiral"}))
    (tmp_path / "broken.json").write_text("{\n  \"domain\": ,\n}")
    with pytest.raises(io.InputError, match="broken.json:2"):
        io.load_scenario(tmp_path / "broken.json")


def test_grid_density_scenario(tmp_path):
    g = QuadratureGrid(RectDomain(0, 1, 0, 1), 4, 4)
    io.write_grid_density(tmp_path / "rho.csv", g, np.ones((4, 4)))
    (tmp_path / "sc.json").write_text(json.dumps({
        "domain": {"x_min": 0, "x_max": 1, "y_min": 0, "y_max": 1},
        "density": {"type": "grid", "csv": "rho.csv"},
        "kernel": {"type": "gaussian", "delta": 0.1}, "grid": {"nx": 20, "ny": 20}}))
    sc = io.load_scenario(tmp_path / "sc.json")
    assert sc.density(0.3, 0.3) == pytest.approx(1.0)


# ---------------------------------------------------------------- commands

def test_eval_corner_and_mu(tmp_path):
    io.write_positions(tmp_path / "corner.csv", SwarmConfig(np.zeros((200, 2))))
    out = tmp_path / "o"
    assert run(["eval", "--positions", str(tmp_path / "corner.csv"), "--out", str(out), "--mu",
                "--partition", "8x8", "--quiet"]) == 0
    rep = json.loads((out / "metric.json").read_text())
    jsonschema.validate(rep, METRIC_SCHEMA)
    assert 1.98 <= rep["e"] <= 2.0 and rep["N"] == 200
    assert rep["partition"] == "8x8" and 0 <= rep["mu"] <= 2
    header = (out / "blob_field.csv").read_text().splitlines()[0]
    assert header == "x,y,blob"


def test_eval_outside_point_exit_2(tmp_path, capsys):
    (tmp_path / "p.csv").write_text("x,y\n1,1\n2,2\n60,3\n")
    assert run(["eval", "--positions", str(tmp_path / "p.csv"), "--out", str(tmp_path)]) == 2
    assert "line 4" in capsys.readouterr().err


def test_eval_missing_file_exit_2(tmp_path):
    assert run(["eval", "--positions", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2


def test_eval_trajectory_reports_cumulative(tmp_path):
    rng = np.random.default_rng(4)
    traj = TrajectorySeries([0, 1], [SwarmConfig(rng.uniform(0, 1, (10, 2)) * [48, 70]) for _ in range(2)])
    io.write_positions(tmp_path / "t.csv", traj)
    assert run(["eval", "--positions", str(tmp_path / "t.csv"), "--out", str(tmp_path)] + SMALL) == 0
    rep = json.loads((tmp_path / "metric.json").read_text())
    assert rep["frames"] == 2 and 0 <= rep["cumulative_e"] <= rep["e"] + 2


def test_extrema_deterministic(tmp_path):
    reps = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert run(["extrema", "--starts", "1", "--seed", "7", "--n", "20", "--max-iters", "100",
                    "--out", str(out)] + SMALL) == 0
        reps.append(json.loads((out / "extrema.json").read_text()))
        jsonschema.validate(reps[-1], EXTREMA_SCHEMA)
    for k in ("e_minus", "e_plus", "per_start"):
        assert reps[0][k] == reps[1][k]
    assert (tmp_path / "a" / "argmin.csv").read_text() == (tmp_path / "b" / "argmin.csv").read_text()
    assert (tmp_path / "a" / "argmax.csv").read_text() == (tmp_path / "b" / "argmax.csv").read_text()


def test_extrema_threads_do_not_change_values(tmp_path):
    vals = []
    for th in ("1", "3"):
        out = tmp_path / th
        assert run(["extrema", "--starts", "3", "--n", "10", "--max-iters", "60", "--threads", th,
                    "--out", str(out)] + SMALL) == 0
        vals.append(json.loads((out / "extrema.json").read_text()))
    assert vals[0]["e_minus"] == vals[1]["e_minus"] and vals[0]["per_start"] == vals[1]["per_start"]


def test_extrema_sweep(tmp_path):
    assert run(["extrema", "--sweep", "10:40:3", "--starts", "1", "--max-iters", "40",
                "--out", str(tmp_path)] + SMALL) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "N,delta,e_min" and [int(l.split(",")[0]) for l in lines[1:]] == [10, 20, 40]


def test_pdf_outputs(tmp_path):
    assert run(["pdf", "--m", "40", "--n", "50", "--out", str(tmp_path)] + SMALL) == 0
    rep = json.loads((tmp_path / "pdf.json").read_text())
    jsonschema.validate(rep, PDF_SCHEMA)
    cdf = np.loadtxt(tmp_path / "cdf.csv", delimiter=",", skiprows=1)
    assert np.all(np.diff(cdf[:, 1]) >= 0) and np.all(np.diff(cdf[:, 0]) >= 0)
    fit = np.loadtxt(tmp_path / "fit.csv", delimiter=",", skiprows=1)
    assert fit.shape[1] == 3 and np.all(np.diff(fit[:, 1]) >= 0)
    assert np.array_equal(io.read_samples(tmp_path / "samples.csv").values.size, 40)


def test_pdf_small_m_degrades_gracefully(tmp_path):
    code = run(["pdf", "--m", "10", "--n", "50", "--out", str(tmp_path)] + SMALL)
    assert code in (0, 3)
    rep = json.loads((tmp_path / "pdf.json").read_text())
    assert rep["M"] == 10 and rep["diagnostics"] is None
    assert np.isfinite(rep["mu"]) and rep["sigma"] > 0


def test_pdf_seed_and_threads(tmp_path):
    runs = []
    for tag, th in (("a", "1"), ("b", "4")):
        assert run(["pdf", "--m", "12", "--n", "30", "--seed", "5", "--threads", th,
                    "--out", str(tmp_path / tag)] + SMALL) in (0, 3)
        runs.append((tmp_path / tag / "samples.csv").read_text())
    assert runs[0] == runs[1]


def test_simulate_outputs(tmp_path):
    assert run(["simulate", "--n", "20", "--steps", "100", "--stride", "10",
                "--out", str(tmp_path), "--quiet"]) == 0
    traj = io.read_positions(tmp_path / "trajectory.csv")
    assert len(traj) == 11 and traj.n_robots == 20
    t, e = io.read_series(tmp_path / "series.csv")
    assert t.size == 11 and np.all((e >= 0) & (e <= 2.0)) and e[0] > e[-1]


def test_assess_reference(tmp_path):
    assert run(["assess", "--reference", "--out", str(tmp_path), "--quiet"]) == 0
    ref = json.loads((tmp_path / "reference.json").read_text())
    assert abs(ref["e_rel"]["value"] - 0.1371) <= 1e-4
    assert abs(ref["f_stat"]["value"] - 1.083) <= 0.002


def test_assess_from_trajectory_and_cache(tmp_path):
    sim = tmp_path / "sim"
    assert run(["simulate", "--n", "30", "--steps", "3000", "--stride", "20", "--out", str(sim)] + SMALL) == 0
    (tmp_path / "ext.json").write_text(json.dumps({"e_minus": 0.3, "e_plus": 1.99, "n_starts": 1}))
    assert run(["pdf", "--m", "60", "--n", "30", "--out", str(tmp_path / "pdf")] + SMALL) == 0
    out = tmp_path / "a"
    assert run(["assess", "--trajectory", str(sim / "trajectory.csv"),
                "--extrema-json", str(tmp_path / "ext.json"),
                "--samples-csv", str(tmp_path / "pdf" / "samples.csv"), "--out", str(out)] + SMALL) == 0
    rep = json.loads((out / "assessment.json").read_text())
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert rep["e_rel"] == (rep["steady_state"]["q3"] - 0.3) / (1.99 - 0.3)


def test_assess_insufficient_data_exit_4(tmp_path, capsys):
    # a steadily decaying series never settles inside the recorded window
    traj = TrajectorySeries(np.arange(6.0), [SwarmConfig(np.full((5, 2), 1.0 + 4 * i)) for i in range(6)])
    io.write_positions(tmp_path / "t.csv", traj)
    (tmp_path / "ext.json").write_text(json.dumps({"e_minus": 0.3, "e_plus": 1.99}))
    code = run(["assess", "--trajectory", str(tmp_path / "t.csv"), "--extrema-json", str(tmp_path / "ext.json"),
                "--m", "40", "--out", str(tmp_path)] + SMALL)
    assert code == 4
    assert "t_s" in capsys.readouterr().err


def test_assess_needs_input(tmp_path):
    assert run(["assess", "--out", str(tmp_path), "--quiet"]) == 2


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "swarmcov.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for cmd in ("eval", "extrema", "pdf", "simulate", "assess"):
        assert cmd in r.stdout


def test_threads_env_default(monkeypatch):
    from swarmcov.cli import build_parser
    monkeypatch.setenv("SWARMCOV_THREADS", "3")
    args = build_parser().parse_args(["pdf"])
    assert args.threads == 3


@pytest.mark.parametrize("flag", ["--svg"])
def test_svg_rendering(tmp_path, flag):
    pytest.importorskip("matplotlib")
    io.write_positions(tmp_path / "p.csv", SwarmConfig([[10.0, 10.0]]))
    assert run(["eval", "--positions", str(tmp_path / "p.csv"), "--out", str(tmp_path), flag] + SMALL) == 0
    assert (tmp_path / "blob_field.svg").read_text().lstrip().startswith("<?xml")
