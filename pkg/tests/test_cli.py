import json
import os

import numpy as np
import pytest

from frontlab import cli

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


MINSPEED = """
[scenario]
name = "ms"
experiment = "minspeed"
[reaction.f1]
family = "logistic"
params = [1.0]
[experiment]
tol = 1e-3
"""

PROFILE = """
[scenario]
name = "prof"
experiment = "profile"
[reaction.f1]
family = "bistable"
params = [0.25]
[experiment]
c = 0.35355339059327373
"""

SWITCH_SHORT = """
[scenario]
name = "switch-short"
experiment = "switch"
[reaction]
t1 = 0.0
t2 = 10.0
blend = "smoothstep"
[reaction.f1]
family = "logistic"
params = [1.0]
[reaction.f2]
family = "logistic"
params = [2.0]
[solver]
dx = 0.05
dt = 0.1
scheme = "imex_cn"
window_left = 80.0
window_right = 160.0
snapshot_stride = 10
[experiment]
c1 = 2.5
horizon = 80.0
burn_in = 30.0
rel_tol = 0.05
"""

BROKEN = """
[scenario]
name = "broken"
experiment = "switch"
[reaction]
t1 = 0.0
t2 = 10.0
[reaction.f1]
family = "logistic"
params = [1.0]
[reaction.f2]
family = "logistic"
params = [2.0]
[solver]
dt = 0.1
[experiment]
c1 = 2.5
"""

BELOW_MINIMAL = """
[scenario]
name = "below"
experiment = "profile"
[reaction.f1]
family = "logistic"
params = [1.0]
[experiment]
c = 1.0
"""


def test_minspeed_roundtrip(tmp_path):
    cfg = write(tmp_path, "ms.toml", MINSPEED)
    out = str(tmp_path / "out")
    assert cli.main(["minspeed", "--config", cfg, "--out", out]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["passed"]
    assert abs(report["result"]["cstar"] - 2.0) < 0.01


def test_profile_artifact_matches_closed_form(tmp_path):
    cfg = write(tmp_path, "prof.toml", PROFILE)
    out = str(tmp_path / "out")
    assert cli.main(["profile", "--config", cfg, "--out", out]) == 0
    data = np.loadtxt(tmp_path / "out" / "profile.txt")
    xi, phi = data[:, 0], data[:, 1]
    exact = 1.0 / (1.0 + np.exp(xi / np.sqrt(2.0)))
    assert np.abs(phi - exact).max() < 1e-4


def test_switch_writes_artifacts(tmp_path):
    cfg = write(tmp_path, "sw.toml", SWITCH_SHORT)
    out = tmp_path / "out"
    assert cli.main(["switch", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "report.json").exists()
    assert (out / "track.csv").exists()
    assert (out / "window_shifts.jsonl").exists()
    snaps = list((out / "snapshots").glob("snap_*.csv"))
    assert snaps
    report = json.loads((out / "report.json").read_text())
    assert report["result"]["prediction"]["c2_predicted"] == 4.5
    assert report["passed"]
    first = snaps[0].read_text().splitlines()
    assert first[0] == "t,x,u"


def test_missing_key_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, "broken.toml", BROKEN)
    code = cli.main(["switch", "--config", cfg, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "solver.dx" in capsys.readouterr().err


def test_mismatched_subcommand_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, "ms.toml", MINSPEED)
    assert cli.main(["switch", "--config", cfg]) == 2


def test_malformed_toml_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, "bad.toml", "[scenario\nname=")
    assert cli.main(["minspeed", "--config", cfg]) == 2


def test_numerical_failure_exits_3(tmp_path):
    cfg = write(tmp_path, "below.toml", BELOW_MINIMAL)
    out = tmp_path / "out"
    code = cli.main(["profile", "--config", cfg, "--out", str(out)])
    assert code == 3
    report = json.loads((out / "report.json").read_text())
    assert report["error"]["type"] == "NoMonotoneFrontError"


def test_deterministic_reports_modulo_timestamp(tmp_path):
    cfg = write(tmp_path, "ms.toml", MINSPEED)
    blobs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert cli.main(["minspeed", "--config", cfg, "--out", str(out),
                         "--seed", "42"]) == 0
        rep = json.loads((out / "report.json").read_text())
        del rep["timestamp"]
        blobs.append(json.dumps(rep, sort_keys=True))
    assert blobs[0] == blobs[1]


def test_sweep_aggregates_cells(tmp_path):
    cfg = write(tmp_path, "prof.toml", """
[scenario]
name = "prof-sweep"
experiment = "profile"
[reaction.f1]
family = "logistic"
params = [1.0]
[experiment]
c = 2.5
""")
    out = tmp_path / "sweep"
    code = cli.main(["sweep", "--config", cfg, "--axis", "experiment.c",
                     "--values", "2.5,3.0", "--out", str(out), "--jobs", "2"])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    cells = report["result"]["cells"]
    assert [c["value"] for c in cells] == [2.5, 3.0]
    lams = [c["result"]["tail_lambda"] for c in cells]
    assert lams[0] == pytest.approx(0.5, rel=0.01)
    assert lams[1] == pytest.approx((3.0 - np.sqrt(5.0)) / 2.0, rel=0.01)
    assert (out / "cell_000" / "report.json").exists()


def test_sweep_bad_axis_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, "ms.toml", MINSPEED)
    code = cli.main(["sweep", "--config", cfg, "--axis", "experiment.nope",
                     "--values", "1,2", "--out", str(tmp_path / "s")])
    assert code == 2


def test_accept_single_fast_criterion(tmp_path, capsys):
    code = cli.main(["accept", "--criteria", "10",
                     "--out", str(tmp_path / "acc")])
    assert code == 0
    out = capsys.readouterr().out
    assert "criterion 10" in out and "PASS" in out
    report = json.loads((tmp_path / "acc" / "report.json").read_text())
    assert report["passed"]


def test_shipped_scenarios_parse():
    import glob
    paths = glob.glob(os.path.join(SCENARIOS, "*.toml"))
    assert len(paths) >= 6
    for p in paths:
        cfg = cli.load_scenario(p)
        assert cfg["scenario"]["experiment"] in cli._RUNNERS


def test_certify_runner_emits_records(tmp_path):
    cfg_path = os.path.join(SCENARIOS, "certify_gap.toml")
    out = tmp_path / "cert"
    assert cli.main(["certify", "--config", cfg_path, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    records = report["result"]["records"]
    names = {r["check"] for r in records}
    assert {"supersolution-envelope", "heat-lower-bound", "interior-ordering",
            "time-monotonicity", "comparison-up-to-shift"} <= names
    assert all(r["passed"] for r in records)


def test_criteria_runner(tmp_path):
    cfg_path = os.path.join(SCENARIOS, "criteria_flagship.toml")
    out = tmp_path / "crit"
    assert cli.main(["criteria", "--config", cfg_path, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["passed"]
    assert len(report["result"]["levels"]) == 3


def test_periodic_runner(tmp_path):
    cfg = write(tmp_path, "per.toml", """
[scenario]
name = "per-short"
experiment = "periodic"
[solver]
dx = 0.05
dt = 0.05
scheme = "imex_cn"
window_left = 80.0
window_right = 160.0
snapshot_stride = 4
[experiment]
period = 2.0
rate_amplitude = 0.5
c_init = 2.5
t_end = 80.0
burn_in = 40.0
twin_shift = 0.7
residual_tol = 1e-2
""")
    out = tmp_path / "per"
    assert cli.main(["periodic", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["passed"]
    assert report["result"]["identity"]["residual"] <= 1e-2
