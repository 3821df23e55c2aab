import json
import os
import subprocess
import sys

import numpy as np
import pytest

from swarmplots import PlotJob, SchemaMismatch, load_bundle, render
from swarmplots.cli import main as cli_main

# The bundle under test is produced through the primary package's public CLI;
# nothing else from it is imported.

RUN_CONFIG = """
[graph]
agents = 3
dimension = 2
generator = cycle

[scenario]
kind = quadratic
q = 2.0 0.0 0.0 3.0
region = -10 -10 10 10
path = line
path_start = 0 0
path_velocity = 0.001 0

[formation]
shape = offsets
offsets = 0 1 2 0  1 2 -1 2  2 0 -1 -2
safety_distance = 0.3
collision_ramp = 0.3

[run]
rounds = {rounds}
seed = 7
init_box = -4 -4 4 4
mode = network
"""


def make_bundle(tmp_path, rounds=60):
    cfg = tmp_path / "run.ini"
    cfg.write_text(RUN_CONFIG.format(rounds=rounds))
    out = tmp_path / f"bundle{rounds}"
    env = dict(os.environ)
    env.pop("SWARMSEEK_OUT_DIR", None)
    subprocess.run(
        [sys.executable, "-m", "swarmseek.cli", "run", "--config", str(cfg),
         "--out-dir", str(out)],
        check=True, env=env, capture_output=True)
    return out


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory):
    return make_bundle(tmp_path_factory.mktemp("runs"))


def test_load_bundle_shapes(bundle_dir):
    b = load_bundle(str(bundle_dir))
    assert b.schema_version == 1
    assert b.agent_count == 3
    assert b.round_count == 60
    assert b.positions().shape == (61, 3, 2)
    assert b.minimizer_path().shape == (61, 2)
    assert "seed" in b.metrics


def test_schema_mismatch_rejected(tmp_path, bundle_dir):
    import shutil
    copy = tmp_path / "tampered"
    shutil.copytree(bundle_dir, copy)
    csv_path = copy / "trajectory.csv"
    lines = csv_path.read_text().splitlines()
    lines[0] = "# schema_version=999"
    csv_path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaMismatch):
        load_bundle(str(copy))


def test_all_figure_kinds_render(bundle_dir, tmp_path):
    for kind in ("trajectories", "error-vs-bound", "formation-potential"):
        out = tmp_path / f"{kind}.png"
        path = render(PlotJob(str(bundle_dir), kind, str(out)))
        assert os.path.exists(path)
        assert os.path.getsize(path) > 1000


def test_render_is_idempotent_and_nonmutating(bundle_dir, tmp_path):
    csv_path = os.path.join(bundle_dir, "trajectory.csv")
    before = open(csv_path, "rb").read()
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    render(PlotJob(str(bundle_dir), "trajectories", str(a)))
    render(PlotJob(str(bundle_dir), "trajectories", str(b)))
    assert open(csv_path, "rb").read() == before
    assert a.read_bytes() == b.read_bytes()


def test_zero_round_bundle(tmp_path):
    out = make_bundle(tmp_path, rounds=0)
    b = load_bundle(str(out))
    assert b.round_count == 0
    fig = tmp_path / "init.png"
    render(PlotJob(str(out), "trajectories", str(fig)))
    assert fig.exists()


def test_unknown_kind_rejected(bundle_dir, tmp_path):
    with pytest.raises(ValueError):
        PlotJob(str(bundle_dir), "surface", str(tmp_path / "x.png"))


def test_cli(bundle_dir, tmp_path, capsys):
    out = tmp_path / "cli.png"
    assert cli_main([str(bundle_dir), "trajectories", str(out)]) == 0
    assert out.exists()
    assert cli_main([str(tmp_path / "missing"), "trajectories",
                     str(tmp_path / "y.png")]) == 2


@pytest.mark.slow
def test_reference_bundle_figures_and_gap_below_bound(tmp_path_factory):
    """The built-in reference scenario renders both headline figures, and
    after burn-in every agent's optimality gap stays below its closed-form
    bound (a consistency re-check of the bundle, not new math)."""
    tmp = tmp_path_factory.mktemp("reference")
    out = tmp / "bundle"
    env = dict(os.environ)
    env.pop("SWARMSEEK_OUT_DIR", None)
    subprocess.run(
        [sys.executable, "-m", "swarmseek.cli", "run", "--out-dir", str(out)],
        check=True, env=env, capture_output=True)
    render(PlotJob(str(out), "trajectories", str(tmp / "traj.png")))
    render(PlotJob(str(out), "error-vs-bound", str(tmp / "err.png")))
    assert (tmp / "traj.png").stat().st_size > 1000
    assert (tmp / "err.png").stat().st_size > 1000

    b = load_bundle(str(out))
    k0 = json.load(open(out / "metrics.json"))["burn_in_k0"]
    assert k0 is not None
    gaps = b.per_agent("gap")[k0:]
    bound = b.per_agent("bound_analytic")[k0:]
    defined = ~np.isnan(bound)
    assert defined.any()
    assert not np.any(gaps[defined] > bound[defined])
