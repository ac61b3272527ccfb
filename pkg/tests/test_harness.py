import csv
import json

import numpy as np
import pytest
import yaml

from intrusive_uq.errors import ConfigError, IncompatibleSnapshotError, MeshError, NonConvergence
from intrusive_uq.harness import (
    Snapshot,
    build_preset,
    compare_snapshots,
    default_config,
    parse_config,
    preset_names,
    read_snapshot,
    run_experiment,
    write_snapshot,
)
from intrusive_uq.harness.cli import exit_code, main
from intrusive_uq.harness.config import load_config
from intrusive_uq.mesh import Mesh1D, load_mesh, mesh_hash

BASE = {
    "method": "ipm",
    "problem": {"preset": "burgers_random_shock", "params": {"n_cells": 20}},
    "basis": {"order": 2},
    "quadrature": {"family": "gauss_legendre", "level": 4},
    "solver": {"t_end": 0.05},
}


def with_changes(**changes):
    data = yaml.safe_load(yaml.safe_dump(BASE))
    for dotted, value in changes.items():
        *head, last = dotted.split("__")
        node = data
        for key in head:
            node = node.setdefault(key, {})
        node[last] = value
    return data


# -- configs ---------------------------------------------------------------------


def test_base_config_parses():
    cfg = parse_config(BASE)
    assert cfg.order == 2 and cfg.quadrature.level == 4
    assert cfg.solver_config().t_end == 0.05


@pytest.mark.parametrize(
    "changes,path",
    [
        ({"method": "mcmc"}, "method"),
        ({"basis__order": "two"}, "basis.order"),
        ({"basis__order": -1}, "basis.order"),
        ({"quadrature__family": "simpson"}, "quadrature.family"),
        ({"quadrature__kind": "sparse", "quadrature__family": "gauss_legendre"}, "quadrature.family"),
        ({"solver__cfl": "fast"}, "solver.cfl"),
        ({"solver__bogus": 1}, "solver.bogus"),
        ({"problem__colour": "red"}, "problem.colour"),
        ({"region": [0.0, 1.0, 2.0]}, "region"),
        ({"ladder": [{"order": 1, "quadrature": {"level": 1}}]}, "ladder"),
        ({"retardation": {"orders": [1], "thresholds": [1e-4]}}, "retardation"),
    ],
)
def test_config_errors_name_the_field(changes, path):
    with pytest.raises(ConfigError) as info:
        parse_config(with_changes(**changes))
    assert info.value.path == path
    assert str(info.value).startswith(path)


def test_adaptive_config_checks():
    data = with_changes()
    del data["basis"], data["quadrature"]
    data["method"] = "adaptive_ipm"
    data["ladder"] = [
        {"order": 3, "quadrature": {"family": "clenshaw_curtis", "level": 2}},
        {"order": 2, "quadrature": {"family": "clenshaw_curtis", "level": 3}},
    ]
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.path == "ladder"
    data["ladder"][1]["order"] = 5
    data["adaptivity"] = {"delta_dec": 1e-3, "delta_inc": 1e-4}
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.path == "adaptivity.delta_dec"


def test_readosipm_needs_schedule():
    data = default_config("naca1d")
    del data["retardation"]
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.path == "retardation"


def test_yaml_string_numbers_are_accepted(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(with_changes(solver__tau="1e-9")))
    assert load_config(path).solver_config().tau == 1e-9


def test_config_dump_round_trip(tmp_path):
    cfg = parse_config(default_config("naca1d"))
    path = tmp_path / "cfg.yaml"
    cfg.dump(path)
    assert load_config(path).to_dict() == cfg.to_dict()


@pytest.mark.parametrize("preset", preset_names())
def test_every_preset_has_a_valid_default(preset):
    cfg = parse_config(default_config(preset))
    assert cfg.preset == preset


def test_unknown_preset():
    with pytest.raises(ConfigError) as info:
        build_preset("lorenz")
    assert info.value.path == "problem.preset"
    with pytest.raises(ConfigError):
        default_config("lorenz")


# -- snapshots -------------------------------------------------------------------


def make_snapshot(rng, n=6, N=6, m=2, order=2, p=2):
    mesh = Mesh1D(0, 1, n)
    return Snapshot(
        "ipm",
        p,
        mesh_hash(mesh),
        np.full(n, order),
        np.full(n, mesh.dx),
        mesh.centroids,
        rng.standard_normal((n, m)),
        rng.uniform(0, 1, (n, m)),
        rng.standard_normal((n, N, m)) / 3.0,
    ), mesh


def test_snapshot_round_trip_is_exact(tmp_path, rng):
    snap, mesh = make_snapshot(rng)
    path = tmp_path / "m.txt"
    write_snapshot(path, snap)
    back = read_snapshot(path, mesh=mesh, order=2)
    for name in ("orders", "volumes", "centroids", "E", "Var", "moments"):
        np.testing.assert_array_equal(getattr(back, name), getattr(snap, name))
    assert back.method == "ipm" and back.p == 2


def test_snapshot_order_checks(tmp_path, rng):
    snap, mesh = make_snapshot(rng)
    path = tmp_path / "m.txt"
    write_snapshot(path, snap)
    with pytest.raises(IncompatibleSnapshotError):
        read_snapshot(path, order=3)
    with pytest.raises(IncompatibleSnapshotError):
        read_snapshot(path, order=1)
    low = read_snapshot(path, order=1, truncate=True)
    assert low.moments.shape[1] == 3
    np.testing.assert_array_equal(low.moments, snap.moments[:, :3])


def test_snapshot_mesh_mismatch(tmp_path, rng):
    snap, _ = make_snapshot(rng)
    path = tmp_path / "m.txt"
    write_snapshot(path, snap)
    with pytest.raises(IncompatibleSnapshotError):
        read_snapshot(path, mesh=Mesh1D(0, 2, 6))


def test_truncated_snapshot_file_is_rejected(tmp_path, rng):
    snap, _ = make_snapshot(rng)
    path = tmp_path / "m.txt"
    write_snapshot(path, snap)
    path.write_text("\n".join(path.read_text().splitlines()[:-1]) + "\n")
    with pytest.raises(IncompatibleSnapshotError, match="rows"):
        read_snapshot(path)
    path.write_text("garbage\n")
    with pytest.raises(IncompatibleSnapshotError):
        read_snapshot(path)


def test_compare_with_itself_is_zero(rng):
    snap, _ = make_snapshot(rng)
    rows = compare_snapshots(snap, snap)
    assert all(r["rel_E_error"] == 0.0 and r["rel_Var_error"] == 0.0 for r in rows)
    other, _ = make_snapshot(rng, m=3, N=6)
    with pytest.raises(IncompatibleSnapshotError):
        compare_snapshots(other, snap)


def test_compare_relative_error(rng):
    snap, _ = make_snapshot(rng)
    scaled = Snapshot(snap.method, snap.p, snap.mesh_hash, snap.orders, snap.volumes, snap.centroids, 1.1 * snap.E, snap.Var, snap.moments)
    rows = compare_snapshots(scaled, snap)
    assert rows[0]["rel_E_error"] == pytest.approx(0.1)


# -- experiments -----------------------------------------------------------------


def test_run_experiment_with_reference_tracks_errors():
    cfg = parse_config(BASE)
    ref = run_experiment(cfg).snapshot
    res = run_experiment(cfg, reference=ref)
    assert res.has_errors
    assert res.history[-1]["rel_E_error"] == 0.0
    assert res.summary["method"] == "ipm"


def test_experiment_methods_agree_on_linear_closure():
    # SG and IPM with the quadratic closure are the same scheme
    sg = run_experiment(parse_config(with_changes(method="sg")))
    ipm = run_experiment(parse_config(with_changes(solver__tau=1e-13)))
    np.testing.assert_allclose(sg.snapshot.moments, ipm.snapshot.moments, atol=1e-10)


def test_nonconvergence_propagates():
    data = default_config("burgers_steady")
    data["solver"] = {"max_steps": 3}
    with pytest.raises(NonConvergence):
        run_experiment(parse_config(data))


# -- command line ----------------------------------------------------------------


def test_cli_run_writes_outputs(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(BASE))
    out = tmp_path / "out"
    assert main(["run", "--config", str(path), "--output", str(out)]) == 0
    snap = read_snapshot(out / "moments.txt")
    assert snap.n_cells == 20
    with open(out / "history.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["iteration", "pseudo_time", "wall_seconds", "residual"]
    assert json.loads((out / "summary.json").read_text())["method"] == "ipm"
    assert load_config(out / "config.yaml").to_dict() == parse_config(BASE).to_dict()


def test_cli_reference_and_compare(tmp_path, capsys):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(with_changes(reference={"points": 6, "order": 2})))
    out = tmp_path / "out"
    assert main(["reference", "--config", str(path), "--output", str(out)]) == 0
    assert main(["run", "--config", str(path), "--output", str(out), "--reference", str(out / "reference_moments.txt")]) == 0
    with open(out / "history.csv") as fh:
        assert next(csv.reader(fh))[-2:] == ["rel_E_error", "rel_Var_error"]
    capsys.readouterr()
    assert main(["compare", str(out / "moments.txt"), str(out / "moments.txt")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "component,rel_E_error,rel_Var_error"
    assert lines[1] == "0,0.0,0.0"


def test_cli_input_errors(tmp_path, capsys):
    assert main(["run", "--preset", "lorenz"]) == 2
    assert main(["run"]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump(with_changes(basis__order="x")))
    assert main(["run", "--config", str(bad)]) == 2
    assert "basis.order" in capsys.readouterr().err


def test_cli_snapshot_error(tmp_path, rng):
    snap, _ = make_snapshot(rng)
    a = tmp_path / "a.txt"
    write_snapshot(a, snap)
    other = Snapshot("ipm", 2, "0" * 16, snap.orders, snap.volumes, snap.centroids, snap.E, snap.Var, snap.moments)
    b = tmp_path / "b.txt"
    write_snapshot(b, other)
    assert main(["compare", str(a), str(b)]) == 6


def test_cli_nonconvergence_exit(tmp_path):
    data = default_config("burgers_steady")
    data["solver"] = {"max_steps": 3}
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(data))
    assert main(["run", "--config", str(path), "--output", str(tmp_path / "o")]) == 3


def test_cli_mesh_gen(tmp_path):
    source = tmp_path / "mesh.yaml"
    source.write_text(yaml.safe_dump({"kind": "rectangle", "x0": 0, "x1": 1, "y0": 0, "y1": 1, "nx": 3, "ny": 2}))
    out = tmp_path / "rect.su2"
    assert main(["mesh-gen", str(source), "--output", str(out)]) == 0
    assert load_mesh(out).n_cells == 12
    assert main(["mesh-gen", "sod"]) == 2
    source.write_text(yaml.safe_dump({"kind": "sphere"}))
    assert main(["mesh-gen", str(source)]) == 2


def test_exit_code_mapping():
    from intrusive_uq.errors import AdmissibilityError, IllConditionedHessian, UQError

    assert exit_code(ConfigError("x")) == 2
    assert exit_code(MeshError("x")) == 2
    assert exit_code(IllConditionedHessian("x")) == 4
    assert exit_code(AdmissibilityError("x")) == 5
    assert exit_code(UQError("x")) == 7
