import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsusc import io
from fsusc.cli import main
from fsusc.errors import CheckpointError, ConfigError
from fsusc.grid import make_mesh
import oracles

SINGLE_CELL = {
    "mesh": {"dims": [1, 1, 1], "h": 1.0},
    "material": {"A": 0.0, "K": 0.2, "alpha": 0.5, "ell": [0.0, 0.0, 0.7]},
    "equilibrium": {"m0": [0, 0, 1]},
    "sweep": {"frequencies": [0.5, 2.0, 0.1], "directions": ["x", "z"], "tol": 1e-12,
              "preconditioner": "none"},
}

SMALL = {
    "mesh": {"dims": [2, 2, 2], "h": 1.0},
    "material": {"A": 0.7, "K": 0.3, "alpha": 0.4},
    "equilibrium": {"m0": [0, 0, 1]},
    "sweep": {"omega_min": 0.1, "omega_max": 10.0, "count": 4, "tol": 1e-8},
}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


# ---- configuration

def test_defaults_and_frequency_grid():
    cfg = io.parse_config(json.dumps(SMALL))
    assert cfg.mesh.shape.kind == "box"
    assert cfg.sweep.preconditioner == "circulant"
    w = cfg.sweep.frequency_list()
    assert len(w) == 4 and w[0] == pytest.approx(10.0) and w[-1] == pytest.approx(0.1)
    assert io.parse_config(json.dumps(SINGLE_CELL)).sweep.frequency_list() == [2.0, 0.5, 0.1]


def test_cylinder_shape():
    cfg = dict(SMALL, mesh={"dims": [6, 6, 2], "h": 1.0, "shape": {"kind": "cylinder_z", "radius": 2.5}})
    mesh = io.parse_config(json.dumps(cfg)).build_mesh()
    assert mesh.n_interior == oracles.brute_cylinder_count((6, 6, 2), 2.5)


@pytest.mark.parametrize("patch,needle", [
    ({"material": {"A": 1, "K": 0, "alpha": 0.5, "colour": 1}}, "material.colour"),
    ({"material": {"A": 1, "K": 0, "alpha": -0.5}}, "material.alpha"),
    ({"mesh": {"dims": [0, 1, 1], "h": 1}}, "mesh.dims"),
    ({"mesh": {"dims": [1, 1, 1], "h": -1}}, "mesh.h"),
    ({"sweep": {"frequencies": []}}, "empty frequency list"),
    ({"sweep": {"frequencies": [1.0, 0.0]}}, "sweep"),
    ({"sweep": {"omega_min": 5.0, "omega_max": 1.0}}, "sweep"),
    ({"equilibrium": {"m0": [0, 0, 0]}}, "equilibrium.m0"),
])
def test_invalid_configs_are_named(patch, needle):
    with pytest.raises(ConfigError) as err:
        io.parse_config(json.dumps(dict(SMALL, **patch)))
    assert needle in str(err.value)


def test_bad_json_reports_position():
    with pytest.raises(ConfigError, match="line 1"):
        io.parse_config("{\"mesh\": ")


_finite = st.floats(0.01, 100, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6)), _finite, _finite,
       st.floats(0, 10), st.floats(0.01, 2), st.booleans(), st.sampled_from(["none", "laplacian", "circulant"]))
def test_config_roundtrip(dims, h, A, K, alpha, cyl, kind):
    shape = {"kind": "cylinder_z", "radius": 1.0} if cyl else {"kind": "box"}
    raw = {
        "mesh": {"dims": list(dims), "h": h, "shape": shape},
        "material": {"A": A, "K": K, "alpha": alpha},
        "sweep": {"omega_min": 0.5, "omega_max": 3.0, "preconditioner": kind},
    }
    cfg = io.parse_config(json.dumps(raw))
    again = io.parse_config(io.dump_config(cfg))
    assert again == cfg
    assert again.param_hash() == cfg.param_hash()


def test_param_hash_tracks_physics_only():
    a = io.parse_config(json.dumps(SMALL))
    b = io.parse_config(json.dumps(dict(SMALL, sweep={"frequencies": [3.0]})))
    c = io.parse_config(json.dumps(dict(SMALL, material={"A": 0.71, "K": 0.3, "alpha": 0.4})))
    assert a.param_hash() == b.param_hash()
    assert a.param_hash() != c.param_hash()


# ---- checkpoint

def _checkpoint(tmp_path, rng):
    mesh = make_mesh((3, 2, 2), 0.5)
    m = rng.normal(size=mesh.shape + (3,))
    m /= np.linalg.norm(m, axis=-1, keepdims=True)
    beta = rng.normal(size=mesh.shape)
    path = tmp_path / "eq.fsusc"
    io.write_checkpoint(path, mesh, m, beta, b"\x07" * 32, 3.5e-10, 42)
    return path, mesh, m, beta


def test_checkpoint_roundtrip(tmp_path, rng):
    path, mesh, m, beta = _checkpoint(tmp_path, rng)
    data = io.read_checkpoint(path)
    assert np.array_equal(data["m"], m) and np.array_equal(data["beta"], beta)
    assert data["dims"] == mesh.dims and data["h"] == 0.5
    assert data["param_hash"] == b"\x07" * 32
    assert data["residual"] == 3.5e-10 and data["steps"] == 42


def test_checkpoint_corruption_detected(tmp_path, rng):
    path, *_ = _checkpoint(tmp_path, rng)
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0x10
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="checksum mismatch"):
        io.read_checkpoint(path)


def test_checkpoint_truncated_and_foreign(tmp_path, rng):
    path, *_ = _checkpoint(tmp_path, rng)
    path.write_bytes(path.read_bytes()[:-20])
    with pytest.raises(CheckpointError):
        io.read_checkpoint(path)
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(CheckpointError):
        io.read_checkpoint(path)
    with pytest.raises(CheckpointError):
        io.read_checkpoint(tmp_path / "missing.fsusc")


# ---- command line

def _read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def test_cli_relax_and_sweep_single_cell(tmp_path, capsys):
    cfg = _write(tmp_path, SINGLE_CELL)
    out = tmp_path / "out"
    assert main(["relax", "--config", cfg, "--out", str(out)]) == 0
    assert "steps 0" in capsys.readouterr().out
    data = io.read_checkpoint(out / "equilibrium.fsusc")
    assert np.array_equal(data["m"][0, 0, 0], [0, 0, 1.0])
    assert data["beta"][0, 0, 0] == pytest.approx(0.7 - 1 / 3)

    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    it = _read_csv(out / "iterations.csv")
    assert it[0] == ["omega", "iterations_x", "error_x", "iterations_z", "error_z"]
    assert [float(r[0]) for r in it[1:]] == [2.0, 0.5, 0.1]
    assert all(r[3] == "0" for r in it[1:])
    chi = _read_csv(out / "chi.csv")
    assert chi[0][:3] == ["omega", "chi_xx_re", "chi_xx_im"]
    want = oracles.single_cell_chi_xx(0.5, 0.5, 0.2, 0.7)
    got = complex(float(chi[2][1]), float(chi[2][2]))
    assert abs(got - want) <= 1e-10 * abs(want)
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["completed_rows"] == 3 and not meta["interrupted"]
    assert (out / "residuals.csv").exists()


def test_cli_rerun_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "out"
    assert main(["relax", "--config", cfg, "--out", str(out)]) == 0
    snapshots = []
    for workers in ("1", "3"):
        assert main(["sweep", "--config", cfg, "--out", str(out), "--workers", workers]) == 0
        snapshots.append({n: (out / n).read_bytes() for n in ("iterations.csv", "chi.csv", "residuals.csv")})
    assert snapshots[0] == snapshots[1]


def test_cli_stale_checkpoint(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "out"
    assert main(["relax", "--config", cfg, "--out", str(out)]) == 0
    changed = _write(tmp_path, dict(SMALL, material={"A": 0.8, "K": 0.3, "alpha": 0.4}), "changed.json")
    assert main(["sweep", "--config", changed, "--out", str(out)]) == 1
    assert "stale checkpoint" in capsys.readouterr().err


def test_cli_usage_errors(tmp_path, capsys):
    bad_alpha = _write(tmp_path, dict(SMALL, material={"A": 1, "K": 0, "alpha": -1}), "a.json")
    assert main(["relax", "--config", bad_alpha]) == 2
    assert "material.alpha" in capsys.readouterr().err
    empty = _write(tmp_path, dict(SMALL, sweep={"frequencies": []}), "b.json")
    assert main(["sweep", "--config", empty, "--out", str(tmp_path / "o")]) == 2
    assert "empty frequency list" in capsys.readouterr().err
    unknown = _write(tmp_path, dict(SMALL, bogus=1), "c.json")
    assert main(["relax", "--config", unknown]) == 2
    assert "bogus" in capsys.readouterr().err
    assert main(["relax", "--config", str(tmp_path / "nope.json")]) == 2
    ok = _write(tmp_path, SMALL, "d.json")
    assert main(["sweep", "--config", ok, "--out", str(tmp_path / "o"), "--workers", "0"]) == 2
    with pytest.raises(SystemExit):
        main(["sweep", "--config", ok, "--precond", "magic"])


def test_cli_missing_checkpoint(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "empty")]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_svd_identity(tmp_path):
    cfg = _write(tmp_path, SMALL)
    assert main(["svd", "--config", cfg, "--out", str(tmp_path), "--identity"]) == 0
    rows = _read_csv(tmp_path / "sigma.csv")
    assert len(rows) == 1 + 24
    assert all(float(r[-1]) == 1.0 for r in rows[1:])


def test_cli_svd_bench(tmp_path, bench):
    cfg = {
        "mesh": {"dims": [4, 4, 4], "h": 2.5e-7},
        "material": {"A": 0.88e-10, "K": 0.57e-2, "alpha": 0.5},
        "sweep": {"frequencies": [452.0]},
    }
    path = _write(tmp_path, cfg)
    rc = io.parse_config(json.dumps(cfg))
    mesh = rc.build_mesh()
    io.write_checkpoint(tmp_path / "equilibrium.fsusc", mesh, bench.eq.m, bench.eq.beta.beta,
                        rc.param_hash(), bench.eq.residual, bench.eq.steps_taken)
    assert main(["svd", "--config", path, "--out", str(tmp_path)]) == 0
    sigma = np.array([float(r[-1]) for r in _read_csv(tmp_path / "sigma.csv")[1:]])
    assert sigma.shape == (192,)
    assert np.all(np.diff(sigma) <= 0)
    assert main(["svd", "--config", path, "--out", str(tmp_path), "--restricted", "--precond", "circulant"]) == 0
    assert len(_read_csv(tmp_path / "sigma.csv")) == 1 + 128
