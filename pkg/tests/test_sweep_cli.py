import math

import numpy as np
import pytest

from qhe_fcs import cli
from qhe_fcs.ann import NetworkModel
from qhe_fcs.engine import EngineParams
from qhe_fcs.fcs import FcsConfig, affinity, cumulants
from qhe_fcs.oracles import detailed_balance_T_l
from qhe_fcs.sweep import TUR_MAP_BASE, Axis, SweepSpec, read_grid, run_sweep, write_grid

CFG = FcsConfig()


@pytest.fixture
def model_file(tmp_path):
    lo = np.array([0.2, 0.7, 0.1, 0.0, 0.0, 0.0])
    hi = np.array([0.7, 1.9, 1.0, 2 * math.pi, 1.0, 1.0])
    path = tmp_path / "model.txt"
    NetworkModel.initialise([6, 3, 1], lo, hi, seed=2).save(path)
    return path


def tiny_spec(**kw):
    return SweepSpec(Axis("phi", 0.3, 1.3, 2), Axis("p_h", 0.1, 0.9, 2), dict(TUR_MAP_BASE), **kw)


def test_two_step_sweep_matches_points():
    rows = run_sweep(tiny_spec())
    assert [r[:2] for r in rows] == [(0.3, 0.1), (0.3, 0.9), (1.3, 0.1), (1.3, 0.9)]
    for x, y, v, status in rows:
        assert status == "ok"
        assert v == cumulants(EngineParams(**TUR_MAP_BASE, phi=x, p_h=y), CFG).fano


def test_backends_share_format(tmp_path, model_file):
    files = []
    for backend in ("exact", "model"):
        spec = tiny_spec(quantity="tur_product", backend=backend, model_path=str(model_file))
        path = tmp_path / f"{backend}.txt"
        write_grid(path, spec, run_sweep(spec), CFG)
        files.append(path)
    a, b = (f.read_text().splitlines() for f in files)
    assert len(a) == len(b)
    assert [ln.split("=")[0] for ln in a[:4]] == [ln.split("=")[0] for ln in b[:4]]
    assert a[6] == b[6] == "phi p_h tur_product status"
    ra, rb = read_grid(files[0]), read_grid(files[1])
    assert [r[:2] for r in ra] == [r[:2] for r in rb]


def test_model_backend_tur_uses_exact_affinity(model_file):
    spec = tiny_spec(quantity="tur_product", backend="model", model_path=str(model_file))
    F_rows = run_sweep(SweepSpec(spec.x, spec.y, spec.fixed, "F", "model", str(model_file)))
    for (x, y, tur, _), (_, _, F, _) in zip(run_sweep(spec), F_rows):
        p = EngineParams(**TUR_MAP_BASE, phi=x, p_h=y)
        assert tur == pytest.approx(F * affinity(p, CFG), rel=1e-14)


def test_grid_roundtrip(tmp_path):
    rows = [(0.0, 1.0, 2.5, "ok"), (0.0, 2.0, math.nan, "zero-flux")]
    write_grid(tmp_path / "g.txt", tiny_spec(), rows)
    back = read_grid(tmp_path / "g.txt")
    assert back[0] == rows[0] and back[1][3] == "zero-flux" and math.isnan(back[1][2])


@pytest.mark.parametrize("kw", [
    dict(quantity="nope"), dict(backend="model"), dict(backend="model", quantity="c_d1", model_path="m"),
])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        tiny_spec(**kw)
    with pytest.raises(ValueError):
        SweepSpec(Axis("phi", 0, 1, 2), Axis("phi", 0, 1, 2))


def parse(out):
    return dict(line.split("=", 1) for line in out.strip().splitlines())


def test_cli_point(capsys):
    assert cli.main(["point", "--phi", "0", "--ph", "0.4", "--pc", "0.5"]) == 0
    kv = parse(capsys.readouterr().out)
    assert kv["status"] == "ok" and kv["fcs.N"] == "512"
    assert abs(float(kv["c_g1"])) < 1e-8 * abs(float(kv["c_d1"]))
    assert abs(float(kv["c_g2"])) < 1e-8 * abs(float(kv["c_d1"]))


def test_cli_point_balanced(capsys):
    T_l = detailed_balance_T_l(EngineParams(0.6, 1.6, 1.0, A0=0.0))
    assert cli.main(["point", "--A0", "0", "--Tl", repr(T_l)]) == 0
    kv = parse(capsys.readouterr().out)
    assert kv["status"] == "zero-flux" and kv["fano"] == "nan"
    assert abs(float(kv["affinity"])) < 1e-12 and abs(float(kv["c_d1"])) < 1e-9


def test_cli_point_invalid(capsys):
    assert cli.main(["point", "--Tc0", "0.6", "--Th0", "0.5"]) == 2
    assert capsys.readouterr().err.startswith("error=invalid-params")


def test_cli_generate_train_eval(tmp_path, capsys):
    data = tmp_path / "d.csv"
    assert cli.main(["generate", "--count", "24", "--seed", "1", "--out", str(data)]) == 0
    first = data.read_text()
    assert cli.main(["generate", "--count", "24", "--seed", "1", "--out", str(data)]) == 0
    assert data.read_text() == first
    config = tmp_path / "cfg.txt"
    config.write_text("hidden = 3\nmax_epochs = 4  # short\n")
    model, report = tmp_path / "m.txt", tmp_path / "r.txt"
    assert cli.main(["train", "--data", str(data), "--config", str(config), "--seed", "2",
                     "--out", str(model), "--report", str(report)]) == 0
    assert NetworkModel.load(model).sizes == [6, 3, 1]
    assert report.read_text().startswith("epoch train_mse val_mse")
    capsys.readouterr()
    assert cli.main(["eval", "--data", str(data), "--model", str(model)]) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[0].split() == ["training", "validation", "test"]
    assert [ln.split()[0] for ln in table[1:]] == ["MAE", "MAPE(%)", "RMSE", "R^2", "MSE"]


def test_cli_sweep(tmp_path):
    out = tmp_path / "s.txt"
    assert cli.main(["sweep", "--x", "phi:0:1:2", "--y", "p_h:0:1:2", "--quantity", "affinity",
                     "--out", str(out)]) == 0
    rows = read_grid(out)
    assert len(rows) == 4 and all(s == "ok" for *_, s in rows)


def test_cli_verify_subset(capsys):
    assert cli.main(["verify", "--only", "trace-conservation", "periodicity"]) == 0
    assert "2/2 invariants passed" in capsys.readouterr().out


def test_config_rejects_unknown_key(tmp_path):
    config = tmp_path / "c.txt"
    config.write_text("bogus=1\n")
    with pytest.raises(SystemExit):
        cli.read_config(config)
    config.write_text("N=1024\nrichardson=false\nsigma=0.01\n")
    fcs_kw, train_kw = cli.read_config(config)
    assert fcs_kw == {"N": 1024, "richardson": False} and train_kw == {"sigma": 0.01}
