import numpy as np
import pytest

from odebound.cli import main
from odebound.io import read_constants


def run(*argv):
    return main([str(a) for a in argv])


def test_bound_population_low_loss(tmp_path, capsys):
    assert run("bound", "--model", "population", "--scale", "1e-5", "--out", tmp_path, "--no-figures") == 0
    c = read_constants(tmp_path / "constants.txt")
    assert (c["p"], c["j"], c["converged"]) == ("0", "1", "1")
    header = (tmp_path / "orders.csv").read_text().splitlines()[0]
    assert header == "t,eta_0,eta_1"
    assert (tmp_path / "bound_curve.csv").read_text().startswith("t,bound,valid_flag\n")


def test_bound_cosmology_exact(tmp_path):
    assert run("bound", "--model", "cosmology", "--kind", "exact", "--eps", "1e-8", "--out", tmp_path) == 0
    c = read_constants(tmp_path / "constants.txt")
    assert int(c["j"]) >= 0 and float(c["tail_sup"]) < 1e-8
    assert (tmp_path / "bound.png").stat().st_size > 0


def test_bound_invalid_domain(tmp_path, capsys):
    assert run("bound", "--grid", "1,0,101", "--out", tmp_path) == 1
    assert "must exceed" in capsys.readouterr().err


def test_usage_errors_exit_one(capsys):
    assert run("bound", "--kind", "nope") == 1
    assert run("frobnicate") == 1


def test_non_convergence_flagged(tmp_path):
    code = run("bound", "--model", "cosmology", "--kind", "tight", "--scale", "3", "--max-order", "6",
               "--out", tmp_path, "--no-figures")
    assert code == 2
    assert read_constants(tmp_path / "constants.txt")["converged"] == "0"


def test_partial_validity_flagged(tmp_path):
    cfg = tmp_path / "r.cfg"
    cfg.write_text("model = riccati\nA = 0\nB = 0\nC = 1\nt0 = 0\nu0 = 1\nt_end = 3\nkind = exact\norder = 2\nscale = 0.4\n")
    assert run("bound", "--config", cfg, "--out", tmp_path / "o", "--no-figures") == 2
    text = (tmp_path / "o" / "bound_curve.csv").read_text().splitlines()
    assert text[-1].endswith(",,0")


def test_surrogate_then_bound_from_csv(tmp_path):
    assert run("surrogate", "--model", "population", "--scale", "1e-4", "--seed", "2", "--out", tmp_path) == 0
    assert run("bound", "--surrogate-csv", tmp_path / "surrogate.csv", "--kind", "loose", "--order", "2",
               "--out", tmp_path / "b", "--no-figures") == 0
    c = read_constants(tmp_path / "b" / "constants.txt")
    assert (c["kind"], c["j"], c["p"]) == ("loose", "2", "none")


def test_oracle_subcommand(tmp_path):
    assert run("oracle", "--model", "cosmology", "--grid", "1001", "--out", tmp_path) == 0
    data = np.loadtxt(tmp_path / "oracle.csv", delimiter=",", skiprows=1)
    assert data.shape == (1001, 3) and data[0, 1] == 6.91


def test_env_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv("ODEBOUND_OUT", str(tmp_path / "env"))
    assert run("oracle", "--grid", "11") == 0
    assert (tmp_path / "env" / "oracle.csv").exists()


@pytest.mark.parametrize("figure", ["approx", "exact"])
def test_experiment_outputs(tmp_path, figure):
    code = run("experiment", figure, "--out", tmp_path)
    assert code in (0, 2)
    summary = (tmp_path / f"{figure}_summary.csv").read_text().splitlines()
    assert summary[0].startswith("experiment,seed,rung,scale,loss,bound,P,J")
    assert len(summary) == 1 + (6 if figure == "approx" else 9)
    assert (tmp_path / f"{figure}.png").exists()
    assert len(list(tmp_path.glob(f"{figure}_rung*.csv"))) == len(summary) - 1


def test_experiment_approx_lists_orders(tmp_path):
    run("experiment", "approx", "--out", tmp_path, "--no-figures")
    rows = [r.split(",") for r in (tmp_path / "approx_summary.csv").read_text().splitlines()[1:]]
    tight = [(r[6], r[7]) for r in rows if r[5] == "tight"]
    assert tight == [("1", "2"), ("0", "1"), ("0", "1")]


def test_experiment_scales_flag(tmp_path):
    assert run("experiment", "exact", "--scales", "1e-3,1e-5", "--out", tmp_path, "--no-figures") in (0, 2)
    assert len((tmp_path / "exact_summary.csv").read_text().splitlines()) == 7
    assert run("experiment", "exact", "--scales", "1e-5,1e-3", "--out", tmp_path) == 1
