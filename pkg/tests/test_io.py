import numpy as np
import pytest

from odebound import TimeGrid, perturbed_oracle, preset_population
from odebound.approx import BoundCurve
from odebound.io import (
    ConfigError,
    CsvFormatError,
    build_config,
    read_constants,
    read_key_values,
    read_surrogate_csv,
    write_constants,
    write_curve_csv,
    write_surrogate_csv,
)

GRID = TimeGrid(0.0, 1.0, 101)


@pytest.fixture
def factory_surrogate():
    return perturbed_oracle(preset_population(), GRID, scale=1e-3, seed=3)


def _write(path, text):
    path.write_text(text)
    return path


def _rows(n=101, fmt="{t:.17g},{v},{dv}"):
    return "\n".join(fmt.format(t=t, v=1.0, dv=0.0) for t in GRID.t[:n])


def test_round_trip_bit_identical(tmp_path, factory_surrogate):
    path = write_surrogate_csv(tmp_path / "s.csv", factory_surrogate)
    back = read_surrogate_csv(path, GRID)
    assert np.array_equal(back.v.values, factory_surrogate.v.values)
    assert np.array_equal(back.dv.values, factory_surrogate.dv.values)
    assert back.provenance["kind"] == "external_csv"


def test_missing_dv_column_named(tmp_path):
    path = _write(tmp_path / "s.csv", "t,v\n" + _rows(fmt="{t:.17g},{v}"))
    with pytest.raises(CsvFormatError, match="dv") as err:
        read_surrogate_csv(path, GRID)
    assert err.value.line == 1


def test_nan_row_reports_line(tmp_path):
    rows = _rows().splitlines()
    rows[41] = f"{GRID.t[41]:.17g},nan,0.0"
    path = _write(tmp_path / "s.csv", "t,v,dv\n" + "\n".join(rows))
    with pytest.raises(CsvFormatError, match=":43:") as err:
        read_surrogate_csv(path, GRID)
    assert err.value.line == 43


def test_non_monotone_t(tmp_path):
    rows = _rows().splitlines()
    rows[10], rows[11] = rows[11], rows[10]
    path = _write(tmp_path / "s.csv", "t,v,dv\n" + "\n".join(rows))
    with pytest.raises(CsvFormatError, match="increasing") as err:
        read_surrogate_csv(path, GRID)
    assert err.value.line == 13


def test_row_count_mismatch(tmp_path):
    path = _write(tmp_path / "s.csv", "t,v,dv\n" + _rows(50))
    with pytest.raises(CsvFormatError, match="expected 101 data rows"):
        read_surrogate_csv(path, GRID)


def test_off_grid_nodes(tmp_path):
    rows = _rows().splitlines()
    rows[5] = f"{GRID.t[5] + 1e-9:.17g},1.0,0.0"
    path = _write(tmp_path / "s.csv", "t,v,dv\n" + "\n".join(rows))
    with pytest.raises(CsvFormatError, match="grid node"):
        read_surrogate_csv(path, GRID)


def test_non_numeric_field(tmp_path):
    rows = _rows().splitlines()
    rows[0] = "0.0,abc,0"
    path = _write(tmp_path / "s.csv", "t,v,dv\n" + "\n".join(rows))
    with pytest.raises(CsvFormatError, match=":2:"):
        read_surrogate_csv(path, GRID)


def test_curve_csv_masks_invalid_nodes(tmp_path):
    g = TimeGrid(0.0, 1.0, 3)
    curve = BoundCurve("exact", g, [0.1, 0.2, 0.3], J=0, valid=[True, True, False])
    text = write_curve_csv(tmp_path / "c.csv", curve).read_text()
    assert text.splitlines() == ["t,bound,valid_flag", "0,0.10000000000000001,1", "0.5,0.20000000000000001,1", "1,,0"]


def test_constants_round_trip(tmp_path):
    write_constants(tmp_path / "c.txt", {"R": 0.1, "K": 1.0, "P": 0, "J": 3, "converged": 1})
    assert read_constants(tmp_path / "c.txt") == {"r": "0.10000000000000001", "k": "1", "p": "0", "j": "3", "converged": "1"}


# -- configuration ---------------------------------------------------------------


def test_config_file_and_overrides(tmp_path):
    path = _write(tmp_path / "run.cfg", "# comment\nmodel = cosmology\nkind = exact\neps = 1e-6\ngrid = -1,0,501\n")
    values = read_key_values(path)
    values["eps"] = "1e-9"
    cfg = build_config(values)
    assert (cfg.model, cfg.kind, cfg.eps, cfg.t_start, cfg.t_end, cfg.n_points) == ("cosmology", "exact", 1e-9, -1.0, 0.0, 501)


def test_config_errors_aggregated():
    with pytest.raises(ConfigError) as err:
        build_config({"t_start": "1", "t_end": "0", "kind": "huge", "seed": "x", "colour": "red"})
    assert len(err.value.problems) == 4


def test_config_riccati_needs_coefficients():
    with pytest.raises(ConfigError, match="C"):
        build_config({"model": "riccati", "a": "0", "b": "1", "t0": "0", "u0": "1", "t_end": "1"})


def test_default_out_from_environment(monkeypatch):
    monkeypatch.setenv("ODEBOUND_OUT", "/tmp/elsewhere")
    assert build_config({}).out == "/tmp/elsewhere"


def test_bad_config_line(tmp_path):
    with pytest.raises(ConfigError, match=":2:"):
        read_key_values(_write(tmp_path / "bad.cfg", "model = population\njust words\n"))
