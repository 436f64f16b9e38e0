import pytest

from conftest import synth_convergence, write_csv
from kinfigs.schema import SchemaError, load_convergence, load_mass, load_table


def test_load_table_roundtrip(tmp_path):
    path = tmp_path / "convergence.csv"
    synth_convergence(path, eps_values=(0.5,))
    data = load_convergence(path)
    assert len(data["k"]) == 8
    assert data["eps"][0] == 0.5


def test_missing_column_named(tmp_path):
    path = tmp_path / "mass.csv"
    write_csv(path, ["eps", "n", "t"], [("0.5", "0", "0.0")])  # truncated: no dm
    with pytest.raises(SchemaError, match="missing required column 'dm'"):
        load_mass(path)


def test_missing_file_named(tmp_path):
    with pytest.raises(SchemaError, match="not found"):
        load_table(tmp_path / "nope.csv", ("a",))


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(SchemaError, match="empty file"):
        load_table(path, ("a", "b"))


def test_non_numeric_flagged(tmp_path):
    path = tmp_path / "mass.csv"
    write_csv(path, ["eps", "n", "t", "dm"], [("0.5", "0", "0.0", "soon")])
    with pytest.raises(SchemaError, match="dm"):
        load_mass(path)


def test_optional_columns_surface(tmp_path):
    path = tmp_path / "mass.csv"
    write_csv(path, ["eps", "parareal", "adaptation", "n", "t", "dm"],
              [("0.5", "on", "off", "0", "0.0", "1e-14")])
    data = load_mass(path)
    assert list(data["parareal"]) == ["on"]
    assert list(data["adaptation"]) == ["off"]
