import dataclasses

import pytest
from hypothesis import given, strategies as st

from gridflex.catalog import (
    CatalogFormatError, ResourceRole, ResourceSpec, UnknownResourceError,
    builtin_catalog, catalog_csv, lookup, read_catalog, validate_spec, write_catalog,
)


def test_catalog_has_fourteen_valid_entries():
    specs = builtin_catalog()
    assert len(specs) == 14
    assert [s.role for s in specs].count(ResourceRole.GENERATOR) == 5
    assert [s.role for s in specs].count(ResourceRole.LOAD) == 5
    assert [s.role for s in specs].count(ResourceRole.STORAGE) == 4
    for s in specs:
        assert validate_spec(s) == [], s.name
    assert len({s.name for s in specs}) == 14


def test_lookup_ice():
    ice = lookup("ICE")
    assert ice.role is ResourceRole.GENERATOR
    assert (ice.p_min, ice.p_max, ice.ramp, ice.startup_minutes) == (1.8, 18, 3.6, 5)


def test_lookup_battery():
    b = lookup("Battery")
    assert b.role is ResourceRole.STORAGE
    assert (b.p_min, b.p_max, b.energy_cap) == (0.1, 100, 400)
    assert (b.charge_eff, b.discharge_eff, b.ramp, b.startup_minutes) == (0.9, 0.97, 6000, 0)


def test_lookup_data_center_converted_from_kw():
    dc = lookup("Data Center")
    assert dc.role is ResourceRole.LOAD
    assert dc.p_min == pytest.approx(1.25)
    assert dc.p_max == pytest.approx(5.0)
    assert dc.ramp == pytest.approx(0.33333, abs=1e-5)
    assert dc.startup_minutes == 15


@pytest.mark.parametrize("alias,name", [("ice", "ICE"), ("data-center", "Data Center"),
                                        ("solar", "Solar PV"), ("PHS", "Pumped Hydro")])
def test_lookup_is_forgiving(alias, name):
    assert lookup(alias).name == name


def test_lookup_unknown():
    with pytest.raises(UnknownResourceError, match="Nonexistent"):
        lookup("Nonexistent")


def test_validate_reports_inverted_range():
    bad = dataclasses.replace(lookup("ICE"), p_min=10.0, p_max=5.0)
    assert any("p_min ≤ p_max" in m for m in validate_spec(bad))


def test_validate_reports_role_field_mismatch():
    bad = dataclasses.replace(lookup("ICE"), energy_cap=10.0)
    assert any("role/field mismatch" in m for m in validate_spec(bad))


def test_storage_without_capacity_is_invalid():
    bad = dataclasses.replace(lookup("Battery"), energy_cap=None)
    assert validate_spec(bad)


def test_catalog_file_round_trip(tmp_path):
    path = tmp_path / "catalog.csv"
    write_catalog(builtin_catalog(), path)
    assert read_catalog(path) == builtin_catalog()
    assert path.read_text() == catalog_csv(builtin_catalog())


def test_catalog_file_error_names_location(tmp_path):
    text = catalog_csv(builtin_catalog()).splitlines()
    cells = text[2].split(",")
    cells[2] = "abc"
    text[2] = ",".join(cells)
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(CatalogFormatError, match="line 3"):
        read_catalog(path)


@given(st.floats(0.01, 100.0))
def test_scaling_keeps_spec_valid(factor):
    for s in builtin_catalog():
        scaled = s.scaled(factor)
        assert validate_spec(scaled) == []
        assert scaled.rated_power == pytest.approx(s.rated_power * factor)
        assert scaled.startup_minutes == s.startup_minutes
        assert scaled.charge_eff == s.charge_eff


def test_spec_is_immutable():
    with pytest.raises(dataclasses.FrozenInstanceError):
        lookup("ICE").p_max = 1.0  # type: ignore[misc]


def test_resource_spec_direct_construction():
    s = ResourceSpec(ResourceRole.LOAD, "toy", 0.0, 2.0, 1.0, 0)
    assert s.rated_power == 2.0 and not s.is_storage
