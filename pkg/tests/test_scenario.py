import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridflex.scenario import (
    NetLoadProfile, ProfileError, ProfileKind, builtin_profile, gen_energy_reserve,
    gen_intermittency, gen_peak_shaving, load_profile_csv, write_profile_csv,
)

INTERMITTENCY_DTS = [1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 30, 40, 60]


def _blocks(values):
    edges = np.flatnonzero(np.diff(values)) + 1
    return [seg[0] for seg in np.split(values, edges)]


def test_intermittency_seed_42_shape_and_extremes():
    prof = gen_intermittency(42, 1)
    assert prof.steps == 120
    assert prof.values.max() == 0.5
    assert prof.values.min() == -0.5


def test_intermittency_is_deterministic():
    a, b = gen_intermittency(42, 1), gen_intermittency(42, 1)
    assert a.values.tobytes() == b.values.tobytes()
    assert not np.array_equal(gen_intermittency(43).values, a.values)


@given(st.integers(0, 2**32 - 1), st.sampled_from(INTERMITTENCY_DTS))
@settings(max_examples=60, deadline=None)
def test_intermittency_invariants(seed, dt):
    prof = gen_intermittency(seed, dt)
    v = prof.values
    assert prof.horizon_minutes == 120
    assert np.all(np.abs(v) <= 0.5)
    assert v.max() == 0.5 and v.min() == -0.5
    signs = np.sign([b for b in _blocks(v) if b != 0])
    assert np.all(signs[1:] != signs[:-1])


def test_intermittency_waveform_independent_of_dt():
    fine = gen_intermittency(7, 1).values
    coarse = gen_intermittency(7, 5).values
    assert np.array_equal(fine[::5], coarse)


@pytest.mark.parametrize("dt", [7, 24, 120, 0, -5])
def test_intermittency_rejects_bad_dt(dt):
    with pytest.raises(ProfileError):
        gen_intermittency(0, dt)


def test_peak_shaving_hourly_values():
    v = gen_peak_shaving(60).values
    assert v.size == 24
    assert v[12] == -0.5
    assert v[19] == 0.5
    assert v[2] == 0.0


@pytest.mark.parametrize("dt", [1, 5, 15, 60, 240, 720])
def test_peak_shaving_bounded_and_hits_extremes(dt):
    v = gen_peak_shaving(dt).values
    assert v.size * dt == 1440
    assert np.all(np.abs(v) <= 0.5)
    assert v.min() == -0.5
    assert gen_peak_shaving(dt) == gen_peak_shaving(dt)


def test_peak_shaving_daily_energy():
    # The trough integrates to -2 p.u.·h and the peak to +1.5 p.u.·h.
    v = gen_peak_shaving(1).values
    assert v.sum() / 60.0 == pytest.approx(-0.5, abs=1e-12)


@pytest.mark.parametrize("dt", [7, 1000, 0])
def test_peak_shaving_rejects_bad_dt(dt):
    with pytest.raises(ProfileError):
        gen_peak_shaving(dt)


def test_energy_reserve_hourly():
    v = gen_energy_reserve(60).values
    assert v.tolist() == [0.5] * 6 + [0.0] * 6 + [-0.5] * 6 + [0.0] * 2


def test_energy_reserve_boundary_at_noon():
    v = gen_energy_reserve(1).values
    assert v.size == 1200
    assert v[719] == 0.0 and v[720] == -0.5
    assert v[359] == 0.5 and v[360] == 0.0
    assert v[1079] == -0.5 and v[1080] == 0.0


@pytest.mark.parametrize("dt", [7, 240, 0])
def test_energy_reserve_rejects_bad_dt(dt):
    with pytest.raises(ProfileError):
        gen_energy_reserve(dt)


def test_load_simple_csv(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("minute,net_pu\n0,0.1\n1,0.2\n")
    prof = load_profile_csv(path)
    assert prof.dt_minutes == 1
    assert prof.values.tolist() == [0.1, 0.2]
    assert prof.kind is ProfileKind.CUSTOM


def test_load_rejects_non_uniform_spacing(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("minute,net_pu\n0,0.1\n5,0.2\n7,0.3\n")
    with pytest.raises(ProfileError, match="row 3"):
        load_profile_csv(path)


def test_load_rejects_non_numeric_with_location(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("minute,net_pu\n0,0.1\n1,abc\n")
    with pytest.raises(ProfileError, match="row 2, column 2"):
        load_profile_csv(path)


def test_load_rejects_empty_file(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("")
    with pytest.raises(ProfileError):
        load_profile_csv(path)


@pytest.mark.parametrize("kind,dt", [("intermittency", 1), ("peak-shaving", 15),
                                     ("energy-reserve", 1), ("energy-reserve", 60)])
def test_csv_round_trip(tmp_path, kind, dt):
    prof = builtin_profile(kind, dt, seed=3)
    path = tmp_path / "p.csv"
    write_profile_csv(prof, path)
    back = load_profile_csv(path)
    assert back == prof
    assert back.values.tobytes() == prof.values.tobytes()


def test_profile_values_are_read_only():
    prof = NetLoadProfile(1, np.zeros(3))
    with pytest.raises(ValueError):
        prof.values[0] = 1.0


def test_custom_kind_cannot_be_generated():
    with pytest.raises(ProfileError):
        builtin_profile("custom")
