import csv
import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridflex.metrics import DeficitStats, rank_resources, report_csv, report_text, stats_from_series

_series = st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=300)


def test_constant_offset():
    s = stats_from_series(np.full(120, 0.1), 1)
    assert s.avg_abs == pytest.approx(0.1)
    assert s.net_energy_abs == pytest.approx(0.2)
    assert s.rms == pytest.approx(0.1)
    assert s.horizon_hours == 2.0


def test_antisymmetric_pair():
    s = stats_from_series([0.1, -0.1], 60)
    assert s.avg_abs == pytest.approx(0.1)
    assert s.net_energy_signed == 0.0
    assert s.net_energy_abs == pytest.approx(0.2)
    assert s.rms == pytest.approx(0.1)


def test_all_zero():
    s = stats_from_series(np.zeros(10), 15)
    assert (s.avg_abs, s.net_energy_signed, s.net_energy_abs, s.rms) == (0, 0, 0, 0)


def test_empty_rejected():
    with pytest.raises(ValueError):
        stats_from_series([], 1)


@given(_series, st.sampled_from([1, 5, 15, 60]))
def test_identities(x, dt):
    s = stats_from_series(x, dt)
    assert s.rms >= s.avg_abs - 1e-15
    assert abs(s.net_energy_signed) <= s.net_energy_abs + 1e-12
    assert s.net_energy_abs == pytest.approx(s.avg_abs * s.horizon_hours, rel=1e-12, abs=1e-15)


def _st(rms, net=0.0):
    return DeficitStats(0.0, 0.0, net, rms, 1.0)


def test_rank_by_rms():
    assert [n for n, _ in rank_resources({"A": _st(0.2), "B": _st(0.1)})] == ["B", "A"]


def test_rank_tie_break_on_net_energy():
    assert [n for n, _ in rank_resources({"A": _st(0.1, 0.3), "B": _st(0.1, 0.2)})] == ["B", "A"]


def test_rank_tie_break_on_name():
    assert [n for n, _ in rank_resources({"Zed": _st(0.1), "Abe": _st(0.1)})] == ["Abe", "Zed"]


def test_rank_needs_two():
    with pytest.raises(ValueError):
        rank_resources({"A": _st(0.1)})


def test_reports():
    ranked = rank_resources({"A": _st(0.2), "B": _st(0.1)})
    rows = list(csv.reader(io.StringIO(report_csv(ranked, "x"))))
    assert rows[0][:3] == ["scenario", "rank", "resource"]
    assert [r[2] for r in rows[1:]] == ["B", "A"]
    assert float(rows[1][-1]) == 0.1
    text = report_text(ranked, "title")
    assert text.splitlines()[0] == "title" and "Root Mean Squared Deficit" in text
