from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import POINT_B_MINOR, SQRT5
from qutrit_contextuality.errors import InvariantError, OutOfRangeError, UnsupportedArcError
from qutrit_contextuality.measurements import align_to_state, contextuality_value, table_1a, table_1b, table_2
from qutrit_contextuality.states import (
    ArcId,
    DiagonalState,
    QutritSpectrum,
    STATE_INTERVALS,
    arc_cq,
    arc_state,
    iso_entropy_family,
    iso_entropy_theta_max,
    linear_entropy,
)

unit = st.floats(min_value=0.0, max_value=1.0)


def in_interval(arc):
    lo, hi = STATE_INTERVALS[arc]
    return st.floats(min_value=lo, max_value=hi)


def test_linear_entropy_examples():
    assert linear_entropy(QutritSpectrum.pure()) == 0.0
    assert linear_entropy(QutritSpectrum.maximally_mixed()) == pytest.approx(1.0, abs=1e-15)
    assert linear_entropy(QutritSpectrum((0.5, 0.5, 0.0))) == 0.75


@pytest.mark.parametrize(
    "lam",
    [(0.2, 0.5, 0.3), (1.1, 0.0, -0.1), (0.5, 0.4, 0.0), (math.nan, 0.5, 0.5), (0.5, 0.5)],
)
def test_spectrum_rejects_invalid(lam):
    with pytest.raises(InvariantError):
        QutritSpectrum(lam)


def test_spectrum_ordering_tolerance():
    QutritSpectrum((0.5, 0.5 + 5e-13, -5e-13 + 0.0))
    with pytest.raises(InvariantError):
        QutritSpectrum((0.5 - 1e-9, 0.5 + 1e-9, 0.0))


def test_diagonal_state_is_unordered():
    assert DiagonalState((0.0, 0.0, 1.0)).lam == (0.0, 0.0, 1.0)
    with pytest.raises(InvariantError):
        DiagonalState((0.5, 0.6, 0.0))


def test_arc_inequality_tag():
    assert {a for a in ArcId if a.inequality == "kcbs"} == {ArcId.AC, ArcId.CD, ArcId.AD}
    assert {a for a in ArcId if a.inequality == "kk"} == {ArcId.EF, ArcId.FG, ArcId.EG}


def test_arc_state_examples():
    assert arc_state(ArcId.AD, 0.0).lam == pytest.approx((1.0, 0.0, 0.0), abs=1e-15)
    assert arc_state("CD", 0.75).lam == pytest.approx((0.5, 0.5, 0.0), abs=1e-15)
    assert arc_state(ArcId.FG, 2 / 3).lam == pytest.approx((2 / 3, 1 / 3, 0.0), abs=1e-15)
    assert arc_state(ArcId.AC, 0.0).lam == (1.0, 0.0, 0.0)
    assert arc_state(ArcId.AC, 0.75).lam == pytest.approx((0.5, 0.5, 0.0), abs=1e-15)


@pytest.mark.parametrize("arc", list(ArcId))
def test_arc_state_entropy_property(arc):
    @given(in_interval(arc))
    def check(s):
        assert linear_entropy(arc_state(arc, s)) == pytest.approx(s, abs=1e-10)

    check()


def test_printed_fg_family_is_inconsistent():
    # The uncorrected triple (1 + sqrt(4 - 3s), 1, 1 - sqrt(4 - 3s)) / 3 has a
    # negative third entry on [2/3, 1) and the wrong entropy.
    for s in np.linspace(2 / 3, 0.99, 10):
        p = math.sqrt(4 - 3 * s)
        lam = ((1 + p) / 3, 1 / 3, (1 - p) / 3)
        assert lam[2] < 0
        assert abs(1.5 * (1 - sum(x * x for x in lam)) - s) > 1e-3


def test_arcs_meet_at_f():
    assert np.allclose(arc_state(ArcId.EF, 2 / 3).lam, arc_state(ArcId.FG, 2 / 3).lam, atol=1e-12, rtol=0)


@pytest.mark.parametrize("arc, s", [(ArcId.CD, 0.5), (ArcId.FG, 0.5), (ArcId.EF, 0.7), (ArcId.AC, 0.8), (ArcId.AD, -0.1)])
def test_arc_state_out_of_range(arc, s):
    with pytest.raises(OutOfRangeError):
        arc_state(arc, s)


def test_arc_cq_examples():
    assert arc_cq(ArcId.AD, 0.0) == pytest.approx(SQRT5, abs=1e-15)
    assert arc_cq(ArcId.EF, 0.0) == pytest.approx(10 / 3, abs=1e-15)
    assert arc_cq(ArcId.FG, 2 / 3) == pytest.approx(29 / 9, abs=1e-15)
    assert arc_cq(ArcId.EF, 2 / 3) == pytest.approx(29 / 9, abs=1e-15)
    assert arc_cq(ArcId.CD, 0.75) == pytest.approx(2.0, abs=1e-15)


def test_arc_cq_endpoint_agreement():
    assert arc_cq(ArcId.AD, 1.0) == arc_cq(ArcId.CD, 1.0) == pytest.approx(5 / 3, abs=1e-15)
    assert arc_cq(ArcId.EG, 1.0) == arc_cq(ArcId.FG, 1.0) == pytest.approx(3.0, abs=1e-15)


def test_arc_cq_cd_defined_on_whole_interval():
    assert arc_cq(ArcId.CD, 0.0) == pytest.approx(7 / 3)


def test_arc_cq_ac_unsupported():
    with pytest.raises(UnsupportedArcError, match="trace_arc_numeric"):
        arc_cq(ArcId.AC, 0.3)


# Oracle: each closed form is the value of the corresponding fixed table on
# its arc, i.e. a state-spectrum dot product with a known M spectrum.
TABLE_ORACLES = {
    ArcId.CD: lambda: table_1a(),
    ArcId.AD: lambda: table_1b(),
    ArcId.EF: lambda: align_to_state(table_2()),
    ArcId.FG: lambda: align_to_state(table_2()),
    ArcId.EG: lambda: align_to_state(table_2()),
}


@pytest.mark.parametrize("arc", list(TABLE_ORACLES))
def test_arc_cq_matches_table_value(arc):
    ms = TABLE_ORACLES[arc]()
    lo, hi = STATE_INTERVALS[arc]
    for s in np.linspace(lo, hi, 11):
        assert arc_cq(arc, s) == pytest.approx(contextuality_value(arc_state(arc, s), ms), abs=1e-12)


@given(unit, unit)
def test_iso_entropy_family_valid(s, t):
    rho = iso_entropy_family(s, t)
    assert linear_entropy(rho) == pytest.approx(s, abs=1e-10)


@given(st.floats(min_value=1e-6, max_value=1.0 - 1e-6))
def test_iso_entropy_family_boundaries(s):
    first = iso_entropy_family(s, 0.0).lam
    last = iso_entropy_family(s, 1.0).lam
    assert first[1] == pytest.approx(first[2], abs=1e-12)
    if s < 0.75:
        assert last[2] == 0.0
    else:
        assert last[0] == pytest.approx(last[1], abs=1e-12)


def test_iso_entropy_family_examples():
    for t in (0.0, 0.3, 1.0):
        assert iso_entropy_family(0.0, t).lam == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)
        assert iso_entropy_family(1.0, t).lam == pytest.approx((1 / 3, 1 / 3, 1 / 3), abs=1e-15)
    assert iso_entropy_family(0.75, 1.0).lam == pytest.approx((0.5, 0.5, 0.0), abs=1e-12)
    assert iso_entropy_theta_max(0.9) == pytest.approx(math.pi / 3)


def test_iso_entropy_family_contains_arcs():
    # t = 0 is arc AD/EG; t = 1 is AC (s < 3/4) or CD (s >= 3/4).
    for s in (0.1, 0.5, 0.9):
        assert iso_entropy_family(s, 0.0).lam == pytest.approx(arc_state(ArcId.AD, s).lam, abs=1e-12)
    assert iso_entropy_family(0.4, 1.0).lam == pytest.approx(arc_state(ArcId.AC, 0.4).lam, abs=1e-12)
    assert iso_entropy_family(0.9, 1.0).lam == pytest.approx(arc_state(ArcId.CD, 0.9).lam, abs=1e-12)


def test_iso_entropy_out_of_range():
    with pytest.raises(OutOfRangeError):
        iso_entropy_family(1.2, 0.5)
    with pytest.raises(OutOfRangeError):
        iso_entropy_family(0.5, -0.5)


def test_point_b_minor_constant():
    assert POINT_B_MINOR == pytest.approx(1.381966011250105)
