"""Diagonal qutrit spectra, linear entropy and the named state families."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from qutrit_contextuality.errors import InvariantError, OutOfRangeError, UnsupportedArcError

ORDER_TOL = 1e-12
SUM_TOL = 1e-12
S_TOL = 1e-12

# Orthonormal pair spanning the plane sum(x) = 0; U_DIR points at (1, 0, 0).
U_DIR = np.array([2.0, -1.0, -1.0]) / math.sqrt(6.0)
W_DIR = np.array([0.0, 1.0, -1.0]) / math.sqrt(2.0)
CENTER = np.full(3, 1.0 / 3.0)


def _check_simplex(lam: tuple[float, float, float]) -> None:
    if len(lam) != 3 or not all(math.isfinite(x) for x in lam):
        raise InvariantError(f"expected three finite eigenvalues, got {lam!r}")
    if min(lam) < -ORDER_TOL:
        raise InvariantError(f"negative eigenvalue in {lam!r}")
    if abs(sum(lam) - 1.0) > SUM_TOL:
        raise InvariantError(f"eigenvalues sum to {sum(lam)!r}, not 1")


@dataclass(frozen=True)
class QutritSpectrum:
    """Eigenvalues of a diagonal qutrit state, in decreasing order."""

    lam: tuple[float, float, float]

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lam)
        object.__setattr__(self, "lam", lam)
        _check_simplex(lam)
        if lam[0] < lam[1] - ORDER_TOL or lam[1] < lam[2] - ORDER_TOL:
            raise InvariantError(f"eigenvalues not in decreasing order: {lam!r}")

    def as_array(self) -> np.ndarray:
        return np.array(self.lam)

    @classmethod
    def pure(cls) -> "QutritSpectrum":
        return cls((1.0, 0.0, 0.0))

    @classmethod
    def maximally_mixed(cls) -> "QutritSpectrum":
        return cls((1 / 3, 1 / 3, 1 / 3))


@dataclass(frozen=True)
class DiagonalState:
    """Diagonal state with no ordering requirement (simplex points)."""

    lam: tuple[float, float, float]

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lam)
        object.__setattr__(self, "lam", lam)
        _check_simplex(lam)

    def as_array(self) -> np.ndarray:
        return np.array(self.lam)


class ArcId(str, Enum):
    AC = "AC"
    CD = "CD"
    AD = "AD"
    EF = "EF"
    FG = "FG"
    EG = "EG"

    @property
    def inequality(self) -> str:
        return "kcbs" if self in (ArcId.AC, ArcId.CD, ArcId.AD) else "kk"


# Entropy intervals on which arc_state yields a valid ordered spectrum.
STATE_INTERVALS = {
    ArcId.AC: (0.0, 0.75),
    ArcId.CD: (0.75, 1.0),
    ArcId.AD: (0.0, 1.0),
    ArcId.EF: (0.0, 2.0 / 3.0),
    ArcId.FG: (2.0 / 3.0, 1.0),
    ArcId.EG: (0.0, 1.0),
}

# arc_cq is a plain formula; CD is evaluable on the whole interval for plotting.
CQ_INTERVALS = {**STATE_INTERVALS, ArcId.CD: (0.0, 1.0)}


def _check_s(s: float, interval: tuple[float, float], what: str) -> float:
    lo, hi = interval
    if not (lo - S_TOL <= s <= hi + S_TOL):
        raise OutOfRangeError(f"s={s!r} outside [{lo:.6g}, {hi:.6g}] for {what}")
    return min(max(s, lo), hi)


def linear_entropy(rho: QutritSpectrum | DiagonalState) -> float:
    """Normalised linear entropy ``(3/2)(1 - sum(lambda_i^2))``."""
    return 1.5 * (1.0 - sum(x * x for x in rho.lam))


def arc_state(arc: ArcId | str, s: float) -> QutritSpectrum:
    """Spectrum of the named family at linear entropy ``s``."""
    arc = ArcId(arc)
    s = _check_s(s, STATE_INTERVALS[arc], f"arc {arc.value}")
    r = math.sqrt(max(0.0, 1.0 - s))
    if arc is ArcId.AC:
        q = math.sqrt(max(0.0, 1.0 - 4.0 * s / 3.0))
        lam = ((1 + q) / 2, (1 - q) / 2, 0.0)
    elif arc is ArcId.CD:
        lam = ((1 + r) / 3, (1 + r) / 3, (1 - 2 * r) / 3)
    elif arc in (ArcId.AD, ArcId.EG):
        lam = ((1 + 2 * r) / 3, (1 - r) / 3, (1 - r) / 3)
    elif arc is ArcId.EF:
        q = math.sqrt(max(0.0, 9.0 - 12.0 * s))
        lam = ((3 + q) / 6, (3 - q) / 6, 0.0)
    else:
        # sqrt(3(1-s)) in place of the printed sqrt(4-3s): only this
        # choice keeps lambda_3 >= 0 and reproduces entropy s.
        p = math.sqrt(3.0 * (1.0 - s))
        lam = ((1 + p) / 3, 1 / 3, (1 - p) / 3)
    return QutritSpectrum(lam)


def arc_cq(arc: ArcId | str, s: float) -> float:
    """Closed-form maximal contextuality along a named arc."""
    arc = ArcId(arc)
    if arc is ArcId.AC:
        raise UnsupportedArcError(
            "arc AC has no closed form; trace it with the numerical optimizer "
            "(optimizer.trace_arc_numeric)"
        )
    s = _check_s(s, CQ_INTERVALS[arc], f"arc {arc.value}")
    r = math.sqrt(max(0.0, 1.0 - s))
    if arc is ArcId.CD:
        return (2 * r + 5) / 3
    if arc is ArcId.AD:
        return ((3 * math.sqrt(5) - 5) * r + 5) / 3
    if arc is ArcId.EF:
        return (math.sqrt(max(0.0, 9 - 12 * s)) + 57) / 18
    if arc is ArcId.FG:
        return 2 * r / (3 * math.sqrt(3)) + 3
    return (r + 9) / 3


def iso_entropy_radius(s: float) -> float:
    return math.sqrt(max(0.0, 2.0 * (1.0 - s) / 3.0))


def iso_entropy_theta_max(s: float) -> float:
    """Largest angle (from the lambda_2 = lambda_3 ray) keeping the spectrum valid.

    The ordered chamber spans angles ``[0, pi/3]``; for ``s < 3/4`` the
    lambda_3 >= 0 constraint cuts it short.
    """
    if s >= 0.75:
        return math.pi / 3
    bound = 1.0 / (2.0 * math.sqrt(1.0 - s))
    return max(0.0, math.asin(min(1.0, bound)) - math.pi / 6)


def iso_entropy_family(s: float, t: float) -> QutritSpectrum:
    """Ordered spectrum at entropy ``s``, parametrised by ``t`` in [0, 1].

    ``t = 0`` is the lambda_2 = lambda_3 boundary; ``t = 1`` is lambda_3 = 0
    when ``s < 3/4`` and lambda_1 = lambda_2 otherwise.
    """
    s = _check_s(s, (0.0, 1.0), "iso-entropy family")
    t = _check_s(t, (0.0, 1.0), "iso-entropy parameter t")
    r = iso_entropy_radius(s)
    theta = t * iso_entropy_theta_max(s)
    lam = CENTER + r * (math.cos(theta) * U_DIR + math.sin(theta) * W_DIR)
    if s < 0.75 and t == 1.0:
        lam[2] = 0.0
        lam /= lam.sum()
    lam = np.maximum(lam, 0.0)
    if theta == math.pi / 3:
        lam[0] = lam[1] = 0.5 * (lam[0] + lam[1])
    return QutritSpectrum(tuple(lam))
