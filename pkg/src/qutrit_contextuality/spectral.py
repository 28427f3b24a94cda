"""Spectral analysis of the overall measurement matrix.

Covers the trace inequality ``Tr[AB] <= a.b`` and its doubly stochastic
witness, the ``(m1, m2)`` curves traced by optimal measurement sets, their
finite-difference slopes, and the contextuality surface of a fixed set over
all diagonal states.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from qutrit_contextuality.errors import InvariantError, UnsupportedArcError
from qutrit_contextuality.graphs import ExclusivityGraph
from qutrit_contextuality.measurements import (
    MeasurementSet,
    align_to_state,
    contextuality_value,
    overall_matrix,
)
from qutrit_contextuality.optimizer import (
    OptimizerConfig,
    isotropic_representation,
    optimize_measurements,
)
from qutrit_contextuality.states import (
    ArcId,
    DiagonalState,
    QutritSpectrum,
    STATE_INTERVALS,
    arc_state,
    linear_entropy,
)

DESCENDING_TOL = 1e-12
UNITARY_TOL = 1e-10
STOCHASTIC_TOL = 1e-12
DUPLICATE_TOL = 1e-6
FLAT_TOL = 1e-12


@dataclass(frozen=True)
class SpectralPoint:
    m1: float
    m2: float
    m3: float
    s: float | None = None

    def __post_init__(self):
        if not (self.m1 >= self.m2 - 1e-9 and self.m2 >= self.m3 - 1e-9 and self.m3 >= -1e-9):
            raise InvariantError(f"spectrum not descending and non-negative: {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.m1, self.m2, self.m3)


@dataclass(frozen=True, eq=False)
class StochasticWitness:
    """``w_ij = |u_ij|^2`` for a unitary ``u``; doubly stochastic."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if np.any(w < 0):
            raise InvariantError("witness has negative entries")
        err = self.max_deviation(w)
        if err > STOCHASTIC_TOL * max(1, w.shape[0]):
            raise InvariantError(f"witness is not doubly stochastic (deviation {err:.3e})")
        object.__setattr__(self, "w", w)

    @staticmethod
    def max_deviation(w: np.ndarray) -> float:
        return float(max(np.max(np.abs(w.sum(axis=0) - 1)), np.max(np.abs(w.sum(axis=1) - 1))))


def _check_descending(x: np.ndarray, name: str) -> None:
    if np.any(np.diff(x) > DESCENDING_TOL):
        raise InvariantError(f"{name} must be in decreasing order: {x!r}")


def trace_inequality_check(a_diag, b_diag, u) -> tuple[float, float, StochasticWitness]:
    """Evaluate both sides of ``Tr[diag(a) U diag(b) U^dagger] <= a.b``.

    Returns ``(lhs, rhs, witness)`` where ``lhs`` is computed from the
    matrices directly and ``witness`` is the doubly stochastic ``|u_ij|^2``
    with ``lhs == a @ W @ b``.
    """
    a = np.asarray(a_diag, dtype=float)
    b = np.asarray(b_diag, dtype=float)
    u = np.asarray(u)
    n = len(a)
    if b.shape != (n,) or u.shape != (n, n):
        raise InvariantError(f"shape mismatch: a {a.shape}, b {b.shape}, u {u.shape}")
    _check_descending(a, "a")
    _check_descending(b, "b")
    if np.max(np.abs(u.conj().T @ u - np.eye(n))) > UNITARY_TOL:
        raise InvariantError("u is not orthogonal/unitary within 1e-10")
    lhs = float(np.real(np.trace(np.diag(a) @ u @ np.diag(b) @ u.conj().T)))
    rhs = float(a @ b)
    return lhs, rhs, StochasticWitness(np.abs(u) ** 2)


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix from the QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


@dataclass
class LemmaReport:
    trials: int
    dims: tuple[int, ...]
    max_margin: float
    max_witness_error: float
    max_identity_error: float
    violations: int
    permutation_check: bool
    tolerance: float = 1e-10

    @property
    def passed(self) -> bool:
        return (
            self.violations == 0
            and self.max_witness_error <= self.tolerance
            and self.max_identity_error <= self.tolerance
            and self.permutation_check
        )

    def summary(self) -> str:
        lines = [
            f"trials={self.trials} dims={list(self.dims)}",
            f"max(lhs - rhs) = {self.max_margin:.3e} (violations beyond {self.tolerance:g}: {self.violations})",
            f"max doubly-stochastic deviation = {self.max_witness_error:.3e}",
            f"max |lhs - a W b| = {self.max_identity_error:.3e}",
            f"permutation vertices maximised at identity: {self.permutation_check}",
            "PASS" if self.passed else "FAIL",
        ]
        return "\n".join(lines)


def _sorted_desc(rng, n):
    return np.sort(rng.standard_normal(n))[::-1]


def permutation_vertices_check(n: int, rng: np.random.Generator, draws: int = 5) -> bool:
    """Over every permutation matrix, ``Tr[AB]`` is a permuted dot product maximised by the identity."""
    ok = True
    for _ in range(draws):
        a, b = _sorted_desc(rng, n), _sorted_desc(rng, n)
        best = -math.inf
        best_perm = None
        for perm in itertools.permutations(range(n)):
            p = np.eye(n)[:, perm]
            lhs, _, _ = trace_inequality_check(a, b, p)
            # P diag(b) P^T puts b[perm^-1] on the diagonal.
            ok &= abs(lhs - float(a @ (p @ b))) <= 1e-12
            if lhs > best + 1e-12:
                best, best_perm = lhs, perm
        ok &= best_perm == tuple(range(n)) and abs(best - float(a @ b)) <= 1e-12
    return bool(ok)


def lemma_suite(trials: int, seed: int = 0, dims=(2, 3, 5, 9), unitary: str = "haar") -> LemmaReport:
    """Randomised check of the trace inequality; trial ``k`` uses ``dims[k % len(dims)]``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    dims = tuple(int(d) for d in dims)
    if not dims or min(dims) < 1:
        raise ValueError("dims must be positive integers")
    margin = -math.inf
    witness_err = 0.0
    ident_err = 0.0
    violations = 0
    tol = 1e-10
    for k in range(trials):
        n = dims[k % len(dims)]
        rng = np.random.default_rng([seed, k])
        a, b = _sorted_desc(rng, n), _sorted_desc(rng, n)
        if unitary == "haar":
            u = random_orthogonal(n, rng)
        elif unitary == "identity":
            u = np.eye(n)
        elif unitary == "reverse":
            u = np.eye(n)[::-1]
        else:
            raise ValueError(f"unknown unitary kind {unitary!r}")
        lhs, rhs, w = trace_inequality_check(a, b, u)
        margin = max(margin, lhs - rhs)
        violations += lhs > rhs + tol
        witness_err = max(witness_err, StochasticWitness.max_deviation(w.w))
        ident_err = max(ident_err, abs(lhs - float(a @ w.w @ b)))
    perm_rng = np.random.default_rng([seed, trials])
    perm_ok = all(permutation_vertices_check(n, perm_rng) for n in sorted(set(dims)) if n <= 5)
    return LemmaReport(trials, dims, margin, witness_err, ident_err, int(violations), perm_ok, tol)


# -- spectral curves -----------------------------------------------------------


def optimal_spectrum(rho: QutritSpectrum, g: ExclusivityGraph, cfg: OptimizerConfig | None = None):
    """Descending spectrum of ``M`` for the optimal set of ``rho`` and the optimal value.

    On the maximally mixed state every feasible set is optimal; the point
    reported there is the most isotropic one the optimizer finds.
    """
    cfg = cfg or OptimizerConfig()
    lam = rho.lam
    if lam[0] - lam[2] <= FLAT_TOL:
        ms = isotropic_representation(g, cfg)
        value = contextuality_value(rho, ms)
    else:
        result = optimize_measurements(rho, g, cfg)
        ms, value = result.best_set, result.value
    return overall_matrix(align_to_state(ms)).spectrum, value


def spectral_curve(
    g: ExclusivityGraph, state_family, cfg: OptimizerConfig | None = None
) -> list[SpectralPoint]:
    """Spectra of optimal sets along a family of states, sorted by ``m1``.

    Points closer than 1e-6 in every component are collapsed, keeping the
    one from the earliest state.
    """
    points: list[SpectralPoint] = []
    for rho in state_family:
        (m1, m2, m3), _ = optimal_spectrum(rho, g, cfg)
        p = SpectralPoint(m1, m2, m3, linear_entropy(rho))
        if not any(max(abs(x - y) for x, y in zip(p.as_tuple(), q.as_tuple())) <= DUPLICATE_TOL for q in points):
            points.append(p)
    return sorted(points, key=lambda p: (p.m1, -p.m2))


def default_family(inequality: str, samples: int) -> list[QutritSpectrum]:
    """States whose optimal sets sweep the whole ``(m1, m2)`` curve.

    KCBS: arc AC (its optimal spectra run between the two endpoints).
    KK: the upper boundary, arc EF then arc FG, ending at the maximally
    mixed state.
    """
    inequality = inequality.lower()
    if inequality == "kcbs":
        lo, hi = STATE_INTERVALS[ArcId.AC]
        return [arc_state(ArcId.AC, float(s)) for s in np.linspace(lo, hi, samples)]
    if inequality == "kk":
        split = STATE_INTERVALS[ArcId.EF][1]
        return [
            arc_state(ArcId.EF if s <= split else ArcId.FG, float(s)) for s in np.linspace(0.0, 1.0, samples)
        ]
    raise ValueError(f"unknown inequality {inequality!r}")


@dataclass
class SlopeReport:
    points: list[SpectralPoint]
    dm2_dm1: list[float]
    dm3_dm1: list[float]
    identity_error: float
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def summary(self) -> str:
        lines = [
            f"points: {len(self.points)}",
            f"m1 range: [{self.points[0].m1:.12g}, {self.points[-1].m1:.12g}]",
            f"dm2/dm1 range: [{min(self.dm2_dm1):.6g}, {max(self.dm2_dm1):.6g}]",
            f"dm3/dm1 range: [{min(self.dm3_dm1):.6g}, {max(self.dm3_dm1):.6g}]",
            f"max |dm3/dm1 + 1 + dm2/dm1| = {self.identity_error:.3e}",
        ]
        lines += [f"{'PASS' if ok else 'FAIL'}  {name}" for name, ok in self.checks.items()]
        return "\n".join(lines)


def curve_slope_analysis(points: list[SpectralPoint], inequality: str | None = None) -> SlopeReport:
    """Finite-difference slopes between consecutive points (sorted by ``m1``).

    With ``inequality`` set, the report also records the sign claims for
    that graph: KCBS slopes below -1 with dm3/dm1 > 0; KK with m2 constant
    and dm3/dm1 <= 0.
    """
    if len(points) < 2:
        raise ValueError(f"slope analysis needs at least 2 distinct points, got {len(points)}")
    pts = sorted(points, key=lambda p: p.m1)
    dm2, dm3 = [], []
    for p, q in zip(pts, pts[1:]):
        dx = q.m1 - p.m1
        if dx <= 0:
            raise ValueError("points must have strictly increasing m1 (m2 is not a function of m1)")
        dm2.append((q.m2 - p.m2) / dx)
        dm3.append((q.m3 - p.m3) / dx)
    ident = max(abs(c + 1 + b) for b, c in zip(dm2, dm3))
    checks = {"dm3/dm1 = -(1 + dm2/dm1) within 1e-6": ident <= 1e-6}
    if inequality is not None and inequality.lower() == "kcbs":
        checks["dm2/dm1 < -1 for every step"] = all(x < -1 for x in dm2)
        checks["dm3/dm1 > 0 for every step"] = all(x > 0 for x in dm3)
    elif inequality is not None and inequality.lower() == "kk":
        checks["|dm2/dm1| <= 1e-4 for every step"] = all(abs(x) <= 1e-4 for x in dm2)
        checks["dm3/dm1 <= 0 for every step"] = all(x <= 0 for x in dm3)
    return SlopeReport(pts, dm2, dm3, ident, checks)


def optimal_slope_condition(arc: ArcId | str, s: float) -> float:
    """Stationarity slope (arc AC) or the sign of dC_q/dm1 (arcs CD, AD).

    AC: ``-(1 + q) / (1 - q)`` with ``q = sqrt(1 - 4s/3)``, ``-inf`` at ``s = 0``.
    CD returns -1 (the minimal-m1 endpoint is optimal), AD returns +1.
    """
    arc = ArcId(arc)
    if arc not in (ArcId.AC, ArcId.CD, ArcId.AD):
        raise UnsupportedArcError(f"slope condition is defined for arcs AC, CD, AD, not {arc.value}")
    lo, hi = STATE_INTERVALS[arc] if arc is not ArcId.CD else (0.0, 1.0)
    if not lo - 1e-12 <= s <= hi + 1e-12:
        raise InvariantError(f"s={s!r} outside [{lo}, {hi}] for arc {arc.value}")
    if arc is ArcId.CD:
        return -1.0
    if arc is ArcId.AD:
        return 1.0
    q = math.sqrt(max(0.0, 1.0 - 4.0 * s / 3.0))
    if q >= 1.0:
        return -math.inf
    return -(1.0 + q) / (1.0 - q)


def diagonal_violation_surface(ms: MeasurementSet, grid: int) -> list[tuple[float, float, float]]:
    """``(lambda1, lambda2, C_q)`` over the barycentric grid with ``grid`` divisions.

    Covers the whole simplex, not just ordered spectra.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    out = []
    for i in range(grid + 1):
        for j in range(grid + 1 - i):
            l1, l2 = i / grid, j / grid
            l3 = max(0.0, 1.0 - l1 - l2)
            out.append((l1, l2, contextuality_value(DiagonalState((l1, l2, l3)), ms)))
    return out
