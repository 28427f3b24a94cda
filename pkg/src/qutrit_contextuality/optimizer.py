"""Multistart penalised ascent over real orthonormal representations.

The inner problem maximises ``sum_i <v_i|diag(lambda)|v_i>`` over unit
vectors that are orthogonal on every edge of the exclusivity graph.  Each
start follows an escalating penalty schedule and is then polished by a
Newton iteration on the exact KKT system.  Each start draws its initial
vectors from its own stream seeded by ``(seed, start_index)`` and runs
independently, so its trajectory does not depend on which other starts are
evaluated alongside it.

The outer problems (``mcms_upper``/``mcms_lower``) search the one-parameter
family of ordered spectra at fixed linear entropy.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from qutrit_contextuality import _kernels
from qutrit_contextuality.errors import InfeasibleError, InvariantError
from qutrit_contextuality.graphs import ExclusivityGraph
from qutrit_contextuality.measurements import (
    MeasurementSet,
    contextuality_value,
    max_edge_residual,
)
from qutrit_contextuality.states import (
    ArcId,
    QutritSpectrum,
    STATE_INTERVALS,
    arc_state,
    iso_entropy_family,
)

# Starts whose pre-polish value is this close to the best are polished.
POLISH_WINDOW = 1e-6
# Pre-polish residual above which a start is treated as infeasible.
POLISH_RESIDUAL = 1e-4
POLISH_ITERS = 40
CLUSTER_TOL = 1e-10
POLISH_MAX_MOVE = 1e-3
POLISH_KKT_TOL = 1e-10
LBFGS_MEMORY = 24


@dataclass(frozen=True)
class OptimizerConfig:
    starts: int = 64
    seed: int = 0
    penalty_schedule: tuple[float, ...] = tuple(10.0**k for k in range(1, 9))
    max_iters: int = 2000
    objective_tol: float = 1e-12
    feasibility_tol: float = 1e-7

    def __post_init__(self):
        object.__setattr__(self, "penalty_schedule", tuple(float(x) for x in self.penalty_schedule))
        if int(self.starts) != self.starts or self.starts < 1:
            raise InvariantError(f"starts must be a positive integer, got {self.starts!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvariantError(f"max_iters must be a positive integer, got {self.max_iters!r}")
        sched = self.penalty_schedule
        if not sched or sched[0] <= 0 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise InvariantError(f"penalty schedule must be positive and strictly increasing: {sched!r}")
        if self.objective_tol <= 0 or self.feasibility_tol <= 0:
            raise InvariantError("tolerances must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["penalty_schedule"] = list(self.penalty_schedule)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvariantError(f"unknown optimizer config fields: {sorted(unknown)}")
        data = dict(data)
        if "penalty_schedule" in data:
            data["penalty_schedule"] = tuple(data["penalty_schedule"])
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "OptimizerConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    best_set: MeasurementSet
    value: float
    max_edge_residual: float
    start_index: int
    state: QutritSpectrum | None = field(default=None)


# -- penalised objective -----------------------------------------------------


class _Incidence:
    """Dense edge/vertex incidence used to scatter per-edge terms to vertices."""

    def __init__(self, graph: ExclusivityGraph):
        e = np.asarray(graph.edges, dtype=int).reshape(-1, 2) - 1
        self.ei, self.ej = e[:, 0], e[:, 1]
        self.first = np.zeros((graph.n, len(e)))
        self.second = np.zeros((graph.n, len(e)))
        self.first[self.ei, np.arange(len(e))] = 1.0
        self.second[self.ej, np.arange(len(e))] = 1.0
        self.max_degree = int((self.first + self.second).sum(axis=1).max()) if graph.n else 0

    def dots(self, x: np.ndarray) -> np.ndarray:
        return np.sum(x[..., self.ei, :] * x[..., self.ej, :], axis=-1)

    def scatter(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        """``out_i = sum_{e=(i,j)} w_e x_j + sum_{e=(j,i)} w_e x_j``."""
        return self.first @ (w[..., None] * x[..., self.ej, :]) + self.second @ (
            w[..., None] * x[..., self.ei, :]
        )


def penalized_objective(x: np.ndarray, lam: np.ndarray, graph: ExclusivityGraph, mu: float) -> np.ndarray:
    """``sum_i x_i^T diag(lam) x_i - mu * sum_edges (x_i . x_j)^2``; batched over leading axes."""
    inc = _Incidence(graph)
    return _state_value(x, lam) - mu * np.sum(inc.dots(x) ** 2, axis=-1)


def penalized_gradient(x: np.ndarray, lam: np.ndarray, graph: ExclusivityGraph, mu: float) -> np.ndarray:
    """Euclidean gradient of :func:`penalized_objective` with respect to ``x``."""
    inc = _Incidence(graph)
    return 2.0 * lam * x - 2.0 * mu * inc.scatter(x, inc.dots(x))


def _state_value(x, lam):
    return np.sum(np.sum(x * x * lam, axis=-1), axis=-1)


def _frame_value(x):
    m = np.swapaxes(x, -1, -2) @ x
    return -np.sum(np.sum(m * m, axis=-1), axis=-1)


def _initial_vectors(n: int, seed: int, indices) -> np.ndarray:
    """Uniform points on the sphere, one independent stream per start index."""
    out = np.empty((len(indices), n, 3))
    for row, k in enumerate(indices):
        rng = np.random.default_rng([seed, int(k)])
        out[row] = rng.standard_normal((n, 3))
    out /= np.linalg.norm(out, axis=-1, keepdims=True)
    return out.reshape(len(indices), 3 * n)


def _edge_arrays(graph: ExclusivityGraph) -> tuple[np.ndarray, np.ndarray]:
    e = np.asarray(graph.edges, dtype=np.int64).reshape(-1, 2) - 1
    return np.ascontiguousarray(e[:, 0]), np.ascontiguousarray(e[:, 1])


def _run_stages(graph, cfg, lam, kind, indices) -> np.ndarray:
    """Penalty-schedule endpoints, shape ``(len(indices), n, 3)``."""
    ei, ej = _edge_arrays(graph)
    x0 = _initial_vectors(graph.n, cfg.seed, list(indices))
    out = _kernels.run_starts(
        x0,
        graph.n,
        np.asarray(lam, dtype=float),
        ei,
        ej,
        np.asarray(cfg.penalty_schedule, dtype=float),
        kind,
        int(cfg.max_iters),
        float(cfg.objective_tol),
        LBFGS_MEMORY,
    )
    return out.reshape(len(x0), graph.n, 3)


def multistart_raw(
    rho: QutritSpectrum, graph: ExclusivityGraph, cfg: OptimizerConfig, indices=None
) -> np.ndarray:
    """Penalty-stage endpoints for the given start indices, before polishing."""
    indices = range(cfg.starts) if indices is None else indices
    return _run_stages(graph, cfg, rho.as_array(), _kernels.STATE, indices)


def _pick_best(graph, cfg, candidates, score) -> tuple[int, np.ndarray, float, float]:
    best = None
    for idx, x in candidates:
        res = max_edge_residual(graph, x)
        if res > cfg.feasibility_tol:
            continue
        val = float(score(x))
        # Must beat the incumbent by more than the tolerance; ties keep the lower index.
        if best is None or val > best[2] + cfg.objective_tol:
            best = (idx, x, val, res)
    if best is None:
        raise InfeasibleError(
            f"no start reached feasibility tolerance {cfg.feasibility_tol:g}; "
            "the graph may have no orthonormal representation in dimension 3"
        )
    return best


def _polish(x: np.ndarray, lam: np.ndarray, ei, ej, n: int) -> np.ndarray:
    flat = np.ascontiguousarray(x.ravel())
    v, kkt_res = _kernels.kkt_polish(flat, n, lam, ei, ej, POLISH_ITERS, 1e-14)
    if kkt_res > POLISH_KKT_TOL or np.max(np.abs(v - flat)) > POLISH_MAX_MOVE:
        # Newton stalled or wandered to another KKT point (near-degenerate
        # spectra); keep the penalty solution.
        v = flat
    return _kernels.project_feasible(np.ascontiguousarray(v), n, ei, ej, POLISH_ITERS, 1e-15).reshape(n, 3)


def optimize_measurements(
    rho: QutritSpectrum, g: ExclusivityGraph, cfg: OptimizerConfig | None = None
) -> OptimizationResult:
    """Maximise ``Tr[M rho]`` over measurement sets for the graph ``g``.

    Raises InfeasibleError when no start satisfies the edge constraints.
    """
    cfg = cfg or OptimizerConfig()
    return _optimize_cached(rho, g, cfg)


@lru_cache(maxsize=16384)
def _optimize_cached(rho: QutritSpectrum, g: ExclusivityGraph, cfg: OptimizerConfig) -> OptimizationResult:
    if g.n == 0:
        return OptimizationResult(MeasurementSet(g, np.zeros((0, 3))), 0.0, 0.0, 0, rho)
    lam = rho.as_array()
    ei, ej = _edge_arrays(g)
    raw = multistart_raw(rho, g, cfg)
    res = np.array([max_edge_residual(g, x) for x in raw])
    vals = _state_value(raw, lam)
    ok = res <= POLISH_RESIDUAL
    if not ok.any():
        raise InfeasibleError(
            f"no start reached feasibility tolerance {cfg.feasibility_tol:g}; "
            "the graph may have no orthonormal representation in dimension 3"
        )
    top = vals[ok].max()
    candidates = []
    polished_vals: list[float] = []
    for idx in np.flatnonzero(ok & (vals >= top - POLISH_WINDOW)):
        # Starts that landed on the same optimum polish to the same value;
        # the lowest index of each cluster stands for all of it.
        if any(abs(vals[idx] - p) <= CLUSTER_TOL for p in polished_vals):
            continue
        polished_vals.append(float(vals[idx]))
        candidates.append((int(idx), _polish(raw[idx], lam, ei, ej, g.n)))
    idx, x, _, resid = _pick_best(g, cfg, candidates, lambda y: _state_value(y, lam))
    ms = MeasurementSet(g, x)
    return OptimizationResult(ms, contextuality_value(rho, ms), resid, idx, rho)


def clear_cache() -> None:
    """Drop memoised inner solves (used to check run-to-run determinism)."""
    _optimize_cached.cache_clear()


def pure_state_optimum(g: ExclusivityGraph, cfg: OptimizerConfig | None = None) -> float:
    """Optimised value on ``(1, 0, 0)``: a lower bound on the Lovasz number."""
    return optimize_measurements(QutritSpectrum.pure(), g, cfg).value


def isotropic_representation(g: ExclusivityGraph, cfg: OptimizerConfig | None = None) -> MeasurementSet:
    """Feasible set whose overall matrix is as close to ``(n/3) I`` as found.

    Minimises the frame potential ``||M||_F^2`` under the edge constraints.
    """
    cfg = cfg or OptimizerConfig()
    if g.n == 0:
        return MeasurementSet(g, np.zeros((0, 3)))
    ei, ej = _edge_arrays(g)
    raw = _run_stages(g, cfg, np.zeros(3), _kernels.FRAME, range(cfg.starts))
    candidates = [
        (k, _kernels.project_feasible(np.ascontiguousarray(x.ravel()), g.n, ei, ej, POLISH_ITERS, 1e-15).reshape(g.n, 3))
        for k, x in enumerate(raw)
    ]
    _, x, _, _ = _pick_best(g, cfg, candidates, _frame_value)
    return MeasurementSet(g, x)


# -- outer searches over states ----------------------------------------------

DENSE_SAMPLES = 181
GOLDEN_TOL = 1e-10
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Golden-section maximisation of ``f`` on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _family_extremum(g, s, cfg, sign: float) -> tuple[QutritSpectrum, float]:
    def objective(t: float) -> float:
        return sign * optimize_measurements(iso_entropy_family(s, t), g, cfg).value

    first = iso_entropy_family(s, 0.0)
    last = iso_entropy_family(s, 1.0)
    if np.allclose(first.lam, last.lam, rtol=0, atol=1e-15):
        return first, optimize_measurements(first, g, cfg).value
    grid = np.linspace(0.0, 1.0, DENSE_SAMPLES)
    vals = [objective(float(t)) for t in grid]
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, DENSE_SAMPLES - 1)]
    t_best, v_best = float(grid[k]), vals[k]
    t_ref, v_ref = _golden(objective, float(lo), float(hi))
    if v_ref > v_best:
        t_best, v_best = t_ref, v_ref
    return iso_entropy_family(s, t_best), sign * v_best


def mcms_upper(g: ExclusivityGraph, s: float, cfg: OptimizerConfig | None = None) -> tuple[QutritSpectrum, float]:
    """Most contextual ordered spectrum at linear entropy ``s`` and its value."""
    return _family_extremum(g, s, cfg or OptimizerConfig(), 1.0)


def mcms_lower(g: ExclusivityGraph, s: float, cfg: OptimizerConfig | None = None) -> tuple[QutritSpectrum, float]:
    """Least contextual ordered spectrum at ``s`` (after optimising measurements)."""
    return _family_extremum(g, s, cfg or OptimizerConfig(), -1.0)


def trace_arc_numeric(
    arc: ArcId | str, g: ExclusivityGraph, samples: int, cfg: OptimizerConfig | None = None
) -> list[tuple[float, float]]:
    """``(s, C_q)`` points from optimising measurements along a named arc."""
    arc = ArcId(arc)
    if samples < 2:
        raise ValueError("samples must be at least 2")
    lo, hi = STATE_INTERVALS[arc]
    cfg = cfg or OptimizerConfig()
    return [
        (float(s), optimize_measurements(arc_state(arc, float(s)), g, cfg).value)
        for s in np.linspace(lo, hi, samples)
    ]
