from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import LOVASZ_KCBS, LOVASZ_KK, central_difference
from qutrit_contextuality import _kernels
from qutrit_contextuality.errors import InfeasibleError, InvariantError
from qutrit_contextuality.graphs import ExclusivityGraph, edgeless_graph, make_kcbs_graph, make_kk_graph
from qutrit_contextuality.measurements import (
    align_to_state,
    contextuality_value,
    max_edge_residual,
    overall_matrix,
)
from qutrit_contextuality.optimizer import (
    OptimizerConfig,
    _edge_arrays,
    _pick_best,
    clear_cache,
    mcms_lower,
    mcms_upper,
    multistart_raw,
    optimize_measurements,
    penalized_gradient,
    penalized_objective,
    pure_state_optimum,
    trace_arc_numeric,
)
from qutrit_contextuality.states import ArcId, QutritSpectrum, arc_cq, arc_state

KCBS = make_kcbs_graph()
KK = make_kk_graph()
K4 = ExclusivityGraph(4, ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)))
SMALL = OptimizerConfig(starts=8)


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(1e-12, np.max(np.abs(b))))


# -- config ------------------------------------------------------------------


def test_config_defaults():
    cfg = OptimizerConfig()
    assert cfg.starts == 64 and cfg.seed == 0
    assert cfg.penalty_schedule == tuple(10.0**k for k in range(1, 9))
    assert cfg.max_iters == 2000
    assert cfg.objective_tol == 1e-12 and cfg.feasibility_tol == 1e-7


def test_config_json_round_trip():
    cfg = OptimizerConfig(starts=5, seed=7, penalty_schedule=(1.0, 100.0))
    data = json.loads(cfg.to_json())
    assert set(data) == {"starts", "seed", "penalty_schedule", "max_iters", "objective_tol", "feasibility_tol"}
    assert OptimizerConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize(
    "kwargs",
    [
        {"starts": 0},
        {"starts": 1.5},
        {"max_iters": 0},
        {"penalty_schedule": (10.0, 10.0)},
        {"penalty_schedule": (100.0, 10.0)},
        {"penalty_schedule": ()},
        {"objective_tol": 0.0},
        {"feasibility_tol": -1.0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(InvariantError):
        OptimizerConfig(**kwargs)


def test_config_rejects_unknown_fields():
    with pytest.raises(InvariantError, match="unknown"):
        OptimizerConfig.from_dict({"startz": 3})


# -- gradients ---------------------------------------------------------------


@pytest.mark.parametrize("graph", [KCBS, KK], ids=["kcbs", "kk"])
def test_penalized_gradient_finite_differences(graph):
    rng = np.random.default_rng(11)
    for _ in range(50):
        x = rng.standard_normal((graph.n, 3))
        lam = np.sort(rng.dirichlet(np.ones(3)))[::-1]
        mu = float(10 ** rng.uniform(0, 3))
        num = central_difference(lambda y: float(penalized_objective(y, lam, graph, mu)), x)
        assert relative_error(penalized_gradient(x, lam, graph, mu), num) <= 1e-6


def test_penalized_objective_batched():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, KK.n, 3))
    lam = np.array([0.5, 0.3, 0.2])
    batch = penalized_objective(x, lam, KK, 3.0)
    assert batch.shape == (4,)
    assert batch[2] == pytest.approx(float(penalized_objective(x[2], lam, KK, 3.0)))


@pytest.mark.parametrize("kind", [_kernels.STATE, _kernels.FRAME])
def test_kernel_gradient_finite_differences(kind):
    ei, ej = _edge_arrays(KK)
    rng = np.random.default_rng(5)
    grad = np.empty(3 * KK.n)
    for _ in range(25):
        x = rng.standard_normal(3 * KK.n)
        lam = np.sort(rng.dirichlet(np.ones(3)))[::-1].copy()
        mu = float(10 ** rng.uniform(0, 2))

        def f(y):
            return _kernels.value_grad(y, KK.n, lam, ei, ej, mu, kind, np.empty(3 * KK.n))

        _kernels.value_grad(x, KK.n, lam, ei, ej, mu, kind, grad)
        assert relative_error(grad, central_difference(f, x)) <= 1e-6


# -- inner optimisation --------------------------------------------------------


def test_pure_state_optima():
    assert pure_state_optimum(KCBS) == pytest.approx(LOVASZ_KCBS, abs=1e-6)
    assert pure_state_optimum(KK) == pytest.approx(LOVASZ_KK, abs=1e-6)


def test_flat_state_value_is_trace_over_three():
    res = optimize_measurements(QutritSpectrum.maximally_mixed(), KCBS)
    assert res.value == pytest.approx(5 / 3, abs=1e-9)


def test_edgeless_graph():
    assert pure_state_optimum(edgeless_graph(5), SMALL) == pytest.approx(5.0, abs=1e-12)
    res = optimize_measurements(QutritSpectrum.pure(), edgeless_graph(0), SMALL)
    assert res.value == 0.0


@pytest.mark.parametrize(
    "graph, lam",
    [(KCBS, (0.6, 0.3, 0.1)), (KK, (0.6, 0.3, 0.1)), (KCBS, (0.5, 0.5, 0.0)), (KK, (0.4, 0.3, 0.3))],
)
def test_result_invariants(graph, lam):
    rho = QutritSpectrum(lam)
    cfg = OptimizerConfig()
    res = optimize_measurements(rho, graph, cfg)
    assert res.max_edge_residual <= cfg.feasibility_tol
    assert max_edge_residual(graph, res.best_set.vectors) == res.max_edge_residual
    assert np.allclose(np.linalg.norm(res.best_set.vectors, axis=1), 1.0, atol=1e-10)
    assert res.value == pytest.approx(contextuality_value(rho, res.best_set), abs=1e-12)
    spectrum = np.array(overall_matrix(res.best_set).spectrum)
    assert res.value == pytest.approx(float(rho.as_array() @ spectrum), abs=1e-9)
    assert contextuality_value(rho, align_to_state(res.best_set)) <= float(rho.as_array() @ spectrum) + 1e-12
    assert 0 <= res.start_index < cfg.starts


def test_infeasible_graph():
    with pytest.raises(InfeasibleError):
        optimize_measurements(QutritSpectrum.pure(), K4, OptimizerConfig(starts=4))


def test_start_independence():
    rho = QutritSpectrum((0.7, 0.2, 0.1))
    full = multistart_raw(rho, KK, SMALL)
    for k in (0, 3, 7):
        alone = multistart_raw(rho, KK, SMALL, indices=[k])
        assert np.array_equal(alone[0], full[k])
    reordered = multistart_raw(rho, KK, SMALL, indices=[7, 3, 0])
    assert np.array_equal(reordered[1], full[3])


def test_deterministic_after_cache_reset():
    rho = QutritSpectrum((0.55, 0.3, 0.15))
    first = optimize_measurements(rho, KK, SMALL)
    clear_cache()
    second = optimize_measurements(rho, KK, SMALL)
    assert first is not second
    assert np.array_equal(first.best_set.vectors, second.best_set.vectors)
    assert first.value == second.value and first.start_index == second.start_index


def test_tie_break_prefers_lowest_index():
    base = np.eye(3)[[0, 0, 1, 1, 2]]
    flips = [base, -base, base * np.array([[-1], [1], [1], [1], [1]])]
    candidates = [(2, flips[0]), (4, flips[1]), (9, flips[2])]
    idx, _, _, _ = _pick_best(KCBS, SMALL, candidates, lambda x: 1.0)
    assert idx == 2
    # A gain within objective_tol does not displace the incumbent; a larger one does.
    scores = {flips[0].tobytes(): 1.0, flips[1].tobytes(): 1.0 + 1e-13, flips[2].tobytes(): 1.0 + 1e-9}
    idx, _, val, _ = _pick_best(KCBS, SMALL, candidates, lambda x: scores[x.tobytes()])
    assert idx == 9 and val == 1.0 + 1e-9
    idx, _, _, _ = _pick_best(KCBS, SMALL, candidates[:2], lambda x: scores[x.tobytes()])
    assert idx == 2


def test_pick_best_skips_infeasible():
    bad = np.eye(3)[[0, 0, 0, 1, 2]]
    good = np.eye(3)[[0, 0, 1, 1, 2]]
    idx, _, _, _ = _pick_best(KCBS, SMALL, [(0, bad), (1, good)], lambda x: 0.0)
    assert idx == 1
    with pytest.raises(InfeasibleError):
        _pick_best(KCBS, SMALL, [(0, bad)], lambda x: 0.0)


@pytest.mark.parametrize("arc", [ArcId.CD, ArcId.EG])
def test_trace_arc_numeric_closed_form(arc):
    g = KCBS if arc.inequality == "kcbs" else KK
    for s, value in trace_arc_numeric(arc, g, 5):
        assert value == pytest.approx(arc_cq(arc, s), abs=1e-4)


def test_trace_arc_numeric_needs_two_samples():
    with pytest.raises(ValueError):
        trace_arc_numeric(ArcId.CD, KCBS, 1)


# -- outer search ----------------------------------------------------------------


def test_mcms_degenerate_entropies_short_circuit():
    rho, value = mcms_upper(KCBS, 0.0)
    assert rho.lam == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)
    assert value == pytest.approx(LOVASZ_KCBS, abs=1e-6)
    rho, value = mcms_lower(KK, 1.0)
    assert value == pytest.approx(3.0, abs=1e-9)


@pytest.mark.parametrize("graph, arc", [(KCBS, ArcId.AD), (KK, ArcId.EG)], ids=["kcbs", "kk"])
def test_mcms_profiles(graph, arc):
    # Lower bound follows its closed form; upper >= lower; upper nonincreasing.
    previous = np.inf
    for s in (0.0, 0.5, 1.0):
        _, lo = mcms_lower(graph, s)
        rho, hi = mcms_upper(graph, s)
        assert lo == pytest.approx(arc_cq(arc, s), abs=1e-4)
        assert 0.0 <= lo <= hi + 1e-12 <= graph.n + 1e-12
        assert hi <= previous + 1e-6
        previous = hi
        assert rho == QutritSpectrum(rho.lam)


def test_mcms_upper_on_cd_segment():
    _, value = mcms_upper(KCBS, 0.9)
    assert value == pytest.approx(arc_cq(ArcId.CD, 0.9), abs=1e-4)


@given(st.floats(min_value=0.0, max_value=1.0))
def test_arc_state_feeds_optimizer(s):
    # AD states on the pentagon: the umbrella set is optimal.
    value = optimize_measurements(arc_state(ArcId.AD, s), KCBS, SMALL).value
    assert value == pytest.approx(arc_cq(ArcId.AD, s), abs=1e-6)
