"""Measurement sets (real orthonormal representations) and the overall matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qutrit_contextuality.errors import GraphParseError, InvariantError
from qutrit_contextuality.graphs import (
    ExclusivityGraph,
    make_kcbs_graph,
    make_kk_graph,
    named_graph,
    read_graph,
)
from qutrit_contextuality.linalg import jacobi_eigh
from qutrit_contextuality.states import DiagonalState, QutritSpectrum

NORM_TOL = 1e-10
ORTH_TOL = 1e-8
TRACE_TOL = 1e-10


def max_edge_residual(graph: ExclusivityGraph, vectors: np.ndarray) -> float:
    """Largest ``|<v_i|v_j>|`` over the edges of ``graph`` (0 when edgeless)."""
    if not graph.edges:
        return 0.0
    e = np.asarray(graph.edges) - 1
    return float(np.max(np.abs(np.sum(vectors[e[:, 0]] * vectors[e[:, 1]], axis=1))))


def orthogonal_pairs(vectors: np.ndarray, tol: float = ORTH_TOL) -> set[tuple[int, int]]:
    """All 1-based pairs ``(i, j)``, ``i < j``, whose vectors are orthogonal within ``tol``."""
    gram = vectors @ vectors.T
    n = len(vectors)
    return {(i + 1, j + 1) for i in range(n) for j in range(i + 1, n) if abs(gram[i, j]) <= tol}


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """One real unit 3-vector per graph vertex; edges are orthogonal pairs."""

    graph: ExclusivityGraph
    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float).reshape(-1, 3) if self.graph.n else np.zeros((0, 3))
        if v.shape != (self.graph.n, 3):
            raise InvariantError(f"expected {self.graph.n} vectors of length 3, got shape {v.shape}")
        norms = np.linalg.norm(v, axis=1)
        if v.size and np.max(np.abs(norms - 1.0)) > NORM_TOL:
            bad = int(np.argmax(np.abs(norms - 1.0))) + 1
            raise InvariantError(f"vector {bad} has norm {norms[bad - 1]!r}")
        res = max_edge_residual(self.graph, v)
        if res > ORTH_TOL:
            raise InvariantError(f"edge orthogonality violated: max |<i|j>| = {res:.3e}")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return self.graph.n

    def edge_residual(self) -> float:
        return max_edge_residual(self.graph, self.vectors)

    def rotated(self, q: np.ndarray) -> "MeasurementSet":
        """Apply the orthogonal map ``q`` to every vector."""
        return MeasurementSet(self.graph, self.vectors @ np.asarray(q, dtype=float).T)


@dataclass(frozen=True, eq=False)
class OverallMatrix:
    """``M = sum_i |i><i|`` with its descending spectrum and eigenbasis."""

    m: np.ndarray
    spectrum: tuple[float, float, float]
    eigenbasis: np.ndarray


def _unit(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x)


def table_1a() -> MeasurementSet:
    """Computational-basis set for the pentagon (optimal along arc CD)."""
    e1, e2, e3 = np.eye(3)
    return MeasurementSet(make_kcbs_graph(), np.array([e1, e1, e2, e2, e3]))


def table_1b() -> MeasurementSet:
    """Umbrella set ``tau (sqrt(cos b), cos 2kb, sin 2kb)`` with ``b = pi/5``."""
    beta = math.pi / 5
    tau = 1.0 / math.sqrt(1.0 + math.cos(beta))
    rows = [
        tau * np.array([math.sqrt(math.cos(beta)), math.cos(2 * k * beta), math.sin(2 * k * beta)])
        for k in range(5)
    ]
    return MeasurementSet(make_kcbs_graph(), np.array(rows))


def table_2() -> MeasurementSet:
    """The nine vectors of the nine-setting inequality."""
    h, t3, t23 = 1 / math.sqrt(2), 1 / math.sqrt(3), math.sqrt(2) / math.sqrt(3)
    rows = [
        (1, 0, 0),
        (0, 1, 0),
        (0, 0, 1),
        (0, h, -h),
        (t3, 0, -t23),
        (t3, t23, 0),
        (h, 0.5, 0.5),
        (h, -0.5, -0.5),
        (h, -0.5, 0.5),
    ]
    return MeasurementSet(make_kk_graph(), np.array(rows, dtype=float))


def contextuality_value(rho: QutritSpectrum | DiagonalState, ms: MeasurementSet) -> float:
    """``sum_i <v_i| diag(lambda) |v_i> = Tr[M rho]``."""
    if ms.n == 0:
        return 0.0
    return float(np.sum(ms.vectors**2 @ rho.as_array()))


def overall_matrix(ms: MeasurementSet) -> OverallMatrix:
    m = ms.vectors.T @ ms.vectors
    w, v = jacobi_eigh(m)
    w = np.maximum(w, 0.0)
    if abs(np.trace(m) - ms.n) > TRACE_TOL * max(1, ms.n):
        raise InvariantError(f"trace {np.trace(m)!r} differs from vertex count {ms.n}")
    m.setflags(write=False)
    v.setflags(write=False)
    return OverallMatrix(m, (float(w[0]), float(w[1]), float(w[2])), v)


def align_to_state(ms: MeasurementSet) -> MeasurementSet:
    """Rotate the set so that its overall matrix is diagonal and descending.

    With ``U`` the eigenbasis of ``M``, each vector becomes ``U^T v``; by the
    trace inequality this never lowers the value on any descending spectrum.
    """
    om = overall_matrix(ms)
    return ms.rotated(om.eigenbasis.T)


def kcbs_tables() -> dict[str, MeasurementSet]:
    return {"1a": table_1a(), "1b": table_1b()}


def load_measurement_set(text: str, base_dir: str | Path | None = None) -> MeasurementSet:
    """Parse the measurement-set text format.

    First line: vertex count ``n``; then ``n`` lines of three components;
    optionally one more line naming the graph (``kcbs``, ``kk`` or an
    edge-list path). Without it, the graph is the set of orthogonal pairs.
    Vectors are normalised on load so that decimal truncation in the file
    does not trip the unit-norm check.
    """
    lines = [
        (no, raw.strip())
        for no, raw in enumerate(text.splitlines(), start=1)
        if raw.strip() and not raw.strip().startswith("#")
    ]
    if not lines:
        raise GraphParseError("missing vertex count")
    no, first = lines[0]
    try:
        n = int(first)
    except ValueError:
        raise GraphParseError(f"invalid vertex count {first!r}", no) from None
    if n < 0 or len(lines) < n + 1:
        raise GraphParseError(f"expected {n} vector lines", no)
    rows = []
    for no, line in lines[1 : n + 1]:
        fields = line.split()
        if len(fields) != 3:
            raise GraphParseError(f"expected three components, got {len(fields)}", no)
        try:
            row = [float(x) for x in fields]
        except ValueError:
            raise GraphParseError(f"invalid component in {line!r}", no) from None
        if not np.any(row):
            raise GraphParseError("zero vector", no)
        rows.append(_unit(row))
    vectors = np.array(rows).reshape(n, 3)
    rest = lines[n + 1 :]
    if len(rest) > 1:
        raise GraphParseError("unexpected trailing lines", rest[1][0])
    if rest:
        no, name = rest[0]
        if name.lower() in ("kcbs", "kk"):
            graph = named_graph(name)
        else:
            path = Path(name)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            graph = read_graph(path)
        if graph.n != n:
            raise GraphParseError(f"graph has {graph.n} vertices but {n} vectors were given", no)
    else:
        graph = ExclusivityGraph(n, tuple(sorted(orthogonal_pairs(vectors))))
    return MeasurementSet(graph, vectors)


def measurement_set_to_text(ms: MeasurementSet, graph_name: str | None = None) -> str:
    lines = [str(ms.n)] + [" ".join(f"{x:.17g}" for x in row) for row in ms.vectors]
    if graph_name:
        lines.append(graph_name)
    return "\n".join(lines) + "\n"
