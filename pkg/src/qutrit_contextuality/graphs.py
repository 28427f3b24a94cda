"""Exclusivity graphs and their classical (independence-number) bounds."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from qutrit_contextuality.errors import GraphParseError, InvariantError, SizeLimitError

MAX_EXHAUSTIVE_VERTICES = 24

KCBS_EDGES = ((1, 3), (1, 4), (2, 4), (2, 5), (3, 5))
KK_EDGES = (
    (1, 2), (1, 3), (1, 4), (2, 3), (2, 5), (3, 6), (4, 7),
    (4, 8), (5, 7), (5, 9), (6, 8), (6, 9), (7, 8),
)


@dataclass(frozen=True)
class ExclusivityGraph:
    """Simple undirected graph on vertices ``1..n``.

    ``edges`` is stored as a sorted tuple of ``(i, j)`` pairs with ``i < j``.
    Construction rejects self-loops, out-of-range endpoints and duplicates,
    including a pair given in both orientations.
    """

    n: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 0:
            raise InvariantError(f"vertex count must be a non-negative integer, got {self.n!r}")
        seen: set[tuple[int, int]] = set()
        for edge in self.edges:
            i, j = (int(v) for v in edge)
            if i == j:
                raise InvariantError(f"self-loop at vertex {i}")
            for v in (i, j):
                if not 1 <= v <= self.n:
                    raise InvariantError(f"vertex {v} out of range 1..{self.n}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise InvariantError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in set(self.edges)

    def neighbours(self, v: int) -> set[int]:
        out = set()
        for i, j in self.edges:
            if i == v:
                out.add(j)
            elif j == v:
                out.add(i)
        return out

    def relabel(self, perm: dict[int, int]) -> "ExclusivityGraph":
        """Return the isomorphic graph with vertex ``v`` renamed ``perm[v]``."""
        return ExclusivityGraph(self.n, tuple((perm[i], perm[j]) for i, j in self.edges))

    def to_text(self) -> str:
        lines = [str(self.n)] + [f"{i} {j}" for i, j in self.edges]
        return "\n".join(lines) + "\n"


def make_kcbs_graph() -> ExclusivityGraph:
    """Pentagon 1-4-2-5-3-1 of the five-setting inequality."""
    return ExclusivityGraph(5, KCBS_EDGES)


def make_kk_graph() -> ExclusivityGraph:
    """Nine-vertex, thirteen-edge graph of the nine-setting inequality."""
    return ExclusivityGraph(9, KK_EDGES)


def edgeless_graph(n: int) -> ExclusivityGraph:
    return ExclusivityGraph(n, ())


def named_graph(name: str) -> ExclusivityGraph:
    key = name.strip().lower()
    if key == "kcbs":
        return make_kcbs_graph()
    if key == "kk":
        return make_kk_graph()
    raise KeyError(f"unknown graph name {name!r} (expected 'kcbs' or 'kk')")


def independence_number(g: ExclusivityGraph) -> int:
    """Size of a maximum independent set, by exact branch and bound.

    Raises SizeLimitError above 24 vertices.
    """
    if g.n > MAX_EXHAUSTIVE_VERTICES:
        raise SizeLimitError(
            f"independence search is capped at {MAX_EXHAUSTIVE_VERTICES} vertices, got {g.n}"
        )
    adj = [0] * g.n
    for i, j in g.edges:
        adj[i - 1] |= 1 << (j - 1)
        adj[j - 1] |= 1 << (i - 1)

    best = 0

    def expand(candidates: int, size: int) -> None:
        nonlocal best
        if candidates == 0:
            best = max(best, size)
            return
        if size + candidates.bit_count() <= best:
            return
        v = (candidates & -candidates).bit_length() - 1
        # Either v joins the set (drop its neighbours) or it is excluded.
        expand(candidates & ~(1 << v) & ~adj[v], size + 1)
        expand(candidates & ~(1 << v), size)

    expand((1 << g.n) - 1, 0)
    return best


def load_graph(text: str) -> ExclusivityGraph:
    """Parse the edge-list format: vertex count, then one ``i j`` pair per line.

    Blank lines and lines starting with ``#`` are ignored.
    """
    n: int | None = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if n is None:
            if len(fields) != 1:
                raise GraphParseError("first line must hold the vertex count", lineno)
            try:
                n = int(fields[0])
            except ValueError:
                raise GraphParseError(f"invalid vertex count {fields[0]!r}", lineno) from None
            if n < 0:
                raise GraphParseError("vertex count must be non-negative", lineno)
            continue
        if len(fields) != 2:
            raise GraphParseError(f"expected two vertex indices, got {len(fields)} fields", lineno)
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            raise GraphParseError(f"invalid vertex index in {line!r}", lineno) from None
        try:
            if i == j:
                raise InvariantError(f"self-loop at vertex {i}")
            for v in (i, j):
                if not 1 <= v <= n:
                    raise InvariantError(f"vertex {v} out of range 1..{n}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise InvariantError(f"duplicate edge {key}")
        except InvariantError as exc:
            raise InvariantError(f"line {lineno}: {exc}") from None
        seen.add(key)
        edges.append(key)
    if n is None:
        raise GraphParseError("missing vertex count")
    return ExclusivityGraph(n, tuple(edges))


def read_graph(path: str | Path) -> ExclusivityGraph:
    return load_graph(Path(path).read_text(encoding="utf-8"))
