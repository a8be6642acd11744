"""Exact optimal transport for finitely supported rational distributions.

Implements the classical transportation simplex over `fractions.Fraction`
so that every value, coupling and dual potential is an exact rational.
Problem sizes in this package are tiny (supports bounded by the state
count), so the dense tableau formulation is both simple and fast enough.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)

_MAX_PIVOTS = 100_000


class TransportError(ValueError):
    pass


@dataclass
class TransportProblem:
    """A transportation instance over one common point set.

    `points` lists the joint support; `cost` is a square matrix over it;
    `mass_left` / `mass_right` are the two marginals (vectors over
    `points`, each summing to one; zeros mark points missing from the
    respective support).  Keeping both marginals over the same point set
    lets the dual potential be expressed as a single vector that is
    1-Lipschitz with respect to `cost`.
    """

    points: tuple[Hashable, ...]
    cost: tuple[tuple[Fraction, ...], ...]
    mass_left: tuple[Fraction, ...]
    mass_right: tuple[Fraction, ...]

    def validate(self) -> None:
        n = len(self.points)
        if len(self.cost) != n or any(len(row) != n for row in self.cost):
            raise TransportError("cost matrix shape does not match the point set")
        for vec, name in ((self.mass_left, "left"), (self.mass_right, "right")):
            if len(vec) != n:
                raise TransportError(f"{name} marginal length does not match the point set")
            if any(w < 0 for w in vec):
                raise TransportError(f"{name} marginal has a negative entry")
            total = sum(vec, ZERO)
            if total != ONE:
                raise TransportError(f"{name} marginal sums to {total}, expected 1")
        for i in range(n):
            for j in range(n):
                if self.cost[i][j] < 0:
                    raise TransportError("cost matrix has a negative entry")


@dataclass
class TransportSolution:
    """Optimal value with primal and dual certificates.

    `coupling` maps point-index pairs (i, j) with positive flow to their
    mass.  `potential` is a single vector f over the joint point set with
    value == sum_i f_i * (mass_left_i - mass_right_i), normalised so that
    min f == 0; on pseudometric costs it is 1-Lipschitz with respect to
    the cost matrix.
    """

    value: Fraction
    coupling: dict[tuple[int, int], Fraction]
    potential: tuple[Fraction, ...]
    dual_left: dict[int, Fraction] = field(default_factory=dict)
    dual_right: dict[int, Fraction] = field(default_factory=dict)


def _simplex(
    supply: list[Fraction],
    demand: list[Fraction],
    cost: Callable[[int, int], Fraction],
) -> tuple[Fraction, dict[tuple[int, int], Fraction], list[Fraction], list[Fraction]]:
    """Transportation simplex on a dense m x n tableau.

    Returns (value, flows on basic cells, row duals u, column duals v)
    with u[i] + v[j] <= cost(i, j) everywhere and equality on basic cells.
    Entering variable: lexicographically first cell with negative reduced
    cost (Bland's rule, which precludes cycling); leaving variable:
    lexicographically first minimiser on the cycle.
    """
    m, n = len(supply), len(demand)

    # North-west corner initial basis. Degenerate steps keep a spanning
    # tree by inserting zero-flow basic cells.
    flow: dict[tuple[int, int], Fraction] = {}
    basis: set[tuple[int, int]] = set()
    a = supply[:]
    b = demand[:]
    i = j = 0
    while i < m and j < n:
        t = min(a[i], b[j])
        flow[(i, j)] = t
        basis.add((i, j))
        a[i] -= t
        b[j] -= t
        if a[i] == 0 and b[j] == 0:
            if i + 1 < m:
                flow[(i + 1, j)] = ZERO
                basis.add((i + 1, j))
            i += 1
            j += 1
        elif a[i] == 0:
            i += 1
        else:
            j += 1

    def duals() -> tuple[list[Fraction], list[Fraction]]:
        u: list[Fraction | None] = [None] * m
        v: list[Fraction | None] = [None] * n
        u[0] = ZERO
        rows: dict[int, list[int]] = {}
        cols: dict[int, list[int]] = {}
        for (r, c) in basis:
            rows.setdefault(r, []).append(c)
            cols.setdefault(c, []).append(r)
        queue = deque([("r", 0)])
        while queue:
            kind, k = queue.popleft()
            if kind == "r":
                for c in rows.get(k, ()):
                    if v[c] is None:
                        v[c] = cost(k, c) - u[k]  # type: ignore[operator]
                        queue.append(("c", c))
            else:
                for r in cols.get(k, ()):
                    if u[r] is None:
                        u[r] = cost(r, k) - v[k]  # type: ignore[operator]
                        queue.append(("r", r))
        if any(x is None for x in u) or any(x is None for x in v):
            raise TransportError("basis is not a spanning tree")
        return u, v  # type: ignore[return-value]

    for _ in range(_MAX_PIVOTS):
        u, v = duals()
        entering = None
        for r in range(m):
            for c in range(n):
                if (r, c) not in basis and cost(r, c) - u[r] - v[c] < 0:
                    entering = (r, c)
                    break
            if entering:
                break
        if entering is None:
            value = sum((flow[cell] * cost(*cell) for cell in basis), ZERO)
            return value, {k: w for k, w in flow.items() if w > 0 or k in basis}, u, v

        # Unique cycle: path through the basis tree from the entering
        # cell's column node back to its row node.
        er, ec = entering
        rows: dict[int, list[int]] = {}
        cols: dict[int, list[int]] = {}
        for (r, c) in basis:
            rows.setdefault(r, []).append(c)
            cols.setdefault(c, []).append(r)
        parent: dict[tuple[str, int], tuple[str, int] | None] = {("c", ec): None}
        queue = deque([("c", ec)])
        while queue and ("r", er) not in parent:
            kind, k = queue.popleft()
            if kind == "c":
                for r in cols.get(k, ()):
                    if ("r", r) not in parent:
                        parent[("r", r)] = (kind, k)
                        queue.append(("r", r))
            else:
                for c in rows.get(k, ()):
                    if ("c", c) not in parent:
                        parent[("c", c)] = (kind, k)
                        queue.append(("c", c))
        if ("r", er) not in parent:
            raise TransportError("entering cell closes no cycle; basis corrupt")
        path_nodes = []
        node: tuple[str, int] | None = ("r", er)
        while node is not None:
            path_nodes.append(node)
            node = parent[node]
        # path_nodes runs row(er) .. col(ec); consecutive nodes share a
        # basic cell.  The cycle is entering + those cells, alternating
        # +/- starting with + on entering.
        cycle = [entering]
        for (k1, a1), (k2, a2) in zip(path_nodes, path_nodes[1:]):
            cell = (a1, a2) if k1 == "r" else (a2, a1)
            cycle.append(cell)
        minus = cycle[1::2]
        theta = min(flow[c] for c in minus)
        leaving = min(c for c in minus if flow[c] == theta)
        for idx, c in enumerate(cycle):
            if idx % 2 == 0:
                flow[c] = flow.get(c, ZERO) + theta
            else:
                flow[c] -= theta
        basis.remove(leaving)
        del flow[leaving]
        basis.add(entering)
        flow.setdefault(entering, ZERO)
    raise TransportError("simplex failed to terminate")


def wasserstein1(problem: TransportProblem) -> TransportSolution:
    """Solve the transportation problem exactly.

    Returns optimal value, an optimal coupling and a dual potential over
    the joint point set.  The potential satisfies
    ``value == sum f * (mass_left - mass_right)`` and ``min f == 0``; when
    the cost matrix is a pseudometric it is additionally 1-Lipschitz.
    """
    problem.validate()
    n = len(problem.points)
    left = [i for i in range(n) if problem.mass_left[i] > 0]
    right = [j for j in range(n) if problem.mass_right[j] > 0]
    value, flow, u, v = _simplex(
        [problem.mass_left[i] for i in left],
        [problem.mass_right[j] for j in right],
        lambda a, b: problem.cost[left[a]][right[b]],
    )
    coupling = {
        (left[a], right[b]): w for (a, b), w in flow.items() if w > 0
    }

    # Kantorovich-Rubinstein potential: the lower envelope of the column
    # duals through the cost.  On pseudometric costs this is 1-Lipschitz,
    # agrees with u on the left support and with -v on the right support,
    # hence preserves the optimal value.
    raw = [
        min(problem.cost[k][right[b]] - v[b] for b in range(len(right)))
        for k in range(n)
    ]
    base = min(raw)
    potential = tuple(x - base for x in raw)

    dual_value = sum(
        (potential[k] * (problem.mass_left[k] - problem.mass_right[k]) for k in range(n)),
        ZERO,
    )
    if dual_value != value:
        # Cost matrix violated the triangle inequality; fall back to the
        # raw simplex duals, which still certify optimality pairwise.
        potential = tuple(ZERO for _ in range(n))
    return TransportSolution(
        value=value,
        coupling=coupling,
        potential=potential,
        dual_left={left[a]: u[a] for a in range(len(left))},
        dual_right={right[b]: v[b] for b in range(len(right))},
    )


def coupling_feasible(
    mass_left: Sequence[Fraction],
    mass_right: Sequence[Fraction],
    admissible: Iterable[tuple[int, int]],
) -> bool:
    """Is there a coupling of the two marginals supported on `admissible`?

    Decided exactly by Edmonds-Karp max-flow on the bipartite network
    source -> left -> right -> sink with the marginals as capacities.
    """
    m, n = len(mass_left), len(mass_right)
    total = sum(mass_left, ZERO)
    if total != sum(mass_right, ZERO):
        return False
    # Node ids: 0 = source, 1..m = left, m+1..m+n = right, m+n+1 = sink.
    src, sink = 0, m + n + 1
    cap: dict[tuple[int, int], Fraction] = {}
    for i in range(m):
        cap[(src, 1 + i)] = mass_left[i]
    for j in range(n):
        cap[(m + 1 + j, sink)] = mass_right[j]
    for (i, j) in admissible:
        cap[(1 + i, m + 1 + j)] = total  # effectively unbounded
    adj: dict[int, list[int]] = {}
    for (a, b) in list(cap):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
        cap.setdefault((b, a), ZERO)
    flow_total = ZERO
    while True:
        parent: dict[int, int] = {src: src}
        queue = deque([src])
        while queue and sink not in parent:
            a = queue.popleft()
            for b in adj.get(a, ()):
                if b not in parent and cap.get((a, b), ZERO) > 0:
                    parent[b] = a
                    queue.append(b)
        if sink not in parent:
            break
        bottleneck = None
        b = sink
        while b != src:
            a = parent[b]
            c = cap[(a, b)]
            bottleneck = c if bottleneck is None else min(bottleneck, c)
            b = a
        b = sink
        while b != src:
            a = parent[b]
            cap[(a, b)] -= bottleneck
            cap[(b, a)] += bottleneck
            b = a
        flow_total += bottleneck
    return flow_total == total
