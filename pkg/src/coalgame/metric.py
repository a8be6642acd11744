"""Quantitative verification: the behavioural pseudometric, the
real-valued modal logic, synthesis of distance-certifying formulas, and
the transfer condition of the quantitative game.

The pseudometric arises by iterating a lifting of state distances to
one-step behaviours.  The lifting is computed in closed form: absolute
difference at real leaves, discrete distance at label leaves, the
component maximum at products, Hausdorff distance at powerset nodes,
optimal-transport cost at distribution nodes, and, across coproduct
sides, the largest evaluation the populated sides admit.  All arithmetic
is exact.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

from .evaluation import eval_gamma
from .functors import (
    ConstLabels,
    ConstOne,
    ConstReal,
    Coproduct,
    Dist,
    DistOf,
    FunctorExpr,
    FValue,
    Identity,
    Inl,
    Inr,
    Label,
    Pair,
    Pow,
    Product,
    Real,
    SetOf,
    StateRef,
    apply_map,
)
from .model import PredicateR, RefusalError, System
from .transport import TransportProblem, wasserstein1

ZERO = Fraction(0)
ONE = Fraction(1)

DistFn = Callable[[str, str], Fraction]


# ---------------------------------------------------------------------------
# Distance tables
# ---------------------------------------------------------------------------


class DistTable:
    """A symmetric state-distance table with zero diagonal."""

    __slots__ = ("states", "_d")

    def __init__(self, states: Iterable[str], entries: Mapping | None = None):
        self.states = tuple(states)
        self._d: dict[tuple[str, str], Fraction] = {}
        if entries:
            for (x, y), v in entries.items():
                self.set(x, y, v)

    @staticmethod
    def _key(x: str, y: str) -> tuple[str, str]:
        return (x, y) if x <= y else (y, x)

    def get(self, x: str, y: str) -> Fraction:
        if x == y:
            return ZERO
        return self._d.get(self._key(x, y), ZERO)

    def set(self, x: str, y: str, v: Fraction) -> None:
        if x == y:
            return
        v = v if isinstance(v, Fraction) else Fraction(v)
        if v == ZERO:
            self._d.pop(self._key(x, y), None)
        else:
            self._d[self._key(x, y)] = v

    def pairs(self) -> list[tuple[str, str]]:
        return list(itertools.combinations(self.states, 2))

    def items(self) -> list[tuple[str, str, Fraction]]:
        return [(x, y, self.get(x, y)) for x, y in self.pairs()]

    def copy(self) -> "DistTable":
        out = DistTable(self.states)
        out._d = dict(self._d)
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DistTable)
            and self.states == other.states
            and self._d == other._d
        )

    def __repr__(self) -> str:
        inner = ", ".join(f"d({x},{y})={v}" for x, y, v in self.items() if v)
        return f"DistTable({inner})"

    def max_difference(self, other: "DistTable") -> Fraction:
        return max(
            (abs(self.get(x, y) - other.get(x, y)) for x, y in self.pairs()),
            default=ZERO,
        )


# ---------------------------------------------------------------------------
# The lifting, in closed form
# ---------------------------------------------------------------------------


def hausdorff(cost: Callable[[FValue, FValue], Fraction], left: tuple, right: tuple, top: Fraction) -> Fraction:
    """Hausdorff distance between finite sets; the empty set is at
    distance `top` from every non-empty set and 0 from itself."""
    if not left and not right:
        return ZERO
    if not left or not right:
        return top
    fwd = max(min(cost(a, b) for b in right) for a in left)
    bwd = max(min(cost(a, b) for a in left) for b in right)
    return max(fwd, bwd)


def value_radius(expr: FunctorExpr, top: Fraction, v: FValue) -> Fraction:
    """The largest evaluation a behaviour admits when every state atom is
    raised to `top`; this is the distance contribution of a behaviour
    that the other side cannot answer at all."""
    if isinstance(expr, Identity):
        return top
    if isinstance(expr, ConstReal):
        assert isinstance(v, Real)
        return v.value
    if isinstance(expr, ConstOne):
        return top
    if isinstance(expr, ConstLabels):
        return top
    if isinstance(expr, Pow):
        assert isinstance(v, SetOf)
        return max((value_radius(expr.inner, top, u) for u in v.elems), default=ZERO)
    if isinstance(expr, Dist):
        assert isinstance(v, DistOf)
        return sum((w * value_radius(expr.inner, top, u) for u, w in v.weights), ZERO)
    if isinstance(expr, Product):
        assert isinstance(v, Pair)
        return max(value_radius(expr.left, top, v.left), value_radius(expr.right, top, v.right))
    if isinstance(expr, Coproduct):
        if isinstance(v, Inl):
            return value_radius(expr.left, top, v.value)
        assert isinstance(v, Inr)
        return value_radius(expr.right, top, v.value)
    raise TypeError(f"unknown functor node {expr!r}")


def lift_value(expr: FunctorExpr, top: Fraction, dfn: DistFn, v1: FValue, v2: FValue) -> Fraction:
    """Distance between two one-step behaviours over a state distance."""

    def go(e: FunctorExpr, a: FValue, b: FValue) -> Fraction:
        if isinstance(e, Identity):
            assert isinstance(a, StateRef) and isinstance(b, StateRef)
            return dfn(a.state, b.state)
        if isinstance(e, ConstReal):
            assert isinstance(a, Real) and isinstance(b, Real)
            return abs(a.value - b.value)
        if isinstance(e, ConstOne):
            return ZERO
        if isinstance(e, ConstLabels):
            assert isinstance(a, Label) and isinstance(b, Label)
            return ZERO if a.symbol == b.symbol else top
        if isinstance(e, Pow):
            assert isinstance(a, SetOf) and isinstance(b, SetOf)
            return hausdorff(lambda u, v: go(e.inner, u, v), a.elems, b.elems, top)
        if isinstance(e, Dist):
            assert isinstance(a, DistOf) and isinstance(b, DistOf)
            return _wasserstein_lift(e.inner, a, b, go).value
        if isinstance(e, Product):
            assert isinstance(a, Pair) and isinstance(b, Pair)
            return max(go(e.left, a.left, b.left), go(e.right, a.right, b.right))
        if isinstance(e, Coproduct):
            if isinstance(a, Inl) and isinstance(b, Inl):
                return go(e.left, a.value, b.value)
            if isinstance(a, Inr) and isinstance(b, Inr):
                return go(e.right, a.value, b.value)
            left_rad = value_radius(e.left, top, a.value if isinstance(a, Inl) else b.value)
            right_rad = value_radius(e.right, top, a.value if isinstance(a, Inr) else b.value)
            return max(left_rad, right_rad)
        raise TypeError(f"unknown functor node {e!r}")

    return go(expr, v1, v2)


def _wasserstein_lift(inner: FunctorExpr, a: DistOf, b: DistOf, go):
    points = sorted(set(a.support()) | set(b.support()), key=_stable_value_key)
    index = {p: i for i, p in enumerate(points)}
    cost = tuple(
        tuple(go(inner, p, q) for q in points) for p in points
    )
    mass_left = [ZERO] * len(points)
    mass_right = [ZERO] * len(points)
    for u, w in a.weights:
        mass_left[index[u]] += w
    for u, w in b.weights:
        mass_right[index[u]] += w
    problem = TransportProblem(
        points=tuple(points),
        cost=cost,
        mass_left=tuple(mass_left),
        mass_right=tuple(mass_right),
    )
    return wasserstein1(problem)


def _stable_value_key(v: FValue):
    from .functors import sort_key

    return sort_key(v)


# ---------------------------------------------------------------------------
# Behavioural distance by iteration
# ---------------------------------------------------------------------------


@dataclass
class DistanceCertificate:
    """How much the reported table can be trusted.

    * "stabilized-exact": the iteration reached a fixpoint; the table is
      the behavioural distance itself.
    * "contractive-bound": stopped after `iterations` discounted rounds;
      every entry is within `error_bound` of the true distance.
    * "iteration-capped": stopped undiscounted before stabilising; the
      table is a lower bound with no quantitative error guarantee.
    """

    kind: str
    iterations: int
    error_bound: Fraction | None = None


@dataclass
class DistanceResult:
    states: tuple[str, ...]
    levels: tuple[DistTable, ...]
    certificate: DistanceCertificate
    discount: Fraction | None = None

    @property
    def table(self) -> DistTable:
        return self.levels[-1]

    def value(self, x: str, y: str) -> Fraction:
        return self.table.get(x, y)


def behavioural_distance(
    sys_: System,
    *,
    discount: Fraction | None = None,
    max_iterations: int = 100,
) -> DistanceResult:
    """Iterate the behaviour lifting from the zero table.

    The iterates climb towards the behavioural distance.  Stabilisation
    gives the exact table; a discount factor c < 1 makes the iteration
    contractive, with error at most top * c^(k+1) / (1 - c) after k
    rounds; an undiscounted run that hits the iteration cap yields a
    certified lower bound only.
    """
    if discount is not None:
        discount = discount if isinstance(discount, Fraction) else Fraction(discount)
        if not (ZERO < discount < ONE):
            raise ValueError(f"discount must be in (0, 1), got {discount}")
    current = DistTable(sys_.states)
    levels = [current]
    iterations = 0
    stabilized = False
    while iterations < max_iterations:
        nxt = DistTable(sys_.states)
        for x, y in current.pairs():
            v = lift_value(sys_.expr, sys_.top, current.get, sys_.alpha[x], sys_.alpha[y])
            if discount is not None:
                v = discount * v
            nxt.set(x, y, v)
        iterations += 1
        if nxt == current:
            stabilized = True
            break
        levels.append(nxt)
        current = nxt
    if stabilized:
        cert = DistanceCertificate(kind="stabilized-exact", iterations=iterations)
    elif discount is not None:
        bound = sys_.top * discount ** (iterations + 1) / (ONE - discount)
        cert = DistanceCertificate(
            kind="contractive-bound", iterations=iterations, error_bound=bound
        )
    else:
        cert = DistanceCertificate(kind="iteration-capped", iterations=iterations)
    return DistanceResult(
        states=sys_.states,
        levels=tuple(levels),
        certificate=cert,
        discount=discount,
    )


# ---------------------------------------------------------------------------
# Witnesses: a predicate and an evaluation map realising a lifted distance
# ---------------------------------------------------------------------------


@dataclass
class LiftWitness:
    """A concrete realisation of (part of) a lifted distance.

    Evaluating `gamma` after applying predicate `f` separates the two
    behaviours by `value`; `hi` names the side (1 or 2) whose evaluation
    is larger.  `attained` records whether `value` matches the closed
    form; where it does not, the witness is still a sound lower bound.
    """

    value: Fraction
    gamma: str
    f: dict[str, Fraction]
    hi: int
    attained: bool
    lift: Fraction


def _project_along(steps: tuple, k: int, e: FunctorExpr, v: FValue, top: Fraction):
    """Follow path steps below a distribution node.  Returns ("state", z)
    when the remaining path reads a state atom, ("const", c) when it
    evaluates to a constant, and ("complex", None) when another
    set/distribution node intervenes."""
    while True:
        step = steps[k]
        kind = step[0]
        if kind == "id":
            assert isinstance(v, StateRef)
            return ("state", v.state)
        if kind == "real":
            assert isinstance(v, Real)
            return ("const", v.value)
        if kind == "one":
            return ("const", top)
        if kind == "label":
            assert isinstance(v, Label)
            return ("const", top if v.symbol == step[1] else ZERO)
        if kind == "fst":
            assert isinstance(e, Product) and isinstance(v, Pair)
            e, v, k = e.left, v.left, k + 1
            continue
        if kind == "snd":
            assert isinstance(e, Product) and isinstance(v, Pair)
            e, v, k = e.right, v.right, k + 1
            continue
        if kind == "inl":
            assert isinstance(e, Coproduct)
            if isinstance(v, Inl):
                e, v, k = e.left, v.value, k + 1
                continue
            return ("const", ZERO)
        if kind == "inr":
            assert isinstance(e, Coproduct)
            if isinstance(v, Inr):
                e, v, k = e.right, v.value, k + 1
                continue
            return ("const", ZERO)
        return ("complex", None)


def _walk_to_dist(steps: tuple, e: FunctorExpr, v: FValue):
    """Walk a value along a path up to the first distribution step.
    Returns (inner_expr, DistOf, next_step_index) or None when the value
    leaves the path or the path holds no distribution step."""
    k = 0
    while k < len(steps):
        step = steps[k]
        kind = step[0]
        if kind == "dist":
            assert isinstance(e, Dist) and isinstance(v, DistOf)
            return (e.inner, v, k + 1)
        if kind == "fst":
            assert isinstance(v, Pair)
            e, v = e.left, v.left
        elif kind == "snd":
            assert isinstance(v, Pair)
            e, v = e.right, v.right
        elif kind == "inl":
            if not isinstance(v, Inl):
                return None
            e, v = e.left, v.value
        elif kind == "inr":
            if not isinstance(v, Inr):
                return None
            e, v = e.right, v.value
        elif kind == "pow":
            return None
        else:
            return None
        k += 1
    return None


def _marginal_on_states(steps: tuple, k: int, e: FunctorExpr, d: DistOf, top: Fraction):
    """Project a distribution's support along the remaining path; succeeds
    only when every support point reads a state atom."""
    out: dict[str, Fraction] = {}
    for u, w in d.weights:
        kind, payload = _project_along(steps, k, e, u, top)
        if kind != "state":
            return None
        out[payload] = out.get(payload, ZERO) + w
    return out


def _transport_envelope(
    dfn: DistFn, states: tuple[str, ...], m1: dict[str, Fraction], m2: dict[str, Fraction], top: Fraction
) -> dict[str, Fraction]:
    """An optimal-transport potential between two state distributions,
    extended to all states as the largest nonexpansive map agreeing with
    it on the supports, clamped into [0, top]."""
    support = sorted(set(m1) | set(m2))
    cost = tuple(tuple(dfn(a, b) for b in support) for a in support)
    problem = TransportProblem(
        points=tuple(support),
        cost=cost,
        mass_left=tuple(m1.get(s, ZERO) for s in support),
        mass_right=tuple(m2.get(s, ZERO) for s in support),
    )
    sol = wasserstein1(problem)
    pot = dict(zip(support, sol.potential))
    out: dict[str, Fraction] = {}
    for z in states:
        v = min(pot[u] + dfn(u, z) for u in support)
        out[z] = max(ZERO, min(v, top))
    return out


def lift_witness(sys_: System, dfn: DistFn, v1: FValue, v2: FValue) -> LiftWitness:
    """Search a family of candidate predicates for the pair (evaluation
    map, predicate) that best separates two behaviours over `dfn`.

    Candidates cover the closed-form cases: constant maps for coproduct
    mismatches, cones of the distance for set nodes and state atoms, and
    transport potentials for distribution nodes.  Every candidate value
    is exact, so the result is always a sound lower bound of the lifted
    distance; `attained` reports whether the bound is tight.
    """
    top = sys_.top
    states = sys_.states
    target = lift_value(sys_.expr, top, dfn, v1, v2)

    candidates: list[dict[str, Fraction]] = [
        {z: ZERO for z in states},
        {z: top for z in states},
    ]
    for z0 in states:
        candidates.append({z: min(dfn(z0, z), top) for z in states})
        candidates.append({z: max(ZERO, top - dfn(z0, z)) for z in states})
    for gamma in sys_.gammas:
        spot1 = _walk_to_dist(gamma.steps, sys_.expr, v1)
        spot2 = _walk_to_dist(gamma.steps, sys_.expr, v2)
        if spot1 is None or spot2 is None:
            continue
        inner1, d1, k1 = spot1
        inner2, d2, k2 = spot2
        m1 = _marginal_on_states(gamma.steps, k1, inner1, d1, top)
        m2 = _marginal_on_states(gamma.steps, k2, inner2, d2, top)
        if m1 is None or m2 is None:
            continue
        candidates.append(_transport_envelope(dfn, states, m1, m2, top))

    seen: set[tuple] = set()
    best = LiftWitness(value=ZERO, gamma=sys_.gammas[0].name, f={z: ZERO for z in states}, hi=1, attained=(target == ZERO), lift=target)
    for f in candidates:
        key = tuple(f[z] for z in states)
        if key in seen:
            continue
        seen.add(key)
        atom = lambda s, _f=f: Real(_f[s])
        w1 = apply_map(atom, None, v1)
        w2 = apply_map(atom, None, v2)
        for gamma in sys_.gammas:
            e1 = eval_gamma(gamma, sys_.expr, w1, top)
            e2 = eval_gamma(gamma, sys_.expr, w2, top)
            diff = e1 - e2
            if abs(diff) > best.value:
                best = LiftWitness(
                    value=abs(diff),
                    gamma=gamma.name,
                    f=dict(f),
                    hi=1 if diff > 0 else 2,
                    attained=abs(diff) == target,
                    lift=target,
                )
        if best.attained and best.value == target and target > ZERO:
            break
    return best


# ---------------------------------------------------------------------------
# The real-valued modal logic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MTop:
    pass


@dataclass(frozen=True)
class MModal:
    gamma: str
    inner: "MetricFormula"


@dataclass(frozen=True)
class MMin:
    parts: tuple["MetricFormula", ...]


@dataclass(frozen=True)
class MNeg:
    inner: "MetricFormula"


@dataclass(frozen=True)
class MMinusQ:
    inner: "MetricFormula"
    q: Fraction


MetricFormula = Union[MTop, MModal, MMin, MNeg, MMinusQ]

M_TOP = MTop()


def m_neg(f: MetricFormula) -> MetricFormula:
    if isinstance(f, MNeg):
        return f.inner
    return MNeg(f)


def m_minus(f: MetricFormula, q: Fraction) -> MetricFormula:
    if q == ZERO:
        return f
    if isinstance(f, MMinusQ):
        return MMinusQ(f.inner, f.q + q)
    return MMinusQ(f, q)


def m_min(parts: Iterable[MetricFormula]) -> MetricFormula:
    flat: list[MetricFormula] = []
    for p in parts:
        if isinstance(p, MMin):
            flat.extend(p.parts)
        elif p not in flat:
            flat.append(p)
    dedup: list[MetricFormula] = []
    for p in flat:
        if p not in dedup:
            dedup.append(p)
    if not dedup:
        return M_TOP
    if len(dedup) == 1:
        return dedup[0]
    return MMin(tuple(dedup))


def m_max(parts: Iterable[MetricFormula]) -> MetricFormula:
    return m_neg(m_min([m_neg(p) for p in parts]))


def m_const(c: Fraction, top: Fraction) -> MetricFormula:
    if c == top:
        return M_TOP
    return MMinusQ(M_TOP, top - c)


def metric_modal_depth(f: MetricFormula) -> int:
    if isinstance(f, MTop):
        return 0
    if isinstance(f, MModal):
        return 1 + metric_modal_depth(f.inner)
    if isinstance(f, MMin):
        return max((metric_modal_depth(p) for p in f.parts), default=0)
    if isinstance(f, (MNeg, MMinusQ)):
        return metric_modal_depth(f.inner)
    raise TypeError(f"unknown formula {f!r}")


def eval_metric_formula(sys_: System, f: MetricFormula) -> dict[str, Fraction]:
    """Value of a formula at every state; shared nodes evaluated once."""
    memo: dict[int, dict[str, Fraction]] = {}

    def go(g: MetricFormula) -> dict[str, Fraction]:
        got = memo.get(id(g))
        if got is not None:
            return got
        if isinstance(g, MTop):
            res = {x: sys_.top for x in sys_.states}
        elif isinstance(g, MModal):
            path = sys_.gamma_index.get(g.gamma)
            if path is None:
                raise KeyError(f"unknown evaluation map '{g.gamma}'")
            inner = go(g.inner)
            res = {x: sys_.gamma_value(path, inner, x) for x in sys_.states}
        elif isinstance(g, MMin):
            parts = [go(p) for p in g.parts]
            res = {x: min(p[x] for p in parts) if parts else sys_.top for x in sys_.states}
        elif isinstance(g, MNeg):
            inner = go(g.inner)
            res = {x: sys_.top - inner[x] for x in sys_.states}
        elif isinstance(g, MMinusQ):
            inner = go(g.inner)
            res = {x: max(ZERO, inner[x] - g.q) for x in sys_.states}
        else:
            raise TypeError(f"unknown formula {g!r}")
        memo[id(g)] = res
        return res

    return go(f)


def metric_formula_to_text(f: MetricFormula) -> str:
    def atom(g: MetricFormula) -> str:
        if isinstance(g, MTop):
            return "T"
        if isinstance(g, MNeg):
            return "~" + atom(g.inner)
        if isinstance(g, MModal):
            return f"[{g.gamma}]" + atom(g.inner)
        if isinstance(g, MMin):
            return "min(" + ", ".join(full(p) for p in g.parts) + ")"
        return "(" + full(g) + ")"

    def full(g: MetricFormula) -> str:
        if isinstance(g, MMinusQ):
            return f"{full(g.inner) if isinstance(g.inner, MMinusQ) else atom(g.inner)} - {g.q}"
        return atom(g)

    return full(f)


class MetricFormulaParseError(ValueError):
    pass


_RAT_IN_FORMULA = re.compile(r"\s*(\d+)\s*(?:/\s*(\d+))?")


def parse_metric_formula(text: str) -> MetricFormula:
    """Parse `T`, `~phi`, `[gamma]phi`, `min(phi, ...)`, `phi - q` and
    parentheses; `q` is a nonnegative rational."""
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def parse_full() -> MetricFormula:
        nonlocal pos
        out = parse_atom()
        while True:
            skip_ws()
            if pos < len(text) and text[pos] == "-":
                pos += 1
                m = _RAT_IN_FORMULA.match(text, pos)
                if not m:
                    raise MetricFormulaParseError(f"expected a rational after '-' at {pos}")
                num = int(m.group(1))
                den = int(m.group(2)) if m.group(2) else 1
                if den == 0:
                    raise MetricFormulaParseError("division by zero")
                pos = m.end()
                out = m_minus(out, Fraction(num, den))
            else:
                break
        return out

    def parse_atom() -> MetricFormula:
        nonlocal pos
        skip_ws()
        if pos >= len(text):
            raise MetricFormulaParseError("unexpected end of formula")
        c = text[pos]
        if c == "~":
            pos += 1
            return m_neg(parse_atom())
        if c == "[":
            depth = 0
            start = pos
            while pos < len(text):
                if text[pos] == "[":
                    depth += 1
                elif text[pos] == "]":
                    depth -= 1
                    if depth == 0:
                        break
                pos += 1
            if depth != 0:
                raise MetricFormulaParseError("unbalanced '[' in modality")
            name = text[start + 1 : pos]
            pos += 1
            if not name:
                raise MetricFormulaParseError("empty modality name")
            return MModal(name, parse_atom())
        if c == "(":
            pos += 1
            inner = parse_full()
            skip_ws()
            if pos >= len(text) or text[pos] != ")":
                raise MetricFormulaParseError("missing ')'")
            pos += 1
            return inner
        if text.startswith("min", pos):
            pos += 3
            skip_ws()
            if pos >= len(text) or text[pos] != "(":
                raise MetricFormulaParseError("expected '(' after min")
            pos += 1
            parts = [parse_full()]
            while True:
                skip_ws()
                if pos < len(text) and text[pos] == ",":
                    pos += 1
                    parts.append(parse_full())
                    continue
                break
            skip_ws()
            if pos >= len(text) or text[pos] != ")":
                raise MetricFormulaParseError("missing ')' after min arguments")
            pos += 1
            return m_min(parts)
        if c == "T":
            pos += 1
            return M_TOP
        raise MetricFormulaParseError(f"unexpected character {c!r} at position {pos}")

    out = parse_full()
    skip_ws()
    if pos != len(text):
        raise MetricFormulaParseError(f"trailing input at position {pos}: {text[pos:]!r}")
    return out


# ---------------------------------------------------------------------------
# Distance-certifying formulas
# ---------------------------------------------------------------------------


@dataclass
class LevelFormulas:
    """Formulas whose value at w tracks the iterate distance to a root
    state: `formula[i][u]` evaluates at w to the level-i distance between
    u and w, exactly where `attained[(i, u)]` holds and as a sound lower
    bound otherwise."""

    levels: list[dict[str, MetricFormula]]
    attained: dict[tuple[int, str], bool]
    values: dict[tuple[int, str], dict[str, Fraction]]


def _max_cover(
    sys_: System, parts: list[tuple[MetricFormula, dict[str, Fraction]]], top: Fraction
) -> tuple[MetricFormula, dict[str, Fraction]]:
    """Pointwise maximum of the parts, dropping parts that never set it."""
    target = {
        x: max((vals[x] for _, vals in parts), default=ZERO) for x in sys_.states
    }
    kept: list[MetricFormula] = []
    covered: set[str] = {x for x in sys_.states if target[x] == ZERO}
    for f, vals in sorted(parts, key=lambda it: -sum(it[1].values())):
        hits = {x for x in sys_.states if x not in covered and vals[x] == target[x]}
        if hits:
            kept.append(f)
            covered |= hits
        if len(covered) == len(sys_.states):
            break
    if not kept:
        return m_const(ZERO, top), target
    out = kept[0] if len(kept) == 1 else m_max(kept)
    return out, target


def distance_formula_family(sys_: System, result: DistanceResult) -> LevelFormulas:
    """Build, level by level, formulas that certify the iterate distances.

    At each level the witness search supplies an evaluation map and a
    predicate separating a pair of states; the predicate is expressed in
    the logic through the previous level's formulas, shifted and
    truncated so the new formula's value at the far state is exactly the
    separation and nowhere exceeds the iterate distance.

    Requires a stabilised table: each level nests the previous one, so a
    run that was cut off mid-climb would yield formulas as deep as the
    iteration cap with nothing to certify at the end.
    """
    if result.discount is not None:
        raise ValueError("formula synthesis works on undiscounted iterates")
    if result.certificate.kind != "stabilized-exact":
        raise RefusalError(
            "the distance iteration did not stabilise, so there is no exact "
            "table to certify; raise max_iterations or work with the "
            "iterate tables directly"
        )
    top = sys_.top
    zero_formula = m_const(ZERO, top)
    out = LevelFormulas(levels=[{u: zero_formula for u in sys_.states}], attained={}, values={})
    for u in sys_.states:
        out.attained[(0, u)] = True
        out.values[(0, u)] = {w: ZERO for w in sys_.states}
    for i in range(1, len(result.levels)):
        d_i = result.levels[i]
        d_prev = result.levels[i - 1]
        level: dict[str, MetricFormula] = {}
        for u in sys_.states:
            parts: list[tuple[MetricFormula, dict[str, Fraction]]] = []
            ok = True
            for z in sys_.states:
                tgt = d_i.get(u, z)
                if tgt == ZERO:
                    continue
                wit = lift_witness(sys_, d_prev.get, sys_.alpha[u], sys_.alpha[z])
                if wit.value == ZERO:
                    ok = False
                    continue
                psi_parts: list[MetricFormula] = []
                for v in sys_.states:
                    fv = wit.f.get(v, ZERO)
                    if fv > ZERO:
                        psi_parts.append(m_minus(m_neg(out.levels[i - 1][v]), top - fv))
                psi = m_max(psi_parts) if psi_parts else zero_formula
                phi: MetricFormula = MModal(wit.gamma, psi)
                vals = eval_metric_formula(sys_, phi)
                c_u, c_z = vals[u], vals[z]
                if c_z == c_u:
                    ok = False
                    continue
                if c_z > c_u:
                    chi = m_minus(phi, c_u)
                    chi_vals = {w: max(ZERO, vals[w] - c_u) for w in sys_.states}
                else:
                    chi = m_minus(m_neg(phi), top - c_u)
                    chi_vals = {w: max(ZERO, c_u - vals[w]) for w in sys_.states}
                if chi_vals[z] != tgt:
                    ok = False
                parts.append((chi, chi_vals))
            formula, values = _max_cover(sys_, parts, top)
            exact = ok and all(values[w] == d_i.get(u, w) for w in sys_.states)
            level[u] = formula
            out.attained[(i, u)] = exact
            out.values[(i, u)] = values
        out.levels.append(level)
    return out


@dataclass
class MetricSynthesis:
    x: str
    y: str
    formula: MetricFormula
    gap: Fraction
    depth: int
    attained: bool
    text: str
    distance: Fraction


def synthesize_metric_formula(
    sys_: System,
    x: str,
    y: str,
    *,
    distance: DistanceResult | None = None,
    family: LevelFormulas | None = None,
) -> MetricSynthesis | None:
    """A formula whose values at `x` and `y` differ by their distance (at
    the computed iterate), or None when that distance is zero."""
    sys_.require_state(x)
    sys_.require_state(y)
    result = distance or behavioural_distance(sys_)
    d_xy = result.value(x, y)
    if d_xy == ZERO:
        return None
    family = family or distance_formula_family(sys_, result)
    last = len(result.levels) - 1
    best: MetricSynthesis | None = None
    for root, other in ((y, x), (x, y)):
        f = family.levels[last][root]
        vals = eval_metric_formula(sys_, f)
        gap = abs(vals[other] - vals[root])
        cand = MetricSynthesis(
            x=x,
            y=y,
            formula=f,
            gap=gap,
            depth=metric_modal_depth(f),
            attained=family.attained[(last, root)] and gap == d_xy,
            text=metric_formula_to_text(f),
            distance=d_xy,
        )
        if best is None or cand.gap > best.gap:
            best = cand
    return best


def logical_distance(
    sys_: System,
    x: str,
    y: str,
    *,
    distance: DistanceResult | None = None,
    family: LevelFormulas | None = None,
) -> Fraction:
    """The distance the logic itself observes between two states: the
    largest value gap over the synthesized certificate formulas.  Always
    a lower bound of the behavioural distance; tight on the supported
    functor shapes."""
    synth = synthesize_metric_formula(sys_, x, y, distance=distance, family=family)
    return synth.gap if synth else ZERO


# ---------------------------------------------------------------------------
# Envelopes and the quantitative transfer condition
# ---------------------------------------------------------------------------


def envelope(sys_: System, dfn: DistFn, p: PredicateR) -> dict[str, Fraction]:
    """The least nonexpansive predicate dominating `p`."""
    return {
        z: max(max(ZERO, p.get(u, ZERO) - dfn(u, z)) for u in sys_.states)
        for z in sys_.states
    }


@dataclass
class GammaSlack:
    gamma: str
    lhs: Fraction
    rhs: Fraction
    slack: Fraction


@dataclass
class MetricStep2Check:
    ok: bool
    rows: tuple[GammaSlack, ...]

    def worst(self) -> Fraction:
        return min((r.slack for r in self.rows), default=ZERO)


def check_transfer_metric(
    sys_: System,
    s: str,
    p1: PredicateR,
    t: str,
    p2: PredicateR,
    eps: Fraction,
) -> MetricStep2Check:
    """Quantitative reply admissibility: under every evaluation map, the
    reply's value at `t` may fall short of the challenge's value at `s`
    by at most `eps`.  Each row reports one map's slack; negative slack
    pinpoints the violated maps."""
    rows = []
    for gamma in sys_.gammas:
        lhs = sys_.gamma_value(gamma, p1, s)
        rhs = sys_.gamma_value(gamma, p2, t)
        rows.append(GammaSlack(gamma=gamma.name, lhs=lhs, rhs=rhs, slack=eps - (lhs - rhs)))
    return MetricStep2Check(ok=all(r.slack >= ZERO for r in rows), rows=tuple(rows))


def defender_can_reply_metric(
    sys_: System, s: str, p1: PredicateR, t: str, eps: Fraction
) -> bool:
    """Whether any reply passes the transfer check.  The all-top reply
    dominates every other pointwise under every (monotone) evaluation
    map, so checking it decides the question."""
    p2 = {z: sys_.top for z in sys_.states}
    return check_transfer_metric(sys_, s, p1, t, p2, eps).ok


# ---------------------------------------------------------------------------
# Independent interval check for the lifting
# ---------------------------------------------------------------------------


@dataclass
class OracleInterval:
    lower: Fraction
    upper: Fraction

    def contains(self, v: Fraction) -> bool:
        return self.lower <= v <= self.upper


def oracle_intervals(
    sys_: System,
    dfn: DistFn,
    *,
    grid_steps: int = 8,
    limit: int = 200_000,
) -> dict[tuple[str, str], OracleInterval]:
    """Sandwich the lifted distance between brute-force bounds.

    The lower end is the best separation achieved by any grid-valued
    nonexpansive predicate, a genuine feasible value.  The upper end
    relaxes nonexpansiveness by one grid step and adds two grid steps,
    which covers the loss of quantising an optimal predicate (one step
    pointwise, hence at most one step per side of the evaluation).  The
    closed-form lifting of every supported functor shape must land in
    the interval; a miss would expose a computation error.
    """
    states = sys_.states
    n = len(states)
    g = sys_.top / grid_steps
    if (grid_steps + 1) ** n > limit:
        raise RefusalError(
            f"oracle grid of {(grid_steps + 1) ** n} maps exceeds the limit {limit}"
        )
    pairs = list(itertools.combinations(states, 2))
    lower: dict[tuple[str, str], Fraction] = {pq: ZERO for pq in pairs}
    relaxed: dict[tuple[str, str], Fraction] = {pq: ZERO for pq in pairs}
    levels = [k * g for k in range(grid_steps + 1)]
    for assignment in itertools.product(levels, repeat=n):
        f = dict(zip(states, assignment))
        strict = True
        loose = True
        for x, y in pairs:
            gap = abs(f[x] - f[y])
            d = dfn(x, y)
            if gap > d:
                strict = False
                if gap > d + g:
                    loose = False
                    break
        if not loose:
            continue
        evals = {
            x: [
                eval_gamma(gamma, sys_.expr, sys_.imageR(f, x), sys_.top)
                for gamma in sys_.gammas
            ]
            for x in states
        }
        for x, y in pairs:
            sep = max(
                (abs(a - b) for a, b in zip(evals[x], evals[y])), default=ZERO
            )
            if strict and sep > lower[(x, y)]:
                lower[(x, y)] = sep
            if sep > relaxed[(x, y)]:
                relaxed[(x, y)] = sep
    return {
        pq: OracleInterval(lower=lower[pq], upper=min(relaxed[pq] + 2 * g, sys_.top))
        for pq in pairs
    }
