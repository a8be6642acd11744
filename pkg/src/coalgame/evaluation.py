"""Evaluation maps generated from a functor expression.

Two families are produced:

* gamma paths: real-valued evaluation maps F[0, top] -> [0, top].  Each
  path walks the expression tree, choosing a component at products, a
  side at coproducts and a label at label leaves; powerset nodes take
  suprema, distribution nodes take expectations.

* lambda maps: two-valued evaluation maps F2 -> 2 used by the classical
  logic and game.  At powerset nodes a diamond ("some element passes")
  and a box ("set non-empty and all elements pass") variant is generated
  over a family of inner tests; distribution nodes use rational threshold
  maps over the mass of an inner test; coproducts contribute side
  indicators and side embeddings; label components contribute equality
  indicators and label-relative guard tests.

Both families are deterministic: generation order and names depend only
on the expression (plus, for thresholds, the rational constants drawn
from the system at hand).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

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
    Unit,
)

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Gamma paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GammaPath:
    """One real-valued evaluation map, encoded as the walk that defines it."""

    steps: tuple
    name: str


_STEP_TOKENS = {"pow": "sup", "dist": "exp", "fst": "fst", "snd": "snd", "inl": "l", "inr": "r"}


def _gamma_name(steps: tuple) -> str:
    tokens: list[str] = []
    for step in reversed(steps):
        kind = step[0]
        if kind in ("id", "real"):
            continue
        if kind == "one":
            tokens.append("term")
        elif kind == "label":
            tokens.append(f"lab={step[1]}")
        else:
            tokens.append(_STEP_TOKENS[kind])
    if not tokens:
        return "id" if steps[-1][0] == "id" else "val"
    return ".".join(tokens)


def generate_gammas(expr: FunctorExpr) -> tuple[GammaPath, ...]:
    """All gamma paths through the expression, in deterministic order."""

    def walk(e: FunctorExpr) -> list[tuple]:
        if isinstance(e, Identity):
            return [(("id",),)]
        if isinstance(e, ConstReal):
            return [(("real",),)]
        if isinstance(e, ConstOne):
            return [(("one",),)]
        if isinstance(e, ConstLabels):
            return [(("label", a),) for a in e.labels]
        if isinstance(e, Pow):
            return [(("pow",),) + s for s in walk(e.inner)]
        if isinstance(e, Dist):
            return [(("dist",),) + s for s in walk(e.inner)]
        if isinstance(e, Product):
            return [(("fst",),) + s for s in walk(e.left)] + [
                (("snd",),) + s for s in walk(e.right)
            ]
        if isinstance(e, Coproduct):
            return [(("inl",),) + s for s in walk(e.left)] + [
                (("inr",),) + s for s in walk(e.right)
            ]
        raise TypeError(f"unknown functor node {e!r}")

    return tuple(GammaPath(steps=s, name=_gamma_name(s)) for s in walk(expr))


def eval_gamma(path: GammaPath, expr: FunctorExpr, value: FValue, top: Fraction) -> Fraction:
    """Evaluate a gamma path on a value whose atoms are rationals.

    The supremum over an empty set is 0.  Off-path coproduct sides
    evaluate to 0.  Every map is monotone in the atom values.
    """

    def go(k: int, e: FunctorExpr, val: FValue) -> Fraction:
        step = path.steps[k]
        kind = step[0]
        if kind == "id":
            assert isinstance(val, Real), "gamma evaluation needs substituted atoms"
            return val.value
        if kind == "real":
            assert isinstance(val, Real)
            return val.value
        if kind == "one":
            return top
        if kind == "label":
            assert isinstance(val, Label)
            return top if val.symbol == step[1] else ZERO
        if kind == "pow":
            assert isinstance(e, Pow) and isinstance(val, SetOf)
            if not val.elems:
                return ZERO
            return max(go(k + 1, e.inner, u) for u in val.elems)
        if kind == "dist":
            assert isinstance(e, Dist) and isinstance(val, DistOf)
            return sum((w * go(k + 1, e.inner, u) for u, w in val.weights), ZERO)
        if kind == "fst":
            assert isinstance(e, Product) and isinstance(val, Pair)
            return go(k + 1, e.left, val.left)
        if kind == "snd":
            assert isinstance(e, Product) and isinstance(val, Pair)
            return go(k + 1, e.right, val.right)
        if kind == "inl":
            assert isinstance(e, Coproduct)
            if isinstance(val, Inl):
                return go(k + 1, e.left, val.value)
            return ZERO
        if kind == "inr":
            assert isinstance(e, Coproduct)
            if isinstance(val, Inr):
                return go(k + 1, e.right, val.value)
            return ZERO
        raise ValueError(f"unknown path step {step!r}")

    return go(0, expr, value)


# ---------------------------------------------------------------------------
# Lambda maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LId:
    pass


@dataclass(frozen=True)
class LOne:
    pass


@dataclass(frozen=True)
class LRealGe:
    q: Fraction


@dataclass(frozen=True)
class LLabelIs:
    a: str


@dataclass(frozen=True)
class LFst:
    inner: "LTest"


@dataclass(frozen=True)
class LSnd:
    inner: "LTest"


@dataclass(frozen=True)
class LGuard:
    """Label-relative test on a pair: the label component (at `label_at`)
    is compared with `label`, the other component is tested with `inner`.
    Mode "conj" requires both, mode "impl" requires the inner test only on
    matching labels (vacuously true otherwise)."""

    label_at: str  # "fst" | "snd"
    label: str
    inner: "LTest"
    mode: str  # "conj" | "impl"


@dataclass(frozen=True)
class LSideIs:
    side: str  # "l" | "r"


@dataclass(frozen=True)
class LOnSide:
    side: str  # "l" | "r"
    inner: "LTest"
    other: int  # value on the opposite side (0 strict, 1 weak)


@dataclass(frozen=True)
class LDia:
    inner: "LTest"


@dataclass(frozen=True)
class LBox:
    inner: "LTest"


@dataclass(frozen=True)
class LMassGe:
    q: Fraction
    inner: "LTest"


LTest = Union[LId, LOne, LRealGe, LLabelIs, LFst, LSnd, LGuard, LSideIs, LOnSide, LDia, LBox, LMassGe]


@dataclass(frozen=True)
class LambdaMap:
    name: str
    test: LTest


def eval_lambda(lam: LambdaMap | LTest, value: FValue) -> int:
    """Evaluate a two-valued map on a value whose atoms are bits (0/1)."""
    t = lam.test if isinstance(lam, LambdaMap) else lam

    def go(test: LTest, val: FValue) -> int:
        if isinstance(test, LId):
            assert isinstance(val, Real), "lambda evaluation needs substituted atoms"
            return 1 if val.value >= ONE else 0
        if isinstance(test, LOne):
            return 1
        if isinstance(test, LRealGe):
            assert isinstance(val, Real)
            return 1 if val.value >= test.q else 0
        if isinstance(test, LLabelIs):
            assert isinstance(val, Label)
            return 1 if val.symbol == test.a else 0
        if isinstance(test, LFst):
            assert isinstance(val, Pair)
            return go(test.inner, val.left)
        if isinstance(test, LSnd):
            assert isinstance(val, Pair)
            return go(test.inner, val.right)
        if isinstance(test, LGuard):
            assert isinstance(val, Pair)
            lab = val.left if test.label_at == "fst" else val.right
            other = val.right if test.label_at == "fst" else val.left
            assert isinstance(lab, Label)
            match = lab.symbol == test.label
            if test.mode == "conj":
                return 1 if match and go(test.inner, other) else 0
            return 1 if (not match) or go(test.inner, other) else 0
        if isinstance(test, LSideIs):
            if isinstance(val, Inl):
                return 1 if test.side == "l" else 0
            assert isinstance(val, Inr)
            return 1 if test.side == "r" else 0
        if isinstance(test, LOnSide):
            if isinstance(val, Inl):
                return go(test.inner, val.value) if test.side == "l" else test.other
            assert isinstance(val, Inr)
            return go(test.inner, val.value) if test.side == "r" else test.other
        if isinstance(test, LDia):
            assert isinstance(val, SetOf)
            return 1 if any(go(test.inner, u) for u in val.elems) else 0
        if isinstance(test, LBox):
            assert isinstance(val, SetOf)
            return 1 if val.elems and all(go(test.inner, u) for u in val.elems) else 0
        if isinstance(test, LMassGe):
            assert isinstance(val, DistOf)
            mass = sum((w for u, w in val.weights if go(test.inner, u)), ZERO)
            return 1 if mass >= test.q else 0
        raise TypeError(f"unknown test {test!r}")

    return go(t, value)


@dataclass(frozen=True)
class LambdaContext:
    """System-derived constants for threshold maps.

    `mass_thresholds` are the rationals used at distribution nodes (the
    reachable cumulative masses of the system, midpoint-refined) and
    `real_values` the rationals occurring at real-constant leaves.
    """

    mass_thresholds: tuple[Fraction, ...] = ()
    real_values: tuple[Fraction, ...] = ()
    top: Fraction = ONE


def _combine(prefix: str, inner: str) -> str:
    return prefix if inner == "id" else f"{prefix}.{inner}"


def _tests(expr: FunctorExpr, ctx: LambdaContext) -> list[tuple[str, LTest, LTest]]:
    """Named (positive, weak) test pairs for an expression.

    The positive test feeds diamonds, conjunctive guards and thresholds;
    the weak test is its implication-shaped counterpart used under boxes,
    where failing the guard must not falsify the whole test.
    """
    if isinstance(expr, Identity):
        return [("id", LId(), LId())]
    if isinstance(expr, ConstOne):
        return [("one", LOne(), LOne())]
    if isinstance(expr, ConstReal):
        qs = sorted({q for q in ctx.real_values if 0 < q <= expr.top}) or [expr.top]
        return [(f"val>={q}", LRealGe(q), LRealGe(q)) for q in qs]
    if isinstance(expr, ConstLabels):
        return [(f"is.{a}", LLabelIs(a), LLabelIs(a)) for a in expr.labels]
    if isinstance(expr, Product):
        out: list[tuple[str, LTest, LTest]] = []
        left_labels = isinstance(expr.left, ConstLabels)
        right_labels = isinstance(expr.right, ConstLabels)
        if left_labels and not right_labels:
            for (n, p, w) in _tests(expr.right, ctx):
                out.append((n, LSnd(p), LSnd(w)))
            for a in expr.left.labels:
                for (n, p, w) in _tests(expr.right, ctx):
                    out.append(
                        (
                            _combine(a, n),
                            LGuard("fst", a, p, "conj"),
                            LGuard("fst", a, w, "impl"),
                        )
                    )
            return out
        if right_labels and not left_labels:
            for (n, p, w) in _tests(expr.left, ctx):
                out.append((n, LFst(p), LFst(w)))
            for a in expr.right.labels:
                for (n, p, w) in _tests(expr.left, ctx):
                    out.append(
                        (
                            _combine(a, n),
                            LGuard("snd", a, p, "conj"),
                            LGuard("snd", a, w, "impl"),
                        )
                    )
            return out
        for (n, p, w) in _tests(expr.left, ctx):
            out.append(("fst" if n == "id" else f"{n}.fst", LFst(p), LFst(w)))
        for (n, p, w) in _tests(expr.right, ctx):
            out.append(("snd" if n == "id" else f"{n}.snd", LSnd(p), LSnd(w)))
        return out
    if isinstance(expr, Coproduct):
        out = [("side.l", LSideIs("l"), LSideIs("l")), ("side.r", LSideIs("r"), LSideIs("r"))]
        for (n, p, w) in _tests(expr.left, ctx):
            out.append((f"{n}.l", LOnSide("l", p, 0), LOnSide("l", w, 1)))
        for (n, p, w) in _tests(expr.right, ctx):
            out.append((f"{n}.r", LOnSide("r", p, 0), LOnSide("r", w, 1)))
        return out
    if isinstance(expr, Pow):
        out = []
        for (n, p, w) in _tests(expr.inner, ctx):
            out.append((_combine("dia", _strip_id(n)), LDia(p), LDia(p)))
            out.append((_combine("box", _strip_id(n)), LBox(w), LBox(w)))
        return out
    if isinstance(expr, Dist):
        out = []
        qs = [q for q in ctx.mass_thresholds if 0 < q <= 1] or [ONE]
        for (n, p, w) in _tests(expr.inner, ctx):
            for q in qs:
                name = f"mass>={q}" if n == "id" else f"mass[{n}]>={q}"
                out.append((name, LMassGe(q, p), LMassGe(q, w)))
        return out
    raise TypeError(f"unknown functor node {expr!r}")


def _strip_id(name: str) -> str:
    return "id" if name == "id" else name


def generate_lambdas(expr: FunctorExpr, ctx: LambdaContext | None = None) -> tuple[LambdaMap, ...]:
    """The two-valued evaluation-map family for an expression.

    Deterministic in the expression and the context constants.  Duplicate
    names cannot arise; duplicate behaviours are possible but harmless.
    """
    ctx = ctx or LambdaContext()
    return tuple(LambdaMap(name=n, test=p) for (n, p, _w) in _tests(expr, ctx))


def lambda_vector(lams: tuple[LambdaMap, ...], value: FValue) -> tuple[int, ...]:
    """Evaluate every map on one value; used for caching in game search."""
    return tuple(eval_lambda(l, value) for l in lams)
