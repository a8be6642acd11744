"""Functor grammar and concrete one-step behaviour values.

The branching type of a system is a finite tree built from identity,
constant, finite-powerset, finite-distribution, product and coproduct
nodes.  Concrete one-step behaviours (:class:`FValue`) mirror that tree
shape; every value is validated against the functor expression it is
supposed to inhabit.

All numeric payloads are exact :class:`fractions.Fraction` values.  No
floating point arithmetic is used anywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

ZERO = Fraction(0)
ONE = Fraction(1)


class ShapeError(ValueError):
    """A value does not inhabit the functor expression it was checked against."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"at {path or 'root'}: {message}")


# ---------------------------------------------------------------------------
# Functor expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Identity:
    """The argument itself; state references live here."""


@dataclass(frozen=True)
class ConstReal:
    """Constant functor of rationals in the closed interval [0, top]."""

    top: Fraction = ONE


@dataclass(frozen=True)
class ConstOne:
    """Constant singleton functor, the one-element set."""


@dataclass(frozen=True)
class ConstLabels:
    """Constant functor of a finite non-empty label alphabet."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("label alphabet must be non-empty")
        object.__setattr__(self, "labels", tuple(sorted(set(self.labels))))


@dataclass(frozen=True)
class Pow:
    """Finite powerset of the inner functor."""

    inner: "FunctorExpr"


@dataclass(frozen=True)
class Dist:
    """Finitely supported probability distributions over the inner functor."""

    inner: "FunctorExpr"


@dataclass(frozen=True)
class Product:
    left: "FunctorExpr"
    right: "FunctorExpr"


@dataclass(frozen=True)
class Coproduct:
    left: "FunctorExpr"
    right: "FunctorExpr"


FunctorExpr = Union[
    Identity, ConstReal, ConstOne, ConstLabels, Pow, Dist, Product, Coproduct
]


def expr_to_text(expr: FunctorExpr) -> str:
    """Render a functor expression in its concrete syntax.

    Product binds tighter than coproduct; both associate to the right in
    the printed form, with parentheses inserted where required.
    """

    def go(e: FunctorExpr, level: int) -> str:
        # level 0: coproduct allowed, 1: product allowed, 2: atoms only
        if isinstance(e, Coproduct):
            s = f"{go(e.left, 1)} + {go(e.right, 0)}"
            return f"({s})" if level > 0 else s
        if isinstance(e, Product):
            s = f"{go(e.left, 2)} x {go(e.right, 1)}"
            return f"({s})" if level > 1 else s
        if isinstance(e, Identity):
            return "Id"
        if isinstance(e, ConstReal):
            return f"Real(top={e.top})"
        if isinstance(e, ConstOne):
            return "One"
        if isinstance(e, ConstLabels):
            return "Labels{" + ",".join(e.labels) + "}"
        if isinstance(e, Pow):
            return f"Pow({go(e.inner, 0)})"
        if isinstance(e, Dist):
            return f"Dist({go(e.inner, 0)})"
        raise TypeError(f"unknown functor node {e!r}")

    return go(expr, 0)


def expr_tops(expr: FunctorExpr) -> set[Fraction]:
    """Collect the `top` bounds of every ConstReal occurrence."""
    out: set[Fraction] = set()
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, ConstReal):
            out.add(e.top)
        elif isinstance(e, (Pow, Dist)):
            stack.append(e.inner)
        elif isinstance(e, (Product, Coproduct)):
            stack.append(e.left)
            stack.append(e.right)
    return out


def expr_has_node(expr: FunctorExpr, kinds: tuple[type, ...]) -> bool:
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, kinds):
            return True
        if isinstance(e, (Pow, Dist)):
            stack.append(e.inner)
        elif isinstance(e, (Product, Coproduct)):
            stack.append(e.left)
            stack.append(e.right)
    return False


# ---------------------------------------------------------------------------
# Behaviour values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateRef:
    """A reference to a system state, the payload at Identity leaves."""

    state: str


@dataclass(frozen=True)
class Real:
    """A rational number; inhabits ConstReal leaves and substituted atoms."""

    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Unit:
    """The sole inhabitant of ConstOne."""


@dataclass(frozen=True)
class Label:
    symbol: str


@dataclass(frozen=True)
class SetOf:
    """A finite set of values; construction deduplicates and sorts."""

    elems: tuple["FValue", ...]

    def __post_init__(self):
        canon = tuple(sorted(set(self.elems), key=sort_key))
        object.__setattr__(self, "elems", canon)


@dataclass(frozen=True)
class DistOf:
    """A finitely supported distribution; weights are positive and sum to 1.

    Construction merges duplicate support points and sorts the support.
    """

    weights: tuple[tuple["FValue", Fraction], ...]

    def __post_init__(self):
        merged: dict[FValue, Fraction] = {}
        for v, w in self.weights:
            w = w if isinstance(w, Fraction) else Fraction(w)
            merged[v] = merged.get(v, ZERO) + w
        items = tuple(
            (v, w) for v, w in sorted(merged.items(), key=lambda it: sort_key(it[0]))
        )
        for v, w in items:
            if w <= 0:
                raise ValueError(f"weight {w} of {value_to_text(v)} is not positive")
        total = sum((w for _, w in items), ZERO)
        if total != ONE:
            raise ValueError(f"weights sum to {total}, expected 1")
        object.__setattr__(self, "weights", items)

    def support(self) -> tuple["FValue", ...]:
        return tuple(v for v, _ in self.weights)

    def mass(self, v: "FValue") -> Fraction:
        for u, w in self.weights:
            if u == v:
                return w
        return ZERO


@dataclass(frozen=True)
class Pair:
    left: "FValue"
    right: "FValue"


@dataclass(frozen=True)
class Inl:
    value: "FValue"


@dataclass(frozen=True)
class Inr:
    value: "FValue"


FValue = Union[StateRef, Real, Unit, Label, SetOf, DistOf, Pair, Inl, Inr]

_TAGS = {StateRef: 0, Real: 1, Unit: 2, Label: 3, SetOf: 4, DistOf: 5, Pair: 6, Inl: 7, Inr: 8}


def sort_key(v: FValue):
    """Total deterministic order on values, used to canonicalise sets and
    distributions and to break ties everywhere a choice has to be made."""
    tag = _TAGS[type(v)]
    if isinstance(v, StateRef):
        return (tag, v.state)
    if isinstance(v, Real):
        return (tag, v.value)
    if isinstance(v, Unit):
        return (tag,)
    if isinstance(v, Label):
        return (tag, v.symbol)
    if isinstance(v, SetOf):
        return (tag, tuple(sort_key(e) for e in v.elems))
    if isinstance(v, DistOf):
        return (tag, tuple((sort_key(u), w) for u, w in v.weights))
    if isinstance(v, Pair):
        return (tag, sort_key(v.left), sort_key(v.right))
    if isinstance(v, (Inl, Inr)):
        return (tag, sort_key(v.value))
    raise TypeError(f"unknown value {v!r}")


def value_to_text(v: FValue) -> str:
    if isinstance(v, StateRef):
        return v.state
    if isinstance(v, Real):
        return f"real {v.value}"
    if isinstance(v, Unit):
        return "unit"
    if isinstance(v, Label):
        return f"label {v.symbol}"
    if isinstance(v, SetOf):
        return "{" + ", ".join(value_to_text(e) for e in v.elems) + "}"
    if isinstance(v, DistOf):
        inner = ", ".join(f"{value_to_text(u)}: {w}" for u, w in v.weights)
        return "dist{" + inner + "}"
    if isinstance(v, Pair):
        return f"({value_to_text(v.left)}, {value_to_text(v.right)})"
    if isinstance(v, Inl):
        return f"inl {value_to_text(v.value)}"
    if isinstance(v, Inr):
        return f"inr {value_to_text(v.value)}"
    raise TypeError(f"unknown value {v!r}")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_value(
    expr: FunctorExpr,
    v: FValue,
    *,
    states: Iterable[str] | None = None,
    atoms: str = "state",
    path: str = "",
) -> None:
    """Check that `v` inhabits `expr`.

    `atoms` selects what may sit at Identity leaves: "state" requires a
    StateRef (optionally drawn from `states`), "real" requires a Real
    (this is the shape of values after a predicate has been applied),
    "any" accepts either.
    Raises :class:`ShapeError` with the offending position on failure.
    """
    known = set(states) if states is not None else None

    def go(e: FunctorExpr, val: FValue, p: str) -> None:
        if isinstance(e, Identity):
            if isinstance(val, StateRef):
                if atoms == "real":
                    raise ShapeError(p, "expected a substituted rational, found a state reference")
                if known is not None and val.state not in known:
                    raise ShapeError(p, f"unknown state '{val.state}'")
                return
            if isinstance(val, Real):
                if atoms == "state":
                    raise ShapeError(p, "expected a state reference, found a rational")
                return
            raise ShapeError(p, f"expected a state reference, found {value_to_text(val)}")
        if isinstance(e, ConstReal):
            if not isinstance(val, Real):
                raise ShapeError(p, f"expected a rational, found {value_to_text(val)}")
            if not (ZERO <= val.value <= e.top):
                raise ShapeError(p, f"rational {val.value} outside [0, {e.top}]")
            return
        if isinstance(e, ConstOne):
            if not isinstance(val, Unit):
                raise ShapeError(p, f"expected unit, found {value_to_text(val)}")
            return
        if isinstance(e, ConstLabels):
            if not isinstance(val, Label):
                raise ShapeError(p, f"expected a label, found {value_to_text(val)}")
            if val.symbol not in e.labels:
                raise ShapeError(p, f"label '{val.symbol}' not in alphabet {{{','.join(e.labels)}}}")
            return
        if isinstance(e, Pow):
            if not isinstance(val, SetOf):
                raise ShapeError(p, f"expected a set, found {value_to_text(val)}")
            for i, u in enumerate(val.elems):
                go(e.inner, u, f"{p}.set[{i}]")
            return
        if isinstance(e, Dist):
            if not isinstance(val, DistOf):
                raise ShapeError(p, f"expected a distribution, found {value_to_text(val)}")
            for i, (u, _) in enumerate(val.weights):
                go(e.inner, u, f"{p}.dist[{i}]")
            return
        if isinstance(e, Product):
            if not isinstance(val, Pair):
                raise ShapeError(p, f"expected a pair, found {value_to_text(val)}")
            go(e.left, val.left, f"{p}.fst")
            go(e.right, val.right, f"{p}.snd")
            return
        if isinstance(e, Coproduct):
            if isinstance(val, Inl):
                go(e.left, val.value, f"{p}.inl")
                return
            if isinstance(val, Inr):
                go(e.right, val.value, f"{p}.inr")
                return
            raise ShapeError(p, f"expected inl/inr, found {value_to_text(val)}")
        raise TypeError(f"unknown functor node {e!r}")

    go(expr, v, path)


# ---------------------------------------------------------------------------
# Functorial action on predicates
# ---------------------------------------------------------------------------


AtomMap = Union[Mapping[str, FValue], Callable[[str], FValue]]


def apply_map(f: AtomMap, expr: FunctorExpr | None, v: FValue) -> FValue:
    """Apply the functor to a state map: replace every StateRef by `f`'s
    image, re-normalising sets (deduplication) and distributions (merging
    of collided support points) on the way up.

    `expr` is optional; when given, `v` is validated against it first.
    """
    if expr is not None:
        validate_value(expr, v, atoms="any")
    lookup = f if callable(f) else f.__getitem__

    def go(val: FValue) -> FValue:
        if isinstance(val, StateRef):
            return lookup(val.state)
        if isinstance(val, (Real, Unit, Label)):
            return val
        if isinstance(val, SetOf):
            return SetOf(tuple(go(u) for u in val.elems))
        if isinstance(val, DistOf):
            return DistOf(tuple((go(u), w) for u, w in val.weights))
        if isinstance(val, Pair):
            return Pair(go(val.left), go(val.right))
        if isinstance(val, Inl):
            return Inl(go(val.value))
        if isinstance(val, Inr):
            return Inr(go(val.value))
        raise TypeError(f"unknown value {val!r}")

    return go(v)


def value_states(v: FValue) -> set[str]:
    """All states referenced anywhere inside a value."""
    out: set[str] = set()
    stack: list[FValue] = [v]
    while stack:
        val = stack.pop()
        if isinstance(val, StateRef):
            out.add(val.state)
        elif isinstance(val, SetOf):
            stack.extend(val.elems)
        elif isinstance(val, DistOf):
            stack.extend(u for u, _ in val.weights)
        elif isinstance(val, Pair):
            stack.extend((val.left, val.right))
        elif isinstance(val, (Inl, Inr)):
            stack.append(val.value)
    return out


# ---------------------------------------------------------------------------
# Enumeration of two-valued inhabitants
# ---------------------------------------------------------------------------


BIT0 = Real(ZERO)
BIT1 = Real(ONE)


def enumerate_f2(expr: FunctorExpr, *, limit: int = 4096) -> list[FValue]:
    """Enumerate every inhabitant of the functor applied to the two-element
    set {0, 1}.

    Only available when the expression contains no Dist or ConstReal node
    (those carry infinitely many inhabitants).  Raises ValueError if the
    enumeration would exceed `limit` values.
    """

    def go(e: FunctorExpr) -> list[FValue]:
        if isinstance(e, Identity):
            return [BIT0, BIT1]
        if isinstance(e, ConstReal):
            raise ValueError("cannot enumerate inhabitants of a real-constant node")
        if isinstance(e, Dist):
            raise ValueError("cannot enumerate inhabitants of a distribution node")
        if isinstance(e, ConstOne):
            return [Unit()]
        if isinstance(e, ConstLabels):
            return [Label(a) for a in e.labels]
        if isinstance(e, Pow):
            base = go(e.inner)
            if 2 ** len(base) > limit:
                raise ValueError(f"powerset enumeration exceeds limit {limit}")
            out: list[FValue] = []
            for mask in range(2 ** len(base)):
                elems = tuple(base[i] for i in range(len(base)) if mask >> i & 1)
                out.append(SetOf(elems))
            return out
        if isinstance(e, Product):
            ls, rs = go(e.left), go(e.right)
            if len(ls) * len(rs) > limit:
                raise ValueError(f"product enumeration exceeds limit {limit}")
            return [Pair(l, r) for l in ls for r in rs]
        if isinstance(e, Coproduct):
            return [Inl(l) for l in go(e.left)] + [Inr(r) for r in go(e.right)]
        raise TypeError(f"unknown functor node {e!r}")

    vals = go(expr)
    if len(vals) > limit:
        raise ValueError(f"enumeration exceeds limit {limit}")
    return vals


# ---------------------------------------------------------------------------
# Lifted order
# ---------------------------------------------------------------------------


def lifted_order_leq(expr: FunctorExpr, t1: FValue, t2: FValue) -> bool:
    """The functor-lifted order on values over ordered atoms.

    Atoms (Identity leaves) compare by their numeric payload, constants by
    equality, products componentwise, coproducts only within the same
    side, powersets by the Egli-Milner conditions and distributions by the
    existence of a coupling supported on the inner relation.
    """
    from .transport import coupling_feasible

    def go(e: FunctorExpr, a: FValue, b: FValue) -> bool:
        if isinstance(e, Identity):
            if isinstance(a, Real) and isinstance(b, Real):
                return a.value <= b.value
            return a == b  # state references are unordered atoms
        if isinstance(e, (ConstReal, ConstOne, ConstLabels)):
            return a == b
        if isinstance(e, Pow):
            assert isinstance(a, SetOf) and isinstance(b, SetOf)
            fwd = all(any(go(e.inner, u, v) for v in b.elems) for u in a.elems)
            bwd = all(any(go(e.inner, u, v) for u in a.elems) for v in b.elems)
            return fwd and bwd
        if isinstance(e, Dist):
            assert isinstance(a, DistOf) and isinstance(b, DistOf)
            left = a.support()
            right = b.support()
            admissible = {
                (i, j)
                for i, u in enumerate(left)
                for j, v in enumerate(right)
                if go(e.inner, u, v)
            }
            return coupling_feasible(
                [w for _, w in a.weights], [w for _, w in b.weights], admissible
            )
        if isinstance(e, Product):
            assert isinstance(a, Pair) and isinstance(b, Pair)
            return go(e.left, a.left, b.left) and go(e.right, a.right, b.right)
        if isinstance(e, Coproduct):
            if isinstance(a, Inl) and isinstance(b, Inl):
                return go(e.left, a.value, b.value)
            if isinstance(a, Inr) and isinstance(b, Inr):
                return go(e.right, a.value, b.value)
            return False
        raise TypeError(f"unknown functor node {e!r}")

    return go(expr, t1, t2)
