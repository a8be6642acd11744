"""Coalgebraic systems: a functor expression, a finite state set and the
one-step behaviour map, together with predicate helpers and validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

from .evaluation import (
    GammaPath,
    LambdaContext,
    LambdaMap,
    eval_gamma,
    generate_gammas,
    generate_lambdas,
)
from .functors import (
    AtomMap,
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
    ShapeError,
    StateRef,
    Unit,
    apply_map,
    expr_to_text,
    expr_tops,
    validate_value,
    value_states,
    value_to_text,
)

ZERO = Fraction(0)
ONE = Fraction(1)

Predicate2 = Mapping[str, int]
PredicateR = Mapping[str, Fraction]


class RefusalError(RuntimeError):
    """An exact computation was declined because its cost would explode.

    Raised instead of silently approximating; callers can retry with a
    smaller instance or an explicitly raised bound.
    """


@dataclass(eq=True)
class System:
    """A finite coalgebra: states plus one-step behaviours of functor shape.

    `top` is the shared upper bound of every real-constant leaf and the
    ceiling of the quantitative logics; it defaults to 1.
    """

    expr: FunctorExpr
    states: tuple[str, ...]
    alpha: dict[str, FValue]
    top: Fraction = ONE
    name: str = field(default="", compare=False)

    def __post_init__(self):
        self.states = tuple(self.states)
        if not isinstance(self.top, Fraction):
            self.top = Fraction(self.top)

    # -- derived structure --------------------------------------------------

    @cached_property
    def gammas(self) -> tuple[GammaPath, ...]:
        return generate_gammas(self.expr)

    @cached_property
    def lambda_context(self) -> LambdaContext:
        return LambdaContext(
            mass_thresholds=tuple(sorted(self.mass_thresholds())),
            real_values=tuple(sorted(self.real_values())),
            top=self.top,
        )

    @cached_property
    def lambdas(self) -> tuple[LambdaMap, ...]:
        return generate_lambdas(self.expr, self.lambda_context)

    @cached_property
    def lambda_index(self) -> dict[str, LambdaMap]:
        return {l.name: l for l in self.lambdas}

    @cached_property
    def gamma_index(self) -> dict[str, GammaPath]:
        return {g.name: g for g in self.gammas}

    def state_index(self, x: str) -> int:
        return self.states.index(x)

    def require_state(self, x: str) -> None:
        if x not in self.alpha:
            raise KeyError(f"unknown state '{x}'")

    # -- constants occurring in behaviours ----------------------------------

    def real_values(self) -> set[Fraction]:
        out: set[Fraction] = set()

        def walk(e: FunctorExpr, v: FValue) -> None:
            if isinstance(e, ConstReal) and isinstance(v, Real):
                out.add(v.value)
            elif isinstance(e, Pow) and isinstance(v, SetOf):
                for u in v.elems:
                    walk(e.inner, u)
            elif isinstance(e, Dist) and isinstance(v, DistOf):
                for u, _ in v.weights:
                    walk(e.inner, u)
            elif isinstance(e, Product) and isinstance(v, Pair):
                walk(e.left, v.left)
                walk(e.right, v.right)
            elif isinstance(e, Coproduct):
                if isinstance(v, Inl):
                    walk(e.left, v.value)
                elif isinstance(v, Inr):
                    walk(e.right, v.value)

        for x in self.states:
            walk(self.expr, self.alpha[x])
        return out

    def mass_thresholds(self) -> set[Fraction]:
        """Threshold constants for distribution nodes: every subset sum of
        each occurring distribution's weights, refined with the midpoints
        of consecutive distinct values."""
        sums: set[Fraction] = set()

        def subset_sums(ws: list[Fraction]) -> set[Fraction]:
            acc = {ZERO}
            for w in ws:
                if len(acc) > 2048:
                    break  # cap; thresholds stay sound, merely coarser
                acc |= {s + w for s in acc}
            return acc

        def walk(e: FunctorExpr, v: FValue) -> None:
            if isinstance(e, Pow) and isinstance(v, SetOf):
                for u in v.elems:
                    walk(e.inner, u)
            elif isinstance(e, Dist) and isinstance(v, DistOf):
                sums.update(subset_sums([w for _, w in v.weights]))
                for u, _ in v.weights:
                    walk(e.inner, u)
            elif isinstance(e, Product) and isinstance(v, Pair):
                walk(e.left, v.left)
                walk(e.right, v.right)
            elif isinstance(e, Coproduct):
                if isinstance(v, Inl):
                    walk(e.left, v.value)
                elif isinstance(v, Inr):
                    walk(e.right, v.value)

        for x in self.states:
            walk(self.expr, self.alpha[x])
        ordered = sorted(q for q in sums if 0 < q <= 1)
        mids = [(a + b) / 2 for a, b in zip(ordered, ordered[1:]) if a != b]
        return set(ordered) | set(mids)

    # -- predicate application ----------------------------------------------

    def image(self, atoms: AtomMap, x: str) -> FValue:
        """The behaviour of `x` with every state reference replaced."""
        self.require_state(x)
        return apply_map(atoms, None, self.alpha[x])

    def image2(self, p: Predicate2, x: str) -> FValue:
        return self.image(lambda s: Real(ONE if p.get(s, 0) else ZERO), x)

    def imageR(self, p: PredicateR, x: str) -> FValue:
        return self.image(lambda s: Real(p.get(s, ZERO)), x)

    def gamma_value(self, path: GammaPath, p: PredicateR, x: str) -> Fraction:
        return eval_gamma(path, self.expr, self.imageR(p, x), self.top)


@dataclass
class Finding:
    level: str  # "error" | "warning"
    where: str
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding]

    @property
    def ok(self) -> bool:
        return not any(f.level == "error" for f in self.findings)

    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.level == "error"]


def validate_system(sys_: System) -> ValidationReport:
    """Structural validation: distinct states, total and well-shaped alpha,
    state references resolving, consistent `top` bounds."""
    findings: list[Finding] = []
    seen: set[str] = set()
    for x in sys_.states:
        if x in seen:
            findings.append(Finding("error", f"state {x}", "duplicate state id"))
        seen.add(x)
    for x in sys_.states:
        if x not in sys_.alpha:
            findings.append(Finding("error", f"state {x}", "missing behaviour"))
    for x in sys_.alpha:
        if x not in seen:
            findings.append(Finding("error", f"alpha {x}", "behaviour for unknown state"))
    tops = expr_tops(sys_.expr)
    for t in tops:
        if t != sys_.top:
            findings.append(
                Finding(
                    "error",
                    "functor",
                    f"real-constant bound {t} differs from the system bound {sys_.top}",
                )
            )
    if sys_.top <= 0:
        findings.append(Finding("error", "top", f"bound {sys_.top} is not positive"))
    for x in sys_.states:
        v = sys_.alpha.get(x)
        if v is None:
            continue
        try:
            validate_value(sys_.expr, v, states=sys_.states, atoms="state")
        except ShapeError as exc:
            findings.append(Finding("error", f"alpha {x}", str(exc)))
            continue
        dangling = value_states(v) - seen
        if dangling:
            findings.append(
                Finding("error", f"alpha {x}", f"references unknown states {sorted(dangling)}")
            )
    return ValidationReport(findings)


def validate_predicate2(sys_: System, p: Mapping) -> dict[str, int]:
    out: dict[str, int] = {}
    for x, v in p.items():
        if x not in sys_.alpha:
            raise ValueError(f"predicate mentions unknown state '{x}'")
        if v not in (0, 1):
            raise ValueError(f"predicate value for '{x}' must be 0 or 1, got {v!r}")
        out[x] = int(v)
    for x in sys_.states:
        out.setdefault(x, 0)
    return out


def validate_predicateR(sys_: System, p: Mapping) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for x, v in p.items():
        if x not in sys_.alpha:
            raise ValueError(f"predicate mentions unknown state '{x}'")
        q = v if isinstance(v, Fraction) else Fraction(v)
        if not (ZERO <= q <= sys_.top):
            raise ValueError(
                f"predicate value {q} for '{x}' outside [0, {sys_.top}]"
            )
        out[x] = q
    for x in sys_.states:
        out.setdefault(x, ZERO)
    return out


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------


def serialize_system(sys_: System) -> str:
    lines = [f"functor: {expr_to_text(sys_.expr)}"]
    lines.append("states: " + ", ".join(sys_.states))
    if sys_.top != ONE and not expr_tops(sys_.expr):
        lines.append(f"top: {sys_.top}")
    for x in sys_.states:
        lines.append(f"alpha {x} = {value_to_text(sys_.alpha[x])}")
    return "\n".join(lines) + "\n"


def _expr_to_json(e: FunctorExpr):
    if isinstance(e, Identity):
        return {"kind": "id"}
    if isinstance(e, ConstReal):
        return {"kind": "real", "top": str(e.top)}
    if isinstance(e, ConstOne):
        return {"kind": "one"}
    if isinstance(e, ConstLabels):
        return {"kind": "labels", "labels": list(e.labels)}
    if isinstance(e, Pow):
        return {"kind": "pow", "inner": _expr_to_json(e.inner)}
    if isinstance(e, Dist):
        return {"kind": "dist", "inner": _expr_to_json(e.inner)}
    if isinstance(e, Product):
        return {"kind": "product", "left": _expr_to_json(e.left), "right": _expr_to_json(e.right)}
    if isinstance(e, Coproduct):
        return {"kind": "coproduct", "left": _expr_to_json(e.left), "right": _expr_to_json(e.right)}
    raise TypeError(f"unknown functor node {e!r}")


def _expr_from_json(d) -> FunctorExpr:
    kind = d["kind"]
    if kind == "id":
        return Identity()
    if kind == "real":
        return ConstReal(Fraction(d["top"]))
    if kind == "one":
        return ConstOne()
    if kind == "labels":
        return ConstLabels(tuple(d["labels"]))
    if kind == "pow":
        return Pow(_expr_from_json(d["inner"]))
    if kind == "dist":
        return Dist(_expr_from_json(d["inner"]))
    if kind == "product":
        return Product(_expr_from_json(d["left"]), _expr_from_json(d["right"]))
    if kind == "coproduct":
        return Coproduct(_expr_from_json(d["left"]), _expr_from_json(d["right"]))
    raise ValueError(f"unknown functor kind {kind!r}")


def _value_to_json(v: FValue):
    if isinstance(v, StateRef):
        return {"kind": "state", "state": v.state}
    if isinstance(v, Real):
        return {"kind": "real", "value": str(v.value)}
    if isinstance(v, Unit):
        return {"kind": "unit"}
    if isinstance(v, Label):
        return {"kind": "label", "symbol": v.symbol}
    if isinstance(v, SetOf):
        return {"kind": "set", "elems": [_value_to_json(u) for u in v.elems]}
    if isinstance(v, DistOf):
        return {
            "kind": "dist",
            "weights": [[_value_to_json(u), str(w)] for u, w in v.weights],
        }
    if isinstance(v, Pair):
        return {"kind": "pair", "left": _value_to_json(v.left), "right": _value_to_json(v.right)}
    if isinstance(v, Inl):
        return {"kind": "inl", "value": _value_to_json(v.value)}
    if isinstance(v, Inr):
        return {"kind": "inr", "value": _value_to_json(v.value)}
    raise TypeError(f"unknown value {v!r}")


def _value_from_json(d) -> FValue:
    kind = d["kind"]
    if kind == "state":
        return StateRef(d["state"])
    if kind == "real":
        return Real(Fraction(d["value"]))
    if kind == "unit":
        return Unit()
    if kind == "label":
        return Label(d["symbol"])
    if kind == "set":
        return SetOf(tuple(_value_from_json(u) for u in d["elems"]))
    if kind == "dist":
        return DistOf(tuple((_value_from_json(u), Fraction(w)) for u, w in d["weights"]))
    if kind == "pair":
        return Pair(_value_from_json(d["left"]), _value_from_json(d["right"]))
    if kind == "inl":
        return Inl(_value_from_json(d["value"]))
    if kind == "inr":
        return Inr(_value_from_json(d["value"]))
    raise ValueError(f"unknown value kind {kind!r}")


def system_to_json(sys_: System) -> dict:
    return {
        "functor": _expr_to_json(sys_.expr),
        "functor_text": expr_to_text(sys_.expr),
        "states": list(sys_.states),
        "alpha": {x: _value_to_json(sys_.alpha[x]) for x in sys_.states},
        "top": str(sys_.top),
    }


def system_from_json(d: dict) -> System:
    sys_ = System(
        expr=_expr_from_json(d["functor"]),
        states=tuple(d["states"]),
        alpha={x: _value_from_json(v) for x, v in d["alpha"].items()},
        top=Fraction(d["top"]),
        name=d.get("name", ""),
    )
    report = validate_system(sys_)
    if not report.ok:
        msgs = "; ".join(f"{f.where}: {f.message}" for f in report.errors())
        raise ValueError(f"invalid system: {msgs}")
    return sys_


def system_to_json_text(sys_: System) -> str:
    return json.dumps(system_to_json(sys_), indent=2)
