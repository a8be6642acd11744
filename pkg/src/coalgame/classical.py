"""Two-valued verification: behavioural equivalence by partition
refinement, the classical modal logic over evaluation maps, and the
synthesis of distinguishing formulas.

The logic has conjunction (with the empty conjunction as truth),
negation, and one modality per two-valued evaluation map of the system's
functor: `[lam]phi` holds at a state when the map `lam` accepts the
state's one-step behaviour with every state reference replaced by the
truth value of `phi` there.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Union

from .evaluation import eval_lambda
from .functors import BIT0, BIT1, Label, lifted_order_leq
from .model import Predicate2, System

__all__ = [
    "Conj",
    "Neg",
    "Modal",
    "Formula",
    "TOP",
    "conj",
    "disj",
    "formula_to_text",
    "parse_formula",
    "modal_depth",
    "eval_formula",
    "EquivalenceResult",
    "behavioural_equivalence",
    "SynthesisIncomplete",
    "ClassicalSynthesis",
    "synthesize_formula",
    "check_transfer",
    "Step2Check",
]


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Conj:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Neg:
    inner: "Formula"


@dataclass(frozen=True)
class Modal:
    lam: str
    inner: "Formula"


Formula = Union[Conj, Neg, Modal]

TOP = Conj(())


def conj(parts: Iterable[Formula]) -> Formula:
    """Conjunction with flattening; a singleton collapses to its part."""
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, Conj):
            flat.extend(p.parts)
        else:
            flat.append(p)
    seen: list[Formula] = []
    for p in flat:
        if p not in seen:
            seen.append(p)
    if len(seen) == 1:
        return seen[0]
    return Conj(tuple(seen))


def neg(f: Formula) -> Formula:
    if isinstance(f, Neg):
        return f.inner
    return Neg(f)


def disj(parts: Iterable[Formula]) -> Formula:
    """De Morgan disjunction; empty disjunction is falsity."""
    return neg(conj([neg(p) for p in parts]))


def modal_depth(f: Formula) -> int:
    if isinstance(f, Conj):
        return max((modal_depth(p) for p in f.parts), default=0)
    if isinstance(f, Neg):
        return modal_depth(f.inner)
    return 1 + modal_depth(f.inner)


def formula_to_text(f: Formula) -> str:
    if isinstance(f, Conj):
        if not f.parts:
            return "T"
        if len(f.parts) == 1:
            return formula_to_text(f.parts[0])
        return "(" + " & ".join(formula_to_text(p) for p in f.parts) + ")"
    if isinstance(f, Neg):
        return "~" + formula_to_text(f.inner)
    if isinstance(f, Modal):
        return f"[{f.lam}]" + formula_to_text(f.inner)
    raise TypeError(f"unknown formula {f!r}")


class FormulaParseError(ValueError):
    pass


def parse_formula(text: str) -> Formula:
    """Parse `T`, `~phi`, `[name]phi`, `phi & psi` and parentheses.

    Modality names run to the matching closing bracket, so names that
    themselves contain bracket pairs work unquoted.
    """
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def parse_conj() -> Formula:
        nonlocal pos
        parts = [parse_unary()]
        while True:
            skip_ws()
            if pos < len(text) and text[pos] == "&":
                pos += 1
                parts.append(parse_unary())
            else:
                break
        return conj(parts) if len(parts) > 1 else parts[0]

    def parse_unary() -> Formula:
        nonlocal pos
        skip_ws()
        if pos >= len(text):
            raise FormulaParseError("unexpected end of formula")
        c = text[pos]
        if c == "~":
            pos += 1
            return Neg(parse_unary())
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
                raise FormulaParseError("unbalanced '[' in modality")
            name = text[start + 1 : pos]
            pos += 1
            if not name:
                raise FormulaParseError("empty modality name")
            return Modal(name, parse_unary())
        if c == "(":
            pos += 1
            inner = parse_conj()
            skip_ws()
            if pos >= len(text) or text[pos] != ")":
                raise FormulaParseError("missing ')'")
            pos += 1
            return inner
        if c == "T":
            pos += 1
            return TOP
        raise FormulaParseError(f"unexpected character {c!r} at position {pos}")

    out = parse_conj()
    skip_ws()
    if pos != len(text):
        raise FormulaParseError(f"trailing input at position {pos}: {text[pos:]!r}")
    return out


def eval_formula(sys_: System, f: Formula) -> dict[str, int]:
    """Truth value of a formula at every state.

    Shared subformulas are evaluated once (results are memoised per node
    identity, and synthesized formulas share nodes heavily).
    """
    memo: dict[int, dict[str, int]] = {}

    def go(g: Formula) -> dict[str, int]:
        got = memo.get(id(g))
        if got is not None:
            return got
        if isinstance(g, Conj):
            parts = [go(p) for p in g.parts]
            res = {x: int(all(p[x] for p in parts)) for x in sys_.states}
        elif isinstance(g, Neg):
            inner = go(g.inner)
            res = {x: 1 - inner[x] for x in sys_.states}
        elif isinstance(g, Modal):
            lam = sys_.lambda_index.get(g.lam)
            if lam is None:
                raise KeyError(f"unknown evaluation map '{g.lam}'")
            inner = go(g.inner)
            res = {x: eval_lambda(lam, sys_.image2(inner, x)) for x in sys_.states}
        else:
            raise TypeError(f"unknown formula {g!r}")
        memo[id(g)] = res
        return res

    return go(f)


# ---------------------------------------------------------------------------
# Behavioural equivalence
# ---------------------------------------------------------------------------


Partition = tuple[tuple[str, ...], ...]


@dataclass
class EquivalenceResult:
    """Partition-refinement trace: `partitions[i]` identifies states that
    agree on all observations of depth at most i; the last entry is the
    stable partition, whose blocks are the behavioural-equivalence classes."""

    states: tuple[str, ...]
    partitions: tuple[Partition, ...]

    @property
    def depth(self) -> int:
        return len(self.partitions) - 1

    def blocks(self) -> Partition:
        return self.partitions[-1]

    def block_index_at(self, level: int, x: str) -> int:
        for i, block in enumerate(self.partitions[level]):
            if x in block:
                return i
        raise KeyError(f"unknown state '{x}'")

    def block_of(self, x: str) -> tuple[str, ...]:
        return self.blocks()[self.block_index_at(len(self.partitions) - 1, x)]

    def equivalent(self, x: str, y: str) -> bool:
        last = len(self.partitions) - 1
        return self.block_index_at(last, x) == self.block_index_at(last, y)

    def first_separating_level(self, x: str, y: str) -> int | None:
        """The least observation depth at which x and y come apart."""
        for i in range(len(self.partitions)):
            if self.block_index_at(i, x) != self.block_index_at(i, y):
                return i
        return None


def _signature_partition(sys_: System, part: Partition) -> Partition:
    index: dict[str, int] = {}
    for i, block in enumerate(part):
        for x in block:
            index[x] = i
    atom = {x: Label(f"b{index[x]}") for x in sys_.states}
    groups: dict[object, list[str]] = {}
    for x in sys_.states:
        sig = sys_.image(atom, x)
        groups.setdefault(sig, []).append(x)
    blocks = [tuple(sorted(g)) for g in groups.values()]
    return tuple(sorted(blocks))


def behavioural_equivalence(sys_: System) -> EquivalenceResult:
    """Iterated one-step-signature refinement from the trivial partition.

    Each round replaces state references with the current block of the
    referenced state and groups states by equality of the resulting
    behaviours; the rounds refine each other and stabilise after at most
    `|states| - 1` proper splits.
    """
    part: Partition = (tuple(sorted(sys_.states)),)
    levels: list[Partition] = [part]
    while True:
        nxt = _signature_partition(sys_, part)
        if nxt == part:
            break
        levels.append(nxt)
        part = nxt
    return EquivalenceResult(states=sys_.states, partitions=tuple(levels))


# ---------------------------------------------------------------------------
# Distinguishing-formula synthesis
# ---------------------------------------------------------------------------


class SynthesisIncomplete(RuntimeError):
    """No generated evaluation map witnesses a refinement split.

    The engine's map family is known to witness every split for the
    standard functor shapes; for unusual combinations a split can in
    principle be invisible to it, and that is reported rather than
    silently ignored.
    """


@dataclass
class ClassicalSynthesis:
    x: str
    y: str
    formula: Formula
    depth: int
    text: str


_SUBSET_CAP = 4096


def _candidate_subsets(m: int):
    """Index subsets of range(m), small ones first; exhaustive when the
    total count stays within the cap, a bounded selection otherwise."""
    if 2**m <= _SUBSET_CAP:
        for size in range(m + 1):
            yield from itertools.combinations(range(m), size)
        return
    for size in (0, 1, 2, m - 2, m - 1, m):
        yield from itertools.combinations(range(m), size)


def synthesize_formula(sys_: System, x: str, y: str, *, equivalence: EquivalenceResult | None = None) -> ClassicalSynthesis | None:
    """A formula true at `x` and false at `y`, or None when the states are
    behaviourally equivalent.

    The construction follows the refinement trace: whenever two blocks
    come apart at some depth, an evaluation map applied to a union of
    previous-depth blocks tells them apart, and the union is described by
    the characteristic formulas of those blocks.  The resulting formula
    has modal depth equal to the first separating depth, and is verified
    by evaluation before being returned.
    """
    sys_.require_state(x)
    sys_.require_state(y)
    eq = equivalence or behavioural_equivalence(sys_)
    sep = eq.first_separating_level(x, y)
    if sep is None:
        return None

    # phi_memo[(level, block)] is true exactly on that block among states,
    # delta_memo[(level, b, c)] is true on block b and false on block c.
    phi_memo: dict[tuple[int, int], Formula] = {}
    delta_memo: dict[tuple[int, int, int], Formula] = {}

    def block_formula(level: int, bi: int) -> Formula:
        key = (level, bi)
        got = phi_memo.get(key)
        if got is not None:
            return got
        others = [ci for ci in range(len(eq.partitions[level])) if ci != bi]
        out = conj([delta(level, bi, ci) for ci in others])
        phi_memo[key] = out
        return out

    def delta(level: int, bi: int, ci: int) -> Formula:
        key = (level, bi, ci)
        got = delta_memo.get(key)
        if got is not None:
            return got
        b_rep = eq.partitions[level][bi][0]
        c_rep = eq.partitions[level][ci][0]
        first = eq.first_separating_level(b_rep, c_rep)
        assert first is not None and first <= level
        if first < level:
            out = delta(first, eq.block_index_at(first, b_rep), eq.block_index_at(first, c_rep))
            delta_memo[key] = out
            return out
        prev = eq.partitions[level - 1]
        found: tuple[str, tuple[int, ...], int] | None = None
        for subset in _candidate_subsets(len(prev)):
            chosen = set(subset)
            atom = {}
            for di, block in enumerate(prev):
                bit = BIT1 if di in chosen else BIT0
                for z in block:
                    atom[z] = bit
            vb = sys_.image(atom, b_rep)
            vc = sys_.image(atom, c_rep)
            if vb == vc:
                continue
            for lam in sys_.lambdas:
                rb = eval_lambda(lam, vb)
                rc = eval_lambda(lam, vc)
                if rb != rc:
                    found = (lam.name, subset, rb)
                    break
            if found:
                break
        if found is None:
            raise SynthesisIncomplete(
                f"no evaluation map separates blocks {eq.partitions[level][bi]} and "
                f"{eq.partitions[level][ci]} at depth {level}"
            )
        lam_name, subset, rb = found
        psi = disj([block_formula(level - 1, di) for di in subset])
        out: Formula = Modal(lam_name, psi)
        if rb == 0:
            out = neg(out)
        delta_memo[key] = out
        return out

    f = delta(sep, eq.block_index_at(sep, x), eq.block_index_at(sep, y))
    values = eval_formula(sys_, f)
    if not (values[x] == 1 and values[y] == 0):
        raise SynthesisIncomplete(
            f"synthesized candidate does not separate '{x}' from '{y}' "
            f"(values {values[x]}/{values[y]})"
        )
    return ClassicalSynthesis(
        x=x, y=y, formula=f, depth=modal_depth(f), text=formula_to_text(f)
    )


# ---------------------------------------------------------------------------
# Transfer check (the defender's reply condition)
# ---------------------------------------------------------------------------


@dataclass
class Step2Check:
    ok: bool
    failures: tuple[str, ...]  # names of maps accepting the left value only
    mode: str


def check_transfer(
    sys_: System,
    s: str,
    p1: Predicate2,
    t: str,
    p2: Predicate2,
    *,
    mode: str = "perlam",
) -> Step2Check:
    """Is `p2` at `t` an admissible reply to `p1` at `s`?

    In mode "perlam" the reply must dominate under every generated
    evaluation map; in mode "lifted" the functor-lifted order on the two
    substituted behaviours is required instead.
    """
    v1 = sys_.image2(p1, s)
    v2 = sys_.image2(p2, t)
    if mode == "perlam":
        failures = tuple(
            lam.name
            for lam in sys_.lambdas
            if eval_lambda(lam, v1) > eval_lambda(lam, v2)
        )
        return Step2Check(ok=not failures, failures=failures, mode=mode)
    if mode == "lifted":
        ok = lifted_order_leq(sys_.expr, v1, v2)
        return Step2Check(ok=ok, failures=() if ok else ("lifted-order",), mode=mode)
    raise ValueError(f"unknown mode {mode!r}")
