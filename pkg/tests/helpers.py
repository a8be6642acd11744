"""Shared fixtures: the worked example systems and seeded random families.

Every generator takes a `random.Random` and produces exact-rational
systems small enough for the exhaustive checks in the suite.
"""

from __future__ import annotations

import random
from fractions import Fraction

from coalgame import (
    ConstLabels,
    ConstOne,
    ConstReal,
    Coproduct,
    Dist,
    DistOf,
    Identity,
    Inl,
    Inr,
    Label,
    Pair,
    Pow,
    Product,
    SetOf,
    StateRef,
    System,
    Real,
    Unit,
    parse_system,
)

PERTURBED_CHAIN = """
functor: Dist(Id) + One
states: 1, 2, 3, 4, 5, 6, 7
param eps = 0
alpha 1 = inl dist{3: 1/2, 4: 1/4, 5: 1/4}
alpha 2 = inl dist{6: 1/2 - eps, 7: 1/2 + eps}
alpha 3 = inl dist{3: 1}
alpha 4 = inr unit
alpha 5 = inr unit
alpha 6 = inl dist{6: 1}
alpha 7 = inr unit
"""

LABELLED_TREE = """
functor: Pow(Labels{a, b, c} x Id)
states: 1, 2, 3, 4, 5, 6, 7, 8, 9
alpha 1 = {(label a, 3), (label a, 4)}
alpha 2 = {(label a, 5)}
alpha 3 = {(label b, 6)}
alpha 4 = {(label c, 7)}
alpha 5 = {(label b, 8), (label c, 9)}
alpha 6 = {}
alpha 7 = {}
alpha 8 = {}
alpha 9 = {}
"""

GAUGE = """
functor: Real(top = 2) x Pow(Id)
states: idle, busy, done
alpha idle = (real 0, {idle, busy})
alpha busy = (real 3/2, {busy, done})
alpha done = (real 2, {})
"""


def perturbed_chain(eps: Fraction = Fraction(0)) -> System:
    return parse_system(PERTURBED_CHAIN, params={"eps": eps}, name="perturbed_chain")


def labelled_tree() -> System:
    return parse_system(LABELLED_TREE, name="labelled_tree")


def gauge() -> System:
    return parse_system(GAUGE, name="gauge")


def truncated_tail(k: int) -> System:
    """Termination in i steps with probability 1/2^i, cut off at k; the
    missing tail mass 1/2^k diverges.  d(x, y) = 1/2^k exactly."""
    states = ["x", "y", "y0", "omega"] + [f"x{i}" for i in range(1, k + 1)]
    weights = [(StateRef(f"x{i}"), Fraction(1, 2**i)) for i in range(1, k + 1)]
    weights.append((StateRef("omega"), Fraction(1, 2**k)))
    alpha = {
        "x": Inl(DistOf(tuple(weights))),
        "y": Inl(DistOf(((StateRef("y0"), Fraction(1)),))),
        "y0": Inr(Unit()),
        "omega": Inl(DistOf(((StateRef("omega"), Fraction(1)),))),
    }
    for i in range(1, k + 1):
        alpha[f"x{i}"] = Inr(Unit())
    return System(
        expr=Coproduct(Dist(Identity()), ConstOne()),
        states=tuple(states),
        alpha=alpha,
        name=f"tail-{k}",
    )


# ---------------------------------------------------------------------------
# Random system families
# ---------------------------------------------------------------------------


def _dist_over(rng: random.Random, succs: list[str]) -> DistOf:
    m = rng.randint(1, min(3, len(succs)))
    chosen = rng.sample(succs, m)
    raw = [rng.randint(1, 4) for _ in chosen]
    total = sum(raw)
    return DistOf(tuple((StateRef(z), Fraction(w, total)) for z, w in zip(chosen, raw)))


def random_prob_system(rng: random.Random, n_states: int = 4) -> System:
    """Random system over Dist(Id) + One (probabilistic, may terminate)."""
    states = [f"s{i}" for i in range(n_states)]
    alpha = {}
    for x in states:
        if rng.randrange(4) == 0:
            alpha[x] = Inr(Unit())
        else:
            alpha[x] = Inl(_dist_over(rng, states))
    return System(
        expr=Coproduct(Dist(Identity()), ConstOne()),
        states=tuple(states),
        alpha=alpha,
        name="random-prob",
    )


def random_gauge_system(rng: random.Random, n_states: int = 4) -> System:
    """Random system over Real(top=1) x Pow(Id) (output value + branching)."""
    states = [f"s{i}" for i in range(n_states)]
    alpha = {}
    for x in states:
        value = Fraction(rng.randint(0, 8), 8)
        succs = [z for z in states if rng.randrange(2)]
        alpha[x] = Pair(Real(value), SetOf(tuple(StateRef(z) for z in succs)))
    return System(
        expr=Product(ConstReal(Fraction(1)), Pow(Identity())),
        states=tuple(states),
        alpha=alpha,
        name="random-gauge",
    )


def random_labelled_system(rng: random.Random, n_states: int = 4) -> System:
    """Random system over Pow(Labels{a,b} x Id) (labelled transitions)."""
    states = [f"s{i}" for i in range(n_states)]
    alpha = {}
    for x in states:
        pairs = set()
        for _ in range(rng.randint(0, 3)):
            pairs.add((rng.choice("ab"), rng.choice(states)))
        alpha[x] = SetOf(tuple(Pair(Label(a), StateRef(z)) for a, z in sorted(pairs)))
    return System(
        expr=Pow(Product(ConstLabels(("a", "b")), Identity())),
        states=tuple(states),
        alpha=alpha,
        name="random-labelled",
    )


FAMILIES = (random_prob_system, random_gauge_system, random_labelled_system)


def random_system(rng: random.Random, n_states: int = 4) -> System:
    return rng.choice(FAMILIES)(rng, n_states)


def random_predicateR(rng: random.Random, sys_: System, grid: int = 8) -> dict[str, Fraction]:
    return {x: Fraction(rng.randint(0, grid), grid) * sys_.top for x in sys_.states}


def random_predicate2(rng: random.Random, sys_: System) -> dict[str, int]:
    return {x: rng.randint(0, 1) for x in sys_.states}
