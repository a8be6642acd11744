"""Interactive refutation games on top of the two engines.

Both games run in rounds of four steps on a pair of states: the spoiler
claims the pair is distinguishable, picks a side and a predicate; the
defender answers with a predicate on the other side that survives the
transfer check; the spoiler then challenges one of the two predicates at
a state, and the defender must answer from the other predicate.  In the
classical game predicates are two-valued and the defender's answer must
hold where the spoiler's does; in the quantitative game predicates are
real-valued, the transfer check tolerates a distance budget, and the
answer step re-prices the budget for the next round.

The engine strategies realise the theory: a defender playing from the
equivalence (or from the distance table, via envelopes) survives
whenever the states are equivalent (closer than the budget); a spoiler
playing from a distinguishing formula wins within its modal depth
whenever they are not.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .classical import (
    Conj,
    EquivalenceResult,
    Formula,
    Modal,
    Neg,
    Step2Check,
    behavioural_equivalence,
    check_transfer,
    eval_formula,
    synthesize_formula,
)
from .evaluation import lambda_vector
from .functors import BIT0, BIT1, lifted_order_leq
from .metric import (
    DistanceResult,
    MetricFormula,
    MetricStep2Check,
    MMin,
    MMinusQ,
    MModal,
    MNeg,
    behavioural_distance,
    check_transfer_metric,
    defender_can_reply_metric,
    envelope,
    eval_metric_formula,
    synthesize_metric_formula,
)
from .model import RefusalError, System, validate_predicate2, validate_predicateR

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Moves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Step1:
    s: str
    p1: dict

    def __post_init__(self):
        object.__setattr__(self, "p1", dict(self.p1))


@dataclass(frozen=True)
class Step2:
    p2: dict

    def __post_init__(self):
        object.__setattr__(self, "p2", dict(self.p2))


@dataclass(frozen=True)
class Step3:
    pick: int  # 1 challenges the spoiler's own predicate, 2 the reply
    state: str


@dataclass(frozen=True)
class Step4:
    state: str


@dataclass(frozen=True)
class Concede:
    by: str  # "spoiler" | "defender"


Move = Union[Step1, Step2, Step3, Step4, Concede]


class IllegalMove(ValueError):
    def __init__(self, message: str, check: Step2Check | MetricStep2Check | None = None):
        super().__init__(message)
        self.check = check


# ---------------------------------------------------------------------------
# Game state
# ---------------------------------------------------------------------------


PHASES = ("step1", "step2", "step3", "step4", "over")


@dataclass
class GameEvent:
    round: int
    phase: str
    by: str
    move: Move
    note: str = ""


class Game:
    """One running match.  `kind` is "classical" or "metric"; the
    classical game also carries the transfer `mode` ("perlam" checks
    every evaluation map, "lifted" the functor-lifted order)."""

    def __init__(
        self,
        sys_: System,
        kind: str,
        x: str,
        y: str,
        *,
        eps: Fraction | None = None,
        mode: str = "perlam",
    ):
        if kind not in ("classical", "metric"):
            raise ValueError(f"unknown game kind {kind!r}")
        if mode not in ("perlam", "lifted"):
            raise ValueError(f"unknown transfer mode {mode!r}")
        sys_.require_state(x)
        sys_.require_state(y)
        if kind == "metric":
            if eps is None:
                raise ValueError("the quantitative game needs a budget eps")
            eps = eps if isinstance(eps, Fraction) else Fraction(eps)
            if not (ZERO <= eps <= sys_.top):
                raise ValueError(f"eps must lie in [0, {sys_.top}]")
        elif eps is not None:
            raise ValueError("the classical game takes no budget")
        self.sys = sys_
        self.kind = kind
        self.mode = mode
        self.x = x
        self.y = y
        self.eps = eps
        self.round = 1
        self.phase = "step1"
        self.winner: str | None = None
        self.reason = ""
        self.s: str | None = None
        self.t: str | None = None
        self.p1: dict | None = None
        self.p2: dict | None = None
        self.pick: int | None = None
        self.challenge: str | None = None
        self.history: list[GameEvent] = []

    # -- helpers -------------------------------------------------------------

    def pair(self) -> tuple[str, str]:
        return (self.x, self.y)

    def _validate_predicate(self, p: dict) -> dict:
        try:
            if self.kind == "classical":
                return validate_predicate2(self.sys, p)
            return validate_predicateR(self.sys, p)
        except ValueError as exc:
            raise IllegalMove(str(exc)) from exc

    def reply_check(self, p2: dict) -> Step2Check | MetricStep2Check:
        assert self.s is not None and self.t is not None and self.p1 is not None
        if self.kind == "classical":
            return check_transfer(self.sys, self.s, self.p1, self.t, p2, mode=self.mode)
        return check_transfer_metric(self.sys, self.s, self.p1, self.t, p2, self.eps)

    def defender_can_reply(self) -> bool:
        """Whether any reply passes the transfer check.  Monotonicity makes
        the all-accepting reply decisive except in lifted-order mode,
        where the replies are enumerated outright."""
        assert self.phase == "step2"
        if self.kind == "metric":
            return defender_can_reply_metric(self.sys, self.s, self.p1, self.t, self.eps)
        if self.mode == "perlam":
            ones = {z: 1 for z in self.sys.states}
            return self.reply_check(ones).ok
        n = len(self.sys.states)
        if n > 14:
            raise RefusalError(f"cannot enumerate 2^{n} replies in lifted-order mode")
        for bits in itertools.product((0, 1), repeat=n):
            p2 = dict(zip(self.sys.states, bits))
            if self.reply_check(p2).ok:
                return True
        return False

    def step3_options(self) -> list[Step3]:
        assert self.phase == "step3"
        out = []
        if self.kind == "metric":
            return [Step3(pick, z) for pick in (1, 2) for z in self.sys.states]
        for pick, p in ((1, self.p1), (2, self.p2)):
            out.extend(Step3(pick, z) for z in self.sys.states if p.get(z))
        return out

    def step4_options(self) -> list[Step4]:
        assert self.phase == "step4"
        other = self.p2 if self.pick == 1 else self.p1
        mine = self.p1 if self.pick == 1 else self.p2
        if self.kind == "classical":
            return [Step4(z) for z in self.sys.states if other.get(z)]
        floor = mine.get(self.challenge, ZERO)
        return [Step4(z) for z in self.sys.states if other.get(z, ZERO) >= floor]

    def declare(self, winner: str, reason: str) -> None:
        self.winner = winner
        self.reason = reason
        self.phase = "over"

    # -- transitions -----------------------------------------------------------

    def apply(self, move: Move) -> None:
        if self.phase == "over":
            raise IllegalMove("the game is over")
        if isinstance(move, Concede):
            if move.by not in ("spoiler", "defender"):
                raise IllegalMove(f"unknown role {move.by!r}")
            winner = "defender" if move.by == "spoiler" else "spoiler"
            self.history.append(GameEvent(self.round, self.phase, move.by, move))
            self.declare(winner, f"{move.by} concedes")
            return
        if self.phase == "step1":
            if not isinstance(move, Step1):
                raise IllegalMove(f"expected a side-and-predicate move, got {type(move).__name__}")
            if move.s not in (self.x, self.y):
                raise IllegalMove(f"'{move.s}' is not one of the current pair {self.x}, {self.y}")
            p1 = self._validate_predicate(move.p1)
            self.s = move.s
            self.t = self.y if move.s == self.x else self.x
            self.p1 = p1
            self.phase = "step2"
            self.history.append(GameEvent(self.round, "step1", "spoiler", Step1(move.s, p1)))
            return
        if self.phase == "step2":
            if not isinstance(move, Step2):
                raise IllegalMove(f"expected a reply predicate, got {type(move).__name__}")
            p2 = self._validate_predicate(move.p2)
            check = self.reply_check(p2)
            if not check.ok:
                if isinstance(check, Step2Check):
                    raise IllegalMove(
                        "reply rejected: maps " + ", ".join(check.failures) + " accept the challenge but not the reply",
                        check,
                    )
                bad = [r for r in check.rows if r.slack < ZERO]
                raise IllegalMove(
                    "reply rejected: "
                    + "; ".join(
                        f"{r.gamma} evaluates to {r.lhs} against {r.rhs}, exceeding the budget by {-r.slack}"
                        for r in bad
                    ),
                    check,
                )
            self.p2 = p2
            self.phase = "step3"
            self.history.append(GameEvent(self.round, "step2", "defender", Step2(p2)))
            return
        if self.phase == "step3":
            if not isinstance(move, Step3):
                raise IllegalMove(f"expected a challenge move, got {type(move).__name__}")
            if move.pick not in (1, 2):
                raise IllegalMove("pick must be 1 or 2")
            if move.state not in self.sys.alpha:
                raise IllegalMove(f"unknown state '{move.state}'")
            if self.kind == "classical":
                p = self.p1 if move.pick == 1 else self.p2
                if not p.get(move.state):
                    raise IllegalMove(
                        f"challenge state '{move.state}' does not satisfy predicate {move.pick}"
                    )
            self.pick = move.pick
            self.challenge = move.state
            self.phase = "step4"
            self.history.append(GameEvent(self.round, "step3", "spoiler", move))
            return
        if self.phase == "step4":
            if not isinstance(move, Step4):
                raise IllegalMove(f"expected an answer move, got {type(move).__name__}")
            if move.state not in self.sys.alpha:
                raise IllegalMove(f"unknown state '{move.state}'")
            other = self.p2 if self.pick == 1 else self.p1
            mine = self.p1 if self.pick == 1 else self.p2
            if self.kind == "classical":
                if not other.get(move.state):
                    raise IllegalMove(
                        f"answer state '{move.state}' does not satisfy predicate {2 if self.pick == 1 else 1}"
                    )
                new_eps = None
            else:
                floor = mine.get(self.challenge, ZERO)
                have = other.get(move.state, ZERO)
                if have < floor:
                    raise IllegalMove(
                        f"answer value {have} at '{move.state}' is below the challenged value {floor}"
                    )
                new_eps = have - floor
            self.history.append(GameEvent(self.round, "step4", "defender", move))
            self.x = self.challenge
            self.y = move.state
            self.eps = new_eps if self.kind == "metric" else None
            self.s = self.t = None
            self.p1 = self.p2 = None
            self.pick = None
            self.challenge = None
            self.round += 1
            self.phase = "step1"
            return
        raise IllegalMove(f"no move expected in phase {self.phase}")


# ---------------------------------------------------------------------------
# Engine strategies
# ---------------------------------------------------------------------------


class ClassicalFormulaSpoiler:
    """Plays the side where its distinguishing formula holds and descends
    into the formula each round; wins within the formula's modal depth
    against every defender (in per-map transfer mode)."""

    def __init__(self, sys_: System, x: str, y: str, *, formula: Formula | None = None):
        self.sys = sys_
        if formula is None:
            synth = synthesize_formula(sys_, x, y)
            if synth is None:
                raise ValueError(f"'{x}' and '{y}' are behaviourally equivalent")
            formula = synth.formula
        values = eval_formula(sys_, formula)
        if values[x] == values[y]:
            raise ValueError("formula does not distinguish the initial pair")
        self.phi = formula
        self.hi = x if values[x] > values[y] else y
        self.psi: Formula | None = None

    def step1(self, game: Game) -> Optional[Step1]:
        if self.hi not in (game.x, game.y):
            return None  # the play wandered off the formula's track
        lo = game.y if self.hi == game.x else game.x
        phi = self.phi
        while True:
            values = eval_formula(self.sys, phi)
            if values[self.hi] == values[lo]:
                return None  # the invariant broke; give up honestly
            if values[self.hi] < values[lo]:
                self.hi, lo = lo, self.hi
            if isinstance(phi, Neg):
                phi = phi.inner
                continue
            if isinstance(phi, Conj):
                vals_lo = None
                nxt = None
                for part in phi.parts:
                    pv = eval_formula(self.sys, part)
                    if pv[self.hi] != pv[lo]:
                        nxt = part
                        break
                if nxt is None:
                    return None
                phi = nxt
                continue
            if isinstance(phi, Modal):
                break
            return None  # a bare T distinguishes nothing
        self.phi = phi
        self.psi = phi.inner
        p1 = eval_formula(self.sys, self.psi)
        return Step1(self.hi, p1)

    def step3(self, game: Game) -> Optional[Step3]:
        if self.psi is None:
            return None
        psi_vals = eval_formula(self.sys, self.psi)
        for z in sorted(game.sys.states):
            if game.p2.get(z) and not psi_vals[z]:
                return Step3(2, z)
        return None

    def observe_step4(self, game: Game) -> None:
        # after the defender answers, the new pair is (challenge, answer);
        # the inner formula holds at the answer and fails at the challenge.
        if self.psi is None:
            return  # this round's challenge was not ours to track
        self.phi = self.psi
        self.hi = game.y


class ClosureDefender:
    """Replies with the equivalence closure of the challenge and answers
    challenges with equivalent states; never loses on equivalent pairs."""

    def __init__(self, sys_: System, *, equivalence: EquivalenceResult | None = None):
        self.sys = sys_
        self.eq = equivalence or behavioural_equivalence(sys_)

    def step2(self, game: Game) -> Optional[Step2]:
        closure = {
            z: 1
            if any(game.p1.get(u) and self.eq.equivalent(u, z) for u in self.sys.states)
            else 0
            for z in self.sys.states
        }
        if game.reply_check(closure).ok:
            return Step2(closure)
        ones = {z: 1 for z in self.sys.states}
        if game.reply_check(ones).ok:
            return Step2(ones)
        return None

    def step4(self, game: Game) -> Optional[Step4]:
        other = game.p2 if game.pick == 1 else game.p1
        x_ = game.challenge
        if other.get(x_):
            return Step4(x_)
        for z in sorted(self.sys.states):
            if other.get(z) and self.eq.equivalent(z, x_):
                return Step4(z)
        for z in sorted(self.sys.states):
            if other.get(z):
                return Step4(z)
        return None


class RandomClassicalSpoiler:
    def __init__(self, sys_: System, seed: int):
        self.sys = sys_
        self.rng = random.Random(seed)

    def step1(self, game: Game) -> Optional[Step1]:
        s = self.rng.choice([game.x, game.y])
        p1 = {z: self.rng.randint(0, 1) for z in self.sys.states}
        return Step1(s, p1)

    def step3(self, game: Game) -> Optional[Step3]:
        options = game.step3_options()
        if not options:
            return None
        return self.rng.choice(options)


class RandomClassicalDefender:
    def __init__(self, sys_: System, seed: int, *, attempts: int = 32):
        self.sys = sys_
        self.rng = random.Random(seed)
        self.attempts = attempts

    def step2(self, game: Game) -> Optional[Step2]:
        for _ in range(self.attempts):
            p2 = {z: self.rng.randint(0, 1) for z in self.sys.states}
            if game.reply_check(p2).ok:
                return Step2(p2)
        ones = {z: 1 for z in self.sys.states}
        if game.reply_check(ones).ok:
            return Step2(ones)
        return None

    def step4(self, game: Game) -> Optional[Step4]:
        options = game.step4_options()
        if not options:
            return None
        return self.rng.choice(options)


class BudgetDefender:
    """Quantitative defender playing envelopes of the challenge over the
    behavioural distance; survives indefinitely whenever the budget
    covers the distance of the current pair."""

    def __init__(self, sys_: System, *, distance: DistanceResult | None = None):
        self.sys = sys_
        self.dist = distance or behavioural_distance(sys_)

    def step2(self, game: Game) -> Optional[Step2]:
        h = envelope(self.sys, self.dist.table.get, game.p1)
        if game.reply_check(h).ok:
            return Step2(h)
        tops = {z: self.sys.top for z in self.sys.states}
        if game.reply_check(tops).ok:
            return Step2(tops)
        return None

    def step4(self, game: Game) -> Optional[Step4]:
        other = game.p2 if game.pick == 1 else game.p1
        mine = game.p1 if game.pick == 1 else game.p2
        x_ = game.challenge
        floor = mine.get(x_, ZERO)
        best: tuple[Fraction, str] | None = None
        for z in self.sys.states:
            if other.get(z, ZERO) < floor:
                continue
            score = other.get(z, ZERO) - self.dist.table.get(z, x_)
            if best is None or score > best[0] or (score == best[0] and z < best[1]):
                best = (score, z)
        if best is None:
            return None
        return Step4(best[1])


class MetricFormulaSpoiler:
    """Descends a value-gap formula; whenever the gap exceeds the budget,
    each round either traps the defender or recreates the invariant one
    modality deeper, so the win comes within the formula's modal depth."""

    def __init__(
        self,
        sys_: System,
        x: str,
        y: str,
        *,
        formula: MetricFormula | None = None,
        distance: DistanceResult | None = None,
    ):
        self.sys = sys_
        if formula is None:
            synth = synthesize_metric_formula(sys_, x, y, distance=distance)
            if synth is None:
                raise ValueError(f"'{x}' and '{y}' are at distance zero")
            formula = synth.formula
        values = eval_metric_formula(sys_, formula)
        if values[x] == values[y]:
            raise ValueError("formula does not separate the initial pair")
        self.phi = formula
        self.hi = x if values[x] > values[y] else y
        self.psi: MetricFormula | None = None

    def step1(self, game: Game) -> Optional[Step1]:
        if self.hi not in (game.x, game.y):
            return None  # the play wandered off the formula's track
        lo = game.y if self.hi == game.x else game.x
        phi = self.phi
        while True:
            values = eval_metric_formula(self.sys, phi)
            gap = values[self.hi] - values[lo]
            if gap < ZERO:
                self.hi, lo = lo, self.hi
                gap = -gap
            if gap <= game.eps:
                return None  # the budget covers the remaining gap
            if isinstance(phi, MNeg):
                phi = phi.inner
                continue
            if isinstance(phi, MMinusQ):
                phi = phi.inner
                continue
            if isinstance(phi, MMin):
                lo_vals = eval_metric_formula(self.sys, phi)
                nxt = None
                for part in phi.parts:
                    pv = eval_metric_formula(self.sys, part)
                    if pv[lo] == lo_vals[lo] and pv[self.hi] - pv[lo] > game.eps:
                        nxt = part
                        break
                if nxt is None:
                    for part in phi.parts:
                        pv = eval_metric_formula(self.sys, part)
                        if abs(pv[self.hi] - pv[lo]) > game.eps:
                            nxt = part
                            break
                if nxt is None:
                    return None
                phi = nxt
                continue
            if isinstance(phi, MModal):
                break
            return None  # T carries no gap
        self.phi = phi
        self.psi = phi.inner
        p1 = eval_metric_formula(self.sys, self.psi)
        return Step1(self.hi, p1)

    def step3(self, game: Game) -> Optional[Step3]:
        if self.psi is None:
            return None
        psi_vals = eval_metric_formula(self.sys, self.psi)
        best: tuple[Fraction, str] | None = None
        for z in self.sys.states:
            margin = game.p2.get(z, ZERO) - psi_vals[z]
            if best is None or margin > best[0] or (margin == best[0] and z < best[1]):
                best = (margin, z)
        return Step3(2, best[1])

    def observe_step4(self, game: Game) -> None:
        if self.psi is None:
            return
        self.phi = self.psi
        self.hi = game.y


class RandomMetricSpoiler:
    def __init__(self, sys_: System, seed: int, *, grid: int = 8):
        self.sys = sys_
        self.rng = random.Random(seed)
        self.grid = grid

    def _random_predicate(self) -> dict:
        return {
            z: self.sys.top * self.rng.randint(0, self.grid) / self.grid
            for z in self.sys.states
        }

    def step1(self, game: Game) -> Optional[Step1]:
        return Step1(self.rng.choice([game.x, game.y]), self._random_predicate())

    def step3(self, game: Game) -> Optional[Step3]:
        return Step3(self.rng.choice((1, 2)), self.rng.choice(self.sys.states))


class RandomMetricDefender:
    def __init__(self, sys_: System, seed: int, *, grid: int = 8, attempts: int = 32):
        self.sys = sys_
        self.rng = random.Random(seed)
        self.grid = grid
        self.attempts = attempts

    def step2(self, game: Game) -> Optional[Step2]:
        for _ in range(self.attempts):
            p2 = {
                z: self.sys.top * self.rng.randint(0, self.grid) / self.grid
                for z in self.sys.states
            }
            if game.reply_check(p2).ok:
                return Step2(p2)
        tops = {z: self.sys.top for z in self.sys.states}
        if game.reply_check(tops).ok:
            return Step2(tops)
        return None

    def step4(self, game: Game) -> Optional[Step4]:
        options = game.step4_options()
        if not options:
            return None
        return self.rng.choice(options)


# ---------------------------------------------------------------------------
# Playout driver
# ---------------------------------------------------------------------------


@dataclass
class Transcript:
    winner: str
    reason: str
    rounds: int
    events: list[GameEvent] = field(default_factory=list)


def playout(game: Game, spoiler, defender, *, max_rounds: int = 50) -> Transcript:
    """Run strategies against each other until the game resolves.

    A strategy returning None concedes; stuck positions resolve by the
    game rules (a defender with no admissible reply or answer loses, a
    spoiler with nothing to challenge loses).  A defender that survives
    `max_rounds` full rounds wins.
    """
    while game.phase != "over":
        if game.round > max_rounds:
            game.declare("defender", f"survived {max_rounds} rounds")
            break
        if game.phase == "step1":
            move = spoiler.step1(game)
            if move is None:
                game.apply(Concede("spoiler"))
                continue
            game.apply(move)
        elif game.phase == "step2":
            if not game.defender_can_reply():
                game.declare("spoiler", "no reply passes the transfer check")
                continue
            move = defender.step2(game)
            if move is None:
                game.apply(Concede("defender"))
                continue
            game.apply(move)
        elif game.phase == "step3":
            if game.kind == "classical" and not game.step3_options():
                game.declare("defender", "both predicates are empty; nothing to challenge")
                continue
            move = spoiler.step3(game)
            if move is None:
                game.apply(Concede("spoiler"))
                continue
            game.apply(move)
        elif game.phase == "step4":
            if not game.step4_options():
                game.declare("spoiler", "no answer state is available")
                continue
            move = defender.step4(game)
            if move is None:
                game.apply(Concede("defender"))
                continue
            game.apply(move)
            if hasattr(spoiler, "observe_step4"):
                spoiler.observe_step4(game)
    return Transcript(
        winner=game.winner, reason=game.reason, rounds=game.round, events=list(game.history)
    )


# ---------------------------------------------------------------------------
# Exact solution of the classical game
# ---------------------------------------------------------------------------


@dataclass
class GameSolution:
    winner: str
    spoiler_region: frozenset  # pairs (as frozensets) the spoiler wins


def solve_classical_game(
    sys_: System, x: str, y: str, *, mode: str = "perlam", bound: int = 5
) -> GameSolution:
    """Decide the classical game by exhausting predicates and positions.

    The position space is every unordered state pair; a position falls
    to the spoiler once some side-and-predicate choice leaves the
    defender without a reply, or forces every reply into a challenge the
    defender can only answer inside the spoiler's region.  Cost grows as
    4^|states|, hence the refusal bound.
    """
    sys_.require_state(x)
    sys_.require_state(y)
    states = sys_.states
    n = len(states)
    if n > bound:
        raise RefusalError(
            f"solving the game exactly on {n} states exceeds the bound {bound}; "
            "raise it explicitly if the wait is acceptable"
        )
    preds = [
        frozenset(c) for r in range(n + 1) for c in itertools.combinations(states, r)
    ]

    vec_cache: dict[tuple[str, frozenset], tuple] = {}

    def vec(state: str, p: frozenset) -> tuple:
        key = (state, p)
        got = vec_cache.get(key)
        if got is None:
            atom = {z: (BIT1 if z in p else BIT0) for z in states}
            got = lambda_vector(sys_.lambdas, sys_.image(atom, state))
            vec_cache[key] = got
        return got

    lifted_cache: dict[tuple, bool] = {}

    def admissible(s: str, p1: frozenset, t: str, p2: frozenset) -> bool:
        if mode == "perlam":
            return all(a <= b for a, b in zip(vec(s, p1), vec(t, p2)))
        key = (s, p1, t, p2)
        got = lifted_cache.get(key)
        if got is None:
            atom1 = {z: (BIT1 if z in p1 else BIT0) for z in states}
            atom2 = {z: (BIT1 if z in p2 else BIT0) for z in states}
            got = lifted_order_leq(
                sys_.expr, sys_.image(atom1, s), sys_.image(atom2, t)
            )
            lifted_cache[key] = got
        return got

    positions = [frozenset(p) for p in itertools.combinations(states, 2)]
    spoiler_wins: set[frozenset] = set()

    def next_position(a: str, b: str) -> frozenset:
        return frozenset((a, b))

    def spoiler_can_win(pos: frozenset) -> bool:
        a, b = sorted(pos)
        for s, t in ((a, b), (b, a)):
            for p1 in preds:
                defended = False
                all_replies_fail = True
                for p2 in preds:
                    if not admissible(s, p1, t, p2):
                        continue
                    all_replies_fail = False
                    # the defender survives this reply if no challenge works
                    challenge_works = False
                    for _pick, mine, other in ((1, p1, p2), (2, p2, p1)):
                        for x_ in mine:
                            if not other:
                                challenge_works = True  # nothing to answer with
                                break
                            if all(next_position(x_, y_) in spoiler_wins for y_ in other):
                                challenge_works = True
                                break
                        if challenge_works:
                            break
                    if not challenge_works:
                        defended = True
                        break
                if all_replies_fail or not defended:
                    return True
        return False

    changed = True
    while changed:
        changed = False
        for pos in positions:
            if pos in spoiler_wins:
                continue
            if spoiler_can_win(pos):
                spoiler_wins.add(pos)
                changed = True
    if x == y:
        return GameSolution(winner="defender", spoiler_region=frozenset(spoiler_wins))
    winner = "spoiler" if frozenset((x, y)) in spoiler_wins else "defender"
    return GameSolution(winner=winner, spoiler_region=frozenset(spoiler_wins))
