"""Watch the spoiler dismantle a trace-equivalent pair.

States 1 and 2 of the branching system have identical traces, so no
amount of single-step probing separates them.  The spoiler first
synthesizes a distinguishing formula, then plays the classical game
against the engine defender, using the formula as a plan: every round
peels one modality, and the number of rounds never exceeds the modal
depth of the formula.

Run:  python3 demos/spoiler_walkthrough.py
"""

from pathlib import Path

from coalgame import (
    ClassicalFormulaSpoiler,
    ClosureDefender,
    Game,
    parse_system,
    playout,
    synthesize_formula,
)

HERE = Path(__file__).parent


def main() -> None:
    sys_ = parse_system((HERE / "labelled_tree.coalg").read_text(), name="branching")
    synth = synthesize_formula(sys_, "1", "2")
    print(f"distinguishing formula: {synth.text}")
    print(f"modal depth:            {synth.depth}")
    print()

    game = Game(sys_, "classical", "1", "2")
    spoiler = ClassicalFormulaSpoiler(sys_, "1", "2")
    defender = ClosureDefender(sys_)
    transcript = playout(game, spoiler, defender)

    for event in transcript.events:
        print(f"round {event.round}  {event.phase:6}  {event.by:8}  {event.note or ''}")
    print()
    print(f"winner: {transcript.winner} ({transcript.reason})")
    print(f"rounds used: {transcript.rounds} (bound was {synth.depth})")


if __name__ == "__main__":
    main()
