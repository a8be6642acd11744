"""A family of systems whose behavioural distance shrinks geometrically.

State x terminates after i steps with probability 1/2^i for i up to a
cutoff k; the leftover tail mass 1/2^k diverges.  State y terminates
after one step with probability one.  As k grows the divergent tail
gets lighter and d(x, y) = 1/2^k falls towards zero: the finite family
approaches a pair of states that an infinite system would make
behaviourally equivalent.

Run:  python3 demos/shrinking_tail.py [max_k]
"""

import sys
from fractions import Fraction

from coalgame import behavioural_distance, parse_system


def truncated_tail(k: int) -> str:
    lines = [
        "functor: Dist(Id) + One",
        "states: x, y, y0, omega, " + ", ".join(f"x{i}" for i in range(1, k + 1)),
    ]
    weights = [f"x{i}: 1/{2 ** i}" for i in range(1, k + 1)]
    weights.append(f"omega: 1/{2 ** k}")
    lines.append(f"alpha x = inl dist{{{', '.join(weights)}}}")
    lines.append("alpha y = inl dist{y0: 1}")
    lines.append("alpha y0 = inr unit")
    lines.append("alpha omega = inl dist{omega: 1}")
    lines.extend(f"alpha x{i} = inr unit" for i in range(1, k + 1))
    return "\n".join(lines) + "\n"


def main() -> None:
    max_k = int(sys.argv[1]) if len(sys.argv) > 1 else 8
    print(" k  d(x, y)      expected")
    for k in range(1, max_k + 1):
        sys_ = parse_system(truncated_tail(k), name=f"tail-{k}")
        result = behavioural_distance(sys_)
        value = result.value("x", "y")
        expected = Fraction(1, 2**k)
        mark = "ok" if value == expected else "MISMATCH"
        print(f"{k:2}  {str(value):10}  {str(expected):10} {mark}")


if __name__ == "__main__":
    main()
