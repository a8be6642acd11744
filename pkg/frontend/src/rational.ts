/** Exact rational arithmetic on bigint, mirroring the server's "p/q" wire format. */

export interface Rat {
  readonly n: bigint;
  readonly d: bigint; // always > 0, gcd(|n|, d) = 1
}

export const ZERO: Rat = { n: 0n, d: 1n };
export const ONE: Rat = { n: 1n, d: 1n };

function gcd(a: bigint, b: bigint): bigint {
  a = a < 0n ? -a : a;
  b = b < 0n ? -b : b;
  while (b) {
    [a, b] = [b, a % b];
  }
  return a;
}

export function rat(n: bigint, d: bigint): Rat {
  if (d === 0n) throw new Error("zero denominator");
  if (d < 0n) {
    n = -n;
    d = -d;
  }
  const g = gcd(n, d) || 1n;
  return { n: n / g, d: d / g };
}

export function fromInt(n: number | bigint): Rat {
  return { n: BigInt(n), d: 1n };
}

const RAT_RE = /^(-?\d+)(?:\s*\/\s*(\d+))?$/;

/** Parse "p/q" or "p".  Decimal notation is rejected, like on the server. */
export function parseRat(text: string): Rat {
  const m = RAT_RE.exec(text.trim());
  if (!m) throw new Error(`not a rational: '${text}'`);
  return rat(BigInt(m[1]!), BigInt(m[2] ?? "1"));
}

/** Like parseRat but returns null instead of throwing. */
export function tryParseRat(text: string): Rat | null {
  try {
    return parseRat(text);
  } catch {
    return null;
  }
}

export function ratToString(r: Rat): string {
  return r.d === 1n ? r.n.toString() : `${r.n}/${r.d}`;
}

export function add(a: Rat, b: Rat): Rat {
  return rat(a.n * b.d + b.n * a.d, a.d * b.d);
}

export function sub(a: Rat, b: Rat): Rat {
  return rat(a.n * b.d - b.n * a.d, a.d * b.d);
}

export function neg(a: Rat): Rat {
  return { n: -a.n, d: a.d };
}

/** -1, 0 or 1 as a < b, a = b, a > b. */
export function cmp(a: Rat, b: Rat): number {
  const lhs = a.n * b.d;
  const rhs = b.n * a.d;
  return lhs < rhs ? -1 : lhs > rhs ? 1 : 0;
}

export function eq(a: Rat, b: Rat): boolean {
  return a.n === b.n && a.d === b.d;
}

export function min(a: Rat, b: Rat): Rat {
  return cmp(a, b) <= 0 ? a : b;
}

export function max(a: Rat, b: Rat): Rat {
  return cmp(a, b) >= 0 ? a : b;
}

export function isNegative(a: Rat): boolean {
  return a.n < 0n;
}

/** Clamp into [0, top]; used when prefilling editor values. */
export function clamp(a: Rat, top: Rat): Rat {
  return max(ZERO, min(a, top));
}
