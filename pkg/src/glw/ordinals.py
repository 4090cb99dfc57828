"""Cantor normal form arithmetic for ordinals below omega^omega.

An ordinal is a tuple of (exponent, coefficient) pairs with strictly
decreasing natural exponents and positive coefficients; () is zero.  Plain
tuple comparison coincides with the ordinal order, so no wrapper class is
needed.

Literal syntax (bit-exact): "w^k*c + ... + c0", e.g. "w^2*3+w+5"; "w" for
w^1, coefficient 1 omitted, "0" for zero.
"""

from __future__ import annotations

import re

Ord = tuple[tuple[int, int], ...]

ZERO: Ord = ()
EXPONENT_LIMIT = 1000  # parse guard; values at or beyond omega^omega are unrepresentable


class OrdinalError(ValueError):
    pass


def ord_fin(n: int) -> Ord:
    if n < 0:
        raise OrdinalError("ordinals are non-negative")
    return () if n == 0 else ((0, n),)


def omega_power(e: int, c: int = 1) -> Ord:
    if c < 0 or e < 0:
        raise OrdinalError("bad omega power")
    return () if c == 0 else ((e, c),)


def ord_is_valid(a: Ord) -> bool:
    prev = None
    for (e, c) in a:
        if c < 1 or e < 0 or (prev is not None and e >= prev):
            return False
        prev = e
    return True


def ord_cmp(a: Ord, b: Ord) -> int:
    """-1, 0, or 1; tuple order equals ordinal order on normal forms."""
    return -1 if a < b else (0 if a == b else 1)


def ord_add(a: Ord, b: Ord) -> Ord:
    """Left-absorbing CNF addition."""
    if not b:
        return a
    e = b[0][0]
    keep = [t for t in a if t[0] > e]
    merged = list(b)
    for t in a:
        if t[0] == e:
            merged[0] = (e, t[1] + b[0][1])
    return tuple(keep) + tuple(merged)


def ord_succ(a: Ord) -> Ord:
    return ord_add(a, ((0, 1),))


def last_exponent(a: Ord) -> int:
    """0 for zero and successors; the final CNF exponent otherwise."""
    return 0 if not a else a[-1][0]


def leading_exponent(a: Ord) -> int:
    return 0 if not a else a[0][0]


def coeff(a: Ord, level: int) -> int:
    for (e, c) in a:
        if e == level:
            return c
    return 0


def is_limit(a: Ord) -> bool:
    return bool(a) and a[-1][0] >= 1


def split_fin(a: Ord) -> tuple[Ord, int]:
    """a = limit-or-zero part + finite part."""
    if a and a[-1][0] == 0:
        return a[:-1], a[-1][1]
    return a, 0


def dec_last(a: Ord) -> Ord:
    """Decrement the last CNF coefficient (drop the term when it reaches 0)."""
    if not a:
        raise OrdinalError("cannot decrement zero")
    (e, c) = a[-1]
    return a[:-1] if c == 1 else a[:-1] + ((e, c - 1),)


_TERM_RE = re.compile(r"^(?:w(?:\^(\d+))?(?:\*(\d+))?|(\d+))$")


def parse_ordinal(text: str) -> Ord:
    text = text.strip()
    if text == "0":
        return ()
    terms = []
    for raw in text.split("+"):
        raw = raw.strip()
        m = _TERM_RE.match(raw)
        if not m:
            raise OrdinalError(f"bad ordinal term {raw!r}")
        if m.group(3) is not None:
            e, c = 0, int(m.group(3))
        else:
            e = int(m.group(1)) if m.group(1) is not None else 1
            c = int(m.group(2)) if m.group(2) is not None else 1
        if e >= EXPONENT_LIMIT:
            raise OrdinalError(f"exponent {e} too large (values must stay below omega^omega)")
        if c < 1:
            raise OrdinalError(f"coefficient must be positive in {raw!r}")
        terms.append((e, c))
    a = tuple(terms)
    if not ord_is_valid(a):
        raise OrdinalError(f"terms not in strictly decreasing exponent order: {text!r}")
    return a


def format_ordinal(a: Ord) -> str:
    if not a:
        return "0"
    parts = []
    for (e, c) in a:
        if e == 0:
            parts.append(str(c))
        elif e == 1:
            parts.append("w" if c == 1 else f"w*{c}")
        else:
            parts.append(f"w^{e}" if c == 1 else f"w^{e}*{c}")
    return "+".join(parts)
