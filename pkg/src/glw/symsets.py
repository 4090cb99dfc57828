"""Symbolic sets of ordinals below omega^omega, closed under the Boolean
operations, the successor shift, and the topological derivative.

Every set lives inside a space [0, top].  It is a finite union of atoms of
two kinds, both built from per-coefficient constraints:

  * a K0 atom is a set of finite ordinals {m : m in fin};
  * a K1 atom is {lam + m : lam a nonzero limit, lastexp(lam) in the rank
    window, coeff_l(lam) in cons[l] for each constrained level l >= 1,
    m in fin}.

A coefficient constraint is a window plus a residue class.  This algebra
subsumes the plain interval-with-rank-window cells of the on-disk format
(windows of the last exponent), and additionally expresses residue-coded
sets, exact coefficient pins, and successor translates, which is what the
end-segment box clause and the tree countermodel blocks need to stay
closed under the evaluation pipeline.

The derivative has two independent faces: a cell-shift formula
(atom_derivative), and a pointwise cofinality oracle that only uses
least-element searches (derivative_member_oracle).  Tests require them to
agree on sampled points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .ordinals import (
    Ord,
    coeff,
    dec_last,
    is_limit,
    last_exponent,
    leading_exponent,
    omega_power,
    ord_add,
    split_fin,
)


# ---------------------------------------------------------------------------
# Coefficient constraints: {c : lo <= c, c < hi (if bounded), c == res mod mod}

@dataclass(frozen=True)
class CoefCon:
    lo: int = 0
    hi: int | None = None  # exclusive
    mod: int = 1
    res: int = 0

    def __post_init__(self):
        if self.mod < 1 or self.lo < 0:
            raise ValueError("bad coefficient constraint")
        object.__setattr__(self, "res", self.res % self.mod)
        # snap lo up to the residue class for canonical comparison
        snapped = self.lo + ((self.res - self.lo) % self.mod)
        object.__setattr__(self, "lo", snapped)

    def is_empty(self) -> bool:
        return self.hi is not None and self.lo >= self.hi

    def contains(self, c: int) -> bool:
        if c < self.lo or (self.hi is not None and c >= self.hi):
            return False
        return c % self.mod == self.res

    def min_value(self) -> int | None:
        return None if self.is_empty() else self.lo

    def min_at_least(self, x: int) -> int | None:
        v = max(self.lo, x + ((self.res - x) % self.mod))
        if self.hi is not None and v >= self.hi:
            return None
        return v

    def is_unbounded(self) -> bool:
        return self.hi is None

    def has_positive(self) -> bool:
        return self.min_at_least(1) is not None

    def contains_zero(self) -> bool:
        return self.contains(0)

    def shift(self, d: int) -> "CoefCon":
        """{c >= 0 : c - d in self}."""
        lo = max(self.lo + d, 0)
        hi = None if self.hi is None else max(self.hi + d, 0)
        return CoefCon(lo, hi, self.mod, (self.res + d) % self.mod)

    def intersect(self, other: "CoefCon") -> "CoefCon | None":
        g = math.gcd(self.mod, other.mod)
        if (other.res - self.res) % g != 0:
            return None
        lcm = self.mod // g * other.mod
        # CRT: combine the two residues
        m1g, m2g = self.mod // g, other.mod // g
        t = ((other.res - self.res) // g * pow(m1g, -1, m2g)) % m2g
        res = (self.res + self.mod * t) % lcm
        lo = max(self.lo, other.lo)
        if self.hi is None:
            hi = other.hi
        elif other.hi is None:
            hi = self.hi
        else:
            hi = min(self.hi, other.hi)
        out = CoefCon(lo, hi, lcm, res)
        return None if out.is_empty() else out

    def complement(self) -> "list[CoefCon]":
        """Disjoint constraints covering {c >= 0} minus self.

        lo is class-snapped, so [0, lo) is entirely outside; within the
        window only the other residues remain; everything from hi on is out.
        """
        out = []
        if self.lo > 0:
            out.append(CoefCon(0, self.lo))
        if self.hi is not None:
            out.append(CoefCon(self.hi, None))
        for r in range(self.mod):
            if r != self.res:
                piece = CoefCon(self.lo, self.hi, self.mod, r)
                if not piece.is_empty():
                    out.append(piece)
        return out


FULL_CON = CoefCon()
ZERO_CON = CoefCon(0, 1)
POS_CON = CoefCon(1, None)


def exact_con(v: int) -> CoefCon:
    return CoefCon(v, v + 1)


# ---------------------------------------------------------------------------
# Atoms.

@dataclass(frozen=True)
class Atom:
    fin: CoefCon
    rank: tuple[int, int] | None  # None: K0 (finite ordinals); else lastexp window
    cons: tuple[tuple[int, CoefCon], ...] = ()  # sorted by level; levels >= 1

    def con_at(self, level: int) -> CoefCon:
        for (l, c) in self.cons:
            if l == level:
                return c
        return FULL_CON


def make_atom(fin: CoefCon, rank: tuple[int, int] | None, cons: dict[int, CoefCon] | None = None) -> Atom:
    items = tuple(sorted((l, c) for (l, c) in (cons or {}).items() if c != FULL_CON))
    for (l, c) in items:
        if l < 1:
            raise ValueError("coefficient constraints live at levels >= 1")
    return Atom(fin, rank, items)


def atom_member(atom: Atom, a: Ord) -> bool:
    lam, m = split_fin(a)
    if not atom.fin.contains(m):
        return False
    if atom.rank is None:
        return lam == ()
    if lam == ():
        return False
    r1, r2 = atom.rank
    if not (r1 <= last_exponent(lam) <= r2):
        return False
    return all(c.contains(coeff(lam, l)) for (l, c) in atom.cons)


def atom_is_empty(atom: Atom, level_bound: int) -> bool:
    if atom.fin.is_empty():
        return True
    if atom.rank is None:
        return False
    r1, r2 = atom.rank
    r2 = min(r2, level_bound)
    if r1 > r2:
        return True
    if any(c.is_empty() for (_, c) in atom.cons):
        return True
    for r in range(r1, r2 + 1):
        if not atom.con_at(r).has_positive():
            continue
        if all(atom.con_at(l).contains_zero() for l in range(1, r)):
            return False
    return True


def atom_intersect(a: Atom, b: Atom) -> Atom | None:
    fin = a.fin.intersect(b.fin)
    if fin is None:
        return None
    if a.rank is None and b.rank is None:
        return Atom(fin, None)
    if a.rank is None or b.rank is None:
        return None
    r1 = max(a.rank[0], b.rank[0])
    r2 = min(a.rank[1], b.rank[1])
    if r1 > r2:
        return None
    cons: dict[int, CoefCon] = dict(a.cons)
    for (l, c) in b.cons:
        if l in cons:
            merged = cons[l].intersect(c)
            if merged is None:
                return None
            cons[l] = merged
        else:
            cons[l] = c
    return make_atom(fin, (r1, r2), cons)


def atom_complement(atom: Atom, level_bound: int) -> list[Atom]:
    """Disjoint atoms covering everything (below level_bound) outside atom."""
    L = level_bound
    full_rank = (1, L) if L >= 1 else None
    out: list[Atom] = []
    if atom.rank is None:
        if full_rank:
            out.append(Atom(FULL_CON, full_rank))
        for fc in atom.fin.complement():
            out.append(Atom(fc, None))
        return out
    # K1 atom: everything finite is outside it
    out.append(Atom(FULL_CON, None))
    r1, r2 = atom.rank
    # wrong rank
    if r1 > 1:
        out.append(Atom(FULL_CON, (1, r1 - 1)))
    if r2 < L:
        out.append(Atom(FULL_CON, (r2 + 1, L)))
    rank = (r1, min(r2, L))
    if rank[0] > rank[1]:
        return out
    # right rank, first violated constraint at some level (ladder keeps pieces disjoint)
    kept: dict[int, CoefCon] = {}
    for (l, c) in atom.cons:
        for cc in c.complement():
            cons = dict(kept)
            cons[l] = cc
            out.append(make_atom(FULL_CON, rank, cons))
        kept[l] = c
    # all constraints hold, finite part outside
    for fc in atom.fin.complement():
        out.append(make_atom(fc, rank, kept))
    return out


def atom_shift_succ(atom: Atom) -> Atom:
    """{a + 1 : a in atom}."""
    return Atom(atom.fin.shift(+1), atom.rank, atom.cons)


def atom_derivative(atom: Atom, level_bound: int) -> list[Atom]:
    """Cell-shift form of the derivative of a single atom.

    A K0 atom with unbounded finite part accumulates at omega.  A K1 atom
    contributes limits in two ways: a fixed lambda with unbounded finite
    part accumulates at lam + omega (a rank-1 point whose level-1
    coefficient records lam's rank case), and the lambda set itself
    accumulates at points of rank e >= 2 whose decremented level-e
    coefficient is admissible, provided coefficients at level e-1 are
    unbounded and a tail of admissible rank exists.
    """
    L = level_bound
    out: list[Atom] = []
    if atom.fin.is_empty():
        return out
    if atom.rank is None:
        if atom.fin.is_unbounded() and L >= 1:
            cons = {1: exact_con(1)}
            for l in range(2, L + 1):
                cons[l] = ZERO_CON
            out.append(make_atom(ZERO_CON, (1, 1), cons))
        return out
    r1, r2 = atom.rank
    r2 = min(r2, L)
    if r1 > r2 or any(c.is_empty() for (_, c) in atom.cons):
        return out
    # translates lam + omega for each rank case of lam
    if atom.fin.is_unbounded():
        for r in range(r1, r2 + 1):
            if not all(atom.con_at(l).contains_zero() for l in range(1, r)):
                continue
            pos_r = atom.con_at(r).intersect(POS_CON)
            if pos_r is None:
                continue
            cons: dict[int, CoefCon] = {}
            for (l, c) in atom.cons:
                if l > r:
                    cons[l] = c
            if r == 1:
                cons[1] = pos_r.shift(+1)
            else:
                cons[1] = exact_con(1)
                for l in range(2, r):
                    cons[l] = ZERO_CON
                cons[r] = pos_r
            out.append(make_atom(ZERO_CON, (1, 1), cons))
    # limit points of the lambda set
    for e in range(max(r1 + 1, 2), L + 1):
        if not atom.con_at(e - 1).is_unbounded():
            continue
        feasible = False
        for r in range(r1, min(r2, e - 1) + 1):
            if not atom.con_at(r).has_positive():
                continue
            if all(atom.con_at(l).contains_zero() for l in range(1, r)):
                feasible = True
                break
        if not feasible:
            continue
        cons = {e: atom.con_at(e).shift(+1)}
        for (l, c) in atom.cons:
            if l > e:
                cons[l] = c
        out.append(make_atom(ZERO_CON, (e, e), cons))
    return out


# least-element machinery -----------------------------------------------------

def _min_tail(p: int, r1: int, r2: int, con) -> list[tuple[int, int]] | None:
    """Minimal coefficients for levels < p so the completed lambda has an
    admissible last exponent; None when impossible."""
    required: list[tuple[int, int]] = []
    for l in range(p - 1, 0, -1):
        c = con(l)
        if not c.contains_zero():
            v = c.min_value()
            if v is None:
                return None
            required.append((l, v))
    lmin = min((l for (l, _) in required), default=p)
    if lmin < r1:
        return None
    if lmin <= r2:
        return required
    # need an extra term to pull the last exponent into the window
    for r in range(r1, min(r2, lmin - 1) + 1):
        v = con(r).min_at_least(1)
        if v is not None:
            return required + [(r, v)]
    return None


def _least_lambda(atom: Atom, y: Ord, strict: bool, level_bound: int) -> Ord | None:
    """Least nonzero limit in atom's lambda set that is >= y (or > y)."""
    if atom.rank is None:
        return None
    L = level_bound
    r1, r2 = atom.rank
    r2 = min(r2, L)
    if r1 > r2:
        return None
    con = atom.con_at
    if leading_exponent(y) > L and y != ():
        return None
    ycoef = [0] * (L + 2)
    for (e, c) in y:
        ycoef[e] = c
    candidates: list[Ord] = []
    if (
        not strict
        and y != ()
        and r1 <= last_exponent(y) <= r2
        and all(con(l).contains(ycoef[l]) for l in range(1, L + 1))
    ):
        candidates.append(y)
    for p in range(1, L + 1):
        if any(not con(l).contains(ycoef[l]) for l in range(p + 1, L + 1)):
            continue
        if p < r1:
            continue
        cp = con(p).min_at_least(ycoef[p] + 1)
        if cp is None:
            continue
        tail = _min_tail(p, r1, r2, con)
        if tail is None:
            continue
        terms = [(l, ycoef[l]) for l in range(L, p, -1) if ycoef[l] > 0]
        terms.append((p, cp))
        terms.extend(sorted(tail, key=lambda t: -t[0]))
        candidates.append(tuple(terms))
    return min(candidates) if candidates else None


def _lambda_ok(atom: Atom, lam: Ord, level_bound: int) -> bool:
    if lam == () or atom.rank is None:
        return False
    r1, r2 = atom.rank
    if not (r1 <= last_exponent(lam) <= min(r2, level_bound)):
        return False
    return all(c.contains(coeff(lam, l)) for (l, c) in atom.cons)


def _with_fin(lam: Ord, m: int) -> Ord:
    return ord_add(lam, ((0, m),)) if m else lam


def atom_least_above(atom: Atom, beta: Ord | None, level_bound: int) -> Ord | None:
    """Least element of the atom strictly above beta (or the least element
    overall when beta is None)."""
    if atom.rank is None:
        if beta is None:
            v = atom.fin.min_value()
        else:
            lamb, mb = split_fin(beta)
            if lamb != ():
                return None  # atom holds only finite ordinals
            v = atom.fin.min_at_least(mb + 1)
        return None if v is None else (((0, v),) if v else ())
    minfin = atom.fin.min_value()
    if minfin is None:
        return None
    if beta is None:
        lam = _least_lambda(atom, (), True, level_bound)
        return None if lam is None else _with_fin(lam, minfin)
    lamb, mb = split_fin(beta)
    candidates: list[Ord] = []
    if _lambda_ok(atom, lamb, level_bound):
        v = atom.fin.min_at_least(mb + 1)
        if v is not None:
            candidates.append(_with_fin(lamb, v))
    lam = _least_lambda(atom, lamb, True, level_bound)
    if lam is not None:
        candidates.append(_with_fin(lam, minfin))
    return min(candidates) if candidates else None
