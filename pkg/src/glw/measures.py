"""Finite surrogate universes with normal-measure structure.

Points form a finite linear order; each point carries finitely many
principal surrogate measures, one seed point per measure, with a declared
well-founded Mitchell order among measures sharing an owner.  Membership in
a measure is seed containment, so the intersection filter at a point is
"superset of all seeds" and positive measure is "meets the seed set".
Measure-free points carry the improper filter: every set is a member and
no set is positive, which makes []# define exactly the measure-free points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .formula import And, Bot, Box, Dia, Formula, Imp, Neg, Or, Top, Var
from .kripke import (
    BoundedMorphism,
    GuardExceeded,
    KnNode,
    KnTruncation,
    KripkeModel,
    as_frame,
    check_bounded_morphism,
    end_extends,
    kn_truncate,
    model_check,
)

GAMMA_SIZE_GUARD = 5000


class ChainExtractionError(RuntimeError):
    """No descending measure chain exists; the structure violates the
    well-founded-rank argument the extraction implements."""


@dataclass(frozen=True)
class WellFoundedOrder:
    elements: tuple[int, ...]
    less: frozenset[tuple[int, int]]

    def validate(self) -> None:
        elems = set(self.elements)
        out: dict[int, list[int]] = {x: [] for x in self.elements}
        for (a, b) in self.less:
            if a not in elems or b not in elems:
                raise ValueError(f"order pair {(a, b)} outside elements")
            if a == b:
                raise ValueError(f"order is not irreflexive at {a}")
            out[a].append(b)
        for (a, b) in self.less:
            for c in out[b]:
                if (a, c) not in self.less:
                    raise ValueError(f"order is not transitive: {(a, b)}, {(b, c)}")
        # finite + irreflexive + transitive already rules out cycles

    def ranks(self) -> dict[int, int]:
        below: dict[int, list[int]] = {x: [] for x in self.elements}
        for (a, b) in self.less:
            below[b].append(a)
        memo: dict[int, int] = {}

        def rk(x: int) -> int:
            if x not in memo:
                memo[x] = 0 if not below[x] else 1 + max(rk(a) for a in below[x])
            return memo[x]

        return {x: rk(x) for x in self.elements}

    def rank(self, x: int) -> int:
        return self.ranks()[x]


@dataclass(frozen=True)
class Measure:
    id: int
    owner: int
    seed: int
    label: KnNode | None = None


@dataclass(frozen=True)
class MeasureStructure:
    points: tuple[int, ...]  # ascending in the linear order; top point last
    measures: tuple[Measure, ...]
    mitchell: frozenset[tuple[int, int]]  # (smaller measure id, larger measure id)

    def __post_init__(self):
        pos = {p: i for i, p in enumerate(self.points)}
        if len(pos) != len(self.points):
            raise ValueError("duplicate points")
        by_id: dict[int, Measure] = {}
        at: dict[int, list[Measure]] = {p: [] for p in self.points}
        for m in self.measures:
            if m.id in by_id:
                raise ValueError(f"duplicate measure id {m.id}")
            by_id[m.id] = m
            if m.owner not in pos or m.seed not in pos:
                raise ValueError(f"measure {m.id} references unknown points")
            if pos[m.seed] >= pos[m.owner]:
                raise ValueError(f"measure {m.id}: seed must be strictly below owner")
            at[m.owner].append(m)
        for (a, b) in self.mitchell:
            if a not in by_id or b not in by_id:
                raise ValueError(f"mitchell pair {(a, b)} references unknown measures")
            if by_id[a].owner != by_id[b].owner:
                raise ValueError(f"mitchell pair {(a, b)} crosses owners")
        for owner, ms_list in at.items():
            if ms_list:
                ids = tuple(m.id for m in ms_list)
                idset = set(ids)
                pairs = frozenset(q for q in self.mitchell if q[0] in idset)
                WellFoundedOrder(ids, pairs).validate()
        below: dict[int, frozenset[int]] = {}
        acc: frozenset[int] = frozenset()
        for p in self.points:
            below[p] = acc
            acc = acc | {p}
        object.__setattr__(self, "_pos", pos)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_at", {p: tuple(v) for p, v in at.items()})
        object.__setattr__(self, "_seeds", {p: frozenset(m.seed for m in v) for p, v in at.items()})
        object.__setattr__(self, "_below", below)

    def position(self, p: int) -> int:
        return self._pos[p]

    def below(self, p: int) -> frozenset[int]:
        return self._below[p]

    def measures_at(self, p: int) -> tuple[Measure, ...]:
        return self._at[p]

    def seeds(self, p: int) -> frozenset[int]:
        return self._seeds[p]

    def measure_by_id(self, mid: int) -> Measure:
        return self._by_id[mid]

    # filter algebra at a point: M_p membership and positivity
    def in_filter(self, p: int, xs: frozenset[int]) -> bool:
        return self.seeds(p) <= xs

    def positive(self, p: int, xs: frozenset[int]) -> bool:
        return bool(self.seeds(p) & xs)


def measure_ranks_at(ms: MeasureStructure, p: int) -> dict[int, int]:
    """Mitchell order o(U) for every measure at p (rank in the declared order)."""
    ids = tuple(m.id for m in ms.measures_at(p))
    idset = set(ids)
    pairs = frozenset(q for q in ms.mitchell if q[0] in idset and q[1] in idset)
    return WellFoundedOrder(ids, pairs).ranks()


def measure_rank(ms: MeasureStructure, mid: int) -> int:
    owner = ms.measure_by_id(mid).owner
    return measure_ranks_at(ms, owner)[mid]


def mitchell_rank(ms: MeasureStructure, p: int) -> int:
    """o(p) = sup{o(U)+1 : U a measure at p}; 0 at measure-free points."""
    if p not in ms.points:
        raise ValueError(f"unknown point {p}")
    ranks = measure_ranks_at(ms, p)
    return 0 if not ranks else 1 + max(ranks.values())


# ---------------------------------------------------------------------------
# Gamma structures (the finite surrogate of the section-3 construction).

@dataclass(frozen=True)
class GammaLabeling:
    truncation: KnTruncation
    gamma: tuple[tuple[KnNode, tuple[int, ...]], ...]
    structure: MeasureStructure

    def block(self, node: KnNode) -> tuple[int, ...]:
        for s, pts in self.gamma:
            if s == node:
                return pts
        raise KeyError(node)

    def block_of_point(self, p: int) -> KnNode:
        for s, pts in self.gamma:
            if p in pts:
                return s
        raise KeyError(p)

    def gamma_dict(self) -> dict[KnNode, tuple[int, ...]]:
        return dict(self.gamma)


def build_gamma_structure(n: int, b: int, m: int, guard: int = GAMMA_SIZE_GUARD) -> GammaLabeling:
    """Surrogate realization of the Gamma construction on kn_truncate(n, b).

    One top point for the root, m fresh points per non-root node; deeper
    nodes sit strictly below shallower ones, lexicographic by node then
    clone index within a depth.  Every point of a block Gamma(s) carries one
    measure per strict end-extension t of s, seeded at the least point of
    Gamma(t); the deeper-labeled measure is Mitchell-smaller.
    """
    if n < 0 or b < 1 or m < 1:
        raise ValueError("need n >= 0, b >= 1, m >= 1")
    trunc = kn_truncate(n, b)
    if (len(trunc.nodes) - 1) * m + 1 > guard:
        raise GuardExceeded(f"gamma structure would have more than {guard} points")

    max_depth = max(len(s) for s in trunc.nodes)
    blocks: dict[KnNode, tuple[int, ...]] = {}
    next_point = itertools.count()
    for depth in range(max_depth, 0, -1):
        for node in sorted(s for s in trunc.nodes if len(s) == depth):
            blocks[node] = tuple(next(next_point) for _ in range(m))
    eta = next(next_point)
    blocks[()] = (eta,)
    points = tuple(range(eta + 1))

    measures: list[Measure] = []
    mid = itertools.count()
    for s in trunc.nodes:
        exts = trunc.extensions(s)
        for p in blocks[s]:
            for t in exts:
                measures.append(Measure(next(mid), p, blocks[t][0], t))

    mitchell: set[tuple[int, int]] = set()
    by_owner: dict[int, list[Measure]] = {}
    for meas in measures:
        by_owner.setdefault(meas.owner, []).append(meas)
    for owner, ms_list in by_owner.items():
        for mu in ms_list:
            for mt in ms_list:
                if end_extends(mt.label, mu.label):
                    mitchell.add((mu.id, mt.id))

    structure = MeasureStructure(points, tuple(measures), frozenset(mitchell))
    gamma = tuple(sorted(blocks.items()))
    return GammaLabeling(trunc, gamma, structure)


def validate_dagger(gl: GammaLabeling) -> tuple[bool, dict | None]:
    """Check the four block conditions; report the first violation.

    1. the root block is nonempty;
    2. blocks are pairwise disjoint;
    3. for s <| t and alpha in Gamma(s), Gamma(t) below alpha is positive
       at alpha;
    4. for non-maximal s and alpha in Gamma(s), the union of the extension
       blocks below alpha belongs to the intersection filter at alpha.
    """
    ms = gl.structure
    blocks = gl.gamma_dict()
    if not blocks.get((), ()):
        return False, {"condition": 1, "witness": ()}
    nodes = list(gl.truncation.nodes)
    for i, s in enumerate(nodes):
        for t in nodes[i + 1 :]:
            shared = set(blocks[s]) & set(blocks[t])
            if shared:
                return False, {"condition": 2, "s": s, "t": t, "witness": min(shared)}
    for s in nodes:
        for t in gl.truncation.extensions(s):
            for alpha in blocks[s]:
                cut = frozenset(blocks[t]) & ms.below(alpha)
                if not ms.positive(alpha, cut):
                    return False, {"condition": 3, "s": s, "t": t, "witness": alpha}
    for s in nodes:
        exts = gl.truncation.extensions(s)
        if not exts:
            continue
        union = frozenset(p for t in exts for p in blocks[t])
        for alpha in blocks[s]:
            if not ms.in_filter(alpha, union & ms.below(alpha)):
                missing = sorted(ms.seeds(alpha) - union)
                return False, {"condition": 4, "s": s, "witness": alpha, "missing_seed": missing[0]}
    return True, None


# ---------------------------------------------------------------------------
# Filter-sequence semantics.

def filter_model_check(
    ms: MeasureStructure,
    valuation: dict[int, frozenset[int] | set[int]],
    f: Formula,
) -> frozenset[int]:
    """Points where f holds: [] is membership in the intersection filter,
    <> is positivity.  The diamond clause is computed both directly and as
    the dual of box; principal measures make them agree, and a mismatch is
    reported as an internal error."""
    pts = frozenset(ms.points)
    for i, xs in valuation.items():
        if not frozenset(xs) <= pts:
            raise ValueError(f"valuation of p{i} not within points")
    memo: dict[Formula, frozenset[int]] = {}

    def ev(g: Formula) -> frozenset[int]:
        if g in memo:
            return memo[g]
        if isinstance(g, Var):
            r = frozenset(valuation.get(g.index, frozenset()))
        elif isinstance(g, Bot):
            r = frozenset()
        elif isinstance(g, Top):
            r = pts
        elif isinstance(g, Neg):
            r = pts - ev(g.arg)
        elif isinstance(g, And):
            r = ev(g.left) & ev(g.right)
        elif isinstance(g, Or):
            r = ev(g.left) | ev(g.right)
        elif isinstance(g, Imp):
            r = (pts - ev(g.left)) | ev(g.right)
        elif isinstance(g, Box):
            inner = ev(g.arg)
            r = frozenset(p for p in ms.points if ms.in_filter(p, inner))
        elif isinstance(g, Dia):
            inner = ev(g.arg)
            direct = frozenset(p for p in ms.points if ms.positive(p, inner))
            dual = frozenset(p for p in ms.points if not ms.in_filter(p, pts - inner))
            if direct != dual:
                raise AssertionError("diamond/box duality violated by structure")
            r = direct
        else:
            raise TypeError(f"not a formula: {g!r}")
        memo[g] = r
        return r

    return ev(f)


def soundness_invariant(ms: MeasureStructure, a: frozenset[int] | set[int]) -> bool:
    """Blass soundness core: if A is in the filter at alpha then so is
    {beta < alpha : A cut below beta is in the filter at beta}."""
    a = frozenset(a)
    for alpha in ms.points:
        if ms.in_filter(alpha, a & ms.below(alpha)):
            reflected = frozenset(
                beta for beta in ms.below(alpha) if ms.in_filter(beta, a & ms.below(beta))
            )
            if not ms.in_filter(alpha, reflected):
                return False
    return True


def tau_m_derivative(ms: MeasureStructure, a: frozenset[int] | set[int]) -> frozenset[int]:
    """Limit points of A in the filter topology: points where A below has
    positive measure.  Measure-free points are isolated."""
    a = frozenset(a)
    return frozenset(p for p in ms.points if ms.positive(p, a & ms.below(p)))


def derivative_ranks(ms: MeasureStructure) -> dict[int, int]:
    """rho(p) = least k with p outside the (k+1)-st derivative of the space."""
    ranks = {p: 0 for p in ms.points}
    current = frozenset(ms.points)
    k = 0
    while current:
        nxt = tau_m_derivative(ms, current)
        for p in nxt:
            ranks[p] = k + 1
        if nxt == current:
            raise AssertionError("derivative iteration reached a nonempty fixpoint")
        current = nxt
        k += 1
    return ranks


def derivative_rank(ms: MeasureStructure, p: int) -> int:
    if p not in ms.points:
        raise ValueError(f"unknown point {p}")
    return derivative_ranks(ms)[p]


def icard_sets(ms: MeasureStructure, zeta: int, xi: int) -> frozenset[int]:
    """{p : zeta < rho(p) <= xi}, the generating sets of the finer topology."""
    if zeta < -1 or xi < 0 or not zeta < xi:
        raise ValueError(f"bad bounds: need -1 <= zeta < xi, got zeta={zeta}, xi={xi}")
    ranks = derivative_ranks(ms)
    return frozenset(p for p in ms.points if zeta < ranks[p] <= xi)


# ---------------------------------------------------------------------------
# The Sigma fragment and descending chains.

def sigma_fragment(k: int) -> list[Formula]:
    """[<>p0] ++ [[](p_i -> <>p_{i+1}) : i < k]."""
    out: list[Formula] = [Dia(Var(0))]
    for i in range(k):
        out.append(Box(Imp(Var(i), Dia(Var(i + 1)))))
    return out


def sigma_satisfiable_at(
    ms: MeasureStructure, p: int, k: int, guard_bits: int = 24
) -> tuple[bool, dict[int, frozenset[int]] | None]:
    """Search a valuation of p0..pk making the whole fragment true at p.

    Truth of the fragment at p only constrains seed points, so minimal
    witnesses are seed chains: sigma_0 in seeds(p), sigma_{i+1} in
    seeds(sigma_i), stopping early once the chain leaves seeds(p) (the box
    premises then hold vacuously).  The search below is exact and the
    witness is re-verified with filter_model_check; an exhaustive valuation
    search is used only as a cross-check fallback on small structures.
    """
    if p not in ms.points:
        raise ValueError(f"unknown point {p}")
    if len(ms.points) * (k + 1) > (1 << guard_bits):
        raise GuardExceeded("sigma search guard exceeded")
    seeds_p = ms.seeds(p)

    def extend(chain: list[int]) -> list[int] | None:
        i = len(chain) - 1
        if i == k or chain[-1] not in seeds_p:
            return chain
        for nxt in sorted(ms.seeds(chain[-1])):
            r = extend(chain + [nxt])
            if r is not None:
                return r
        return None

    witness_chain = None
    for s0 in sorted(seeds_p):
        witness_chain = extend([s0])
        if witness_chain is not None:
            break
    if witness_chain is None:
        return False, None
    valuation: dict[int, frozenset[int]] = {}
    for i in range(k + 1):
        valuation[i] = frozenset({witness_chain[i]}) if i < len(witness_chain) else frozenset()
    for g in sigma_fragment(k):
        if p not in filter_model_check(ms, valuation, g):
            raise AssertionError("sigma witness failed re-verification")
    return True, valuation


def extract_descending_chain(
    ms: MeasureStructure,
    p: int,
    valuation: dict[int, frozenset[int] | set[int]],
    k: int,
) -> list[Measure]:
    """Measures U_0,...,U_k at p with U_{i+1} Mitchell-below U_i, each U_i
    containing the valuation of p_i (and of <>p_{i+1} while applicable).

    Mirrors the strictly-decreasing-rank argument: existence is guaranteed
    on gamma structures; elsewhere a failure signals a structure outside
    the argument's reach and is raised as ChainExtractionError.
    """
    valuation = {i: frozenset(v) for i, v in valuation.items()}
    for g in sigma_fragment(k):
        if p not in filter_model_check(ms, valuation, g):
            raise ValueError(f"precondition failed: {g} does not hold at {p}")
    local = ms.measures_at(p)
    candidates = [
        [mu for mu in local if mu.seed in valuation.get(i, frozenset())] for i in range(k + 1)
    ]
    edges = ms.mitchell

    def pick(i: int, prev: Measure | None) -> list[Measure] | None:
        if i > k:
            return []
        for mu in candidates[i]:
            if prev is not None and (mu.id, prev.id) not in edges:
                continue
            rest = pick(i + 1, mu)
            if rest is not None:
                return [mu] + rest
        return None

    chain = pick(0, None)
    if chain is None:
        # fall back to any chain with strictly decreasing Mitchell order
        ranks = measure_ranks_at(ms, p)

        def pick_rank(i: int, bound: int | None) -> list[Measure] | None:
            if i > k:
                return []
            for mu in candidates[i]:
                if bound is not None and ranks[mu.id] >= bound:
                    continue
                rest = pick_rank(i + 1, ranks[mu.id])
                if rest is not None:
                    return [mu] + rest
            return None

        chain = pick_rank(0, None)
    if chain is None:
        raise ChainExtractionError(
            f"no descending chain of length {k + 1} at point {p}; "
            "structure violates the decreasing-rank argument"
        )
    dia_sets = {
        i: filter_model_check(ms, valuation, Dia(Var(i + 1))) for i in range(k)
    }
    for i, mu in enumerate(chain[:-1]):
        if mu.seed not in dia_sets[i]:
            raise AssertionError("chain measure misses the diamond witness set")
    return chain


# ---------------------------------------------------------------------------
# Reduction from Kripke countermodels to filter countermodels.

def reduce_countermodel(
    gl: GammaLabeling,
    bm: BoundedMorphism,
    km: KripkeModel,
    f: Formula,
) -> dict[int, frozenset[int]]:
    """Transport a tree countermodel of f through the bounded morphism into
    the gamma structure: V(p) is the union of the blocks of nodes mapped to
    worlds where p holds.

    Before returning, the block-constant truth transfer is verified for
    every subformula: a formula holds at a block point iff it holds at the
    image world.  Consequently f fails at the top point.
    """
    frame = km.frame
    if not (frame.is_tree() and frame.is_transitive() and frame.is_irreflexive()):
        raise ValueError("countermodel frame is not a transitive irreflexive tree")
    root = frame.root()
    if root in model_check(km, f):
        raise ValueError("model does not refute the formula at its root")
    if bm.source != as_frame(gl.truncation):
        raise ValueError("morphism source does not match the gamma truncation")
    if bm.target != frame:
        raise ValueError("morphism target does not match the countermodel frame")
    ok, witness = check_bounded_morphism(bm)
    if not ok:
        raise ValueError(f"morphism fails validation: {witness}")
    ok, witness = validate_dagger(gl)
    if not ok:
        raise ValueError(f"gamma labeling fails validation: {witness}")

    fmap = bm.map_of()
    blocks = gl.gamma_dict()
    trunc = gl.truncation
    from .formula import subformulas, variables  # local import to avoid cycle noise

    valuation: dict[int, frozenset[int]] = {}
    for v in variables(f):
        worlds = km.val(v)
        valuation[v] = frozenset(
            p
            for s in trunc.nodes
            if fmap[trunc.node_world(s)] in worlds
            for p in blocks[s]
        )

    for psi in subformulas(f):
        filt = filter_model_check(gl.structure, valuation, psi)
        krip = model_check(km, psi)
        for s in trunc.nodes:
            w_truth = fmap[trunc.node_world(s)] in krip
            for alpha in blocks[s]:
                if (alpha in filt) != w_truth:
                    raise RuntimeError(
                        f"truth transfer failed for {psi} at node {s}, point {alpha}"
                    )
    eta = blocks[()][0]
    if eta in filter_model_check(gl.structure, valuation, f):
        raise RuntimeError("reduction failed: formula not refuted at the top point")
    return valuation
