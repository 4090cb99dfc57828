"""Finite Kripke frames and models, K_n tree truncations, bounded morphisms.

Frames are value-comparable (frozen dataclasses over tuples/frozensets) so
they can serve as golden-file content.  World ids are dense naturals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .formula import And, Bot, Box, Dia, Formula, Imp, Neg, Or, Top, Var, variables

KnNode = tuple[tuple[int, int], ...]

TREE_ENUM_LIMIT = 8
FRAME_VALIDITY_GUARD_BITS = 20
KN_SIZE_GUARD = 20000


class GuardExceeded(RuntimeError):
    """A brute-force search guard was exceeded."""


@dataclass(frozen=True)
class KripkeFrame:
    worlds: tuple[int, ...]
    relation: frozenset[tuple[int, int]]

    def __post_init__(self):
        ws = set(self.worlds)
        for (u, v) in self.relation:
            if u not in ws or v not in ws:
                raise ValueError(f"relation pair {(u, v)} not within worlds")

    def successors(self, w: int) -> list[int]:
        return sorted(v for (u, v) in self.relation if u == w)

    def predecessors(self, w: int) -> list[int]:
        return sorted(u for (u, v) in self.relation if v == w)

    def is_transitive(self) -> bool:
        rel = self.relation
        return all((u, x) in rel for (u, v) in rel for (v2, x) in rel if v2 == v)

    def is_irreflexive(self) -> bool:
        return all(u != v for (u, v) in self.relation)

    def immediate(self) -> set[tuple[int, int]]:
        """Transitive reduction: edges (u,v) with no w such that uRw and wRv."""
        rel = self.relation
        return {
            (u, v)
            for (u, v) in rel
            if not any((u, w) in rel and (w, v) in rel for w in self.worlds)
        }

    def is_tree(self) -> bool:
        """Strict descendant relation of a finite rooted tree.

        Requires transitivity, irreflexivity, a unique root (no predecessors),
        a unique immediate predecessor for every non-root world, and
        reachability of every world from the root.
        """
        if not (self.is_transitive() and self.is_irreflexive()):
            return False
        roots = [w for w in self.worlds if not self.predecessors(w)]
        if len(roots) != 1:
            return False
        root = roots[0]
        imm = self.immediate()
        for w in self.worlds:
            if w == root:
                continue
            parents = [u for (u, v) in imm if v == w]
            if len(parents) != 1:
                return False
            if (root, w) not in self.relation:
                return False
        return True

    def root(self) -> int:
        roots = [w for w in self.worlds if not self.predecessors(w)]
        if len(roots) != 1:
            raise ValueError("frame has no unique root")
        return roots[0]

    def height(self) -> int:
        """Length of the longest R-chain (0 for a single irreflexive point)."""
        memo: dict[int, int] = {}

        def h(w: int) -> int:
            if w not in memo:
                succ = self.successors(w)
                memo[w] = 0 if not succ else 1 + max(h(v) for v in succ)
            return memo[w]

        return max((h(w) for w in self.worlds), default=0)

    def subtree_height(self, w: int) -> int:
        succ = self.successors(w)
        return 0 if not succ else 1 + max(self.subtree_height(v) for v in succ)


@dataclass(frozen=True)
class KripkeModel:
    frame: KripkeFrame
    valuation: tuple[tuple[int, frozenset[int]], ...]  # (var index, worlds) pairs

    def __post_init__(self):
        ws = set(self.frame.worlds)
        for _, val in self.valuation:
            if not set(val) <= ws:
                raise ValueError("valuation set not within worlds")

    @staticmethod
    def make(frame: KripkeFrame, valuation: dict[int, set[int]]) -> "KripkeModel":
        items = tuple(sorted((i, frozenset(v)) for i, v in valuation.items()))
        return KripkeModel(frame, items)

    def val(self, index: int) -> frozenset[int]:
        for i, v in self.valuation:
            if i == index:
                return v
        return frozenset()


def model_check(model: KripkeModel, f: Formula) -> frozenset[int]:
    """Worlds where f holds, by the recursive valuation clauses."""
    frame = model.frame
    all_worlds = frozenset(frame.worlds)
    memo: dict[Formula, frozenset[int]] = {}

    def ev(g: Formula) -> frozenset[int]:
        if g in memo:
            return memo[g]
        if isinstance(g, Var):
            r = model.val(g.index)
        elif isinstance(g, Bot):
            r = frozenset()
        elif isinstance(g, Top):
            r = all_worlds
        elif isinstance(g, Neg):
            r = all_worlds - ev(g.arg)
        elif isinstance(g, And):
            r = ev(g.left) & ev(g.right)
        elif isinstance(g, Or):
            r = ev(g.left) | ev(g.right)
        elif isinstance(g, Imp):
            r = (all_worlds - ev(g.left)) | ev(g.right)
        elif isinstance(g, Box):
            inner = ev(g.arg)
            r = frozenset(w for w in frame.worlds if all(v in inner for v in frame.successors(w)))
        elif isinstance(g, Dia):
            inner = ev(g.arg)
            r = frozenset(w for w in frame.worlds if any(v in inner for v in frame.successors(w)))
        else:
            raise TypeError(f"not a formula: {g!r}")
        memo[g] = r
        return r

    return ev(f)


# ---------------------------------------------------------------------------
# Enumeration of finite transitive irreflexive trees up to isomorphism.
# A rooted tree is canonicalized as the sorted tuple of its canonical subtrees.

def _canonical_trees(n: int, memo: dict[int, list[tuple]]) -> list[tuple]:
    if n in memo:
        return memo[n]
    if n == 1:
        memo[1] = [()]
        return memo[1]
    smaller: list[tuple[int, tuple]] = []
    for k in range(1, n):
        for t in _canonical_trees(k, memo):
            smaller.append((k, t))
    # index order on (size, shape) gives a total order; children chosen as a
    # nondecreasing index sequence so each multiset appears once
    result: list[tuple] = []

    def extend(remaining: int, min_idx: int, chosen: tuple):
        if remaining == 0:
            result.append(chosen)
            return
        for idx in range(min_idx, len(smaller)):
            size, shape = smaller[idx]
            if size > remaining:
                continue
            extend(remaining - size, idx, chosen + (shape,))

    extend(n - 1, 0, ())
    result = [tuple(sorted(ch)) for ch in result]
    result = sorted(set(result))
    memo[n] = result
    return result


def _tree_shape_size(shape: tuple) -> int:
    return 1 + sum(_tree_shape_size(c) for c in shape)


def _shape_to_frame(shape: tuple) -> KripkeFrame:
    """Preorder world numbering; relation is the strict descendant order."""
    edges: set[tuple[int, int]] = set()
    counter = itertools.count()

    def build(sh: tuple) -> tuple[int, list[int]]:
        me = next(counter)
        below = [me]
        for child in sh:
            c, sub = build(child)
            for d in sub:
                edges.add((me, d))
            below.extend(sub)
        return me, below

    _, all_nodes = build(shape)
    return KripkeFrame(tuple(range(len(all_nodes))), frozenset(edges))


def enumerate_trees(max_nodes: int):
    """All finite transitive irreflexive trees with <= max_nodes worlds, up to
    isomorphism, each exactly once, sizes ascending."""
    if max_nodes > TREE_ENUM_LIMIT:
        raise GuardExceeded(f"enumerate_trees limited to {TREE_ENUM_LIMIT} nodes")
    memo: dict[int, list[tuple]] = {}
    for n in range(1, max_nodes + 1):
        for shape in _canonical_trees(n, memo):
            yield _shape_to_frame(shape)


def frame_validity(frame: KripkeFrame, f: Formula, guard_bits: int = FRAME_VALIDITY_GUARD_BITS) -> bool:
    """True iff f is valid in the frame (all valuations over vars(f))."""
    vs = variables(f)
    bits = len(frame.worlds) * len(vs)
    if bits > guard_bits:
        raise GuardExceeded(f"frame_validity search space 2^{bits} exceeds 2^{guard_bits}")
    worlds = list(frame.worlds)
    all_w = frozenset(worlds)
    for mask in range(1 << bits):
        valuation = {}
        for i, v in enumerate(vs):
            ws = frozenset(
                worlds[j] for j in range(len(worlds)) if (mask >> (i * len(worlds) + j)) & 1
            )
            valuation[v] = set(ws)
        model = KripkeModel.make(frame, valuation)
        if model_check(model, f) != all_w:
            return False
    return True


# ---------------------------------------------------------------------------
# K_n truncations.

def kn_node_valid(node: KnNode, n: int, b: int | None = None) -> bool:
    prev = n
    for (i, j) in node:
        if not (0 <= i < prev):
            return False
        if j < 0 or (b is not None and j >= b):
            return False
        prev = i
    return True


def kn_height(node: KnNode, n: int) -> int:
    """Height of a node: n for the root, else the last first-component."""
    return n if not node else node[-1][0]


def end_extends(s: KnNode, t: KnNode) -> bool:
    """Strict end-extension: s <| t."""
    return len(t) > len(s) and t[: len(s)] == s


@dataclass(frozen=True)
class KnTruncation:
    n: int
    b: int
    nodes: tuple[KnNode, ...]  # sorted, prefix-closed, root first

    def node_world(self, node: KnNode) -> int:
        return self.nodes.index(node)

    def extensions(self, s: KnNode) -> list[KnNode]:
        return [t for t in self.nodes if end_extends(s, t)]

    def children(self, s: KnNode) -> list[KnNode]:
        return [t for t in self.nodes if len(t) == len(s) + 1 and t[: len(s)] == s]


def kn_truncate(n: int, b: int, guard: int = KN_SIZE_GUARD) -> KnTruncation:
    """All admissible K_n label sequences with every j < b; prefix-closed."""
    if n < 0 or b < 1:
        raise ValueError("need n >= 0 and b >= 1")
    if (b + 1) ** n > guard:
        raise GuardExceeded(f"kn_truncate would build {(b + 1) ** n} nodes (guard {guard})")
    nodes: list[KnNode] = []

    def grow(prefix: KnNode, height: int):
        nodes.append(prefix)
        for i in range(height - 1, -1, -1):
            for j in range(b):
                grow(prefix + ((i, j),), i)

    grow((), n)
    return KnTruncation(n, b, tuple(sorted(nodes)))


def as_frame(trunc: KnTruncation) -> KripkeFrame:
    """Worlds are node indices (sorted node order); relation is strict
    end-extension, a transitive irreflexive tree."""
    idx = {node: w for w, node in enumerate(trunc.nodes)}
    rel = frozenset(
        (idx[s], idx[t]) for s in trunc.nodes for t in trunc.nodes if end_extends(s, t)
    )
    return KripkeFrame(tuple(range(len(trunc.nodes))), rel)


# ---------------------------------------------------------------------------
# Bounded morphisms.

@dataclass(frozen=True)
class BoundedMorphism:
    source: KripkeFrame
    target: KripkeFrame
    mapping: tuple[tuple[int, int], ...]  # (source world, target world) pairs
    truncation: KnTruncation | None = field(default=None, compare=False)

    def map_of(self) -> dict[int, int]:
        return dict(self.mapping)

    @staticmethod
    def make(source, target, mapping: dict[int, int], truncation=None) -> "BoundedMorphism":
        return BoundedMorphism(source, target, tuple(sorted(mapping.items())), truncation)


def check_bounded_morphism(bm: BoundedMorphism) -> tuple[bool, dict | None]:
    """Validate forth, back, and surjectivity; on failure return a witness for
    the first violated condition."""
    f = bm.map_of()
    for w in bm.source.worlds:
        if w not in f:
            return False, {"condition": "total", "witness": w}
    for (s, t) in sorted(bm.source.relation):
        if (f[s], f[t]) not in bm.target.relation:
            return False, {"condition": "forth", "witness": (s, t)}
    for s in bm.source.worlds:
        for w in bm.target.successors(f[s]):
            if not any((s, t) in bm.source.relation and f[t] == w for t in bm.source.worlds):
                return False, {"condition": "back", "witness": (s, w)}
    hit = set(f.values())
    for w in bm.target.worlds:
        if w not in hit:
            return False, {"condition": "surjective", "witness": w}
    return True, None


def build_bounded_morphism(n: int, target: KripkeFrame) -> BoundedMorphism:
    """Surjective bounded morphism from a K_h truncation onto a finite
    transitive irreflexive tree of height h <= n.

    The truncation height equals the target's height exactly (a taller K
    tree has no bounded morphism onto a shorter one: its extra levels would
    need successors the target lacks).  Each node of K-height i is sent to a
    world of subtree height exactly i; labels (i, j) cycle over the immediate
    children of matching height, so the back condition has witnesses, and
    fall back to a deeper descendant of height i when no immediate child
    matches.
    """
    if not target.is_tree():
        raise ValueError("target is not a finite transitive irreflexive tree")
    h = target.height()
    if h > n:
        raise ValueError(f"target height {h} exceeds n={n}")
    imm = target.immediate()
    children = {w: sorted(v for (u, v) in imm if u == w) for w in target.worlds}
    sub_h = {w: target.subtree_height(w) for w in target.worlds}
    b = max(
        [1]
        + [
            sum(1 for c in children[w] if sub_h[c] == i)
            for w in target.worlds
            for i in range(sub_h[w])
        ]
    )
    trunc = kn_truncate(h, b)

    def descendant_of_height(w: int, i: int) -> int:
        # walk the deepest chain; heights along it cover every value < sub_h[w]
        cur = w
        while sub_h[cur] != i:
            cur = max(children[cur], key=lambda c: (sub_h[c], -c))
        return cur

    node_image: dict[KnNode, int] = {(): target.root()}
    for node in sorted(trunc.nodes, key=len):
        if not node:
            continue
        parent = node[:-1]
        (i, j) = node[-1]
        w = node_image[parent]
        cands = [c for c in children[w] if sub_h[c] == i]
        if cands:
            node_image[node] = cands[j % len(cands)]
        else:
            node_image[node] = descendant_of_height(w, i)

    source = as_frame(trunc)
    mapping = {trunc.node_world(s): node_image[s] for s in trunc.nodes}
    bm = BoundedMorphism.make(source, target, mapping, trunc)
    ok, witness = check_bounded_morphism(bm)
    if not ok:
        raise AssertionError(f"constructed morphism failed validation: {witness}")
    return bm
