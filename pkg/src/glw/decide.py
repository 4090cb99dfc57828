"""GL provability: Hilbert-style proof checking and a tableau decision
procedure with verified tree countermodels.

The decision procedure searches for a model of the negation over finite
transitive irreflexive trees, with the usual Loeb closure rule: a world
where []g fails spawns a child where g fails but []g holds, and all boxed
formulas true at the parent transfer down together with their bodies.  The
number of true boxes grows strictly along any branch, and the search is
run under iterative deepening on tree height up to the modal depth of the
input, which is the finite-model-property bound for GL.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .formula import (
    And,
    Bot,
    Box,
    Formula,
    Imp,
    Neg,
    Or,
    Var,
    desugar,
    k_axiom,
    lob_axiom,
    modal_depth,
    subformulas,
    variables,
)
from .kripke import (
    GuardExceeded,
    KripkeFrame,
    KripkeModel,
    enumerate_trees,
    model_check,
)

TAUT_ATOM_GUARD = 20
CLOSURE_GUARD = 64
BRUTE_VALUATION_GUARD_BITS = 22


# ---------------------------------------------------------------------------
# Proof objects.

@dataclass(frozen=True)
class Taut:
    pass


@dataclass(frozen=True)
class AxK:
    phi: Formula
    psi: Formula


@dataclass(frozen=True)
class AxLob:
    phi: Formula


@dataclass(frozen=True)
class MP:
    i: int  # line proving the antecedent
    j: int  # line proving the implication


@dataclass(frozen=True)
class Nec:
    i: int


Justification = Taut | AxK | AxLob | MP | Nec
ProofLine = tuple[Formula, Justification]


def _prop_atoms(g: Formula, acc: list[Formula], seen: set[Formula]) -> None:
    """Atoms for the propositional skeleton: variables and maximal boxed
    subformulas of a desugared formula."""
    if isinstance(g, (Var, Box)):
        if g not in seen:
            seen.add(g)
            acc.append(g)
    elif isinstance(g, Neg):
        _prop_atoms(g.arg, acc, seen)
    elif isinstance(g, (And, Or, Imp)):
        _prop_atoms(g.left, acc, seen)
        _prop_atoms(g.right, acc, seen)


def _prop_eval(g: Formula, assign: dict[Formula, bool]) -> bool:
    if isinstance(g, (Var, Box)):
        return assign[g]
    if isinstance(g, Bot):
        return False
    if isinstance(g, Neg):
        return not _prop_eval(g.arg, assign)
    if isinstance(g, Imp):
        return (not _prop_eval(g.left, assign)) or _prop_eval(g.right, assign)
    if isinstance(g, And):
        return _prop_eval(g.left, assign) and _prop_eval(g.right, assign)
    if isinstance(g, Or):
        return _prop_eval(g.left, assign) or _prop_eval(g.right, assign)
    raise TypeError(f"not a desugared formula: {g!r}")


def is_tautology(f: Formula, atom_guard: int = TAUT_ATOM_GUARD) -> bool:
    g = desugar(f)
    atoms: list[Formula] = []
    _prop_atoms(g, atoms, set())
    if len(atoms) > atom_guard:
        raise GuardExceeded(f"tautology check over {len(atoms)} atoms (guard {atom_guard})")
    for mask in range(1 << len(atoms)):
        assign = {a: bool((mask >> i) & 1) for i, a in enumerate(atoms)}
        if not _prop_eval(g, assign):
            return False
    return True


def check_proof(lines: list[ProofLine]) -> tuple[bool, dict | None]:
    """Validate a Hilbert-style GL proof; on failure report the first bad line."""
    for k, (formula, just) in enumerate(lines):
        if isinstance(just, Taut):
            try:
                ok = is_tautology(formula)
            except GuardExceeded as e:
                return False, {"line": k, "reason": str(e)}
            if not ok:
                return False, {"line": k, "reason": "not a propositional tautology"}
        elif isinstance(just, AxK):
            if formula != k_axiom(just.phi, just.psi):
                return False, {"line": k, "reason": "K schema mismatch"}
        elif isinstance(just, AxLob):
            if formula != lob_axiom(just.phi):
                return False, {"line": k, "reason": "Loeb schema mismatch"}
        elif isinstance(just, MP):
            if not (0 <= just.i < k and 0 <= just.j < k):
                return False, {"line": k, "reason": "MP index out of range"}
            imp = lines[just.j][0]
            if not (isinstance(imp, Imp) and imp.left == lines[just.i][0] and imp.right == formula):
                return False, {"line": k, "reason": "MP schema mismatch"}
        elif isinstance(just, Nec):
            if not (0 <= just.i < k):
                return False, {"line": k, "reason": "Nec index out of range"}
            if formula != Box(lines[just.i][0]):
                return False, {"line": k, "reason": "Nec schema mismatch"}
        else:
            return False, {"line": k, "reason": f"unknown rule {just!r}"}
    return True, None


# ---------------------------------------------------------------------------
# Decision procedure.

@dataclass(frozen=True)
class Verdict:
    valid: bool
    model: KripkeModel | None = None
    world: int | None = None


class _SearchNode:
    __slots__ = ("assign", "children")

    def __init__(self, assign: dict[Formula, bool], children: list["_SearchNode"]):
        self.assign = assign
        self.children = children


def _eval_over_atoms(g: Formula, assign: dict[Formula, bool]) -> bool:
    return _prop_eval(g, assign)


def decide(f: Formula, closure_guard: int = CLOSURE_GUARD) -> Verdict:
    """Valid iff GL proves f; otherwise a verified tree countermodel.

    The returned countermodel refutes f at the root, has height at most
    modal_depth(f), and is re-checked with model_check before returning.
    """
    neg = desugar(Neg(f))
    subs = subformulas(neg)
    if len(subs) > closure_guard:
        raise GuardExceeded(f"closure size {len(subs)} exceeds guard {closure_guard}")
    boxes = [s for s in subs if isinstance(s, Box)]
    vars_ = [Var(i) for i in variables(f)]
    memo: dict[tuple[frozenset[Formula], int], _SearchNode | None] = {}

    def search(musts: frozenset[Formula], budget: int) -> _SearchNode | None:
        key = (musts, budget)
        if key in memo:
            return memo[key]
        result = None
        max_false = 0 if budget == 0 else len(boxes)
        for k in range(max_false + 1):
            for false_boxes in itertools.combinations(boxes, k):
                fb = set(false_boxes)
                box_assign = {bx: bx not in fb for bx in boxes}
                for mask in range(1 << len(vars_)):
                    assign = dict(box_assign)
                    for i, v in enumerate(vars_):
                        assign[v] = bool((mask >> i) & 1)
                    if not all(_eval_over_atoms(m, assign) for m in musts):
                        continue
                    children = []
                    ok = True
                    for bx in false_boxes:
                        child_musts = {Neg(bx.arg), bx}
                        for other in boxes:
                            if assign[other]:
                                child_musts.add(other)
                                child_musts.add(other.arg)
                        child = search(frozenset(child_musts), budget - 1)
                        if child is None:
                            ok = False
                            break
                        children.append(child)
                    if ok:
                        result = _SearchNode(assign, children)
                        memo[key] = result
                        return result
        memo[key] = None
        return None

    root = None
    for h in range(modal_depth(f) + 1):
        root = search(frozenset([neg]), h)
        if root is not None:
            break
    if root is None:
        return Verdict(valid=True)

    # assemble the tree model, preorder ids, transitive closure
    worlds: list[int] = []
    edges: set[tuple[int, int]] = set()
    valuation: dict[int, set[int]] = {v.index: set() for v in vars_}
    counter = itertools.count()

    def emit(node: _SearchNode) -> list[int]:
        me = next(counter)
        worlds.append(me)
        for v in vars_:
            if node.assign[v]:
                valuation[v.index].add(me)
        below = [me]
        for child in node.children:
            sub = emit(child)
            for d in sub:
                edges.add((me, d))
            below.extend(sub)
        return below

    emit(root)
    frame = KripkeFrame(tuple(worlds), frozenset(edges))
    model = KripkeModel.make(frame, valuation)
    assert frame.is_tree() and frame.is_transitive() and frame.is_irreflexive()
    if 0 in model_check(model, f):
        raise AssertionError("internal error: countermodel fails to refute the formula")
    return Verdict(valid=False, model=model, world=0)


@dataclass(frozen=True)
class BruteResult:
    found: bool
    conclusive: bool
    bound: int
    model: KripkeModel | None = None
    world: int | None = None


def brute_force_decide(
    f: Formula,
    max_nodes: int,
    guard_bits: int = BRUTE_VALUATION_GUARD_BITS,
) -> BruteResult:
    """Exhaustive countermodel search over all trees with <= max_nodes worlds.

    A "no countermodel" answer is conclusive only when max_nodes reaches the
    finite-model-property bound 2^|subformulas(f)|; a found countermodel is
    always conclusive.
    """
    vs = variables(f)
    conclusive_bound = 2 ** len(subformulas(f))
    for frame in enumerate_trees(max_nodes):
        bits = len(frame.worlds) * len(vs)
        if bits > guard_bits:
            raise GuardExceeded(f"brute force valuation space 2^{bits} exceeds 2^{guard_bits}")
        worlds = list(frame.worlds)
        for mask in range(1 << bits):
            valuation = {
                v: {worlds[j] for j in range(len(worlds)) if (mask >> (i * len(worlds) + j)) & 1}
                for i, v in enumerate(vs)
            }
            model = KripkeModel.make(frame, valuation)
            truth = model_check(model, f)
            for w in worlds:
                if w not in truth:
                    return BruteResult(True, True, max_nodes, model, w)
    return BruteResult(False, max_nodes >= conclusive_bound, max_nodes)
