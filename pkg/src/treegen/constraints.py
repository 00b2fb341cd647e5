"""Incremental acceptance automaton for tree-constrained decoding.

Given an MR, the automaton accepts exactly the token sequences whose bracket
skeleton realizes that MR: every node is either realized under its MR parent
or elided in favour of a structurally identical twin, children of JOIN nodes
appear in MR order, other children in any order, and nothing is repeated or
invented.  Surface words never alter the automaton state, so hallucinated
words inside a span are not detectable here.

Because one output prefix can align to an MR in several ways (e.g. two
identical INFORM subtrees), the automaton tracks a *set* of alignment
states and a token is accepted if any state survives it.

Ellipsis bookkeeping: a node becomes committed to ellipsis as soon as it is
skipped (passed over by JOIN ordering at an Open, or missing at its parent's
Close).  A commitment is allowed only while every affected same-value group
keeps at least one uncommitted member, since elided nodes cannot stand in
for other elided nodes.  Committing at skip time rather than at Close makes
single-step acceptance coincide with "some valid completion exists", which
is what score masking needs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .trees import (
    CLOSE,
    EOS,
    AnnotatedNode,
    MrNode,
    MrTree,
    as_tree,
    is_open,
    linearize,
    open_label,
    open_token,
    structure_key,
    tokenize,
)

ROOT = -1  # sentinel parent id; the MR root (id 0) is its only child

MASK_VALUE = float("-inf")


class TokenRejected(ValueError):
    """No alignment state survives the token."""

    def __init__(self, token: str, position: int | None = None):
        self.token = token
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"token {token!r} rejected{where}: no surviving alignment")


class NoValidAlignment(ValueError):
    """A reference realization cannot be aligned to the MR at all."""


@dataclass(frozen=True)
class ConstraintTracker:
    """Immutable per-MR constraint structures.

    Node ids are assigned in depth-first discovery order, root = 0; the
    parent of the root is the ROOT sentinel.  ellipsis_options[x] is the
    set of nodes whose subtrees are structurally identical to x's (always
    including x itself).  Subtrees occupy contiguous id ranges, recorded
    in subtree_size.
    """

    nodes: tuple[MrNode, ...]
    parent_map: dict[int, int]
    children_map: dict[int, tuple[int, ...]]
    children_by_label: dict[tuple[int, str], tuple[int, ...]]
    label_index: dict[str, frozenset[int]]
    ellipsis_options: tuple[frozenset[int], ...]
    join_nodes: frozenset[int]
    subtree_size: tuple[int, ...]

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def subtree_ids(self, x: int) -> range:
        return range(x, x + self.subtree_size[x])


class AlignmentState(NamedTuple):
    """One way the consumed prefix can align to the MR.

    parent: id of the deepest currently-open node (ROOT before the first
    Open and after the final Close).  coverage: realized node ids.
    elided: ids committed to ellipsis.  The two sets are disjoint.
    """

    parent: int
    coverage: frozenset[int]
    elided: frozenset[int]


StateSet = frozenset[AlignmentState]


def _number_nodes(root: MrNode) -> tuple[list[MrNode], list[int], list[int]]:
    """DFS preorder numbering: returns (nodes, parents, subtree sizes)."""
    nodes: list[MrNode] = []
    parents: list[int] = []
    sizes: list[int] = []

    def visit(node: MrNode, parent: int) -> int:
        idx = len(nodes)
        nodes.append(node)
        parents.append(parent)
        sizes.append(1)
        for child in node.children:
            sizes[idx] += visit(child, idx)
        return sizes[idx]

    visit(root, ROOT)
    return nodes, parents, sizes


def compute_ellipsis_options(mr: MrTree | MrNode) -> dict[int, frozenset[int]]:
    """Group nodes whose subtrees are structurally identical.

    Two nodes may stand in for each other in ellipsis iff they have the
    same label, values, and children recursively; groups are global across
    the tree, not restricted to siblings.
    """
    nodes, _, _ = _number_nodes(as_tree(mr).root)
    by_key: dict[tuple, list[int]] = {}
    for idx, node in enumerate(nodes):
        by_key.setdefault(structure_key(node), []).append(idx)
    options: dict[int, frozenset[int]] = {}
    for members in by_key.values():
        group = frozenset(members)
        for idx in members:
            options[idx] = group
    return options


def build_constraints(mr: MrTree | MrNode) -> ConstraintTracker:
    """Precompute the constraint structures for one MR."""
    root = as_tree(mr).root
    nodes, parents, sizes = _number_nodes(root)
    n = len(nodes)

    children: dict[int, list[int]] = {i: [] for i in range(n)}
    children[ROOT] = [0]
    for idx in range(1, n):
        children[parents[idx]].append(idx)

    label_index: dict[str, set[int]] = {}
    by_label: dict[tuple[int, str], list[int]] = {}
    for idx, node in enumerate(nodes):
        label_index.setdefault(node.label, set()).add(idx)
    for parent, kids in children.items():
        for kid in kids:
            by_label.setdefault((parent, nodes[kid].label), []).append(kid)

    options = compute_ellipsis_options(MrTree(root))
    join_ids = frozenset(
        idx for idx, node in enumerate(nodes) if node.label == "JOIN"
    )
    return ConstraintTracker(
        nodes=tuple(nodes),
        parent_map={i: parents[i] for i in range(n)},
        children_map={p: tuple(kids) for p, kids in children.items()},
        children_by_label={k: tuple(v) for k, v in by_label.items()},
        label_index={lab: frozenset(ids) for lab, ids in label_index.items()},
        ellipsis_options=tuple(options[i] for i in range(n)),
        join_nodes=join_ids,
        subtree_size=tuple(sizes),
    )


def initial_states(tracker: ConstraintTracker) -> StateSet:
    return frozenset({AlignmentState(ROOT, frozenset(), frozenset())})


def _commit(
    tracker: ConstraintTracker, elided: frozenset[int], skipped: list[int]
) -> frozenset[int] | None:
    """Commit `skipped` to ellipsis; None if some group would be exhausted.

    A node can only be elided while a structurally identical twin remains
    uncommitted (elided nodes can't cover other nodes), so the whole batch
    is rejected if any member's group ends up fully committed.
    """
    if not skipped:
        return elided
    batch = elided.union(skipped)
    for node_id in skipped:
        if tracker.ellipsis_options[node_id].issubset(batch):
            return None
    return batch


def advance(
    tracker: ConstraintTracker, states: StateSet, token: str
) -> StateSet:
    """One automaton step; returns the surviving states (possibly empty)."""
    if token == EOS:
        return frozenset(
            s for s in states if s.parent == ROOT and 0 in s.coverage
        )

    if token == CLOSE:
        survivors = set()
        for state in states:
            if state.parent == ROOT:
                continue
            up = tracker.parent_map[state.parent]
            missing = [
                c
                for c in tracker.children_map[state.parent]
                if c not in state.coverage and c not in state.elided
            ]
            elided = _commit(tracker, state.elided, missing)
            if elided is None:
                continue
            survivors.add(AlignmentState(up, state.coverage, elided))
        return frozenset(survivors)

    if is_open(token):
        label = open_label(token)
        survivors = set()
        for state in states:
            for cand in tracker.children_by_label.get((state.parent, label), ()):
                if cand in state.coverage or cand in state.elided:
                    continue
                elided = state.elided
                if state.parent in tracker.join_nodes:
                    siblings = tracker.children_map[state.parent]
                    pos = siblings.index(cand)
                    # JOIN children appear in MR order: nothing after the
                    # candidate may be realized yet, and everything skipped
                    # before it must be elidable.
                    if any(c in state.coverage for c in siblings[pos + 1 :]):
                        continue
                    skipped = [
                        c
                        for c in siblings[:pos]
                        if c not in state.coverage and c not in state.elided
                    ]
                    elided = _commit(tracker, state.elided, skipped)
                    if elided is None:
                        continue
                survivors.add(
                    AlignmentState(cand, state.coverage | {cand}, elided)
                )
        return frozenset(survivors)

    # surface word
    return states


def accept_token(
    states: StateSet, token: str, tracker: ConstraintTracker
) -> StateSet:
    """Consume one token; raises TokenRejected if no state survives."""
    survivors = advance(tracker, states, token)
    if not survivors:
        raise TokenRejected(token)
    return survivors


def min_completion_tokens(tracker: ConstraintTracker, state: AlignmentState) -> int:
    """Tokens needed to finish from this state by the guaranteed route.

    Prices the closure that realizes every outstanding node with a bare
    Open/Close pair, closes the open chain bottom-up, and emits EOS; that
    sequence is legal from any reachable state (words are optional and
    full realization never needs an ellipsis commit).  Ellipsis can only
    make a completion shorter, so a hypothesis fits a token budget
    whenever this bound does.
    """
    if state.parent == ROOT and 0 not in state.coverage:
        return 1 + 2 * tracker.subtree_size[0]
    total = 1  # EOS
    node = state.parent
    while node != ROOT:
        total += 1  # its Close
        for child in tracker.children_map[node]:
            if child not in state.coverage and child not in state.elided:
                total += 2 * tracker.subtree_size[child]
        node = tracker.parent_map[node]
    return total


def valid_structural_tokens(
    tracker: ConstraintTracker, states: StateSet, budget: int | None = None
) -> set[str]:
    """The Open/Close/EOS tokens acceptable from this state set.

    Surface words are always acceptable and are not listed.  ``budget``
    is the number of tokens that may still follow the candidate; when
    given, tokens whose cheapest completion no longer fits are dropped
    (EOS needs nothing after it and is exempt).
    """
    out: set[str] = set()
    labels = {
        tracker.nodes[c].label
        for s in states
        for c in tracker.children_map[s.parent]
        if c not in s.coverage and c not in s.elided
    }
    candidates = [open_token(label) for label in labels]
    candidates.append(CLOSE)
    for tok in candidates:
        survivors = advance(tracker, states, tok)
        if not survivors:
            continue
        if budget is not None and (
            min(min_completion_tokens(tracker, s) for s in survivors) > budget
        ):
            continue
        out.add(tok)
    if advance(tracker, states, EOS):
        out.add(EOS)
    return out


def mask_scores(
    states: StateSet,
    tracker: ConstraintTracker,
    candidate_tokens: Sequence[str],
    scores: Sequence[float] | np.ndarray,
) -> np.ndarray:
    """Mask scores of structurally invalid candidates to -inf.

    Trial acceptance only: the state set is not modified.  Word candidates
    are never masked.
    """
    masked = np.array(scores, dtype=float, copy=True)
    valid = valid_structural_tokens(tracker, states)
    for i, token in enumerate(candidate_tokens):
        if token == CLOSE or token == EOS or is_open(token):
            if token not in valid:
                masked[i] = MASK_VALUE
    return masked


def _tokens_with_eos(output: str | Sequence[str]) -> list[str]:
    tokens = tokenize(output) if isinstance(output, str) else list(output)
    if not tokens or tokens[-1] != EOS:
        tokens.append(EOS)
    return tokens


def check_tree(mr: MrTree | MrNode, output: str | Sequence[str]) -> bool:
    """True iff the output's bracket skeleton realizes the MR exactly.

    Grouping and ellipsis are honoured; an EOS token is appended if the
    output does not already end with one.
    """
    return first_rejection(mr, output) is None


def first_rejection(
    mr: MrTree | MrNode, output: str | Sequence[str]
) -> int | None:
    """Index of the first rejected token, or None if fully accepted."""
    tracker = build_constraints(mr)
    states = initial_states(tracker)
    for pos, token in enumerate(_tokens_with_eos(output)):
        states = advance(tracker, states, token)
        if not states:
            return pos
    return None


def align_states(
    tracker: ConstraintTracker, output: str | Sequence[str]
) -> StateSet:
    """Run the automaton over a whole output; raises TokenRejected."""
    states = initial_states(tracker)
    for pos, token in enumerate(_tokens_with_eos(output)):
        states = advance(tracker, states, token)
        if not states:
            raise TokenRejected(token, pos)
    return states


class _LenientState(NamedTuple):
    """Alignment candidate for reference filtering.

    Coverage rules are relaxed (Closes always succeed, skipping is free)
    so references that drop arguments still align; mismatches counts leaf
    arguments whose annotated span differs from the MR value, used to pick
    the faithful alignment when a label is ambiguous.
    """

    parent: int
    coverage: frozenset[int]
    mismatches: int
    pending: tuple[str, ...]


def _lenient_step(
    tracker: ConstraintTracker, states: set[_LenientState], token: str
) -> set[_LenientState]:
    if token == EOS:
        return {s for s in states if s.parent == ROOT and 0 in s.coverage}

    if token == CLOSE:
        survivors = set()
        for state in states:
            if state.parent == ROOT:
                continue
            mismatches = state.mismatches
            node = tracker.nodes[state.parent]
            if node.is_leaf_argument():
                if " ".join(state.pending) != (node.value or ""):
                    mismatches += 1
            survivors.add(
                _LenientState(
                    tracker.parent_map[state.parent],
                    state.coverage,
                    mismatches,
                    (),
                )
            )
        return survivors

    if is_open(token):
        label = open_label(token)
        survivors = set()
        for state in states:
            for cand in tracker.children_by_label.get((state.parent, label), ()):
                if cand in state.coverage:
                    continue
                if state.parent in tracker.join_nodes:
                    siblings = tracker.children_map[state.parent]
                    pos = siblings.index(cand)
                    if any(c in state.coverage for c in siblings[pos + 1 :]):
                        continue
                survivors.add(
                    _LenientState(
                        cand, state.coverage | {cand}, state.mismatches, ()
                    )
                )
        return survivors

    # surface word: remember it while inside a leaf argument's span
    out = set()
    for state in states:
        if state.parent != ROOT and tracker.nodes[state.parent].is_leaf_argument():
            out.add(state._replace(pending=state.pending + (token,)))
        else:
            out.add(state)
    return out


def filter_to_reference(
    mr: MrTree | MrNode, reference: AnnotatedNode | str | Sequence[str]
) -> MrTree:
    """Drop MR nodes the reference does not express, preserving ellipsis.

    Nodes with no corresponding annotated span are removed, except that a
    node is preserved when a structurally identical twin is expressed (it
    was elided for redundancy, not dropped).  Alignment is computed with
    the automaton's matching rules, relaxed so omissions are allowed; among
    surviving alignments the one covering the most nodes with the fewest
    leaf-value mismatches wins.  Raises NoValidAlignment when the reference
    cannot be aligned at all (wrong labels, wrong JOIN order, repetition).
    """
    tree = as_tree(mr)
    tracker = build_constraints(tree)
    tokens = (
        linearize(reference)
        if isinstance(reference, AnnotatedNode)
        else list(tokenize(reference) if isinstance(reference, str) else reference)
    )
    states: set[_LenientState] = {_LenientState(ROOT, frozenset(), 0, ())}
    for pos, token in enumerate(_tokens_with_eos(tokens)):
        states = _lenient_step(tracker, states, token)
        if not states:
            raise NoValidAlignment(
                f"reference does not realize this MR: token {token!r} "
                f"at position {pos} cannot be aligned"
            )

    final = min(
        states,
        key=lambda s: (-len(s.coverage), s.mismatches, tuple(sorted(s.coverage))),
    )
    covered = set(final.coverage)
    keep = set(covered)

    changed = True
    while changed:
        changed = False
        for x in range(tracker.node_count):
            if x in keep:
                continue
            group = tracker.ellipsis_options[x]
            if len(group) > 1 and (group & keep) - {x}:
                # elided for redundancy: a twin is expressed or preserved
                keep.update(tracker.subtree_ids(x))
                changed = True

    def rebuild(x: int) -> MrNode:
        node = tracker.nodes[x]
        kids = tuple(
            rebuild(c) for c in tracker.children_map[x] if c in keep
        )
        return replace(node, children=kids)

    return MrTree(rebuild(0))
