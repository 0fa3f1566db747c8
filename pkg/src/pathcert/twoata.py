"""Two-way alternating parity tree automata and membership testing.

An automaton walks over the unfolding of a labeled regular graph; its
transitions are positive boolean formulas over pairs of a direction
(-1 up, 0 stay, 1..k down) and a state.  Membership is decided by a
parity game between a Verifier (choosing at disjunctions) and a Refuter
(choosing at conjunctions) played on the finite graph, solved with a
recursive attractor decomposition.
"""

import sys
from dataclasses import dataclass

from .encoding import STAR, STAR_NODE


# ---------------------------------------------------------------------------
# Positive boolean formulas
# ---------------------------------------------------------------------------

class _Const:
    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


TRUE = _Const("true")
FALSE = _Const("false")


class Var:
    """A (direction, state) variable; direction -1 moves to the parent,
    0 stays, i >= 1 moves to the i-th child.

    Formulas are used as dict keys in large membership games, so each
    node caches its hash at construction time."""

    __slots__ = ("direction", "state", "_hash")

    def __init__(self, direction, state):
        self.direction = direction
        self.state = state
        self._hash = hash((Var, direction, state))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return (isinstance(other, Var) and self.direction == other.direction
                and self.state == other.state)

    def __repr__(self):
        return "Var(direction=%r, state=%r)" % (self.direction, self.state)


class And:
    __slots__ = ("children", "_hash")

    def __init__(self, children):
        self.children = children
        self._hash = hash((And, children))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, And) and self.children == other.children

    def __repr__(self):
        return "And(children=%r)" % (self.children,)


class Or:
    __slots__ = ("children", "_hash")

    def __init__(self, children):
        self.children = children
        self._hash = hash((Or, children))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, Or) and self.children == other.children

    def __repr__(self):
        return "Or(children=%r)" % (self.children,)


def conj(parts):
    """Conjunction with flattening and constant simplification."""
    out = []
    for p in parts:
        if p is TRUE:
            continue
        if p is FALSE:
            return FALSE
        if isinstance(p, And):
            out.extend(p.children)
        else:
            out.append(p)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(parts):
    """Disjunction with flattening and constant simplification."""
    out = []
    for p in parts:
        if p is FALSE:
            continue
        if p is TRUE:
            return TRUE
        if isinstance(p, Or):
            out.extend(p.children)
        else:
            out.append(p)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def dualize(f):
    if f is TRUE:
        return FALSE
    if f is FALSE:
        return TRUE
    if isinstance(f, Var):
        return f
    if isinstance(f, And):
        return disj(dualize(c) for c in f.children)
    return conj(dualize(c) for c in f.children)


# ---------------------------------------------------------------------------
# Automata
# ---------------------------------------------------------------------------

class TwoATA:
    """States are arbitrary hashables; delta is a callable
    (state, symbol) -> formula, evaluated lazily and memoized.

    Acceptance: on every infinite branch of a run, the least priority
    seen infinitely often is even.  priority maps states to integers;
    max_priority bounds them (used to pick neutral priorities for
    formula positions)."""

    def __init__(self, initial, delta, priority, max_priority):
        self.initial = initial
        self._delta = delta
        self._memo = {}
        self.priority = priority
        self.max_priority = max_priority

    @classmethod
    def from_chain(cls, initial, delta, chain):
        """chain is the inclusion-ascending tuple (G_1, ..., G_m); the
        priority of a state is the least i with q in G_i."""
        sets = [frozenset(g) for g in chain]
        for a, b in zip(sets, sets[1:]):
            if not a <= b:
                raise ValueError("parity chain must be ascending")

        def priority(q):
            for i, g in enumerate(sets, start=1):
                if q in g:
                    return i
            return len(sets)

        return cls(initial, delta, priority, len(sets))

    def delta(self, q, sym):
        key = (q, sym)
        if key not in self._memo:
            try:
                self._memo[key] = self._delta(q, sym)
            except Exception as e:
                raise type(e)("transition failed for state %r on %r: %s"
                              % (q, sym, e)) from e
        return self._memo[key]


def complement(a):
    """Dualize every transition and shift priorities by one."""
    return TwoATA(a.initial,
                  lambda q, sym: dualize(a.delta(q, sym)),
                  lambda q: a.priority(q) + 1,
                  a.max_priority + 1)


def _combine(a, b, mode):
    init = ("init", mode)

    def wrap(side, f):
        if f is TRUE or f is FALSE:
            return f
        if isinstance(f, Var):
            return Var(f.direction, (side, f.state))
        if isinstance(f, And):
            return conj(wrap(side, c) for c in f.children)
        return disj(wrap(side, c) for c in f.children)

    def delta(q, sym):
        if q == init:
            left = wrap(0, a.delta(a.initial, sym))
            right = wrap(1, b.delta(b.initial, sym))
            return conj([left, right]) if mode == "and" \
                else disj([left, right])
        side, inner = q
        base = (a if side == 0 else b).delta(inner, sym)
        return wrap(side, base)

    top = max(a.max_priority, b.max_priority) + 2
    neutral = top - (top % 2)  # even: the initial state is visited once

    def priority(q):
        if q == init:
            return neutral
        side, inner = q
        return (a if side == 0 else b).priority(inner)

    return TwoATA(init, delta, priority, neutral)


def conjoin(a, b):
    """Automaton accepting the intersection of both languages."""
    return _combine(a, b, "and")


def disjoin(a, b):
    """Automaton accepting the union of both languages."""
    return _combine(a, b, "or")


# ---------------------------------------------------------------------------
# Membership game
# ---------------------------------------------------------------------------

VERIFIER = 0
REFUTER = 1


@dataclass
class Position:
    owner: int
    priority: int
    moves: list


class MembershipGame:
    """The finite quotient game of automaton vs regular graph.

    Positions are ("state", node, q) and ("form", node, formula).
    Verifier owns disjunctions, Refuter owns conjunctions; constants are
    dead ends losing for their owner; an upward move from the root (or
    from the placeholder node) has no edge and loses for Verifier.

    The quotient identifies all unfolding copies of a graph node; on
    trees without back edges it is exact, with back edges it is the same
    approximation used throughout this package."""

    def __init__(self, a, tree):
        self.automaton = a
        self.tree = tree
        self.positions = {}
        self.initial = ("state", tree.root, a.initial)
        self.neutral = a.max_priority + 1
        self._build()

    def _label(self, node):
        if node == STAR_NODE:
            return STAR
        return self.tree.label_of(node)

    def _build(self):
        queue = [self.initial]
        while queue:
            pos = queue.pop(0)
            if pos in self.positions:
                continue
            kind = pos[0]
            if kind == "state":
                _, node, q = pos
                f = self.automaton.delta(q, self._label(node))
                target = ("form", node, f)
                self.positions[pos] = Position(
                    VERIFIER, self.automaton.priority(q), [target])
                queue.append(target)
                continue
            _, node, f = pos
            if f is TRUE:
                self.positions[pos] = Position(REFUTER, self.neutral, [])
            elif f is FALSE:
                self.positions[pos] = Position(VERIFIER, self.neutral, [])
            elif isinstance(f, Var):
                tgt = self._move(node, f.direction)
                if tgt is None:
                    self.positions[pos] = Position(VERIFIER, self.neutral,
                                                   [])
                else:
                    nxt = ("state", tgt, f.state)
                    self.positions[pos] = Position(VERIFIER, self.neutral,
                                                   [nxt])
                    queue.append(nxt)
            else:
                owner = VERIFIER if isinstance(f, Or) else REFUTER
                moves = [("form", node, c) for c in f.children]
                self.positions[pos] = Position(owner, self.neutral, moves)
                queue.extend(moves)

    def _move(self, node, direction):
        if direction == 0:
            return node
        if direction == -1:
            if node == STAR_NODE:
                return None
            return self.tree.parent.get(node) or None
        if node == STAR_NODE:
            return STAR_NODE
        slots = self.tree.successors(node)
        if direction > len(slots):
            raise ValueError("direction %d exceeds arity %d"
                             % (direction, len(slots)))
        return slots[direction - 1]

    def dump(self):
        lines = []
        for pos in sorted(self.positions, key=repr):
            p = self.positions[pos]
            owner = "V" if p.owner == VERIFIER else "R"
            lines.append("pos %r owner=%s priority=%d" %
                         (pos, owner, p.priority))
            for m in p.moves:
                lines.append("  -> %r" % (m,))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Parity game solving
# ---------------------------------------------------------------------------

def solve_parity_game(positions):
    """Solve a min-parity game (least priority seen infinitely often;
    even favors player 0).  positions maps ids to Position.  Dead ends
    lose for their owner.  Returns (win0, win1, strategy0, strategy1)."""
    graph = {}
    for v, p in positions.items():
        if p.moves:
            graph[v] = (p.owner, p.priority, list(p.moves))
        else:
            # encode the dead end as a self-loop whose priority makes
            # the owner lose
            bad = 1 if p.owner == VERIFIER else 0
            graph[v] = (p.owner, bad, [v])
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * len(graph) + 100))
    try:
        w0, w1, s0, s1 = _zielonka(graph)
    finally:
        sys.setrecursionlimit(old)
    return w0, w1, s0, s1


def _attractor(graph, nodes, target, player):
    """Attractor of target for player within nodes, with strategy."""
    attr = set(target)
    strategy = {}
    preds = {}
    counts = {}
    for v in nodes:
        owner, _, moves = graph[v]
        live = [m for m in moves if m in nodes]
        counts[v] = len(live)
        for m in live:
            preds.setdefault(m, []).append(v)
    queue = list(target)
    while queue:
        v = queue.pop()
        for u in preds.get(v, ()):
            if u in attr:
                continue
            owner, _, moves = graph[u]
            if owner == player:
                attr.add(u)
                strategy[u] = v
                queue.append(u)
            else:
                counts[u] -= 1
                if counts[u] == 0:
                    attr.add(u)
                    queue.append(u)
    return attr, strategy


def _zielonka(graph, nodes=None):
    if nodes is None:
        nodes = set(graph)
    if not nodes:
        return set(), set(), {}, {}
    p = min(graph[v][1] for v in nodes)
    player = p % 2
    target = {v for v in nodes if graph[v][1] == p}
    attr, attr_strat = _attractor(graph, nodes, target, player)
    w0, w1, s0, s1 = _zielonka(graph, nodes - attr)
    wins = (w0, w1)
    strats = (s0, s1)
    if not wins[1 - player]:
        strategy = dict(strats[player])
        strategy.update(attr_strat)
        for v in target:
            owner, _, moves = graph[v]
            if owner == player and v not in strategy:
                live = [m for m in moves if m in nodes]
                strategy[v] = live[0]
        if player == 0:
            return set(nodes), set(), strategy, {}
        return set(), set(nodes), {}, strategy
    opp_attr, opp_strat = _attractor(graph, nodes, wins[1 - player],
                                     1 - player)
    w0b, w1b, s0b, s1b = _zielonka(graph, nodes - opp_attr)
    if player == 0:
        win1 = w1b | opp_attr
        strat1 = dict(s1)
        strat1.update(opp_strat)
        strat1.update(s1b)
        return w0b, win1, s0b, strat1
    win0 = w0b | opp_attr
    strat0 = dict(s0)
    strat0.update(opp_strat)
    strat0.update(s0b)
    return win0, w1b, strat0, s1b


@dataclass
class MembershipResult:
    accepted: bool
    game: MembershipGame
    winning: set       # Verifier's winning positions
    strategy: dict     # Verifier's positional strategy on them

    def __bool__(self):
        return self.accepted


def membership(a, tree):
    """Whether the automaton accepts the tree represented by the graph,
    together with the solved game as a certificate."""
    game = MembershipGame(a, tree)
    w0, w1, s0, s1 = solve_parity_game(game.positions)
    return MembershipResult(game.initial in w0, game, w0, s0)
