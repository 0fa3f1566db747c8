"""Constructions of the four tree automata and their product.

Given a knowledge base, a query, and the alphabet parameters (element
pool and outdegree bound), this module builds two-way alternating parity
automata over labeled regular trees:

- a shape automaton accepting exactly the consistent trees whose
  represented decomposition is canonical,
- an assertion automaton checking the ABox at the root bag,
- an axiom automaton checking the TBox on the represented structure,
- a query automaton accepting iff the represented structure matches a
  positive existential regular path query,

and their product, which accepts exactly the trees certifying
non-entailment of the query.

All transition functions are lazy callables; states are plain tuples so
they memoize cheaply.
"""

import itertools
from dataclasses import dataclass

from . import dlcore, querycore
from .dlcore import (Top, Bot, Atom, Not, And as CAnd, Or as COr,
                     AtMost, AtLeast, nnf, negate, cluster,
                     is_root_cluster)
from .encoding import STAR, _overlap_agrees
from .twoata import TRUE, FALSE, Var, conj, disj, TwoATA, complement, conjoin


@dataclass(frozen=True)
class Alphabet:
    """Parameters that determine the symbol alphabet: the fixed element
    pool (of size 2K) and the outdegree bound of input trees."""
    pool: tuple
    arity: int

    def __post_init__(self):
        if len(self.pool) % 2 != 0 or not self.pool:
            raise ValueError("pool size must be a positive even number")
        if self.arity < 1:
            raise ValueError("arity must be at least 1")

    @property
    def width_bound(self):
        return len(self.pool) // 2


def alphabet_of(tree):
    """The alphabet parameters of a labeled regular tree."""
    return Alphabet(tuple(tree.pool), tree.arity)


# ---------------------------------------------------------------------------
# Small combinatorial helpers
# ---------------------------------------------------------------------------

def compositions(n, parts):
    """Tuples of `parts` non-negative integers summing to n, in
    lexicographic order."""
    if parts == 0:
        if n == 0:
            yield ()
        return
    if parts == 1:
        yield (n,)
        return
    for head in range(n + 1):
        for rest in compositions(n - head, parts - 1):
            yield (head,) + rest


def direction_subsets(n, k):
    """n-element subsets of the child directions 1..k; for n <= 0 the
    single empty choice."""
    if n <= 0:
        yield ()
        return
    if n > k:
        return
    yield from itertools.combinations(range(1, k + 1), n)


def _reachable_clusters(i, r, d):
    """Representatives of the r-clusters reachable from d, own cluster
    first (represented by d itself and flagged as the origin)."""
    own = cluster(i, r, d)
    reps = [(d, True)]
    seen = {frozenset(own)}
    for e in sorted(i.successors(r, d)):
        c = frozenset(cluster(i, r, e))
        if c in seen:
            continue
        seen.add(c)
        reps.append((min(c), False))
    return reps


# ---------------------------------------------------------------------------
# ABox automaton
# ---------------------------------------------------------------------------

def build_a_abox(kb, alphabet):
    """Single-state automaton accepting iff the root bag satisfies every
    ABox assertion."""

    def delta(q, sym):
        if sym is STAR:
            return FALSE
        i = sym.interpretation
        for a in kb.abox:
            if isinstance(a, dlcore.ConceptAssertion):
                if a.individual not in i.concept_members(a.concept):
                    return FALSE
            else:
                if (a.subject, a.object) not in i.role_pairs(a.role):
                    return FALSE
        return TRUE

    return TwoATA("q0", delta, lambda q: 2, 2)


# ---------------------------------------------------------------------------
# TBox automaton
# ---------------------------------------------------------------------------

def tbox_concept(kb):
    """The TBox as a single concept in negation normal form that every
    element must satisfy."""
    parts = [nnf(COr(Not(c), d)) for (c, d) in kb.tbox]
    if not parts:
        return Top()
    out = parts[0]
    for p in parts[1:]:
        out = CAnd(out, p)
    return out


GEQ = ">="
LEQ = "<="


def build_a_tbox(kb, alphabet):
    """Automaton accepting (canonical) trees whose represented structure
    satisfies every TBox axiom.

    The outer loop visits every bag element with the obligation to
    satisfy the global axiom concept; number restrictions navigate to
    the element's freshness node and count successors along the two
    admissible path shapes, distributing the required count over
    reachable clusters, local cluster members, and child subtrees.
    At-most restrictions run the systematic dual: refute every way of
    finding one successor too many."""
    k = alphabet.arity
    transitive = kb.signature.transitive
    c_t = tbox_concept(kb)
    limit = dlcore.max_number(kb.tbox) + 1

    def check_overflow(c):
        for s in dlcore.subconcepts(c):
            if isinstance(s, (AtMost, AtLeast)) and s.n > limit:
                raise ValueError("number %d exceeds the declared maximum %d"
                                 % (s.n, limit))
    check_overflow(c_t)

    def concept_state(c, d):
        return ("c", c, d)

    def qstar_formula_geq(i, n, r, dcpt, d):
        reps = _reachable_clusters(i, r, d)
        ell = len(reps)
        out = []
        for nvec in compositions(n, ell):
            for xset in _subsets(range(ell)):
                parts = []
                for idx, (rep, orig) in enumerate(reps):
                    kind = "qA" if idx in xset else "qB"
                    parts.append(Var(0, (kind, GEQ, nvec[idx], r, dcpt,
                                         rep, orig)))
                out.append(conj(parts))
        return disj(out)

    def qstar_formula_leq(i, n, r, dcpt, d):
        reps = _reachable_clusters(i, r, d)
        ell = len(reps)
        out = []
        for nvec in compositions(n + 1, ell):
            for xset in _subsets(range(ell)):
                parts = []
                for idx, (rep, orig) in enumerate(reps):
                    kind = "qA" if idx in xset else "qB"
                    parts.append(Var(0, (kind, LEQ, nvec[idx], r, dcpt,
                                         rep, orig)))
                out.append(disj(parts))
        return conj(out)

    def local_eligible(i, r, d, orig):
        members = cluster(i, r, d)
        if orig:
            return {e for e in members if (d, e) in i.role_pairs(r)}
        return set(members)

    def delta(q, sym):
        if q == "q0":
            if sym is STAR:
                return TRUE
            i = sym.interpretation
            return conj([Var(j, "q0") for j in range(1, k + 1)] +
                        [Var(0, concept_state(c_t, d))
                         for d in sorted(i.domain)])

        kind = q[0]

        if kind == "c":
            _, c, d = q
            if sym is STAR:
                # only the at-most sweep ever reaches padding children,
                # where there is nothing to count
                return TRUE if isinstance(c, AtMost) else FALSE
            i = sym.interpretation
            if isinstance(c, Top):
                return TRUE
            if isinstance(c, Bot):
                return FALSE
            if isinstance(c, Atom):
                return TRUE if d in i.concept_members(c.name) else FALSE
            if isinstance(c, Not):
                return TRUE if d not in i.concept_members(c.arg.name) \
                    else FALSE
            if isinstance(c, COr):
                return disj([Var(0, concept_state(c.left, d)),
                             Var(0, concept_state(c.right, d))])
            if isinstance(c, CAnd):
                return conj([Var(0, concept_state(c.left, d)),
                             Var(0, concept_state(c.right, d))])
            if isinstance(c, AtLeast):
                if c.n == 0:
                    return TRUE
                if d not in i.domain:
                    return FALSE
                r = c.role
                star = Var(0, ("qstar", GEQ, c.n, r, c.arg, d))
                if r in transitive:
                    # navigate anywhere in the element's occurrence
                    # subtree until it is role-fresh, then count
                    here = conj([Var(0, ("Fr", r, d)), star])
                    moves = [Var(j, q) for j in range(1, k + 1)]
                    moves.append(Var(-1, q))
                else:
                    here = conj([Var(0, ("F", d)), star])
                    moves = [Var(-1, q)]
                return disj([here] + moves)
            if isinstance(c, AtMost):
                if d not in i.domain:
                    return TRUE
                r = c.role
                star = Var(0, ("qstar", LEQ, c.n, r, c.arg, d))
                if r in transitive:
                    # universal sweep: wherever the element is
                    # role-fresh the bound must check out; an element
                    # that is role-fresh nowhere has no successors
                    here = disj([Var(0, ("Frb", r, d)), star])
                    moves = [Var(j, q) for j in range(1, k + 1)]
                    moves.append(disj([Var(0, ("isroot",)), Var(-1, q)]))
                    return conj([here] + moves)
                # non-transitive: the freshness node is the unique top
                # of the occurrence subtree, reachable going up
                here = conj([Var(0, ("F", d)), star])
                return disj([here, Var(-1, q)])
            raise TypeError("not a normalized concept: %r" % (c,))

        if kind == "isroot":
            if sym is STAR:
                return FALSE
            return TRUE if sym.role is None else FALSE

        # freshness tests -----------------------------------------------
        if kind == "F":          # d is fresh here (non-transitive case)
            _, d = q
            if sym is STAR:
                return FALSE
            if sym.role is None:
                return TRUE
            return Var(-1, ("Fp", d))
        if kind == "Fp":         # parent check: d absent from parent bag
            _, d = q
            if sym is STAR:
                return TRUE
            return TRUE if d not in sym.interpretation.domain else FALSE
        if kind == "Fb":         # d is NOT fresh here
            _, d = q
            if sym is STAR:
                return TRUE
            if sym.role is None:
                return FALSE
            return Var(-1, ("Fbp", d))
        if kind == "Fbp":
            _, d = q
            if sym is STAR:
                return FALSE
            return TRUE if d in sym.interpretation.domain else FALSE

        if kind == "Fr":         # d is r-fresh here
            _, r, d = q
            if sym is STAR:
                return FALSE
            if sym.role is None:
                return TRUE
            if sym.role != r:
                return FALSE
            return Var(-1, ("Frp", r, d))
        if kind == "Frp":        # parent check for r-freshness
            _, r, d = q
            if sym is STAR:
                return TRUE
            if sym.role is not None and sym.role != r:
                return TRUE
            return TRUE if d not in sym.interpretation.domain else FALSE
        if kind == "Frb":        # d is NOT r-fresh here
            _, r, d = q
            if sym is STAR:
                return TRUE
            if sym.role is None:
                return FALSE
            if sym.role != r:
                return TRUE
            return Var(-1, ("Frbp", r, d))
        if kind == "Frbp":
            _, r, d = q
            if sym is STAR:
                return FALSE
            if sym.role is not None and sym.role != r:
                return FALSE
            return TRUE if d in sym.interpretation.domain else FALSE

        # counting ------------------------------------------------------
        cmp_ = q[1]

        if kind == "qstar":
            _, _, n, r, dcpt, d = q
            if sym is STAR:
                return FALSE if cmp_ == GEQ else TRUE
            i = sym.interpretation
            if r in transitive:
                if cmp_ == GEQ:
                    return qstar_formula_geq(i, n, r, dcpt, d)
                return qstar_formula_leq(i, n, r, dcpt, d)
            # non-transitive counting: successors live in the root bag
            # and in the child bags of the freshness node
            sign = "pos" if cmp_ == GEQ else "neg"
            child = ("qnt", sign, r, dcpt, d)
            if sym.role is not None:
                if cmp_ == GEQ:
                    return disj([conj([Var(j, child) for j in xs])
                                 for xs in direction_subsets(n, k)])
                return conj([disj([Var(j, child) for j in xs])
                             for xs in direction_subsets(n + 1, k)])
            local = sorted(e for e in i.domain
                           if (d, e) in i.role_pairs(r))
            out = []
            for m in range(len(local) + 1):
                for chosen in itertools.combinations(local, m):
                    if cmp_ == GEQ:
                        branch = [Var(0, concept_state(dcpt, e))
                                  for e in chosen]
                        rest = disj([conj([Var(j, child) for j in xs])
                                     for xs in direction_subsets(n - m, k)])
                        out.append(conj(branch + [rest]))
                    else:
                        branch = [Var(0, concept_state(negate(dcpt), e))
                                  for e in chosen]
                        rest = conj([disj([Var(j, child) for j in xs])
                                     for xs in
                                     direction_subsets(n + 1 - m, k)])
                        out.append(disj(branch + [rest]))
            return disj(out) if cmp_ == GEQ else conj(out)

        if kind == "qnt":
            _, sign, r, dcpt, d = q
            if sym is STAR:
                return FALSE if sign == "pos" else TRUE
            i = sym.interpretation
            fresh_targets = sorted(e for e in i.domain if e != d
                                   and (d, e) in i.role_pairs(r))
            if sym.role != r or not fresh_targets:
                return FALSE if sign == "pos" else TRUE
            if sign == "pos":
                return disj([Var(0, concept_state(dcpt, e))
                             for e in fresh_targets])
            return conj([Var(0, concept_state(negate(dcpt), e))
                         for e in fresh_targets])

        if kind == "qA":
            _, _, n, r, dcpt, d, orig = q
            if n == 0:
                # finding zero successors is trivial (and cannot be
                # refuted), independent of freshness
                return TRUE if cmp_ == GEQ else FALSE
            if sym is STAR:
                return FALSE if cmp_ == GEQ else TRUE
            down = ("qdown", cmp_, n, r, dcpt, d, orig)
            if cmp_ == GEQ:
                return conj([Var(0, ("Fr", r, d)), Var(0, down)])
            return disj([Var(0, ("Frb", r, d)), Var(0, down)])

        if kind == "qB":
            _, _, n, r, dcpt, d, orig = q
            if n == 0:
                return TRUE if cmp_ == GEQ else FALSE
            if sym is STAR:
                return FALSE if cmp_ == GEQ else TRUE
            up = ("qup", cmp_, n, r, dcpt, d, orig)
            if cmp_ == GEQ:
                return conj([Var(0, ("Frb", r, d)), Var(-1, up)])
            return disj([Var(0, ("Fr", r, d)), Var(-1, up)])

        if kind == "qup":
            _, _, n, r, dcpt, d, orig = q
            if sym is STAR:
                return FALSE if cmp_ == GEQ else TRUE
            if d not in sym.interpretation.domain:
                return FALSE if cmp_ == GEQ else TRUE
            a = Var(0, ("qA", cmp_, n, r, dcpt, d, orig))
            b = Var(0, ("qB", cmp_, n, r, dcpt, d, orig))
            return disj([a, b]) if cmp_ == GEQ else conj([a, b])

        if kind == "qdown":
            _, _, n, r, dcpt, d, orig = q
            if sym is STAR:
                return FALSE if cmp_ == GEQ else TRUE
            out = []
            for mvec in compositions(n, k + 1):
                loc = Var(0, ("ploc", cmp_, mvec[0], r, dcpt, d, orig))
                succs = [Var(j, ("psucc", cmp_, mvec[j], r, dcpt, d))
                         for j in range(1, k + 1)]
                if cmp_ == GEQ:
                    out.append(conj([loc] + succs))
                else:
                    out.append(disj([loc] + succs))
            return disj(out) if cmp_ == GEQ else conj(out)

        if kind == "ploc":
            _, _, n, r, dcpt, d, orig = q
            if sym is STAR:
                return FALSE if cmp_ == GEQ else TRUE
            i = sym.interpretation
            if d not in i.domain:
                return FALSE if cmp_ == GEQ else TRUE
            eligible = sorted(local_eligible(i, r, d, orig))
            if cmp_ == GEQ:
                return disj([conj([Var(0, concept_state(dcpt, e))
                                   for e in chosen])
                             for chosen in
                             itertools.combinations(eligible, n)])
            return conj([disj([Var(0, concept_state(negate(dcpt), e))
                               for e in chosen])
                         for chosen in itertools.combinations(eligible, n)])

        if kind == "psucc":
            _, _, n, r, dcpt, d = q
            if cmp_ == GEQ and n == 0:
                return TRUE
            if cmp_ == LEQ and n == 0:
                return FALSE
            if sym is STAR:
                return FALSE if cmp_ == GEQ else TRUE
            i = sym.interpretation
            in_root = (d in i.domain
                       and is_root_cluster(i, r, cluster(i, r, d)))
            if sym.role != r or not in_root:
                return FALSE if cmp_ == GEQ else TRUE
            reps = [(rep, orig) for rep, orig in
                    _reachable_clusters(i, r, d) if not orig]
            ell = len(reps)
            if cmp_ == GEQ:
                out = []
                for nvec in compositions(n, ell):
                    out.append(conj([Var(0, ("qA", GEQ, nvec[idx], r, dcpt,
                                             rep, False))
                                     for idx, (rep, _) in enumerate(reps)]))
                return disj(out)
            out = []
            for nvec in compositions(n, ell):
                # exact dual of the at-least continuation: only
                # downward (type A) counting below a successor node
                out.append(disj([Var(0, ("qA", LEQ, nvec[idx], r, dcpt,
                                         rep, False))
                                 for idx, (rep, _) in enumerate(reps)]))
            return conj(out)

        raise ValueError("unknown state %r" % (q,))

    def priority(q):
        if q == "q0":
            return 2
        kind = q[0]
        if kind == "c":
            # the at-most sweep may run forever (accepting); the
            # at-least navigation must terminate
            return 2 if isinstance(q[1], AtMost) else 3
        if kind == "qnt":
            return 2 if q[1] == "neg" else 3
        if kind in ("qstar", "qA", "qB", "qup", "qdown", "ploc",
                    "psucc"):
            cmp_ = q[1]
            if cmp_ == LEQ:
                return 2
            if kind == "qstar":
                return 2
            if kind == "ploc" and q[2] >= 1:
                return 2
            return 3
        return 3

    return TwoATA("q0", delta, priority, 3)


def _subsets(items):
    items = list(items)
    for n in range(len(items) + 1):
        yield from (frozenset(c) for c in itertools.combinations(items, n))


# ---------------------------------------------------------------------------
# Shape automaton
# ---------------------------------------------------------------------------

def build_a_can(kb, pool, k):
    """Automaton accepting exactly the consistent trees that represent a
    canonical decomposition.

    A context state carries the parent's label, the parent's fresh
    elements, and the grandparent's role tag, which together determine
    every parent-child condition locally.  Sibling uniqueness of
    role-switching children is enforced with auxiliary per-(element,
    role) states sent to all pairs of children."""
    pool = tuple(pool)
    width_bound = len(pool) // 2
    transitive = set(kb.signature.transitive)
    roles = set(kb.signature.role_names)

    def bag_ok(i):
        return set(i.domain) <= set(pool) and len(i.domain) <= width_bound

    def parent_role_fresh(ctx, s):
        """F_s of the parent node, from the carried context."""
        plabel, pfresh, gtag = ctx
        if plabel.role is None:
            return frozenset(plabel.interpretation.domain)
        if plabel.role != s:
            return frozenset()
        if gtag is None or gtag == s:
            return pfresh
        return frozenset(plabel.interpretation.domain)

    def c2_ok(iw, iv, s, pfresh, fresh_v):
        if len(iv.domain) != 2:
            return False
        new = set(iv.domain) & fresh_v
        old = set(iv.domain) - new
        if len(new) != 1 or len(old) != 1:
            return False
        (e,) = new
        (d,) = old
        if d not in pfresh:
            return False
        pairs = iv.role_pairs(s)
        return (d, e) in pairs and not (pairs - {(d, e), (d, d)})

    def c3_shape(iw, iv, s, pfresh):
        shared = set(iw.domain) & set(iv.domain)
        if len(shared) != 1:
            return False
        (d,) = shared
        if d not in pfresh:
            return False
        return is_root_cluster(iv, s, cluster(iv, s, d))

    def c4_ok(iw, iv, s, fr_w, fresh_v):
        seen = set()
        for x in sorted(iv.domain):
            a = frozenset(cluster(iv, s, x))
            if a in seen:
                continue
            seen.add(a)
            if not is_root_cluster(iv, s, a):
                continue
            if not a <= fr_w or not a <= set(iw.domain):
                continue
            if frozenset(cluster(iw, s, min(a))) != a:
                continue
            if any((d, e) in iw.role_pairs(s) and e not in iv.domain
                   for d in a for e in iw.domain):
                continue
            bad = False
            for (d, e) in iv.role_pairs(s):
                if d in a or d in fresh_v:
                    continue
                if e in fresh_v:
                    bad = True
                    break
            if not bad:
                return True
        return False

    def consistency_ok(iw, iv, s):
        if s is None or s not in roles:
            return False
        if not bag_ok(iv):
            return False
        return _overlap_agrees(iw, iv)

    def c1_ok(iv, s, fresh_v):
        for s1, pairs in iv.roles.items():
            for (d, e) in pairs:
                if s1 == s:
                    continue
                if d == e and (s1 in transitive or d not in fresh_v):
                    continue
                return False
        return True

    def child_obligations(label, fresh, gtag):
        """Context states and sibling-uniqueness constraints sent to the
        children of the node carrying this label."""
        ctx = (label, frozenset(fresh), gtag)
        parts = [Var(j, ("c", ctx)) for j in range(1, k + 1)]
        tag = label.role
        for d in sorted(fresh):
            for s in sorted(transitive):
                if tag == s:
                    continue  # same-tag children continue clusters
                nm = ("nm", d, s, ctx)
                for i in range(1, k + 1):
                    for j in range(i + 1, k + 1):
                        parts.append(disj([Var(i, nm), Var(j, nm)]))
        return parts

    def delta(q, sym):
        if q == "q0":
            if sym is STAR:
                return FALSE
            if sym.role is not None or not bag_ok(sym.interpretation):
                return FALSE
            dom = frozenset(sym.interpretation.domain)
            return conj(child_obligations(sym, dom, None))

        kind = q[0]
        if kind == "c":
            if sym is STAR:
                return TRUE
            _, ctx = q
            plabel, pfresh, gtag = ctx
            iw = plabel.interpretation
            iv = sym.interpretation
            s = sym.role
            if not consistency_ok(iw, iv, s):
                return FALSE
            fresh_v = frozenset(set(iv.domain) - set(iw.domain))
            if not c1_ok(iv, s, fresh_v):
                return FALSE
            if s not in transitive:
                if not c2_ok(iw, iv, s, pfresh, fresh_v):
                    return FALSE
            elif plabel.role is None:
                if not c4_ok(iw, iv, s, parent_role_fresh(ctx, s),
                             fresh_v):
                    if not c3_shape(iw, iv, s, pfresh):
                        return FALSE
            elif plabel.role != s:
                if not c3_shape(iw, iv, s, pfresh):
                    return FALSE
            else:
                if not c4_ok(iw, iv, s, parent_role_fresh(ctx, s),
                             fresh_v):
                    return FALSE
            return conj(child_obligations(sym, fresh_v, plabel.role))

        if kind == "nm":
            if sym is STAR:
                return TRUE
            _, d, s, ctx = q
            plabel, pfresh, _ = ctx
            iw = plabel.interpretation
            iv = sym.interpretation
            if sym.role != s:
                return TRUE
            shared = set(iw.domain) & set(iv.domain)
            if shared != {d}:
                return TRUE
            if not is_root_cluster(iv, s, cluster(iv, s, d)):
                return TRUE
            if plabel.role is None:
                # at the root a cluster-continuing child is not a
                # role-switch child, so it does not count for uniqueness
                fresh_v = frozenset(set(iv.domain) - set(iw.domain))
                if c4_ok(iw, iv, s, parent_role_fresh(ctx, s), fresh_v):
                    return TRUE
            return FALSE

        raise ValueError("unknown state %r" % (q,))

    return TwoATA("q0", delta, lambda q: 2, 2)


# ---------------------------------------------------------------------------
# Query automaton
# ---------------------------------------------------------------------------

def build_a_query(q, kb, alphabet):
    """Automaton accepting iff the represented structure matches the
    query (with constants mapped to the root classes of the same name).

    The automaton picks a disjunct, then maintains obligation states
    (remaining atoms, suffix duties, prefix duties) that it splits over
    the current bag and the child subtrees; single path segments are
    verified by intersection states resolved inside one bag each."""
    k = alphabet.arity
    individuals = kb.individuals()
    for c in q.constants():
        if c not in individuals:
            raise ValueError("query constant %s is not an ABox individual"
                             % c)

    hats = [querycore.hat(p, kb.signature)
            for p in querycore.to_crpq_disjuncts(q)]
    atoms = {}        # atom id -> (nfa, left, right)
    disjunct_atoms = []
    for i, p in enumerate(hats):
        ids = []
        for j, a in enumerate(p.atoms):
            aid = (i, j)
            atoms[aid] = (querycore.regex_to_nfa(a.regex), a.left, a.right)
            ids.append(aid)
        disjunct_atoms.append(ids)

    empty_ob = ("ob", frozenset(), frozenset(), frozenset())

    rel_cache = {}

    def local_rel(i, aid):
        """Full product reachability within one bag: maps (d, s) to the
        set of (d2, s2) connected by a local word, computed once per
        (bag, atom)."""
        key = (id(i), aid)
        hit = rel_cache.get(key)
        if hit is not None and hit[0] is i:
            return hit[1]
        nfa = atoms[aid][0]
        edges = {}
        for sym in nfa.alphabet():
            for (d, e) in querycore._sym_pairs(i, sym):
                edges.setdefault((d, sym), set()).add(e)
        step = {}
        for (s1, sym, t) in nfa.transitions:
            for (x, sym2), targets in edges.items():
                if sym2 == sym:
                    step.setdefault((x, s1), set()).update(
                        (e, t) for e in targets)
        out = {}
        for d in i.domain:
            for s0 in nfa.states:
                reach = {(d, s0)}
                frontier = [(d, s0)]
                while frontier:
                    cur = frontier.pop()
                    for nxt in step.get(cur, ()):
                        if nxt not in reach:
                            reach.add(nxt)
                            frontier.append(nxt)
                out[(d, s0)] = reach
        rel_cache[key] = (i, out)
        return out

    def path_var(i, d, s, aid, d2, s2):
        """A path obligation, simplified when it resolves locally."""
        if d not in i.domain or d2 not in i.domain:
            return None  # unsatisfiable: no occurrence of the endpoints
        if (d2, s2) in local_rel(i, aid).get((d, s), ()):
            return TRUE
        return Var(0, ("path", d, s, aid, d2, s2))

    def hat_transition(i, idx):
        out = []
        choice_lists = []
        for aid in disjunct_atoms[idx]:
            nfa, left, right = atoms[aid]
            if left[0] == "const" and right[0] == "const":
                choice_lists.append([("Q0", (left[1], nfa.initial, aid,
                                             right[1], sf))
                                     for sf in sorted(nfa.finals)])
            elif left[0] == "var" and right[0] == "const":
                choice_lists.append([("Vr", (left[1], aid, right[1], sf))
                                     for sf in sorted(nfa.finals)])
            elif left[0] == "const" and right[0] == "var":
                choice_lists.append([("Vl", (left[1], nfa.initial, aid,
                                             right[1]))])
            else:
                choice_lists.append([("p", aid)])
        for combo in itertools.product(*choice_lists):
            p, vl, vr, parts = set(), set(), set(), []
            ok = True
            for tag, item in combo:
                if tag == "p":
                    p.add(item)
                elif tag == "Vl":
                    vl.add(item)
                elif tag == "Vr":
                    vr.add(item)
                else:
                    d, s, aid, d2, s2 = item
                    v = path_var(i, d, s, aid, d2, s2)
                    if v is None:
                        ok = False
                        break
                    parts.append(v)
            if not ok:
                continue
            ob = ("ob", frozenset(p), frozenset(vl), frozenset(vr))
            out.append(conj(parts + [Var(0, ob)]))
        return disj(out)

    def atom_vars(aid):
        _, left, right = atoms[aid]
        return [t[1] for t in (left, right) if t[0] == "var"]

    def task_options(i, task, where, dx):
        """Ways to discharge one task (an atom or a carried prefix or
        suffix duty) given the variable placement and the values of the
        bag-placed variables.  Each option is (path checks, child
        entries)."""
        domain = sorted(i.domain)
        kind, item = task
        if kind == "p":
            aid = item
            nfa, left, right = atoms[aid]
            lx, rx = left[1], right[1]
            li, ri = where[lx], where[rx]
            if li == 0 and ri == 0:
                return [([(dx[lx], nfa.initial, aid, dx[rx], sf)], [])
                        for sf in sorted(nfa.finals)]
            if li == 0:
                return [([(dx[lx], nfa.initial, aid, dm, sm)],
                         [(ri, "Vl", (dm, sm, aid, rx))])
                        for dm in domain for sm in sorted(nfa.states)]
            if ri == 0:
                return [([(dm, sm, aid, dx[rx], sf)],
                         [(li, "Vr", (lx, aid, dm, sm))])
                        for dm in domain for sm in sorted(nfa.states)
                        for sf in sorted(nfa.finals)]
            if li == ri:
                return [([], [(li, "p", aid)])]
            return [([(dl, sl, aid, dr, sr)],
                     [(li, "Vr", (lx, aid, dl, sl)),
                      (ri, "Vl", (dr, sr, aid, rx))])
                    for dl in domain for sl in sorted(nfa.states)
                    for dr in domain for sr in sorted(nfa.states)]
        if kind == "vl":
            d, s, aid, x = item
            nfa = atoms[aid][0]
            if where[x] == 0:
                return [([(d, s, aid, dx[x], sf)], [])
                        for sf in sorted(nfa.finals)]
            return [([(d, s, aid, dm, sm)],
                     [(where[x], "Vl", (dm, sm, aid, x))])
                    for dm in domain for sm in sorted(nfa.states)]
        x, aid, d, s = item
        nfa = atoms[aid][0]
        if where[x] == 0:
            return [([(dx[x], nfa.initial, aid, d, s)], [])]
        return [([(dm, sm, aid, d, s)],
                 [(where[x], "Vr", (x, aid, dm, sm))])
                for dm in domain for sm in sorted(nfa.states)]

    def subgroup_formula(i, tasks, where, dx):
        """Disjunction over joint discharges of tasks that share a
        child-placed variable; their child duties merge into one
        obligation state per child."""
        per_task = [task_options(i, t, where, dx) for t in tasks]
        opts = {}
        for combo in itertools.product(*per_task):
            parts = []
            kids = {}
            ok = True
            for checks, entries in combo:
                for check in checks:
                    v = path_var(i, *check)
                    if v is None:
                        ok = False
                        break
                    parts.append(v)
                if not ok:
                    break
                for (j, tag, entry) in entries:
                    kids.setdefault(j, {"p": set(), "Vl": set(),
                                        "Vr": set()})[tag].add(entry)
            if not ok:
                continue
            for j in sorted(kids):
                parts.append(Var(j, ("ob", frozenset(kids[j]["p"]),
                                     frozenset(kids[j]["Vl"]),
                                     frozenset(kids[j]["Vr"]))))
            opts[conj(parts)] = None
        return disj(list(opts))

    def group_formula(i, tasks, task_vars, gvars, where):
        """Disjunction over all ways to discharge one group of
        variable-sharing tasks.  Bag-placed values are enumerated once
        for the whole group; under a fixed valuation, only tasks
        sharing a child-placed variable remain entangled."""
        domain = sorted(i.domain)
        s0_vars = sorted(x for x in gvars if where[x] == 0)
        child_vars = [frozenset(x for x in vs if where[x] >= 1)
                      for vs in task_vars]
        cvars = sorted(set().union(*child_vars)) if child_vars else []
        parent = {v: v for v in cvars}

        def find(v):
            while parent[v] != v:
                v = parent[v]
            return v

        for vs in child_vars:
            vs = sorted(vs)
            for v2 in vs[1:]:
                parent[find(v2)] = find(vs[0])
        subgroups = {}
        for idx, (t, vs) in enumerate(zip(tasks, child_vars)):
            key = find(sorted(vs)[0]) if vs else ("solo", idx)
            subgroups.setdefault(key, []).append(t)
        subgroups = [subgroups[key] for key in sorted(subgroups, key=repr)]
        opts = {}
        for values in itertools.product(domain, repeat=len(s0_vars)):
            dx = dict(zip(s0_vars, values))
            parts = []
            ok = True
            for sub in subgroups:
                f = subgroup_formula(i, sub, where, dx)
                if f is FALSE:
                    ok = False
                    break
                parts.append(f)
            if ok:
                opts[conj(parts)] = None
        return disj(list(opts))

    def ob_transition(i, p, vl, vr):
        for (d, s, aid, x) in vl:
            if d not in i.domain:
                return FALSE
        for (x, aid, d, s) in vr:
            if d not in i.domain:
                return FALSE
        tasks = [("p", aid) for aid in sorted(p)]
        tasks += [("vl", e) for e in sorted(vl)]
        tasks += [("vr", e) for e in sorted(vr)]
        task_vars = []
        variables = set()
        for kind, item in tasks:
            if kind == "p":
                vs = frozenset(atom_vars(item))
            elif kind == "vl":
                vs = frozenset({item[3]})
            else:
                vs = frozenset({item[0]})
            task_vars.append(vs)
            variables |= vs
        variables = sorted(variables)
        out = {}
        for slots in itertools.product(range(k + 1), repeat=len(variables)):
            where = dict(zip(variables, slots))
            # tasks sharing a variable must be solved jointly; disjoint
            # groups are dispatched independently
            parent = {v: v for v in variables}

            def find(v):
                while parent[v] != v:
                    v = parent[v]
                return v

            for vs in task_vars:
                vs = sorted(vs)
                for v2 in vs[1:]:
                    parent[find(v2)] = find(vs[0])
            groups = {}
            for (t, vs) in zip(tasks, task_vars):
                root = find(sorted(vs)[0])
                groups.setdefault(root, ([], [], set()))
                groups[root][0].append(t)
                groups[root][1].append(vs)
                groups[root][2].update(vs)
            parts = []
            ok = True
            for root in sorted(groups):
                gtasks, gvarsets, gvars = groups[root]
                f = group_formula(i, gtasks, gvarsets, gvars, where)
                if f is FALSE:
                    ok = False
                    break
                parts.append(f)
            if ok:
                out[conj(parts)] = None
        return disj(list(out))

    def delta(q_state, sym):
        if q_state == "q0":
            if sym is STAR:
                return FALSE
            return disj([Var(0, ("hat", i)) for i in range(len(hats))])

        kind = q_state[0]
        if kind == "hat":
            if sym is STAR:
                return FALSE
            return hat_transition(sym.interpretation, q_state[1])

        if kind == "ob":
            _, p, vl, vr = q_state
            if not p and not vl and not vr:
                return TRUE
            if sym is STAR:
                return FALSE
            return ob_transition(sym.interpretation, p, vl, vr)

        if kind == "path":
            if sym is STAR:
                return FALSE
            _, d, s, aid, d2, s2 = q_state
            i = sym.interpretation
            v = path_var(i, d, s, aid, d2, s2)
            if v is None:
                return FALSE
            if v is TRUE:
                return TRUE
            nfa = atoms[aid][0]
            parts = [Var(j, q_state) for j in range(1, k + 1)]
            for dd in sorted(i.domain):
                for ss in sorted(nfa.states):
                    left = path_var(i, d, s, aid, dd, ss)
                    right = path_var(i, dd, ss, aid, d2, s2)
                    parts.append(conj([left, right]))
            return disj(parts)

        raise ValueError("unknown state %r" % (q_state,))

    return TwoATA("q0", delta, lambda q_state: 1, 1)


# ---------------------------------------------------------------------------
# Product
# ---------------------------------------------------------------------------

def build_product(kb, q, alphabet):
    """The certification automaton: accepts a tree iff it is a
    consistent canonical encoding of a model of the knowledge base in
    which the query has no match."""
    can = build_a_can(kb, alphabet.pool, alphabet.arity)
    abox = build_a_abox(kb, alphabet)
    tbox = build_a_tbox(kb, alphabet)
    query = build_a_query(q, kb, alphabet)
    return conjoin(can, conjoin(abox, conjoin(tbox, complement(query))))
