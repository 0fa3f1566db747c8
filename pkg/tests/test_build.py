"""Tests for the four automata constructions and their product."""

import random

import pytest

from pathcert import dlcore, querycore, decomposition, unravel, encoding
from pathcert import build
from pathcert.build import (Alphabet, alphabet_of, compositions,
                            direction_subsets, tbox_concept,
                            build_a_abox, build_a_tbox, build_a_can,
                            build_a_query, build_product)
from pathcert.encoding import (STAR_NODE, SigmaSymbol, LabeledRegularTree,
                               make_pool, encode, decode)
from pathcert.twoata import membership

import fixtures
from test_encoding import heart_setup, chain_loop_tree, simple_tree


def chain_kb():
    return dlcore.parse_kb(fixtures.INFINITE_CHAIN_KB)


def pipeline_tree(i, kb, depth, prune_first=True):
    dec, tau = unravel.unravel(i, kb, depth, prune_first=prune_first)
    return unravel.fold(dec, tau)


def single_bag_tree(i, abox=(), arity=1):
    dec = decomposition.ExtTreeDecomposition(
        {decomposition.ROOT: i}, {decomposition.ROOT: None})
    inds = sorted({a.individual if hasattr(a, "individual") else x
                   for a in abox for x in
                   ([a.individual] if hasattr(a, "individual")
                    else [a.subject, a.object])})
    pool = make_pool(max(len(i.domain), len(inds), 1), list(abox))
    return encode(dec, pool, arity=arity,
                  individuals=inds if inds else None)


def relabel(tree, name, members):
    """Copy of the tree with concept `name` set to `members` (a set of
    pool ids) in every bag, intersected with the bag domain."""
    nodes = {}
    for n, sym in tree.nodes.items():
        i = sym.interpretation
        concepts = {c: set(e) for c, e in i.concepts.items()}
        concepts[name] = set(members) & set(i.domain)
        i2 = dlcore.Interpretation(set(i.domain), concepts,
                                   {r: set(p) for r, p in i.roles.items()},
                                   set(i.transitive))
        nodes[n] = SigmaSymbol(i2, sym.role)
    return LabeledRegularTree(nodes, {n: list(s) for n, s in
                                      tree.succ.items()},
                              tree.arity, list(tree.pool),
                              set(tree.transitive))


# ---------------------------------------------------------------------------
# Helpers and alphabet
# ---------------------------------------------------------------------------

def test_alphabet_validation():
    a = Alphabet(("a", "e1", "e2", "e3"), 2)
    assert a.width_bound == 2
    with pytest.raises(ValueError):
        Alphabet(("a", "e1", "e2"), 2)
    with pytest.raises(ValueError):
        Alphabet(("a", "e1"), 0)


def test_alphabet_of_tree():
    t = chain_loop_tree()
    a = alphabet_of(t)
    assert a.pool == ("a", "e1", "e2", "e3")
    assert a.arity == 1


def test_compositions():
    assert list(compositions(2, 2)) == [(0, 2), (1, 1), (2, 0)]
    assert list(compositions(0, 3)) == [(0, 0, 0)]
    assert list(compositions(3, 0)) == []
    assert list(compositions(0, 0)) == [()]


def test_direction_subsets():
    assert list(direction_subsets(0, 2)) == [()]
    assert list(direction_subsets(-1, 2)) == [()]
    assert list(direction_subsets(2, 3)) == [(1, 2), (1, 3), (2, 3)]
    assert list(direction_subsets(4, 3)) == []


def test_tbox_concept_normal_form():
    kb = dlcore.parse_kb("A subclassof forall r B")
    c = tbox_concept(kb)
    # normalized: no existential or universal constructors remain
    kinds = {type(s).__name__ for s in dlcore.subconcepts(c)}
    assert "Exists" not in kinds and "Forall" not in kinds


# ---------------------------------------------------------------------------
# ABox automaton
# ---------------------------------------------------------------------------

def test_abox_accepts_heart_root():
    dec, tau, pool, kb = heart_setup()
    tree = unravel.fold(dec, tau)
    a = build_a_abox(kb, alphabet_of(tree))
    assert membership(a, tree).accepted


def test_abox_rejects_missing_assertion():
    dec, tau, pool, kb = heart_setup()
    tree = relabel(unravel.fold(dec, tau), "Heart", set())
    a = build_a_abox(kb, alphabet_of(tree))
    assert not membership(a, tree).accepted


def test_abox_empty_accepts_everything():
    t = chain_loop_tree()
    a = build_a_abox(chain_kb(), alphabet_of(t))
    assert membership(a, t).accepted


# ---------------------------------------------------------------------------
# Shape automaton
# ---------------------------------------------------------------------------

def test_can_accepts_heart_pipeline():
    dec, tau, pool, kb = heart_setup()
    tree = unravel.fold(dec, tau)
    a = build_a_can(kb, tree.pool, tree.arity)
    assert membership(a, tree).accepted


def test_can_accepts_chain_loop():
    t = chain_loop_tree()
    a = build_a_can(chain_kb(), t.pool, t.arity)
    assert membership(a, t).accepted


def test_can_accepts_random_pipelines():
    rng = random.Random(11)
    done = 0
    while done < 8:
        i, kb = fixtures.random_model_and_kb(rng, size=4, axioms=2)
        if not dlcore.models(i, kb)[0]:
            continue
        dec, tau = unravel.unravel(i, kb, 2)
        if len(dec.underlying.domain) > 12:
            continue
        try:
            tree = unravel.fold(dec, tau)
        except ValueError:
            continue
        done += 1
        a = build_a_can(kb, tree.pool, tree.arity)
        assert membership(a, tree).accepted


def test_can_rejects_tagged_root():
    t = simple_tree()
    kb = dlcore.parse_kb("transitive r\nA(a)")
    bad = LabeledRegularTree(
        {n: (SigmaSymbol(sym.interpretation, "r") if n == "n0" else sym)
         for n, sym in t.nodes.items()},
        {n: list(s) for n, s in t.succ.items()},
        t.arity, list(t.pool), set(t.transitive))
    a = build_a_can(kb, bad.pool, bad.arity)
    assert not membership(a, bad).accepted


def test_can_rejects_bottom_tag_below_root():
    kb = dlcore.parse_kb("transitive r\nA(a)")
    t = simple_tree(child_role=None)
    a = build_a_can(kb, t.pool, t.arity)
    assert not membership(a, t).accepted


def test_can_rejects_unknown_role_tag():
    kb = dlcore.parse_kb("A(a)")  # no role s in the signature
    t = simple_tree(child_role="s")
    a = build_a_can(kb, t.pool, t.arity)
    assert not membership(a, t).accepted


def test_can_rejects_oversized_nontransitive_child():
    kb = dlcore.parse_kb("A subclassof exists s A\nA(a)")
    pool = ["a", "e1", "e2", "e3", "e4", "e5"]
    bag0 = dlcore.Interpretation(["a"], {"A": {"a"}}, {}, set())
    bag1 = dlcore.Interpretation(["a", "e1", "e2"], {"A": {"a", "e1", "e2"}},
                                 {"s": {("a", "e1"), ("a", "e2")}}, set())
    t = LabeledRegularTree({"n0": SigmaSymbol(bag0, None),
                            "n1": SigmaSymbol(bag1, "s")},
                           {"n0": ["n1"], "n1": [STAR_NODE]},
                           1, pool, set())
    a = build_a_can(kb, pool, 1)
    assert not membership(a, t).accepted


def test_can_rejects_edgeless_transitive_child():
    kb = chain_kb()
    pool = ["a", "e1", "e2", "e3"]
    bag0 = dlcore.Interpretation(["a"], {}, {}, {"r"})
    bag1 = dlcore.Interpretation(["a", "e1"], {}, {}, {"r"})
    t = LabeledRegularTree({"n0": SigmaSymbol(bag0, None),
                            "n1": SigmaSymbol(bag1, "r")},
                           {"n0": ["n1"], "n1": [STAR_NODE]},
                           1, pool, {"r"})
    a = build_a_can(kb, pool, 1)
    assert not membership(a, t).accepted


# ---------------------------------------------------------------------------
# TBox automaton
# ---------------------------------------------------------------------------

def test_tbox_accepts_heart_pipeline():
    dec, tau, pool, kb = heart_setup()
    tree = unravel.fold(dec, tau)
    a = build_a_tbox(kb, alphabet_of(tree))
    assert membership(a, tree).accepted


def test_tbox_rejects_perturbed_heart():
    dec, tau, pool, kb = heart_setup()
    tree = unravel.fold(dec, tau)
    # consistently remove the MV label everywhere: Heart loses its
    # required hPt-successor
    bad = relabel(tree, "MV", set())
    a = build_a_tbox(kb, alphabet_of(bad))
    assert not membership(a, bad).accepted


def test_tbox_accepts_chain_loop():
    t = chain_loop_tree()
    a = build_a_tbox(chain_kb(), alphabet_of(t))
    assert membership(a, t).accepted


def test_tbox_rejects_chain_loop_needing_labels():
    t = chain_loop_tree()
    kb = dlcore.parse_kb("transitive r\ntop subclassof exists r A")
    a = build_a_tbox(kb, alphabet_of(t))
    assert not membership(a, t).accepted


def test_tbox_accepts_labeled_chain_loop():
    t = relabel(chain_loop_tree(), "A", {"a", "e1", "e2", "e3"})
    kb = dlcore.parse_kb("transitive r\ntop subclassof exists r A")
    a = build_a_tbox(kb, alphabet_of(t))
    assert membership(a, t).accepted


def test_tbox_rejects_unsatisfiable_label():
    t = relabel(chain_loop_tree(), "A", {"e2"})
    kb = dlcore.parse_kb("transitive r\nA subclassof bot")
    a = build_a_tbox(kb, alphabet_of(t))
    assert not membership(a, t).accepted


def test_tbox_atmost_on_chain_loop():
    t = chain_loop_tree()
    # every element has infinitely many r-successors in the unfolding
    kb_le = dlcore.parse_kb("transitive r\ntop subclassof atmost 2 r top")
    a = build_a_tbox(kb_le, alphabet_of(t))
    assert not membership(a, t).accepted
    # but at most 0 predecessors-of-nothing style vacuous bounds hold
    kb_ok = dlcore.parse_kb("transitive r\ntop subclassof atmost 2 r A")
    a2 = build_a_tbox(kb_ok, alphabet_of(t))
    assert membership(a2, t).accepted


def test_tbox_overflow_check():
    kb = dlcore.parse_kb("A subclassof atleast 2 r B")
    bad = dlcore.KB([(dlcore.Atom("A"), dlcore.AtLeast(9, "r",
                                                       dlcore.Atom("B")))],
                    [], kb.signature)
    # the declared bound comes from the same tbox, so this passes
    build_a_tbox(bad, Alphabet(("a", "e1"), 1))


def test_tbox_single_bag_matches_model_check():
    rng = random.Random(41)
    done = 0
    while done < 50:
        i, kb = fixtures.random_model_and_kb(rng, size=4, axioms=2,
                                             max_n=2)
        tree = single_bag_tree(i)
        done += 1
        a = build_a_tbox(kb, alphabet_of(tree))
        got = membership(a, tree).accepted
        want = dlcore.models(decode(tree, 0), kb)[0]
        assert got == want, dlcore.interpretation_to_text(decode(tree, 0))


# ---------------------------------------------------------------------------
# Query automaton
# ---------------------------------------------------------------------------

def query(text):
    return querycore.parse_query(text)


def test_query_rejects_constants_outside_abox():
    with pytest.raises(ValueError):
        build_a_query(query("exists x . r(x,c)"), chain_kb(),
                      alphabet_of(chain_loop_tree()))


def test_query_loop_tree_goldens():
    t = chain_loop_tree()
    kb = chain_kb()
    alpha = alphabet_of(t)
    # the represented chain is irreflexive: no r-self-loop anywhere
    assert not membership(build_a_query(query("exists x . r(x,x)"),
                                        kb, alpha), t).accepted
    # but r-edges abound
    assert membership(build_a_query(query("exists x, y . r(x,y)"),
                                    kb, alpha), t).accepted
    # a match split across bags
    assert membership(build_a_query(query("exists x, y . (r.r)(x,y)"),
                                    kb, alpha), t).accepted


def test_query_with_constant_on_heart():
    dec, tau, pool, kb = heart_setup()
    tree = unravel.fold(dec, tau)
    alpha = alphabet_of(tree)
    assert membership(build_a_query(query("exists x . hPt(h,x)"),
                                    kb, alpha), tree).accepted
    assert membership(build_a_query(query("(Heart?)(h,h)"),
                                    kb, alpha), tree).accepted
    assert not membership(build_a_query(query("(MV?)(h,h)"),
                                        kb, alpha), tree).accepted


def test_query_deep_concept_match():
    dec, tau, pool, kb = heart_setup()
    tree = unravel.fold(dec, tau)
    alpha = alphabet_of(tree)
    # an MV element exists somewhere below the root
    assert membership(build_a_query(query("exists x . (MV?)(x,x)"),
                                    kb, alpha), tree).accepted
    assert not membership(build_a_query(query("exists x . (Nope?)(x,x)"),
                                        kb, alpha), tree).accepted


def random_query(rng, variables=("x", "y")):
    regexes = ["r", "s", "r.r*", "A?", "(r|s)*", "r-", "r.s", "s|A?"]

    def atom():
        regex = querycore.parse_regex(rng.choice(regexes))
        terms = [("var", rng.choice(list(variables))) for _ in range(2)]
        return querycore.QAtom(regex, terms[0], terms[1])

    def formula(depth):
        if depth == 0:
            return atom()
        kind = rng.choice([querycore.QAnd, querycore.QOr])
        return kind(formula(depth - 1), formula(depth - 1))

    return querycore.PRPQ(tuple(variables), formula(rng.randint(1, 2)))


def test_query_single_bag_matches_direct_evaluation():
    rng = random.Random(43)
    done = 0
    while done < 50:
        i, kb = fixtures.random_model_and_kb(rng, size=3, axioms=1)
        q = random_query(rng)
        tree = single_bag_tree(i)
        done += 1
        a = build_a_query(q, kb, alphabet_of(tree))
        got = membership(a, tree).accepted
        want = querycore.eval_prpq(decode(tree, 0), q) is not None
        assert got == want, (dlcore.interpretation_to_text(decode(tree, 0)),
                             str(q.formula))


# ---------------------------------------------------------------------------
# Product
# ---------------------------------------------------------------------------

def test_product_certifies_chain_nonentailment():
    t = chain_loop_tree()
    kb = chain_kb()
    alpha = alphabet_of(t)
    assert membership(build_product(kb, query("exists x . r(x,x)"),
                                    alpha), t).accepted


def test_product_rejects_when_query_matches():
    t = chain_loop_tree()
    kb = chain_kb()
    alpha = alphabet_of(t)
    assert not membership(build_product(kb, query("exists x, y . r(x,y)"),
                                        alpha), t).accepted


def test_product_rejects_noncanonical_input():
    kb = dlcore.parse_kb("transitive r\nA(a)")
    t = simple_tree(child_role=None)
    assert not membership(build_product(kb, query("exists x . r(x,x)"),
                                        alphabet_of(t)), t).accepted


def test_product_heart_entailed_query_rejected():
    dec, tau, pool, kb = heart_setup()
    tree = unravel.fold(dec, tau)
    alpha = alphabet_of(tree)
    assert not membership(build_product(kb, query("exists x . (Heart?)(x,x)"),
                                        alpha), tree).accepted
