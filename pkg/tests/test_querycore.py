import itertools
import random

import pytest

import fixtures
from pathcert import dlcore, querycore
from pathcert.querycore import (
    RSym, RCat, RAlt, RStar, parse_regex, regex_to_nfa, regex_size, sub_nfa,
    parse_query, to_crpq_disjuncts, hat, eval_prpq, eval_crpq, atom_relation,
    countermodel_search, QAtom, QAnd, QOr, CRPQ,
)


# -- oracles ------------------------------------------------------------------

def oracle_match(e, word, memo=None):
    """Recursive regex matcher, independent of the NFA construction."""
    if memo is None:
        memo = {}
    key = (e, tuple(word))
    if key in memo:
        return memo[key]
    if isinstance(e, RSym):
        out = len(word) == 1 and word[0] == e
    elif isinstance(e, RCat):
        out = any(oracle_match(e.left, word[:j], memo)
                  and oracle_match(e.right, word[j:], memo)
                  for j in range(len(word) + 1))
    elif isinstance(e, RAlt):
        out = oracle_match(e.left, word, memo) or \
            oracle_match(e.right, word, memo)
    elif isinstance(e, RStar):
        if not word:
            out = True
        else:
            out = any(oracle_match(e.arg, word[:j], memo)
                      and oracle_match(e, word[j:], memo)
                      for j in range(1, len(word) + 1))
    else:
        raise TypeError(e)
    memo[key] = out
    return out


ALPHABET = [RSym("role", "r"), RSym("role", "s"),
            RSym("inv", "r"), RSym("test", "A")]


def all_words(max_len, alphabet=None):
    alphabet = alphabet or ALPHABET
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def random_regex(rng, depth=3):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice(ALPHABET)
    kind = rng.choice(["cat", "alt", "star"])
    if kind == "star":
        return RStar(random_regex(rng, depth - 1))
    left = random_regex(rng, depth - 1)
    right = random_regex(rng, depth - 1)
    return RCat(left, right) if kind == "cat" else RAlt(left, right)


def oracle_eval(i, q):
    """Direct PRPQ evaluation by exhaustive assignment enumeration."""
    for c in q.constants():
        if c not in i.domain:
            return None
    rels = {}

    def rel(a):
        if a.regex not in rels:
            rels[a.regex] = atom_relation(i, regex_to_nfa(a.regex))
        return rels[a.regex]

    def sat(f, asg):
        if isinstance(f, QAtom):
            def val(t):
                return t[1] if t[0] == "const" else asg[t[1]]
            return (val(f.left), val(f.right)) in rel(f)
        if isinstance(f, QAnd):
            return sat(f.left, asg) and sat(f.right, asg)
        return sat(f.left, asg) or sat(f.right, asg)

    for values in itertools.product(sorted(i.domain), repeat=len(q.variables)):
        asg = dict(zip(q.variables, values))
        if sat(q.formula, asg):
            return asg
    return None


def random_query(rng, variables=("x", "y"), connectives=3):
    regexes = ["r", "s", "r.r*", "A?", "(r|s)*", "r-"]

    def atom():
        regex = parse_regex(rng.choice(regexes))
        terms = []
        for _ in range(2):
            v = rng.choice(list(variables))
            terms.append(("var", v))
        return QAtom(regex, terms[0], terms[1])

    def formula(depth):
        if depth == 0:
            return atom()
        kind = rng.choice([QAnd, QOr])
        return kind(formula(depth - 1), formula(depth - 1))

    return querycore.PRPQ(tuple(variables), formula(connectives))


# -- regex parsing ------------------------------------------------------------

def test_parse_regex_basic():
    assert parse_regex("r") == RSym("role", "r")
    assert parse_regex("r.r*") == RCat(RSym("role", "r"),
                                       RStar(RSym("role", "r")))
    assert parse_regex("r-") == RSym("inv", "r")
    assert parse_regex("A?") == RSym("test", "A")


def test_parse_regex_precedence():
    # concatenation binds tighter than alternation
    assert parse_regex("a.b|c") == RAlt(
        RCat(RSym("role", "a"), RSym("role", "b")), RSym("role", "c"))
    assert parse_regex("(a|b).c") == RCat(
        RAlt(RSym("role", "a"), RSym("role", "b")), RSym("role", "c"))
    assert parse_regex("r-*") == RStar(RSym("inv", "r"))


def test_parse_regex_errors():
    with pytest.raises(dlcore.ParseError):
        parse_regex("(r")
    with pytest.raises(dlcore.ParseError):
        parse_regex("r)")
    with pytest.raises(dlcore.ParseError):
        parse_regex("A?-")


def test_regex_round_trip():
    rng = random.Random(21)
    for _ in range(50):
        e = random_regex(rng)
        assert parse_regex(str(e)) == e


# -- regex to NFA -------------------------------------------------------------

def test_nfa_single_symbol():
    b = regex_to_nfa(RSym("role", "r"))
    assert len(b.states) == 2
    assert b.accepts([RSym("role", "r")])
    assert not b.accepts([])
    assert not b.accepts([RSym("role", "s")])


def test_nfa_r_rstar():
    b = regex_to_nfa(parse_regex("r.r*"))
    r = RSym("role", "r")
    for n in range(7):
        assert b.accepts([r] * n) == (n >= 1)


def test_nfa_star_accepts_empty():
    b = regex_to_nfa(parse_regex("(A?|r)*"))
    assert b.accepts([])


def test_nfa_matches_oracle_on_random_regexes():
    rng = random.Random(22)
    for _ in range(30):
        e = random_regex(rng)
        b = regex_to_nfa(e)
        memo = {}
        for word in all_words(4):
            assert b.accepts(list(word)) == oracle_match(e, list(word), memo), \
                (e, word)


def test_nfa_state_bound():
    rng = random.Random(23)
    for _ in range(50):
        e = random_regex(rng)
        b = regex_to_nfa(e)
        assert len(b.states) <= 2 * regex_size(e) + 2


# -- sub_nfa ------------------------------------------------------------------

def test_sub_nfa_self_accepts_empty():
    b = regex_to_nfa(parse_regex("r.s"))
    assert sub_nfa(b, b.initial, b.initial).accepts([])


def test_sub_nfa_unknown_state():
    b = regex_to_nfa(parse_regex("r"))
    with pytest.raises(ValueError):
        sub_nfa(b, 99, b.initial)


def test_sub_nfa_chaining():
    b = regex_to_nfa(parse_regex("r.(s|A?)*.r"))
    states = sorted(b.states)
    langs = {}
    for s in states:
        for t in states:
            langs[(s, t)] = {w for w in all_words(2)
                             if sub_nfa(b, s, t).accepts(list(w))}
    for s in states:
        for t in states:
            for u in states:
                for w1 in langs[(s, t)]:
                    for w2 in langs[(t, u)]:
                        if len(w1) + len(w2) <= 4:
                            assert sub_nfa(b, s, u).accepts(list(w1 + w2))


def test_sub_nfa_final_recovers_sublanguage():
    b = regex_to_nfa(parse_regex("r|s.s"))
    for f in b.finals:
        sub = sub_nfa(b, b.initial, f)
        for w in all_words(3):
            if sub.accepts(list(w)):
                assert b.accepts(list(w))


# -- query parsing ------------------------------------------------------------

def test_parse_query_example():
    q = parse_query("exists x, y . E(x,y) and (F(y,a) or A(x))")
    assert q.variables == ("x", "y")
    assert isinstance(q.formula, QAnd)
    assert q.formula.left == QAtom(RSym("role", "E"), ("var", "x"),
                                   ("var", "y"))
    right = q.formula.right
    assert isinstance(right, QOr)
    assert right.left == QAtom(RSym("role", "F"), ("var", "y"),
                               ("const", "a"))
    # unary atom A(x) desugars to the test A?(x,x)
    assert right.right == QAtom(RSym("test", "A"), ("var", "x"), ("var", "x"))
    assert q.constants() == {"a"}


def test_parse_query_regex_atoms():
    q = parse_query("exists x . (r|s)*(x,x)")
    assert q.formula == QAtom(parse_regex("(r|s)*"), ("var", "x"),
                              ("var", "x"))


def test_parse_query_no_variables():
    q = parse_query("r(a,b)")
    assert q.variables == ()
    assert q.formula == QAtom(RSym("role", "r"), ("const", "a"),
                              ("const", "b"))


def test_parse_query_errors():
    with pytest.raises(dlcore.ParseError):
        parse_query("exists x y . A(x)")  # missing comma keeps y undeclared
        # (parses y as part of the variable list only with a comma)
    with pytest.raises(dlcore.ParseError):
        parse_query("exists x . A(x) and")
    with pytest.raises(dlcore.ParseError):
        parse_query("exists x . (A(x)")


# -- DNF ---------------------------------------------------------------------

def test_disjuncts_conjunctive():
    q = parse_query("exists x, y . r(x,y) and A(x)")
    ds = list(to_crpq_disjuncts(q))
    assert len(ds) == 1
    assert len(ds[0].atoms) == 2


def test_disjuncts_two_by_two():
    q = parse_query("exists x . (A(x) or B(x)) and (C(x) or D(x))")
    ds = list(to_crpq_disjuncts(q))
    names = [tuple(a.regex.name for a in d.atoms) for d in ds]
    assert names == [("A", "C"), ("A", "D"), ("B", "C"), ("B", "D")]


def test_disjuncts_restartable():
    q = parse_query("exists x . A(x) or B(x)")
    first = [d.atoms for d in to_crpq_disjuncts(q)]
    second = [d.atoms for d in to_crpq_disjuncts(q)]
    assert first == second


def test_disjuncts_lazy_first():
    # 2^12 disjuncts; only the first is forced
    parts = " and ".join("(A%d(x) or B%d(x))" % (j, j) for j in range(12))
    q = parse_query("exists x . " + parts)
    gen = to_crpq_disjuncts(q)
    d = next(gen)
    assert [a.regex.name for a in d.atoms] == ["A%d" % j for j in range(12)]


def test_disjuncts_agree_with_direct_evaluation():
    rng = random.Random(24)
    cases = 0
    while cases < 40:
        i = dlcore.random_interpretation(rng, 5, ["A"], ["r", "s"], {"r"})
        q = random_query(rng)
        direct = oracle_eval(i, q)
        via_disjuncts = eval_prpq(i, q)
        assert (direct is None) == (via_disjuncts is None)
        if via_disjuncts is not None:
            assert oracle_eval(i, querycore.PRPQ(
                (), _substitute(q.formula, via_disjuncts))) is not None
        cases += 1


def _substitute(f, asg):
    """Replace variables with the matched constants."""
    if isinstance(f, QAtom):
        def fix(t):
            return ("const", asg[t[1]]) if t[0] == "var" else t
        return QAtom(f.regex, fix(f.left), fix(f.right))
    return type(f)(_substitute(f.left, asg), _substitute(f.right, asg))


# -- hat ----------------------------------------------------------------------

def test_hat_non_transitive_unchanged():
    sig = dlcore.Signature(role_names={"s"}, transitive=set())
    p = CRPQ((QAtom(parse_regex("s.s*"), ("var", "x"), ("var", "y")),))
    assert hat(p, sig) == p


def test_hat_transitive_role():
    sig = dlcore.Signature(role_names={"r"}, transitive={"r"})
    p = CRPQ((QAtom(RSym("role", "r"), ("var", "x"), ("var", "y")),))
    assert hat(p, sig).atoms[0].regex == parse_regex("r.r*")
    p = CRPQ((QAtom(RSym("inv", "r"), ("var", "x"), ("var", "y")),))
    assert hat(p, sig).atoms[0].regex == RCat(
        RSym("inv", "r"), RStar(RSym("inv", "r")))


def test_hat_preserves_evaluation_on_closed_models():
    rng = random.Random(25)
    sig = dlcore.Signature(concept_names={"A"}, role_names={"r", "s"},
                           transitive={"r"})
    for _ in range(100):
        i = dlcore.random_interpretation(rng, 5, ["A"], ["r", "s"], {"r"})
        q = random_query(rng, connectives=1)
        for p in to_crpq_disjuncts(q):
            a = eval_crpq(i, p)
            b = eval_crpq(i, hat(p, sig))
            assert (a is None) == (b is None)


# -- evaluation ---------------------------------------------------------------

def test_eval_test_atom():
    i = dlcore.parse_interpretation("elem d e\nlabel A: e")
    m = eval_prpq(i, parse_query("exists x . A(x)"))
    assert m == {"x": "e"}


def test_eval_self_loop_in_cluster():
    i = fixtures.cluster_model()
    m = eval_prpq(i, parse_query("exists x . r(x,x)"))
    assert m is not None and m["x"] in {"b1", "b2", "b3"}


def test_eval_no_self_loop():
    i = fixtures.witness_model()
    assert eval_prpq(i, parse_query("exists x . r(x,x)")) is None


def test_eval_every_finite_chain_model_matches():
    # with r transitive and every element having an r-successor, every
    # finite model has a reachable cycle, hence a self-loop after closure
    kb = dlcore.parse_kb(fixtures.INFINITE_CHAIN_KB)
    q = parse_query("exists x . r(x,x)")
    rng = random.Random(26)
    checked = 0
    while checked < 25:
        i = dlcore.random_interpretation(rng, rng.randint(1, 5), [], ["r"],
                                         {"r"}, edge_prob=0.5)
        ok, _ = dlcore.models(i, kb)
        if not ok:
            continue
        checked += 1
        assert eval_prpq(i, q) is not None


def test_eval_constants():
    i = fixtures.heart_model()
    assert eval_prpq(i, parse_query("hPt(h,mv)")) == {"h": "h", "mv": "mv"}
    assert eval_prpq(i, parse_query("hPt(mv,h)")) is None
    # inverse steps
    assert eval_prpq(i, parse_query("hPt-(mv,h)")) is not None


def test_eval_missing_constant():
    i = fixtures.heart_model()
    assert eval_prpq(i, parse_query("A(zz)")) is None


def test_atom_relation_star_is_reflexive():
    i = fixtures.witness_model()
    rel = atom_relation(i, regex_to_nfa(parse_regex("r*")))
    for d in i.domain:
        assert (d, d) in rel
    assert ("a", "f") in rel
    assert ("f", "a") not in rel


# -- countermodel search --------------------------------------------------------

def test_search_trivial_abox():
    kb = dlcore.parse_kb("A(a)")
    q = parse_query("exists x . B(x)")
    i, status = countermodel_search(kb, q, 1)
    assert status == "countermodel"
    assert i.domain == {"a"}
    assert i.concept_members("A") == {"a"}
    assert not i.concept_members("B")


def test_search_heart_disjointness():
    kb = fixtures.heart_kb()
    q = parse_query("exists x . LA(x) and LV(x)")
    i, status = countermodel_search(kb, q, 4)
    assert status == "countermodel"
    ok, report = dlcore.models(i, kb)
    assert ok, report
    assert eval_prpq(i, q) is None


def test_search_unknown_on_infinite_chain():
    kb = dlcore.parse_kb(fixtures.INFINITE_CHAIN_KB)
    q = parse_query("exists x . r(x,x)")
    i, status = countermodel_search(kb, q, 3)
    assert status == "unknown" and i is None


def test_search_max_size_too_small():
    kb = dlcore.parse_kb("r(a,b)")
    with pytest.raises(ValueError):
        countermodel_search(kb, parse_query("exists x . A(x)"), 1)


def test_search_respects_role_assertions():
    kb = dlcore.parse_kb("transitive r\nr(a,b)")
    q = parse_query("exists x . B(x)")
    i, status = countermodel_search(kb, q, 2)
    assert status == "countermodel"
    assert ("a", "b") in i.role_pairs("r")


def test_transitive_relation_enumeration_is_sound_and_complete():
    elems = ["a", "b", "c"]
    got = set()
    for rel in querycore._transitive_relations(elems, set()):
        assert dlcore.transitive_closure(rel) == rel
        got.add(frozenset(rel))
    # brute-force count of transitively closed relations on 3 elements
    pairs = [(d, e) for d in elems for e in elems]
    expected = set()
    for bits in itertools.product([0, 1], repeat=9):
        rel = {p for p, b in zip(pairs, bits) if b}
        if dlcore.transitive_closure(rel) == rel:
            expected.add(frozenset(rel))
    assert got == expected


# ---------------------------------------------------------------------------
# Witness sequences over encoded trees
# ---------------------------------------------------------------------------

def witness_tree():
    from pathcert import decomposition, encoding
    i = fixtures.witness_model()
    dec = decomposition.ExtTreeDecomposition(
        {decomposition.ROOT: i}, {decomposition.ROOT: None})
    pool = encoding.make_pool(3, dlcore.parse_kb("A1(a)"))
    return encoding.encode(dec, pool)


def test_witness_sequence_single_bag():
    tree = witness_tree()
    b = querycore.regex_to_nfa(querycore.parse_regex("r"))
    final = sorted(b.finals)[0]
    # in pool ids, e became e1
    seq = [("a", b.initial), "n0", ("e1", final)]
    assert querycore.check_witness_sequence(tree, b, seq)
    bad = [("e1", b.initial), "n0", ("a", final)]
    assert not querycore.check_witness_sequence(tree, b, bad)


def test_witness_sequence_empty_path():
    tree = witness_tree()
    b = querycore.regex_to_nfa(querycore.parse_regex("(r)*"))
    assert b.initial in b.finals
    assert querycore.check_witness_sequence(tree, b, [("a", b.initial)])
    assert querycore.check_witness_sequence(
        tree, b, [("a", b.initial)],
        expected_start=("n0", "a"), expected_end=("n0", "a"))
    assert not querycore.check_witness_sequence(
        tree, b, [("a", b.initial)], expected_start=("n0", "e1"))


def test_witness_sequence_missing_element_rejected():
    tree = witness_tree()
    b = querycore.regex_to_nfa(querycore.parse_regex("r"))
    final = sorted(b.finals)[0]
    seq = [("zz", b.initial), "n0", ("e1", final)]
    assert not querycore.check_witness_sequence(tree, b, seq)


def test_witness_sequence_endpoint_classes():
    tree = witness_tree()
    b = querycore.regex_to_nfa(querycore.parse_regex("r.r"))
    # a -r-> e1 -r-> e2 within the single bag
    mid = None
    for (s, sym, t) in b.transitions:
        if s == b.initial:
            mid = t
    final = sorted(b.finals)[0]
    seq = [("a", b.initial), "n0", ("e2", final)]
    assert querycore.check_witness_sequence(
        tree, b, seq, expected_start=("n0", "a"),
        expected_end=("n0", "e2"))
    assert not querycore.check_witness_sequence(
        tree, b, seq, expected_end=("n0", "e1"))


def test_witness_sequence_malformed_shape():
    tree = witness_tree()
    b = querycore.regex_to_nfa(querycore.parse_regex("r"))
    with pytest.raises(ValueError):
        querycore.check_witness_sequence(tree, b, [])
    with pytest.raises(ValueError):
        querycore.check_witness_sequence(tree, b, [("a", b.initial), "n0"])
