"""Positive existential regular path queries.

Query text format:

    exists x, y . E(x,y) and (F(y,a) or A(x))

where E, F are regular expressions over role names, inverses (postfix '-')
and concept tests ('A?'), with operators '.' (concatenation), '|'
(alternation) and postfix '*'.  Terms are the declared variables or
constants (ABox individuals).  A unary atom A(x) abbreviates A?(x,x).
"""

from dataclasses import dataclass
import itertools

from . import dlcore
from .dlcore import ParseError


# ---------------------------------------------------------------------------
# Path regular expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RSym:
    kind: str  # 'role' | 'inv' | 'test'
    name: str

    def __str__(self):
        if self.kind == "role":
            return self.name
        if self.kind == "inv":
            return self.name + "-"
        return self.name + "?"


@dataclass(frozen=True)
class RCat:
    left: object
    right: object

    def __str__(self):
        right = str(self.right)
        if isinstance(self.right, RCat):
            right = "(%s)" % right
        return "%s.%s" % (self.left, right)


@dataclass(frozen=True)
class RAlt:
    left: object
    right: object

    def __str__(self):
        return "(%s|%s)" % (self.left, self.right)


@dataclass(frozen=True)
class RStar:
    arg: object

    def __str__(self):
        return "(%s)*" % (self.arg,)


def regex_size(e):
    if isinstance(e, RSym):
        return 1
    if isinstance(e, RStar):
        return 1 + regex_size(e.arg)
    return 1 + regex_size(e.left) + regex_size(e.right)


def parse_regex(text, lineno=None):
    """Parse a path regular expression (no whitespace inside)."""
    pos = [0]

    def peek():
        return text[pos[0]] if pos[0] < len(text) else None

    def parse_alt():
        left = parse_cat()
        while peek() == "|":
            pos[0] += 1
            left = RAlt(left, parse_cat())
        return left

    def parse_cat():
        left = parse_post()
        while peek() == ".":
            pos[0] += 1
            left = RCat(left, parse_post())
        return left

    def parse_post():
        a = parse_base()
        while peek() in ("*", "-"):
            op = text[pos[0]]
            pos[0] += 1
            if op == "*":
                a = RStar(a)
            else:
                if not isinstance(a, RSym) or a.kind != "role":
                    raise ParseError("inverse applies to role names", lineno)
                a = RSym("inv", a.name)
        return a

    def parse_base():
        c = peek()
        if c == "(":
            pos[0] += 1
            inner = parse_alt()
            if peek() != ")":
                raise ParseError("expected ')' in regex", lineno)
            pos[0] += 1
            return inner
        j = pos[0]
        while j < len(text) and (text[j].isalnum() or text[j] == "_"):
            j += 1
        if j == pos[0]:
            raise ParseError("bad regex at %r" % text[pos[0]:], lineno)
        name = text[pos[0]:j]
        pos[0] = j
        if peek() == "?":
            pos[0] += 1
            return RSym("test", name)
        return RSym("role", name)

    out = parse_alt()
    if pos[0] != len(text):
        raise ParseError("trailing regex input %r" % text[pos[0]:], lineno)
    return out


# ---------------------------------------------------------------------------
# NFAs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NFA:
    states: frozenset
    initial: int
    transitions: frozenset  # of (state, RSym, state)
    finals: frozenset

    def step(self, state, sym):
        return {t for (s, a, t) in self.transitions
                if s == state and a == sym}

    def accepts(self, word):
        current = {self.initial}
        for sym in word:
            current = {t for s in current for t in self.step(s, sym)}
        return bool(current & self.finals)

    def alphabet(self):
        return {a for (_, a, _) in self.transitions}


def regex_to_nfa(e):
    """Thompson-style construction followed by epsilon elimination."""
    counter = itertools.count()
    eps = []
    trans = []

    def build(e):
        # returns (start, end); the fragment accepts into its single end
        if isinstance(e, RSym):
            s, t = next(counter), next(counter)
            trans.append((s, e, t))
            return s, t
        if isinstance(e, RCat):
            s1, t1 = build(e.left)
            s2, t2 = build(e.right)
            eps.append((t1, s2))
            return s1, t2
        if isinstance(e, RAlt):
            s, t = next(counter), next(counter)
            s1, t1 = build(e.left)
            s2, t2 = build(e.right)
            eps.extend([(s, s1), (s, s2), (t1, t), (t2, t)])
            return s, t
        if isinstance(e, RStar):
            s, t = next(counter), next(counter)
            s1, t1 = build(e.arg)
            eps.extend([(s, s1), (t1, t), (s, t), (t1, s1)])
            return s, t
        raise TypeError("not a regex: %r" % (e,))

    start, end = build(e)

    # epsilon closure
    states = set(range(next(counter)))
    closure = {s: {s} for s in states}
    changed = True
    while changed:
        changed = False
        for (a, b) in eps:
            for s in states:
                if a in closure[s] and b not in closure[s]:
                    closure[s].add(b)
                    changed = True
    new_trans = set()
    for (s, sym, t) in trans:
        for q in states:
            if s in closure[q]:
                new_trans.add((q, sym, t))
    finals = {s for s in states if end in closure[s]}
    return NFA(frozenset(states), start, frozenset(new_trans),
               frozenset(finals))


def sub_nfa(b, s, s2):
    """The same NFA with initial state s and final states {s2}."""
    if s not in b.states or s2 not in b.states:
        raise ValueError("unknown NFA state")
    return NFA(b.states, s, b.transitions, frozenset({s2}))


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QAtom:
    regex: object
    left: object   # ('var', x) or ('const', a)
    right: object

    def __str__(self):
        return "%s(%s,%s)" % (self.regex, self.left[1], self.right[1])


@dataclass(frozen=True)
class QAnd:
    left: object
    right: object


@dataclass(frozen=True)
class QOr:
    left: object
    right: object


@dataclass
class PRPQ:
    variables: tuple
    formula: object

    def constants(self):
        out = set()

        def walk(f):
            if isinstance(f, QAtom):
                for t in (f.left, f.right):
                    if t[0] == "const":
                        out.add(t[1])
            else:
                walk(f.left)
                walk(f.right)
        walk(self.formula)
        return out


@dataclass
class CRPQ:
    atoms: tuple

    def variables(self):
        out = []
        for a in self.atoms:
            for t in (a.left, a.right):
                if t[0] == "var" and t[1] not in out:
                    out.append(t[1])
        return out

    def constants(self):
        out = set()
        for a in self.atoms:
            for t in (a.left, a.right):
                if t[0] == "const":
                    out.add(t[1])
        return out


def parse_query(text, lineno=None):
    """Parse the query text format into a PRPQ."""
    text = text.strip()
    variables = ()
    if text.startswith("exists "):
        head, dot, body = text[len("exists "):].partition(".")
        if not dot:
            raise ParseError("missing '.' after variable list", lineno)
        variables = tuple(v.strip() for v in head.split(",") if v.strip())
        for v in variables:
            if not v.isidentifier():
                raise ParseError("bad variable name %r" % v, lineno)
        text = body.strip()
    tokens = _tokenize_query(text, lineno)
    parser = _QueryParser(tokens, variables, lineno)
    formula = parser.parse_or()
    if parser.pos != len(tokens):
        raise ParseError("trailing query input", lineno)
    return PRPQ(variables, formula)


def _tokenize_query(text, lineno):
    """Atoms are space-free chunks like E(x,y); a '(' opening a chunk that
    contains whitespace before its matching close is a grouping paren."""
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == ")":
            tokens.append(")")
            i += 1
            continue
        if c == "(":
            depth = 0
            j = i
            close = None
            while j < n:
                if text[j] == "(":
                    depth += 1
                elif text[j] == ")":
                    depth -= 1
                    if depth == 0:
                        close = j
                        break
                j += 1
            if close is None:
                raise ParseError("unbalanced '(' in query", lineno)
            if any(ch.isspace() for ch in text[i:close + 1]):
                tokens.append("(")
                i += 1
                continue
            # otherwise the paren starts an atom chunk; fall through
        j = i
        depth = 0
        while j < n:
            ch = text[j]
            if ch.isspace() and depth == 0:
                break
            if ch == "(":
                depth += 1
            elif ch == ")":
                if depth == 0:
                    break
                depth -= 1
            j += 1
        tokens.append(text[i:j])
        i = j
    return tokens


class _QueryParser:
    def __init__(self, tokens, variables, lineno):
        self.tokens = tokens
        self.variables = variables
        self.pos = 0
        self.lineno = lineno

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of query", self.lineno)
        self.pos += 1
        return tok

    def parse_or(self):
        left = self.parse_and()
        while self.peek() == "or":
            self.next()
            left = QOr(left, self.parse_and())
        return left

    def parse_and(self):
        left = self.parse_primary()
        while self.peek() == "and":
            self.next()
            left = QAnd(left, self.parse_primary())
        return left

    def parse_primary(self):
        tok = self.next()
        if tok == "(":
            inner = self.parse_or()
            if self.next() != ")":
                raise ParseError("expected ')'", self.lineno)
            return inner
        # atom: REGEX(args)
        if not tok.endswith(")") or "(" not in tok:
            raise ParseError("expected an atom, got %r" % tok, self.lineno)
        # the argument list is the last parenthesized group
        depth = 0
        split = None
        for idx in range(len(tok) - 1, -1, -1):
            ch = tok[idx]
            if ch == ")":
                depth += 1
            elif ch == "(":
                depth -= 1
                if depth == 0:
                    split = idx
                    break
        regex_text = tok[:split]
        args = [a.strip() for a in tok[split + 1:-1].split(",")]
        if len(args) == 1:
            # A(x) abbreviates A?(x,x)
            regex = RSym("test", regex_text)
            t = self.term(args[0])
            return QAtom(regex, t, t)
        if len(args) != 2:
            raise ParseError("atoms take 1 or 2 terms", self.lineno)
        regex = parse_regex(regex_text, self.lineno)
        return QAtom(regex, self.term(args[0]), self.term(args[1]))

    def term(self, name):
        if name in self.variables:
            return ("var", name)
        return ("const", name)


# ---------------------------------------------------------------------------
# DNF, hat rewriting
# ---------------------------------------------------------------------------

def to_crpq_disjuncts(q):
    """Lazily enumerate the CRPQ disjuncts of a PRPQ (restartable: each
    call returns a fresh generator)."""

    def walk(f):
        if isinstance(f, QAtom):
            yield (f,)
        elif isinstance(f, QOr):
            yield from walk(f.left)
            yield from walk(f.right)
        elif isinstance(f, QAnd):
            for left in walk(f.left):
                for right in walk(f.right):
                    yield left + right
        else:
            raise TypeError("not a query formula: %r" % (f,))

    return (CRPQ(atoms) for atoms in walk(q.formula))


def hat(p, sig):
    """Replace r / r- for transitive r with r.r* / r-.(r-)*."""

    def rewrite(e):
        if isinstance(e, RSym):
            if e.kind in ("role", "inv") and e.name in sig.transitive:
                return RCat(e, RStar(e))
            return e
        if isinstance(e, RCat):
            return RCat(rewrite(e.left), rewrite(e.right))
        if isinstance(e, RAlt):
            return RAlt(rewrite(e.left), rewrite(e.right))
        if isinstance(e, RStar):
            return RStar(rewrite(e.arg))
        raise TypeError("not a regex: %r" % (e,))

    return CRPQ(tuple(QAtom(rewrite(a.regex), a.left, a.right)
                      for a in p.atoms))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _sym_pairs(i, sym):
    if sym.kind == "role":
        return set(i.role_pairs(sym.name))
    if sym.kind == "inv":
        return {(e, d) for (d, e) in i.role_pairs(sym.name)}
    return {(d, d) for d in i.concept_members(sym.name)}


def atom_relation(i, b):
    """All pairs (d, e) connected by a word of L(b) in i, via reachability
    in the product of b and the graph."""
    edges = {}
    for sym in b.alphabet():
        for (d, e) in _sym_pairs(i, sym):
            edges.setdefault((d, sym), set()).add(e)
    out = set()
    for d in i.domain:
        reach = {(d, b.initial)}
        frontier = [(d, b.initial)]
        while frontier:
            x, s = frontier.pop()
            for (s1, sym, t) in b.transitions:
                if s1 != s:
                    continue
                for e in edges.get((x, sym), ()):
                    if (e, t) not in reach:
                        reach.add((e, t))
                        frontier.append((e, t))
        for (e, s) in reach:
            if s in b.finals:
                out.add((d, e))
    return out


def eval_crpq(i, p):
    """A match for the CRPQ p in i, or None."""
    relations = []
    for a in p.atoms:
        b = regex_to_nfa(a.regex)
        relations.append(atom_relation(i, b))
    assignment = {}
    for c in p.constants():
        if c not in i.domain:
            return None
        assignment[c] = c

    def term_value(t):
        if t[0] == "const":
            return t[1]
        return assignment.get(t[1])

    # most-constrained-first: variables by descending atom occurrence count
    occurrences = {}
    for a in p.atoms:
        for t in (a.left, a.right):
            if t[0] == "var":
                occurrences[t[1]] = occurrences.get(t[1], 0) + 1
    variables = sorted(occurrences, key=lambda v: (-occurrences[v], v))

    def consistent():
        for a, rel in zip(p.atoms, relations):
            l, r = term_value(a.left), term_value(a.right)
            if l is not None and r is not None and (l, r) not in rel:
                return False
        return True

    def search(idx):
        if not consistent():
            return False
        if idx == len(variables):
            return True
        v = variables[idx]
        for d in sorted(i.domain):
            assignment[v] = d
            if search(idx + 1):
                return True
            del assignment[v]
        return False

    if search(0):
        return dict(assignment)
    return None


def eval_prpq(i, q):
    """A match for the PRPQ q in i, or None."""
    for p in to_crpq_disjuncts(q):
        m = eval_crpq(i, p)
        if m is not None:
            filler = min(i.domain) if i.domain else None
            for v in q.variables:
                m.setdefault(v, filler)
            return m
    return None


# ---------------------------------------------------------------------------
# Witness sequences over encoded trees
# ---------------------------------------------------------------------------

def local_pairs(i, b, s, s2):
    """Pairs related by B_{s,s2} within a single bag interpretation."""
    return atom_relation(i, sub_nfa(b, s, s2))


def check_witness_sequence(tree, b, seq, expected_start=None,
                           expected_end=None):
    """Check a witness sequence for one regular-path atom over a tree.

    seq alternates (element, state) pairs and node ids:
    [(d0,s0), w1, (d1,s1), ..., wn, (dn,sn)].  Checks that s0 is initial
    and sn final, that the optional expected endpoint classes match, and
    that every step happens inside one bag whose node is reached without
    losing the carried element.
    """
    from . import encoding

    if len(seq) < 1 or len(seq) % 2 == 0:
        raise ValueError("malformed sequence shape")
    pairs = seq[0::2]
    nodes = seq[1::2]
    for p in pairs:
        if not (isinstance(p, tuple) and len(p) == 2):
            raise ValueError("malformed sequence shape")
    d0, s0 = pairs[0]
    dn, sn = pairs[-1]
    if s0 != b.initial or sn not in b.finals:
        return False
    if not nodes:
        # empty path: no bag is visited, so endpoint occurrences can only
        # be compared with each other
        if expected_start is not None and expected_start[1] != d0:
            return False
        if expected_end is not None and expected_end[1] != dn:
            return False
        if expected_start is not None and expected_end is not None:
            return encoding.same_class(tree, expected_start, expected_end)
        return True
    if expected_start is not None:
        if not encoding.same_class(tree, expected_start, (nodes[0], d0)):
            return False
    if expected_end is not None:
        if not encoding.same_class(tree, expected_end, (nodes[-1], dn)):
            return False
    for idx, w in enumerate(nodes):
        dprev, sprev = pairs[idx]
        dcur, scur = pairs[idx + 1]
        label = tree.label_of(w)
        if label is encoding.STAR:
            return False
        bag = label.interpretation
        if dprev not in bag.domain or dcur not in bag.domain:
            return False
        if idx > 0:
            if not encoding.same_class(tree, (nodes[idx - 1], dprev),
                                       (w, dprev)):
                return False
        if (dprev, dcur) not in local_pairs(bag, b, sprev, scur):
            return False
    return True


# ---------------------------------------------------------------------------
# Countermodel search
# ---------------------------------------------------------------------------

def _transitive_relations(elements, forced):
    """Enumerate transitively closed relations over elements containing the
    forced pairs, by DFS over pairs with transitivity pruning."""
    elements = list(elements)
    pairs = [(d, e) for d in elements for e in elements]
    chosen = {}

    def ok(p, value):
        a, b2 = p
        if value:
            # new edge must not compose with a decided edge into a
            # decided non-edge
            for x in elements:
                if chosen.get((x, a)) and chosen.get((x, b2)) is False:
                    return False
                if chosen.get((b2, x)) and chosen.get((a, x)) is False:
                    return False
        else:
            for x in elements:
                if chosen.get((a, x)) and chosen.get((x, b2)):
                    return False
        return True

    def rec(idx):
        if idx == len(pairs):
            yield {p for p, v in chosen.items() if v}
            return
        p = pairs[idx]
        values = (True,) if p in forced else (False, True)
        for value in values:
            if ok(p, value):
                chosen[p] = value
                yield from rec(idx + 1)
                del chosen[p]

    yield from rec(0)


def _three_valued(i_labels, domain, c, counts_possible):
    """Kleene evaluation with unknown role structure.  Returns a dict
    element -> 'T' | 'F' | 'U'."""
    T, F, U = "T", "F", "U"
    if isinstance(c, dlcore.Top):
        return {d: T for d in domain}
    if isinstance(c, dlcore.Bot):
        return {d: F for d in domain}
    if isinstance(c, dlcore.Atom):
        members = i_labels.get(c.name, set())
        return {d: (T if d in members else F) for d in domain}
    if isinstance(c, dlcore.Not):
        inner = _three_valued(i_labels, domain, c.arg, counts_possible)
        flip = {T: F, F: T, U: U}
        return {d: flip[v] for d, v in inner.items()}
    if isinstance(c, (dlcore.And, dlcore.Or)):
        lv = _three_valued(i_labels, domain, c.left, counts_possible)
        rv = _three_valued(i_labels, domain, c.right, counts_possible)
        out = {}
        for d in domain:
            a, b2 = lv[d], rv[d]
            if isinstance(c, dlcore.And):
                out[d] = F if F in (a, b2) else (T if (a, b2) == (T, T) else U)
            else:
                out[d] = T if T in (a, b2) else (F if (a, b2) == (F, F) else U)
        return out
    if isinstance(c, (dlcore.Exists, dlcore.Forall)):
        return _three_valued(i_labels, domain, dlcore.nnf(c), counts_possible)
    if isinstance(c, (dlcore.AtLeast, dlcore.AtMost)):
        inner = _three_valued(i_labels, domain, c.arg, counts_possible)
        possible = sum(1 for d in domain if inner[d] != F)
        out = {}
        for d in domain:
            if isinstance(c, dlcore.AtLeast):
                out[d] = F if possible < c.n else U
            else:
                out[d] = T if possible <= c.n else U
        return out
    raise TypeError("not a concept: %r" % (c,))


def _labeling_plausible(kb, labels, domain):
    for c, d in kb.tbox:
        lv = _three_valued(labels, domain, c, None)
        rv = _three_valued(labels, domain, d, None)
        for el in domain:
            if lv[el] == "T" and rv[el] == "F":
                return False
    return True


def countermodel_search(kb, q, max_size):
    """Search for a model of kb of size <= max_size with no match for q.

    Returns (interpretation, 'countermodel') if found, (None, 'unknown')
    otherwise.  Exhaustion certifies nothing.
    """
    individuals = sorted(kb.individuals())
    if max_size < len(individuals):
        raise ValueError("max_size smaller than the number of individuals")
    concept_names = sorted(kb.signature.concept_names)
    role_names = sorted(kb.signature.role_names)
    forced_labels = {}
    forced_edges = {}
    for a in kb.abox:
        if isinstance(a, dlcore.ConceptAssertion):
            forced_labels.setdefault(a.concept, set()).add(a.individual)
        else:
            forced_edges.setdefault(a.role, set()).add((a.subject, a.object))

    for size in range(max(1, len(individuals)), max_size + 1):
        domain = individuals + ["x%d" % j for j in
                                range(size - len(individuals))]
        anon = domain[len(individuals):]
        bits = [(d, a) for a in concept_names for d in domain]
        free_bits = [ba for ba in bits
                     if ba[0] not in forced_labels.get(ba[1], set())]

        def labelings():
            # ascending number of extra labels; forced ABox labels always on
            for count in range(len(free_bits) + 1):
                for extra in itertools.combinations(free_bits, count):
                    labels = {a: set(es) for a, es in forced_labels.items()}
                    for d, a in extra:
                        labels.setdefault(a, set()).add(d)
                    yield labels

        for labels in labelings():
            # cheap canonical ordering: anonymous elements carry
            # non-decreasing label bitmasks
            masks = []
            for d in anon:
                masks.append(tuple(a for a in concept_names
                                   if d in labels.get(a, set())))
            if any(masks[j] > masks[j + 1] for j in range(len(masks) - 1)):
                continue
            if not _labeling_plausible(kb, labels, domain):
                continue

            def role_choices(idx, roles):
                if idx == len(role_names):
                    yield dict(roles)
                    return
                r = role_names[idx]
                forced = forced_edges.get(r, set())
                if r in kb.signature.transitive:
                    for rel in _transitive_relations(domain, forced):
                        roles[r] = rel
                        yield from role_choices(idx + 1, roles)
                        del roles[r]
                else:
                    all_pairs = [(d, e) for d in domain for e in domain
                                 if (d, e) not in forced]
                    for count in range(len(all_pairs) + 1):
                        for extra in itertools.combinations(all_pairs, count):
                            roles[r] = forced | set(extra)
                            yield from role_choices(idx + 1, roles)
                            del roles[r]

            for roles in role_choices(0, {}):
                i = dlcore.Interpretation(domain, labels, roles,
                                          kb.signature.transitive)
                if not i.is_closed():
                    continue
                ok, _ = dlcore.models(i, kb)
                if not ok:
                    continue
                if eval_prpq(i, q) is None:
                    return i, "countermodel"
    return None, "unknown"
