"""Core description-logic machinery.

Abstract syntax for concepts with qualified number restrictions (usable on
transitive roles), knowledge bases (TBox inclusions plus ABox assertions),
finite interpretations as labeled graphs, model checking, cluster machinery
for transitive roles, and the breadth/width pruning of models.

Text formats
------------
Knowledge base (line based, '#' starts a comment):

    transitive r
    C subclassof D
    A(a)
    r(a,b)

Concept grammar:

    top | bot | NAME | not C | (C) | C and C | C or C
    | atmost N ROLE C | atleast N ROLE C | exists ROLE C | forall ROLE C

'and' binds tighter than 'or'; prefix operators (not, atmost, atleast,
exists, forall) take the longest concept to their right.

Interpretation (line based, '#' starts a comment):

    elem d1 d2 ...
    label A: d1 d2 ...
    edge r: d1 d2, d3 d4, ...
"""

from dataclasses import dataclass, field
import itertools
import warnings


# ---------------------------------------------------------------------------
# Concept abstract syntax
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Concept:
    pass


@dataclass(frozen=True)
class Top(Concept):
    def __str__(self):
        return "top"


@dataclass(frozen=True)
class Bot(Concept):
    def __str__(self):
        return "bot"


@dataclass(frozen=True)
class Atom(Concept):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Not(Concept):
    arg: Concept

    def __str__(self):
        return "not (%s)" % self.arg


@dataclass(frozen=True)
class And(Concept):
    left: Concept
    right: Concept

    def __str__(self):
        return "(%s) and (%s)" % (self.left, self.right)


@dataclass(frozen=True)
class Or(Concept):
    left: Concept
    right: Concept

    def __str__(self):
        return "(%s) or (%s)" % (self.left, self.right)


@dataclass(frozen=True)
class AtMost(Concept):
    n: int
    role: str
    arg: Concept

    def __str__(self):
        return "atmost %d %s (%s)" % (self.n, self.role, self.arg)


@dataclass(frozen=True)
class AtLeast(Concept):
    n: int
    role: str
    arg: Concept

    def __str__(self):
        return "atleast %d %s (%s)" % (self.n, self.role, self.arg)


@dataclass(frozen=True)
class Exists(Concept):
    role: str
    arg: Concept

    def __str__(self):
        return "exists %s (%s)" % (self.role, self.arg)


@dataclass(frozen=True)
class Forall(Concept):
    role: str
    arg: Concept

    def __str__(self):
        return "forall %s (%s)" % (self.role, self.arg)


# ---------------------------------------------------------------------------
# Signature, knowledge base
# ---------------------------------------------------------------------------

@dataclass
class Signature:
    concept_names: set = field(default_factory=set)
    role_names: set = field(default_factory=set)
    transitive: set = field(default_factory=set)
    individuals: set = field(default_factory=set)


@dataclass(frozen=True)
class ConceptAssertion:
    concept: str
    individual: str

    def __str__(self):
        return "%s(%s)" % (self.concept, self.individual)


@dataclass(frozen=True)
class RoleAssertion:
    role: str
    subject: str
    object: str

    def __str__(self):
        return "%s(%s,%s)" % (self.role, self.subject, self.object)


@dataclass
class KB:
    tbox: list  # list of (Concept, Concept) inclusions
    abox: list  # list of ConceptAssertion / RoleAssertion
    signature: Signature

    def individuals(self):
        out = set()
        for a in self.abox:
            if isinstance(a, ConceptAssertion):
                out.add(a.individual)
            else:
                out.add(a.subject)
                out.add(a.object)
        return out


class ParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = " at line %d" % line
            if column is not None:
                where += ", column %d" % column
        super().__init__(message + where)


_KEYWORDS = {"top", "bot", "not", "and", "or", "atmost", "atleast",
             "exists", "forall"}


def _tokenize(text, lineno):
    tokens = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "()":
            tokens.append((c, i))
            i += 1
            continue
        j = i
        while j < len(text) and not text[j].isspace() and text[j] not in "()":
            j += 1
        tokens.append((text[i:j], i))
        i = j
    return tokens


class _ConceptParser:
    def __init__(self, tokens, lineno):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno

    def peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][0]
        return None

    def next(self):
        if self.pos >= len(self.tokens):
            raise ParseError("unexpected end of concept", self.lineno)
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_name(self, what):
        tok, col = self.next()
        if tok in _KEYWORDS or tok in "()":
            raise ParseError("expected %s, got %r" % (what, tok),
                             self.lineno, col)
        return tok

    def parse_concept(self):
        left = self.parse_and()
        while self.peek() == "or":
            self.next()
            right = self.parse_and()
            left = Or(left, right)
        return left

    def parse_and(self):
        left = self.parse_primary()
        while self.peek() == "and":
            self.next()
            right = self.parse_primary()
            left = And(left, right)
        return left

    def parse_primary(self):
        tok, col = self.next()
        if tok == "top":
            return Top()
        if tok == "bot":
            return Bot()
        if tok == "(":
            inner = self.parse_concept()
            closing, ccol = self.next()
            if closing != ")":
                raise ParseError("expected ')'", self.lineno, ccol)
            return inner
        if tok == "not":
            return Not(self.parse_concept())
        if tok in ("atmost", "atleast"):
            ntok, ncol = self.next()
            try:
                n = int(ntok, 10)
            except ValueError:
                raise ParseError("expected a number after %r" % tok,
                                 self.lineno, ncol)
            if n < 0:
                raise ParseError("negative number restriction", self.lineno, ncol)
            role = self.expect_name("a role name")
            arg = self.parse_concept()
            if tok == "atmost":
                return AtMost(n, role, arg)
            if n == 0:
                raise ParseError("atleast requires a positive number",
                                 self.lineno, ncol)
            return AtLeast(n, role, arg)
        if tok in ("exists", "forall"):
            role = self.expect_name("a role name")
            arg = self.parse_concept()
            if tok == "exists":
                return Exists(role, arg)
            return Forall(role, arg)
        if tok in _KEYWORDS or tok == ")":
            raise ParseError("unexpected token %r" % tok, self.lineno, col)
        return Atom(tok)


def parse_concept(text, lineno=None):
    parser = _ConceptParser(_tokenize(text, lineno), lineno)
    c = parser.parse_concept()
    if parser.pos != len(parser.tokens):
        tok, col = parser.tokens[parser.pos]
        raise ParseError("trailing input %r" % tok, lineno, col)
    return c


def _collect_names(c, sig):
    if isinstance(c, Atom):
        sig.concept_names.add(c.name)
    elif isinstance(c, Not):
        _collect_names(c.arg, sig)
    elif isinstance(c, (And, Or)):
        _collect_names(c.left, sig)
        _collect_names(c.right, sig)
    elif isinstance(c, (AtMost, AtLeast, Exists, Forall)):
        sig.role_names.add(c.role)
        _collect_names(c.arg, sig)


def parse_kb(text):
    """Parse the line-based knowledge base format into a KB."""
    sig = Signature()
    tbox = []
    abox = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("transitive "):
            role = line[len("transitive "):].strip()
            if not role or " " in role:
                raise ParseError("bad transitive declaration", lineno)
            sig.role_names.add(role)
            sig.transitive.add(role)
            continue
        if " subclassof " in line:
            left, right = line.split(" subclassof ", 1)
            c = parse_concept(left, lineno)
            d = parse_concept(right, lineno)
            _collect_names(c, sig)
            _collect_names(d, sig)
            tbox.append((c, d))
            continue
        if line.endswith(")") and "(" in line:
            name, rest = line.split("(", 1)
            name = name.strip()
            args = [a.strip() for a in rest[:-1].split(",")]
            if not name or name in _KEYWORDS:
                raise ParseError("bad assertion head %r" % name, lineno)
            if len(args) == 1:
                sig.concept_names.add(name)
                sig.individuals.add(args[0])
                abox.append(ConceptAssertion(name, args[0]))
            elif len(args) == 2:
                sig.role_names.add(name)
                sig.individuals.update(args)
                abox.append(RoleAssertion(name, args[0], args[1]))
            else:
                raise ParseError("assertions take 1 or 2 arguments", lineno)
            continue
        raise ParseError("unrecognized line %r" % line, lineno)
    return KB(tbox, abox, sig)


def kb_to_text(kb):
    lines = []
    for r in sorted(kb.signature.transitive):
        lines.append("transitive %s" % r)
    for c, d in kb.tbox:
        lines.append("%s subclassof %s" % (c, d))
    for a in kb.abox:
        lines.append(str(a))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Negation normal form, closure
# ---------------------------------------------------------------------------

def nnf(c):
    """Negation normal form with abbreviations desugared.

    The result uses only Top, Bot, Atom, Not(Atom), And, Or, AtMost and
    AtLeast, with negation in front of atoms only.
    """
    if isinstance(c, (Top, Bot, Atom)):
        return c
    if isinstance(c, And):
        return And(nnf(c.left), nnf(c.right))
    if isinstance(c, Or):
        return Or(nnf(c.left), nnf(c.right))
    if isinstance(c, AtMost):
        return AtMost(c.n, c.role, nnf(c.arg))
    if isinstance(c, AtLeast):
        return AtLeast(c.n, c.role, nnf(c.arg))
    if isinstance(c, Exists):
        return AtLeast(1, c.role, nnf(c.arg))
    if isinstance(c, Forall):
        return AtMost(0, c.role, nnf(Not(c.arg)))
    if isinstance(c, Not):
        a = c.arg
        if isinstance(a, Top):
            return Bot()
        if isinstance(a, Bot):
            return Top()
        if isinstance(a, Atom):
            return c
        if isinstance(a, Not):
            return nnf(a.arg)
        if isinstance(a, And):
            return Or(nnf(Not(a.left)), nnf(Not(a.right)))
        if isinstance(a, Or):
            return And(nnf(Not(a.left)), nnf(Not(a.right)))
        if isinstance(a, AtMost):
            return AtLeast(a.n + 1, a.role, nnf(a.arg))
        if isinstance(a, AtLeast):
            return AtMost(a.n - 1, a.role, nnf(a.arg))
        if isinstance(a, Exists):
            return AtMost(0, a.role, nnf(a.arg))
        if isinstance(a, Forall):
            return AtLeast(1, a.role, nnf(Not(a.arg)))
    raise TypeError("not a concept: %r" % (c,))


def negate(c):
    """NNF of the negation of c."""
    return nnf(Not(c))


def subconcepts(c):
    out = {c}
    if isinstance(c, Not):
        out |= subconcepts(c.arg)
    elif isinstance(c, (And, Or)):
        out |= subconcepts(c.left)
        out |= subconcepts(c.right)
    elif isinstance(c, (AtMost, AtLeast, Exists, Forall)):
        out |= subconcepts(c.arg)
    return out


def closure(tbox):
    """Subconcepts of the (NNF'd) TBox, closed under single negation."""
    base = set()
    for c, d in tbox:
        base |= subconcepts(nnf(c))
        base |= subconcepts(nnf(d))
    out = set()
    for c in base:
        out.add(c)
        out.add(negate(c))
    return out


def max_number(tbox):
    """The maximal number appearing in the TBox (at least 1)."""
    m = 1
    for c, d in tbox:
        for s in subconcepts(nnf(c)) | subconcepts(nnf(d)):
            if isinstance(s, (AtMost, AtLeast)):
                m = max(m, s.n)
    return m


# ---------------------------------------------------------------------------
# Interpretations
# ---------------------------------------------------------------------------

class Interpretation:
    """A finite interpretation: labeled graph with transitive-role closure.

    Immutable after construction; hashable so it can key memo tables.
    """

    __slots__ = ("domain", "concepts", "roles", "transitive", "_hash", "_key")

    def __init__(self, domain, concepts, roles, transitive):
        self.domain = frozenset(domain)
        self.concepts = {}
        for a, es in concepts.items():
            members = frozenset(es) & self.domain
            if members:
                self.concepts[a] = members
        self.roles = {}
        for r, pairs in roles.items():
            ps = frozenset((d, e) for d, e in pairs
                           if d in self.domain and e in self.domain)
            if ps:
                self.roles[r] = ps
        self.transitive = frozenset(transitive)
        self._key = (self.domain,
                     tuple(sorted((a, tuple(sorted(es)))
                                  for a, es in self.concepts.items())),
                     tuple(sorted((r, tuple(sorted(ps)))
                                  for r, ps in self.roles.items())),
                     self.transitive)
        self._hash = hash(self._key)

    def __eq__(self, other):
        return isinstance(other, Interpretation) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "Interpretation(%d elems)" % len(self.domain)

    def concept_members(self, name):
        return self.concepts.get(name, frozenset())

    def role_pairs(self, name):
        return self.roles.get(name, frozenset())

    def successors(self, role, d):
        return {e for (x, e) in self.role_pairs(role) if x == d}

    def predecessors(self, role, d):
        return {x for (x, e) in self.role_pairs(role) if e == d}

    def is_closed(self):
        for r in self.transitive:
            pairs = self.role_pairs(r)
            if pairs != transitive_closure(pairs):
                return False
        return True

    def close(self):
        roles = dict(self.roles)
        for r in self.transitive:
            if r in roles:
                roles[r] = transitive_closure(roles[r])
        return Interpretation(self.domain, self.concepts, roles,
                              self.transitive)

    def restrict(self, subset):
        subset = frozenset(subset)
        return Interpretation(self.domain & subset, self.concepts,
                              self.roles, self.transitive)

    def labels_of(self, d):
        return frozenset(a for a, es in self.concepts.items() if d in es)

    def rename(self, mapping):
        """Apply an injective renaming to the domain."""
        m = dict(mapping)
        if len(set(m.values())) != len(m):
            raise ValueError("renaming is not injective")
        domain = {m.get(d, d) for d in self.domain}
        concepts = {a: {m.get(d, d) for d in es}
                    for a, es in self.concepts.items()}
        roles = {r: {(m.get(d, d), m.get(e, e)) for (d, e) in ps}
                 for r, ps in self.roles.items()}
        return Interpretation(domain, concepts, roles, self.transitive)


def transitive_closure(pairs):
    pairs = set(pairs)
    succ = {}
    for d, e in pairs:
        succ.setdefault(d, set()).add(e)
    changed = True
    while changed:
        changed = False
        for d in list(succ):
            new = set()
            for e in succ[d]:
                new |= succ.get(e, set())
            if not new <= succ[d]:
                succ[d] |= new
                changed = True
    return frozenset((d, e) for d, es in succ.items() for e in es)


def parse_interpretation(text, transitive=()):
    """Parse the interpretation text format.

    Transitive closure is applied on load; a warning is emitted if the
    input was not already closed.
    """
    domain = set()
    concepts = {}
    roles = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("elem "):
            domain.update(line.split()[1:])
            continue
        if line.startswith("label "):
            rest = line[len("label "):]
            if ":" not in rest:
                raise ParseError("label line needs ':'", lineno)
            name, elems = rest.split(":", 1)
            name = name.strip()
            es = elems.split()
            concepts.setdefault(name, set()).update(es)
            domain.update(es)
            continue
        if line.startswith("edge "):
            rest = line[len("edge "):]
            if ":" not in rest:
                raise ParseError("edge line needs ':'", lineno)
            name, pairs = rest.split(":", 1)
            name = name.strip()
            for chunk in pairs.split(","):
                chunk = chunk.strip()
                if not chunk:
                    continue
                parts = chunk.split()
                if len(parts) != 2:
                    raise ParseError("edge pairs are two element ids", lineno)
                roles.setdefault(name, set()).add((parts[0], parts[1]))
                domain.update(parts)
            continue
        raise ParseError("unrecognized line %r" % line, lineno)
    i = Interpretation(domain, concepts, roles, transitive)
    closed = i.close()
    if closed != i:
        warnings.warn("interpretation was not transitively closed; "
                      "closure applied on load")
    return closed


def interpretation_to_text(i):
    lines = []
    if i.domain:
        lines.append("elem " + " ".join(sorted(i.domain)))
    for a in sorted(i.concepts):
        lines.append("label %s: %s" % (a, " ".join(sorted(i.concepts[a]))))
    for r in sorted(i.roles):
        pairs = ", ".join("%s %s" % p for p in sorted(i.roles[r]))
        lines.append("edge %s: %s" % (r, pairs))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Semantics
# ---------------------------------------------------------------------------

def extension(i, c):
    """The set of elements of i satisfying concept c, computed bottom-up."""
    if isinstance(c, Top):
        return set(i.domain)
    if isinstance(c, Bot):
        return set()
    if isinstance(c, Atom):
        return set(i.concept_members(c.name))
    if isinstance(c, Not):
        return set(i.domain) - extension(i, c.arg)
    if isinstance(c, And):
        return extension(i, c.left) & extension(i, c.right)
    if isinstance(c, Or):
        return extension(i, c.left) | extension(i, c.right)
    if isinstance(c, Exists):
        return extension(i, AtLeast(1, c.role, c.arg))
    if isinstance(c, Forall):
        return extension(i, AtMost(0, c.role, Not(c.arg)))
    if isinstance(c, (AtMost, AtLeast)):
        inner = extension(i, c.arg)
        counts = {d: 0 for d in i.domain}
        for d, e in i.role_pairs(c.role):
            if e in inner:
                counts[d] += 1
        if isinstance(c, AtMost):
            return {d for d, k in counts.items() if k <= c.n}
        return {d for d, k in counts.items() if k >= c.n}
    raise TypeError("not a concept: %r" % (c,))


def models(i, kb):
    """Check i |= kb.

    Returns (True, None) or (False, report) where report names the first
    violated axiom (axiom order, then least element id) and a witness.
    Raises ValueError if a transitive role extension is not closed.
    """
    if not i.is_closed():
        raise ValueError("interpretation violates the transitive-closure "
                         "invariant")
    for c, d in kb.tbox:
        bad = extension(i, c) - extension(i, d)
        if bad:
            witness = min(bad)
            return False, ("inclusion violated: %s subclassof %s "
                           "(witness %s)" % (c, d, witness))
    for a in kb.abox:
        if isinstance(a, ConceptAssertion):
            if a.individual not in i.domain:
                return False, "individual %s missing from domain" % a.individual
            if a.individual not in i.concept_members(a.concept):
                return False, "assertion violated: %s" % a
        else:
            if a.subject not in i.domain or a.object not in i.domain:
                return False, "individual missing from domain for %s" % a
            if (a.subject, a.object) not in i.role_pairs(a.role):
                return False, "assertion violated: %s" % a
    return True, None


# ---------------------------------------------------------------------------
# Clusters, direct successors, width, breadth
# ---------------------------------------------------------------------------

def cluster(i, r, d):
    """The r-cluster of d: d plus all elements mutually r-related to d."""
    if r not in i.transitive:
        raise ValueError("clusters are defined for transitive roles only")
    pairs = i.role_pairs(r)
    return {d} | {e for e in i.domain
                  if (d, e) in pairs and (e, d) in pairs}


def is_root_cluster(i, r, s):
    """True iff s is an r-cluster each member of which reaches every
    element outside s by r."""
    s = set(s)
    if not s:
        return False
    d = next(iter(s))
    if d not in i.domain or cluster(i, r, d) != s:
        return False
    pairs = i.role_pairs(r)
    for d in s:
        for e in i.domain - s:
            if (d, e) not in pairs:
                return False
    return True


def direct_successors(i, r, d):
    """Direct r-successors of d.

    For non-transitive r this is every r-successor.  For transitive r it
    is every r-successor e outside d's cluster such that every strictly
    intermediate element lies in the cluster of d or of e.
    """
    succs = i.successors(r, d)
    if r not in i.transitive:
        return succs
    qd = cluster(i, r, d)
    out = set()
    for e in succs - qd:
        qe = cluster(i, r, e)
        ok = True
        for f in i.domain:
            if (d, f) in i.role_pairs(r) and (f, e) in i.role_pairs(r):
                if f not in qd and f not in qe:
                    ok = False
                    break
        if ok:
            out.add(e)
    return out


def width(i):
    """Maximal r-cluster size over all transitive r and elements (>= 1 when
    the domain is nonempty)."""
    best = 1 if i.domain else 0
    for r in i.transitive:
        for d in i.domain:
            best = max(best, len(cluster(i, r, d)))
    return best


def breadth(i):
    """Maximal number of direct successors, counting one per cluster for
    transitive roles and one per element otherwise."""
    best = 0
    for r in i.roles:
        for d in i.domain:
            ds = direct_successors(i, r, d)
            if r in i.transitive:
                seen = []
                for e in ds:
                    q = cluster(i, r, e)
                    if q not in seen:
                        seen.append(q)
                best = max(best, len(seen))
            else:
                best = max(best, len(ds))
    return best


# ---------------------------------------------------------------------------
# Pruning (breadth stage, then width stage)
# ---------------------------------------------------------------------------

def _clusters_of(i, r):
    """Partition of the support of r into clusters, keyed by least member."""
    reps = {}
    for d in i.domain:
        q = cluster(i, r, d)
        reps[min(q)] = q
    return reps


def prune(i, kb):
    """Shrink a model to bounded breadth and width.

    Keeps the domain and concept labels; removes transitive role edges in
    two stages while preserving the extension of every closure concept.
    Kept successors are chosen by ascending element id.  Raises ValueError
    if i is not a model of kb.
    """
    ok, report = models(i, kb)
    if not ok:
        raise ValueError("prune precondition: input is not a model (%s)"
                         % report)
    cl = sorted(closure(kb.tbox), key=str)
    m_hat = max_number(kb.tbox)
    abox_pairs = {}
    for a in kb.abox:
        if isinstance(a, RoleAssertion):
            abox_pairs.setdefault(a.role, set()).add((a.subject, a.object))

    # Stage 1: bounded breadth (transitive roles only).
    roles = dict(i.roles)
    for r in i.transitive & set(i.roles):
        pairs = i.role_pairs(r)
        ext = {c: extension(i, c) for c in cl}
        kept_for = {}
        for rep, q in _clusters_of(i, r).items():
            d = min(q)
            strict = {e for (x, e) in pairs if x == d} - q
            kept = set()
            for c in cl:
                wc = sorted(e for e in strict if e in ext[c])
                kept.update(wc[:min(m_hat, len(wc))])
            kept_for[rep] = kept
        def kept_of(d):
            return kept_for[min(cluster(i, r, d))]
        s1 = {(d, e) for (d, e) in pairs if e in cluster(i, r, d)}
        s2 = pairs & abox_pairs.get(r, set())
        s3 = {(d, e) for (d, e) in pairs if e in kept_of(d)}
        roles[r] = transitive_closure(s1 | s2 | s3)
    stage1 = Interpretation(i.domain, i.concepts, roles, i.transitive)

    # Stage 2: bounded width.
    roles = dict(stage1.roles)
    individuals = kb.individuals()
    for r in stage1.transitive & set(stage1.roles):
        ext = {c: extension(stage1, c) for c in cl}
        delta_r = set(individuals)
        for rep, q in _clusters_of(stage1, r).items():
            w = set()
            for c in cl:
                qc = sorted(e for e in q if e in ext[c])
                w.update(qc[:min(m_hat, len(qc))])
            delta_r |= w
        roles[r] = {(d, e) for (d, e) in stage1.role_pairs(r) if e in delta_r}
    pruned = Interpretation(stage1.domain, stage1.concepts, roles,
                            stage1.transitive)
    return pruned


# ---------------------------------------------------------------------------
# Random models (shared by the test corpora and the countermodel search)
# ---------------------------------------------------------------------------

def random_interpretation(rng, size, concept_names, role_names, transitive,
                          edge_prob=0.3, label_prob=0.4):
    """A random transitively-closed interpretation for property tests."""
    domain = ["d%d" % j for j in range(size)]
    concepts = {a: {d for d in domain if rng.random() < label_prob}
                for a in concept_names}
    roles = {}
    for r in role_names:
        pairs = {(d, e) for d in domain for e in domain
                 if rng.random() < edge_prob}
        if pairs:
            roles[r] = pairs
    return Interpretation(domain, concepts, roles, transitive).close()
