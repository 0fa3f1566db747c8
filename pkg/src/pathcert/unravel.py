"""Unraveling a finite model into a canonical tree decomposition.

Starting from a pruned model, the construction copies each individual's
transitive-role witnesses into a root bag and then grows a tree of bags:
one rule follows non-transitive edges, one switches the transitive role of
an element, and one descends to the direct successors of a cluster while
carrying the witnesses that at-most restrictions require.  The projection
tau maps every copy back to its source element and is a homomorphism.

The result of a depth-bounded run is a finite prefix; frontier nodes with
unserved rule applications are recorded so that folding can redirect them
to equivalent ancestors.
"""

from dataclasses import dataclass

from . import dlcore, decomposition
from .dlcore import AtMost
from .decomposition import ROOT, ExtTreeDecomposition


# ---------------------------------------------------------------------------
# Witnesses
# ---------------------------------------------------------------------------

@dataclass
class WitnessClosure:
    role: str
    leadsto: frozenset        # pairs (d, e)
    leadsto_star: frozenset   # reflexive-transitive closure
    wit: dict                 # d -> witnesses reachable in >= 1 step
    wit_self: dict            # wit plus the element's own cluster

    def witnesses(self, d):
        return self.wit.get(d, frozenset())

    def witnesses_with_self(self, d):
        return self.wit_self.get(d, frozenset())


def witness_closure(i, tbox, r):
    """The witness sets of every element for a transitive role r.

    d leads to e when some at-most restriction over r holds at d, e
    satisfies its argument concept, and (d,e) is an r-edge.  The exposed
    witness set collects the clusters of all elements reachable in one or
    more steps; the rules additionally count the element's own cluster."""
    if r not in i.transitive:
        raise ValueError("role %s is not transitive" % r)
    constraints = []
    for c in dlcore.closure(tbox):
        if isinstance(c, AtMost) and c.role == r:
            constraints.append(c)
    # the closure contains every at-most subconcept of the axioms, so
    # using it is equivalent to scanning the axioms themselves
    leadsto = set()
    pairs = i.role_pairs(r)
    for c in constraints:
        holders = dlcore.extension(i, c)
        targets = dlcore.extension(i, c.arg)
        for (d, e) in pairs:
            if d in holders and e in targets:
                leadsto.add((d, e))
    star = set(leadsto)
    star |= {(d, d) for d in i.domain}
    star = dlcore.transitive_closure(star)
    strict = dlcore.transitive_closure(leadsto)
    wit = {}
    wit_self = {}
    for d in i.domain:
        reached = {e for (x, e) in strict if x == d}
        w = set()
        for e in reached:
            w |= dlcore.cluster(i, r, e)
        wit[d] = frozenset(w)
        wit_self[d] = frozenset(w | dlcore.cluster(i, r, d))
    return WitnessClosure(r, frozenset(leadsto), frozenset(star), wit,
                          wit_self)


# ---------------------------------------------------------------------------
# Unraveling state
# ---------------------------------------------------------------------------

class UnravelState:
    """Mutable construction state: the growing target interpretation, the
    projection tau, and the tree skeleton (domains and tags per node)."""

    def __init__(self, i, kb, prune_first=True):
        ok, report = dlcore.models(i, kb)
        if not ok:
            raise ValueError("seed is not a model: " + report)
        self.seed = dlcore.prune(i, kb) if prune_first else i
        self.kb = kb
        self.transitive = set(kb.signature.transitive)
        self.nontransitive = sorted(set(self.seed.roles)
                                    - self.transitive)
        self.individuals = sorted(kb.individuals())
        if not self.individuals:
            # documented deviation: with an empty ABox, seed the root from
            # a single distinguished element
            self.individuals = [min(self.seed.domain)]
        self.closures = {r: witness_closure(self.seed, kb.tbox, r)
                         for r in sorted(self.transitive)}
        self.tau = {}
        self.j_domain = []
        self.j_concepts = {}
        self.j_roles = {}
        self.domains = {}     # node -> list of elements
        self.role_tag = {}    # node -> role or None
        self.child_count = {}
        self.root_origin = {}  # root copy -> role it was created for
        self.pending = set()
        self._initialize()

    # -- bookkeeping --------------------------------------------------------

    def add_element(self, name, source):
        self.tau[name] = source
        self.j_domain.append(name)
        for a, es in self.seed.concepts.items():
            if source in es:
                self.j_concepts.setdefault(a, set()).add(name)
        # transitive self-loops mirror the source eagerly; in the limit of
        # the construction every element receives them when its own role
        # structure is served, and carrying them early keeps depth-bounded
        # prefixes foldable
        for s in self.transitive:
            if (source, source) in self.seed.role_pairs(s):
                self.j_roles.setdefault(s, set()).add((name, name))

    def add_edge(self, role, a, b):
        self.j_roles.setdefault(role, set()).add((a, b))

    def mirror_edges(self, role, firsts, seconds):
        """Apply the mirroring condition for the given ordered pairs."""
        pairs = self.seed.role_pairs(role)
        for x in firsts:
            for y in seconds:
                if (self.tau[x], self.tau[y]) in pairs:
                    self.add_edge(role, x, y)

    def close(self):
        for s in self.transitive:
            if s in self.j_roles:
                self.j_roles[s] = set(
                    dlcore.transitive_closure(self.j_roles[s]))

    def target(self):
        return dlcore.Interpretation(self.j_domain, self.j_concepts,
                                     self.j_roles, self.transitive)

    def bag(self, w):
        return self.target().restrict(self.domains[w])

    def new_child(self, w, tag):
        n = self.child_count.get(w, 0) + 1
        self.child_count[w] = n
        v = w + (n,)
        self.role_tag[v] = tag
        return v

    def fresh(self, w):
        if w == ROOT:
            return set(self.domains[w])
        return set(self.domains[w]) - set(self.domains[
            decomposition.parent(w)])

    def role_fresh(self, w, r):
        if w == ROOT:
            return set(self.domains[w])
        if self.role_tag[w] != r:
            return set()
        p = decomposition.parent(w)
        ptag = self.role_tag.get(p)
        if p == ROOT or ptag == r:
            return self.fresh(w)
        return set(self.domains[w])

    # -- initialization -----------------------------------------------------

    def _initialize(self):
        root = list(self.individuals)
        for r in sorted(self.transitive):
            wc = self.closures[r]
            copies = set()
            for a in self.individuals:
                copies |= wc.witnesses_with_self(a)
            for d in sorted(copies - set(self.individuals)):
                name = "%s_%s" % (d, r)
                root.append(name)
                self.root_origin[name] = r
        for a in self.individuals:
            self.tau[a] = a
            self.j_domain.append(a)
            for c, es in self.seed.concepts.items():
                if a in es:
                    self.j_concepts.setdefault(c, set()).add(a)
        # individuals keep their full mutual structure
        ind = set(self.individuals)
        for role, pairs in self.seed.roles.items():
            for (d, e) in pairs:
                if d in ind and e in ind:
                    self.add_edge(role, d, e)
        for name in root:
            if name not in self.tau:
                source = name.rsplit("_", 1)[0]
                self.add_element(name, source)
        for r in sorted(self.transitive):
            members = [x for x in root
                       if x in ind or self.root_origin.get(x) == r]
            self.mirror_edges(r, members, members)
        self.domains[ROOT] = root
        self.role_tag[ROOT] = None

    # -- rules --------------------------------------------------------------

    def applicable(self, w):
        """All rule applications available at node w, in deterministic
        order.  Each entry is a tuple whose first component names the
        rule."""
        out = []
        fresh = sorted(self.fresh(w))
        ind = set(self.individuals)
        for delta in fresh:
            d = self.tau[delta]
            for rn in self.nontransitive:
                for succ in sorted(dlcore.direct_successors(
                        self.seed, rn, d)):
                    if delta in ind and succ in ind:
                        continue
                    out.append(("r1", delta, rn, succ))
        for delta in fresh:
            for r in sorted(self.transitive):
                if w == ROOT:
                    if self.root_origin.get(delta, r) == r:
                        continue
                elif self.role_tag[w] == r:
                    continue
                out.append(("r2", delta, r))
        bag = self.bag(w)
        tag = self.role_tag.get(w)
        for r in sorted(self.transitive):
            if w == ROOT:
                allowed = ind | {x for x, s in self.root_origin.items()
                                 if s == r}
            elif tag == r:
                allowed = set(bag.domain)
            else:
                continue
            frf = self.role_fresh(w, r)
            seen = set()
            for x in sorted(bag.domain):
                a = frozenset(dlcore.cluster(bag, r, x))
                if a in seen:
                    continue
                seen.add(a)
                if not (a <= frf and a <= allowed):
                    continue
                for delta in sorted(a):
                    for e in sorted(dlcore.direct_successors(
                            self.seed, r, self.tau[delta])):
                        out.append(("r3", w, frozenset(a), delta, r, e))
        return out

    def rule_pending(self, entry):
        """Whether a recorded rule application still needs serving."""
        kind = entry[0]
        if kind in ("r1", "r2"):
            return entry not in self.served
        _, w, a, delta, r, e = entry
        pairs = self.j_roles.get(r, set())
        for other, source in self.tau.items():
            if source == e and (delta, other) in pairs:
                return False
        return True

    def serve(self, w, entry):
        kind = entry[0]
        if kind == "r1":
            self.step_r1(w, entry[1], entry[2], entry[3])
        elif kind == "r2":
            self.step_r2(w, entry[1], entry[2])
        else:
            self.step_r3(w, entry[2], entry[3], entry[4], entry[5])
        self.served.add(entry)

    def step_r1(self, w, delta, role, succ):
        v = self.new_child(w, role)
        name = "%s_%s" % (succ, decomposition.node_to_text(v))
        self.add_element(name, succ)
        self.add_edge(role, delta, name)
        self.domains[v] = [delta, name]
        return v

    def step_r2(self, w, delta0, r):
        v = self.new_child(w, r)
        wc = self.closures[r]
        source = self.tau[delta0]
        members = [delta0]
        for e in sorted(wc.witnesses_with_self(source) - {source}):
            name = "%s_%s" % (e, decomposition.node_to_text(v))
            self.add_element(name, e)
            members.append(name)
        self.mirror_edges(r, members, members)
        self.domains[v] = members
        self.close()
        return v

    def step_r3(self, w, a, delta, r, e):
        v = self.new_child(w, r)
        wc = self.closures[r]
        new = []
        source = self.tau[delta]
        for f in sorted(wc.witnesses_with_self(e)
                        - wc.witnesses_with_self(source)):
            name = "%s_%s" % (f, decomposition.node_to_text(v))
            self.add_element(name, f)
            new.append(name)
        bag = self.bag(w)
        carried = set(a)
        for (x, y) in bag.role_pairs(r):
            if x in a:
                carried.add(y)
        members = sorted(carried) + new
        self.mirror_edges(r, sorted(set(a) | set(new)), members)
        self.domains[v] = members
        self.close()
        return v


def initialize(i, kb, prune_first=True):
    """The initial construction state: a single root bag holding the
    individuals and their transitive-role witnesses."""
    return UnravelState(i, kb, prune_first)


def step_r1(state, w, delta, role, succ):
    return state.step_r1(w, delta, role, succ)


def step_r2(state, w, delta0, r):
    return state.step_r2(w, delta0, r)


def step_r3(state, w, a, delta, r, e):
    return state.step_r3(w, a, delta, r, e)


def unravel(i, kb, depth, prune_first=True):
    """Unravel a model of kb into a canonical decomposition, serving rule
    applications breadth-first up to the given tree depth.

    Returns (decomposition, tau).  The decomposition carries two extra
    attributes: pending (frontier nodes with unserved applications) and
    depth_limit."""
    state = UnravelState(i, kb, prune_first)
    state.served = set()
    queue = [ROOT]
    while queue:
        w = queue.pop(0)
        if len(w) >= depth:
            if any(state.rule_pending(entry)
                   for entry in state.applicable(w)):
                state.pending.add(w)
            continue
        progress = True
        while progress:
            progress = False
            for entry in state.applicable(w):
                if not state.rule_pending(entry):
                    continue
                state.serve(w, entry)
                progress = True
        queue.extend(sorted(
            (v for v in state.role_tag if v != ROOT
             and decomposition.parent(v) == w),
            key=lambda v: v[-1]))
    state.close()
    target = state.target()
    bags = {w: target.restrict(state.domains[w]) for w in state.domains}
    dec = ExtTreeDecomposition(bags, state.role_tag, underlying=target,
                               transitive=state.transitive)
    dec.pending = frozenset(state.pending)
    dec.depth_limit = depth
    tau = dict(state.tau)
    return dec, tau


def fold(t, tau):
    """Fold a depth-bounded unraveling into a finite regular tree.

    Frontier nodes with unserved obligations are redirected to an
    equivalent ancestor; see the encoding module for the tree type.
    Raises ValueError (\"unfoldable\") when some frontier node has no
    matching ancestor."""
    from . import encoding
    return encoding.fold_decomposition(t, tau)
