"""Extended tree decompositions of interpretations.

A decomposition is a finite tree of bags (interpretations) plus a role tag
on every non-root node.  Validation checks the four decomposition
conditions; canonicity checks the four structural conditions relating
neighboring bags; the path machinery recovers the successors of an element
for a transitive role from local bag edges only.

Text format (round-trips through parse/print):

    node eps role=bot
      elem a b
      label A: a
      edge r: a b
    node 1 role=r
      elem b c
      edge r: b c
    tau:
      c -> d
"""

from dataclasses import dataclass

from . import dlcore
from .dlcore import ParseError


ROOT = ()


def parent(w):
    if w == ROOT:
        return None
    return w[:-1]


def node_to_text(w):
    if w == ROOT:
        return "eps"
    return ".".join(str(j) for j in w)


def node_from_text(s, lineno=None):
    if s == "eps":
        return ROOT
    try:
        parts = tuple(int(j) for j in s.split("."))
    except ValueError:
        raise ParseError("bad node path %r" % s, lineno)
    if any(j < 1 for j in parts):
        raise ParseError("node indices start at 1", lineno)
    return parts


class ExtTreeDecomposition:
    """Finite extended tree decomposition.

    nodes: prefix-closed set of tuples of child indices, () is the root.
    bags: node -> Interpretation.  role_tag: node -> role name, None at
    the root.  underlying: the decomposed interpretation; if omitted it is
    induced from the bags (union of domains and labels, union of bag edges
    with transitive roles closed).
    """

    def __init__(self, bags, role_tag, underlying=None, transitive=None):
        self.nodes = frozenset(bags)
        self.bags = dict(bags)
        self.role_tag = dict(role_tag)
        if transitive is None:
            transitive = set()
            for bag in self.bags.values():
                transitive |= bag.transitive
            if underlying is not None:
                transitive |= underlying.transitive
        self.transitive = frozenset(transitive)
        if ROOT not in self.nodes:
            raise ValueError("missing root node")
        for w in self.nodes:
            if w != ROOT and parent(w) not in self.nodes:
                raise ValueError("tree not prefix-closed at %s"
                                 % node_to_text(w))
        if underlying is None:
            underlying = self._induced()
        self.underlying = underlying

    def _induced(self):
        domain = set()
        concepts = {}
        roles = {}
        for bag in self.bags.values():
            domain |= bag.domain
            for a, es in bag.concepts.items():
                concepts.setdefault(a, set()).update(es)
            for r, pairs in bag.roles.items():
                roles.setdefault(r, set()).update(pairs)
        for r in self.transitive:
            if r in roles:
                roles[r] = dlcore.transitive_closure(roles[r])
        return dlcore.Interpretation(domain, concepts, roles,
                                     self.transitive)

    def children(self, w):
        out = [v for v in self.nodes if v != ROOT and parent(v) == w]
        return sorted(out)

    def depth(self, w):
        return len(w)

    def bfs_nodes(self):
        return sorted(self.nodes, key=lambda w: (len(w), w))

    def is_ancestor(self, u, w):
        """True iff u is a proper ancestor of w."""
        return len(u) < len(w) and w[:len(u)] == u

    def max_outdegree(self):
        return max([0] + [len(self.children(w)) for w in self.nodes])

    def width(self):
        """Decomposition width: max bag size minus one."""
        return max(len(self.bags[w].domain) for w in self.nodes) - 1

    def to_text(self, tau=None):
        lines = []
        for w in self.bfs_nodes():
            tag = self.role_tag.get(w)
            lines.append("node %s role=%s" % (node_to_text(w), tag or "bot"))
            body = dlcore.interpretation_to_text(self.bags[w])
            for line in body.splitlines():
                lines.append("  " + line)
        if tau is not None:
            lines.append("tau:")
            for src in sorted(tau):
                lines.append("  %s -> %s" % (src, tau[src]))
        return "\n".join(lines) + "\n"


def parse_decomposition(text, transitive=()):
    """Parse the decomposition text format.  Returns (decomposition, tau)
    where tau is None when no tau: section is present."""
    bags = {}
    tags = {}
    tau = None
    current = None  # (node, tag, body lines)
    in_tau = False

    def flush():
        if current is None:
            return
        w, tag, body = current
        plain = dlcore.parse_interpretation("\n".join(body))
        bags[w] = dlcore.Interpretation(plain.domain, plain.concepts,
                                        plain.roles, transitive)
        tags[w] = tag

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped == "tau:":
            flush()
            current = None
            in_tau = True
            tau = {}
            continue
        if in_tau:
            left, arrow, right = stripped.partition("->")
            if not arrow:
                raise ParseError("bad tau entry", lineno)
            tau[left.strip()] = right.strip()
            continue
        if stripped.startswith("node "):
            flush()
            rest = stripped[len("node "):].split()
            if len(rest) != 2 or not rest[1].startswith("role="):
                raise ParseError("bad node header", lineno)
            w = node_from_text(rest[0], lineno)
            tag_text = rest[1][len("role="):]
            tag = None if tag_text == "bot" else tag_text
            current = (w, tag, [])
            continue
        if current is None:
            raise ParseError("content before first node header", lineno)
        current[2].append(stripped)
    flush()
    if not bags:
        raise ParseError("empty decomposition")
    dec = ExtTreeDecomposition(bags, tags, transitive=set(transitive))
    return dec, tau


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_decomposition(t):
    """Check the four decomposition conditions.  Returns (ok, report);
    the report cites the item number and the earliest offending node in
    breadth-first order."""
    i = t.underlying
    if t.role_tag.get(ROOT) is not None:
        return False, "root must carry the empty tag"
    for w in t.bfs_nodes():
        if w != ROOT and t.role_tag.get(w) is None:
            return False, "non-root node %s carries the empty tag" \
                % node_to_text(w)
    covered = set()
    for w in t.bfs_nodes():
        covered |= t.bags[w].domain
    if covered != i.domain:
        missing = sorted(i.domain - covered) + sorted(covered - i.domain)
        return False, "item 1: domains differ at %s" % ", ".join(missing)
    for w in t.bfs_nodes():
        bag = t.bags[w]
        want = i.restrict(bag.domain)
        if bag != want:
            return False, "item 2: bag at %s is not the restriction" \
                % node_to_text(w)
    for r in sorted(i.roles):
        chi = set()
        for w in t.nodes:
            chi |= t.bags[w].role_pairs(r)
        if r in i.transitive:
            chi = dlcore.transitive_closure(chi)
        if chi != i.role_pairs(r):
            return False, "item 3: role %s not recovered from bags" % r
    for d in sorted(i.domain):
        holders = {w for w in t.nodes if d in t.bags[w].domain}
        if not _connected(t, holders):
            return False, "item 4: occurrences of %s not connected" % d
    return True, "ok"


def _connected(t, nodes):
    if not nodes:
        return True
    top = min(nodes, key=len)
    seen = {top}
    frontier = [top]
    while frontier:
        w = frontier.pop()
        for v in list(t.children(w)) + ([parent(w)] if w != ROOT else []):
            if v in nodes and v not in seen:
                seen.add(v)
                frontier.append(v)
    return seen == nodes


# ---------------------------------------------------------------------------
# Fresh sets
# ---------------------------------------------------------------------------

@dataclass
class FreshSets:
    fresh: dict       # node -> frozenset of elements
    role_fresh: dict  # (node, role) -> frozenset of elements

    def f(self, w):
        return self.fresh.get(w, frozenset())

    def fr(self, w, r):
        return self.role_fresh.get((w, r), frozenset())

    def freshness_node(self, d, r):
        """The unique node where d is r-fresh, or None."""
        hits = [w for (w, r2), es in self.role_fresh.items()
                if r2 == r and d in es]
        if len(hits) == 1:
            return hits[0]
        return None


def fresh_sets(t):
    """Fresh and role-fresh elements of every node.

    An element is fresh in w when w is the root or the element is absent
    from the parent bag.  For the root, every element counts as r-fresh
    for every transitive r.  For a non-root node with tag r, an element is
    r-fresh when it is fresh or the parent's tag is a different role name
    (the root tag does not count as a role change)."""
    fresh = {}
    role_fresh = {}
    roles = set()
    for bag in t.bags.values():
        roles |= set(bag.roles)
    roles |= set(t.underlying.roles)
    for w in t.bfs_nodes():
        dom = t.bags[w].domain
        if w == ROOT:
            fresh[w] = frozenset(dom)
            for r in roles:
                if r in t.transitive:
                    role_fresh[(w, r)] = frozenset(dom)
            continue
        p = parent(w)
        fresh[w] = frozenset(dom - t.bags[p].domain)
        tag = t.role_tag[w]
        ptag = t.role_tag.get(p)
        for r in roles:
            if r != tag:
                role_fresh[(w, r)] = frozenset()
            elif p == ROOT or ptag == tag:
                role_fresh[(w, r)] = fresh[w]
            else:
                role_fresh[(w, r)] = frozenset(dom)
    return FreshSets(fresh, role_fresh)


# ---------------------------------------------------------------------------
# Canonicity
# ---------------------------------------------------------------------------

def check_canonical(t):
    """Check the four structural conditions on every parent/child pair.
    Returns (ok, report) naming the condition and the earliest offending
    node in breadth-first order."""
    fs = fresh_sets(t)
    for w in t.bfs_nodes():
        r = t.role_tag.get(w)
        served = {}  # (d, s) -> child, for the uniqueness clause of C3
        for v in t.children(w):
            s = t.role_tag[v]
            bag = t.bags[v]
            # C1: the child bag interprets only its own tag non-empty,
            # except self-loops of transitive roles
            for s1, pairs in bag.roles.items():
                for (d, e) in sorted(pairs):
                    if s1 == s or (d == e and s1 in t.transitive):
                        continue
                    if d == e and d not in fs.f(v):
                        # inherited elements keep their self-loops, since
                        # bags are full restrictions of the underlying
                        # interpretation
                        continue
                    return False, "C1 at %s: %s-edge (%s,%s)" % \
                        (node_to_text(v), s1, d, e)
            if s not in t.transitive:
                ok, why = _check_c2(t, fs, w, v, s)
                if not ok:
                    return False, "C2 at %s: %s" % (node_to_text(v), why)
            elif r is not None and r != s:
                ok, why = _check_c3(t, fs, w, v, s, served)
                if not ok:
                    return False, "C3 at %s: %s" % (node_to_text(v), why)
            elif r is None:
                # a transitive child of the root either continues a root
                # cluster (C4 shape) or attaches the switched-role
                # structure of a single root element (C3 shape)
                ok4, why4 = _check_c4(t, fs, w, v, s)
                if not ok4:
                    ok3, why3 = _check_c3(t, fs, w, v, s, served)
                    if not ok3:
                        return False, "C4 at %s: %s (C3 shape: %s)" % \
                            (node_to_text(v), why4, why3)
            else:
                ok, why = _check_c4(t, fs, w, v, s)
                if not ok:
                    return False, "C4 at %s: %s" % (node_to_text(v), why)
    return True, "ok"


def _check_c2(t, fs, w, v, s):
    bag = t.bags[v]
    if len(bag.domain) != 2:
        return False, "bag must have exactly two elements"
    new = bag.domain & fs.f(v)
    old = bag.domain - new
    if len(new) != 1 or len(old) != 1:
        return False, "bag must pair one parent element with one fresh one"
    (e,) = new
    (d,) = old
    if d not in fs.f(w):
        return False, "parent element %s is not fresh in the parent" % d
    extra = bag.role_pairs(s) - {(d, e), (d, d)}
    if (d, e) not in bag.role_pairs(s) or extra:
        return False, "tag edges must be exactly {(%s,%s)}" % (d, e)
    return True, ""


def _check_c3(t, fs, w, v, s, served):
    bag = t.bags[v]
    shared = t.bags[w].domain & bag.domain
    if len(shared) != 1:
        return False, "bags must share exactly one element"
    (d,) = shared
    if d not in fs.f(w):
        return False, "shared element %s is not fresh in the parent" % d
    a = dlcore.cluster(bag, s, d)
    if not dlcore.is_root_cluster(bag, s, a):
        return False, "shared element is not in a root cluster"
    if (d, s) in served:
        return False, "second child for element %s" % d
    served[(d, s)] = v
    return True, ""


def _check_c4(t, fs, w, v, s):
    bag = t.bags[v]
    wbag = t.bags[w]
    candidates = []
    seen = set()
    for x in sorted(bag.domain):
        a = dlcore.cluster(bag, s, x)
        key = frozenset(a)
        if key in seen:
            continue
        seen.add(key)
        if dlcore.is_root_cluster(bag, s, a):
            candidates.append(a)
    for a in candidates:
        if not a <= fs.fr(w, s):
            continue
        if not a <= wbag.domain:
            continue
        rep = min(a)
        if dlcore.cluster(wbag, s, rep) != a:
            continue
        if any((d, e) in wbag.role_pairs(s) and e not in bag.domain
               for d in a for e in wbag.domain):
            continue
        bad = False
        for (d, e) in bag.role_pairs(s):
            if d in a or d in fs.f(v):
                continue
            if e in fs.f(v):
                bad = True
                break
        if not bad:
            return True, ""
    return False, "no root cluster satisfies the four subconditions"


# ---------------------------------------------------------------------------
# Successor paths
# ---------------------------------------------------------------------------

def r_successors_via_paths(t, r, occurrence):
    """The r-successors of an element, computed from local bag edges only.

    occurrence is a (node, element) pair; the result is a set of
    (node, element) pairs.  For a transitive r, enumerate the two kinds of
    admissible paths: (A) start at the element's role-freshness node (or a
    child of it) and descend through root clusters; (B) first step to an
    element that is role-fresh at a strict ancestor, then descend from
    under that ancestor.  For a non-transitive r, take root-bag edges plus
    edges in children of the element's freshness node."""
    ok, why = check_canonical(t)
    if not ok:
        raise ValueError("input is not canonical: " + why)
    fs = fresh_sets(t)
    w0, d = occurrence
    if d not in t.bags[w0].domain:
        raise ValueError("element %s does not occur at %s"
                         % (d, node_to_text(w0)))

    def self_loops(out):
        # bags are full restrictions of the underlying interpretation,
        # so an element's self-loop is visible at each of its
        # occurrences regardless of the node's role tag
        for u in t.nodes:
            if (d, d) in t.bags[u].role_pairs(r):
                out.add((u, d))

    if r not in t.transitive:
        out = set()
        self_loops(out)
        for (x, e) in t.bags[ROOT].role_pairs(r):
            if x == d:
                out.add((ROOT, e))
        fresh_at = [u for u in t.nodes if d in fs.f(u)
                    and d in t.bags[u].domain]
        for u in fresh_at:
            for v in t.children(u):
                for (x, e) in t.bags[v].role_pairs(r):
                    if x == d:
                        out.add((v, e))
        return out

    out = set()
    self_loops(out)

    def descend(node, element):
        for v in t.children(node):
            bag = t.bags[v]
            if element not in bag.domain:
                continue
            a = dlcore.cluster(bag, r, element)
            if not dlcore.is_root_cluster(bag, r, a):
                continue
            for (x, e) in bag.role_pairs(r):
                if x != element:
                    continue
                if (v, e) not in out:
                    out.add((v, e))
                    descend(v, e)

    for u in t.nodes:
        if d not in t.bags[u].domain:
            continue
        in_fr = d in fs.fr(u, r)
        in_parent_fr = u != ROOT and d in fs.fr(parent(u), r)
        for (x, d1) in t.bags[u].role_pairs(r):
            if x != d:
                continue
            if (in_fr or in_parent_fr) and d1 in fs.fr(u, r):
                # case A
                out.add((u, d1))
                descend(u, d1)
            elif in_fr and d1 not in fs.fr(u, r):
                # case B
                out.add((u, d1))
                anc = fs.freshness_node(d1, r)
                if anc is not None and t.is_ancestor(anc, u):
                    for w1 in t.children(anc):
                        bag = t.bags[w1]
                        for (y, d2) in bag.role_pairs(r):
                            if y != d1:
                                continue
                            out.add((w1, d2))
                            descend(w1, d2)
    return out


def roots_case(t, r, u, pair):
    """Classify a bag edge by where its endpoints are role-fresh.

    Returns (case, w_d, w_e) with case one of 'same-freshness-node',
    'e-fresh-below', 'e-fresh-above'."""
    d, e = pair
    if t.role_tag.get(u) != r:
        raise ValueError("node tag is not %s" % r)
    if (d, e) not in t.bags[u].role_pairs(r):
        raise ValueError("pair is not a bag edge at %s" % node_to_text(u))
    ok, why = check_canonical(t)
    if not ok:
        raise ValueError("input is not canonical: " + why)
    fs = fresh_sets(t)
    wd = fs.freshness_node(d, r)
    we = fs.freshness_node(e, r)
    if wd is None or we is None:
        raise ValueError("missing freshness node")
    if wd == we:
        return "same-freshness-node", wd, we
    if parent(we) == wd:
        return "e-fresh-below", wd, we
    if t.is_ancestor(we, wd):
        return "e-fresh-above", wd, we
    raise ValueError("unclassifiable pair (%s,%s) at %s"
                     % (d, e, node_to_text(u)))
