"""Finite-alphabet encoding of canonical tree decompositions.

Bags are renamed into a fixed pool of 2K ids (individuals first); the
resulting labels come from a finite alphabet whose symbols are either a
placeholder for absent branches or a pair of a pool-sized interpretation
and a role tag.  A finite rooted graph labeled this way represents the
infinite k-ary tree obtained by unfolding; decoding glues shared pool
ids of neighboring bags into element classes and recovers the
represented interpretation.
"""

from dataclasses import dataclass

from . import dlcore, decomposition
from .dlcore import Interpretation, ParseError
from .decomposition import ROOT


class _Star:
    """Placeholder label for non-existing branches."""

    def __repr__(self):
        return "STAR"


STAR = _Star()
STAR_NODE = "*"


@dataclass(frozen=True)
class SigmaSymbol:
    """Alphabet symbol: a pool-sized interpretation plus a role tag
    (None stands for the root tag)."""
    interpretation: Interpretation
    role: object  # role name or None

    def __post_init__(self):
        if self.role is not None and not isinstance(self.role, str):
            raise ValueError("role tag must be a role name or None")


def make_pool(width_bound, abox):
    """A pool of exactly 2*width_bound ids with the individuals first.

    abox may be a knowledge base or a list of assertions."""
    k = width_bound
    assertions = abox.abox if hasattr(abox, "abox") else abox
    individuals = set()
    for a in assertions or ():
        if hasattr(a, "individual"):
            individuals.add(a.individual)
        else:
            individuals.add(a.subject)
            individuals.add(a.object)
    individuals = sorted(individuals)
    if k < 1:
        raise ValueError("width bound must be at least 1")
    if k < len(individuals):
        raise ValueError("width bound %d is below the %d individuals"
                         % (k, len(individuals)))
    pool = list(individuals)
    i = 1
    while len(pool) < 2 * k:
        name = "e%d" % i
        i += 1
        if name not in individuals:
            pool.append(name)
    return pool


class LabeledRegularTree:
    """A finite rooted graph over the bag alphabet representing a full
    k-ary labeled tree.

    nodes maps node ids to labels (SigmaSymbol or STAR); succ maps node
    ids to length-k lists of node ids, where the shared id "*" stands
    for the all-placeholder subtree.  parent records the spanning-tree
    parent used to resolve upward moves on the graph."""

    def __init__(self, nodes, succ, arity, pool, transitive,
                 root="n0", parent=None):
        self.nodes = dict(nodes)
        self.succ = {n: list(s) for n, s in succ.items()}
        self.arity = arity
        self.pool = list(pool)
        self.transitive = frozenset(transitive)
        self.root = root
        if root not in self.nodes:
            raise ValueError("missing root node %s" % root)
        if parent is None:
            parent = {}
            order = [root]
            seen = {root}
            while order:
                n = order.pop(0)
                for m in self.succ.get(n, ()):
                    if m != STAR_NODE and m not in seen:
                        seen.add(m)
                        parent[m] = n
                        order.append(m)
            parent[root] = None
        self.parent = dict(parent)
        for n, s in self.succ.items():
            if len(s) != arity:
                raise ValueError("node %s has %d successor slots, "
                                 "expected %d" % (n, len(s), arity))

    @property
    def K(self):
        return len(self.pool) // 2

    def label_of(self, n):
        if n == STAR_NODE:
            return STAR
        return self.nodes[n]

    def successors(self, n):
        if n == STAR_NODE:
            return [STAR_NODE] * self.arity
        return self.succ[n]

    def bag_domain(self, n):
        label = self.label_of(n)
        if label is STAR:
            return frozenset()
        return label.interpretation.domain

    def node_order(self):
        return sorted(self.nodes, key=_node_sort_key)

    def unfold(self, depth):
        """The labels of the unfolded tree up to the given depth: a dict
        mapping slot paths (tuples of slot indices) to (label, node)."""
        out = {(): (self.label_of(self.root), self.root)}
        frontier = [((), self.root)]
        for _ in range(depth):
            new = []
            for path, n in frontier:
                for i, m in enumerate(self.successors(n)):
                    if m == STAR_NODE:
                        continue
                    p = path + (i,)
                    out[p] = (self.label_of(m), m)
                    new.append((p, m))
            frontier = new
        return out


def _node_sort_key(n):
    if n.startswith("n") and n[1:].isdigit():
        return (0, int(n[1:]), n)
    return (1, 0, n)


def same_class(tree, occ1, occ2):
    """Whether two (node, pool id) occurrences denote the same element
    of the represented interpretation.

    Occurrences are connected when neighboring bags share the pool id.
    On the finite graph this conflates occurrences that unfold to
    distinct elements only when a back edge re-enters a bag; all uses
    in this package quotient by the same relation."""
    occ1 = (occ1[0], occ1[1])
    occ2 = (occ2[0], occ2[1])
    if occ1 == occ2:
        return True
    seen = {occ1}
    queue = [occ1]
    while queue:
        n, d = queue.pop(0)
        if d not in tree.bag_domain(n):
            return False
        neighbors = list(tree.successors(n))
        if tree.parent.get(n):
            neighbors.append(tree.parent[n])
        for m in neighbors:
            if m == STAR_NODE or d not in tree.bag_domain(m):
                continue
            occ = (m, d)
            if occ == occ2:
                return True
            if occ not in seen:
                seen.add(occ)
                queue.append(occ)
    return False


# ---------------------------------------------------------------------------
# Consistency
# ---------------------------------------------------------------------------

def is_consistent(t):
    """Root-only bottom tag, pool-sized bags, and neighbor agreement on
    shared pool ids (labels and edges)."""
    pool = set(t.pool)
    for n in t.nodes:
        label = t.label_of(n)
        if label is STAR:
            if any(m != STAR_NODE for m in t.succ[n]):
                return False
            continue
        bag = label.interpretation
        if not bag.domain <= pool:
            return False
        if len(bag.domain) > t.K:
            return False
        if (label.role is None) != (n == t.root):
            return False
    for n in t.nodes:
        if t.label_of(n) is STAR:
            continue
        for m in t.succ[n]:
            if m == STAR_NODE or t.label_of(m) is STAR:
                continue
            if not _overlap_agrees(t.label_of(n).interpretation,
                                   t.label_of(m).interpretation):
                return False
    return True


def _overlap_agrees(b1, b2):
    shared = b1.domain & b2.domain
    for a in set(b1.concepts) | set(b2.concepts):
        for d in shared:
            if (d in b1.concept_members(a)) != (d in b2.concept_members(a)):
                return False
    for role in set(b1.roles) | set(b2.roles):
        p1 = b1.role_pairs(role)
        p2 = b2.role_pairs(role)
        for d in shared:
            for e in shared:
                if ((d, e) in p1) != ((d, e) in p2):
                    return False
    return True


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def encode(t, pool, arity=None, redirects=None, individuals=None):
    """Rename a canonical decomposition into the pool and lay it out as
    a labeled regular graph.

    Fresh elements receive the least pool id not used by the parent bag
    (nor already taken in the current bag); a pool of twice the width
    bound always suffices.  redirects maps frontier decomposition nodes
    to earlier nodes, producing back edges instead of subtrees.  Missing
    child slots point at the shared placeholder node."""
    redirects = redirects or {}
    K = len(pool) // 2
    live = [w for w in t.bags if w not in redirects]
    max_out = max((len(t.children(w)) for w in live), default=0)
    if arity is None:
        arity = max(max_out, 1)
    elif max_out > arity:
        raise ValueError("outdegree %d exceeds arity %d" % (max_out, arity))
    for w in live:
        if len(t.bags[w].domain) > K:
            raise ValueError("bag %s has %d elements, width bound is %d"
                             % (decomposition.node_to_text(w),
                                len(t.bags[w].domain), K))
    if individuals is None:
        individuals = [d for d in t.bags[ROOT].domain if d in set(pool)]
    renaming = {}
    root_map = {}
    used = []
    for d in sorted(individuals):
        root_map[d] = d
        used.append(d)
    for d in sorted(t.bags[ROOT].domain - set(individuals)):
        root_map[d] = _least_unused(pool, set(used))
        used.append(root_map[d])
    renaming[ROOT] = root_map
    node_ids = {ROOT: "n0"}
    nodes = {}
    succ = {}
    parent = {"n0": None}
    order = [ROOT]
    count = 1
    queue = [ROOT]
    while queue:
        w = queue.pop(0)
        for v in t.children(w):
            if v in redirects:
                continue
            parent_ids = {renaming[w][d] for d in t.bags[w].domain}
            vmap = {}
            taken = set()
            for d in sorted(t.bags[v].domain & t.bags[w].domain):
                vmap[d] = renaming[w][d]
                taken.add(vmap[d])
            for d in sorted(t.bags[v].domain - t.bags[w].domain):
                vmap[d] = _least_unused(pool, parent_ids | taken)
                taken.add(vmap[d])
            renaming[v] = vmap
            node_ids[v] = "n%d" % count
            parent[node_ids[v]] = node_ids[w]
            count += 1
            order.append(v)
            queue.append(v)
    for w in order:
        bag = t.bags[w].rename(renaming[w])
        tag = t.role_tag.get(w)
        nodes[node_ids[w]] = SigmaSymbol(bag, tag)
        slots = []
        for v in t.children(w):
            target = redirects.get(v, v)
            slots.append(node_ids[target])
        slots += [STAR_NODE] * (arity - len(slots))
        succ[node_ids[w]] = slots
    tree = LabeledRegularTree(nodes, succ, arity, pool,
                              t.transitive, parent=parent)
    tree.renaming = renaming
    tree.node_ids = node_ids
    return tree


def _least_unused(pool, used):
    for x in pool:
        if x not in used:
            return x
    raise ValueError("pool exhausted; width bound too small")


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

def decode(t, depth):
    """The interpretation represented by the depth-bounded unfolding.

    Occurrences of a pool id in neighboring unfolded bags denote the
    same element; classes met at the root keep their individual name,
    other classes are named after their earliest occurrence."""
    if not is_consistent(t):
        raise ValueError("inconsistent regular tree")
    unfolded = t.unfold(depth)
    paths = sorted(unfolded, key=lambda p: (len(p), p))
    reps = {}  # (path, pool id) -> class representative occurrence

    def find(occ):
        chain = []
        while reps[occ] != occ:
            chain.append(occ)
            occ = reps[occ]
        for c in chain:
            reps[c] = occ
        return occ

    for p in paths:
        label, _ = unfolded[p]
        for d in label.interpretation.domain:
            reps[(p, d)] = (p, d)
    for p in paths:
        if p == ():
            continue
        q = p[:-1]
        shared = unfolded[p][0].interpretation.domain \
            & unfolded[q][0].interpretation.domain
        for d in shared:
            ra, rb = find((p, d)), find((q, d))
            if ra != rb:
                reps[max(ra, rb)] = min(ra, rb)
    names = {}
    for occ in sorted(reps):
        root_cls = find(occ)
        if root_cls not in names:
            p, d = root_cls
            if p == ():
                names[root_cls] = d
            else:
                names[root_cls] = "%s@%s" % (d, ".".join(str(i + 1)
                                                         for i in p))
    domain = set(names.values())
    concepts = {}
    roles = {}
    for p in paths:
        label, _ = unfolded[p]
        bag = label.interpretation
        local = {d: names[find((p, d))] for d in bag.domain}
        for a, members in bag.concepts.items():
            for d in members:
                concepts.setdefault(a, set()).add(local[d])
        for role, pairs in bag.roles.items():
            for (d, e) in pairs:
                roles.setdefault(role, set()).add((local[d], local[e]))
    for role in t.transitive:
        if role in roles:
            roles[role] = set(dlcore.transitive_closure(roles[role]))
    return Interpretation(domain, concepts, roles, t.transitive)


# ---------------------------------------------------------------------------
# Folding
# ---------------------------------------------------------------------------

def fold_decomposition(t, tau, pool=None):
    """Fold a depth-bounded unraveling into a finite regular tree.

    Every frontier node with unserved obligations must repeat an
    ancestor: same renamed bag, role tag, source images, parent tag and
    parent overlap.  Such nodes become back edges to the ancestor;
    everything below them is dropped.  Raises ValueError (unfoldable)
    when some obligated frontier node has no matching ancestor."""
    pending = getattr(t, "pending", frozenset())
    individuals = sorted(d for d in t.bags[ROOT].domain
                         if tau.get(d) == d)
    if pool is None:
        width = max(len(b.domain) for b in t.bags.values())
        pool = make_pool(max(width, len(individuals), 1),
                         [dlcore.ConceptAssertion("top", d)
                          for d in individuals])
    full = encode(t, pool, individuals=individuals)

    def key(w):
        label = full.nodes[full.node_ids[w]]
        rmap = full.renaming[w]
        back = {rmap[d]: tau[d] for d in t.bags[w].domain}
        p = decomposition.parent(w)
        if p is None:
            overlap = frozenset()
            ptag = None
        else:
            overlap = frozenset(rmap[d] for d in
                                t.bags[w].domain & t.bags[p].domain)
            ptag = t.role_tag.get(p)
        return (dlcore.interpretation_to_text(label.interpretation),
                label.role, tuple(sorted(back.items())), overlap, ptag)

    redirects = {}
    dropped = set()
    for w in sorted(t.bags, key=lambda w: (len(w), w)):
        p = decomposition.parent(w)
        if p is not None and (p in redirects or p in dropped):
            dropped.add(w)
            continue
        if w not in pending:
            continue
        kw = key(w)
        target = None
        anc = decomposition.parent(w)
        while anc is not None:
            if anc not in dropped and anc not in redirects \
                    and key(anc) == kw:
                target = anc
            anc = decomposition.parent(anc)
        if target is None:
            raise ValueError(
                "unfoldable: frontier node %s has unserved work and no "
                "matching ancestor; increase the unraveling depth"
                % decomposition.node_to_text(w))
        redirects[w] = target
    # redirect sources stay in the trimmed decomposition as leaves so
    # their parent slots survive; encode turns them into back edges
    keep = {w for w in t.bags if w not in dropped}
    trimmed = _restrict_nodes(t, keep)
    tree = encode(trimmed, pool,
                  redirects={w: a for w, a in redirects.items()},
                  individuals=individuals)
    if not is_consistent(tree):
        raise ValueError("unfoldable: back edges break overlap agreement")
    return tree


def _restrict_nodes(t, keep):
    bags = {w: t.bags[w] for w in keep}
    tags = {w: t.role_tag[w] for w in keep}
    return decomposition.ExtTreeDecomposition(
        bags, tags, underlying=t.underlying, transitive=t.transitive)


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def tree_to_text(t):
    lines = ["arity K=%d k=%d" % (t.K, t.arity)]
    lines.append("pool: " + " ".join(t.pool))
    if t.transitive:
        lines.append("transitive: " + " ".join(sorted(t.transitive)))
    for n in t.node_order():
        label = t.label_of(n)
        if label is STAR:
            lines.append("node %s label=star" % n)
        else:
            tag = label.role if label.role is not None else "bot"
            lines.append("node %s label=bag role=%s" % (n, tag))
            for ln in dlcore.interpretation_to_text(
                    label.interpretation).splitlines():
                lines.append("  " + ln)
        for i, m in enumerate(t.succ[n]):
            lines.append("succ %d -> %s" % (
                i, "STAR" if m == STAR_NODE else m))
    return "\n".join(lines) + "\n"


def parse_tree(text):
    lines = text.splitlines()
    if not lines or not lines[0].startswith("arity "):
        raise ParseError("expected arity header", 1, 1)
    header = lines[0].split()
    try:
        k_bound = int(header[1].split("=", 1)[1])
        arity = int(header[2].split("=", 1)[1])
    except (IndexError, ValueError):
        raise ParseError("malformed arity header", 1, 1)
    pool = []
    transitive = set()
    nodes = {}
    succ = {}
    cur = None
    cur_body = []
    cur_tag = None

    def flush():
        if cur is None:
            return
        if cur_tag == "star":
            nodes[cur] = STAR
        else:
            body = "\n".join(cur_body)
            bag = dlcore.parse_interpretation(body, transitive=transitive) \
                if body.strip() else Interpretation((), {}, {}, transitive)
            bag = Interpretation(bag.domain, bag.concepts, bag.roles,
                                 transitive)
            nodes[cur] = SigmaSymbol(bag, None if cur_tag == "bot"
                                     else cur_tag)

    for idx, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        if raw.startswith("pool:"):
            pool = raw.split(":", 1)[1].split()
        elif raw.startswith("transitive:"):
            transitive |= set(raw.split(":", 1)[1].split())
        elif raw.startswith("node "):
            flush()
            parts = raw.split()
            cur = parts[1]
            cur_body = []
            opts = dict(p.split("=", 1) for p in parts[2:])
            if opts.get("label") == "star":
                cur_tag = "star"
            else:
                cur_tag = opts.get("role", "bot")
            succ[cur] = []
        elif raw.startswith("succ "):
            parts = raw.split()
            target = parts[3]
            succ[cur].append(STAR_NODE if target == "STAR" else target)
        elif raw.startswith("  "):
            cur_body.append(raw[2:])
        else:
            raise ParseError("unexpected line", idx, 1)
    flush()
    if len(pool) != 2 * k_bound:
        raise ParseError("pool must list exactly 2K ids", 1, 1)
    return LabeledRegularTree(nodes, succ, arity, pool, transitive)
