"""Shared fixture texts and helpers for the test suite."""

from pathcert import dlcore

HEART_KB = """\
transitive hPt
Heart subclassof (atleast 1 hPt MV) and (atmost 1 hPt MV) and (exists hPt LA) and (exists hPt LV)
LV and LA subclassof bot
LV subclassof exists hPt MV
LA subclassof exists hPt MV
Heart(h)
"""

HEART_MODEL = """\
elem h la lv mv
label Heart: h
label LA: la
label LV: lv
label MV: mv
edge hPt: h la, h lv, h mv, la mv, lv mv
"""

CLUSTER_KB = """\
transitive r
A subclassof atleast 3 r B
B subclassof atleast 3 r B
A subclassof not B
A(a)
"""

CLUSTER_MODEL = """\
elem a b1 b2 b3
label A: a
label B: b1 b2 b3
edge r: a b1, a b2, a b3, b1 b1, b1 b2, b1 b3, b2 b1, b2 b2, b2 b3, b3 b1, b3 b2, b3 b3
"""

WITNESS_KB = """\
transitive r
A1 subclassof atmost 1 r B
A2 subclassof atmost 1 r C
A1(a)
"""

# The witness-set example model: a has successors e (in B) and f (in C),
# e satisfies A2 and reaches f.
WITNESS_MODEL = """\
elem a e f
label A1: a
label A2: e
label B: e
label C: f
edge r: a e, a f, e f
"""

# Same KB, but with a mutually r-connected cluster {a,e,f} and three plain
# direct successors b, c, d of that cluster.
EX3_CLUSTER_MODEL = """\
elem a e f b c d
label A1: a
label A2: e
label B: e
label C: f
edge r: a e, e a, a f, f a, e f, f e, a b, a c, a d
"""


def ex3_cluster_model():
    return dlcore.parse_interpretation(EX3_CLUSTER_MODEL, transitive={"r"})


INFINITE_CHAIN_KB = """\
transitive r
top subclassof exists r top
"""

INFINITE_CHAIN_SEED = """\
elem a b
edge r: a b, b b
"""


def heart_kb():
    return dlcore.parse_kb(HEART_KB)


def heart_model():
    return dlcore.parse_interpretation(HEART_MODEL, transitive={"hPt"})


def cluster_kb():
    return dlcore.parse_kb(CLUSTER_KB)


def cluster_model():
    return dlcore.parse_interpretation(CLUSTER_MODEL, transitive={"r"})


def witness_kb():
    return dlcore.parse_kb(WITNESS_KB)


def witness_model():
    return dlcore.parse_interpretation(WITNESS_MODEL, transitive={"r"})


def random_model_and_kb(rng, size=6, axioms=3, max_n=3):
    """A random transitively-closed model together with a random TBox it
    satisfies is not guaranteed; callers that need a model of the KB should
    filter.  Returns (interpretation, kb)."""
    concept_names = ["A", "B", "C"]
    role_names = ["r", "s"]
    transitive = {"r"}
    i = dlcore.random_interpretation(rng, size, concept_names, role_names,
                                     transitive)
    lines = ["transitive r"]
    for _ in range(axioms):
        c = random_concept(rng, concept_names, role_names, max_n, depth=2)
        d = random_concept(rng, concept_names, role_names, max_n, depth=2)
        lines.append("%s subclassof %s" % (c, d))
    kb = dlcore.parse_kb("\n".join(lines))
    return i, kb


def random_concept(rng, concept_names, role_names, max_n, depth):
    choices = ["atom", "atom", "not", "and", "or", "atmost", "atleast"]
    kind = rng.choice(choices) if depth > 0 else "atom"
    if kind == "atom":
        return dlcore.Atom(rng.choice(concept_names))
    if kind == "not":
        return dlcore.Not(random_concept(rng, concept_names, role_names,
                                         max_n, depth - 1))
    if kind in ("and", "or"):
        left = random_concept(rng, concept_names, role_names, max_n, depth - 1)
        right = random_concept(rng, concept_names, role_names, max_n, depth - 1)
        return dlcore.And(left, right) if kind == "and" else dlcore.Or(left, right)
    n = rng.randint(0, max_n)
    role = rng.choice(role_names)
    arg = random_concept(rng, concept_names, role_names, max_n, depth - 1)
    if kind == "atmost":
        return dlcore.AtMost(n, role, arg)
    return dlcore.AtLeast(max(1, n), role, arg)
