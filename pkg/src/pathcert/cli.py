"""Command-line front end for the certification pipeline.

Every command prints a deterministic machine-readable report: `key: value`
lines in text format, or one JSON object per key in json-lines format.
Wall-clock time goes to stderr so stdout is byte-identical across runs.

Exit codes: 0 success/true/accept, 1 false/reject/unknown/not-certified,
2 usage error, 3 input or precondition error.
"""

import argparse
import json
import sys
import time

from . import dlcore, querycore, decomposition, unravel, encoding, build, \
    twoata


class CliError(Exception):
    """Input or precondition failure (exit code 3)."""


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------

def _read(path):
    try:
        with open(path, "r") as fh:
            return fh.read()
    except OSError as e:
        raise CliError("cannot read %s: %s" % (path, e.strerror))


def load_kb(path):
    try:
        return dlcore.parse_kb(_read(path))
    except ValueError as e:
        raise CliError("%s: %s" % (path, e))


def load_model(path, transitive=()):
    try:
        return dlcore.parse_interpretation(_read(path), transitive)
    except ValueError as e:
        raise CliError("%s: %s" % (path, e))


def load_query(path):
    lines = [ln for ln in _read(path).splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        return querycore.parse_query(" ".join(lines))
    except ValueError as e:
        raise CliError("%s: %s" % (path, e))


def load_tree(path):
    try:
        return encoding.parse_tree(_read(path))
    except ValueError as e:
        raise CliError("%s: %s" % (path, e))


def load_decomposition(path, transitive=()):
    try:
        dec, _tau = decomposition.parse_decomposition(_read(path),
                                                      transitive)
        return dec
    except ValueError as e:
        raise CliError("%s: %s" % (path, e))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def emit(report, fmt, out=None):
    out = out or sys.stdout
    if fmt == "json-lines":
        for key, value in report:
            out.write(json.dumps({"key": key, "value": value},
                                 sort_keys=True) + "\n")
        return
    for key, value in report:
        text = str(value)
        if "\n" in text:
            out.write(key + ":\n")
            for line in text.splitlines():
                out.write("  " + line + "\n")
        else:
            out.write("%s: %s\n" % (key, text))


def model_stats(i):
    return [("width", dlcore.width(i)), ("breadth", dlcore.breadth(i))]


def wit_max(i, kb):
    best = 0
    for r in sorted(kb.signature.transitive):
        wc = unravel.witness_closure(i, kb.tbox, r)
        for d in i.domain:
            best = max(best, len(wc.witnesses(d)))
    return best


# ---------------------------------------------------------------------------
# Automata
# ---------------------------------------------------------------------------

def tree_symbols(tree):
    """All symbols the automaton can meet on this tree, star included."""
    seen = {}
    for n in sorted(tree.nodes, key=encoding._node_sort_key):
        sym = tree.nodes[n]
        seen.setdefault(repr(sym), sym)
    out = [seen[k] for k in sorted(seen)]
    out.append(encoding.STAR)
    return out


def build_automaton(which, kb, q, alphabet):
    if which == "can":
        return build.build_a_can(kb, alphabet.pool, alphabet.arity)
    if which == "abox":
        return build.build_a_abox(kb, alphabet)
    if which == "tbox":
        return build.build_a_tbox(kb, alphabet)
    if which in ("query", "product") and q is None:
        raise CliError("automaton %r needs --query" % which)
    if which == "query":
        return build.build_a_query(q, kb, alphabet)
    return build.build_product(kb, q, alphabet)


def state_family(q):
    if isinstance(q, tuple) and q and isinstance(q[0], str):
        return q[0]
    if isinstance(q, str):
        return q
    return type(q).__name__


def _formula_states(f, acc):
    if isinstance(f, twoata.Var):
        acc.append(f.state)
    elif isinstance(f, (twoata.And, twoata.Or)):
        for c in f.children:
            _formula_states(c, acc)


def explore_automaton(a, symbols):
    """Breadth-first reachable exploration over the given symbols.

    Returns (states in discovery order, transition entries
    (state, symbol, formula))."""
    seen = {a.initial: None}
    queue = [a.initial]
    entries = []
    while queue:
        q = queue.pop(0)
        for sym in symbols:
            f = a.delta(q, sym)
            entries.append((q, sym, f))
            found = []
            _formula_states(f, found)
            for q2 in found:
                if q2 not in seen:
                    seen[q2] = None
                    queue.append(q2)
    return list(seen), entries


def automaton_report(a, symbols):
    states, entries = explore_automaton(a, symbols)
    by_family = {}
    for q in states:
        by_family[state_family(q)] = by_family.get(state_family(q), 0) + 1
    return states, entries, [
        ("states", len(states)),
        ("states_by_family", json.dumps(by_family, sort_keys=True)),
        ("transition_entries", len(entries)),
        ("max_priority", a.max_priority),
    ]


def dump_automaton(a, states, entries):
    lines = []
    for q in states:
        lines.append("state %r family=%s priority=%d" %
                     (q, state_family(q), a.priority(q)))
    for (q, sym, f) in entries:
        lines.append("delta %r / %r -> %r" % (q, sym, f))
    chain = {}
    for q in states:
        chain.setdefault(a.priority(q), []).append(q)
    for p in sorted(chain):
        lines.append("priority %d: %d states" % (p, len(chain[p])))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_check_model(args):
    kb = load_kb(args.kb)
    i = load_model(args.model, kb.signature.transitive)
    ok, why = dlcore.models(i, kb)
    report = [("command", "check-model"),
              ("result", "true" if ok else "false")]
    if not ok:
        report.append(("violation", why))
    report += model_stats(i)
    return report, 0 if ok else 1


def cmd_eval_query(args):
    transitive = ()
    if args.kb:
        transitive = load_kb(args.kb).signature.transitive
    i = load_model(args.model, transitive)
    q = load_query(args.query)
    match = querycore.eval_prpq(i, q)
    report = [("command", "eval-query"),
              ("result", "true" if match is not None else "false")]
    if match is not None:
        report.append(("match", json.dumps(
            {v: match[v] for v in sorted(match)}, sort_keys=True)))
    return report, 0 if match is not None else 1


def cmd_unravel(args):
    kb = load_kb(args.kb)
    i = load_model(args.model, kb.signature.transitive)
    ok, why = dlcore.models(i, kb)
    if not ok:
        raise CliError("model does not satisfy the kb: %s" % why)
    dec, tau = unravel.unravel(i, kb, args.depth)
    okv, whyv = decomposition.validate_decomposition(dec)
    okc, whyc = decomposition.check_canonical(dec)
    report = [("command", "unravel"),
              ("result", "true" if okv and okc else "false"),
              ("depth", args.depth),
              ("nodes", len(dec.nodes)),
              ("pending", len(dec.pending)),
              ("bag_width", max(len(dec.bags[w].domain)
                                for w in dec.nodes)),
              ("wit_max", wit_max(dlcore.prune(i, kb), kb))]
    if not okv:
        report.append(("violation", whyv))
    elif not okc:
        report.append(("violation", whyc))
    report.append(("decomposition", dec.to_text(tau)))
    return report, 0 if okv and okc else 1


def cmd_check_canonical(args):
    transitive = ()
    if args.kb:
        transitive = load_kb(args.kb).signature.transitive
    dec = load_decomposition(args.decomposition, transitive)
    okv, whyv = decomposition.validate_decomposition(dec)
    okc, whyc = (decomposition.check_canonical(dec) if okv
                 else (False, "skipped"))
    ok = okv and okc
    report = [("command", "check-canonical"),
              ("result", "true" if ok else "false")]
    if not okv:
        report.append(("violation", whyv))
    elif not okc:
        report.append(("violation", whyc))
    return report, 0 if ok else 1


def _pipeline_tree(kb, i, depth):
    """prune -> unravel -> fold -> encode; raises CliError naming the
    stage on failure."""
    dec, tau = unravel.unravel(i, kb, depth)
    try:
        return unravel.fold(dec, tau)
    except ValueError as e:
        raise CliError("stage fold: %s" % e)


def cmd_encode(args):
    kb = load_kb(args.kb)
    i = load_model(args.model, kb.signature.transitive)
    ok, why = dlcore.models(i, kb)
    if not ok:
        raise CliError("model does not satisfy the kb: %s" % why)
    try:
        tree = _pipeline_tree(kb, i, args.depth)
    except CliError as e:
        report = [("command", "encode"), ("result", "false"),
                  ("failure", str(e))]
        return report, 1
    report = [("command", "encode"), ("result", "true"),
              ("depth", args.depth),
              ("tree_nodes", len(tree.nodes)),
              ("pool_size", len(tree.pool)),
              ("arity", tree.arity),
              ("tree", encoding.tree_to_text(tree))]
    return report, 0


def cmd_build_automata(args):
    kb = load_kb(args.kb)
    q = load_query(args.query) if args.query else None
    tree = load_tree(args.tree)
    alphabet = build.alphabet_of(tree)
    a = build_automaton(args.which, kb, q, alphabet)
    symbols = tree_symbols(tree)
    states, entries, stats = automaton_report(a, symbols)
    report = [("command", "build-automata"), ("which", args.which),
              ("result", "true")] + stats
    if args.dump_automaton:
        report.append(("automaton", dump_automaton(a, states, entries)))
    return report, 0


def cmd_accepts(args):
    kb = load_kb(args.kb)
    q = load_query(args.query) if args.query else None
    tree = load_tree(args.tree)
    alphabet = build.alphabet_of(tree)
    a = build_automaton(args.automaton, kb, q, alphabet)
    res = twoata.membership(a, tree)
    report = [("command", "accepts"), ("automaton", args.automaton),
              ("result", "accept" if res.accepted else "reject"),
              ("game_positions", len(res.game.positions)),
              ("strategy_size", len(res.strategy))]
    if args.dump_automaton:
        states, entries, _ = automaton_report(a, tree_symbols(tree))[0:3]
        report.append(("automaton", dump_automaton(a, states, entries)))
    if args.dump_game:
        report.append(("game", res.game.dump()))
    return report, 0 if res.accepted else 1


def cmd_search_countermodel(args):
    kb = load_kb(args.kb)
    q = load_query(args.query)
    try:
        model, verdict = querycore.countermodel_search(kb, q, args.max_size)
    except ValueError as e:
        raise CliError(str(e))
    report = [("command", "search-countermodel"),
              ("max_size", args.max_size),
              ("result", "non-entailment (finite witness)"
               if model is not None else "unknown")]
    if model is not None:
        report.append(("countermodel", dlcore.interpretation_to_text(model)))
    return report, 0 if model is not None else 1


def cmd_certify_nonentailment(args):
    kb = load_kb(args.kb)
    q = load_query(args.query)
    report = [("command", "certify-nonentailment")]
    if args.tree:
        tree = load_tree(args.tree)
        report.append(("source", "tree %s" % args.tree))
    else:
        if not args.model:
            raise CliError("need a model file or --tree")
        i = load_model(args.model, kb.signature.transitive)
        ok, why = dlcore.models(i, kb)
        if not ok:
            raise CliError("precondition failed, model does not satisfy "
                           "the kb: %s" % why)
        try:
            tree = _pipeline_tree(kb, i, args.depth)
        except CliError as e:
            report += [("result", "not certified"), ("failure", str(e))]
            return report, 1
        report.append(("source", "pipeline depth %d" % args.depth))
    a = build.build_product(kb, q, build.alphabet_of(tree))
    res = twoata.membership(a, tree)
    report += [("result", "K does not entail the query: certified"
                if res.accepted else "not certified"),
               ("tree_nodes", len(tree.nodes)),
               ("game_positions", len(res.game.positions)),
               ("strategy_size", len(res.strategy))]
    if not res.accepted:
        report.append(("failure", "stage membership: product rejects "
                       "the tree"))
    if res.accepted and args.out_dir:
        import os
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "certificate-tree.txt"),
                  "w") as fh:
            fh.write(encoding.tree_to_text(tree))
        with open(os.path.join(args.out_dir, "certificate-strategy.txt"),
                  "w") as fh:
            for pos in sorted(res.strategy, key=repr):
                fh.write("%r -> %r\n" % (pos, res.strategy[pos]))
        report.append(("certificate", args.out_dir))
    if args.dump_game:
        report.append(("game", res.game.dump()))
    return report, 0 if res.accepted else 1


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def make_parser():
    top = argparse.ArgumentParser(
        prog="pathcert",
        description="Certified non-entailment of regular path queries "
                    "over ontologies with counting on transitive roles.")
    sub = top.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--format", choices=["text", "json-lines"],
                       default="text")
        p.add_argument("--seed", type=int, default=0,
                       help="seed echoed into randomized test generators")
        p.add_argument("--dump-game", action="store_true")
        p.add_argument("--dump-automaton", action="store_true")

    p = sub.add_parser("check-model", help="check model |= kb")
    p.add_argument("kb")
    p.add_argument("model")
    common(p)
    p.set_defaults(run=cmd_check_model)

    p = sub.add_parser("eval-query", help="evaluate a query on a model")
    p.add_argument("model")
    p.add_argument("query")
    p.add_argument("--kb", help="kb file supplying transitive roles")
    common(p)
    p.set_defaults(run=cmd_eval_query)

    p = sub.add_parser("unravel",
                       help="unravel a model into a canonical decomposition")
    p.add_argument("kb")
    p.add_argument("model")
    p.add_argument("--depth", type=int, default=3)
    common(p)
    p.set_defaults(run=cmd_unravel)

    p = sub.add_parser("check-canonical",
                       help="validate a decomposition file")
    p.add_argument("decomposition")
    p.add_argument("--kb", help="kb file supplying transitive roles")
    common(p)
    p.set_defaults(run=cmd_check_canonical)

    p = sub.add_parser("encode",
                       help="unravel, fold and encode a model as a "
                            "regular tree")
    p.add_argument("kb")
    p.add_argument("model")
    p.add_argument("--depth", type=int, default=3)
    common(p)
    p.set_defaults(run=cmd_encode)

    p = sub.add_parser("build-automata",
                       help="build one of the pipeline automata")
    p.add_argument("--kb", required=True)
    p.add_argument("--query")
    p.add_argument("--tree", required=True,
                   help="regular tree file fixing pool and arity")
    p.add_argument("--which", required=True,
                   choices=["can", "abox", "tbox", "query", "product"])
    common(p)
    p.set_defaults(run=cmd_build_automata)

    p = sub.add_parser("accepts",
                       help="run automaton membership on a regular tree")
    p.add_argument("--kb", required=True)
    p.add_argument("--query")
    p.add_argument("--automaton", required=True,
                   choices=["can", "abox", "tbox", "query", "product"])
    p.add_argument("--tree", required=True)
    common(p)
    p.set_defaults(run=cmd_accepts)

    p = sub.add_parser("search-countermodel",
                       help="brute-force search for a finite countermodel")
    p.add_argument("kb")
    p.add_argument("query")
    p.add_argument("--max-size", type=int, required=True)
    common(p)
    p.set_defaults(run=cmd_search_countermodel)

    p = sub.add_parser("certify-nonentailment",
                       help="certify non-entailment from a countermodel")
    p.add_argument("kb")
    p.add_argument("query")
    p.add_argument("model", nargs="?")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--tree",
                   help="certify from this regular tree instead of "
                        "running the model pipeline")
    p.add_argument("--out-dir", help="write certificate files here")
    common(p)
    p.set_defaults(run=cmd_certify_nonentailment)

    return top


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    start = time.monotonic()
    try:
        report, code = args.run(args)
    except CliError as e:
        print("error: %s" % e, file=sys.stderr)
        return 3
    emit(report, args.format)
    print("wall_ms: %d" % int((time.monotonic() - start) * 1000),
          file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
