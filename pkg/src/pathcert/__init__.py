"""Certified non-entailment of regular path queries over ontologies with
counting on transitive relations.

The pipeline: model checking, model pruning, unraveling into canonical tree
decompositions, folding into a finite regular tree, finite-alphabet encoding,
two-way alternating parity tree automata, and membership via parity games.
"""
