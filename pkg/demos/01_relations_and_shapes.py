"""
Relations, Galois closures, and canonical circuit shapes
========================================================

A labeled bipartite relation records which inputs may influence which
outputs.  Its concept lattice is the family of closed input sets, and
that lattice is the canonical wiring diagram for any circuit realizing
the relation.
"""

from causaldeco import (build_concept_lattice, closure_inputs, common_children,
                        connectivity, overlapping_fans_relation, to_dot)

G = overlapping_fans_relation()
print("relation on", G.inputs, "x", G.outputs)
for a in G.inputs:
    print(f"  {a} -> {sorted(common_children(G, [a]))}")

# Galois closure: the inputs that cannot be told apart from a given set
# by looking at reachable outputs
for alpha in (["1"], ["3"], ["2", "3"]):
    print(f"closure of {alpha}: {sorted(closure_inputs(G, alpha))}")

# the closed sets, ordered by inclusion, form the shape
shape = build_concept_lattice(G)
print(f"\n{len(shape.nodes)} nodes:")
for i, nd in enumerate(shape.nodes):
    print(f"  node {i}: alpha={sorted(nd.alpha)} beta={sorted(nd.beta)}")
print("cover edges:", sorted(shape.covers))
print("input attachment:", dict(sorted(shape.lam.items())))
print("output attachment:", dict(sorted(shape.mu.items())))

# the shape remembers the relation exactly
assert connectivity(shape).pairs == G.pairs
print("\nconnectivity of the shape reproduces the relation: ok")

# DOT rendering for graphviz
print("\n" + to_dot(shape))
