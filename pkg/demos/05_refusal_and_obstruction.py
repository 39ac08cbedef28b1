"""
Refusals, counterexamples, and the sector obstruction
=====================================================

The exclusion property is about relations, not individual unitaries.
Some unitaries with causal structure C3 decompose faithfully (a routed
bundle of identity wires does); but C3 admits unitaries that cannot, so
the decomposer refuses the relation up front.  The obstruction is made
operational: at the bottom node of the relevant shape, the commuting
output algebras split into several sectors, so no single unitary gate
can serve there.
"""

from causaldeco import (build_counterexample, c3_relation, causal_structure,
                        decompose, loose_wires_c3, obstruction_witness, u3,
                        verify_decomposition)

C3 = c3_relation()

# the positive side: identity wires routed along the C3 shape
circ, chan = loose_wires_c3()
rep = verify_decomposition(chan, circ, C3)
print("loose wires verify:", rep.status,
      f"(residual {rep.recomposition_residual})")
print("its causal structure is C3:",
      causal_structure(chan).pairs == C3.pairs)

# the negative side: the decomposer refuses the relation itself
_, report = decompose(u3(), C3)
print("\ndecompose(u3, C3):", report.status)
print("witness:", report.witness.as_dict())

# a channel with structure exactly C3 built to defeat synthesis
U = build_counterexample(C3, seed=0)
print("\ncounterexample dim:", U.dim)
print("structure equals C3:", causal_structure(U).pairs == C3.pairs)

# the certificate: the bottom-node algebras split into >= 2 sectors
deco = obstruction_witness(U, C3, seed=0)
print("sector count:", deco.n_sectors)
print("per-sector leg dims:", list(deco.sectors))
print("projector ranks:",
      [int(round(p.trace().real)) for p in deco.projectors])
