"""Concept lattices of relations and the circuit shapes they induce.

The closed input sets of a relation (fixed points of the Galois closure)
form a complete lattice under inclusion.  Each node pairs a closed input
set alpha with the outputs beta reachable from all of alpha; inputs and
outputs attach to nodes via the maps lambda and mu.  Read as a DAG of
cover edges, the lattice is the canonical wiring diagram ("circuit
shape") whose connectivity is exactly the relation: input a feeds a gate
at lambda(a), output b leaves the gate at mu(b), and a reaches b along
cover chains precisely when lambda(a) <= mu(b).

Node identity is the sorted alpha tuple; nodes are listed sorted by
(|alpha|, alpha), which is also a linear extension of the order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .relations import (Relation, check_c3ep, common_children, common_parents,
                        closure_inputs, parents)

# Enumerating closed sets walks pairwise intersections; fine up to about
# ten labels per side, guarded here.
MAX_SIDE = 12


@dataclass(frozen=True)
class ConceptNode:
    """A lattice node: closed input set with its reachable outputs."""

    alpha: tuple[str, ...]
    beta: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(self.alpha))
        object.__setattr__(self, "beta", tuple(self.beta))
        if list(self.alpha) != sorted(self.alpha):
            raise InputError(f"alpha not sorted: {self.alpha}")
        if list(self.beta) != sorted(self.beta):
            raise InputError(f"beta not sorted: {self.beta}")


class ConceptLattice:
    """Concept lattice of a relation, used directly as a circuit shape.

    Attributes: ``inputs``/``outputs`` (label order), ``nodes`` (tuple of
    ConceptNode in canonical order), ``covers`` (index pairs (i, j) with
    node i covered by node j), ``lam``/``mu`` (label to node index).
    """

    def __init__(self, inputs, outputs, nodes, covers, lam, mu):
        self.inputs = tuple(inputs)
        self.outputs = tuple(outputs)
        self.nodes = tuple(nodes)
        self.covers = tuple(tuple(c) for c in covers)
        self.lam = dict(lam)
        self.mu = dict(mu)
        self._index = {n.alpha: i for i, n in enumerate(self.nodes)}
        self._beta_index = {n.beta: i for i, n in enumerate(self.nodes)}
        self._leq = self._compute_leq()
        self._validate()

    def _compute_leq(self) -> np.ndarray:
        n = len(self.nodes)
        leq = np.eye(n, dtype=bool)
        for i, j in self.covers:
            leq[i, j] = True
        # Floyd-Warshall style closure; n stays small.
        for k in range(n):
            for i in range(n):
                if leq[i, k]:
                    leq[i] |= leq[k]
        return leq

    def _validate(self):
        n = len(self.nodes)
        if len(self._index) != n:
            raise InputError("duplicate node alpha sets")
        for i, j in self.covers:
            if not (0 <= i < n and 0 <= j < n):
                raise InputError(f"cover ({i},{j}) out of range")
            if i == j or self._leq[j, i]:
                raise InputError(f"cover ({i},{j}) violates the order")
        for a in self.inputs:
            if a not in self.lam or not (0 <= self.lam[a] < n):
                raise InputError(f"lambda missing or invalid for input {a!r}")
        for b in self.outputs:
            if b not in self.mu or not (0 <= self.mu[b] < n):
                raise InputError(f"mu missing or invalid for output {b!r}")

    # -- order helpers ---------------------------------------------------

    def __len__(self):
        return len(self.nodes)

    def leq(self, i: int, j: int) -> bool:
        return bool(self._leq[i, j])

    def index_of_alpha(self, alpha) -> int:
        key = tuple(sorted(alpha))
        if key not in self._index:
            raise InputError(f"no node with alpha {key}")
        return self._index[key]

    def index_of_beta(self, beta) -> int:
        key = tuple(sorted(beta))
        if key not in self._beta_index:
            raise InputError(f"no node with beta {key}")
        return self._beta_index[key]

    def bottom(self) -> int:
        mins = [i for i in range(len(self.nodes))
                if all(self._leq[i, j] for j in range(len(self.nodes)))]
        if len(mins) != 1:
            raise InputError("shape has no unique bottom node")
        return mins[0]

    def top(self) -> int:
        maxs = [j for j in range(len(self.nodes))
                if all(self._leq[i, j] for i in range(len(self.nodes)))]
        if len(maxs) != 1:
            raise InputError("shape has no unique top node")
        return maxs[0]

    def up_covers(self, i: int) -> list[int]:
        return sorted(j for x, j in self.covers if x == i)

    def down_covers(self, j: int) -> list[int]:
        return sorted(i for i, x in self.covers if x == j)

    def inputs_at(self, i: int) -> list[str]:
        return sorted(a for a in self.inputs if self.lam[a] == i)

    def outputs_at(self, i: int) -> list[str]:
        return sorted(b for b in self.outputs if self.mu[b] == i)

    def linear_extension(self) -> list[int]:
        """Node indices ordered by (|alpha|, alpha): bottom-up traversal.

        A strict subset has strictly smaller size, so this key is a
        topological order of the cover DAG; verified before returning.
        """
        n = len(self.nodes)
        order = sorted(range(n), key=lambda i: (len(self.nodes[i].alpha),
                                                self.nodes[i].alpha, i))
        seen = set()
        for i in order:
            for d in self.down_covers(i):
                if d not in seen:
                    raise InputError("cover DAG is not acyclic")
            seen.add(i)
        return order


# Circuit shapes and concept lattices share one representation here.
CircuitShape = ConceptLattice


# -- construction --------------------------------------------------------

def enumerate_closed_input_sets(G: Relation) -> list[frozenset[str]]:
    """All closed input sets, sorted by (size, sorted labels).

    Closed sets are the intersection closure of the full input set
    together with all single-output parent sets.  Walks pairwise
    intersections to a fixed point; intended for small relations (about
    ten labels per side at most).
    """
    if len(G.inputs) > MAX_SIDE or len(G.outputs) > MAX_SIDE:
        raise InputError(
            f"relation too large for closed-set enumeration "
            f"({len(G.inputs)}x{len(G.outputs)}, limit {MAX_SIDE} per side)")
    closed = {frozenset(G.inputs)}
    for b in G.outputs:
        closed.add(parents(G, b))
    while True:
        new = set()
        for s in closed:
            for t in closed:
                inter = s & t
                if inter not in closed:
                    new.add(inter)
        if not new:
            break
        closed |= new
    return sorted(closed, key=lambda s: (len(s), tuple(sorted(s))))


def build_concept_lattice(G: Relation) -> ConceptLattice:
    """Concept lattice of a relation, with covers, lambda and mu."""
    closed = enumerate_closed_input_sets(G)
    nodes = []
    for alpha in closed:
        beta = common_children(G, alpha)
        nodes.append(ConceptNode(tuple(sorted(alpha)), tuple(sorted(beta))))
    n = len(nodes)
    sets = [frozenset(nd.alpha) for nd in nodes]
    strictly_below = [[i for i in range(n)
                       if sets[i] < sets[j]] for j in range(n)]
    covers = []
    for j in range(n):
        for i in strictly_below[j]:
            if not any(sets[i] < sets[m] and sets[m] < sets[j]
                       for m in strictly_below[j]):
                covers.append((i, j))
    lam = {}
    for a in G.inputs:
        alpha = tuple(sorted(closure_inputs(G, {a})))
        lam[a] = [k for k, nd in enumerate(nodes) if nd.alpha == alpha][0]
    mu = {}
    for b in G.outputs:
        alpha = tuple(sorted(parents(G, b)))
        mu[b] = [k for k, nd in enumerate(nodes) if nd.alpha == alpha][0]
    return ConceptLattice(G.inputs, G.outputs, nodes, covers, lam, mu)


# -- lattice operations --------------------------------------------------

def meet(lattice: ConceptLattice, indices) -> int:
    """Greatest lower bound of a set of nodes (top for the empty set)."""
    indices = list(indices)
    alpha = set(lattice.inputs)
    for i in indices:
        alpha &= set(lattice.nodes[i].alpha)
    return lattice.index_of_alpha(alpha)


def join(lattice: ConceptLattice, indices) -> int:
    """Least upper bound of a set of nodes (bottom for the empty set)."""
    indices = list(indices)
    beta = set(lattice.outputs)
    for i in indices:
        beta &= set(lattice.nodes[i].beta)
    return lattice.index_of_beta(beta)


def connectivity(shape: ConceptLattice) -> Relation:
    """The relation realized by the shape: a reaches b iff there is a
    cover chain from lambda(a) up to mu(b)."""
    pairs = set()
    for a in shape.inputs:
        for b in shape.outputs:
            if shape.leq(shape.lam[a], shape.mu[b]):
                pairs.add((a, b))
    return Relation(shape.inputs, shape.outputs, frozenset(pairs))


def count_paths(shape: ConceptLattice, a: str, b: str) -> int:
    """Number of cover-edge paths from lambda(a) to mu(b)."""
    if a not in shape.lam:
        raise InputError(f"unknown input {a!r}")
    if b not in shape.mu:
        raise InputError(f"unknown output {b!r}")
    src, dst = shape.lam[a], shape.mu[b]
    counts = {src: 1}
    for i in shape.linear_extension():
        if i == src:
            continue
        counts[i] = sum(counts.get(d, 0) for d in shape.down_covers(i))
    return counts.get(dst, 0)


@dataclass(frozen=True)
class LatticeC3Result:
    satisfied: bool
    # First input/output pair connected by more than one path, if any.
    evidence: tuple[str, str, int] | None = None


def check_c3ep_lattice(G: Relation) -> LatticeC3Result:
    """Decide the C3 exclusion property through the lattice.

    Two lattice-side characterizations are evaluated: (iii) every related
    pair is joined by at most one cover path, and (iv) at every node with
    nonempty alpha, distinct upper covers have disjoint beta sets.  Both
    must agree with each other and with ``check_c3ep``; disagreement
    raises, since the three are provably equivalent.
    """
    shape = build_concept_lattice(G)
    evidence = None
    for a in sorted(G.inputs):
        for b in sorted(G.outputs):
            k = count_paths(shape, a, b)
            if k > 1:
                evidence = (a, b, k)
                break
        if evidence:
            break
    multiplicity_ok = evidence is None

    disjoint_ok = True
    for i, nd in enumerate(shape.nodes):
        if not nd.alpha:
            continue
        ups = shape.up_covers(i)
        for x in range(len(ups)):
            for y in range(x + 1, len(ups)):
                bw = set(shape.nodes[ups[x]].beta)
                bw2 = set(shape.nodes[ups[y]].beta)
                if bw & bw2:
                    disjoint_ok = False
    relational = check_c3ep(G).satisfied
    if not (multiplicity_ok == disjoint_ok == relational):
        raise AssertionError(
            "C3 exclusion characterizations disagree: "
            f"path-multiplicity={multiplicity_ok} "
            f"cover-disjointness={disjoint_ok} relational={relational}")
    return LatticeC3Result(multiplicity_ok, evidence)


def overlap_lemma_check(G: Relation) -> int:
    """Verify the parent-overlap identity at every branching node.

    For a relation with the C3 exclusion property, at any node v with
    nonempty alpha and any two distinct upper covers w, w', the unions of
    parent sets over beta_w and beta_w' intersect exactly in alpha_v.
    Returns the number of (v, w, w') triples checked; raises on a
    violation (which would contradict the exclusion property) and raises
    InputError when the relation does not satisfy the property.
    """
    if not check_c3ep(G).satisfied:
        raise InputError(
            "overlap lemma applies only to relations with the C3 "
            "exclusion property")
    shape = build_concept_lattice(G)
    checked = 0
    for i, nd in enumerate(shape.nodes):
        if not nd.alpha:
            continue
        ups = shape.up_covers(i)
        for x in range(len(ups)):
            for y in range(x + 1, len(ups)):
                pa_w = set()
                for b in shape.nodes[ups[x]].beta:
                    pa_w |= common_parents(G, {b})
                pa_w2 = set()
                for b in shape.nodes[ups[y]].beta:
                    pa_w2 |= common_parents(G, {b})
                if pa_w & pa_w2 != set(nd.alpha):
                    raise AssertionError(
                        f"overlap identity fails at alpha={nd.alpha}: "
                        f"{sorted(pa_w & pa_w2)} != {list(nd.alpha)}")
                checked += 1
    return checked


# -- serialization -------------------------------------------------------

def _set_label(items) -> str:
    return "{" + ",".join(items) + "}"


def to_dot(shape: ConceptLattice) -> str:
    """Graphviz rendering: cover edges drawn upward, dashed stubs for
    attached inputs and outputs, nodes ranked by height."""
    n = len(shape.nodes)
    heights = {}
    for i in shape.linear_extension():
        downs = shape.down_covers(i)
        heights[i] = 0 if not downs else 1 + max(heights[d] for d in downs)
    lines = ["digraph shape {", "  rankdir=BT;",
             '  node [shape=box, fontname="monospace"];']
    for i, nd in enumerate(shape.nodes):
        label = f"{_set_label(nd.alpha)} | {_set_label(nd.beta)}"
        lines.append(f'  n{i} [label="{label}"];')
    for i, j in sorted(shape.covers):
        lines.append(f"  n{i} -> n{j};")
    for a in shape.inputs:
        lines.append(f'  in_{a} [shape=plaintext, label="{a}"];')
        lines.append(f"  in_{a} -> n{shape.lam[a]} [style=dashed];")
    for b in shape.outputs:
        lines.append(f'  out_{b} [shape=plaintext, label="{b}"];')
        lines.append(f"  n{shape.mu[b]} -> out_{b} [style=dashed];")
    by_height: dict[int, list[int]] = {}
    for i, h in heights.items():
        by_height.setdefault(h, []).append(i)
    for h in sorted(by_height):
        members = " ".join(f"n{i};" for i in sorted(by_height[h]))
        lines.append(f"  {{ rank=same; {members} }}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def shape_to_json(shape: ConceptLattice) -> dict:
    return {
        "inputs": list(shape.inputs),
        "outputs": list(shape.outputs),
        "nodes": [{"alpha": list(nd.alpha), "beta": list(nd.beta)}
                  for nd in shape.nodes],
        "covers": [list(c) for c in sorted(shape.covers)],
        "lambda": {a: shape.lam[a] for a in shape.inputs},
        "mu": {b: shape.mu[b] for b in shape.outputs},
    }


def shape_from_json(data) -> ConceptLattice:
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise InputError(f"invalid JSON: {e}") from e
    if not isinstance(data, dict):
        raise InputError("shape JSON must be an object")
    for key in ("inputs", "outputs", "nodes", "covers", "lambda", "mu"):
        if key not in data:
            raise InputError(f"shape JSON missing key {key!r}")
    try:
        nodes = [ConceptNode(tuple(nd["alpha"]), tuple(nd["beta"]))
                 for nd in data["nodes"]]
        return ConceptLattice(data["inputs"], data["outputs"], nodes,
                              [tuple(c) for c in data["covers"]],
                              dict(data["lambda"]), dict(data["mu"]))
    except (TypeError, KeyError) as e:
        raise InputError(f"malformed shape JSON: {e}") from e
