"""Causal structure of unitary channels.

A unitary channel carries labeled input and output leg structure; input
a influences output b when the Heisenberg image of the b-leg algebra
fails to commute with the a-leg algebra.  Collecting the influencing
pairs gives the channel's causal structure as a labeled relation.

Two independent routes decide no-influence: the algebraic commutator
test (fast, relative tolerance on Frobenius norms) and a Choi-operator
factorization test (trace-norm tolerance).  They are kept separate so
each can serve as an oracle for the other.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .algebra import MatrixSubalgebra, matrix_units, orthonormalize
from .errors import BorderlineToleranceWarning, InputError, NumericsError
from .relations import Relation
from .tensorspace import DIM_CAP, TensorSpace, dagger

INFLUENCE_REL_TOL = 1e-9
CHOI_TRACE_TOL = 1e-8
UNITARITY_TOL = 1e-10


@dataclass
class UnitaryChannel:
    """Unitary matrix with labeled input and output tensor legs.

    The matrix maps in-space coordinates to out-space coordinates in the
    row-major product basis of each ordered factor list.
    """

    matrix: np.ndarray
    in_space: TensorSpace
    out_space: TensorSpace

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        din = self.in_space.total_dim
        dout = self.out_space.total_dim
        if din != dout:
            raise InputError(f"input dim {din} != output dim {dout}")
        if din > DIM_CAP:
            raise InputError(f"total dimension {din} exceeds cap {DIM_CAP}")
        if self.matrix.shape != (dout, din):
            raise InputError(f"matrix shape {self.matrix.shape}, expected "
                             f"({dout}, {din})")
        resid = np.linalg.norm(dagger(self.matrix) @ self.matrix
                               - np.eye(din))
        if resid > UNITARITY_TOL * np.sqrt(din) * 100:
            raise NumericsError(f"matrix is not unitary "
                                f"(residual {resid:.2e})")

    @property
    def dim(self) -> int:
        return self.in_space.total_dim

    def heisenberg(self, out_op) -> np.ndarray:
        """U^dag (op) U: pull an output-frame operator back to inputs."""
        return dagger(self.matrix) @ np.asarray(out_op, complex) @ self.matrix

    def schrodinger(self, in_op) -> np.ndarray:
        return self.matrix @ np.asarray(in_op, complex) @ dagger(self.matrix)

    def tensor(self, other: "UnitaryChannel") -> "UnitaryChannel":
        for l in other.in_space.labels:
            if l in self.in_space.labels:
                raise InputError(f"duplicate input label {l!r} in tensor")
        for l in other.out_space.labels:
            if l in self.out_space.labels:
                raise InputError(f"duplicate output label {l!r} in tensor")
        return UnitaryChannel(
            np.kron(self.matrix, other.matrix),
            TensorSpace(self.in_space.factors + other.in_space.factors),
            TensorSpace(self.out_space.factors + other.out_space.factors))

    def relabeled(self, in_map=None, out_map=None) -> "UnitaryChannel":
        in_map = in_map or {}
        out_map = out_map or {}
        new_in = TensorSpace(tuple((in_map.get(l, l), d)
                                   for l, d in self.in_space.factors))
        new_out = TensorSpace(tuple((out_map.get(l, l), d)
                                    for l, d in self.out_space.factors))
        return UnitaryChannel(self.matrix, new_in, new_out)

    def with_leg_order(self, in_labels=None, out_labels=None):
        """Same channel with reordered leg lists (matrix permuted to match)."""
        in_labels = list(in_labels) if in_labels is not None \
            else list(self.in_space.labels)
        out_labels = list(out_labels) if out_labels is not None \
            else list(self.out_space.labels)
        pin = self.in_space.permutation_to(in_labels)
        pout = self.out_space.permutation_to(out_labels)
        return UnitaryChannel(pout @ self.matrix @ pin.T,
                              self.in_space.subspace(in_labels),
                              self.out_space.subspace(out_labels))


def _space_to_json(space: TensorSpace) -> list:
    return [{"label": l, "dim": d} for l, d in space.factors]


def _space_from_json(items, side) -> TensorSpace:
    if not isinstance(items, list):
        raise InputError(f"{side} legs must be a list")
    factors = []
    for it in items:
        if not isinstance(it, dict) or "label" not in it or "dim" not in it:
            raise InputError(f"each {side} leg needs 'label' and 'dim'")
        factors.append((str(it["label"]), int(it["dim"])))
    return TensorSpace(tuple(factors))


def matrix_to_cells(mat) -> list:
    """Complex matrix as nested lists of [re, im] pairs."""
    return [[[float(np.real(x)), float(np.imag(x))] for x in row]
            for row in np.asarray(mat)]


def matrix_from_cells(rows, dout, din) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != dout:
        raise InputError(f"matrix must have {dout} rows")
    mat = np.zeros((dout, din), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != din:
            raise InputError(f"matrix row {i} has the wrong length")
        for j, cell in enumerate(row):
            if not isinstance(cell, list) or len(cell) != 2:
                raise InputError("matrix entries must be [re, im] pairs")
            mat[i, j] = float(cell[0]) + 1j * float(cell[1])
    return mat


def unitary_to_json(U: UnitaryChannel) -> str:
    doc = {"in": _space_to_json(U.in_space),
           "out": _space_to_json(U.out_space),
           "matrix": matrix_to_cells(U.matrix)}
    return json.dumps(doc, indent=2) + "\n"


def unitary_from_json(text: str) -> UnitaryChannel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid unitary JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("unitary JSON must be an object")
    for key in ("in", "out", "matrix"):
        if key not in doc:
            raise InputError(f"unitary JSON missing {key!r}")
    in_space = _space_from_json(doc["in"], "in")
    out_space = _space_from_json(doc["out"], "out")
    mat = matrix_from_cells(doc["matrix"], out_space.total_dim,
                            in_space.total_dim)
    return UnitaryChannel(mat, in_space, out_space)


def load_unitary(path) -> UnitaryChannel:
    with open(path, "r", encoding="utf-8") as fh:
        return unitary_from_json(fh.read())


def heisenberg_image(U: UnitaryChannel, betas) -> MatrixSubalgebra:
    """The subalgebra U^dag(B_beta) on the input space.

    Basis: conjugated matrix units of the composite beta legs (exact,
    no closure iteration needed since conjugation preserves spans).
    Generators: conjugated per-leg units, kept for cheap commutant work.
    """
    betas = _ordered_subset(U.out_space, betas, "output")
    if not betas:
        raise InputError("heisenberg_image needs at least one output leg")
    sub = U.out_space.subspace(betas)
    basis = np.stack([
        U.heisenberg(U.out_space.embed(e, betas))
        for e in matrix_units(sub.total_dim)])
    gens = np.stack([
        U.heisenberg(U.out_space.embed(e, [b]))
        for b in betas for e in matrix_units(U.out_space.dim(b))])
    return MatrixSubalgebra(U.in_space, orthonormalize(basis),
                            generators=gens)


def _ordered_subset(space: TensorSpace, labels, side) -> list[str]:
    labels = list(labels)
    for l in labels:
        if l not in space.labels:
            raise InputError(f"unknown {side} leg {l!r}")
    if len(set(labels)) != len(labels):
        raise InputError(f"duplicate {side} legs in {labels}")
    return [l for l in space.labels if l in set(labels)]


def _move_leg_front(g: np.ndarray, space: TensorSpace, label: str):
    """Reshape a matrix on the space so the named leg is the first index
    pair: returns array (d, R, d, R)."""
    dims = space.dims
    n = len(dims)
    k = space.index(label)
    d = dims[k]
    big = g.reshape(dims + dims)
    order = [k] + [i for i in range(n) if i != k]
    axes = order + [n + i for i in order]
    moved = np.transpose(big, axes)
    R = g.shape[0] // d
    return moved.reshape(d, R, d, R)


def pair_commutator_norm(U: UnitaryChannel, a: str, b: str) -> float:
    """Max raw Frobenius norm of [U^dag(E (x) 1), F (x) 1] over matrix
    units E of the b output leg and F of the a input leg.

    Uses a closed form: with the image g in a-leg-first coordinates
    (d, R, d, R), the squared norm for unit F_kl is the off-diagonal
    block mass in column k plus the off-diagonal mass in row l plus the
    squared distance between the k-th and l-th diagonal blocks.  All
    three terms are sums of squares (differences taken before squaring),
    so commuting pairs come out at true roundoff scale instead of
    suffering cancellation.
    """
    db = U.out_space.dim(b)
    best = 0.0
    for e in matrix_units(db):
        g = U.heisenberg(U.out_space.embed(e, [b]))
        g4 = _move_leg_front(g, U.in_space, a)
        sq = np.einsum("irjs->ij", np.abs(g4) ** 2)
        off = sq.copy()
        np.fill_diagonal(off, 0.0)
        col_off = off.sum(axis=0)
        row_off = off.sum(axis=1)
        dg = np.einsum("mrms->mrs", g4)
        diff = dg[:, None, :, :] - dg[None, :, :, :]
        d1 = np.einsum("klrs->kl", np.abs(diff) ** 2)
        n2 = col_off[:, None] + row_off[None, :] + d1
        best = max(best, float(n2.max()))
    return float(np.sqrt(max(best, 0.0)))


def _influence_scale(U: UnitaryChannel, da: int, db: int) -> float:
    # |E (x) 1| on each side: sqrt(D/da) * sqrt(D/db).
    D = U.dim
    return float(np.sqrt(D / da) * np.sqrt(D / db))


def influences(U: UnitaryChannel, a: str, b: str,
               rel_tol=INFLUENCE_REL_TOL, warn=True) -> bool:
    """Whether input leg a causally influences output leg b."""
    if a not in U.in_space.labels:
        raise InputError(f"unknown input leg {a!r}")
    if b not in U.out_space.labels:
        raise InputError(f"unknown output leg {b!r}")
    raw = pair_commutator_norm(U, a, b)
    scale = _influence_scale(U, U.in_space.dim(a), U.out_space.dim(b))
    cut = rel_tol * scale
    if warn and cut / 10 < raw < cut * 10:
        warnings.warn(
            f"influence test for ({a}, {b}) is borderline: commutator "
            f"norm {raw:.3e} vs threshold {cut:.3e}",
            BorderlineToleranceWarning, stacklevel=2)
    return raw > cut


def causal_structure(U: UnitaryChannel,
                     rel_tol=INFLUENCE_REL_TOL) -> Relation:
    """The relation of influencing (input, output) pairs."""
    pairs = set()
    for a in U.in_space.labels:
        for b in U.out_space.labels:
            if influences(U, a, b, rel_tol, warn=False):
                pairs.add((a, b))
    return Relation(U.in_space.labels, U.out_space.labels,
                    frozenset(pairs))


@dataclass
class CausalReport:
    """Causal structure plus the raw evidence behind each decision."""

    relation: Relation
    raw_norms: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    borderline: list = field(default_factory=list)


def causal_structure_report(U: UnitaryChannel,
                            rel_tol=INFLUENCE_REL_TOL) -> CausalReport:
    pairs = set()
    raw_norms = {}
    thresholds = {}
    borderline = []
    for a in U.in_space.labels:
        for b in U.out_space.labels:
            raw = pair_commutator_norm(U, a, b)
            cut = rel_tol * _influence_scale(
                U, U.in_space.dim(a), U.out_space.dim(b))
            raw_norms[(a, b)] = raw
            thresholds[(a, b)] = cut
            if cut / 10 < raw < cut * 10:
                borderline.append((a, b))
            if raw > cut:
                pairs.add((a, b))
    rel = Relation(U.in_space.labels, U.out_space.labels, frozenset(pairs))
    return CausalReport(rel, raw_norms, thresholds, borderline)


def composite_influences(U: UnitaryChannel, alphas, betas,
                         rel_tol=INFLUENCE_REL_TOL) -> bool:
    """Whether the input subset influences the output subset jointly.

    Tests commutation of per-leg generators of the Heisenberg image of
    the beta legs against per-leg matrix units on the alpha legs; this
    decides commutation of the full generated algebras.
    """
    alphas = _ordered_subset(U.in_space, alphas, "input")
    betas = _ordered_subset(U.out_space, betas, "output")
    if not alphas or not betas:
        return False
    for b in betas:
        db = U.out_space.dim(b)
        for e in matrix_units(db):
            g = U.heisenberg(U.out_space.embed(e, [b]))
            ng = np.linalg.norm(g)
            for a in alphas:
                for f in matrix_units(U.in_space.dim(a)):
                    femb = U.in_space.embed(f, [a])
                    c = np.linalg.norm(g @ femb - femb @ g)
                    if c > rel_tol * ng * np.linalg.norm(femb):
                        return True
    return False


def _choi_operator(U: UnitaryChannel, betas):
    """Trace-normalized Choi operator of Tr_{out minus betas} after U.

    Lives on (all input legs) tensor (the beta legs), with the beta
    factors relabeled 'choi:<label>'.  Row-major index order: inputs
    first, then betas in output order.
    """
    D = U.dim
    d_beta = 1
    for b in betas:
        d_beta *= U.out_space.dim(b)
    if D * d_beta > DIM_CAP:
        raise InputError(
            f"Choi operator dimension {D * d_beta} exceeds cap {DIM_CAP}")
    perm, _ = U.out_space.front_permutation(betas)
    w = (perm @ U.matrix).reshape(d_beta, D // d_beta, D)
    rho = np.einsum("bri,crj->ibjc", w, w.conj()) / D
    rho = rho.reshape(D * d_beta, D * d_beta)
    factors = U.in_space.factors + tuple(
        (f"choi:{b}", U.out_space.dim(b)) for b in betas)
    return rho, TensorSpace(factors)


def choi_factorization_residual(U: UnitaryChannel, alphas, betas) -> float:
    """Trace-norm distance of the reduced Choi operator from the
    no-influence form (maximally mixed on alphas) tensor (rest)."""
    alphas = _ordered_subset(U.in_space, alphas, "input")
    betas = _ordered_subset(U.out_space, betas, "output")
    if not alphas or not betas:
        return 0.0
    rho, rho_space = _choi_operator(U, betas)
    keep = [l for l in rho_space.labels if l not in set(alphas)]
    d_alpha = 1
    for a in alphas:
        d_alpha *= U.in_space.dim(a)
    sigma = rho_space.partial_trace(rho, keep)
    candidate = rho_space.embed(sigma, keep) / d_alpha
    return float(np.linalg.norm(rho - candidate, ord="nuc"))


def no_influence_choi_oracle(U: UnitaryChannel, alphas, betas,
                             tol=CHOI_TRACE_TOL) -> bool:
    """Independent no-influence test: the marginal output on the beta
    legs, as a channel, ignores the alpha inputs."""
    return choi_factorization_residual(U, alphas, betas) <= tol


def atomicity_check(U: UnitaryChannel, rel_tol=INFLUENCE_REL_TOL) -> bool:
    """Composite influence reduces to singleton influence, over the full
    powerset of both sides (desk scale only)."""
    na = len(U.in_space.labels)
    nb = len(U.out_space.labels)
    if na + nb > 12:
        raise InputError(
            f"powerset check over {na}+{nb} legs is too large")
    singles = {(a, b): influences(U, a, b, rel_tol, warn=False)
               for a in U.in_space.labels for b in U.out_space.labels}
    for mask_a in range(1, 1 << na):
        alphas = [U.in_space.labels[i] for i in range(na)
                  if mask_a >> i & 1]
        for mask_b in range(1, 1 << nb):
            betas = [U.out_space.labels[j] for j in range(nb)
                     if mask_b >> j & 1]
            composite = composite_influences(U, alphas, betas, rel_tol)
            pointwise = any(singles[(a, b)] for a in alphas for b in betas)
            if composite != pointwise:
                return False
    return True
