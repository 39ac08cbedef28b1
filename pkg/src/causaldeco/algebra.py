"""Finite-dimensional operator algebra toolkit.

Everything here works with unital *-subalgebras of matrices on a labeled
tensor space, represented by orthonormal bases under the Hilbert-Schmidt
inner product tr(X^dag Y).  The toolkit covers generated subalgebras,
commutants, centres, Wedderburn factorization of factors, simultaneous
splitting of commuting factors, reduction of an algebra onto one tensor
leg, and the joint sector decomposition of several commuting algebras
sharing a leg.  These are the numerical primitives the decomposer calls
at every lattice node.

Determinism: every routine that draws random elements takes a seed and
uses its own generator, so repeated runs give identical results.

Numerical policy: rank decisions use singular values against a relative
threshold scaled by sqrt(dimension); residuals that the mathematics says
must vanish are checked against absolute-free relative tolerances and
raise NumericsError when violated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericsError
from .tensorspace import DIM_CAP, TensorSpace, dagger

SVD_RANK_REL = 1e-9
COMM_REL_TOL = 1e-9
CLUSTER_REL = 1e-7
RESIDUAL_TOL = 1e-8
ISO_TOL = 1e-9
# Dense commutant solves build a D^2 x D^2 normal matrix.
COMMUTANT_DIM_CAP = 32


def matrix_units(d: int) -> list[np.ndarray]:
    """The d^2 standard matrix units E_ij in row-major (i, j) order."""
    units = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            units.append(e)
    return units


def _vec(mats: np.ndarray) -> np.ndarray:
    k = mats.shape[0]
    return mats.reshape(k, -1)


def orthonormalize(mats, rel=SVD_RANK_REL, floor=0.0) -> np.ndarray:
    """Orthonormal basis (stacked, shape (r, D, D)) for the span.

    Keeps singular directions with s > max(rel * s_max, floor) * sqrt(n)
    where n is the larger dimension of the stacked coefficient matrix.
    """
    mats = np.asarray(mats, dtype=complex)
    if mats.ndim == 2:
        mats = mats[None]
    if mats.shape[0] == 0:
        return mats.reshape(0, *mats.shape[1:])
    d = mats.shape[1]
    m = _vec(mats)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, d, d), dtype=complex)
    cut = max(rel * s[0], floor) * np.sqrt(max(m.shape))
    r = int(np.sum(s > cut))
    return vh[:r].reshape(r, d, d)


@dataclass
class MatrixSubalgebra:
    """Unital *-subalgebra given by an orthonormal basis of its span.

    ``generators`` optionally records a small generating set; commutant
    and centre computations prefer it, since the commutant of a *-closed
    generating set equals the commutant of the whole algebra.
    """

    ambient: TensorSpace
    basis: np.ndarray
    generators: np.ndarray | None = None

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=complex)
        d = self.ambient.total_dim
        if self.basis.ndim != 3 or self.basis.shape[1:] != (d, d):
            raise InputError(
                f"basis shape {self.basis.shape} does not match ambient "
                f"dimension {d}")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def coefficients(self, mat) -> np.ndarray:
        return _vec(self.basis).conj() @ np.asarray(mat, complex).reshape(-1)

    def project(self, mat) -> np.ndarray:
        coeff = self.coefficients(mat)
        return np.tensordot(coeff, self.basis, axes=(0, 0))

    def residual(self, mat) -> float:
        mat = np.asarray(mat, dtype=complex)
        norm = np.linalg.norm(mat)
        if norm == 0.0:
            return 0.0
        return float(np.linalg.norm(mat - self.project(mat)) / norm)

    def contains(self, mat, rel_tol=RESIDUAL_TOL) -> bool:
        return self.residual(mat) <= rel_tol

    def spans_subspace_of(self, other: "MatrixSubalgebra",
                          rel_tol=RESIDUAL_TOL) -> bool:
        return all(other.contains(b, rel_tol) for b in self.basis)

    def same_span(self, other: "MatrixSubalgebra",
                  rel_tol=RESIDUAL_TOL) -> bool:
        return (self.dim == other.dim
                and self.spans_subspace_of(other, rel_tol))

    def test_elements(self) -> np.ndarray:
        """Generators (with adjoints) when known, else the full basis."""
        if self.generators is not None and self.generators.shape[0] > 0:
            g = self.generators
            return np.concatenate([g, np.conj(np.transpose(g, (0, 2, 1)))])
        return self.basis

    @classmethod
    def full(cls, ambient: TensorSpace) -> "MatrixSubalgebra":
        d = ambient.total_dim
        basis = np.stack(matrix_units(d))
        return cls(ambient, basis, generators=None)

    @classmethod
    def scalars(cls, ambient: TensorSpace) -> "MatrixSubalgebra":
        d = ambient.total_dim
        return cls(ambient, (np.eye(d) / np.sqrt(d))[None])

    @classmethod
    def on_legs(cls, ambient: TensorSpace, labels) -> "MatrixSubalgebra":
        """Full algebra of the named legs tensored with identity."""
        sub = ambient.subspace(labels)
        gens = [ambient.embed(e, labels) for e in matrix_units(sub.total_dim)]
        basis = orthonormalize(np.stack(gens))
        return cls(ambient, basis, generators=np.stack(gens))


def algebra_closure(ambient: TensorSpace, generators) -> MatrixSubalgebra:
    """Smallest unital *-subalgebra containing the generators.

    Iterates left multiplication of the current span by the generators
    and their adjoints; once the span is stable under that and contains
    the identity it contains all words in the generators, hence the
    algebra.
    """
    d = ambient.total_dim
    gens = [np.asarray(g, dtype=complex) for g in generators]
    for g in gens:
        if g.shape != (d, d):
            raise InputError(f"generator shape {g.shape}, ambient {d}")
    seed_mats = [np.eye(d)] + gens + [dagger(g) for g in gens]
    basis = orthonormalize(np.stack(seed_mats))
    mult = [g for g in gens if np.linalg.norm(g) > 0]
    mult = mult + [dagger(g) for g in mult]
    while True:
        if basis.shape[0] == d * d:
            break
        prods = np.stack([g @ b for g in mult for b in basis]) if mult else None
        if prods is None:
            break
        vb = _vec(basis)
        vp = _vec(prods)
        resid = vp - (vp @ vb.conj().T) @ vb
        norms = np.linalg.norm(vp, axis=1)
        floor = SVD_RANK_REL * (norms.max() if norms.size else 1.0)
        new = orthonormalize(resid.reshape(-1, d, d), floor=floor)
        if new.shape[0] == 0:
            break
        basis = np.concatenate([basis, new])
        basis = orthonormalize(basis)
    stored = np.stack(gens) if gens else None
    return MatrixSubalgebra(ambient, basis, generators=stored)


def _commutant_normal_matrix(mats) -> np.ndarray:
    """N = sum_g M_g^dag M_g where M_g X = [g, X] in row-major vec form."""
    d = mats[0].shape[0]
    eye = np.eye(d)
    n = np.zeros((d * d, d * d), dtype=complex)
    for g in mats:
        gd = dagger(g)
        n += np.kron(gd @ g, eye)
        n += np.kron(eye, (g @ gd).T)
        n -= np.kron(gd, g.T)
        n -= np.kron(g, g.conj())
    return n


def commutant_of(mats, ambient: TensorSpace) -> MatrixSubalgebra:
    """Commutant of a set of matrices (adjoints are added automatically)."""
    d = ambient.total_dim
    if d > COMMUTANT_DIM_CAP:
        raise InputError(
            f"commutant solve needs ambient dim <= {COMMUTANT_DIM_CAP}, "
            f"got {d}")
    mats = [np.asarray(m, dtype=complex) for m in mats]
    mats = [m for m in mats if np.linalg.norm(m) > 0]
    mats = [m / np.linalg.norm(m) for m in mats]
    test = mats + [dagger(m) for m in mats]
    if not test:
        return MatrixSubalgebra.full(ambient)
    n = _commutant_normal_matrix(test)
    vals, vecs = np.linalg.eigh(n)
    vals = np.clip(vals, 0.0, None)
    top = vals[-1]
    # Eigenvalues are squared singular values of the stacked commutator
    # map.  The assembly above cancels the commuting part across a sum
    # of kron products, so even exact null directions carry absolute
    # dust linear in eps, not squared; the floor must sit above that,
    # which matters when the whole test set commutes and top itself is
    # assembly noise.
    noise = 100 * d * len(test) * np.finfo(float).eps
    cut = max(1e-12 * d * d * top, noise)
    null = vecs[:, vals <= cut]
    basis = np.transpose(null).reshape(-1, d, d)
    return MatrixSubalgebra(ambient, basis)


def commutant(S: MatrixSubalgebra) -> MatrixSubalgebra:
    return commutant_of(S.test_elements(), S.ambient)


def centre(S: MatrixSubalgebra) -> MatrixSubalgebra:
    """Elements of S commuting with all of S, solved in S coordinates."""
    k = S.dim
    if k == 0:
        raise InputError("centre of an empty algebra")
    d = S.ambient.total_dim
    test = S.test_elements()
    rows = []
    for g in test:
        block = np.stack([b @ g - g @ b for b in S.basis])
        rows.append(_vec(block).T)
    m = np.concatenate(rows, axis=0)
    # m has >= k rows, so the reduced vh still spans all k coefficient
    # directions; full_matrices would allocate on the row count
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    if s.size and s[0] > 0:
        cut = SVD_RANK_REL * s[0] * np.sqrt(max(m.shape))
        rank = int(np.sum(s > cut))
    else:
        rank = 0
    coeffs = vh[rank:].conj()
    mats = np.tensordot(coeffs, S.basis, axes=(1, 0))
    return MatrixSubalgebra(S.ambient, orthonormalize(mats))


def is_factor(S: MatrixSubalgebra) -> bool:
    return centre(S).dim == 1


def _cluster_sorted(vals, rel=CLUSTER_REL) -> list[list[int]]:
    spread = float(vals[-1] - vals[0]) if len(vals) else 0.0
    clusters = [[0]]
    for k in range(1, len(vals)):
        if spread > 0 and vals[k] - vals[k - 1] >= rel * spread:
            clusters.append([k])
        else:
            clusters[-1].append(k)
    return clusters


def _random_hermitian(basis, rng) -> np.ndarray:
    k = basis.shape[0]
    c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    h = np.tensordot(c, basis, axes=(0, 0))
    return (h + dagger(h)) / 2.0


def minimal_central_projectors(S: MatrixSubalgebra, seed=0):
    """Minimal projectors of the centre, via a generic central Hermitian.

    Draws a random Hermitian central element, clusters its spectrum, and
    accepts when the number of clusters equals the centre dimension (so
    each spectral projector is a minimal central one).  Up to three
    redraws; failure past that raises.
    """
    Z = centre(S)
    d = S.ambient.total_dim
    if Z.dim == 1:
        return [np.eye(d)]
    rng = np.random.default_rng(seed)
    for _ in range(4):
        h = _random_hermitian(Z.basis, rng)
        vals, vecs = np.linalg.eigh(h)
        clusters = _cluster_sorted(vals)
        if len(clusters) != Z.dim:
            continue
        projs = []
        ok = True
        for cl in clusters:
            v = vecs[:, cl]
            p = v @ dagger(v)
            if not Z.contains(p, RESIDUAL_TOL * 10):
                ok = False
                break
            projs.append(p)
        if not ok:
            continue
        total = sum(projs)
        if np.linalg.norm(total - np.eye(d)) > RESIDUAL_TOL * np.sqrt(d):
            continue
        return projs
    raise NumericsError(
        "could not isolate minimal central projectors after 3 redraws")


@dataclass
class UnitaryIso:
    """Unitary matrix carrying a domain and codomain leg structure."""

    matrix: np.ndarray
    domain: TensorSpace
    codomain: TensorSpace

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.domain.total_dim
        if self.codomain.total_dim != d:
            raise InputError(
                f"domain dim {d} != codomain dim {self.codomain.total_dim}")
        if self.matrix.shape != (d, d):
            raise InputError(f"matrix shape {self.matrix.shape}, expected "
                             f"({d}, {d})")
        resid = np.linalg.norm(dagger(self.matrix) @ self.matrix - np.eye(d))
        if resid > 1e-7 * np.sqrt(d):
            raise NumericsError(f"matrix is not unitary (residual {resid:.2e})")

    def conj(self, mat) -> np.ndarray:
        return self.matrix @ np.asarray(mat, complex) @ dagger(self.matrix)

    def inv_conj(self, mat) -> np.ndarray:
        return dagger(self.matrix) @ np.asarray(mat, complex) @ self.matrix


def _projected_unitary(m) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def factorize_factor(B: MatrixSubalgebra, seed=0, labels=("f", "c")):
    """Wedderburn form of a factor: unitary V with V B V^dag = M_d x 1_m.

    Returns (iso, d, m) where d^2 is the dimension of B and m the
    multiplicity.  Construction: spectral projectors of a generic
    Hermitian element give the d minimal projectors; polar parts of
    p_i s p_1 for a generic s in B give connecting partial isometries;
    rows of V are the vectors u_i f_mu over an orthonormal basis f of
    the first projector's range.  Verified by conjugating bases both
    ways.
    """
    ambient = B.ambient
    D = ambient.total_dim
    k = B.dim
    d = int(round(np.sqrt(k)))
    if d * d != k:
        raise NumericsError(f"algebra dimension {k} is not a square")
    if D % d != 0:
        raise NumericsError(f"dim {d} factor cannot sit in ambient {D}")
    m = D // d
    codomain = TensorSpace(((labels[0], d), (labels[1], m)))
    if not is_factor(B):
        raise NumericsError("factorize_factor needs a factor")
    if d == 1:
        return UnitaryIso(np.eye(D), ambient, codomain), 1, D
    rng = np.random.default_rng(seed)

    projs = None
    for _ in range(4):
        h = _random_hermitian(B.basis, rng)
        vals, vecs = np.linalg.eigh(h)
        clusters = _cluster_sorted(vals)
        if len(clusters) != d or any(len(c) != m for c in clusters):
            continue
        cand = [vecs[:, c] @ dagger(vecs[:, c]) for c in clusters]
        if all(B.contains(p, RESIDUAL_TOL * 10) for p in cand):
            projs = cand
            break
    if projs is None:
        raise NumericsError(
            "could not split a generic spectral decomposition into "
            f"{d} clusters of multiplicity {m}")

    isometries = None
    for _ in range(4):
        c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        s = np.tensordot(c, B.basis, axes=(0, 0))
        cand = [projs[0]]
        ok = True
        for i in range(1, d):
            q = projs[i] @ s @ projs[0]
            uu, sv, vv = np.linalg.svd(q)
            if sv.size < m or sv[m - 1] <= 1e-8 * sv[0]:
                ok = False
                break
            cand.append(uu[:, :m] @ vv[:m, :])
        if ok:
            isometries = cand
            break
    if isometries is None:
        raise NumericsError("connecting partial isometries degenerate "
                            "after 3 redraws")

    pvals, pvecs = np.linalg.eigh(projs[0])
    f = pvecs[:, -m:]
    rows = []
    for i in range(d):
        block = isometries[i] @ f
        for mu in range(m):
            rows.append(dagger(block[:, mu]))
    v = np.stack(rows)
    v = _projected_unitary(v)
    iso = UnitaryIso(v, ambient, codomain)

    # Verify both directions of the claimed form.
    for b in B.basis:
        _, resid = codomain.restrict(iso.conj(b), [labels[0]])
        if resid > RESIDUAL_TOL:
            raise NumericsError(
                f"factorization verification failed (residual {resid:.2e})")
    for e in matrix_units(d):
        back = iso.inv_conj(codomain.embed(e, [labels[0]]))
        if B.residual(back) > RESIDUAL_TOL:
            raise NumericsError("factorization verification failed on the "
                                "reverse direction")
    return iso, d, m


def _check_pairwise_commuting(bs, rel_tol=COMM_REL_TOL):
    for i in range(len(bs)):
        for j in range(i + 1, len(bs)):
            for x in bs[i].test_elements():
                nx = np.linalg.norm(x)
                for y in bs[j].test_elements():
                    ny = np.linalg.norm(y)
                    if nx == 0 or ny == 0:
                        continue
                    c = np.linalg.norm(x @ y - y @ x) / (nx * ny)
                    if c > rel_tol:
                        raise NumericsError(
                            f"algebras {i} and {j} do not commute "
                            f"(relative commutator {c:.2e})")


def split_commuting_factors(bs, ambient: TensorSpace | None = None,
                            seed=0, labels=None):
    """Simultaneous tensor split of pairwise commuting factors.

    Produces a unitary iso V from the common ambient onto a product of
    legs Z_1 x ... x Z_n such that V B_k V^dag acts on leg k alone.  The
    first n-1 legs have the dimensions of their factors; the last leg
    absorbs whatever multiplicity remains, so it contains (and under a
    spanning hypothesis equals) the image of B_n.
    """
    bs = list(bs)
    if not bs:
        raise InputError("need at least one algebra to split")
    if ambient is None:
        ambient = bs[0].ambient
    for b in bs:
        if b.ambient.total_dim != ambient.total_dim:
            raise InputError("algebras live on different ambient dimensions")
    _check_pairwise_commuting(bs)
    for i, b in enumerate(bs):
        if not is_factor(b):
            raise NumericsError(f"algebra {i} is not a factor")
    n = len(bs)
    if labels is None:
        labels = [f"z{i + 1}" for i in range(n)]
    D = ambient.total_dim
    v_tot = np.eye(D, dtype=complex)
    prefix = 1
    cur_dim = D
    cur = [MatrixSubalgebra(TensorSpace((("t", cur_dim),)), b.basis,
                            b.generators) for b in bs]
    dims = []
    rng = np.random.default_rng(seed)
    for k in range(n - 1):
        tail_space = TensorSpace((("t", cur_dim),))
        bk = MatrixSubalgebra(tail_space, cur[k].basis, cur[k].generators)
        iso, d, mult = factorize_factor(
            bk, seed=int(rng.integers(0, 2**31)), labels=("f", "c"))
        w = np.kron(np.eye(prefix), iso.matrix)
        v_tot = w @ v_tot
        dims.append(d)
        pair = TensorSpace((("f", d), ("c", mult)))
        for j in range(k + 1, n):
            reduced = []
            for mat in cur[j].basis:
                moved = iso.conj(mat)
                small, resid = pair.restrict(moved, ["c"])
                if resid > RESIDUAL_TOL:
                    raise NumericsError(
                        f"algebra {j} leaks onto the split leg "
                        f"(residual {resid:.2e})")
                reduced.append(small)
            gens = None
            if cur[j].generators is not None:
                gens = []
                for mat in cur[j].generators:
                    small, _ = pair.restrict(iso.conj(mat), ["c"])
                    gens.append(small)
                gens = np.stack(gens)
            cur[j] = MatrixSubalgebra(TensorSpace((("t", mult),)),
                                      orthonormalize(np.stack(reduced)), gens)
        prefix *= d
        cur_dim = mult
    dims.append(cur_dim)
    codomain = TensorSpace(tuple((labels[i], dims[i]) for i in range(n)))
    iso = UnitaryIso(v_tot, ambient, codomain)
    return iso, dims


def tensor_split_over_known_factor(X: MatrixSubalgebra, known_labels=None):
    """Given X containing the full algebra of some legs, find Y with
    X = L(known) tensor Y.

    The commutant of X inside the full matrix algebra lies in
    1 tensor L(rest) because X contains L(known) tensor 1; its form is
    1 tensor Z where Z is the commutant of the Schmidt factors of X on
    the remaining legs, and Y is then the commutant of Z there.  Raises
    when X does not factor through the given legs.
    """
    ambient = X.ambient
    if known_labels is None:
        known_labels = [ambient.labels[0]]
    known_labels = list(known_labels)
    rest = [l for l in ambient.labels if l not in set(known_labels)]
    if not rest:
        raise InputError("no remaining legs to split onto")
    d_known = 1
    for l in known_labels:
        d_known *= ambient.dim(l)
    for e in matrix_units(d_known):
        if not X.contains(ambient.embed(e, known_labels), RESIDUAL_TOL * 10):
            raise InputError(
                "X does not contain the full algebra of the known legs")
    rest_space = ambient.subspace(rest)
    ys = []
    for mat in X.basis:
        ys.extend(ambient.schmidt_right_factors(mat, known_labels))
    z = commutant_of(ys, rest_space)
    y = commutant(z)
    d_rest = rest_space.total_dim
    if X.dim != d_known * d_known * y.dim:
        raise NumericsError(
            f"X (dim {X.dim}) does not split as L(known) x Y "
            f"(dim {d_known * d_known} x {y.dim})")
    for mat in y.basis:
        if not X.contains(ambient.embed(mat, rest), RESIDUAL_TOL * 10):
            raise NumericsError("computed Y is not inside X")
    return y


def reduce_onto_legs(B: MatrixSubalgebra, target_labels) -> MatrixSubalgebra:
    """Smallest algebra C on the target legs with B inside L(rest) x C.

    Computed as the double commutant, on the target legs, of the Schmidt
    factors of B's basis over the (rest | target) split.
    """
    ambient = B.ambient
    target_labels = list(target_labels)
    rest = [l for l in ambient.labels if l not in set(target_labels)]
    target_space = ambient.subspace(target_labels)
    ys = []
    for mat in B.basis:
        ys.extend(ambient.schmidt_right_factors(mat, rest))
    if not ys:
        return MatrixSubalgebra.scalars(target_space)
    # the factors come back with legs in ambient order, which need not
    # agree with the requested target order
    amb_order = [l for l in ambient.labels if l in set(target_labels)]
    if amb_order != target_labels:
        p = ambient.subspace(amb_order).permutation_to(target_labels)
        ys = [p @ y @ p.T for y in ys]
    z = commutant_of(ys, target_space)
    return commutant(z)


@dataclass
class SectorDecomposition:
    """Joint sector structure of commuting algebras on a shared leg.

    ``projectors`` resolve the identity of the shared leg; within sector
    i the compressed algebras split as a tensor product with per-sector
    leg dimensions ``sectors[i]`` (one entry per input algebra, the last
    absorbing leftover multiplicity).  ``iso`` maps the shared leg onto the
    direct sum of those products.
    """

    a_space: TensorSpace
    sectors: tuple[tuple[int, ...], ...]
    projectors: tuple[np.ndarray, ...]
    iso: UnitaryIso

    def __post_init__(self):
        d = self.a_space.total_dim
        total = 0
        for legs in self.sectors:
            block = 1
            for x in legs:
                block *= x
            total += block
        if total != d:
            raise NumericsError(
                f"sector dimensions {self.sectors} do not resolve the "
                f"shared leg dimension {d}")

    @property
    def n_sectors(self) -> int:
        return len(self.sectors)


@dataclass
class SectorObstruction:
    """Returned when the spanning condition of the algebraic lemma fails:
    the joint sector structure is incompatible with a single unitary gate."""

    decomposition: SectorDecomposition
    message: str


@dataclass
class LemmaSplit:
    """Successful outcome of the algebraic lemma: a gate and leg dims."""

    iso: UnitaryIso
    leg_dims: tuple[int, ...]


def _validate_leg_layout(a_labels, x_legs, bs):
    if not bs:
        raise InputError("need at least one algebra")
    ambient = bs[0].ambient
    for b in bs:
        if b.ambient.labels != ambient.labels or b.ambient.dims != ambient.dims:
            raise InputError("algebras must share one ambient space")
    if len(x_legs) != len(bs):
        raise InputError("x_legs must align with the algebra list")
    a_labels = list(a_labels)
    aset = set(a_labels)
    for l in a_labels:
        ambient.index(l)
    seen = set()
    for xs in x_legs:
        for l in xs:
            ambient.index(l)
            if l in aset:
                raise InputError(f"leg {l!r} cannot be both shared and X leg")
            if l in seen:
                raise InputError(f"X leg {l!r} assigned to two algebras")
            seen.add(l)
    return ambient, a_labels


def _check_support(ambient, a_labels, x_legs, bs):
    for k, b in enumerate(bs):
        allowed = list(a_labels) + list(x_legs[k])
        for mat in b.test_elements():
            _, resid = ambient.restrict(mat, allowed)
            if resid > RESIDUAL_TOL * 10:
                raise NumericsError(
                    f"algebra {k} is not supported on its shared+X legs "
                    f"(residual {resid:.2e})")


def sectorize(a_labels, x_legs, bs, seed=0) -> SectorDecomposition:
    """Joint sector decomposition of commuting algebras over a shared leg.

    Each B_k must commute with the others and be supported on the shared
    legs plus its private X legs.  The reductions of the B_k onto the
    shared legs commute; products of their minimal central projectors cut
    the shared leg into sectors, and inside every sector the compressed
    reductions are factors that split simultaneously.
    """
    ambient, a_labels = _validate_leg_layout(a_labels, x_legs, bs)
    _check_pairwise_commuting(bs)
    _check_support(ambient, a_labels, x_legs, bs)
    a_space = ambient.subspace(a_labels)
    d_a = a_space.total_dim
    reduced = [reduce_onto_legs(b, a_labels) for b in bs]
    _check_pairwise_commuting(reduced)
    rng = np.random.default_rng(seed)
    per_alg = [minimal_central_projectors(r, seed=int(rng.integers(0, 2**31)))
               for r in reduced]

    sectors = []
    index_tuples = [()]
    for projs in per_alg:
        index_tuples = [t + (i,) for t in index_tuples
                        for i in range(len(projs))]
    clean = []
    for tup in sorted(index_tuples):
        p = np.eye(d_a, dtype=complex)
        for k, i in enumerate(tup):
            p = p @ per_alg[k][i]
        p = (p + dagger(p)) / 2.0
        r = int(round(float(np.real(np.trace(p)))))
        if r == 0 and np.linalg.norm(p) <= RESIDUAL_TOL * np.sqrt(d_a):
            continue
        vals, vecs = np.linalg.eigh(p)
        keep = vals > 0.5
        r = int(np.sum(keep))
        if r == 0:
            continue
        q = vecs[:, keep]
        p_clean = q @ dagger(q)
        if np.linalg.norm(p_clean - p) > 1e-6 * np.sqrt(d_a):
            raise NumericsError("joint central product is far from a "
                                "projector")
        clean.append((tup, p_clean, q))

    total = sum(p for _, p, _ in clean)
    if np.linalg.norm(total - np.eye(d_a)) > RESIDUAL_TOL * np.sqrt(d_a):
        raise NumericsError("sector projectors do not resolve the identity")
    for x in range(len(clean)):
        for y in range(x + 1, len(clean)):
            if np.linalg.norm(clean[x][1] @ clean[y][1]) > RESIDUAL_TOL * d_a:
                raise NumericsError("sector projectors are not orthogonal")

    rows = []
    sector_dims = []
    projectors = []
    for tup, p, q in clean:
        r = q.shape[1]
        sec_space = TensorSpace((("s", r),))
        comp = []
        for alg in reduced:
            mats = [dagger(q) @ m @ q for m in alg.basis]
            cb = orthonormalize(np.stack(mats))
            comp.append(MatrixSubalgebra(sec_space, cb))
        iso_i, dims_i = split_commuting_factors(
            comp, seed=int(rng.integers(0, 2**31)))
        rows.append(iso_i.matrix @ dagger(q))
        sector_dims.append(tuple(dims_i))
        projectors.append(p)
    v = np.concatenate(rows, axis=0)
    v = _projected_unitary(v)
    iso = UnitaryIso(v, a_space, TensorSpace((("sectors", d_a),)))
    return SectorDecomposition(a_space, tuple(sector_dims),
                               tuple(projectors), iso)


def algebraic_lemma(a_labels, x_legs, bs, seed=0):
    """Split a shared leg along commuting factor algebras, or report why not.

    Hypotheses checked: the B_k commute pairwise, each is a factor, and
    each is supported on the shared legs plus its own X legs.  If the
    reductions of the B_k onto the shared legs span its full matrix
    algebra, returns LemmaSplit with a unitary on the shared legs under
    which the k-th reduction becomes the algebra of leg k (last leg
    absorbing remaining multiplicity).  Otherwise returns a
    SectorObstruction carrying the joint sector decomposition.
    """
    ambient, a_labels = _validate_leg_layout(a_labels, x_legs, bs)
    _check_pairwise_commuting(bs)
    _check_support(ambient, a_labels, x_legs, bs)
    for k, b in enumerate(bs):
        if not is_factor(b):
            raise NumericsError(f"algebra {k} is not a factor")
    a_space = ambient.subspace(a_labels)
    d_a = a_space.total_dim
    reduced = [reduce_onto_legs(b, a_labels) for b in bs]
    joint = algebra_closure(
        a_space, [m for r in reduced for m in r.basis])
    if joint.dim == d_a * d_a:
        for k, r in enumerate(reduced):
            if not is_factor(r):
                raise NumericsError(
                    f"reduction {k} is not a factor despite spanning")
        iso, dims = split_commuting_factors(reduced, a_space, seed=seed)
        return LemmaSplit(iso, tuple(dims))
    sec = sectorize(a_labels, x_legs, bs, seed=seed)
    return SectorObstruction(
        sec,
        f"reductions span dimension {joint.dim} < {d_a * d_a}; "
        f"{sec.n_sectors} joint sector(s)")


def unitary_from_isomorphism(images, rel_tol=ISO_TOL) -> np.ndarray:
    """Recover w from a *-isomorphism given by images of matrix units.

    ``images[i][j]`` is the image of E_ij; the isomorphism must be
    implemented by conjugation (true for *-isomorphisms between full
    matrix algebras of equal dimension).  w is fixed up to global phase
    by making its first nonzero entry (row-major) real positive.
    """
    images = np.asarray(images, dtype=complex)
    if images.ndim != 4 or images.shape[0] != images.shape[1] \
            or images.shape[2] != images.shape[3]:
        raise InputError(f"images must have shape (n, n, N, N), got "
                         f"{images.shape}")
    n, _, N, _ = images.shape
    if n != N:
        raise InputError(
            f"a *-isomorphism onto a full matrix algebra needs matching "
            f"dimensions, got {n} -> {N}")
    p11 = images[0, 0]
    vals, vecs = np.linalg.eigh((p11 + dagger(p11)) / 2.0)
    if abs(vals[-1] - 1.0) > 1e-6 or (n > 1 and abs(vals[-2]) > 1e-6):
        raise NumericsError("image of E_11 is not a rank-1 projector")
    v0 = vecs[:, -1]
    cols = [images[i, 0] @ v0 for i in range(n)]
    w = np.stack(cols, axis=1)
    w = _projected_unitary(w)
    units = matrix_units(n)
    worst = 0.0
    for i in range(n):
        for j in range(n):
            resid = np.linalg.norm(images[i, j] - w @ units[i * n + j]
                                   @ dagger(w))
            worst = max(worst, resid)
    if worst > rel_tol * 10:
        raise NumericsError(
            f"images are not conjugation by a unitary (residual "
            f"{worst:.2e})")
    flat = w.reshape(-1)
    mags = np.abs(flat)
    idx = int(np.argmax(mags > 1e-8 * mags.max()))
    phase = flat[idx] / abs(flat[idx])
    return w * np.conj(phase)
