"""Positivity correction of perturbative coefficient matrices.

The coefficient-matrix series c(x) = sum_j D_j x^j (x = 1/w, all D_j
Hermitian) is diagonalized perturbatively by recursive block
diagonalization: eigendecompose D_0, rotate away inter-group couplings
order by order with graded unitary conjugations, then recurse into each
degenerate block after factoring out one power of x.  Eigenvalue series
whose leading coefficient is positive are replaced by the exact square of a
real half-series ("square completion"), which agrees with the original
series through the truncation order and is nonnegative for every positive
frequency.  Reassembling with the perturbative eigenvectors yields a
positive-semidefinite replacement for c(x); a negative leading coefficient
is the incurable case and raises ``CorrectionImpossible``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import SuperOp, hs_norm
from .magnus import MAX_ORDER, OmegaScalar, OmegaSeries, effective_series
from .models import PeriodicLindbladGenerator
from .projection import LindbladDecomposition, dissipator_super, project_series

_GROUP_RTOL = 1e-8
# absolute floor (relative to the top-level series scale) below which
# eigenvalue splittings are treated as numerical dust and kept grouped
_DUST_ATOL = 1e-10


class CorrectionImpossible(Exception):
    """An eigenvalue series starts with a negative coefficient.

    No square completion exists: the generator cannot be extended to
    Lindblad form at this order by the eigenvalue recipe.
    """

    def __init__(self, order: int, leading: float, eigen_index: int | None = None):
        self.order = order
        self.leading = leading
        self.eigen_index = eigen_index
        which = "" if eigen_index is None else f" (eigenvalue #{eigen_index})"
        super().__init__(
            f"eigenvalue series{which} has negative leading coefficient "
            f"{leading:.6e} at order {order}; no nonnegative completion exists"
        )


@dataclass(frozen=True)
class EigSeries:
    """Perturbative eigenvalue/eigenvector series of a Hermitian matrix family.

    values[i, j] is the x^j coefficient of eigenvalue i; vectors[i, j] the
    x^j coefficient of eigenvector i in intermediate normalization
    (unit zeroth order, corrections orthogonal to it).  Eigenvalues are
    sorted by (leading order ascending, leading coefficient descending).
    """

    values: np.ndarray
    vectors: np.ndarray
    order: int
    degenerate: tuple

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def leading(self, i: int):
        """(order, coefficient) of the first nonzero term of eigenvalue i.

        Returns (None, 0.0) for a series that vanishes through the
        truncation order.
        """
        scale = max(1.0, float(np.max(np.abs(self.values))))
        for j in range(self.order + 1):
            if abs(self.values[i, j]) > 1e-12 * scale:
                return j, float(self.values[i, j])
        return None, 0.0

    def value_poly(self, i: int) -> OmegaScalar:
        return OmegaScalar.from_x_coeffs(self.values[i])

    def eval_vector(self, i: int, omega: float, normalize: bool = False) -> np.ndarray:
        phi = np.zeros(self.vectors.shape[2], dtype=complex)
        for j in range(self.order + 1):
            phi += self.vectors[i, j] * omega ** (-j)
        if normalize:
            phi = phi / np.linalg.norm(phi)
        return phi


def _canonical_group_basis(v: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(v): Gram-Schmidt of the
    coordinate axes projected into the subspace, largest component first."""
    m, g = v.shape
    proj = v @ v.conj().T
    cols = []
    for i in np.argsort(-np.linalg.norm(proj, axis=0), kind="stable"):
        cand = proj[:, i].copy()
        for c in cols:
            cand -= c * (c.conj() @ cand)
        norm = np.linalg.norm(cand)
        if norm > 1e-7:
            cols.append(cand / norm)
        if len(cols) == g:
            break
    if len(cols) < g:  # fall back to whatever eigh produced
        return v
    out = np.column_stack(cols)
    for k in range(g):
        col = out[:, k]
        pivot = col[int(np.argmax(np.abs(col)))]
        if abs(pivot) > 0:
            out[:, k] = col * (abs(pivot) / pivot)
    return out


def _group_eigh(d0: np.ndarray, tol: float):
    w, v = np.linalg.eigh(0.5 * (d0 + d0.conj().T))
    groups = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[start] > tol:
            groups.append(list(range(start, i)))
            start = i
    for idx in groups:
        if len(idx) > 1:
            v[:, idx] = _canonical_group_basis(v[:, idx])
        else:
            col = v[:, idx[0]]
            pivot = col[int(np.argmax(np.abs(col)))]
            if abs(pivot) > 0:
                v[:, idx[0]] = col * (abs(pivot) / pivot)
    return w, v, groups


def _series_product(a: list, b: list, order: int) -> list:
    out = [np.zeros_like(a[0]) for _ in range(order + 1)]
    for p, ap in enumerate(a):
        for q, bq in enumerate(b):
            if p + q <= order:
                out[p + q] = out[p + q] + ap @ bq
    return out


def _conjugate_graded(work: list, s_mat: np.ndarray, stage: int, order: int) -> list:
    """Replace the family C by exp(-x^stage S) C exp(x^stage S), truncated."""
    out = [c.copy() for c in work]
    for p in range(order + 1):
        term = work[p]
        j = 1
        while p + j * stage <= order:
            term = term @ s_mat - s_mat @ term
            out[p + j * stage] = out[p + j * stage] + term / math.factorial(j)
            j += 1
    return out


def _expand(coeffs: list, order: int, parent_scale: float) -> list:
    """Recursive perturbative eigendecomposition.

    coeffs: Hermitian matrices [C_0..C_order] of the family sum C_j x^j.
    Returns a list of dicts with keys values (order+1 reals), vectors
    ((order+1, m) complex, orthonormal-frame convention) and degenerate.
    """
    m = coeffs[0].shape[0]
    if m == 1:
        values = np.array([float(c[0, 0].real) for c in coeffs])
        vectors = np.zeros((order + 1, 1), dtype=complex)
        vectors[0, 0] = 1.0
        return [{"values": values, "vectors": vectors, "degenerate": False}]

    d0 = 0.5 * (coeffs[0] + coeffs[0].conj().T)
    scale = max(float(np.max(np.abs(np.linalg.eigvalsh(d0)))), 0.0)
    tol = max(_GROUP_RTOL * scale, _DUST_ATOL * parent_scale)
    w, v, groups = _group_eigh(d0, tol)
    rotated = [v.conj().T @ c @ v for c in coeffs]

    if len(groups) == 1:
        eps = float(np.mean(w))
        if order == 0:
            out = []
            for a in range(m):
                vectors = np.zeros((1, m), dtype=complex)
                vectors[0] = v[:, a]
                out.append({"values": np.array([eps]), "vectors": vectors,
                            "degenerate": True})
            return out
        sub = _expand(rotated[1:], order - 1, parent_scale)
        out = []
        for pair in sub:
            values = np.concatenate([[eps], pair["values"]])
            vectors = np.zeros((order + 1, m), dtype=complex)
            vectors[: order] = pair["vectors"]
            vectors_full = np.einsum("ab,rb->ra", v, vectors)
            out.append({"values": values, "vectors": vectors_full,
                        "degenerate": pair["degenerate"]})
        return out

    # graded conjugations removing inter-group couplings order by order
    group_of = np.empty(m, dtype=int)
    for gi, idx in enumerate(groups):
        group_of[idx] = gi
    inter = group_of[:, None] != group_of[None, :]
    denom = w[None, :] - w[:, None]
    work = rotated
    transform = [np.eye(m, dtype=complex)] + [np.zeros((m, m), dtype=complex)
                                              for _ in range(order)]
    for stage in range(1, order + 1):
        s_mat = np.zeros((m, m), dtype=complex)
        s_mat[inter] = work[stage][inter] / denom[inter]
        if np.max(np.abs(s_mat)) == 0.0:
            continue
        work = _conjugate_graded(work, s_mat, stage, order)
        # exp(x^stage S): coefficient of x^j is S^(j/stage)/(j/stage)! when stage | j
        exp_series = [np.zeros((m, m), dtype=complex) for _ in range(order + 1)]
        exp_series[0] = np.eye(m, dtype=complex)
        power = np.eye(m, dtype=complex)
        j = stage
        fact = 1
        while j <= order:
            power = power @ s_mat
            fact *= j // stage
            exp_series[j] = power / fact
            j += stage
        transform = _series_product(transform, exp_series, order)

    out = []
    for idx in groups:
        eps = float(np.mean(w[idx]))
        block = [wk[np.ix_(idx, idx)] for wk in work]
        if len(idx) == 1:
            values = np.array([float(b[0, 0].real) for b in block])
            subvecs = [np.eye(1, dtype=complex).ravel()] + \
                      [np.zeros(1, dtype=complex) for _ in range(order)]
            pairs = [{"values": values, "vectors": np.array(subvecs),
                      "degenerate": False}]
        elif order == 0:
            pairs = []
            for a in range(len(idx)):
                vecs = np.zeros((1, len(idx)), dtype=complex)
                vecs[0, a] = 1.0
                pairs.append({"values": np.array([eps]), "vectors": vecs,
                              "degenerate": True})
        else:
            sub = _expand(block[1:], order - 1, parent_scale)
            pairs = []
            for pair in sub:
                values = np.concatenate([[eps], pair["values"]])
                vecs = np.zeros((order + 1, len(idx)), dtype=complex)
                vecs[: order] = pair["vectors"]
                pairs.append({"values": values, "vectors": vecs,
                              "degenerate": pair["degenerate"]})
        for pair in pairs:
            embedded = np.zeros((order + 1, m), dtype=complex)
            embedded[:, idx] = pair["vectors"]
            composed = np.zeros((order + 1, m), dtype=complex)
            for r in range(order + 1):
                for p in range(r + 1):
                    composed[r] += transform[r - p] @ embedded[p]
            full = np.einsum("ab,rb->ra", v, composed)
            out.append({"values": pair["values"], "vectors": full,
                        "degenerate": pair["degenerate"]})
    return out


def _to_intermediate_normalization(vectors: np.ndarray) -> np.ndarray:
    """Divide the vector series by its overlap with the zeroth-order vector."""
    order = vectors.shape[0] - 1
    phi0 = vectors[0]
    c = np.array([phi0.conj() @ vectors[r] for r in range(order + 1)])
    inv = np.zeros(order + 1, dtype=complex)
    inv[0] = 1.0 / c[0]
    for r in range(1, order + 1):
        inv[r] = -inv[0] * sum(c[s] * inv[r - s] for s in range(1, r + 1))
    out = np.zeros_like(vectors)
    for r in range(order + 1):
        for s in range(r + 1):
            out[r] += inv[s] * vectors[r - s]
    # make the orthogonality exact
    for r in range(1, order + 1):
        out[r] -= phi0 * (phi0.conj() @ out[r])
    return out


def perturbative_eig(c_series: OmegaSeries, order: int | None = None) -> EigSeries:
    """Degenerate Rayleigh-Schrodinger expansion of a Hermitian matrix series."""
    if order is None:
        order = c_series.order
    if order > c_series.order:
        raise ValueError("requested order exceeds the series truncation")
    coeffs = [0.5 * (c + c.conj().T) for c in c_series.coeffs[: order + 1]]
    for j, c in enumerate(coeffs):
        defect = np.max(np.abs(c_series.coeffs[j] - c)) if c.size else 0.0
        if defect > 1e-10 * max(1.0, hs_norm(c)):
            raise ValueError(f"series coefficient {j} is not Hermitian (defect {defect:.3e})")
    parent_scale = max(1.0, max(hs_norm(c) for c in coeffs))
    pairs = _expand(coeffs, order, parent_scale)

    values = np.array([p["values"] for p in pairs])
    vectors = np.array([_to_intermediate_normalization(p["vectors"]) for p in pairs])
    flags = [bool(p["degenerate"]) for p in pairs]

    scale = max(1.0, float(np.max(np.abs(values))))

    def sort_key(i):
        for j in range(order + 1):
            if abs(values[i, j]) > 1e-12 * scale:
                return (j, -values[i, j])
        return (order + 1, 0.0)

    perm = sorted(range(len(pairs)), key=sort_key)
    return EigSeries(values=values[perm], vectors=vectors[perm], order=order,
                     degenerate=tuple(flags[i] for i in perm))


def square_complete(value_coeffs, order: int, eigen_index: int | None = None) -> OmegaScalar:
    """Nonnegative completion of an eigenvalue series.

    Returns lambda_tilde = s(x)^2 (exact square, no truncation) with
    lambda_tilde - lambda = O(x^(order+1)).  Raises CorrectionImpossible when
    the leading coefficient is negative.
    """
    mu = np.asarray(value_coeffs, dtype=float)[: order + 1]
    scale = max(1.0, float(np.max(np.abs(mu))) if mu.size else 0.0)
    lead = None
    for j, v in enumerate(mu):
        if abs(v) > 1e-12 * scale:
            lead = j
            break
    if lead is None:
        return OmegaScalar()
    if mu[lead] < 0:
        raise CorrectionImpossible(lead, float(mu[lead]), eigen_index)
    half = np.zeros(order - lead + 1)
    half[0] = math.sqrt(mu[lead])
    for k in range(1, len(half)):
        acc = sum(half[l] * half[k - l] for l in range(1, k))
        half[k] = (mu[lead + k] - acc) / (2.0 * half[0])
    lam = np.convolve(half, half)
    coeffs = np.zeros(lead + len(lam))
    coeffs[lead:] = lam
    return OmegaScalar.from_x_coeffs(coeffs)


@dataclass(frozen=True)
class CorrectedCoefficient:
    """Positive-semidefinite replacement for a coefficient-matrix series."""

    c_tilde: np.ndarray
    lambda_tilde: tuple
    lambda_polys: tuple  # OmegaScalar per eigenvalue
    eig_series: EigSeries
    omega: float
    normalized: bool

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.c_tilde + self.c_tilde.conj().T))[0])


def corrected_coefficient(c_series: OmegaSeries, order: int, omega: float,
                          normalize: bool = False) -> CorrectedCoefficient:
    """Build the PSD coefficient matrix sum_i lambda_tilde_i Phi_i Phi_i†.

    With normalize=False the eigenvectors enter in intermediate
    normalization exactly as printed in the worked examples; with
    normalize=True they are unit-normalized after evaluation, which
    tightens the deviation from c(omega) to the full order+1 scaling.
    """
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    eig = perturbative_eig(c_series, order)
    lam_polys = []
    for i in range(eig.size):
        lam_polys.append(square_complete(eig.values[i], order, eigen_index=i))
    m = c_series.coeffs[0].shape[0]
    c_tilde = np.zeros((m, m), dtype=complex)
    lam_vals = []
    for i, poly in enumerate(lam_polys):
        lam = float(poly(omega))
        phi = eig.eval_vector(i, omega, normalize=normalize)
        c_tilde += lam * np.outer(phi, phi.conj())
        lam_vals.append(lam)
    return CorrectedCoefficient(
        c_tilde=c_tilde,
        lambda_tilde=tuple(lam_vals),
        lambda_polys=tuple(lam_polys),
        eig_series=eig,
        omega=omega,
        normalized=normalize,
    )


@dataclass(frozen=True)
class CorrectedGenerator:
    """Corrected and uncorrected effective generators at a numeric frequency."""

    corrected: SuperOp
    uncorrected: SuperOp
    decomposition: LindbladDecomposition
    coefficient: CorrectedCoefficient
    order: int
    omega: float


def corrected_generator(model: PeriodicLindbladGenerator, order: int, omega: float,
                        normalize: bool = False,
                        series: OmegaSeries | None = None,
                        decomposition: LindbladDecomposition | None = None) -> CorrectedGenerator:
    """Full pipeline: Magnus series -> decomposition -> PSD correction.

    The corrected generator is the uncorrected one plus the dissipator of
    (c_tilde - c(omega)) over the declared projection basis, which equals
    assembling (h(omega), c_tilde) whenever the decomposition is exact.
    Precomputed series/decomposition may be passed to avoid recomputation.
    """
    if order > MAX_ORDER:
        raise ValueError(f"order must be at most {MAX_ORDER}")
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if series is None:
        series = effective_series(model, order)
    basis = model.projection_basis(order)
    if decomposition is None:
        decomposition = project_series(series, basis,
                                       support=model.projection_support(order))
    coeff = corrected_coefficient(decomposition.c_series, order, omega,
                                  normalize=normalize)
    uncorrected = SuperOp(model.dim, series(omega))
    delta = coeff.c_tilde - decomposition.c_series(omega)
    corrected = uncorrected + dissipator_super(decomposition.basis_ops, delta)
    return CorrectedGenerator(
        corrected=corrected,
        uncorrected=uncorrected,
        decomposition=decomposition,
        coefficient=coeff,
        order=order,
        omega=omega,
    )
