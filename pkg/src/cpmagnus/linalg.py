"""Dense complex operator/superoperator linear algebra.

Operators are plain complex ``numpy`` arrays of shape ``(d, d)``.
Superoperators act on column-stacked density matrices:

    vec(rho)[i + d*j] = rho[i, j]        (columns stacked on top of each other)
    vec(a @ rho @ b) = kron(b.T, a) @ vec(rho)

This is the single vectorization convention used throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

HERM_RTOL = 1e-12
EIG_RTOL = 1e-10


class NonHermitianError(ValueError):
    """Input violates the Hermiticity tolerance."""


def as_operator(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
        raise ValueError("matrix has non-finite entries")
    return m


def hs_norm(m) -> float:
    """Hilbert-Schmidt norm sqrt(Tr m m†) = Frobenius norm."""
    return float(np.linalg.norm(np.asarray(m)))


def herm_defect(m) -> float:
    """max|m - m†|, the absolute Hermiticity defect."""
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m, rtol: float = HERM_RTOL) -> bool:
    m = np.asarray(m)
    scale = max(1.0, hs_norm(m))
    return herm_defect(m) <= rtol * scale


def require_hermitian(m, rtol: float = HERM_RTOL, what: str = "matrix") -> np.ndarray:
    m = as_operator(m)
    if not is_hermitian(m, rtol):
        raise NonHermitianError(
            f"{what} is not Hermitian: defect {herm_defect(m):.3e} "
            f"exceeds {rtol:.1e} * max(1, norm)"
        )
    return m


def kron(a, b) -> np.ndarray:
    """Kronecker product, shape (r_a*r_b, c_a*c_b)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def vec(rho) -> np.ndarray:
    """Column-stacking vectorization: vec(rho)[i + d*j] = rho[i, j]."""
    rho = np.asarray(rho, dtype=complex)
    return rho.reshape(-1, order="F")


def devec(v, d: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec` (exact round trip)."""
    v = np.asarray(v, dtype=complex)
    if d is None:
        d = int(round(np.sqrt(v.size)))
        if d * d != v.size:
            raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape((d, d), order="F")


@dataclass(frozen=True)
class SuperOp:
    """A superoperator on d x d operators, stored as a d^2 x d^2 matrix.

    Acts on column-stacked operators: (S rho) = devec(S.mat @ vec(rho)).
    """

    dim: int
    mat: np.ndarray

    def __post_init__(self):
        m = as_operator(self.mat)
        if m.shape[0] != self.dim**2:
            raise ValueError(f"superoperator matrix shape {m.shape} does not match dim {self.dim}")
        object.__setattr__(self, "mat", m)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return devec(self.mat @ vec(rho), self.dim)

    def __add__(self, other: "SuperOp") -> "SuperOp":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return SuperOp(self.dim, self.mat + other.mat)

    def __sub__(self, other: "SuperOp") -> "SuperOp":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return SuperOp(self.dim, self.mat - other.mat)

    def __mul__(self, scalar) -> "SuperOp":
        return SuperOp(self.dim, self.mat * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other: "SuperOp") -> "SuperOp":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return SuperOp(self.dim, self.mat @ other.mat)

    def trace_defect(self) -> float:
        """Norm of vec(1)† @ mat; zero for trace-annihilating generators."""
        ident = vec(np.eye(self.dim))
        return float(np.linalg.norm(ident.conj() @ self.mat))


def left_right_super(a, b) -> SuperOp:
    """Superoperator of rho -> a @ rho @ b."""
    a = as_operator(a)
    b = as_operator(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return SuperOp(a.shape[0], kron(b.T, a))


def commutator_super(h) -> SuperOp:
    """Superoperator of rho -> -i [h, rho]."""
    h = as_operator(h)
    d = h.shape[0]
    eye = np.eye(d)
    return SuperOp(d, -1j * (kron(eye, h) - kron(h.T, eye)))


def dissipator_super(basis_ops, coeff) -> SuperOp:
    """Superoperator of rho -> sum_ij C_ij (s_i rho s_j† - 1/2 {s_j† s_i, rho})."""
    ops = [as_operator(s) for s in basis_ops]
    coeff = np.asarray(coeff, dtype=complex)
    m = len(ops)
    if coeff.shape != (m, m):
        raise ValueError(f"coefficient matrix shape {coeff.shape} does not match {m} basis operators")
    d = ops[0].shape[0]
    eye = np.eye(d)
    total = np.zeros((d * d, d * d), dtype=complex)
    for i in range(m):
        for j in range(m):
            c = coeff[i, j]
            if c == 0:
                continue
            sjd_si = ops[j].conj().T @ ops[i]
            total += c * (
                kron(ops[j].conj(), ops[i])
                - 0.5 * kron(eye, sjd_si)
                - 0.5 * kron(sjd_si.T, eye)
            )
    return SuperOp(d, total)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate the phase so the largest-magnitude component is real positive."""
    k = int(np.argmax(np.abs(v)))
    pivot = v[k]
    if abs(pivot) == 0:
        return v
    return v * (abs(pivot) / pivot)


def hermitian_eig(m, rtol: float = HERM_RTOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector columns) with each column's
    largest-magnitude component rotated to be real positive.
    """
    m = require_hermitian(m, rtol)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    for k in range(v.shape[1]):
        v[:, k] = _fix_phase(v[:, k])
    return w, v


def matrix_exp(m) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring with Pade approximant)."""
    return scipy.linalg.expm(as_operator(m))
