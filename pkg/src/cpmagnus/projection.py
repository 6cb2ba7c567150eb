"""Reading a Hamiltonian and a coefficient matrix off a superoperator.

Given a trace-annihilating, Hermiticity-preserving superoperator g and an
ordered operator basis {s_i}, solve

    g = -i[h, .] + sum_ij c_ij (s_i . s_j† - 1/2 {s_j† s_i, .})

for Hermitian traceless h and Hermitian c in the least-squares sense.  The
parametrization is real-linear, solved by orthogonal factorization with
minimal-norm tie-breaking, so bases that are neither orthonormal nor
traceless (e.g. ladder operators) are handled as-is.

For truncated-ladder models the fit can be restricted to a sub-range of
state indices via ``support`` to keep truncation-boundary artifacts out of
the extracted matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    SuperOp,
    as_operator,
    commutator_super,
    dissipator_super,
    hs_norm,
    require_hermitian,
    vec,
)
from .magnus import OmegaSeries

RESIDUAL_THRESHOLD = 1e-8


class BasisInsufficientError(ValueError):
    """The operator basis cannot represent the generator."""

    def __init__(self, residual: float, remainder_norm: float, order: int | None = None):
        self.residual = residual
        self.remainder_norm = remainder_norm
        self.order = order
        where = "" if order is None else f" at series order {order}"
        super().__init__(
            f"generator{where} is not representable in the given basis: "
            f"relative residual {residual:.3e} (remainder norm {remainder_norm:.3e})"
        )


def _hermitian_param_basis(d: int, traceless: bool) -> list:
    """Real basis of Hermitian d x d matrices (traceless ones if requested)."""
    out = []
    for i in range(d):
        for j in range(i + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[i, j] = sym[j, i] = 1.0
            out.append(sym)
            anti = np.zeros((d, d), dtype=complex)
            anti[i, j] = 1j
            anti[j, i] = -1j
            out.append(anti)
    if traceless:
        for i in range(d - 1):
            diag = np.zeros((d, d), dtype=complex)
            diag[i, i] = 1.0
            diag[i + 1, i + 1] = -1.0
            out.append(diag)
    else:
        for i in range(d):
            diag = np.zeros((d, d), dtype=complex)
            diag[i, i] = 1.0
            out.append(diag)
    return out


def assemble_lindblad(h, c, basis_ops) -> SuperOp:
    """Superoperator of -i[h, .] plus the dissipator of (basis_ops, c)."""
    h = require_hermitian(h, what="Hamiltonian")
    c = require_hermitian(c, what="coefficient matrix")
    ops = [as_operator(s) for s in basis_ops]
    if c.shape[0] != len(ops):
        raise ValueError("coefficient matrix size does not match basis")
    if any(s.shape != h.shape for s in ops):
        raise ValueError("basis operator dimension does not match Hamiltonian")
    return commutator_super(h) + dissipator_super(ops, c)


def _support_mask(d: int, support) -> np.ndarray | None:
    if support is None:
        return None
    support = np.asarray(support, dtype=int)
    keep = np.zeros(d, dtype=bool)
    keep[support] = True
    pair = np.logical_and.outer(keep, keep)  # pair[i, j] for entry rho_{ij}
    return pair.reshape(-1, order="F")  # aligned with vec()


def _check_generator(g: SuperOp, rtol: float = 1e-9):
    d = g.dim
    scale = max(1.0, hs_norm(g.mat))
    defect = g.trace_defect()
    if defect > rtol * scale:
        raise ValueError(f"generator is not trace-annihilating (defect {defect:.3e})")
    s4 = g.mat.reshape(d, d, d, d)  # axes (j, i, l, k) for entry [(i,j),(k,l)]
    herm_defect = np.max(np.abs(s4 - s4.transpose(1, 0, 3, 2).conj()))
    if herm_defect > rtol * scale:
        raise ValueError(
            f"generator is not Hermiticity-preserving (defect {herm_defect:.3e})"
        )


class _ProjectionSystem:
    """Prefactored least-squares system for a fixed (dimension, basis, support)."""

    def __init__(self, d: int, basis_ops, support=None):
        self.d = d
        self.basis_ops = [as_operator(s) for s in basis_ops]
        if any(s.shape != (d, d) for s in self.basis_ops):
            raise ValueError("basis operator dimension mismatch")
        m = len(self.basis_ops)
        self.h_basis = _hermitian_param_basis(d, traceless=True)
        self.c_basis = _hermitian_param_basis(m, traceless=False)
        mask = _support_mask(d, support)
        cols = []
        for hb in self.h_basis:
            cols.append(self._to_real(commutator_super(hb).mat, mask))
        for cb in self.c_basis:
            cols.append(self._to_real(dissipator_super(self.basis_ops, cb).mat, mask))
        matrix = np.column_stack(cols)
        # column equilibration keeps wildly different operator norms
        # (e.g. a vs a†³a³) from degrading the least-squares solution
        self.col_scale = np.linalg.norm(matrix, axis=0)
        self.col_scale[self.col_scale == 0] = 1.0
        self.matrix = matrix / self.col_scale
        self.mask = mask

    @staticmethod
    def _to_real(mat: np.ndarray, mask) -> np.ndarray:
        if mask is not None:
            mat = mat[np.ix_(mask, mask)]
        flat = mat.ravel()
        return np.concatenate([flat.real, flat.imag])

    def solve(self, g_mats):
        """Least-squares fit of each superoperator matrix in g_mats.

        Returns (h list, c list, relative residuals based on the fitted block).
        """
        rhs = np.column_stack([self._to_real(g, self.mask) for g in g_mats])
        sol, *_ = np.linalg.lstsq(self.matrix, rhs, rcond=None)
        # one step of iterative refinement to push roundoff toward machine level
        correction, *_ = np.linalg.lstsq(self.matrix, rhs - self.matrix @ sol, rcond=None)
        sol = sol + correction
        sol = sol / self.col_scale[:, None]
        nh = len(self.h_basis)
        hs, cs, residuals = [], [], []
        for col in range(sol.shape[1]):
            h = sum(x * hb for x, hb in zip(sol[:nh, col], self.h_basis))
            c = sum(x * cb for x, cb in zip(sol[nh:, col], self.c_basis))
            h = np.asarray(h, dtype=complex).reshape(self.d, self.d)
            c = np.asarray(c, dtype=complex).reshape(len(self.basis_ops), -1)
            fitted = self.matrix @ (sol[:, col] * self.col_scale)
            defect = np.linalg.norm(rhs[:, col] - fitted)
            residuals.append(float(defect / max(1.0, np.linalg.norm(rhs[:, col]))))
            hs.append(h)
            cs.append(c)
        return hs, cs, residuals


def project_to_lindblad(g: SuperOp, basis_ops, support=None,
                        residual_threshold: float = RESIDUAL_THRESHOLD):
    """Extract (h, c, residual) from a generator; see module docstring.

    Raises BasisInsufficientError when the relative residual exceeds the
    threshold.
    """
    _check_generator(g)
    system = _ProjectionSystem(g.dim, basis_ops, support=support)
    hs, cs, residuals = system.solve([g.mat])
    h, c, residual = hs[0], cs[0], residuals[0]
    if residual > residual_threshold:
        remainder = hs_norm(g.mat - assemble_lindblad(h, c, basis_ops).mat)
        raise BasisInsufficientError(residual, remainder)
    return h, c, residual


@dataclass(frozen=True)
class LindbladDecomposition:
    """Order-by-order (h, c) decomposition of a generator series."""

    basis_ops: tuple
    h_series: OmegaSeries
    c_series: OmegaSeries
    residuals: tuple
    support: np.ndarray | None = None

    @property
    def residual(self) -> float:
        return max(self.residuals)


def project_series(series: OmegaSeries, basis_ops, support=None,
                   residual_threshold: float = RESIDUAL_THRESHOLD) -> LindbladDecomposition:
    """Project every coefficient of a generator series onto Lindblad form."""
    d = int(round(np.sqrt(series.coeffs[0].shape[0])))
    scale = max(1.0, max(hs_norm(c) for c in series.coeffs))
    ident = vec(np.eye(d)).conj()
    for order, coeff in enumerate(series.coeffs):
        defect = float(np.linalg.norm(ident @ coeff))
        if defect > 1e-9 * scale:
            raise ValueError(
                f"series coefficient at order {order} is not trace-annihilating "
                f"(defect {defect:.3e})"
            )
    system = _ProjectionSystem(d, basis_ops, support=support)
    hs, cs, residuals = system.solve(list(series.coeffs))
    for order, residual in enumerate(residuals):
        if residual > residual_threshold:
            g = SuperOp(d, series.coeffs[order])
            remainder = hs_norm(g.mat - assemble_lindblad(hs[order], cs[order], basis_ops).mat)
            raise BasisInsufficientError(residual, remainder, order=order)
    # symmetrize away least-squares roundoff
    hs = [0.5 * (h + h.conj().T) for h in hs]
    cs = [0.5 * (c + c.conj().T) for c in cs]
    return LindbladDecomposition(
        basis_ops=tuple(as_operator(s) for s in basis_ops),
        h_series=OmegaSeries(tuple(hs), series.order),
        c_series=OmegaSeries(tuple(cs), series.order),
        residuals=tuple(residuals),
        support=None if support is None else np.asarray(support, dtype=int),
    )
