"""Time-periodic Lindblad generators and the two bundled models.

A generator is a Hamiltonian given as a finite Fourier series in the driving
frequency plus a time-independent dissipator,

    L(t) rho = -i [H(t), rho] + sum_ij C_ij (s_i rho s_j† - 1/2 {s_j† s_i, rho}).

Bundled models:

* ``two_level_model``: H = w0/2 sz + (Ws sin(wt) + Wc cos(wt)) sx with
  sz-dephasing at rate gamma.  The ground state (the -1 eigenstate of sz)
  is basis index 1.
* ``oscillator_model``: H = w0 n + W sin(wt) (a + a†) with number-operator
  dephasing at rate gamma, truncated to the lowest N Fock states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    SuperOp,
    as_operator,
    commutator_super,
    dissipator_super,
    hermitian_eig,
    hs_norm,
    require_hermitian,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class FourierOperator:
    """Hermitian operator-valued Fourier series
    constant + sum_k (cos_part_k cos(k w t) + sin_part_k sin(k w t))."""

    constant: np.ndarray
    harmonics: tuple  # of (k, cos_part, sin_part)
    omega: float

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        object.__setattr__(self, "constant", require_hermitian(self.constant, what="constant part"))
        checked = []
        for k, cos_part, sin_part in self.harmonics:
            if int(k) != k or k <= 0:
                raise ValueError(f"harmonic index must be a positive integer, got {k}")
            checked.append(
                (
                    int(k),
                    require_hermitian(cos_part, what=f"cos part (k={k})"),
                    require_hermitian(sin_part, what=f"sin part (k={k})"),
                )
            )
        object.__setattr__(self, "harmonics", tuple(checked))

    @property
    def dim(self) -> int:
        return self.constant.shape[0]

    def at(self, t: float) -> np.ndarray:
        out = self.constant.copy()
        for k, cos_part, sin_part in self.harmonics:
            out += cos_part * np.cos(k * self.omega * t) + sin_part * np.sin(k * self.omega * t)
        return out


@dataclass(frozen=True)
class DissipatorSpec:
    """Ordered operator basis plus a Hermitian PSD coefficient matrix of rates."""

    basis_ops: tuple
    coeff: np.ndarray

    def __post_init__(self):
        ops = tuple(as_operator(s) for s in self.basis_ops)
        object.__setattr__(self, "basis_ops", ops)
        coeff = require_hermitian(self.coeff, what="dissipator coefficient matrix")
        if coeff.shape[0] != len(ops):
            raise ValueError("coefficient matrix size does not match basis")
        if len(ops):
            w, _ = hermitian_eig(coeff)
            if w[0] < -1e-12 * max(1.0, hs_norm(coeff)):
                raise ValueError(f"coefficient matrix has negative eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "coeff", coeff)


@dataclass(frozen=True)
class PeriodicLindbladGenerator:
    """Periodic Liouvillian L(t) = -i[H(t), .] + dissipator, period T = 2 pi / omega."""

    hamiltonian: FourierOperator
    dissipator: DissipatorSpec
    label: str = "custom"
    # Optional registration of per-order operator bases (and fit supports)
    # for the Lindblad-form projection; see `projection_basis`.
    _bases: dict = field(default_factory=dict, repr=False)
    _supports: dict = field(default_factory=dict, repr=False)

    @property
    def omega(self) -> float:
        return self.hamiltonian.omega

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    def projection_basis(self, order: int) -> tuple:
        """Operator basis over which order-`order` decompositions are read off."""
        if order in self._bases:
            return self._bases[order]
        if None in self._bases:
            return self._bases[None]
        return self.dissipator.basis_ops

    def projection_support(self, order: int) -> np.ndarray | None:
        """State indices on which the projection fit is performed (None = all).

        Truncated-ladder models register a sub-range that excludes states whose
        matrix elements are contaminated by the truncation boundary.
        """
        if order in self._supports:
            return self._supports[order]
        return self._supports.get(None)


def build_liouvillian(gen: PeriodicLindbladGenerator, t: float) -> SuperOp:
    """Assemble the Liouvillian superoperator at time t."""
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    h = gen.hamiltonian.at(t)
    out = commutator_super(h)
    if len(gen.dissipator.basis_ops):
        out = out + dissipator_super(gen.dissipator.basis_ops, gen.dissipator.coeff)
    return out


def liouvillian_fourier(gen: PeriodicLindbladGenerator):
    """Exact Fourier components of L(t).

    Returns (L0, [(k, L_cos_k, L_sin_k), ...]).  The dissipator is
    time-independent, so it lives entirely in L0.
    """
    out0 = commutator_super(gen.hamiltonian.constant)
    if len(gen.dissipator.basis_ops):
        out0 = out0 + dissipator_super(gen.dissipator.basis_ops, gen.dissipator.coeff)
    comps = []
    for k, cos_part, sin_part in gen.hamiltonian.harmonics:
        comps.append((k, commutator_super(cos_part), commutator_super(sin_part)))
    return out0, comps


def two_level_model(omega0: float, omega_s: float, omega_c: float, gamma: float,
                    omega: float) -> PeriodicLindbladGenerator:
    """Driven two-level system with sz-dephasing.

    H(t) = omega0/2 sz + (omega_s sin(wt) + omega_c cos(wt)) sx,
    dissipator basis (sx, sy, sz) with coefficient diag(0, 0, gamma).
    """
    if omega <= 0:
        raise ValueError(f"driving frequency must be positive, got {omega}")
    if gamma < 0:
        raise ValueError(f"dephasing rate must be nonnegative, got {gamma}")
    ham = FourierOperator(
        constant=0.5 * omega0 * SIGMA_Z,
        harmonics=((1, omega_c * SIGMA_X, omega_s * SIGMA_X),),
        omega=omega,
    )
    diss = DissipatorSpec(
        basis_ops=(SIGMA_X, SIGMA_Y, SIGMA_Z),
        coeff=np.diag([0.0, 0.0, gamma]).astype(complex),
    )
    return PeriodicLindbladGenerator(ham, diss, label="two_level")


def ladder_ops(n_dim: int):
    """Truncated annihilation/creation/number operators on n_dim Fock states."""
    a = np.diag(np.sqrt(np.arange(1, n_dim, dtype=float)), k=1).astype(complex)
    adag = a.conj().T
    num = np.diag(np.arange(n_dim, dtype=float)).astype(complex)
    return a, adag, num


def _oscillator_third_order_basis(a, adag, num):
    # {a, a†, n, a†a², a†²a, a†²a², a†²a³, a†³a², a†³a³}
    return (
        a,
        adag,
        num,
        adag @ a @ a,
        adag @ adag @ a,
        adag @ adag @ a @ a,
        adag @ adag @ a @ a @ a,
        adag @ adag @ adag @ a @ a,
        adag @ adag @ adag @ a @ a @ a,
    )


def oscillator_model(omega0: float, amplitude: float, gamma: float, omega: float,
                     n_dim: int = 12) -> PeriodicLindbladGenerator:
    """Driven harmonic oscillator with number-operator dephasing, truncated to n_dim.

    H(t) = omega0 n + amplitude sin(wt) (a + a†), single dissipator n with rate gamma.
    """
    if n_dim < 6:
        raise ValueError(f"truncation dimension must be at least 6, got {n_dim}")
    if omega <= 0:
        raise ValueError(f"driving frequency must be positive, got {omega}")
    if gamma < 0:
        raise ValueError(f"dephasing rate must be nonnegative, got {gamma}")
    a, adag, num = ladder_ops(n_dim)
    ham = FourierOperator(
        constant=omega0 * num,
        harmonics=((1, np.zeros((n_dim, n_dim), dtype=complex), amplitude * (a + adag)),),
        omega=omega,
    )
    diss = DissipatorSpec(basis_ops=(num,), coeff=np.array([[gamma]], dtype=complex))
    bases = {
        0: (a, adag, num),
        1: (a, adag, num),
        2: (a, adag, num),
        3: _oscillator_third_order_basis(a, adag, num),
    }
    # The order-n effective generator is built from products of at most n+1
    # Liouvillian factors, each shifting Fock indices by at most one, so
    # matrix elements within the lowest n_dim - (n+2) states are free of
    # truncation artifacts.  Restrict the projection fit accordingly.
    supports = {order: np.arange(max(4, n_dim - (order + 2))) for order in range(4)}
    return PeriodicLindbladGenerator(ham, diss, label="oscillator",
                                     _bases=bases, _supports=supports)
