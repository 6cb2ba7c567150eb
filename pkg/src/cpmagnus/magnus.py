"""Closed-form Magnus expansion of the one-period Liouvillian.

The generator of a periodically driven model is a trigonometric polynomial in
time.  All Magnus integrands stay inside the algebra spanned by terms

    t^p * exp(i k w t) * w^q * M              (p >= 0, k integer, q <= 0)

with constant matrices M, which is closed under products, commutators and
antiderivatives.  ``magnus_terms`` evaluates the expansion at t = T exactly
(every exp(i k w T) collapses to 1 and t^p to (2 pi / w)^p), so the effective
generator per period comes out as an exact Laurent polynomial in 1/w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import hs_norm, vec
from .models import PeriodicLindbladGenerator, liouvillian_fourier

MAX_ORDER = 3

# Bernoulli numbers B_1..B_3 entering the Magnus recursion.
_BERNOULLI = {1: -0.5, 2: 1.0 / 6.0, 3: 0.0}


class OmegaScalar:
    """Laurent polynomial in the driving frequency: sum_p c_p w^p.

    Exact dict-based ring arithmetic; nothing is ever truncated implicitly.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        self.coeffs = {}
        if coeffs:
            for p, c in dict(coeffs).items():
                if c != 0:
                    self.coeffs[int(p)] = self.coeffs.get(int(p), 0.0) + c

    @classmethod
    def constant(cls, c) -> "OmegaScalar":
        return cls({0: c})

    @classmethod
    def monomial(cls, power: int, c=1.0) -> "OmegaScalar":
        return cls({power: c})

    @classmethod
    def from_x_coeffs(cls, coeffs) -> "OmegaScalar":
        """Build from polynomial coefficients in x = 1/w (index = x power)."""
        return cls({-j: c for j, c in enumerate(coeffs)})

    def to_x_coeffs(self) -> np.ndarray:
        """Coefficients as a polynomial in x = 1/w; requires powers <= 0."""
        if any(p > 0 for p in self.coeffs):
            raise ValueError("positive frequency powers cannot be expressed in x = 1/w")
        n = max((-p for p in self.coeffs), default=0)
        out = np.zeros(n + 1)
        for p, c in self.coeffs.items():
            out[-p] = c
        return out

    def __add__(self, other):
        if not isinstance(other, OmegaScalar):
            other = OmegaScalar.constant(other)
        out = dict(self.coeffs)
        for p, c in other.coeffs.items():
            out[p] = out.get(p, 0.0) + c
        return OmegaScalar(out)

    __radd__ = __add__

    def __neg__(self):
        return OmegaScalar({p: -c for p, c in self.coeffs.items()})

    def __sub__(self, other):
        if not isinstance(other, OmegaScalar):
            other = OmegaScalar.constant(other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, OmegaScalar):
            return OmegaScalar({p: c * other for p, c in self.coeffs.items()})
        out = {}
        for p1, c1 in self.coeffs.items():
            for p2, c2 in other.coeffs.items():
                out[p1 + p2] = out.get(p1 + p2, 0.0) + c1 * c2
        return OmegaScalar(out)

    __rmul__ = __mul__

    def __call__(self, omega: float):
        return sum(c * omega**p for p, c in self.coeffs.items())

    def __eq__(self, other):
        if not isinstance(other, OmegaScalar):
            return NotImplemented
        return (self - other).coeffs == {}

    def __repr__(self):
        if not self.coeffs:
            return "OmegaScalar(0)"
        parts = [f"{c!r}*w^{p}" for p, c in sorted(self.coeffs.items())]
        return "OmegaScalar(" + " + ".join(parts) + ")"


class TrigPolyMatrix:
    """Matrix-valued function sum t^p exp(i k w t) w^q M_{p,k,q}.

    terms maps (t_power, harmonic, w_power) to a constant complex matrix.
    Complex scalar weights are folded into the matrices.
    """

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms=None):
        self.dim = dim
        self.terms = {}
        if terms:
            for key, mat in terms.items():
                self._accumulate(key, mat)

    def _accumulate(self, key, mat):
        p, k, q = key
        if p < 0:
            raise ValueError("negative time powers are not representable")
        cur = self.terms.get(key)
        if cur is None:
            self.terms[key] = np.array(mat, dtype=complex)
        else:
            cur += mat

    def _prune(self):
        dead = [key for key, mat in self.terms.items() if not mat.any()]
        for key in dead:
            del self.terms[key]
        return self

    def copy(self) -> "TrigPolyMatrix":
        return TrigPolyMatrix(self.dim, {k: m.copy() for k, m in self.terms.items()})

    def __add__(self, other: "TrigPolyMatrix") -> "TrigPolyMatrix":
        out = self.copy()
        for key, mat in other.terms.items():
            out._accumulate(key, mat)
        return out._prune()

    def __sub__(self, other: "TrigPolyMatrix") -> "TrigPolyMatrix":
        return self + other.scale(-1.0)

    def scale(self, c) -> "TrigPolyMatrix":
        return TrigPolyMatrix(self.dim, {k: c * m for k, m in self.terms.items()})

    def __matmul__(self, other: "TrigPolyMatrix") -> "TrigPolyMatrix":
        out = TrigPolyMatrix(self.dim)
        for (p1, k1, q1), m1 in self.terms.items():
            for (p2, k2, q2), m2 in other.terms.items():
                out._accumulate((p1 + p2, k1 + k2, q1 + q2), m1 @ m2)
        return out._prune()

    def commutator(self, other: "TrigPolyMatrix") -> "TrigPolyMatrix":
        out = TrigPolyMatrix(self.dim)
        for (p1, k1, q1), m1 in self.terms.items():
            for (p2, k2, q2), m2 in other.terms.items():
                out._accumulate((p1 + p2, k1 + k2, q1 + q2), m1 @ m2 - m2 @ m1)
        return out._prune()

    def integrate(self) -> "TrigPolyMatrix":
        """Exact antiderivative F with F(0) = 0.

        k = 0 terms integrate to t^(p+1)/(p+1); k != 0 terms by parts, with
        every 1/(k w) recorded in the frequency power.
        """
        out = TrigPolyMatrix(self.dim)
        for (p, k, q), mat in self.terms.items():
            if k == 0:
                out._accumulate((p + 1, 0, q), mat / (p + 1))
                continue
            # antiderivative of t^p e^{ikwt}: e^{ikwt} sum_j (-1)^j p!/(p-j)! t^{p-j} / (ikw)^{j+1}
            for j in range(p + 1):
                c = (-1) ** j * math.factorial(p) / math.factorial(p - j) * (1j * k) ** (-(j + 1))
                out._accumulate((p - j, k, q - j - 1), c * mat)
            c0 = (-1) ** p * math.factorial(p) * (1j * k) ** (-(p + 1))
            out._accumulate((0, 0, q - p - 1), -c0 * mat)
        return out._prune()

    def __call__(self, t: float, omega: float) -> np.ndarray:
        """Numeric evaluation at time t and driving frequency omega."""
        out = np.zeros((self.dim**2, self.dim**2), dtype=complex)
        for (p, k, q), mat in self.terms.items():
            out += (t**p) * np.exp(1j * k * omega * t) * (omega**q) * mat
        return out

    def at_period(self) -> dict:
        """Value at t = T as a map from frequency power to matrix.

        Uses exp(i k w T) = 1 and t^p = (2 pi)^p w^{-p}.
        """
        out: dict[int, np.ndarray] = {}
        for (p, k, q), mat in self.terms.items():
            power = q - p
            contrib = (2.0 * np.pi) ** p * mat
            if power in out:
                out[power] = out[power] + contrib
            else:
                out[power] = contrib
        return {p: m for p, m in out.items() if m.any()}


@dataclass(frozen=True)
class OmegaSeries:
    """Power series in x = 1/w with matrix coefficients, truncated at x^order.

    coeffs[j] multiplies w^{-j}; positive frequency powers are rejected.
    """

    coeffs: tuple
    order: int

    def __post_init__(self):
        coeffs = tuple(np.asarray(c, dtype=complex) for c in self.coeffs)
        if len(coeffs) != self.order + 1:
            raise ValueError("need exactly order + 1 coefficients")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_power_dict(cls, powers: dict, order: int, shape) -> "OmegaSeries":
        """Collect {frequency power: matrix} into a series, discarding powers
        below -order and rejecting positive powers above numerical dust."""
        scale = max((hs_norm(m) for m in powers.values()), default=0.0)
        coeffs = [np.zeros(shape, dtype=complex) for _ in range(order + 1)]
        for p, mat in powers.items():
            if p > 0:
                if hs_norm(mat) > 1e-12 * max(1.0, scale):
                    raise AssertionError(
                        f"positive frequency power w^{p} with norm {hs_norm(mat):.3e} "
                        "survived the period evaluation"
                    )
                continue
            if -p <= order:
                coeffs[-p] = coeffs[-p] + mat
        return cls(tuple(coeffs), order)

    @property
    def dim(self) -> int:
        return self.coeffs[0].shape[0]

    def __call__(self, omega: float) -> np.ndarray:
        out = np.zeros_like(self.coeffs[0])
        for j, c in enumerate(self.coeffs):
            out = out + c * omega ** (-j)
        return out

    def __add__(self, other: "OmegaSeries") -> "OmegaSeries":
        n = min(self.order, other.order)
        return OmegaSeries(
            tuple(self.coeffs[j] + other.coeffs[j] for j in range(n + 1)), n
        )

    def truncate(self, order: int) -> "OmegaSeries":
        if order >= self.order:
            return self
        return OmegaSeries(self.coeffs[: order + 1], order)


def fourier_trigpoly(gen: PeriodicLindbladGenerator) -> TrigPolyMatrix:
    """The Liouvillian L(t) as a trigonometric polynomial (exponential basis)."""
    l0, comps = liouvillian_fourier(gen)
    terms = {(0, 0, 0): l0.mat}
    tp = TrigPolyMatrix(gen.dim, terms)
    for k, l_cos, l_sin in comps:
        tp._accumulate((0, +k, 0), 0.5 * (l_cos.mat - 1j * l_sin.mat))
        tp._accumulate((0, -k, 0), 0.5 * (l_cos.mat + 1j * l_sin.mat))
    return tp._prune()


def tp_integrate(f: TrigPolyMatrix) -> TrigPolyMatrix:
    """Exact antiderivative from 0 of a trigonometric-polynomial matrix."""
    return f.integrate()


def _magnus_trigpolys(a: TrigPolyMatrix, order: int) -> list:
    """Magnus terms M_0(t)..M_order(t) for the generator a(t), as trig polys.

    Standard recursion: with W_n the n-th Magnus term (W_1 = M_0),
        W_n = sum_{j=1}^{n-1} B_j / j! * integral of S_n^{(j)},
        S_n^{(1)} = [W_{n-1}, a],   S_n^{(j)} = sum_m [W_m, S_{n-m}^{(j-1)}].
    """
    if order < 0 or order > MAX_ORDER:
        raise ValueError(f"order must be in 0..{MAX_ORDER}, got {order}")
    omegas = [tp_integrate(a)]
    s_cache: dict[tuple, TrigPolyMatrix] = {}

    def s_term(n: int, j: int) -> TrigPolyMatrix:
        key = (n, j)
        if key not in s_cache:
            if j == 1:
                s_cache[key] = omegas[n - 2].commutator(a)
            else:
                acc = TrigPolyMatrix(a.dim)
                for m in range(1, n - j + 1):
                    acc = acc + omegas[m - 1].commutator(s_term(n - m, j - 1))
                s_cache[key] = acc
        return s_cache[key]

    for n in range(2, order + 2):
        integrand = TrigPolyMatrix(a.dim)
        for j in range(1, n):
            b = _BERNOULLI[j]
            if b == 0.0:
                continue
            integrand = integrand + s_term(n, j).scale(b / math.factorial(j))
        omegas.append(tp_integrate(integrand))
    return omegas


def magnus_terms(gen: PeriodicLindbladGenerator, order: int) -> list:
    """M_i(T)/T for i = 0..order as OmegaSeries in x = 1/w.

    Each term is checked to be trace-annihilating.
    """
    a = fourier_trigpoly(gen)
    omegas = _magnus_trigpolys(a, order)
    d = gen.dim
    ident = vec(np.eye(d)).conj()
    out = []
    for i, tp in enumerate(omegas):
        powers = tp.at_period()
        # divide by T = 2 pi / w: multiply by w / (2 pi)
        powers = {p + 1: m / (2.0 * np.pi) for p, m in powers.items()}
        series = OmegaSeries.from_power_dict(powers, order, (d * d, d * d))
        scale = max(1.0, max((hs_norm(c) for c in series.coeffs), default=0.0))
        for c in series.coeffs:
            defect = float(np.linalg.norm(ident @ c))
            if defect > 1e-12 * scale:
                raise AssertionError(
                    f"Magnus term {i} is not trace-annihilating (defect {defect:.3e})"
                )
        out.append(series)
    return out


def effective_series(gen: PeriodicLindbladGenerator, order: int) -> OmegaSeries:
    """Effective generator per period, sum of M_i(T)/T truncated at x^order."""
    terms = magnus_terms(gen, order)
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total.truncate(order)
