import numpy as np
import pytest

from cpmagnus import (
    DissipatorSpec,
    FourierOperator,
    build_liouvillian,
    effective_series,
    hs_norm,
    liouvillian_fourier,
    oscillator_model,
    project_series,
    two_level_model,
    vec,
)
from cpmagnus.models import SIGMA_X, SIGMA_Z, ladder_ops

from conftest import random_hermitian, rng


class TestTwoLevelModel:
    def test_undriven_is_time_independent(self):
        model = two_level_model(1.1, 0.0, 0.0, 0.2, 1.0)
        t_third = model.period / 3
        assert np.allclose(build_liouvillian(model, 0.0).mat,
                           build_liouvillian(model, t_third).mat, atol=1e-14)

    def test_zeroth_order_coefficient_matrix(self, tl_model, tl_decomposition):
        gamma = 0.25
        assert np.allclose(tl_decomposition.c_series.coeffs[0],
                           np.diag([0.0, 0.0, gamma]), atol=1e-12)

    def test_sine_peak_at_quarter_period(self):
        model = two_level_model(1.0, 0.7, 0.3, 0.0, 1.0)
        h = model.hamiltonian.at(model.period / 4)
        sx_coeff = h[0, 1].real
        assert sx_coeff == pytest.approx(0.7, abs=1e-12)

    def test_undriven_coherence_eigenvalue(self):
        # the |0><1| coherence (ground = -1 eigenstate of sz) decays at
        # i w0 - 2 gamma under pure sz dephasing
        w0, g = 1.3, 0.21
        model = two_level_model(w0, 0.0, 0.0, g, 1.0)
        liou = build_liouvillian(model, 0.0)
        rho = np.zeros((2, 2), dtype=complex)
        rho[1, 0] = 1.0  # |ground><excited|
        out = liou(rho)
        assert np.allclose(out, (1j * w0 - 2 * g) * rho, atol=1e-13)

    def test_rejects_nonpositive_omega(self):
        with pytest.raises(ValueError):
            two_level_model(1.0, 0.1, 0.1, 0.1, 0.0)

    def test_rejects_negative_gamma(self):
        with pytest.raises(ValueError):
            two_level_model(1.0, 0.1, 0.1, -0.1, 1.0)


class TestOscillatorModel:
    def test_fock_states_stationary_without_driving(self):
        model = oscillator_model(1.0, 0.0, 0.3, 1.0, 8)
        liou = build_liouvillian(model, 0.0)
        for k in (0, 3, 7):
            rho = np.zeros((8, 8), dtype=complex)
            rho[k, k] = 1.0
            assert hs_norm(liou(rho)) <= 1e-13

    def test_coherence_decay_rate(self):
        w0, g = 1.2, 0.11
        model = oscillator_model(w0, 0.0, g, 1.0, 8)
        liou = build_liouvillian(model, 0.0)
        rho = np.zeros((8, 8), dtype=complex)
        rho[0, 1] = 1.0
        assert np.allclose(liou(rho), (1j * w0 - g / 2) * rho, atol=1e-13)

    def test_rejects_small_truncation(self):
        with pytest.raises(ValueError):
            oscillator_model(1.0, 0.1, 0.1, 1.0, 4)

    def test_second_order_projection_basis_is_ladder_triple(self, osc_model):
        a, adag, num = ladder_ops(12)
        basis = osc_model.projection_basis(2)
        assert len(basis) == 3
        assert np.array_equal(basis[0], a)
        assert np.array_equal(basis[1], adag)
        assert np.array_equal(basis[2], num)

    def test_third_order_basis_has_nine_operators(self, osc_model):
        assert len(osc_model.projection_basis(3)) == 9


class TestBuildLiouvillian:
    def test_pure_commutator_annihilates_identity(self):
        model = two_level_model(1.0, 0.0, 0.3, 0.0, 1.0)
        liou = build_liouvillian(model, 0.1)
        assert hs_norm(liou(np.eye(2))) <= 1e-14

    def test_trace_preservation_at_random_times(self, tl_model):
        ident = vec(np.eye(2)).conj()
        for t in rng(7).uniform(0, 3 * tl_model.period, size=10):
            liou = build_liouvillian(tl_model, t)
            assert np.linalg.norm(ident @ liou.mat) <= 1e-12 * max(1.0, hs_norm(liou.mat))

    def test_hermiticity_preservation(self, tl_model):
        g = rng(8)
        for t in (0.0, 0.37, 2.1):
            liou = build_liouvillian(tl_model, t)
            for _ in range(5):
                h = random_hermitian(g, 2)
                out = liou(h)
                assert hs_norm(out - out.conj().T) <= 1e-12 * max(1.0, hs_norm(out))

    def test_periodicity(self, tl_model):
        for t in (0.0, 0.4, 1.9):
            assert np.allclose(build_liouvillian(tl_model, t).mat,
                               build_liouvillian(tl_model, t + tl_model.period).mat,
                               atol=1e-12)

    def test_rejects_nonfinite_time(self, tl_model):
        with pytest.raises(ValueError):
            build_liouvillian(tl_model, np.inf)


class TestLiouvillianFourier:
    def test_time_independent_has_only_constant_part(self):
        model = two_level_model(1.0, 0.0, 0.0, 0.2, 1.0)
        l0, comps = liouvillian_fourier(model)
        assert comps == [] or all(
            hs_norm(c.mat) <= 1e-14 and hs_norm(s.mat) <= 1e-14 for _, c, s in comps
        )

    def test_sine_component_is_commutator_superop(self, tl_model):
        from cpmagnus import commutator_super

        _, comps = liouvillian_fourier(tl_model)
        k, l_cos, l_sin = comps[0]
        assert k == 1
        assert np.allclose(l_sin.mat, commutator_super(0.7 * SIGMA_X).mat, atol=1e-14)
        assert np.allclose(l_cos.mat, commutator_super(0.45 * SIGMA_X).mat, atol=1e-14)

    def test_resynthesis_matches_direct_evaluation(self, tl_model):
        l0, comps = liouvillian_fourier(tl_model)
        w = tl_model.omega
        for t in rng(5).uniform(0, tl_model.period, size=7):
            total = l0.mat.copy()
            for k, l_cos, l_sin in comps:
                total = total + l_cos.mat * np.cos(k * w * t) + l_sin.mat * np.sin(k * w * t)
            assert np.allclose(total, build_liouvillian(tl_model, t).mat, atol=1e-12)


class TestValidation:
    def test_fourier_operator_requires_hermitian_parts(self):
        with pytest.raises(ValueError):
            FourierOperator(np.array([[0.0, 1.0], [0.0, 0.0]]), (), 1.0)

    def test_dissipator_spec_rejects_negative_coefficients(self):
        with pytest.raises(ValueError):
            DissipatorSpec((SIGMA_Z,), np.array([[-0.1]]))

    def test_truncation_guard_on_effective_series(self):
        # figure-level symbolic output must be stable when the truncation grows
        small = oscillator_model(1.0, 0.125, 0.015625, 1.0, 12)
        big = oscillator_model(1.0, 0.125, 0.015625, 1.0, 16)
        dec_small = project_series(effective_series(small, 2), small.projection_basis(2),
                                   support=small.projection_support(2))
        dec_big = project_series(effective_series(big, 2), big.projection_basis(2),
                                 support=big.projection_support(2))
        for c_small, c_big in zip(dec_small.c_series.coeffs, dec_big.c_series.coeffs):
            assert np.max(np.abs(c_small - c_big)) < 1e-6
