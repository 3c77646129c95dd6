import math

import numpy as np
import pytest

from app.src.adapter import FrodLayer, SparseOffDiag, empty_offdiag
from app.src.analysis import (
    adapter_hessian_analytic,
    angular_identity_residual,
    commutator_audit,
    compare_hessian_blocks,
    frod_hessian_analytic,
    full_hessian_analytic,
    gauge_dims,
    hessian_condition,
    hessian_fd,
    in_rotation_band,
    latent_orthogonality_audit,
    orthogonality_residual,
    pdof_rank,
    pdof_vote,
    quadratic_model,
    regularized_condition,
    small_angle_residual,
    split_update,
    summarize_weyl,
    tan_alpha_proxy,
    verify_decomposition,
    weyl_audit,
    weyl_check,
)
from app.src.analysis.audit import perturbed_layer
from app.src.core.lab_errors import InvariantViolation, ValidationError
from app.src.tensorio import SplitMix64


def _moved_identity_layer(delta, off_value) -> FrodLayer:
    S = SparseOffDiag(n=2, rows=[0], cols=[1], values=[off_value])
    layer = FrodLayer(U=np.eye(2), Vt=np.eye(2), sigma=np.ones(2), S=S)
    layer.sigma = layer.sigma + np.asarray(delta, dtype=float)
    return layer


class TestWeyl:
    def test_zero_perturbation(self):
        result = weyl_check(np.array([3.0, 1.0]), empty_offdiag(2), 0.1)
        assert result.max_dev == 0.0 and result.passed

    def test_hand_oracle(self):
        S = SparseOffDiag(n=2, rows=[0], cols=[1], values=[0.1])
        result = weyl_check(np.array([3.0, 1.0]), S, 0.1)
        assert np.allclose(result.deviations, [0.001874, 0.000625], atol=1e-6)
        assert result.passed
        assert result.spec_norm_S == pytest.approx(0.1)

    def test_diagonal_support_is_an_invariant_violation(self):
        S = empty_offdiag(3).with_unchecked_entry(1, 1, 0.01)
        with pytest.raises(InvariantViolation, match="diagonal support"):
            weyl_check(np.ones(3), S, 0.1)

    def test_entry_above_bound_rejected(self):
        S = SparseOffDiag(n=2, rows=[1], cols=[0], values=[0.5])
        with pytest.raises(ValidationError):
            weyl_check(np.ones(2), S, 0.1)

    def test_randomized_audit_passes_and_is_thread_invariant(self):
        serial = weyl_audit(40, seed=3, n_choices=(16,), s_choices=(0.1,), eps_choices=(0.05,), workers=1)
        parallel = weyl_audit(40, seed=3, n_choices=(16,), s_choices=(0.1,), eps_choices=(0.05,), workers=4)
        assert [r.row() for r in serial] == [r.row() for r in parallel]
        assert summarize_weyl(serial)["violations"] == 0

    @pytest.mark.slow
    def test_thousand_trials_over_the_default_grid(self):
        rows = weyl_audit(1000, seed=0)
        assert summarize_weyl(rows)["violations"] == 0
        assert {(r.n, r.s, r.eps) for r in rows} == {
            (n, s, eps) for n in (8, 16, 32) for s in (0.05, 0.1) for eps in (0.01, 0.1)
        }

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [8, 16, 32])
    @pytest.mark.parametrize("s", [0.05, 0.1])
    @pytest.mark.parametrize("eps", [0.01, 0.1])
    def test_thousand_trials_per_cell(self, n, s, eps):
        rows = weyl_audit(1000, seed=n, n_choices=(n,), s_choices=(s,), eps_choices=(eps,))
        assert summarize_weyl(rows)["violations"] == 0
        assert all(r.nnz > 0 for r in rows)

    def test_latent_traces_are_exactly_zero(self):
        assert latent_orthogonality_audit(50, seed=1)["nonzero_traces"] == 0


class TestUpdateGeometry:
    def test_untrained_layer_has_zero_angle(self):
        split = split_update(_moved_identity_layer([0.0, 0.0], 0.0))
        assert split.frob_on == 0.0 and split.frob_off == 0.0 and split.alpha == 0.0

    def test_sigma_only_move_has_zero_angle(self):
        assert split_update(_moved_identity_layer([0.1, -0.2], 0.0)).alpha == 0.0

    def test_equal_norms_give_quarter_turn(self):
        split = split_update(_moved_identity_layer([0.3, 0.4], 0.5))
        assert split.alpha == pytest.approx(math.pi / 4, abs=1e-12)

    def test_orthogonality_with_orthonormal_frame(self):
        layer = _moved_identity_layer([0.3, 0.4], 0.5)
        report = orthogonality_residual(split_update(layer), layer.U, layer.Vt)
        assert report.latent == 0.0
        assert report.ambient <= 1e-10
        assert report.gram_deviation == 0.0

    def test_angular_identity_on_decomposed_layer(self, small_decomposition):
        layer = perturbed_layer(small_decomposition, "q", 0, s=0.1, seed=5)
        split = split_update(layer)
        assert split.frob_off > 0
        assert angular_identity_residual(split) <= 1e-10
        assert orthogonality_residual(split, layer.U, layer.Vt).latent == 0.0

    def test_angular_identity_at_zero_angle(self):
        split = split_update(_moved_identity_layer([0.2, 0.1], 0.0))
        assert angular_identity_residual(split) == pytest.approx(0.0, abs=1e-15)

    def test_zero_update_has_no_angular_form(self):
        with pytest.raises(ValidationError):
            angular_identity_residual(split_update(_moved_identity_layer([0.0, 0.0], 0.0)))

    def test_small_angle_bounds(self):
        report = small_angle_residual(split_update(_moved_identity_layer([0.3, 0.4], 0.02)))
        assert report.alpha < 0.1
        assert report.within_bound
        assert report.second_order <= report.alpha**2

    def test_tan_alpha_proxy(self):
        assert tan_alpha_proxy(0.02, 1e-4, 1e-3, 768) == pytest.approx(0.3919, abs=1e-3)
        assert tan_alpha_proxy(0.02, 0.0, 1e-3, 768) == 0.0
        with pytest.raises(ValidationError):
            tan_alpha_proxy(0.02, 1e-4, 0.0, 768)

    def test_rotation_band(self):
        assert in_rotation_band(0.1)
        assert not in_rotation_band(0.3919)
        assert not in_rotation_band(None)


class TestPdof:
    def test_lora_example(self):
        result = pdof_vote("lora", 4, 3, 2, seeds=[0, 1, 2, 3, 4])
        assert result.measured == 10 and result.matches

    def test_lora_full_rank_covers_the_space(self):
        assert pdof_rank("lora", 3, 3, 3, seed=0) == 9

    def test_vera_is_reported_not_asserted(self):
        result = pdof_vote("vera", 4, 3, 2, seeds=[0, 1, 2])
        assert result.closed_form == 5
        assert 1 <= result.measured <= 4 + 2

    def test_dimension_limits(self):
        with pytest.raises(ValidationError):
            pdof_rank("lora", 13, 2, 1, seed=0)
        with pytest.raises(ValidationError):
            pdof_rank("lora", 4, 3, 4, seed=0)
        with pytest.raises(ValidationError):
            pdof_rank("dora", 4, 3, 1, seed=0)

    @pytest.mark.slow
    def test_lora_formula_holds_on_small_grid(self):
        for m in range(1, 9):
            for n in range(1, 9):
                for r in range(1, min(m, n) + 1):
                    result = pdof_vote("lora", m, n, r, seeds=[0, 1, 2, 3, 4])
                    assert result.matches, (m, n, r, result.ranks)


class TestHessian:
    def test_fd_of_half_squared_norm(self):
        H = hessian_fd(lambda t: 0.5 * float(t @ t), np.array([0.3, -1.0, 2.0]))
        assert np.allclose(H, np.eye(3), atol=1e-6)

    def test_fd_of_quadratic_form(self):
        A = np.array([[2.0, 1.0, 0.0], [0.0, 3.0, -1.0], [4.0, 0.0, 1.0]])
        H = hessian_fd(lambda t: 0.5 * float(t @ A @ t), np.zeros(3))
        assert np.allclose(H, 0.5 * (A + A.T), atol=1e-6)

    def test_lora_model_matches_analytic_blocks(self):
        W = SplitMix64(0).normals(16).reshape(4, 4) / 2.0
        model = quadratic_model("lora", W, r=1, lam=1.0, seed=0, a_norm2=2.0)
        analytic = adapter_hessian_analytic("lora", model.A, model.B, 1.0)
        blocks = compare_hessian_blocks(hessian_fd(model.loss, model.theta0), analytic, model.split)
        assert blocks["diag_block_rel_error"] < 0.05
        # theta = [vec B; vec A]: at B = 0 the A block vanishes, the B block is lambda ||A||^2
        assert np.allclose(np.diag(analytic)[: model.split], 2.0)
        assert np.allclose(np.diag(analytic)[model.split :], 0.0)

    def test_lora_condition_number(self):
        W = SplitMix64(0).normals(16).reshape(4, 4)
        model = quadratic_model("lora", W, r=1, lam=1.0, seed=0, a_norm2=2.0)
        H = adapter_hessian_analytic("lora", model.A, model.B, 1.0)
        assert hessian_condition(H, 1e-3).tau_dot == pytest.approx(2001.0)

    def test_pissa_blocks_share_one_scale(self):
        W = np.diag([3.0, 2.0, 1.0])
        model = quadratic_model("pissa", W, r=1, lam=0.5, seed=0)
        analytic = adapter_hessian_analytic("pissa", model.A, model.B, 0.5)
        assert np.allclose(np.diag(analytic), 0.5 * 3.0)
        blocks = compare_hessian_blocks(hessian_fd(model.loss, model.theta0), analytic, model.split)
        assert blocks["diag_block_rel_error"] < 0.05

    def test_pissa_gauge_direction_sets_the_floor(self):
        W = np.diag([3.0, 2.0, 1.0])
        model = quadratic_model("pissa", W, r=1, lam=0.5, seed=0)
        analytic = adapter_hessian_analytic("pissa", model.A, model.B, 0.5)
        cond = hessian_condition(analytic, 1e-3, gauge_dims("pissa", 1))
        assert cond.tau_dot == pytest.approx((1.5 + 1e-3) / 1e-3)
        # (B, A) -> (B g, A / g) leaves B A fixed, so the exact Hessian is singular
        fd_eigs = np.linalg.eigvalsh(hessian_fd(model.loss, model.theta0))
        assert abs(fd_eigs[0]) < 1e-5

    def test_frod_model_is_isotropic(self):
        W = SplitMix64(3).normals(16).reshape(4, 4)
        model = quadratic_model("frod", W, r=1, lam=2.0, seed=3, s=0.5)
        assert model.split == 4 and model.theta0.size == 4 + 8
        H = hessian_fd(model.loss, model.theta0)
        assert np.allclose(H, 2.0 * np.eye(12), atol=1e-5)
        analytic = frod_hessian_analytic(model.split, model.theta0.size - model.split, 2.0)
        assert hessian_condition(analytic, 1e-3, gauge_dims("frod", 1)).tau_dot == pytest.approx(1.0)

    def test_condition_ordering_frod_lora_pissa(self):
        W = np.diag([6.0, 3.0, 1.0, 0.5])
        tau = {}
        for scheme in ("frod", "lora", "pissa"):
            model = quadratic_model(scheme, W, r=1, lam=1.0, seed=0, a_norm2=2.0 if scheme == "lora" else None)
            if scheme == "frod":
                H = frod_hessian_analytic(model.split, model.theta0.size - model.split, 1.0)
            else:
                H = adapter_hessian_analytic(scheme, model.A, model.B, 1.0)
            tau[scheme] = hessian_condition(H, 1e-3, gauge_dims(scheme, 1)).tau_dot
        assert tau["frod"] == pytest.approx(1.0)
        assert tau["lora"] == pytest.approx(2001.0)
        assert tau["pissa"] == pytest.approx(6001.0)

    def test_full_is_perfectly_conditioned(self):
        assert hessian_condition(full_hessian_analytic(2, 3, 4.0), 1e-3).tau_dot == pytest.approx(1.0)

    def test_vera_model_runs_through_fd(self):
        model = quadratic_model("vera", np.eye(3), r=2, lam=1.0, seed=1)
        H = hessian_fd(model.loss, model.theta0)
        assert H.shape == (5, 5)
        assert np.allclose(H, H.T)

    def test_regularized_condition_edges(self):
        assert regularized_condition([2.0, 2.0, 2.0], 1e-3).tau_dot == pytest.approx(1.0)
        assert regularized_condition([0.0], 0.5).tau_dot == 1.0
        assert regularized_condition([0.0, 2.0], 1e-3).tau_dot == pytest.approx(2001.0)
        assert regularized_condition([2.0, 2.0], 1e-3, flat_dims=1).tau_dot == pytest.approx(2001.0)
        with pytest.raises(ValidationError):
            regularized_condition([1.0], 0.0)
        with pytest.raises(ValidationError):
            regularized_condition([1.0], 1e-3, flat_dims=-1)

    def test_regularized_condition_is_scale_covariant(self):
        a = regularized_condition([1.0, 4.0, 9.0], 0.1).tau_dot
        b = regularized_condition([10.0, 40.0, 90.0], 1.0).tau_dot
        assert a == pytest.approx(b)

    def test_analytic_only_for_factor_schemes(self):
        with pytest.raises(ValidationError):
            adapter_hessian_analytic("vera", np.ones((1, 2)), np.ones((2, 1)), 1.0)


class TestVerifyDecomposition:
    def test_clean_decomposition_passes(self, small_decomposition):
        report, rows = verify_decomposition(small_decomposition, trials=20, eps=0.05, s=0.1, seed=0, workers=2)
        assert len(rows) == 20
        assert report["weyl"]["violations"] == 0
        assert report["geometry"]["max_angular_residual"] <= 1e-10
        assert report["latent_audit"]["nonzero_traces"] == 0
        assert report["commutator"]["min_offdiag_relative"] > 0

    def test_injected_diagonal_is_caught(self, small_decomposition):
        with pytest.raises(InvariantViolation):
            verify_decomposition(small_decomposition, trials=5, eps=0.05, s=0.1, seed=0, inject_diagonal=True)

    def test_trials_must_be_positive(self, small_decomposition):
        with pytest.raises(ValidationError):
            verify_decomposition(small_decomposition, trials=0, eps=0.05, s=0.1, seed=0)

    def test_commutator_labels(self, small_decomposition):
        audit = commutator_audit(small_decomposition)
        assert audit["labels"][:2] == ["q/0", "q/1"]
        assert len(audit["labels"]) == 8
