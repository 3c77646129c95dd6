import logging

import numpy as np
import pytest

from app.src.adapter import (
    BuildContext,
    FrodLayer,
    FullLayer,
    PissaLayer,
    SparseOffDiag,
    VeraBases,
    VeraLayer,
    count_params,
    empty_offdiag,
    get_scheme_registry,
    load_frod_layers,
    lora_init,
    offdiag_nnz,
    pissa_init,
    sample_offdiag_support,
    save_frod_layers,
    vera_init,
    vera_shared_bases,
)
from app.src.core.lab_errors import ShapeMismatchError, ValidationError
from app.src.decomp import hjd_decompose
from app.src.tensorio import SplitMix64, generate_synthetic_stack
from tests.helpers import directional_fd, numeric_grad


def _identity_layer(sigma, S=None) -> FrodLayer:
    n = len(sigma)
    return FrodLayer(U=np.eye(n), Vt=np.eye(n), sigma=np.array(sigma, dtype=float), S=S or empty_offdiag(n))


def _trained_frod(seed: int = 0) -> FrodLayer:
    dec = hjd_decompose(generate_synthetic_stack(seed, 1, 2, 6, 5))
    layer = FrodLayer.from_decomposition(dec, "q", 1, s=0.3, seed=seed)
    rng = SplitMix64(seed + 100)
    layer.sigma += 0.1 * rng.normals(5)
    layer.S.values[:] = 0.1 * rng.normals(layer.S.nnz)
    return layer


class TestSparseSupport:
    def test_counts(self):
        assert offdiag_nnz(2, 0.25) == 1
        assert offdiag_nnz(768, 0.02) == 11796

    def test_density_cap_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            S = sample_offdiag_support(4, 1.0, seed=0)
        assert S.nnz == 12
        assert "capped" in caplog.text

    def test_support_is_strictly_offdiagonal_and_seeded(self):
        a = sample_offdiag_support(16, 0.1, seed=3)
        b = sample_offdiag_support(16, 0.1, seed=3)
        assert a.nnz == 26
        assert not a.diagonal_positions()
        assert a.support == b.support
        assert len(set(a.support)) == a.nnz
        assert np.all(a.values == 0.0)

    def test_diagonal_entry_rejected(self):
        with pytest.raises(ValidationError):
            SparseOffDiag(n=3, rows=[1], cols=[1], values=[1.0])

    def test_matvec_matches_dense(self):
        S = sample_offdiag_support(6, 0.3, seed=2)
        S = S.with_values(SplitMix64(4).normals(S.nnz))
        X = SplitMix64(5).normals(18).reshape(3, 6)
        dense = S.to_dense()
        assert np.allclose(S.matvec(X), X @ dense.T)
        assert np.allclose(S.rmatvec(X), X @ dense)

    def test_bad_density(self):
        with pytest.raises(ValidationError):
            sample_offdiag_support(4, 1.5, seed=0)


class TestFrodLayer:
    def test_forward_hand_oracles(self):
        assert np.allclose(_identity_layer([2.0, 3.0]).forward(np.array([1.0, 1.0])), [2.0, 3.0])
        S = SparseOffDiag(n=2, rows=[0], cols=[1], values=[1.0])
        assert np.allclose(_identity_layer([2.0, 3.0], S).forward(np.array([1.0, 1.0])), [3.0, 3.0])

    def test_backward_hand_oracle(self):
        S = SparseOffDiag(n=2, rows=[0], cols=[1], values=[0.0])
        grads, _ = _identity_layer([2.0, 3.0], S).backward(np.array([2.0, 5.0]), np.array([1.0, 1.0]))
        assert np.allclose(grads["sigma"], [2.0, 5.0])
        assert np.allclose(grads["S"], [5.0])

    def test_zero_upstream_gives_zero_gradients(self):
        layer = _trained_frod()
        grads, dX = layer.backward(np.ones((2, 5)), np.zeros((2, 6)))
        assert all(np.all(g == 0) for g in grads.values())
        assert np.all(dX == 0)

    def test_gradients_match_finite_differences(self):
        layer = _trained_frod(1)
        rng = SplitMix64(7)
        X = rng.normals(15).reshape(3, 5)
        G = rng.normals(18).reshape(3, 6)
        objective = lambda: float(np.sum(G * layer.forward(X)))
        grads, dX = layer.backward(X, G)
        for name, array in layer.parameters().items():
            assert np.allclose(grads[name], numeric_grad(objective, array), rtol=1e-6, atol=1e-8)
        assert np.allclose(dX, G @ layer.merge_weights())

    def test_initial_layer_reproduces_weight(self):
        stack = generate_synthetic_stack(2, 1, 3, 6, 4)
        dec = hjd_decompose(stack)
        layer = FrodLayer.from_decomposition(dec, 0, 2, s=0.25, seed=1)
        assert np.allclose(layer.merge_weights(), stack.categories[0].layers[2], atol=1e-10)

    def test_doubled_sigma(self):
        layer = _identity_layer([1.0, 4.0])
        layer.sigma *= 2.0
        assert np.allclose(layer.merge_weights(), 2.0 * np.diag([1.0, 4.0]))

    def test_forward_equals_merged_weight(self):
        layer = _trained_frod(2)
        X = SplitMix64(3).normals(20).reshape(4, 5)
        assert np.allclose(layer.forward(X), X @ layer.merge_weights().T, atol=1e-12)

    def test_input_dimension_checked(self):
        with pytest.raises(ShapeMismatchError):
            _identity_layer([1.0, 2.0]).forward(np.ones(3))

    def test_s_only_freezes_sigma(self):
        dec = hjd_decompose(generate_synthetic_stack(0, 1, 2, 4, 4))
        layer = FrodLayer.from_decomposition(dec, "q", 0, s=0.25, seed=0, train_sigma=False, scheme="s-only")
        assert list(layer.parameters()) == ["S"]
        assert layer.frozen_scalars() == 16 + 4

    def test_checkpoint_round_trip(self, tmp_path):
        layer = _trained_frod(3)
        path = tmp_path / "ckpt.frodtnsr"
        save_frod_layers(path, {"q.1": layer})
        back = load_frod_layers(path)["q.1"]
        assert back.S.support == layer.S.support
        assert np.array_equal(back.merge_weights(), layer.merge_weights())
        assert np.array_equal(back.sigma_init, layer.sigma_init)


def _scheme_layer(scheme: str):
    rng = SplitMix64(40)
    W = rng.normals(30).reshape(6, 5)
    if scheme == "frod":
        return _trained_frod(1)
    if scheme == "lora":
        layer = lora_init(6, 5, 2, seed=4, w0=W)
        layer.B[...] = rng.normals(12).reshape(6, 2)
        return layer
    if scheme == "pissa":
        return PissaLayer(W, 2)
    if scheme == "vera":
        layer = vera_init(6, 5, 3, seed=4, w0=W)
        layer.b[...] = rng.normals(6)
        return layer
    return FullLayer(W)


class TestGradientsAgainstFiniteDifferences:
    @pytest.mark.parametrize("scheme", ["frod", "lora", "vera", "pissa", "full"])
    def test_hundred_random_directions(self, scheme):
        layer = _scheme_layer(scheme)
        params = list(layer.parameters().values())
        rng = SplitMix64(sum(map(ord, scheme)))
        for _ in range(100):
            X = rng.normals(15).reshape(3, 5)
            G = rng.normals(18).reshape(3, 6)
            directions = [rng.normals(p.size).reshape(p.shape) for p in params]
            grads, dX = layer.backward(X, G)
            analytic = sum(float(np.sum(grads[name] * d)) for name, d in zip(layer.parameters(), directions))
            numeric = directional_fd(lambda: float(np.sum(G * layer.forward(X))), params, directions)
            scale = np.sqrt(sum(float(np.sum(grads[name] ** 2)) for name in layer.parameters()))
            scale *= np.sqrt(sum(float(np.sum(d**2)) for d in directions))
            assert abs(numeric - analytic) <= 1e-6 * max(scale, 1e-12)

            dir_X = rng.normals(15).reshape(3, 5)
            numeric_X = directional_fd(lambda: float(np.sum(G * layer.forward(X))), [X], [dir_X])
            assert abs(numeric_X - float(np.sum(dX * dir_X))) <= 1e-6 * np.linalg.norm(dX) * np.linalg.norm(dir_X)


class TestBaselines:
    def test_lora_starts_at_base_weight(self):
        W0 = SplitMix64(1).normals(12).reshape(4, 3)
        layer = lora_init(4, 3, 2, seed=0, w0=W0)
        X = SplitMix64(2).normals(6).reshape(2, 3)
        assert np.array_equal(layer.B, np.zeros((4, 2)))
        assert np.allclose(layer.forward(X), X @ W0.T)

    def test_lora_gradients_match_finite_differences(self):
        layer = lora_init(4, 3, 2, seed=0)
        layer.B[:] = SplitMix64(3).normals(8).reshape(4, 2)
        X = SplitMix64(4).normals(6).reshape(2, 3)
        G = SplitMix64(5).normals(8).reshape(2, 4)
        objective = lambda: float(np.sum(G * layer.forward(X)))
        grads, _ = layer.backward(X, G)
        for name, array in layer.parameters().items():
            assert np.allclose(grads[name], numeric_grad(objective, array), rtol=1e-6, atol=1e-8)

    def test_lora_rank_range(self):
        with pytest.raises(ValidationError):
            lora_init(4, 3, 4, seed=0)

    def test_vera_zero_scaling_vector(self):
        layer = vera_init(5, 4, 2, seed=1)
        assert np.array_equal(layer.delta(), np.zeros((5, 4)))

    def test_vera_hand_product(self):
        bases = VeraBases(B=np.array([[1.0], [0.0]]), A=np.array([[1.0, 0.0]]))
        layer = VeraLayer(np.zeros((2, 2)), bases, d=np.array([2.0]), b=np.array([1.0, 0.0]))
        assert np.allclose(layer.delta(), [[2.0, 0.0], [0.0, 0.0]])

    def test_vera_bases_shared(self):
        bases = vera_shared_bases(4, 4, 2, seed=9)
        a = vera_init(4, 4, 2, seed=0, bases=bases)
        b = vera_init(4, 4, 2, seed=1, bases=bases)
        assert a.bases.B is b.bases.B
        assert np.array_equal(vera_shared_bases(4, 4, 2, seed=9).A, bases.A)

    def test_vera_gradients_match_finite_differences(self):
        layer = vera_init(4, 3, 2, seed=2)
        layer.b[:] = SplitMix64(1).normals(4)
        X = SplitMix64(2).normals(6).reshape(2, 3)
        G = SplitMix64(3).normals(8).reshape(2, 4)
        objective = lambda: float(np.sum(G * layer.forward(X)))
        grads, _ = layer.backward(X, G)
        for name, array in layer.parameters().items():
            assert np.allclose(grads[name], numeric_grad(objective, array), rtol=1e-6, atol=1e-8)

    def test_pissa_truncated_svd(self):
        factors = pissa_init(np.diag([3.0, 2.0, 1.0]), 1)
        assert np.allclose(factors.B @ factors.A, np.diag([3.0, 0.0, 0.0]))
        assert np.allclose(factors.W_residual, np.diag([0.0, 2.0, 1.0]))

    def test_pissa_full_rank_leaves_no_residual(self):
        W = SplitMix64(6).normals(12).reshape(4, 3)
        factors = pissa_init(W, 3)
        assert np.max(np.abs(factors.W_residual)) <= 1e-9 * np.max(np.abs(W))
        layer = PissaLayer(W, 2)
        assert np.allclose(layer.merge_weights(), W, atol=1e-12)

    def test_full_layer_gradient(self):
        W = np.array([[1.0, 2.0], [3.0, 4.0]])
        grads, dX = FullLayer(W).backward(np.array([1.0, 0.5]), np.array([2.0, -1.0]))
        assert np.allclose(grads["W"], [[2.0, 1.0], [-1.0, -0.5]])
        assert np.allclose(dX, [-1.0, 0.0])


class TestRegistry:
    def test_builds_every_scheme(self):
        stack = generate_synthetic_stack(0, 1, 2, 4, 4)
        dec = hjd_decompose(stack)
        registry = get_scheme_registry()
        for name in registry.list_schemes():
            ctx = BuildContext(weight=stack.categories[0].layers[0], seed=1, r=2, s=0.25, decomposition=dec)
            layer = registry.build(name, ctx)
            assert layer.name == name
            assert np.allclose(layer.merge_weights(), ctx.weight, atol=1e-10)

    def test_unknown_scheme(self):
        with pytest.raises(ValidationError):
            get_scheme_registry().build("dora", BuildContext(weight=np.eye(2), seed=0))

    def test_frod_needs_decomposition(self):
        registry = get_scheme_registry()
        assert registry.needs_decomposition("frod") and not registry.needs_decomposition("lora")
        with pytest.raises(ValidationError):
            registry.build("frod", BuildContext(weight=np.eye(2), seed=0))


class TestParamCounts:
    def test_frod_example(self):
        count = count_params("frod", 4, 4, 2, s=0.25)
        assert (count.weights_total, count.trainable, count.optimizer_states) == (64, 16, 32)

    def test_lora_example(self):
        assert count_params("lora", 8, 4, 3, r=2).trainable == 72

    def test_vera_without_rank(self):
        assert count_params("vera", 6, 6, 3, r=0).trainable == 18

    def test_shared_v_across_categories(self):
        count = count_params("frod", 4, 4, 2, s=0.25, categories=3)
        assert count.weights_total == 3 * 64
        assert count.weights_shared_v == 3 * 48 + 16

    def test_counts_match_constructed_layers(self):
        dec = hjd_decompose(generate_synthetic_stack(0, 1, 2, 4, 4))
        for scheme in ("frod", "sigma-only", "s-only"):
            registry = get_scheme_registry()
            layers = [
                registry.build(scheme, BuildContext(weight=np.eye(4), seed=i, s=0.25, decomposition=dec, layer_index=i))
                for i in range(2)
            ]
            assert sum(l.trainable_count() for l in layers) == count_params(scheme, 4, 4, 2, s=0.25).trainable

    def test_invalid_scheme(self):
        with pytest.raises(ValidationError):
            count_params("adalora", 4, 4, 1)
