import numpy as np
import pytest

from app.src.core.lab_errors import (
    BadMagicError,
    DuplicateNameError,
    ShapeMismatchError,
    TruncatedPayloadError,
    UnsupportedVersionError,
    ValidationError,
)
from app.src.tensorio import (
    SplitMix64,
    TensorContainer,
    WeightStack,
    decode_container,
    derive_seed,
    encode_container,
    generate_synthetic_stack,
    read_container,
    write_container,
)


class TestContainer:
    def test_empty_container_is_prefix_plus_header(self):
        blob = encode_container(TensorContainer())
        assert blob[:8] == b"FRODTNSR"
        assert blob[20:] == b'{"tensors":[]}'
        assert len(decode_container(blob)) == 0

    def test_file_round_trip_keeps_payload_bytes(self, tmp_path):
        c = TensorContainer().add("eye", np.array([[1.0, 0.0], [0.0, 1.0]]))
        c.add("w", np.arange(6, dtype=np.float32).reshape(2, 3), dtype="f32")
        path = tmp_path / "t.frodtnsr"
        write_container(path, c)
        back = read_container(path)
        assert back.names() == ["eye", "w"]
        assert back.get("eye").tobytes() == c.get("eye").tobytes()
        assert back.get("w").dtype == np.float32
        assert back.get("w").shape == (2, 3)

    def test_payload_offsets_are_aligned(self):
        c = TensorContainer().add("a", np.ones(3, dtype=np.float32), dtype="f32").add("b", np.ones(2))
        blob = encode_container(c)
        # 12 bytes of f32 padded to 16 before the f64 tensor
        header_len = int.from_bytes(blob[12:20], "little")
        assert b'"offset":16' in blob[20 : 20 + header_len]

    def test_duplicate_names_rejected(self):
        c = TensorContainer().add("x", [1.0]).add("x", [2.0])
        with pytest.raises(DuplicateNameError):
            encode_container(c)

    def test_zero_dimension_rejected(self):
        with pytest.raises(ShapeMismatchError):
            encode_container(TensorContainer().add("x", np.zeros((0, 2))))

    def test_long_name_rejected(self):
        with pytest.raises(ValidationError):
            encode_container(TensorContainer().add("x" * 256, [1.0]))

    def test_bad_magic(self):
        blob = bytearray(encode_container(TensorContainer().add("x", [1.0])))
        blob[:8] = b"XXXXXXXX"
        with pytest.raises(BadMagicError):
            decode_container(bytes(blob))

    def test_unsupported_version(self):
        blob = bytearray(encode_container(TensorContainer()))
        blob[8:12] = (2).to_bytes(4, "little")
        with pytest.raises(UnsupportedVersionError):
            decode_container(bytes(blob))

    def test_truncated_payload(self):
        blob = encode_container(TensorContainer().add("x", np.ones(4)))
        with pytest.raises(TruncatedPayloadError):
            decode_container(blob[:-8])


class TestSplitMix64:
    def test_block_path_matches_scalar_path(self):
        a, b = SplitMix64(42), SplitMix64(42)
        scalar = np.array([a.next_double() for _ in range(17)])
        assert np.array_equal(b.uniforms(17), scalar)
        assert a.next_u64() == b.next_u64()

    def test_derive_seed_is_deterministic_and_index_sensitive(self):
        assert derive_seed(5, 3) == derive_seed(5, 3)
        assert derive_seed(5, 3) != derive_seed(5, 4)

    def test_randbelow_and_permutation(self):
        rng = SplitMix64(1)
        draws = [rng.randbelow(3) for _ in range(200)]
        assert set(draws) == {0, 1, 2}
        perm = SplitMix64(9).permutation(50)
        assert sorted(perm.tolist()) == list(range(50))
        assert np.array_equal(perm, SplitMix64(9).permutation(50))


class TestSyntheticStack:
    def test_same_seed_is_bitwise_identical(self):
        a = generate_synthetic_stack(1, 2, 4, 8, 4)
        b = generate_synthetic_stack(1, 2, 4, 8, 4)
        for wa, wb in zip(a.matrices(), b.matrices()):
            assert wa.tobytes() == wb.tobytes()

    def test_different_seed_differs(self):
        a = generate_synthetic_stack(1, 2, 4, 8, 4)
        b = generate_synthetic_stack(2, 2, 4, 8, 4)
        assert max(np.max(np.abs(x - y)) for x, y in zip(a.matrices(), b.matrices())) > 0

    def test_zero_dimension_rejected(self):
        with pytest.raises(ValidationError):
            generate_synthetic_stack(0, 1, 4, 0, 4)

    def test_trained_task_adds_shared_component(self):
        plain = generate_synthetic_stack(3, 1, 3, 8, 8)
        task = generate_synthetic_stack(3, 1, 3, 8, 8, dist="trained-task")
        shift = [t - p for t, p in zip(task.matrices(), plain.matrices())]
        assert np.allclose(shift[0], shift[1]) and np.allclose(shift[1], shift[2])
        assert np.max(np.abs(shift[0])) > 0

    def test_container_round_trip(self, tmp_path):
        stack = generate_synthetic_stack(4, 2, 3, 6, 4)
        write_container(tmp_path / "s.frodtnsr", stack.to_container())
        back = WeightStack.from_container(read_container(tmp_path / "s.frodtnsr"))
        assert back.labels == ["q", "k"]
        assert all(np.array_equal(x, y) for x, y in zip(stack.matrices(), back.matrices()))
