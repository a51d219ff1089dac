"""Binary container format, model checkpoints, and digest helpers."""

import numpy as np
import pytest

from ankge import (
    CheckpointError,
    DigestMismatchError,
    ModelFamily,
    load_model,
    read_container,
    save_model,
    sha256_file,
    write_container,
)
from ankge.checkpoint import MAGIC, require_digest, sha256_bytes

ALL_FAMILIES = list(ModelFamily)


class TestContainer:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "art.bin"
        meta = {"kind": "test", "note": "hello", "value": 3}
        arrays = {
            "a": np.arange(6, dtype=np.float64).reshape(2, 3),
            "ids": np.array([5, 1, 9], dtype=np.int64),
        }
        digest = write_container(path, meta, arrays)
        got_meta, got_arrays = read_container(path)
        assert got_meta == meta
        np.testing.assert_array_equal(got_arrays["a"], arrays["a"])
        np.testing.assert_array_equal(got_arrays["ids"], arrays["ids"])
        assert got_arrays["ids"].dtype == np.int64
        assert digest == sha256_file(path)

    def test_deterministic_bytes(self, tmp_path):
        meta = {"z": 1, "a": 2}
        arrays = {"x": np.ones((3, 2)), "b": np.zeros(4)}
        d1 = write_container(tmp_path / "one.bin", meta, arrays)
        d2 = write_container(tmp_path / "two.bin", dict(reversed(meta.items())), arrays)
        assert d1 == d2
        assert (tmp_path / "one.bin").read_bytes() == (tmp_path / "two.bin").read_bytes()

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="not found"):
            read_container(tmp_path / "ghost.bin")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOT-A-CONTAINER\n" + b"\x00" * 64)
        with pytest.raises(CheckpointError, match="magic"):
            read_container(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.bin"
        write_container(path, {"kind": "t"}, {"x": np.ones(16)})
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(CheckpointError, match="truncated"):
            read_container(path)

    def test_truncated_manifest(self, tmp_path):
        path = tmp_path / "trunc2.bin"
        write_container(path, {"kind": "t"}, {"x": np.ones(2)})
        path.write_bytes(path.read_bytes()[: len(MAGIC) + 4])
        with pytest.raises(CheckpointError):
            read_container(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "trail.bin"
        write_container(path, {"kind": "t"}, {"x": np.ones(2)})
        path.write_bytes(path.read_bytes() + b"extra")
        with pytest.raises(CheckpointError, match="trailing"):
            read_container(path)

    def test_corrupt_manifest_length(self, tmp_path):
        path = tmp_path / "len.bin"
        path.write_bytes(MAGIC + b"abc\n")
        with pytest.raises(CheckpointError, match="manifest length"):
            read_container(path)

    def test_unsupported_dtype_rejected_on_write(self, tmp_path):
        with pytest.raises(CheckpointError, match="dtype"):
            write_container(tmp_path / "f32.bin", {}, {"x": np.ones(2, dtype=np.float32)})

    def test_scalar_shape_array(self, tmp_path):
        path = tmp_path / "scalar.bin"
        write_container(path, {}, {"s": np.array(2.5)})
        _, arrays = read_container(path)
        assert arrays["s"].shape == ()
        assert float(arrays["s"]) == 2.5

    def test_non_contiguous_input(self, tmp_path):
        path = tmp_path / "strided.bin"
        base = np.arange(24, dtype=np.float64).reshape(4, 6)
        view = base[:, ::2]
        write_container(path, {}, {"v": view})
        _, arrays = read_container(path)
        np.testing.assert_array_equal(arrays["v"], view)


class TestModelCheckpoint:
    @pytest.mark.parametrize("family", ALL_FAMILIES, ids=lambda f: f.value)
    def test_round_trip_bitwise(self, tmp_path, family, make_model):
        model = make_model(family, num_entities=11, num_relations=6, dim=5, seed=13)
        path = tmp_path / "model.ckpt"
        save_model(path, model, meta={"seed": 13})
        loaded, meta = load_model(path)
        np.testing.assert_array_equal(loaded.entity_emb, model.entity_emb)
        np.testing.assert_array_equal(loaded.relation_emb, model.relation_emb)
        np.testing.assert_array_equal(loaded.mix, model.mix)
        assert loaded.digest() == model.digest()
        assert loaded.family.name == model.family.name
        assert loaded.dim == model.dim
        assert meta["seed"] == 13
        assert meta["kind"] == "model"
        assert meta["family"] == family.value

    @pytest.mark.parametrize("family", ALL_FAMILIES, ids=lambda f: f.value)
    def test_scores_survive_round_trip(self, tmp_path, family, make_model):
        model = make_model(family, num_entities=15, num_relations=4, dim=4, seed=3)
        path = tmp_path / "m.ckpt"
        save_model(path, model)
        loaded, _ = load_model(path)
        rng = np.random.default_rng(0)
        triples = np.stack(
            [
                rng.integers(0, 15, size=100),
                rng.integers(0, 4, size=100),
                rng.integers(0, 15, size=100),
            ],
            axis=1,
        )
        np.testing.assert_array_equal(
            loaded.score_triple_ids(triples), model.score_triple_ids(triples)
        )

    def test_reserved_meta_keys_rejected(self, tmp_path, make_model):
        model = make_model("transe")
        with pytest.raises(CheckpointError, match="reserved"):
            save_model(tmp_path / "m.ckpt", model, meta={"family": "x"})

    def test_kind_mismatch(self, tmp_path):
        path = tmp_path / "notamodel.bin"
        write_container(path, {"kind": "cache"}, {"x": np.ones(2)})
        with pytest.raises(CheckpointError, match="expected a model"):
            load_model(path)

    def test_inconsistent_payload(self, tmp_path, make_model):
        model = make_model("rotate", dim=4)
        path = tmp_path / "m.ckpt"
        save_model(path, model)
        meta, arrays = read_container(path)
        meta["dim"] = 3  # no longer matches the stored table widths
        write_container(path, meta, arrays)
        with pytest.raises(CheckpointError, match="inconsistent"):
            load_model(path)

    def test_no_partial_file_on_failure(self, tmp_path, make_model):
        model = make_model("transe")
        target = tmp_path / "sub" / "m.ckpt"
        save_model(target, model)
        assert target.exists()
        assert not target.with_name(target.name + ".tmp").exists()


class TestDigestHelpers:
    def test_sha256_bytes_reference(self):
        # sha256 of the empty string is a published constant
        assert (
            sha256_bytes(b"")
            == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        )

    def test_sha256_file_matches_bytes(self, tmp_path):
        path = tmp_path / "blob"
        path.write_bytes(b"some payload")
        assert sha256_file(path) == sha256_bytes(b"some payload")

    def test_require_digest(self, tmp_path):
        path = tmp_path / "blob"
        path.write_bytes(b"abc")
        require_digest(path, sha256_bytes(b"abc"), "test blob")
        with pytest.raises(DigestMismatchError, match="test blob"):
            require_digest(path, sha256_bytes(b"xyz"), "test blob")
