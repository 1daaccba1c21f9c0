import numpy as np
import pytest

from gamebake.core import load_checkpoint, save_checkpoint


def test_round_trip_preserves_float32_values(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {
        "grid.tables": rng.normal(size=(2, 16, 4)),
        "mlp.w0": rng.normal(size=(8, 3)),
        "mlp.b0": np.zeros(3),
    }
    path = tmp_path / "ckpt.v2gf"
    save_checkpoint(path, tensors)
    back = load_checkpoint(path)
    assert set(back) == set(tensors)
    for name, arr in tensors.items():
        assert back[name].shape == arr.shape
        np.testing.assert_array_equal(back[name], arr.astype(np.float32).astype(np.float64))


def test_magic_and_layout(tmp_path):
    path = tmp_path / "ckpt.v2gf"
    save_checkpoint(path, {"t": np.ones((2, 2))})
    blob = path.read_bytes()
    assert blob[:4] == b"V2GF"
    assert int.from_bytes(blob[4:8], "little") == 1
    assert int.from_bytes(blob[8:12], "little") == 1  # name length
    assert blob[12:13] == b"t"


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_save_is_deterministic(tmp_path):
    tensors = {"a": np.arange(12.0).reshape(3, 4), "b": np.ones(5)}
    p1, p2 = tmp_path / "a.v2gf", tmp_path / "b.v2gf"
    save_checkpoint(p1, tensors)
    save_checkpoint(p2, tensors)
    assert p1.read_bytes() == p2.read_bytes()
