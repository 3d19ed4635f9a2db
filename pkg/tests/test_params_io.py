import numpy as np
import pytest

from quadgen.params_io import MAGIC, load_arrays, save_arrays


def test_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    arrays = {
        "w1": rng.normal(size=(4, 7)),
        "b": rng.normal(size=5),
        "scalarish": np.array(2.5),
        "deep": rng.normal(size=(2, 3, 4)),
    }
    path = tmp_path / "params.bin"
    save_arrays(arrays, path)
    loaded = load_arrays(path)
    assert list(loaded) == list(arrays)
    for name, arr in arrays.items():
        assert loaded[name].shape == arr.shape
        assert loaded[name].dtype == np.float64
        np.testing.assert_array_equal(loaded[name], arr)


def test_non_float_input_is_converted(tmp_path):
    path = tmp_path / "params.bin"
    save_arrays({"ints": np.arange(6).reshape(2, 3)}, path)
    out = load_arrays(path)["ints"]
    assert out.dtype == np.float64
    np.testing.assert_array_equal(out, np.arange(6).reshape(2, 3))


def test_bad_magic(tmp_path):
    path = tmp_path / "params.bin"
    path.write_bytes(b"NOTAPARM" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        load_arrays(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "params.bin"
    save_arrays({"w": np.ones((3, 3))}, path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-9])
    with pytest.raises(ValueError, match="truncated"):
        load_arrays(path)


def test_trailing_bytes(tmp_path):
    path = tmp_path / "params.bin"
    save_arrays({"w": np.ones(2)}, path)
    path.write_bytes(path.read_bytes() + b"junk")
    with pytest.raises(ValueError, match="trailing"):
        load_arrays(path)


def test_save_is_deterministic(tmp_path):
    arrays = {"a": np.linspace(0, 1, 10), "b": np.zeros((2, 2))}
    p1, p2 = tmp_path / "one.bin", tmp_path / "two.bin"
    save_arrays(arrays, p1)
    save_arrays(arrays, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_bytes().startswith(MAGIC)
