import numpy as np
import pytest

from pardefl import DataFormatError, load_csv_matrix, load_matrix, load_pdm1, save_pdm1
from pardefl.io import PDM1_MAGIC


def test_pdm1_round_trip(tmp_path, rng):
    a = rng.standard_normal((7, 3))
    path = tmp_path / "m.pdm1"
    save_pdm1(path, a)
    assert np.array_equal(load_pdm1(path), a)


def test_pdm1_layout(tmp_path):
    path = tmp_path / "m.pdm1"
    save_pdm1(path, np.array([[1.0, 2.0]]))
    raw = path.read_bytes()
    assert raw[:4] == PDM1_MAGIC
    assert raw[4:12] == (1).to_bytes(8, "little")
    assert raw[12:20] == (2).to_bytes(8, "little")
    assert np.frombuffer(raw, dtype="<f8", offset=20).tolist() == [1.0, 2.0]


def test_pdm1_bad_magic(tmp_path):
    path = tmp_path / "m.pdm1"
    path.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(DataFormatError):
        load_pdm1(path)


def test_pdm1_truncated(tmp_path):
    path = tmp_path / "m.pdm1"
    save_pdm1(path, np.ones((2, 2)))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(DataFormatError):
        load_pdm1(path)


def test_csv_round_trip(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1.5,2\n3,-4.25\n")
    assert np.array_equal(load_csv_matrix(path), [[1.5, 2.0], [3.0, -4.25]])


def test_csv_single_row(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2,3\n")
    assert load_csv_matrix(path).shape == (1, 3)


def test_csv_malformed(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,two\n")
    with pytest.raises(DataFormatError):
        load_csv_matrix(path)


def test_load_matrix_dispatch(tmp_path, rng):
    a = rng.standard_normal((2, 5))
    pdm = tmp_path / "a.pdm1"
    save_pdm1(pdm, a)
    csv = tmp_path / "a.csv"
    csv.write_text("\n".join(",".join(repr(float(x)) for x in row) for row in a) + "\n")
    assert np.array_equal(load_matrix(pdm), a)
    assert np.allclose(load_matrix(csv), a, atol=0)
