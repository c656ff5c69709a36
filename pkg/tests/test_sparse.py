import numpy as np
import scipy.sparse as sp

from qdiff.sparse import SparseMatrix, load_vector, save_vector


def test_canonical_form_drops_zeros_and_sums_duplicates():
    M = SparseMatrix.from_coo([1, 0, 0, 1], [1, 0, 0, 0], [0.0, 1.0, 2.0, 5.0], (2, 2))
    assert M.entries() == [(0, 0, 3.0), (1, 0, 5.0)]


def test_sparsity_and_symmetry_predicates():
    S = SparseMatrix(np.array([[1.0, 2.0], [2.0, 0.0]]))
    A = SparseMatrix(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert S.symmetric() and not S.antisymmetric()
    assert A.antisymmetric() and not A.symmetric()
    assert S.sparsity() == 2


def test_text_round_trip(tmp_path, rng):
    M = SparseMatrix(sp.random(7, 7, density=0.3, random_state=1))
    p = tmp_path / "m.txt"
    M.save_text(p, header="example")
    assert p.read_text().startswith("% example\n% shape 7 7")
    assert SparseMatrix.load_text(p) == M


def test_vector_round_trip(tmp_path, rng):
    v = rng.standard_normal(11)
    save_vector(tmp_path / "v.txt", v)
    assert np.array_equal(load_vector(tmp_path / "v.txt"), v)


def test_matmul_and_transpose():
    M = SparseMatrix(np.array([[1.0, 2.0], [0.0, 3.0]]))
    assert np.allclose(M @ np.array([1.0, 1.0]), [3.0, 3.0])
    assert M.T.toarray().tolist() == [[1.0, 0.0], [2.0, 3.0]]
