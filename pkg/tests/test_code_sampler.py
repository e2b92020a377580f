import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilayer_sc.code_sampler import (
    SparseBinaryMatrix,
    assemble_overall,
    correlation_rows,
    empirical_rate,
    hstack,
    sample_instance,
    sample_sc_matrix,
    syndrome_bits,
    vstack,
)
from bilayer_sc.ensemble import CODE_B, BilayerEnsemble, design_rate

TINY = BilayerEnsemble(3, 6, 3, 6, 1, 6, 1, 6, L=6, w=2, M1=12, M2=12)


def test_single_position_exact():
    H = sample_sc_matrix(2, 4, 1, 1, 4, seed=0)
    assert (H.rows, H.cols) == (2, 4)
    assert (H.row_degrees() == 4).all() and (H.col_degrees() == 2).all()


def test_degrees_and_concentration():
    l, r, L, w, M = 3, 6, 100, 3, 600
    H = sample_sc_matrix(l, r, L, w, M, seed=4)
    assert (H.col_degrees() == l).all()
    nc = M * l // r
    deg = H.row_degrees().reshape(L + w - 1, nc)
    interior = deg[w:L - 1].ravel()
    assert abs(interior.mean() - r) < 0.05
    assert np.mean(interior == r) > 0.8
    assert interior.max() - interior.min() <= 3


def test_determinism():
    a = sample_sc_matrix(3, 6, 20, 3, 60, seed=9)
    b = sample_sc_matrix(3, 6, 20, 3, 60, seed=9)
    c = sample_sc_matrix(3, 6, 20, 3, 60, seed=10)
    assert a == b and a != c


def test_locality_and_no_duplicates():
    l, r, L, w, M = 4, 8, 15, 4, 16
    H = sample_sc_matrix(l, r, L, w, M, seed=2)
    nc = M * l // r
    for i in range(H.rows):
        cols = H.row(i)
        assert np.unique(cols).size == cols.size
        cpos = i // nc
        vpos = cols // M
        assert ((cpos - vpos >= 0) & (cpos - vpos <= w - 1)).all()
    assert (H.col_degrees() == l).all()


def test_divisibility_error_suggests_M():
    with pytest.raises(ValueError, match="try M=10"):
        sample_sc_matrix(6, 10, 5, 2, 7, seed=0)


def test_empirical_rate_close_to_design_rate():
    l, r, L, w, M = 3, 6, 100, 3, 600
    H = sample_sc_matrix(l, r, L, w, M, seed=4)
    emp = empirical_rate(H)
    assert abs(emp - float(design_rate(l, r, L, w, include_last=True))) < 5 / M
    assert abs(emp - float(design_rate(l, r, L, w))) < 2 * l / (r * L) + 5 / M


def test_from_rows_cancels_pairs_and_dense_roundtrip():
    H = SparseBinaryMatrix.from_rows([[0, 2, 2, 3], [1], []], 4)
    assert H.to_dense().tolist() == [[1, 0, 0, 1], [0, 1, 0, 0], [0, 0, 0, 0]]
    assert SparseBinaryMatrix.from_dense(H.to_dense()) == H
    with pytest.raises(ValueError):
        SparseBinaryMatrix([0, 1], [5], 1, 4)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**31))
def test_matvec_and_stacking_match_dense(rows, cols, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 2, (rows, cols))
    B = rng.integers(0, 2, (rows, cols + 1))
    x = rng.integers(0, 2, cols).astype(np.uint8)
    HA, HB = SparseBinaryMatrix.from_dense(A), SparseBinaryMatrix.from_dense(B)
    assert np.array_equal(HA.matvec(x), A @ x % 2)
    assert np.array_equal(hstack(HA, HB).to_dense(), np.hstack([A, B]))
    assert np.array_equal(vstack([HA, HA]).to_dense(), np.vstack([A, A]))
    colptr, rowidx = HA.transpose_index()
    for c in range(cols):
        assert sorted(rowidx[colptr[c]:colptr[c + 1]]) == list(np.nonzero(A[:, c])[0])


def test_dump_format_and_load():
    H = sample_sc_matrix(2, 4, 3, 2, 4, seed=1)
    buf = io.StringIO()
    H.dump(buf)
    text = buf.getvalue().splitlines()
    assert text[0] == f"{H.rows} {H.cols}"
    assert len(text) == H.rows + 1
    assert [int(v) for v in text[1].split()] == H.row(0).tolist()
    assert SparseBinaryMatrix.load(io.StringIO(buf.getvalue())) == H
    with pytest.raises(ValueError):
        SparseBinaryMatrix.load(io.StringIO("3\n"))


def test_instance_structure():
    inst = sample_instance(TINY, seed=3)
    e = TINY
    assert inst.H1.cols == e.M1 * e.L and inst.H2.cols == e.M2 * e.L
    assert inst.Hs1.rows == inst.Hs2.rows
    assert inst.S1.size == inst.S2.size == inst.k
    assert np.unique(inst.S1).size == inst.k
    # paired systematic bits share their coupling position
    assert np.array_equal(inst.S1 // e.M1, inst.S2 // e.M2)
    counts = np.bincount(inst.S1 // e.M1, minlength=e.L)
    assert counts.max() - counts.min() <= 1
    assert inst.k == inst.H1.cols - np.count_nonzero(inst.H1.row_degrees())


def test_instance_code_b_alignment():
    inst = sample_instance(CODE_B.with_chain(L=40), seed=1)
    assert inst.Hs1.rows == inst.Hs2.rows == 30 * (40 + 10 - 1)
    assert (inst.Hs1.col_degrees() == 4).all() and (inst.Hs2.col_degrees() == 3).all()


def test_instance_needs_sizes():
    with pytest.raises(ValueError):
        sample_instance(BilayerEnsemble(3, 6, 3, 6, 1, 6, 1, 6, L=4, w=2), seed=0)


def test_assemble_correlation_rows():
    inst = sample_instance(TINY, seed=3)
    H0, lay = assemble_overall(inst, np.zeros(inst.k, dtype=np.uint8))
    assert lay.correlation.stop - lay.correlation.start == 0
    H1, lay = assemble_overall(inst, np.ones(inst.k, dtype=np.uint8))
    cor = H1.row_degrees()[lay.correlation]
    assert cor.size == inst.k and (cor == 2).all()
    rng = np.random.default_rng(0)
    for _ in range(5):
        z = (rng.random(inst.k) < 0.3).astype(np.uint8)
        H, lay = assemble_overall(inst, z)
        assert lay.correlation.stop - lay.correlation.start == z.sum()
        assert (H.row_degrees()[lay.correlation] == 2).all()
    with pytest.raises(ValueError):
        assemble_overall(inst, np.zeros(inst.k + 1))


def test_assemble_block_layout():
    inst = sample_instance(TINY, seed=5)
    H, lay = assemble_overall(inst, np.ones(inst.k, dtype=np.uint8))
    D = H.to_dense()
    n1 = inst.n1
    assert np.array_equal(D[lay.first1, :n1], inst.H1.to_dense())
    assert not D[lay.first1, n1:].any()
    assert np.array_equal(D[lay.first2, n1:], inst.H2.to_dense())
    assert np.array_equal(D[lay.syndrome, :n1], inst.Hs1.to_dense())
    assert np.array_equal(D[lay.syndrome, n1:], inst.Hs2.to_dense())
    assert np.array_equal(correlation_rows(inst).to_dense(), D[lay.correlation])
    s = np.arange(lay.syndrome.stop - lay.syndrome.start) % 2
    rhs = lay.rhs(s, H.rows)
    assert np.array_equal(rhs[lay.syndrome], s) and rhs.sum() == s.sum()


def test_syndrome_bits():
    inst = sample_instance(TINY, seed=7)
    rng = np.random.default_rng(1)
    z1, z2 = np.zeros(inst.n1, np.uint8), np.zeros(inst.n2, np.uint8)
    assert not syndrome_bits(inst.Hs1, inst.Hs2, z1, z2).any()
    x1 = rng.integers(0, 2, inst.n1).astype(np.uint8)
    x2 = rng.integers(0, 2, inst.n2).astype(np.uint8)
    assert np.array_equal(syndrome_bits(inst.Hs1, inst.Hs2, x1, z2), inst.Hs1.matvec(x1))
    D1, D2 = inst.Hs1.to_dense(), inst.Hs2.to_dense()
    brute = np.array([(D1[i] @ x1 + D2[i] @ x2) % 2 for i in range(D1.shape[0])])
    assert np.array_equal(syndrome_bits(inst.Hs1, inst.Hs2, x1, x2), brute)
    # linearity of the overall map
    y1 = rng.integers(0, 2, inst.n1).astype(np.uint8)
    y2 = rng.integers(0, 2, inst.n2).astype(np.uint8)
    lhs = syndrome_bits(inst.Hs1, inst.Hs2, x1 ^ y1, x2 ^ y2)
    assert np.array_equal(lhs, syndrome_bits(inst.Hs1, inst.Hs2, x1, x2)
                          ^ syndrome_bits(inst.Hs1, inst.Hs2, y1, y2))
    with pytest.raises(ValueError):
        syndrome_bits(inst.Hs1, inst.Hs2, x1[:-1], x2)
