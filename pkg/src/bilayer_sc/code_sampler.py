"""Finite-length realisations of the coupled ensembles.

Variables at position ``t = 1..L`` send each of their ``l`` edges to a check
position drawn uniformly from ``[t, t+w-1]``; there are ``M l / r`` checks at
each of the ``L + w - 1`` check positions. Inside a position the incoming
edges are shuffled and dealt round-robin, so check degrees are as even as the
edge count allows. Rows left empty at the chain ends are kept (they keep the
two syndrome matrices row-aligned) and are ignored by the decoder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import BilayerEnsemble


class SparseBinaryMatrix:
    """Row-compressed GF(2) matrix (``indptr``/``indices``, no values)."""

    def __init__(self, indptr, indices, rows, cols):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.rows = int(rows)
        self.cols = int(cols)
        if self.indptr.shape != (self.rows + 1,):
            raise ValueError("indptr must have rows + 1 entries")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.cols):
            raise ValueError("column index out of range")

    @classmethod
    def from_rows(cls, rows, cols):
        """Build from per-row column lists; repeated indices cancel in pairs."""
        indptr = [0]
        idx = []
        for r in rows:
            vals, counts = np.unique(np.asarray(r, dtype=np.int64), return_counts=True)
            keep = vals[counts % 2 == 1]
            idx.append(keep)
            indptr.append(indptr[-1] + keep.size)
        indices = np.concatenate(idx) if idx else np.zeros(0, dtype=np.int64)
        return cls(indptr, indices, len(rows), cols)

    @classmethod
    def from_dense(cls, A):
        A = np.asarray(A) % 2
        return cls.from_rows([np.nonzero(row)[0] for row in A], A.shape[1])

    def row(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def row_degrees(self):
        return np.diff(self.indptr)

    def col_degrees(self):
        return np.bincount(self.indices, minlength=self.cols)

    @property
    def nnz(self):
        return int(self.indices.size)

    def to_dense(self):
        A = np.zeros((self.rows, self.cols), dtype=np.uint8)
        r = np.repeat(np.arange(self.rows), self.row_degrees())
        A[r, self.indices] = 1
        return A

    def matvec(self, x):
        """``H x`` over GF(2)."""
        x = np.asarray(x, dtype=np.uint8)
        if x.shape != (self.cols,):
            raise ValueError(f"vector length {x.shape} != {self.cols}")
        vals = x[self.indices].astype(np.int64)
        # reduceat misbehaves on empty rows, so use a cumulative sum
        cs = np.concatenate([[0], np.cumsum(vals)])
        return ((cs[self.indptr[1:]] - cs[self.indptr[:-1]]) % 2).astype(np.uint8)

    def transpose_index(self):
        """Column-compressed view ``(colptr, rowidx)``."""
        r = np.repeat(np.arange(self.rows, dtype=np.int64), self.row_degrees())
        order = np.argsort(self.indices, kind="stable")
        colptr = np.concatenate([[0], np.cumsum(self.col_degrees())])
        return colptr.astype(np.int64), r[order]

    def __eq__(self, other):
        return (
            isinstance(other, SparseBinaryMatrix)
            and self.rows == other.rows and self.cols == other.cols
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __repr__(self):
        return f"SparseBinaryMatrix({self.rows}x{self.cols}, nnz={self.nnz})"

    def dump(self, fh):
        """Header ``rows cols`` then one line of column indices per row."""
        fh.write(f"{self.rows} {self.cols}\n")
        for i in range(self.rows):
            fh.write(" ".join(map(str, self.row(i).tolist())) + "\n")

    @classmethod
    def load(cls, fh):
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("matrix header must be 'rows cols'")
        rows, cols = int(header[0]), int(header[1])
        lines = [fh.readline() for _ in range(rows)]
        return cls.from_rows([[int(v) for v in ln.split()] for ln in lines], cols)


def vstack(mats):
    cols = mats[0].cols
    if any(m.cols != cols for m in mats):
        raise ValueError("column counts differ")
    indptr = [np.zeros(1, dtype=np.int64)]
    off = 0
    for m in mats:
        indptr.append(m.indptr[1:] + off)
        off += m.nnz
    return SparseBinaryMatrix(np.concatenate(indptr), np.concatenate([m.indices for m in mats]),
                              sum(m.rows for m in mats), cols)


def hstack(left, right):
    """``[left right]`` with row-wise concatenation of supports."""
    if left.rows != right.rows:
        raise ValueError("row counts differ")
    r = np.concatenate([np.repeat(np.arange(left.rows), left.row_degrees()),
                        np.repeat(np.arange(right.rows), right.row_degrees())])
    c = np.concatenate([left.indices, right.indices + left.cols])
    order = np.argsort(r, kind="stable")
    indptr = np.concatenate([[0], np.cumsum(left.row_degrees() + right.row_degrees())])
    return SparseBinaryMatrix(indptr, c[order], left.rows, left.cols + right.cols)


def _suggest_M(M, l, r):
    step = r // math.gcd(l, r)
    return -(-M // step) * step


def checks_per_position(M, l, r):
    if (M * l) % r:
        raise ValueError(
            f"M*l/r = {M}*{l}/{r} is not an integer; try M={_suggest_M(M, l, r)}"
        )
    return M * l // r


def _fix_duplicates(slots, rng, max_rounds=1000):
    """Swap sockets inside one position until no check sees a variable twice.

    ``slots`` has one row per check, -1 for unused sockets.
    """
    for _ in range(max_rounds):
        s = np.sort(slots, axis=1)
        dup = (s[:, 1:] == s[:, :-1]) & (s[:, 1:] >= 0)
        bad = np.nonzero(dup.any(axis=1))[0]
        if bad.size == 0:
            return slots
        n, width = slots.shape
        for row in bad:
            vals = slots[row]
            u, c = np.unique(vals[vals >= 0], return_counts=True)
            for v in u[c > 1]:
                k = int(np.nonzero(vals == v)[0][1])
                other = int(rng.integers(n))
                j = int(rng.integers(width))
                w_ = slots[other, j]
                if other == row or w_ < 0 or w_ in slots[row] or v in slots[other]:
                    continue
                slots[row, k], slots[other, j] = w_, v
    raise RuntimeError("could not remove duplicate edges; increase M")


def sample_sc_matrix(l, r, L, w, M, seed):
    """Parity-check matrix of one (l, r, L, w, M) coupled code.

    Columns ``(t-1)*M .. t*M-1`` hold the variables of position ``t``; rows are
    grouped by check position ``1..L+w-1``, ``M l / r`` per position.
    """
    if not (1 <= l < r) or L < 1 or w < 1 or M < 1:
        raise ValueError("invalid ensemble parameters")
    nc = checks_per_position(M, l, r)
    rng = np.random.default_rng(seed)
    n = M * L
    var = np.repeat(np.arange(n, dtype=np.int64), l)
    pos = var // M + rng.integers(0, w, size=var.size)  # 0-based check position
    npos = L + w - 1
    order = np.argsort(pos, kind="stable")
    var, pos = var[order], pos[order]
    bounds = np.searchsorted(pos, np.arange(npos + 1))
    width = -(-int(np.diff(bounds).max(initial=0)) // nc) if nc else 0
    rows, counts = [], []
    for c in range(npos):
        e = var[bounds[c]:bounds[c + 1]]
        e = e[rng.permutation(e.size)]
        slots = np.full(nc * width, -1, dtype=np.int64)
        slots[: e.size] = e
        # round-robin deal: socket k goes to check k mod nc
        slots = slots.reshape(width, nc).T.copy()
        if l > 1 and width > 1:
            slots = _fix_duplicates(slots, rng)
        slots.sort(axis=1)
        counts.append((slots >= 0).sum(axis=1))
        rows.append(slots[slots >= 0])
    indptr = np.concatenate([[0], np.cumsum(np.concatenate(counts))])
    indices = np.concatenate(rows)
    return SparseBinaryMatrix(indptr, indices, npos * nc, n)


def position_of(M, L):
    """Coupling position (1-based) of every column of an ``M L`` code."""
    return np.repeat(np.arange(1, L + 1), M)


def balanced_counts(L, k, rng):
    """Per-position share of ``k`` items, differing by at most one."""
    base, extra = divmod(k, L)
    counts = np.full(L, base)
    counts[rng.choice(L, size=extra, replace=False)] += 1
    return counts


def balanced_subset(M, counts, rng):
    """``counts[t]`` random columns from position ``t+1``, ordered by position."""
    if counts.max(initial=0) > M:
        raise ValueError("more systematic bits per position than variables")
    picks = [t * M + rng.permutation(rng.choice(M, size=c, replace=False))
             for t, c in enumerate(counts)]
    return np.concatenate(picks).astype(np.int64)


@dataclass
class CodeInstance:
    """Sampled matrices of one bilayer code plus the systematic positions.

    ``S1[n]`` and ``S2[n]`` carry the ``n``-th source bit of each user, so a
    correlation check for index ``n`` ties those two columns. Both lie at the
    same coupling position, matching the position-wise correlation messages
    of density evolution.
    """

    ensemble: BilayerEnsemble
    H1: SparseBinaryMatrix
    H2: SparseBinaryMatrix
    Hs1: SparseBinaryMatrix
    Hs2: SparseBinaryMatrix
    S1: np.ndarray
    S2: np.ndarray
    seed: int

    @property
    def k(self):
        return int(self.S1.size)

    @property
    def n1(self):
        return self.H1.cols

    @property
    def n2(self):
        return self.H2.cols

    def positions(self, user):
        M = self.ensemble.M1 if user == 1 else self.ensemble.M2
        return position_of(M, self.ensemble.L)


def sample_instance(ensemble, seed, k=None):
    """Sample all four matrices and the systematic sets from one seed."""
    e = ensemble
    if e.M1 is None or e.M2 is None:
        raise ValueError("ensemble needs M1 and M2 for sampling")
    if not e.is_aligned():
        raise ValueError("syndrome layers are not row-aligned")
    ss = np.random.SeedSequence(seed).spawn(7)
    H1 = sample_sc_matrix(e.l1, e.r1, e.L, e.w, e.M1, ss[0])
    H2 = sample_sc_matrix(e.l2, e.r2, e.L, e.w, e.M2, ss[1])
    if e.ls1:
        Hs1 = sample_sc_matrix(e.ls1, e.rs1, e.L, e.w, e.M1, ss[2])
    else:
        Hs1 = None
    if e.ls2:
        Hs2 = sample_sc_matrix(e.ls2, e.rs2, e.L, e.w, e.M2, ss[3])
    else:
        Hs2 = None
    nrow = Hs1.rows if Hs1 is not None else (Hs2.rows if Hs2 is not None else 0)
    if Hs1 is None:
        Hs1 = SparseBinaryMatrix(np.zeros(nrow + 1), [], nrow, H1.cols)
    if Hs2 is None:
        Hs2 = SparseBinaryMatrix(np.zeros(nrow + 1), [], nrow, H2.cols)
    if k is None:
        k = min(H1.cols - _nonempty(H1), H2.cols - _nonempty(H2))
    if not 0 <= k <= min(H1.cols, H2.cols):
        raise ValueError("k out of range")
    # the n-th bits of both users sit at the same coupling position
    counts = balanced_counts(e.L, k, np.random.default_rng(ss[4]))
    S1 = balanced_subset(e.M1, counts, np.random.default_rng(ss[5]))
    S2 = balanced_subset(e.M2, counts, np.random.default_rng(ss[6]))
    return CodeInstance(e, H1, H2, Hs1, Hs2, S1, S2, int(seed))


def _nonempty(H):
    return int(np.count_nonzero(H.row_degrees()))


def empirical_rate(H):
    """``1 - (non-empty rows) / cols`` (rank is not computed)."""
    return 1 - _nonempty(H) / H.cols


@dataclass(frozen=True)
class RhsLayout:
    """Row blocks of the overall matrix; only the syndrome block has a nonzero rhs."""

    first1: slice
    first2: slice
    syndrome: slice
    correlation: slice

    def rhs(self, s, rows):
        out = np.zeros(rows, dtype=np.uint8)
        out[self.syndrome] = s
        return out


def correlation_rows(inst, z=None):
    """Weight-2 rows tying ``S1[n]`` and ``S2[n]`` for every ``n`` with ``z[n] = 1``.

    ``z=None`` yields all ``k`` rows (the decoder masks inactive ones).
    """
    idx = np.arange(inst.k) if z is None else np.nonzero(np.asarray(z))[0]
    pairs = np.column_stack([inst.S1[idx], inst.S2[idx] + inst.n1])
    pairs.sort(axis=1)
    indptr = np.arange(0, 2 * idx.size + 1, 2)
    return SparseBinaryMatrix(indptr, pairs.ravel(), idx.size, inst.n1 + inst.n2)


def assemble_overall(inst, z=None):
    """Stack ``[H1 0; 0 H2; Hs1 Hs2; Hcorr]`` and report the row layout."""
    if z is not None and len(z) != inst.k:
        raise ValueError(f"correlation vector has length {len(z)}, expected {inst.k}")
    n1, n2 = inst.n1, inst.n2
    if inst.Hs1.rows != inst.Hs2.rows:
        raise ValueError("syndrome matrices have different row counts")
    z1 = SparseBinaryMatrix(np.zeros(inst.H1.rows + 1), [], inst.H1.rows, n2)
    z2 = SparseBinaryMatrix(np.zeros(inst.H2.rows + 1), [], inst.H2.rows, n1)
    top = hstack(inst.H1, z1)
    mid = hstack(z2, inst.H2)
    syn = hstack(inst.Hs1, inst.Hs2)
    cor = correlation_rows(inst, z)
    H = vstack([top, mid, syn, cor])
    a = inst.H1.rows
    b = a + inst.H2.rows
    c = b + syn.rows
    layout = RhsLayout(slice(0, a), slice(a, b), slice(b, c), slice(c, c + cor.rows))
    return H, layout


def syndrome_bits(Hs1, Hs2, x1, x2):
    """Relay syndrome ``Hs1 x1 + Hs2 x2`` over GF(2)."""
    if Hs1.rows != Hs2.rows:
        raise ValueError("syndrome matrices have different row counts")
    return Hs1.matvec(x1) ^ Hs2.matvec(x2)
