"""Dense GF(2) helpers used as independent oracles in the tests."""
import numpy as np


def rref(A):
    """Reduced row echelon form over GF(2); returns (R, pivot columns)."""
    R = (np.asarray(A) % 2).astype(np.uint8).copy()
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hit = np.nonzero(R[r:, c])[0]
        if hit.size == 0:
            continue
        k = r + hit[0]
        R[[r, k]] = R[[k, r]]
        others = np.nonzero(R[:, c])[0]
        others = others[others != r]
        R[others] ^= R[r]
        pivots.append(c)
        r += 1
    return R[:r], pivots


def nullspace(A):
    """Basis of {x : A x = 0} over GF(2), one vector per row."""
    A = np.asarray(A) % 2
    n = A.shape[1]
    R, piv = rref(A)
    free = [c for c in range(n) if c not in set(piv)]
    basis = []
    for f in free:
        x = np.zeros(n, dtype=np.uint8)
        x[f] = 1
        for i, p in enumerate(piv):
            x[p] = R[i, f]
        basis.append(x)
    return np.array(basis, dtype=np.uint8).reshape(len(basis), n)


def random_solution(A, rng):
    B = nullspace(A)
    if B.shape[0] == 0:
        return np.zeros(A.shape[1], dtype=np.uint8)
    coef = rng.integers(0, 2, B.shape[0]).astype(np.uint8)
    return (coef @ B % 2).astype(np.uint8)


def dense_peel(A, erased, rhs, values):
    """Naive peeling on a dense matrix, sweeping all rows until nothing changes."""
    A = np.asarray(A) % 2
    erased = np.array(erased, dtype=bool)
    vals = np.array(values, dtype=np.uint8)
    vals[erased] = 0
    changed = True
    while changed:
        changed = False
        for r in range(A.shape[0]):
            cols = np.nonzero(A[r])[0]
            miss = cols[erased[cols]]
            if miss.size == 1:
                vals[miss[0]] = (rhs[r] + vals[cols].sum()) % 2
                erased[miss[0]] = False
                changed = True
    return vals, erased


def determined(A, erased):
    """Erased positions fixed uniquely by the linear system (ML on the BEC)."""
    A = np.asarray(A) % 2
    idx = np.nonzero(erased)[0]
    sub = A[:, idx]
    N = nullspace(sub)
    fixed = np.ones(idx.size, dtype=bool) if N.shape[0] == 0 else ~N.any(axis=0)
    out = np.zeros(A.shape[1], dtype=bool)
    out[idx[fixed]] = True
    return out
