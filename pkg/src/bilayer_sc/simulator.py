"""Monte-Carlo simulation of the three-phase relay protocol on the BEC.

Every trial transmits the all-zero codeword, which is enough on the BEC for
linear codes and a peeling decoder. Phase 1/2: both sources send their
non-punctured bits to relay and destination. The relay peels
``[H1 0; 0 H2; Hcorr]`` and, if it recovers everything, computes the syndrome
bits. Phase 3 delivers the syndrome intact. The destination peels the full
bilayer system and we count erasures left on the systematic positions.

A trial whose relay fails is counted as fully erased for both users.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .code_sampler import CodeInstance, assemble_overall, syndrome_bits
from .theory import ChannelSet

CSV_HEADER = ["eps_s1d", "eps_s2d", "eps_s1r", "eps_s2r", "p", "trials",
              "ber_u1", "ber_u2", "relay_fail"]


class InconsistencyError(RuntimeError):
    """A check has no erased participant but its known bits do not sum to the rhs."""


def sample_correlation_vector(k, p, seed):
    if not 0 <= p <= 1:
        raise ValueError("p must be a probability")
    rng = np.random.default_rng(seed)
    return (rng.random(k) < p).astype(np.uint8)


def erase(n, eps, seed):
    """Boolean erasure mask; thresholding one uniform per bit couples all eps."""
    if not 0 <= eps <= 1:
        raise ValueError("eps must be a probability")
    rng = np.random.default_rng(seed)
    return rng.random(n) < eps


@njit(cache=True, nogil=True)
def _peel(indptr, indices, colptr, rowidx, erased, values, rhs, active, order):
    nrows = indptr.size - 1
    cnt = np.zeros(nrows, dtype=np.int64)
    syn = np.zeros(nrows, dtype=np.uint8)
    for r in range(nrows):
        if not active[r]:
            continue
        s = rhs[r]
        c = 0
        for k in range(indptr[r], indptr[r + 1]):
            v = indices[k]
            if erased[v]:
                c += 1
            else:
                s ^= values[v]
        cnt[r] = c
        syn[r] = s
        if c == 0 and s != 0:
            return -1 - r
    stack = np.empty(nrows + 1, dtype=np.int64)
    top = 0
    for i in range(order.size):
        r = order[i]
        if active[r] and cnt[r] == 1:
            stack[top] = r
            top += 1
    solved = 0
    while top > 0:
        top -= 1
        r = stack[top]
        if cnt[r] != 1:
            continue
        v = -1
        for k in range(indptr[r], indptr[r + 1]):
            if erased[indices[k]]:
                v = indices[k]
                break
        val = syn[r]
        erased[v] = False
        values[v] = val
        solved += 1
        for k in range(colptr[v], colptr[v + 1]):
            r2 = rowidx[k]
            if not active[r2]:
                continue
            cnt[r2] -= 1
            syn[r2] ^= val
            if cnt[r2] == 1:
                if top >= stack.size:
                    return -2 - nrows
                stack[top] = r2
                top += 1
            elif cnt[r2] == 0 and syn[r2] != 0:
                return -1 - r2
    return solved


class Decoder:
    """Peeling decoder bound to one sparse matrix (column index built once)."""

    def __init__(self, H):
        self.H = H
        self.colptr, self.rowidx = H.transpose_index()

    def peel(self, erased, rhs=None, values=None, active=None, order=None):
        """Resolve single-erasure checks until none is left.

        Returns ``(values, residual_mask)``; ``values`` holds the recovered
        bits (zeros where still erased).
        """
        H = self.H
        erased = np.array(erased, dtype=np.bool_, copy=True)
        if erased.shape != (H.cols,):
            raise ValueError("erasure mask length differs from column count")
        rhs = np.zeros(H.rows, np.uint8) if rhs is None else np.asarray(rhs, np.uint8)
        if rhs.shape != (H.rows,):
            raise ValueError("rhs length differs from row count")
        values = np.zeros(H.cols, np.uint8) if values is None else np.array(values, np.uint8)
        values[erased] = 0
        active = np.ones(H.rows, np.bool_) if active is None else np.asarray(active, np.bool_)
        order = np.arange(H.rows, dtype=np.int64) if order is None else np.asarray(order, np.int64)
        code = _peel(H.indptr, H.indices, self.colptr, self.rowidx, erased, values, rhs,
                     active, order)
        if code < 0:
            raise InconsistencyError(f"check {-1 - code} is violated by known bits")
        return values, erased


def peel(H, erased, rhs=None, values=None, active=None, order=None):
    return Decoder(H).peel(erased, rhs, values, active, order)


def peel_reference(rows, erased, rhs, values=None):
    """Plain-Python peeling on row lists; slow, used to cross-check :func:`peel`."""
    erased = set(erased)
    vals = {} if values is None else dict(values)
    changed = True
    while changed:
        changed = False
        for r, cols in enumerate(rows):
            missing = [c for c in cols if c in erased]
            if len(missing) == 1:
                s = rhs[r]
                for c in cols:
                    if c not in erased:
                        s ^= vals.get(c, 0)
                vals[missing[0]] = s
                erased.discard(missing[0])
                changed = True
            elif not missing:
                s = rhs[r]
                for c in cols:
                    s ^= vals.get(c, 0)
                if s:
                    raise InconsistencyError(f"check {r} is violated by known bits")
    return vals, erased


@dataclass(frozen=True)
class TrialOutcome:
    relay_success: bool
    residual_erasures_u1: int
    residual_erasures_u2: int
    k: int


@dataclass(frozen=True)
class ChannelPoint:
    eps_s1d: float
    eps_s2d: float
    eps_s1r: float
    eps_s2r: float

    @classmethod
    def from_channels(cls, ch: ChannelSet):
        return cls(ch.eps_s1d, ch.eps_s2d, ch.eps_s1r, ch.eps_s2r)


class Simulator:
    """Holds one code instance and the decoders built from it.

    The overall matrix carries all ``k`` correlation rows; each trial switches
    on the ones with ``z_n = 1``. The relay uses the same matrix with the
    syndrome rows switched off.
    """

    def __init__(self, inst: CodeInstance):
        self.inst = inst
        self.H, self.layout = assemble_overall(inst)
        self.decoder = Decoder(self.H)
        n1, n2 = inst.n1, inst.n2
        self.n = n1 + n2
        self.punct = np.zeros(self.n, dtype=bool)
        self.punct[inst.S1] = True
        self.punct[inst.S2 + n1] = True
        self.sys1 = inst.S1
        self.sys2 = inst.S2 + n1
        self._base_active = np.ones(self.H.rows, dtype=bool)
        self._base_active[self.layout.correlation] = False

    def trial_streams(self, seed, trial):
        """Independent generators for (z, relay erasures, destination erasures)."""
        ss = np.random.SeedSequence([int(seed), int(trial)]).spawn(3)
        return [np.random.default_rng(s) for s in ss]

    def _active(self, z, relay):
        act = self._base_active.copy()
        act[self.layout.correlation] = z.astype(bool)
        if relay:
            act[self.layout.syndrome] = False
        return act

    def _erasures(self, u, e1, e2):
        n1 = self.inst.n1
        er = np.empty(self.n, dtype=bool)
        er[:n1] = u[:n1] < e1
        er[n1:] = u[n1:] < e2
        er |= self.punct
        return er

    def draw(self, seed, trial, p):
        gz, gr, gd = self.trial_streams(seed, trial)
        z = (gz.random(self.inst.k) < p).astype(np.uint8)
        return z, gr.random(self.n), gd.random(self.n)

    def relay_decode(self, z, u_relay, eps_s1r, eps_s2r):
        er = self._erasures(u_relay, eps_s1r, eps_s2r)
        _, res = self.decoder.peel(er, active=self._active(z, relay=True))
        return not res.any()

    def destination_decode(self, z, u_dest, eps_s1d, eps_s2d, s=None):
        er = self._erasures(u_dest, eps_s1d, eps_s2d)
        rhs = None
        if s is not None:
            rhs = self.layout.rhs(s, self.H.rows)
        _, res = self.decoder.peel(er, rhs=rhs, active=self._active(z, relay=False))
        return int(res[self.sys1].sum()), int(res[self.sys2].sum())

    def run_trial(self, point: ChannelPoint, p, seed, trial):
        z, ur, ud = self.draw(seed, trial, p)
        k = self.inst.k
        if not self.relay_decode(z, ur, point.eps_s1r, point.eps_s2r):
            return TrialOutcome(False, k, k, k)
        r1, r2 = self.destination_decode(z, ud, point.eps_s1d, point.eps_s2d)
        return TrialOutcome(True, r1, r2, k)

    def _sweep_trial(self, z, ur, ud, points, monotone):
        k = self.inst.k
        out = np.zeros((len(points), 3))
        groups = {}
        for i, pt in enumerate(points):
            groups.setdefault((pt.eps_s1r, pt.eps_s2r), []).append(i)
        for key, idx in groups.items():
            if not self.relay_decode(z, ur, *key):
                out[idx] = (k, k, 1)
                continue
            cache = {}

            def res(i):
                if i not in cache:
                    pt = points[i]
                    cache[i] = self.destination_decode(z, ud, pt.eps_s1d, pt.eps_s2d)
                return cache[i]

            if monotone and _is_chain(points, idx):
                # residuals only grow along the chain: bisect for the last clean point
                lo, hi = -1, len(idx)
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if res(idx[mid]) == (0, 0):
                        lo = mid
                    else:
                        hi = mid
                todo = idx[hi:]
            else:
                todo = idx
            for i in todo:
                out[i, :2] = res(i)
        return out

    def ber_sweep(self, points, p, trials, seed, jobs=1, monotone=True):
        """Average residual erasure rates over ``trials`` per channel point.

        Trial ``j`` uses the same random numbers at every point, so residuals
        are monotone in the erasure probabilities. With ``monotone=True`` a
        chain of componentwise increasing points is bisected for its last
        fully decoded point and everything below it is recorded as zero
        without decoding; the result is identical to decoding every point.
        The relay is decoded once per distinct relay channel and trial.
        """
        if trials < 1:
            raise ValueError("trials must be >= 1")
        points = list(points)
        k = self.inst.k

        def one(j):
            z, ur, ud = self.draw(seed, j, p)
            return self._sweep_trial(z, ur, ud, points, monotone)

        if jobs > 1:
            with ThreadPoolExecutor(jobs) as ex:
                parts = list(ex.map(one, range(trials)))
        else:
            parts = [one(j) for j in range(trials)]
        tot = np.sum(parts, axis=0)  # summed in trial order whatever the job count
        return SweepResult(points, p, trials, seed, tot[:, 0] / (k * trials),
                           tot[:, 1] / (k * trials), tot[:, 2] / trials)


def _is_chain(points, idx):
    for a, b in zip(idx, idx[1:]):
        if points[b].eps_s1d < points[a].eps_s1d or points[b].eps_s2d < points[a].eps_s2d:
            return False
    return True


def run_trial(inst, channels, p, seed, trial=0):
    return Simulator(inst).run_trial(ChannelPoint.from_channels(channels), p, seed, trial)


def ber_sweep(inst, points, p, trials, seed, jobs=1, monotone=True):
    return Simulator(inst).ber_sweep(points, p, trials, seed, jobs, monotone)


@dataclass
class SweepResult:
    points: list
    p: float
    trials: int
    seed: int
    ber_u1: np.ndarray
    ber_u2: np.ndarray
    relay_fail: np.ndarray

    def erasure_rate(self):
        """Worse of the two users at each point."""
        return np.maximum(self.ber_u1, self.ber_u2)

    def to_csv(self, meta=None):
        buf = io.StringIO()
        meta = dict(meta or {})
        meta.setdefault("seed", self.seed)
        meta.setdefault("seed_schedule", "SeedSequence([seed, trial]).spawn(3) -> z, relay, destination")
        meta.setdefault("relay_failure", "counted as all k bits erased for both users")
        buf.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_HEADER)
        for i, pt in enumerate(self.points):
            wr.writerow([f"{pt.eps_s1d:.6g}", f"{pt.eps_s2d:.6g}", f"{pt.eps_s1r:.6g}",
                         f"{pt.eps_s2r:.6g}", f"{self.p:.6g}", self.trials,
                         f"{self.ber_u1[i]:.6e}", f"{self.ber_u2[i]:.6e}",
                         f"{self.relay_fail[i]:.6e}"])
        return buf.getvalue()


def waterfall_crossing(eps, rate, level=0.1):
    """First ``eps`` where ``rate`` reaches ``level`` (linear interpolation)."""
    eps = np.asarray(eps, dtype=float)
    rate = np.asarray(rate, dtype=float)
    above = np.nonzero(rate >= level)[0]
    if above.size == 0:
        return float("nan")
    i = int(above[0])
    if i == 0:
        return float(eps[0])
    x0, x1, y0, y1 = eps[i - 1], eps[i], rate[i - 1], rate[i]
    return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


def codeword_check(inst, x1, x2):
    """True if ``(x1, x2)`` satisfies both first-layer codes."""
    return not inst.H1.matvec(x1).any() and not inst.H2.matvec(x2).any()


__all__ = [
    "InconsistencyError", "TrialOutcome", "ChannelPoint", "Simulator", "SweepResult",
    "sample_correlation_vector", "erase", "peel", "peel_reference", "Decoder",
    "run_trial", "ber_sweep", "waterfall_crossing", "syndrome_bits",
]
