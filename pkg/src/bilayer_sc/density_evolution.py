"""Density evolution for the bilayer SC-LDPC destination decoder on the BEC.

Messages are erasure probabilities indexed by coupling position ``t = 1..L``
(array index ``t - 1``); positions outside the chain carry zero. One kernel
covers both correlation regimes: independent sources are the special case
``gamma = 0`` (no punctured systematic bits) and ``p = 0``.

All iterations use the parallel (flooding) schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numba import njit

from .ensemble import BilayerEnsemble

DECODED, STUCK, MAX_ITERS = 0, 1, 2
_STATUS = {DECODED: "decoded", STUCK: "stuck", MAX_ITERS: "max_iters"}


class NonConvergenceError(RuntimeError):
    def __init__(self, result):
        super().__init__(
            f"density evolution did not stabilise within {result.iterations} iterations"
        )
        self.result = result


@njit(cache=True, nogil=True)
def _back_avg(x, w, out):
    # out[t] = mean of x[t-w+1 .. t], t = 0 .. L+w-2
    L = x.shape[0]
    for t in range(L + w - 1):
        s = 0.0
        for k in range(w):
            j = t - k
            if 0 <= j < L:
                s += x[j]
        out[t] = s / w


@njit(cache=True, nogil=True)
def _fwd_avg(y, w, out):
    # out[t] = mean of y[t .. t+w-1], t = 0 .. L-1
    L = out.shape[0]
    for t in range(L):
        s = 0.0
        for j in range(w):
            s += y[t + j]
        out[t] = s / w


@njit(cache=True, nogil=True)
def _step(P, PS, PC, eps, gamma, p, deg, w, nP, nPS, nPC):
    L = P.shape[1]
    n = L + w - 1
    bq = np.empty(n)
    bs1 = np.empty(n)
    bs2 = np.empty(n)
    q = np.empty(n)
    qs = np.empty(n)
    aq = np.empty(L)
    a_s = np.empty(L)
    _back_avg(PS[0], w, bs1)
    _back_avg(PS[1], w, bs2)
    for i in range(2):
        l = deg[4 * i]
        r = deg[4 * i + 1]
        ls = deg[4 * i + 2]
        rs = deg[4 * i + 3]
        rs_other = deg[4 * (1 - i) + 3]
        _back_avg(P[i], w, bq)
        for t in range(n):
            q[t] = 1.0 - (1.0 - bq[t]) ** (r - 1)
        _fwd_avg(q, w, aq)
        if ls > 0:
            own = bs1 if i == 0 else bs2
            oth = bs2 if i == 0 else bs1
            for t in range(n):
                qs[t] = 1.0 - (1.0 - own[t]) ** (rs - 1) * (1.0 - oth[t]) ** rs_other
            _fwd_avg(qs, w, a_s)
        for t in range(L):
            pref = gamma[i] * ((1.0 - p) + p * PC[1 - i, t]) + (1.0 - gamma[i]) * eps[i]
            ext = aq[t] ** (l - 1)
            if ls > 0:
                nP[i, t] = pref * ext * a_s[t] ** ls
                nPS[i, t] = pref * ext * aq[t] * a_s[t] ** (ls - 1)
                nPC[i, t] = ext * aq[t] * a_s[t] ** ls
            else:
                nP[i, t] = pref * ext
                nPS[i, t] = 0.0
                nPC[i, t] = ext * aq[t]


@njit(cache=True, nogil=True)
def _run(P, PS, PC, eps, gamma, p, deg, w, tol, max_iters):
    nP = np.empty_like(P)
    nPS = np.empty_like(PS)
    nPC = np.empty_like(PC)
    for it in range(1, max_iters + 1):
        _step(P, PS, PC, eps, gamma, p, deg, w, nP, nPS, nPC)
        change = 0.0
        top = 0.0
        for i in range(2):
            for t in range(P.shape[1]):
                d = abs(nP[i, t] - P[i, t])
                if d > change:
                    change = d
                d = abs(nPS[i, t] - PS[i, t])
                if d > change:
                    change = d
                if nP[i, t] > top:
                    top = nP[i, t]
                if nPS[i, t] > top:
                    top = nPS[i, t]
        P[:, :] = nP
        PS[:, :] = nPS
        PC[:, :] = nPC
        if top < tol:
            return DECODED, it
        if change < tol / 10:
            return STUCK, it
    return MAX_ITERS, max_iters


@dataclass
class DEState:
    """Per-position message profiles; row ``i`` belongs to source ``i+1``."""

    p: np.ndarray
    psynd: np.ndarray
    pcorr: np.ndarray
    iteration: int = 0

    def copy(self):
        return DEState(self.p.copy(), self.psynd.copy(), self.pcorr.copy(), self.iteration)

    def max_message(self):
        return max(float(self.p.max()), float(self.psynd.max()))


def _degrees(ens):
    return np.array(
        [ens.l1, ens.r1, ens.ls1, ens.rs1, ens.l2, ens.r2, ens.ls2, ens.rs2], dtype=np.int64
    )


def _prefactor(eps, gamma, p, pcorr_other):
    return gamma * ((1 - p) + p * pcorr_other) + (1 - gamma) * eps


def initial_state(ensemble, eps1, eps2, gamma=(0.0, 0.0), L=None):
    """All variable-to-check messages at their channel value.

    Punctured systematic bits start erased (correlation message 1).
    """
    L = ensemble.L if L is None else L
    pc = np.ones((2, L))
    p = np.empty((2, L))
    p[0] = _prefactor(eps1, gamma[0], 0.0, 1.0)
    p[1] = _prefactor(eps2, gamma[1], 0.0, 1.0)
    ps = p.copy()
    if ensemble.ls1 == 0:
        ps[0] = 0.0
    if ensemble.ls2 == 0:
        ps[1] = 0.0
    return DEState(p, ps, pc, 0)


def _iterate(state, eps1, eps2, p, gamma, ensemble, w):
    w = ensemble.w if w is None else w
    nP = np.empty_like(state.p)
    nPS = np.empty_like(state.psynd)
    nPC = np.empty_like(state.pcorr)
    _step(state.p, state.psynd, state.pcorr, np.array([eps1, eps2], dtype=float),
          np.asarray(gamma, dtype=float), float(p), _degrees(ensemble), int(w), nP, nPS, nPC)
    return DEState(nP, nPS, nPC, state.iteration + 1)


def de_iterate_uncorrelated(state, eps_s1d, eps_s2d, ensemble, w=None):
    """One flooding update of both users and both layers (independent sources)."""
    return _iterate(state, eps_s1d, eps_s2d, 0.0, (0.0, 0.0), ensemble, w)


def de_iterate_correlated(state, eps_s1d, eps_s2d, p, gamma1, gamma2, ensemble, w=None):
    """One flooding update with punctured systematic bits tied by correlation checks.

    ``gamma_i`` is the fraction of systematic bits of code ``i``.
    """
    if not ensemble.is_aligned():
        raise ValueError("syndrome matrices are not row-aligned (M1 ls1/rs1 != M2 ls2/rs2)")
    for g in (gamma1, gamma2):
        if not 0 <= g <= 1:
            raise ValueError("gamma must lie in [0, 1]")
    return _iterate(state, eps_s1d, eps_s2d, p, (gamma1, gamma2), ensemble, w)


@dataclass(frozen=True)
class DEParams:
    """What to evolve: the ensemble, the correlation and the stopping rule.

    With ``punctured=True`` all systematic bits are punctured and ``gamma``
    defaults to the first-layer design rates. Independent sources with
    unpunctured codes use ``punctured=False`` and ``p=0``.
    """

    ensemble: BilayerEnsemble
    p: float = 0.0
    punctured: bool = True
    gamma: Optional[tuple] = None
    tol: float = 1e-10
    max_iters: int = 50_000
    decode_tol: float = 1e-8
    strict: bool = False

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError("p must be a probability")
        if self.p > 0 and not self.punctured:
            raise ValueError("correlation is only modelled for punctured systematic codes")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    def gammas(self):
        if not self.punctured:
            return (0.0, 0.0)
        if self.gamma is not None:
            return tuple(float(g) for g in self.gamma)
        R1, R2, _, _ = self.ensemble.code_rates(include_last=True)
        return float(R1), float(R2)

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class DEResult:
    decodable: bool
    status: str
    iterations: int
    h1: float
    h2: float
    state: DEState = field(repr=False)
    tol: float = 1e-10

    @property
    def converged(self):
        return self.status != "max_iters"


def exit_values(state):
    """Chain-averaged residual erasure ``(h1, h2)`` of the current profiles."""
    return float(state.pcorr[0].mean()), float(state.pcorr[1].mean())


def run_de(eps1, eps2, params, strict=False):
    """Iterate to a fixed point at channel pair ``(eps1, eps2)``.

    Stops when every message is below ``tol`` (decoded, h = 0), when no
    message moves by more than ``tol/10`` (stuck), or after ``max_iters``.
    With ``strict=True`` the last case raises :class:`NonConvergenceError`.
    """
    ens = params.ensemble
    if not ens.is_aligned():
        raise ValueError("syndrome matrices are not row-aligned")
    gamma = params.gammas()
    state = initial_state(ens, eps1, eps2, gamma)
    status, its = _run(state.p, state.psynd, state.pcorr, np.array([eps1, eps2], dtype=float),
                       np.array(gamma, dtype=float), float(params.p), _degrees(ens),
                       int(ens.w), float(params.tol), int(params.max_iters))
    state.iteration = its
    if status == DECODED:
        h1 = h2 = 0.0
    else:
        h1, h2 = exit_values(state)
    res = DEResult(
        decodable=state.max_message() < params.decode_tol,
        status=_STATUS[status], iterations=its, h1=h1, h2=h2, state=state, tol=params.tol,
    )
    if strict and status == MAX_ITERS:
        raise NonConvergenceError(res)
    return res


def decodable(eps1, eps2, params):
    return run_de(eps1, eps2, params, strict=params.strict).decodable


@dataclass(frozen=True)
class RayThreshold:
    t: float
    origin_decodable: bool
    point: tuple


def _ray_extent(origin, direction):
    t = math.inf
    for o, d in zip(origin, direction):
        if d > 0:
            t = min(t, (1.0 - o) / d)
    return t


def threshold_on_ray(origin, direction, params, bisect_tol=1e-4, t_max=None):
    """Largest ``t`` (to ``bisect_tol``) with ``origin + t*direction`` decodable.

    Relies on the region being down-closed, so decodability is monotone
    along any ray with non-negative direction.
    """
    direction = tuple(float(d) for d in direction)
    if min(direction) < 0 or max(direction) <= 0:
        raise ValueError("direction must be non-negative and non-zero")
    ox, oy = origin
    dx, dy = direction
    hi = _ray_extent(origin, direction) if t_max is None else t_max
    if not decodable(ox, oy, params):
        return RayThreshold(0.0, False, (ox, oy))
    if decodable(ox + hi * dx, oy + hi * dy, params):
        return RayThreshold(hi, True, (ox + hi * dx, oy + hi * dy))
    lo = 0.0
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if decodable(ox + mid * dx, oy + mid * dy, params):
            lo = mid
        else:
            hi = mid
    return RayThreshold(lo, True, (ox + lo * dx, oy + lo * dy))


def fan_directions(n):
    """``n`` unit directions from the eps1 axis to the eps2 axis."""
    angles = np.linspace(0.0, np.pi / 2, n)
    return [(float(np.cos(a)), float(np.sin(a))) for a in angles]


@dataclass
class RegionScan:
    grid: np.ndarray
    decodable: np.ndarray  # decodable[i, j] for (grid[i], grid[j])
    evaluations: int = 0

    def points(self):
        i, j = np.nonzero(self.decodable)
        return np.column_stack([self.grid[i], self.grid[j]])

    def boundary(self):
        """Highest decodable eps2 per eps1 column (``nan`` if none)."""
        out = np.full(self.grid.size, np.nan)
        for i in range(self.grid.size):
            js = np.nonzero(self.decodable[i])[0]
            if js.size:
                out[i] = self.grid[js.max()]
        return out


def scan_grid(grid_step):
    n = int(round(1.0 / grid_step))
    return np.linspace(0.0, n * grid_step, n + 1)


def region_scan(params, grid_step=0.005, exhaustive=False):
    """Decodable set on a square grid of (eps_s1d, eps_s2d).

    The default walks the boundary staircase (the region is down-closed),
    costing about two DE runs per column. ``exhaustive=True`` evaluates every
    grid point.
    """
    if not 0 < grid_step <= 0.1:
        raise ValueError("grid_step must lie in (0, 0.1]")
    grid = scan_grid(grid_step)
    n = grid.size
    dec = np.zeros((n, n), dtype=bool)
    evals = 0

    def ok(i, j):
        nonlocal evals
        evals += 1
        return decodable(grid[i], grid[j], params)

    if exhaustive:
        for i in range(n):
            for j in range(n):
                dec[i, j] = ok(i, j)
        return RegionScan(grid, dec, evals)

    if not ok(0, 0):
        return RegionScan(grid, dec, evals)
    lo, hi = 0, n - 1
    if ok(0, hi):
        top = hi
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(0, mid):
                lo = mid
            else:
                hi = mid
        top = lo
    dec[0, : top + 1] = True
    for i in range(1, n):
        j = top
        while j >= 0 and not ok(i, j):
            j -= 1
        top = j
        if top < 0:
            break
        dec[i, : top + 1] = True
    return RegionScan(grid, dec, evals)


def exit_surface(params, grid):
    """EXIT values ``h1, h2`` on the product grid ``grid x grid``."""
    grid = np.asarray(grid, dtype=float)
    h1 = np.empty((grid.size, grid.size))
    h2 = np.empty_like(h1)
    for i, e1 in enumerate(grid):
        for j, e2 in enumerate(grid):
            res = run_de(e1, e2, params)
            h1[i, j], h2[i, j] = res.h1, res.h2
    return h1, h2


def single_layer_profiles(l, r, L, w, eps, iters):
    """Message profiles of the single-layer (l, r, L, w) recursion per iteration.

    Written directly from the scalar recursion with explicit zero padding;
    used as the reference side of the bilayer equivalence check.
    """
    p = np.full(L, float(eps))
    out = [p.copy()]
    for _ in range(iters):
        padded = np.concatenate([np.zeros(w - 1), p, np.zeros(w - 1)])
        # check positions 1..L+w-1
        back = np.array([padded[t:t + w].sum() for t in range(L + w - 1)]) / w
        q = 1.0 - (1.0 - back) ** (r - 1)
        fwd = np.array([q[t:t + w].sum() for t in range(L)]) / w
        p = eps * fwd ** (l - 1)
        out.append(p.copy())
    return out


def lemma1_equivalence_check(l, ls, r, L, w, eps, iters, rs=None):
    """Max |difference| between bilayer and single-layer (l+ls, r) profiles.

    Symmetric independent sources with ``rs = r/2``: every message of both
    users and both layers must track the single-layer recursion exactly.
    """
    rs = r // 2 if rs is None else rs
    if 2 * rs != r:
        raise ValueError("the equivalence needs rs = r/2")
    if ls == 0:
        rs = 0
    ens = BilayerEnsemble(l, r, l, r, ls, rs, ls, rs, L=L, w=w)
    state = initial_state(ens, eps, eps)
    ref = single_layer_profiles(l + ls, r, L, w, eps, iters)
    worst = float(np.max(np.abs(state.p - ref[0])))
    for it in range(1, iters + 1):
        state = de_iterate_uncorrelated(state, eps, eps, ens)
        rows = [state.p[0], state.p[1]]
        if ls:
            rows += [state.psynd[0], state.psynd[1]]
        for row in rows:
            worst = max(worst, float(np.max(np.abs(row - ref[it]))))
    return worst
