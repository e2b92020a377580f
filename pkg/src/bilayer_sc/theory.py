"""Information-theoretic limits of the two-source erasure relay network.

Covers the correlated-source entropies, the five decode-and-forward rate
bounds, the closed-form optimal time allocation with its grid oracle, and
the achievable erasure-probability pentagons for given code rates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

_EQ_TOL = 1e-12


@dataclass(frozen=True)
class ChannelSet:
    """Erasure probabilities of the five links (s1-r, s2-r, s1-d, s2-d, r-d)."""

    eps_s1r: float
    eps_s2r: float
    eps_s1d: float
    eps_s2d: float
    eps_rd: float = 0.0

    def __post_init__(self):
        for name in ("eps_s1r", "eps_s2r", "eps_s1d", "eps_s2d", "eps_rd"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")

    @classmethod
    def from_capacities(cls, c_s1r, c_s2r, c_s1d, c_s2d, c_rd=1.0):
        return cls(1 - c_s1r, 1 - c_s2r, 1 - c_s1d, 1 - c_s2d, 1 - c_rd)

    @property
    def c_s1r(self):
        return 1.0 - self.eps_s1r

    @property
    def c_s2r(self):
        return 1.0 - self.eps_s2r

    @property
    def c_s1d(self):
        return 1.0 - self.eps_s1d

    @property
    def c_s2d(self):
        return 1.0 - self.eps_s2d

    @property
    def c_rd(self):
        return 1.0 - self.eps_rd

    def check_relay_assumptions(self):
        """Raise if the relay links are worse than the direct ones."""
        if self.c_s1r < self.c_s1d or self.c_s2r < self.c_s2d:
            raise ValueError("source-relay capacity below source-destination capacity")
        if self.c_rd < self.c_s1d or self.c_rd < self.c_s2d:
            raise ValueError("relay-destination capacity below source-destination capacity")


@dataclass(frozen=True)
class CorrelationModel:
    p: float
    z: Optional[np.ndarray] = None

    def __post_init__(self):
        _check_prob(self.p, "p")
        if self.z is not None:
            z = np.asarray(self.z)
            if z.ndim != 1 or not np.isin(z, (0, 1)).all():
                raise ValueError("z must be a 0/1 vector")


@dataclass(frozen=True)
class TimeAllocation:
    theta1: float
    theta2: float
    theta_r: float

    def __post_init__(self):
        if min(self.theta1, self.theta2, self.theta_r) < -_EQ_TOL:
            raise ValueError("negative phase fraction")
        if abs(self.theta1 + self.theta2 + self.theta_r - 1.0) > _EQ_TOL:
            raise ValueError("phase fractions must sum to one")

    @classmethod
    def from_pair(cls, theta1, theta2):
        return cls(theta1, theta2, 1.0 - theta1 - theta2)


@dataclass
class RateBundle:
    """Source-coding, transmission and syndrome-code rates of one design.

    ``R1``/``R2`` are the (unpunctured) channel code rates, ``Rtilde*`` the
    punctured rates ``R/(1-R)``. ``Rprime`` is the effective rate per source
    in source bits per transmission block.
    """

    R1: float
    R2: float
    Rsynd1: float
    Rsynd2: float
    mu1: float
    mu2: float
    Rs1: float = 1.0
    Rs2: float = 1.0
    Rprime: float = float("nan")
    punctured: bool = False
    alloc: Optional[TimeAllocation] = None

    @property
    def Rtilde1(self):
        return punctured_rate(self.R1)

    @property
    def Rtilde2(self):
        return punctured_rate(self.R2)

    def validate(self, p=None, tol=1e-9, check_synd_ratio=True):
        """Check the bundle invariants; raise ValueError on the first violation."""
        for name in ("R1", "R2", "Rsynd1", "Rsynd2", "mu1", "mu2", "Rs1", "Rs2"):
            v = getattr(self, name)
            if not -tol <= v <= 1 + tol:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if abs(self.mu1 + self.mu2 - 1) > tol:
            raise ValueError("mu1 + mu2 != 1")
        if p is not None and p > 0:
            if abs(self.Rs1 + self.Rs2 - (2 - p)) > tol:
                raise ValueError("Rs1 + Rs2 must equal the joint entropy")
        if check_synd_ratio and self.R2 > 0 and self.Rsynd2 < 1:
            lhs = (1 - self.Rsynd1) / (1 - self.Rsynd2)
            if abs(lhs - self.R1 / self.R2) > tol:
                raise ValueError("syndrome code rates inconsistent with R1/R2")
        return self


def _check_prob(p, name="p"):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name}={p} is not a probability")


def punctured_rate(R):
    """Rate after puncturing all systematic bits, ``R/(1-R)``."""
    return math.inf if R >= 1 else R / (1 - R)


def unpunctured_rate(Rtilde):
    """Inverse of :func:`punctured_rate`, ``x/(1+x)``."""
    return 1.0 if math.isinf(Rtilde) else Rtilde / (1 + Rtilde)


def source_entropies(p):
    """Return ``(H(U1|U2), H(U1,U2))`` in bits for correlation parameter p."""
    _check_prob(p)
    return 1.0 - p, 2.0 - p


def _ratio(num, den):
    # a zero source-coding rate leaves the bound unconstrained
    if den == 0:
        return math.inf
    return num / den


def df_rate_bounds(alloc, Rs1, channels, p):
    """The five upper bounds (f1..f5) on the effective rate per source.

    The achievable rate at this operating point is ``min`` of the tuple.
    """
    h_cond, h_joint = source_entropies(p)
    if not h_cond - _EQ_TOL <= Rs1 <= 1 + _EQ_TOL:
        raise ValueError(f"Rs1={Rs1} outside the Slepian-Wolf corner segment [{h_cond}, 1]")
    Rs2 = h_joint - Rs1
    ch = channels
    t1, t2, tr = alloc.theta1, alloc.theta2, alloc.theta_r
    f1 = _ratio(t1 * ch.c_s1r, Rs1)
    f2 = _ratio(t2 * ch.c_s2r, Rs2)
    f3 = _ratio(t1 * ch.c_s1d + tr * ch.c_rd, Rs1)
    f4 = _ratio(t2 * ch.c_s2d + tr * ch.c_rd, Rs2)
    f5 = (t1 * ch.c_s1d + t2 * ch.c_s2d + tr * ch.c_rd) / h_joint
    return f1, f2, f3, f4, f5


@dataclass(frozen=True)
class OptimalAllocation:
    alloc: TimeAllocation
    Rs1_star: float
    Rs2_star: float
    Rmax: float
    alpha_case: str  # "GT", "LT" or "EQ": sign of alpha against zero
    kappa: float = field(default=float("nan"))
    nu: float = field(default=float("nan"))
    alpha: float = field(default=float("nan"))


def _alpha(ch):
    kappa = ch.c_s1r / ch.c_s2r
    alpha = (1 - kappa) * ch.c_rd - ch.c_s1d + kappa * ch.c_s2d
    den = ch.c_rd - ch.c_s2d
    nu = (ch.c_rd - ch.c_s1d) / den if den > 0 else math.inf
    return kappa, nu, alpha


def optimal_allocation(channels, p, tie_rs1=None):
    """Closed-form maximum DF rate with correlated sources.

    The rate as a function of ``Rs1`` is ``C_s1r C_rd / (alpha Rs1 + const)``,
    so ``alpha > 0`` selects maximal compression of source 1
    (``Rs1* = H(U1|U2)``), ``alpha < 0`` selects ``Rs1* = 1``, and a tie
    returns ``Rs1* = H(U1|U2)`` unless ``tie_rs1`` picks another point of
    the flat segment.
    """
    _check_prob(p)
    ch = channels
    ch.check_relay_assumptions()
    if ch.c_s1r <= 0 or ch.c_s2r <= 0:
        raise ValueError("closed form needs positive source-relay capacities")
    h_cond, h_joint = source_entropies(p)
    kappa, nu, alpha = _alpha(ch)
    if abs(alpha) <= _EQ_TOL:
        case, rs1 = "EQ", h_cond
        if tie_rs1 is not None:
            if not h_cond - _EQ_TOL <= tie_rs1 <= 1 + _EQ_TOL:
                raise ValueError("tie_rs1 outside [H(U1|U2), 1]")
            rs1 = float(tie_rs1)
    elif alpha > 0:
        case, rs1 = "GT", h_cond
    else:
        case, rs1 = "LT", 1.0
    rs2 = h_joint - rs1

    if rs1 > 0:
        x = h_joint / rs1
        kappa_p = kappa * (x - 1)
        theta1 = ch.c_rd / (
            (1 + kappa_p) * ch.c_rd + x * ch.c_s1r - ch.c_s1d - kappa_p * ch.c_s2d
        )
        theta2 = kappa_p * theta1
        rmax = theta1 * ch.c_s1r / rs1
    else:
        # p = 1 and source 1 fully compressed: only source 2 carries data
        theta1 = 0.0
        theta2 = ch.c_rd / (ch.c_rd + ch.c_s2r - ch.c_s2d)
        rmax = theta2 * ch.c_s2r / rs2
    theta_r = max(0.0, 1.0 - theta1 - theta2)
    alloc = TimeAllocation(theta1, theta2, theta_r)
    return OptimalAllocation(alloc, rs1, rs2, rmax, case, kappa, nu, alpha)


def _grid(lo, hi, step):
    n = int(math.floor((hi - lo) / step + 1e-9))
    pts = lo + step * np.arange(n + 1)
    if hi - pts[-1] > 1e-12:
        pts = np.append(pts, hi)
    return pts


def brute_force_allocation(channels, p, grid_step=0.005):
    """Exhaustive maximisation of ``min(f1..f5)`` on a (theta1, theta2, Rs1) grid.

    Grids at ``step`` and ``step/2`` are nested, so the result is monotone
    under halving of the step.
    """
    if not 0 < grid_step <= 0.1:
        raise ValueError("grid_step must lie in (0, 0.1]")
    _check_prob(p)
    ch = channels
    h_cond, h_joint = source_entropies(p)
    th = _grid(0.0, 1.0, grid_step)
    t1, t2 = np.meshgrid(th, th, indexing="ij")
    ok = t1 + t2 <= 1 + 1e-12
    t1, t2 = t1[ok], t2[ok]
    tr = np.clip(1.0 - t1 - t2, 0.0, None)

    direct1 = t1 * ch.c_s1d + tr * ch.c_rd
    direct2 = t2 * ch.c_s2d + tr * ch.c_rd
    f5 = (t1 * ch.c_s1d + t2 * ch.c_s2d + tr * ch.c_rd) / h_joint
    relay1 = t1 * ch.c_s1r
    relay2 = t2 * ch.c_s2r

    best = (-1.0, 0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        for rs1 in _grid(h_cond, 1.0, grid_step):
            rs2 = h_joint - rs1
            inv1 = 1.0 / rs1 if rs1 > 0 else math.inf
            inv2 = 1.0 / rs2 if rs2 > 0 else math.inf
            vals = f5.copy()
            if math.isfinite(inv1):
                np.minimum(vals, relay1 * inv1, out=vals)
                np.minimum(vals, direct1 * inv1, out=vals)
            if math.isfinite(inv2):
                np.minimum(vals, relay2 * inv2, out=vals)
                np.minimum(vals, direct2 * inv2, out=vals)
            i = int(np.argmax(vals))
            if vals[i] > best[0]:
                best = (float(vals[i]), i, float(rs1))
    rmax, i, rs1 = best
    alloc = TimeAllocation(float(t1[i]), float(t2[i]), float(tr[i]))
    if ch.c_s1r > 0 and ch.c_s2r > 0:
        kappa, nu, alpha = _alpha(ch)
        case = "EQ" if abs(alpha) <= _EQ_TOL else ("GT" if alpha > 0 else "LT")
    else:
        kappa = nu = alpha = math.nan
        case = "EQ"
    return OptimalAllocation(alloc, rs1, h_joint - rs1, rmax, case, kappa, nu, alpha)


@dataclass(frozen=True)
class Pentagon:
    """Down-closed region with corners (0,0), (a,0), (a,b), (c,d), (0,d)."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if self.c > self.a + 1e-12 or self.b > self.d + 1e-12:
            raise ValueError("pentagon corners must satisfy c <= a and b <= d")

    @property
    def corners(self):
        return [(0.0, 0.0), (self.a, 0.0), (self.a, self.b), (self.c, self.d), (0.0, self.d)]

    def _below_sum_line(self, x, y):
        # half-plane under the segment (c, d) -> (a, b)
        return (y - self.d) * (self.a - self.c) - (self.b - self.d) * (x - self.c) <= 1e-12

    def contains(self, x, y):
        """Closed-boundary membership test (vectorised over x, y)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = (x >= 0) & (y >= 0) & (x <= self.a + 1e-12) & (y <= self.d + 1e-12)
        return inside & self._below_sum_line(x, y)

    def ray_exit(self, origin, direction):
        """Largest ``t`` with ``origin + t*direction`` inside the pentagon."""
        ox, oy = origin
        dx, dy = direction
        t = math.inf
        if dx > 0:
            t = min(t, (self.a - ox) / dx)
        if dy > 0:
            t = min(t, (self.d - oy) / dy)
        # (y - d)(a - c) - (b - d)(x - c) <= 0 along the ray
        g0 = (oy - self.d) * (self.a - self.c) - (self.b - self.d) * (ox - self.c)
        g1 = dy * (self.a - self.c) - (self.b - self.d) * dx
        if g1 > 0:
            t = min(t, -g0 / g1)
        return max(t, 0.0)


def achievable_region_sr(rates, p, punctured=False):
    """Achievable (eps_s1r, eps_s2r) pentagon for the given code rates."""
    h_cond, _ = source_entropies(p)
    r1, r2 = (rates.Rtilde1, rates.Rtilde2) if punctured else (rates.R1, rates.R2)
    return Pentagon(a=1 - h_cond * r1, b=1 - r2, c=1 - r1, d=1 - h_cond * r2)


def achievable_region_sd(rates, p, punctured=False):
    """Achievable (eps_s1d, eps_s2d) pentagon, including the relay help."""
    h_cond, _ = source_entropies(p)
    help1 = 1 - rates.Rsynd1
    help2 = 1 - rates.Rsynd2
    if punctured:
        r1, r2 = rates.Rtilde1, rates.Rtilde2
        help1 /= 1 - rates.R1
        help2 /= 1 - rates.R2
    else:
        r1, r2 = rates.R1, rates.R2
    return Pentagon(
        a=1 - (h_cond * r1 - help1),
        b=1 - r2,
        c=1 - r1,
        d=1 - (h_cond * r2 - help2),
    )
