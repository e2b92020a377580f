"""Component-code rates and syndrome splits for given link qualities.

``design_uncorrelated`` covers independent sources with unpunctured codes,
``design_correlated`` the punctured systematic codes used when the sources
are correlated. ``fit_degrees`` turns target rates into integer degrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .ensemble import BilayerEnsemble
from .theory import (
    ChannelSet,
    RateBundle,
    TimeAllocation,
    optimal_allocation,
    punctured_rate,
    source_entropies,
    unpunctured_rate,
)

FIT_TOL = 0.02


class NoRelayNeeded(ValueError):
    """Both direct links are as good as the relay links; no syndrome bits."""


class InfeasibleDesign(ValueError):
    pass


class DegenerateDesign(InfeasibleDesign):
    """One source needs no transmission of its own (zero conditional entropy)."""


class InfeasibleFit(ValueError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


@dataclass(frozen=True)
class DesignSpec:
    channels: ChannelSet
    p: float = 0.0
    punctured: bool = True
    # Rs1 used when the optimum is flat in Rs1 (alpha == 0); None keeps H(U1|U2)
    tie_rs1: Optional[float] = None

    def __post_init__(self):
        if self.p > 0 and not self.punctured:
            object.__setattr__(self, "punctured", True)


def syndrome_split(channels):
    """``(mu1, mu2)`` from the excess of relay over direct capacity."""
    ch = channels
    g1 = ch.c_s2r * (ch.c_s1r - ch.c_s1d)
    g2 = ch.c_s1r * (ch.c_s2r - ch.c_s2d)
    if g1 + g2 <= 0:
        raise NoRelayNeeded("relay links are no better than the direct links")
    return g1 / (g1 + g2), g2 / (g1 + g2)


def _check_design_channels(ch):
    ch.check_relay_assumptions()
    if ch.c_s1r <= 0 or ch.c_s2r <= 0:
        raise InfeasibleDesign("source-relay links carry no information")


def design_uncorrelated(channels):
    """Rates for independent sources with unpunctured codes."""
    ch = channels
    _check_design_channels(ch)
    mu1, mu2 = syndrome_split(ch)
    kappa = ch.c_s1r / ch.c_s2r
    R1, R2 = ch.c_s1r, ch.c_s2r
    rsynd1 = 1 - (2 * ch.c_s1r - kappa * ch.c_s2d - ch.c_s1d)
    rsynd2 = 1 - (2 * ch.c_s2r - ch.c_s1d / kappa - ch.c_s2d)
    for v in (rsynd1, rsynd2):
        if not 0 < v < 1:
            raise InfeasibleDesign(f"syndrome code rate {v:.4f} outside (0, 1)")
    if ch.c_rd <= 0:
        raise InfeasibleDesign("relay-destination link carries no information")
    theta1 = ch.c_rd / (ch.c_rd * (1 + kappa) + (1 - rsynd1))
    theta2 = kappa * theta1
    alloc = TimeAllocation.from_pair(theta1, theta2)
    return RateBundle(
        R1=R1, R2=R2, Rsynd1=rsynd1, Rsynd2=rsynd2, mu1=mu1, mu2=mu2,
        Rs1=1.0, Rs2=1.0, Rprime=theta1 * R1, punctured=False, alloc=alloc,
    )


def design_correlated(spec):
    """Rates for punctured systematic codes exploiting source correlation."""
    if not spec.punctured:
        if spec.p > 0:
            raise InfeasibleDesign("correlated sources need punctured codes")
        return design_uncorrelated(spec.channels)
    ch = spec.channels
    _check_design_channels(ch)
    mu1, mu2 = syndrome_split(ch)
    _, h_joint = source_entropies(spec.p)
    opt = optimal_allocation(ch, spec.p, tie_rs1=spec.tie_rs1)
    rs1, rs2 = opt.Rs1_star, opt.Rs2_star
    if rs1 <= 0 or rs2 <= 0:
        raise DegenerateDesign(
            f"Rs1*={rs1:.3g}, Rs2*={rs2:.3g}: one source carries no own information"
        )
    Rt1, Rt2 = ch.c_s1r / rs1, ch.c_s2r / rs2
    R1, R2 = unpunctured_rate(Rt1), unpunctured_rate(Rt2)
    kappa_p = opt.kappa * (h_joint / rs1 - 1)
    rsynd1 = 1 - (1 - R1) * (h_joint / rs1 * ch.c_s1r - kappa_p * ch.c_s2d - ch.c_s1d)
    rsynd2 = 1 - (1 - R2) * (h_joint / rs2 * ch.c_s2r - ch.c_s1d / kappa_p - ch.c_s2d)
    for v in (rsynd1, rsynd2):
        if not 0 < v < 1:
            raise InfeasibleDesign(f"syndrome code rate {v:.4f} outside (0, 1)")
    return RateBundle(
        R1=R1, R2=R2, Rsynd1=rsynd1, Rsynd2=rsynd2, mu1=mu1, mu2=mu2,
        Rs1=rs1, Rs2=rs2, Rprime=opt.alloc.theta1 * Rt1, punctured=True,
        alloc=opt.alloc,
    )


def design(spec):
    if spec.p == 0 and not spec.punctured:
        return design_uncorrelated(spec.channels)
    return design_correlated(spec)


@dataclass(frozen=True)
class DegreeFit:
    ensemble: BilayerEnsemble
    target: RateBundle
    achieved: RateBundle

    @property
    def M1(self):
        return self.ensemble.M1

    @property
    def M2(self):
        return self.ensemble.M2

    def max_gap(self):
        t, a = self.target, self.achieved
        return max(abs(t.R1 - a.R1), abs(t.R2 - a.R2),
                   abs(t.Rsynd1 - a.Rsynd1), abs(t.Rsynd2 - a.Rsynd2))


def _fit_first_layer(R, r_max):
    # largest check degree whose rounded variable degree lands within tolerance
    best = None
    for r in range(r_max, 2, -1):
        l = min(max(round(r * (1 - R)), 2), r - 1)
        gap = abs(1 - l / r - R)
        if gap <= FIT_TOL:
            return l, r
        if best is None or gap < best[2]:
            best = (l, r, gap)
    return best[0], best[1]


def _fit_syndrome_layer(target, r_max):
    """Choose (ls1, rs1, ls2, rs2): mu error first, then rate gap, then size."""
    need1 = target.mu1 > 0
    need2 = target.mu2 > 0
    range1 = range(3, r_max + 1) if need1 else [0]
    range2 = range(3, r_max + 1) if need2 else [0]
    best = None
    for rs1 in range1:
        ls1 = min(max(round(rs1 * (1 - target.Rsynd1)), 2), rs1 - 1) if rs1 else 0
        gap1 = abs(1 - ls1 / rs1 - target.Rsynd1) if rs1 else 0.0
        for rs2 in range2:
            ls2 = min(max(round(rs2 * (1 - target.Rsynd2)), 2), rs2 - 1) if rs2 else 0
            gap2 = abs(1 - ls2 / rs2 - target.Rsynd2) if rs2 else 0.0
            mu_err = round(abs(rs1 / (rs1 + rs2) - target.mu1), 12)
            key = (mu_err, round(max(gap1, gap2), 12), rs1 + rs2)
            if best is None or key < best[0]:
                best = (key, (ls1, rs1, ls2, rs2))
    return best[1]


def _aligned_sizes(l1, r1, l2, r2, ls1, rs1, ls2, rs2, M_base):
    if ls1 and ls2:
        m1, m2 = ls2 * rs1, ls1 * rs2
        g = math.gcd(m1, m2)
        m1, m2 = m1 // g, m2 // g
    else:
        m1 = m2 = 1

    def integral(k):
        M1, M2 = k * m1, k * m2
        checks = [Fraction(M1 * l1, r1), Fraction(M2 * l2, r2)]
        if ls1:
            checks.append(Fraction(M1 * ls1, rs1))
        if ls2:
            checks.append(Fraction(M2 * ls2, rs2))
        return all(c.denominator == 1 for c in checks)

    k = 1
    while not integral(k):
        k += 1
    m1, m2 = k * m1, k * m2
    scale = max(1, -(-M_base // min(m1, m2)))
    return m1 * scale, m2 * scale


def fit_degrees(target, r_max, M_base, L=600, w=10):
    """Integer degrees realising ``target`` with check degrees up to ``r_max``.

    First-layer codes take the largest check degree for which the rounded
    variable degree stays within 0.02 of the target rate. The syndrome layer
    matches ``mu1`` first, then the syndrome rates. ``M1``/``M2`` are the
    smallest sizes meeting the row alignment and integrality, scaled so that
    both reach ``M_base``.
    """
    if r_max < 4:
        raise ValueError("r_max must be >= 4")
    if M_base < r_max:
        raise ValueError("M_base must be >= r_max")
    l1, r1 = _fit_first_layer(target.R1, r_max)
    l2, r2 = _fit_first_layer(target.R2, r_max)
    ls1, rs1, ls2, rs2 = _fit_syndrome_layer(target, r_max)
    M1, M2 = _aligned_sizes(l1, r1, l2, r2, ls1, rs1, ls2, rs2, M_base)
    ens = BilayerEnsemble(l1, r1, l2, r2, ls1, rs1, ls2, rs2, L=L, w=w, M1=M1, M2=M2)
    achieved = RateBundle(
        R1=1 - l1 / r1, R2=1 - l2 / r2,
        Rsynd1=1 - ls1 / rs1 if rs1 else 1.0,
        Rsynd2=1 - ls2 / rs2 if rs2 else 1.0,
        mu1=float(ens.mu1), mu2=float(ens.mu2),
        Rs1=target.Rs1, Rs2=target.Rs2, punctured=target.punctured,
    )
    fit = DegreeFit(ens, target, achieved)
    if fit.max_gap() > FIT_TOL:
        raise InfeasibleFit(
            f"no degrees within {FIT_TOL} of the targets for r_max={r_max}", best=fit
        )
    return fit


def target_from_table(row):
    """RateBundle from tabulated punctured rates (``Rtilde*``, ``Rsynd*``, ``mu*``)."""
    return RateBundle(
        R1=unpunctured_rate(row["Rtilde1"]), R2=unpunctured_rate(row["Rtilde2"]),
        Rsynd1=row["Rsynd1"], Rsynd2=row["Rsynd2"], mu1=row["mu1"], mu2=row["mu2"],
        punctured=True,
    )


__all__ = [
    "DesignSpec", "DegreeFit", "NoRelayNeeded", "InfeasibleDesign", "DegenerateDesign",
    "InfeasibleFit", "design", "design_uncorrelated", "design_correlated", "fit_degrees",
    "syndrome_split", "target_from_table", "punctured_rate",
]
