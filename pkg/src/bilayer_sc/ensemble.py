"""The (l, r, L, w, M) spatially-coupled ensemble and its bilayer extension.

Design rates are returned as exact :class:`fractions.Fraction` values when the
inputs are rational, so regressions against tabulated rates are unambiguous.

Two boundary accountings are supported for the terminated chain. The default
counts ``L + 1 + w - 2 * sum_{j=0}^{w-1} (j/w)^r`` check positions. With
``include_last=True`` the sum runs to ``j = w``, which is the classical
accounting for checks of degree zero at the two ends of the chain; the
published code tables use that one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from numbers import Rational
from typing import Optional


def _check_degrees(l, r, L, w):
    if not (isinstance(l, int) and isinstance(r, int) and isinstance(w, int)):
        raise ValueError("degrees and window must be integers")
    if not 1 <= l < r:
        raise ValueError(f"need 1 <= l < r, got l={l}, r={r}")
    if w < 1:
        raise ValueError("w must be >= 1")
    if L is not None and not math.isinf(L):
        if int(L) != L or L < 1:
            raise ValueError("L must be a positive integer or infinite")


def check_positions(r, L, w, include_last=False):
    """Effective number of check positions per unit ``M l / r``."""
    top = w + 1 if include_last else w
    s = sum(Fraction(j, w) ** r for j in range(top))
    return L + 1 + w - 2 * s


def design_rate(l, r, L=None, w=1, include_last=False):
    """Design rate of the terminated (l, r, L, w) ensemble.

    ``L=None`` (or infinity) gives the limit ``1 - l/r``.
    """
    _check_degrees(l, r, L, w)
    if L is None or math.isinf(L):
        return 1 - Fraction(l, r)
    return 1 - Fraction(l, r) * check_positions(r, int(L), w, include_last) / int(L)


def bilayer_design_rate(l, ls, r, rs, L=None, w=1, mu=Fraction(1, 2), include_last=False):
    """Per-user design rate of the bilayer code seen by the destination.

    The first layer contributes its own checks, the second layer the share
    ``mu`` of the syndrome checks. ``ls=0`` reduces to :func:`design_rate`.
    """
    first = 1 - design_rate(l, r, L, w, include_last)
    if ls == 0:
        synd = Fraction(0)
    else:
        synd = 1 - design_rate(ls, rs, L, w, include_last)
    if not isinstance(mu, Rational):
        return 1 - float(first) - mu * float(synd)
    return 1 - first - Fraction(mu) * synd


@dataclass(frozen=True)
class BilayerEnsemble:
    """Degrees and coupling parameters of the four component ensembles.

    ``(l1, r1)``, ``(l2, r2)`` are the first-layer codes of the two sources;
    ``(ls1, rs1)``, ``(ls2, rs2)`` the relay syndrome codes. ``M1``/``M2``
    are the variable nodes per position (only needed for finite-length
    sampling and the alignment check).
    """

    l1: int
    r1: int
    l2: int
    r2: int
    ls1: int
    rs1: int
    ls2: int
    rs2: int
    L: int = 100
    w: int = 10
    M1: Optional[int] = None
    M2: Optional[int] = None

    def __post_init__(self):
        for name in ("l1", "r1", "l2", "r2", "ls1", "rs1", "ls2", "rs2", "L", "w"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 0:
                raise ValueError(f"{name} must be a non-negative integer")
        if self.L < 1 or self.w < 1:
            raise ValueError("L and w must be positive")

    @property
    def mu1(self):
        tot = self.rs1 + self.rs2
        return Fraction(self.rs1, tot) if tot else Fraction(1, 2)

    @property
    def mu2(self):
        return 1 - self.mu1

    def with_chain(self, L=None, w=None):
        return replace(self, L=self.L if L is None else L, w=self.w if w is None else w)

    def relay_layer(self):
        """Same first layer with the syndrome layer removed (relay decoder)."""
        return replace(self, ls1=0, rs1=0, ls2=0, rs2=0)

    def is_aligned(self):
        """Both syndrome matrices have the same number of rows per position."""
        if self.M1 is None or self.M2 is None:
            return True
        if self.ls1 == 0 or self.ls2 == 0:
            return True
        return Fraction(self.M1 * self.ls1, self.rs1) == Fraction(self.M2 * self.ls2, self.rs2)

    def code_rates(self, include_last=True, L=None):
        """First-layer rates ``(R1, R2)`` and syndrome rates ``(Rsynd1, Rsynd2)``."""
        L = self.L if L is None else L
        R1 = design_rate(self.l1, self.r1, L, self.w, include_last)
        R2 = design_rate(self.l2, self.r2, L, self.w, include_last)
        Rs1 = design_rate(self.ls1, self.rs1, L, self.w, include_last) if self.ls1 else Fraction(1)
        Rs2 = design_rate(self.ls2, self.rs2, L, self.w, include_last) if self.ls2 else Fraction(1)
        return R1, R2, Rs1, Rs2

    def rate_bundle(self, include_last=True, L=None, punctured=True):
        """Rates of this ensemble packed for the theory module."""
        from .theory import RateBundle

        R1, R2, S1, S2 = self.code_rates(include_last, L)
        return RateBundle(
            R1=float(R1), R2=float(R2), Rsynd1=float(S1), Rsynd2=float(S2),
            mu1=float(self.mu1), mu2=float(self.mu2), punctured=punctured,
        )


CODE_A = BilayerEnsemble(6, 10, 6, 10, 2, 10, 2, 10, L=600, w=10, M1=1800, M2=1800)
CODE_B = BilayerEnsemble(12, 20, 14, 20, 4, 14, 3, 14, L=600, w=10, M1=105, M2=140)

# reported values for the two tabulated codes
REFERENCE_RATES = {
    "A": dict(Rtilde1=0.6446, Rtilde2=0.6446, Rsynd1=0.7973, Rsynd2=0.7973, mu1=0.5, mu2=0.5),
    "B": dict(Rtilde1=0.6427, Rtilde2=0.4080, Rsynd1=0.7102, Rsynd2=0.7827, mu1=0.5, mu2=0.5),
}
