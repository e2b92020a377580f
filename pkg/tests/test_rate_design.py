from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilayer_sc.ensemble import REFERENCE_RATES
from bilayer_sc.rate_design import (
    DegenerateDesign,
    DesignSpec,
    InfeasibleDesign,
    InfeasibleFit,
    NoRelayNeeded,
    design,
    design_correlated,
    design_uncorrelated,
    fit_degrees,
    target_from_table,
)
from bilayer_sc.theory import (
    ChannelSet,
    RateBundle,
    df_rate_bounds,
    optimal_allocation,
    punctured_rate,
)

# symmetric links that reproduce the Code A row of the code table
CODE_A_LINKS = ChannelSet(0.45209, 0.45209, 0.61877, 0.61877, 0.0)


def test_symmetric_uncorrelated_example():
    rb = design_uncorrelated(ChannelSet.from_capacities(0.7, 0.7, 0.5, 0.5, 1.0))
    assert rb.mu1 == pytest.approx(0.5) and rb.mu2 == pytest.approx(0.5)
    assert rb.Rsynd1 == pytest.approx(0.6) and rb.Rsynd2 == pytest.approx(0.6)
    assert rb.R1 == pytest.approx(0.7)
    rb.validate()


def test_asymmetric_uncorrelated_mu():
    rb = design_uncorrelated(ChannelSet.from_capacities(0.8, 0.6, 0.5, 0.4, 1.0))
    assert rb.mu1 == pytest.approx(9 / 17, abs=1e-12)
    assert rb.mu1 / rb.mu2 == pytest.approx(0.6 / 0.8 * 0.3 / 0.2)
    rb.validate()


def test_no_relay_needed():
    with pytest.raises(NoRelayNeeded):
        design_uncorrelated(ChannelSet.from_capacities(0.6, 0.6, 0.6, 0.6, 1.0))


def test_infeasible_syndrome_rate():
    # relay links far better than direct ones push Rsynd below zero
    with pytest.raises(InfeasibleDesign):
        design_uncorrelated(ChannelSet.from_capacities(0.95, 0.95, 0.05, 0.05, 1.0))


def test_uncorrelated_design_hits_closed_form_allocation():
    ch = ChannelSet.from_capacities(0.8, 0.6, 0.5, 0.4, 0.9)
    rb = design_uncorrelated(ch)
    opt = optimal_allocation(ch, 0.0)
    assert rb.alloc.theta1 == pytest.approx(opt.alloc.theta1, abs=1e-12)
    assert rb.alloc.theta2 == pytest.approx(opt.alloc.theta2, abs=1e-12)


def test_correlated_p0_reduces_to_uncorrelated():
    ch = ChannelSet.from_capacities(0.8, 0.6, 0.5, 0.4, 0.9)
    unc = design_uncorrelated(ch)
    cor = design_correlated(DesignSpec(ch, 0.0, punctured=True))
    assert cor.mu1 == unc.mu1
    assert cor.Rtilde1 == pytest.approx(unc.R1, abs=1e-12)
    assert cor.Rtilde2 == pytest.approx(unc.R2, abs=1e-12)
    # syndrome rates agree once expressed per transmitted bit
    assert (1 - cor.Rsynd1) / (1 - cor.R1) == pytest.approx(1 - unc.Rsynd1, abs=1e-12)
    assert (1 - cor.Rsynd2) / (1 - cor.R2) == pytest.approx(1 - unc.Rsynd2, abs=1e-12)


def test_correlated_code_a_row():
    rb = design(DesignSpec(CODE_A_LINKS, 0.3, tie_rs1=0.85))
    t = REFERENCE_RATES["A"]
    assert rb.Rtilde1 == pytest.approx(t["Rtilde1"], abs=1e-4)
    assert rb.Rsynd1 == pytest.approx(t["Rsynd1"], abs=1e-3)
    assert rb.mu1 == pytest.approx(0.5)
    rb.validate(p=0.3)


def test_correlated_degenerate_at_p1():
    with pytest.raises(DegenerateDesign):
        design(DesignSpec(ChannelSet.from_capacities(0.8, 0.8, 0.5, 0.5, 1.0), 1.0))


def test_design_spec_forces_puncturing():
    assert DesignSpec(CODE_A_LINKS, 0.2, punctured=False).punctured


def random_links(rng):
    c_sd = rng.uniform(0.3, 0.6, 2)
    c_sr = c_sd + rng.uniform(0.05, 0.25, 2)
    return ChannelSet.from_capacities(c_sr[0], c_sr[1], c_sd[0], c_sd[1], rng.uniform(0.9, 1))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.1, 0.3]))
def test_design_equalises_relay_bounds(seed, p):
    ch = random_links(np.random.default_rng(seed))
    try:
        rb = design(DesignSpec(ch, p))
    except InfeasibleDesign:
        return
    rb.validate(p=p)
    f = df_rate_bounds(rb.alloc, rb.Rs1, ch, p)
    assert f[0] == pytest.approx(f[1], abs=1e-9)
    assert min(f) == pytest.approx(f[0], abs=1e-9)


def test_fit_code_a_and_b():
    a = fit_degrees(target_from_table(REFERENCE_RATES["A"]), r_max=10, M_base=100)
    e = a.ensemble
    assert (e.l1, e.r1, e.l2, e.r2, e.ls1, e.rs1, e.ls2, e.rs2) == (6, 10, 6, 10, 2, 10, 2, 10)
    assert e.mu1 == Fraction(1, 2)
    b = fit_degrees(target_from_table(REFERENCE_RATES["B"]), r_max=20, M_base=100)
    e = b.ensemble
    assert (e.l1, e.r1, e.l2, e.r2, e.ls1, e.rs1, e.ls2, e.rs2) == (12, 20, 14, 20, 4, 14, 3, 14)
    assert e.M1 * e.ls1 * e.rs2 == e.M2 * e.ls2 * e.rs1
    assert (e.M1, e.M2) == (105, 140)


def test_fit_exact_half_rate():
    target = RateBundle(R1=0.5, R2=0.5, Rsynd1=2 / 3, Rsynd2=2 / 3, mu1=0.5, mu2=0.5)
    fit = fit_degrees(target, r_max=6, M_base=12)
    assert (fit.ensemble.l1, fit.ensemble.r1) == (3, 6)
    assert fit.max_gap() <= 0.02
    assert fit.ensemble.is_aligned()


def test_fit_failure_carries_best():
    target = RateBundle(R1=0.05, R2=0.05, Rsynd1=0.9, Rsynd2=0.9, mu1=0.5, mu2=0.5)
    with pytest.raises(InfeasibleFit) as ei:
        fit_degrees(target, r_max=5, M_base=10)
    assert ei.value.best is not None


def test_fit_argument_checks():
    target = target_from_table(REFERENCE_RATES["A"])
    with pytest.raises(ValueError):
        fit_degrees(target, r_max=3, M_base=100)
    with pytest.raises(ValueError):
        fit_degrees(target, r_max=10, M_base=5)


def test_channel_design_to_degrees_pipeline():
    rb = design(DesignSpec(CODE_A_LINKS, 0.3, tie_rs1=0.85))
    fit = fit_degrees(rb, r_max=10, M_base=100)
    e = fit.ensemble
    assert (e.l1, e.r1, e.ls1, e.rs1) == (6, 10, 2, 10)
    assert punctured_rate(fit.achieved.R1) == pytest.approx(2 / 3)
