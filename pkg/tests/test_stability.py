import numpy as np
import pytest

from oxydyn.equilibria import Stability, coexistence_equilibria
from oxydyn.errors import BracketError, ConfigError
from oxydyn.model import ModelParams, eval_jacobian
from oxydyn.stability import (AttractorKind, CharPoly, ThresholdKind,
                              attractor_classify, bifurcation_diagram,
                              char_poly, criticality_probe, hopf_threshold,
                              routh_hurwitz_stable, saddle_node_threshold,
                              Criticality)


def test_char_poly_matches_numpy():
    rng = np.random.default_rng(17)
    p = ModelParams(mu1=0.1, mu2=0.3)
    for _ in range(20):
        s = rng.uniform(0.1, 4.0, 3)
        J = eval_jacobian(p, s)
        cp = char_poly(J)
        ref = np.poly(J.m)
        assert cp.p2 == pytest.approx(ref[1], rel=1e-10, abs=1e-12)
        assert cp.p1 == pytest.approx(ref[2], rel=1e-10, abs=1e-12)
        assert cp.p0 == pytest.approx(ref[3], rel=1e-10, abs=1e-12)


def test_routh_hurwitz_agrees_with_eigenvalues():
    rng = np.random.default_rng(19)
    for _ in range(300):
        m = rng.normal(size=(3, 3))
        coef = np.poly(m)
        cp = CharPoly(p2=coef[1], p1=coef[2], p0=coef[3])
        stable = bool(np.all(np.linalg.eigvals(m).real < -1e-9))
        if stable:
            assert routh_hurwitz_stable(cp)


def test_routh_hurwitz_rejects_unstable():
    # one positive real root: lambda^3 - lambda = (l-1) l (l+1)
    assert not routh_hurwitz_stable(CharPoly(p2=0.0, p1=-1.0, p0=0.0))
    # pure conjugate pair on the axis is not strictly stable
    assert not routh_hurwitz_stable(CharPoly(p2=1.0, p1=1.0, p0=1.0))


def test_hopf_threshold_quadratic_mortality():
    value = hopf_threshold(ModelParams(), "mu2", (0.3, 0.5))
    assert value == pytest.approx(0.408768, abs=2e-4)
    # stability flips across the located value on the large branch
    below = coexistence_equilibria(ModelParams(mu2=value - 0.01))[-1]
    above = coexistence_equilibria(ModelParams(mu2=value + 0.01))[-1]
    assert below.stability is not Stability.STABLE
    assert above.stability is Stability.STABLE


def test_hopf_threshold_linear_mortality():
    value = hopf_threshold(ModelParams(), "mu1", (0.3, 0.5))
    assert value == pytest.approx(0.397996, abs=2e-4)


def test_hopf_threshold_needs_sign_change():
    with pytest.raises(BracketError):
        hopf_threshold(ModelParams(), "mu2", (0.5, 0.7))


def test_hopf_threshold_rejects_bad_inputs():
    with pytest.raises(ConfigError):
        hopf_threshold(ModelParams(), "mu2", (0.5, 0.3))
    with pytest.raises(ConfigError):
        hopf_threshold(ModelParams(), "sigma", (0.3, 0.5))


def test_saddle_node_threshold():
    value = saddle_node_threshold(ModelParams(mu1=0.0), "mu2",
                                  (0.005, 0.45))
    assert value == pytest.approx(0.018609, abs=2e-4)
    assert len(coexistence_equilibria(ModelParams(mu2=value + 0.002))) == 2
    assert len(coexistence_equilibria(ModelParams(mu2=value - 0.002))) == 0


def test_saddle_node_requires_count_change():
    with pytest.raises(BracketError):
        saddle_node_threshold(ModelParams(mu1=0.05), "mu2", (0.05, 1.0))


def test_attractor_steady_state():
    p = ModelParams(mu1=0.0, mu2=0.6)
    eq = coexistence_equilibria(p)[-1].location.as_array()
    out = attractor_classify(p, eq + np.array([1e-2, 0.0, 0.0]),
                             t_transient=800.0, t_window=500.0)
    assert out.kind is AttractorKind.STEADY_STATE
    assert out.c_mean == pytest.approx(eq[0], abs=1e-3)


def test_attractor_limit_cycle():
    # just below the supercritical threshold near 0.354 a stable small
    # cycle surrounds the equilibrium
    p = ModelParams(mu1=0.05, mu2=0.354)
    eq = coexistence_equilibria(p)[-1].location.as_array()
    out = attractor_classify(p, eq + np.array([1e-3, 0.0, 0.0]),
                             t_transient=2000.0, t_window=1000.0)
    assert out.kind is AttractorKind.LIMIT_CYCLE
    assert out.c_max > out.c_min
    assert out.period is not None and out.period > 0


def test_attractor_extinction():
    p = ModelParams(mu1=0.3, mu2=0.09917, eps=0.5)
    out = attractor_classify(p, (1.0, 1.0, 0.5),
                             t_transient=2000.0, t_window=1000.0)
    assert out.kind is AttractorKind.EXTINCTION


def test_attractor_rejects_short_windows():
    with pytest.raises(ConfigError):
        attractor_classify(ModelParams(mu2=0.5), (1, 1, 1),
                           t_transient=100.0, t_window=1000.0)


def test_criticality_supercritical():
    thr = 0.397996
    out = criticality_probe(ModelParams(), "mu1", thr)
    assert out.verdict is Criticality.SUPERCRITICAL
    assert out.evidence["unstable_verdict"] == "small_cycle"
    assert out.evidence["stable_decays"]


def test_criticality_subcritical():
    thr = 0.408768
    out = criticality_probe(ModelParams(), "mu2", thr)
    assert out.verdict is Criticality.SUBCRITICAL
    assert out.evidence["unstable_verdict"] == "escape"
    assert out.evidence["stable_decays"]
    assert "stable_large_disp" in out.evidence


def test_diagram_detects_hopf_crossing():
    diag = bifurcation_diagram(ModelParams(), "mu2", (0.36, 0.46), 6,
                               t_transient=2000.0, t_window=1000.0)
    assert len(diag.samples) == 6
    assert all(s.error is None for s in diag.samples)
    kinds = {k for _, k in diag.thresholds}
    assert ThresholdKind.HOPF in kinds
    hopf_at = [v for v, k in diag.thresholds if k is ThresholdKind.HOPF]
    assert any(abs(v - 0.4088) < 0.05 for v in hopf_at)


def test_diagram_samples_carry_equilibria_and_attractors():
    diag = bifurcation_diagram(ModelParams(), "mu2", (0.44, 0.46), 2,
                               t_transient=800.0, t_window=500.0)
    for s in diag.samples:
        kinds = [r.kind.value for r in s.equilibria]
        assert "Extinction" in kinds
        assert "Coexistence" in kinds
        assert s.near is not None
        assert s.far is not None


def test_diagram_rejects_bad_range():
    with pytest.raises(ConfigError):
        bifurcation_diagram(ModelParams(), "mu2", (0.5, 0.3), 4)
    with pytest.raises(ConfigError):
        bifurcation_diagram(ModelParams(), "mu2", (0.3, 0.5), 1)
