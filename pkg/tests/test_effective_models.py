import math

import numpy as np
import pytest

from hespin.effective_models import (compare_jc_reduction, compare_spin_spin_reduction,
                                     fit_rabi_frequency, truncation_convergence)
from hespin.errors import DegenerateCouplingError, DomainError

OMEGA_T = 2.5326e7
DELTA = 2.5e8


@pytest.mark.parametrize("periods", [1.0, 2.7, 6.0])
def test_fit_recovers_sinusoid(periods):
    w = 2.0e6
    t = np.linspace(0, periods * math.pi / w, 400)
    p = 0.48 - 0.45 * np.cos(2 * w * t + 0.3)
    fitted, resid = fit_rabi_frequency(t, p)
    assert fitted == pytest.approx(w, rel=1e-6)
    assert resid < 1e-7


def test_fit_flat_curve():
    t = np.linspace(0, 1, 50)
    assert fit_rabi_frequency(t, np.full(50, 0.3)) == (0.0, 0.0)


def test_fit_tolerates_noise():
    rng = np.random.default_rng(7)
    w = 1.0e5
    t = np.linspace(0, 2 * math.pi / w, 400)
    p = np.sin(w * t) ** 2 + rng.normal(0, 0.02, t.size)
    fitted, _ = fit_rabi_frequency(t, p)
    assert fitted == pytest.approx(w, rel=0.01)


@pytest.fixture(scope="module")
def jc_comparison():
    return compare_jc_reduction(OMEGA_T, OMEGA_T, DELTA, DELTA)


def test_effective_curves_are_exact_sinusoids(jc_comparison):
    c = jc_comparison
    wp = OMEGA_T ** 2 / DELTA
    t = c.times
    assert np.allclose(c.effective_curves["down1_0_1"], np.sin(wp * t) ** 2, atol=1e-8)
    assert np.allclose(c.effective_curves["up1_0_0"], np.cos(wp * t) ** 2, atol=1e-8)
    assert c.fitted_effective == pytest.approx(wp, rel=1e-6)


def test_full_model_tracks_reduction(jc_comparison):
    c = jc_comparison
    assert c.peak("down1_0_1") >= 0.9
    assert c.frequency_ratio == pytest.approx(1, abs=0.1)
    assert c.worst_deviation <= 0.15
    assert np.all(c.full_curves["up1_0_0"] + c.full_curves["down1_0_1"] <= 1 + 1e-9)
    assert c.warnings == []


def test_deviation_shrinks_with_detuning(jc_comparison):
    # fixed couplings, larger detuning: the reduction improves
    far = compare_jc_reduction(OMEGA_T, OMEGA_T, 3 * DELTA, 3 * DELTA)
    assert far.worst_deviation * 5 <= jc_comparison.worst_deviation


def test_uncoupled_bus_gives_dispersive_error():
    omega = 2.5e7
    c = compare_jc_reduction(omega, 0.0, DELTA, DELTA)
    # only the e1 mode is virtually populated; the error is ~4 (O/d)^2
    assert c.max_deviation["up1_0_0"] == pytest.approx(4 * (omega / DELTA) ** 2, rel=0.1)


def test_unequal_couplings_are_detuned():
    omega, ot = 1.5e7, 2.5e7
    c = compare_jc_reduction(omega, ot, DELTA, DELTA)
    gamma = (omega ** 2 - ot ** 2) / DELTA
    assert c.predicted == pytest.approx(math.hypot(omega * ot / DELTA, gamma / 2))
    assert c.fitted_effective == pytest.approx(c.predicted, rel=1e-4)


def test_regime_warnings():
    c = compare_jc_reduction(1e8, 1e8, DELTA, DELTA, t_final=2e-8, samples=50)
    assert any("omega/delta" in w for w in c.warnings)


def test_jc_domain_errors():
    with pytest.raises(DomainError):
        compare_jc_reduction(1e7, 1e7, DELTA, 2 * DELTA)
    with pytest.raises(DomainError):
        compare_jc_reduction(1e7, 1e7, 0.0, 0.0)


def test_spin_spin_degenerate_gamma():
    with pytest.raises(DegenerateCouplingError):
        compare_spin_spin_reduction(2e7, 2e7, DELTA, 1e5, 1e3)
    with pytest.raises(DomainError):
        compare_spin_spin_reduction(2e7, 1e7, 0.0, 1e5, 1e3)


def test_spin_spin_short_window_starts_in_initial_state():
    omega, ot = 2.6e6, OMEGA_T
    g, eta = omega * ot / DELTA, omega ** 2 / DELTA
    c = compare_spin_spin_reduction(omega, ot, DELTA, g, eta, t_final=2e-6, samples=20,
                                    fock_dim=3)
    assert c.full_curves["down1_0_0_up2"][0] == pytest.approx(1)
    assert c.full_curves["up1_0_0_down2"][0] == pytest.approx(0)
    assert c.predicted == pytest.approx(abs(g ** 2 / ((omega ** 2 - ot ** 2) / DELTA)))


def test_truncation_convergence_rows():
    rows = truncation_convergence(
        lambda n: compare_jc_reduction(OMEGA_T, OMEGA_T, DELTA, DELTA, fock_dim=n, samples=100),
        [2, 3, 5])
    assert [r.fock_dim for r in rows] == [2, 3, 5]
    assert rows[-1].diff_to_next == 0.0
    assert all(r.diff_to_finest < 1e-6 for r in rows)
    assert rows[1].max_excited_a > 0.01
    assert rows[1].max_level2_a < 1e-12
    with pytest.raises(ValueError):
        truncation_convergence(lambda n: None, [4])
    with pytest.raises(ValueError):
        truncation_convergence(lambda n: None, [6, 4])
