import math

import numpy as np
import pytest
from scipy.linalg import expm

from hespin.errors import IntegrationError
from hespin.hamiltonians import distant_jc, single_electron_jc, two_electron_full
from hespin.hilbert import SpaceLayout, StateVector, basis_state
from hespin.propagator import (EvolutionRequest, StepControl, converged_oracle, evolve,
                               invariant_blocks, oracle_piecewise_expm, propagator_matrix,
                               unitarity_defect)


@pytest.fixture
def jc_layout():
    return SpaceLayout.of(("s", "spin"), ("n", "fock", 5))


@pytest.fixture
def bus_layout():
    return SpaceLayout.of(("s1", "spin"), ("a", "fock", 4), ("b", "fock", 4))


def test_static_matches_expm(jc_layout):
    ham = single_electron_jc(3e6, 0.0, jc_layout, "s", "n")
    t = 1.7e-6
    u = propagator_matrix(ham, t)
    assert np.linalg.norm(u.entries - expm(-1j * ham.matrix(0.0) * t), 2) < 1e-7


def test_driven_matches_oracle(bus_layout):
    ham = two_electron_full(2e7, 2.5e8, 2e7, 2.5e8, bus_layout)
    t = 1.5e-7
    oracle, _ = converged_oracle(ham, t, tol=1e-9)
    u = propagator_matrix(ham, t)
    assert np.linalg.norm(u.entries - oracle.entries, 2) < 1e-6


def test_oracle_orders_agree(jc_layout):
    ham = single_electron_jc(3e6, 5e7, jc_layout, "s", "n")
    t = 3e-7
    second = oracle_piecewise_expm(ham, t, 4096, order=2)
    fourth = oracle_piecewise_expm(ham, t, 256, order=4)
    assert np.linalg.norm(second.entries - fourth.entries, 2) < 1e-6
    with pytest.raises(ValueError):
        oracle_piecewise_expm(ham, t, 0)
    with pytest.raises(ValueError):
        oracle_piecewise_expm(ham, t, 4, order=3)


def test_fourth_order_convergence(jc_layout):
    ham = single_electron_jc(3e6, 5e7, jc_layout, "s", "n")
    t = 2e-7
    us = [propagator_matrix(ham, t, StepControl(dt=t / (400 * 2 ** k)), norm_tolerance=1).entries
          for k in range(3)]
    order = math.log2(np.linalg.norm(us[0] - us[1], 2) / np.linalg.norm(us[1] - us[2], 2))
    assert order == pytest.approx(4, abs=0.05)


def test_time_reversal_returns_initial_state(bus_layout):
    ham = two_electron_full(2e7, 2.5e8, 2.5e7, 2.5e8, bus_layout)
    psi0 = basis_state(bus_layout, ["up", 0, 0])
    t = 5e-7
    fwd = evolve(EvolutionRequest(ham, psi0, t))
    back = evolve(EvolutionRequest(ham.time_reversed(t), fwd.final, t))
    assert np.allclose(back.final.amplitudes, psi0.amplitudes, atol=1e-7)


def test_samples_are_step_aligned(jc_layout):
    ham = single_electron_jc(3e6, 1e8, jc_layout, "s", "n")
    psi0 = basis_state(jc_layout, ["up", 0])
    times = np.array([0.0, 1.234e-7, 5e-7])
    ctl = StepControl(dt=1e-9)
    run = evolve(EvolutionRequest(ham, psi0, 5e-7, ctl, times))
    single = evolve(EvolutionRequest(ham, psi0, 1.234e-7, ctl, np.array([1.234e-7])))
    assert np.allclose(run.amplitudes[0], psi0.amplitudes)
    assert np.allclose(run.amplitudes[1], single.final.amplitudes, atol=1e-14)


def test_restriction_is_exact(bus_layout):
    ham = two_electron_full(2e7, 2.5e8, 2.5e7, 2.5e8, bus_layout)
    psi0 = basis_state(bus_layout, ["up", 0, 0])
    a = evolve(EvolutionRequest(ham, psi0, 3e-7, restrict=True))
    b = evolve(EvolutionRequest(ham, psi0, 3e-7, restrict=False))
    assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-12)
    ua = propagator_matrix(ham, 1e-7, restrict=True).entries
    ub = propagator_matrix(ham, 1e-7, restrict=False).entries
    assert np.allclose(ua, ub, atol=1e-12)


def test_invariant_blocks_follow_excitation_number(bus_layout):
    ham = two_electron_full(2e7, 2.5e8, 2.5e7, 2.5e8, bus_layout)
    blocks = invariant_blocks(ham)
    assert sum(b.size for b in blocks) == bus_layout.total_dim
    ground = bus_layout.index(["down", 0, 0])
    assert [ground] in [b.tolist() for b in blocks]


def test_norm_drift_tracked(jc_layout):
    ham = distant_jc(3e6, jc_layout, "s", "n")
    psi0 = basis_state(jc_layout, ["up", 2])
    run = evolve(EvolutionRequest(ham, psi0, 2e-6))
    assert run.norm_drift < 1e-9
    assert unitarity_defect(propagator_matrix(ham, 2e-6)) < 1e-9


def test_coarse_steps_raise(jc_layout):
    ham = distant_jc(3e6, jc_layout, "s", "n")
    psi0 = basis_state(jc_layout, ["up", 2])
    with pytest.raises(IntegrationError):
        evolve(EvolutionRequest(ham, psi0, 2e-6, StepControl(dt=1e-7)))


def test_moderate_drift_warns(jc_layout):
    ham = distant_jc(3e6, jc_layout, "s", "n")
    psi0 = basis_state(jc_layout, ["up", 2])
    with pytest.warns(RuntimeWarning):
        evolve(EvolutionRequest(ham, psi0, 2e-6, StepControl(points_per_period=40),
                                norm_tolerance=5e-8))


def test_tolerance_mode_tightens_step(jc_layout):
    ham = single_electron_jc(3e6, 1e8, jc_layout, "s", "n")
    loose = StepControl().step_for(ham, 1e-6)
    tight = StepControl(tolerance=1e-16).step_for(ham, 1e-6)
    assert tight < loose


def test_request_validation(jc_layout):
    ham = distant_jc(3e6, jc_layout, "s", "n")
    psi0 = basis_state(jc_layout, ["up", 0])
    with pytest.raises(ValueError):
        EvolutionRequest(ham, psi0, -1.0)
    with pytest.raises(ValueError):
        EvolutionRequest(ham, psi0, 1e-6, sample_times=np.array([2e-6]))
    other = SpaceLayout.of(("s", "spin"), ("n", "fock", 3))
    with pytest.raises(ValueError):
        EvolutionRequest(ham, basis_state(other, ["up", 0]), 1e-6)
    with pytest.raises(IntegrationError):
        StepControl(dt=-1.0).step_for(ham, 1e-6)
    with pytest.raises(IntegrationError):
        evolve(EvolutionRequest(ham, psi0, 1.0, StepControl(dt=1e-14)))


def test_zero_hamiltonian_is_identity(jc_layout):
    ham = distant_jc(0.0, jc_layout, "s", "n")
    psi0 = StateVector(jc_layout, np.ones(10), normalize=True)
    run = evolve(EvolutionRequest(ham, psi0, 1e-6))
    assert np.allclose(run.final.amplitudes, psi0.amplitudes)
