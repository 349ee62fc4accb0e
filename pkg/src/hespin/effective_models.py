"""Full versus reduced dynamics: how good is adiabatic elimination?

Two reductions are checked.  The spin-to-distant-vibration bus compares the
driven two-electron Hamiltonian with its static JC reduction; the spin-spin
scheme compares the doubly driven Hamiltonian with the flip-flop coupling.
Curves are turned into scalars by fitting the transfer frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateCouplingError, DomainError
from .hamiltonians import (distant_jc, driven_pair_full, effective_reduced,
                           spin_spin_effective, two_electron_full)
from .hilbert import Ops, SpaceLayout, StateVector, basis_state
from .propagator import EvolutionRequest, StepControl, Trajectory, evolve

DEFAULT_FOCK_DIM = 6
DEFAULT_SAMPLES = 400
REGIME_THRESHOLD = 0.2


def fit_rabi_frequency(times, occupancy) -> tuple[float, float]:
    """Rabi frequency ``w`` of a curve ``P(t) ~ A - B cos(2 w t + phi)``.

    The first minimum of the autocorrelation seeds the search; the
    frequency is then refined by least squares over a sinusoid with free
    offset, amplitude and phase.  Returns ``(w, rms_residual)``; a flat
    curve gives ``(0.0, 0.0)``.
    """
    t = np.asarray(times, dtype=float)
    p = np.asarray(occupancy, dtype=float)
    if np.ptp(p) < 1e-9:
        return 0.0, 0.0
    span = t[-1] - t[0]
    x = p - p.mean()
    n = x.size
    acf = np.correlate(x, x, mode="full")[n - 1:] / np.arange(n, 0, -1)
    dips = np.flatnonzero((acf[1:-1] < acf[:-2]) & (acf[1:-1] <= acf[2:])) + 1
    dips = dips[dips < n - 2]
    if dips.size:
        tau = t[dips[0]] - t[0]
        seed = math.pi / tau
        lo, hi = 0.5 * seed, 1.5 * seed
    else:
        lo, hi = 0.5 * math.pi / span, 8 * math.pi / span

    def cost(nu):
        basis = np.column_stack([np.ones_like(t), np.cos(nu * t), np.sin(nu * t)])
        coef, *_ = np.linalg.lstsq(basis, p, rcond=None)
        return float(np.sum((basis @ coef - p) ** 2))

    grid = np.linspace(lo, hi, 201)
    costs = [cost(nu) for nu in grid]
    k = int(np.argmin(costs))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(cost, bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10 * hi})
    nu = float(res.x)
    return nu / 2.0, math.sqrt(res.fun / n)


@dataclass(frozen=True, eq=False)
class ModelComparison:
    full_trajectory: Trajectory
    effective_trajectory: Trajectory
    observables: dict[str, StateVector]
    full_curves: dict[str, np.ndarray]
    effective_curves: dict[str, np.ndarray]
    max_deviation: dict[str, float]
    fitted_full: float
    fitted_effective: float
    predicted: float
    fit_residual: float
    warnings: list[str] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return self.full_trajectory.times

    @property
    def frequency_ratio(self) -> float:
        return self.fitted_full / self.predicted if self.predicted else math.nan

    @property
    def worst_deviation(self) -> float:
        return max(self.max_deviation.values())

    def peak(self, name: str) -> float:
        return float(self.full_curves[name].max())


def _regime_warnings(omega, omega_tilde, delta, threshold=REGIME_THRESHOLD):
    out = []
    for name, val in (("omega/delta", abs(omega / delta)),
                      ("omega_tilde/delta", abs(omega_tilde / delta))):
        if val >= threshold:
            out.append(f"{name} = {val:.3g} is not small (threshold {threshold})")
    return out


def _compare(full_h, eff_h, initial, observables, t_final, samples, step_control, predicted,
             transfer, warnings):
    times = np.linspace(0.0, t_final, samples)
    full = evolve(EvolutionRequest(full_h, initial, t_final, step_control, times))
    eff = evolve(EvolutionRequest(eff_h, initial, t_final, step_control, times))
    full_curves = {k: full.occupancy(v) for k, v in observables.items()}
    eff_curves = {k: eff.occupancy(v) for k, v in observables.items()}
    dev = {k: float(np.max(np.abs(full_curves[k] - eff_curves[k]))) for k in observables}
    fitted_full, resid = fit_rabi_frequency(times, full_curves[transfer])
    fitted_eff, _ = fit_rabi_frequency(times, eff_curves[transfer])
    return ModelComparison(full, eff, dict(observables), full_curves, eff_curves, dev,
                           fitted_full, fitted_eff, predicted, resid, warnings)


def jc_layout(fock_dim: int = DEFAULT_FOCK_DIM) -> SpaceLayout:
    return SpaceLayout.of(("s1", "spin"), ("a", "fock", fock_dim), ("b", "fock", fock_dim))


def pair_layout(fock_dim: int = DEFAULT_FOCK_DIM) -> SpaceLayout:
    return SpaceLayout.of(("s1", "spin"), ("a", "fock", fock_dim), ("b", "fock", fock_dim),
                          ("s2", "spin"))


def compare_jc_reduction(omega: float, omega_tilde: float, delta: float, delta_ab: float,
                         t_final: float | None = None, fock_dim: int = DEFAULT_FOCK_DIM,
                         samples: int = DEFAULT_SAMPLES,
                         step_control: StepControl = StepControl()) -> ModelComparison:
    """Driven two-electron dynamics against the static bus Hamiltonian.

    Starts from ``|up_1, 0_a, 0_b>`` and tracks it together with
    ``|down_1, 0_a, 1_b>``.  For ``omega == omega_tilde`` the reduced model is
    the pure JC coupling of strength ``omega**2/delta``; otherwise the reduced
    model keeps the two dispersive shifts and the transfer is detuned by
    ``gamma``.  ``t_final`` defaults to one period ``2 pi / omega_prime``.
    """
    if delta != delta_ab:
        raise DomainError("the reduction assumes equal detunings (delta == delta_ab)")
    if delta == 0:
        raise DomainError("delta must be nonzero")
    layout = jc_layout(fock_dim)
    omega_prime = omega * omega_tilde / delta
    full_h = two_electron_full(omega, delta, omega_tilde, delta_ab, layout)
    if omega == omega_tilde:
        eff_h = distant_jc(omega_prime, layout)
        predicted = abs(omega_prime)
    else:
        eff_h = effective_reduced(omega, omega_tilde, delta, layout)
        gamma = (omega ** 2 - omega_tilde ** 2) / delta
        predicted = math.hypot(omega_prime, gamma / 2)
    if t_final is None:
        t_final = 2 * math.pi / abs(omega_prime) if omega_prime else 2 * math.pi / abs(delta)
    obs = {"up1_0_0": basis_state(layout, ["up", 0, 0]),
           "down1_0_1": basis_state(layout, ["down", 0, 1])}
    return _compare(full_h, eff_h, obs["up1_0_0"], obs, t_final, samples, step_control,
                    predicted, "down1_0_1", _regime_warnings(omega, omega_tilde, delta))


def compare_spin_spin_reduction(omega: float, omega_tilde: float, delta: float, g: float,
                                eta: float, t_final: float | None = None,
                                fock_dim: int = DEFAULT_FOCK_DIM, samples: int = DEFAULT_SAMPLES,
                                step_control: StepControl = StepControl()) -> ModelComparison:
    """Doubly driven dynamics against the flip-flop Hamiltonian ``G**2/gamma``.

    Starts from ``|down_1, 0, 0, up_2>`` and tracks ``|up_1, 0, 0, down_2>``.
    ``t_final`` defaults to one flip-flop period ``pi / |G**2/gamma|``.
    """
    if delta == 0:
        raise DomainError("delta must be nonzero")
    gamma = (omega ** 2 - omega_tilde ** 2) / delta
    if gamma == 0:
        raise DegenerateCouplingError("gamma = 0: the flip-flop strength is undefined")
    omega_dprime = g ** 2 / gamma
    layout = pair_layout(fock_dim)
    full_h = driven_pair_full(omega, delta, omega_tilde, g, eta, layout)
    eff_h = spin_spin_effective(omega_dprime, layout)
    if t_final is None:
        t_final = math.pi / abs(omega_dprime) if omega_dprime else 2 * math.pi / abs(gamma)
    warnings = _regime_warnings(omega, omega_tilde, delta)
    if abs(g / gamma) >= REGIME_THRESHOLD:
        warnings.append(f"G/|gamma| = {abs(g / gamma):.3g} is not small")
    obs = {"down1_0_0_up2": basis_state(layout, ["down", 0, 0, "up"]),
           "up1_0_0_down2": basis_state(layout, ["up", 0, 0, "down"])}
    return _compare(full_h, eff_h, obs["down1_0_0_up2"], obs, t_final, samples, step_control,
                    abs(omega_dprime), "up1_0_0_down2", warnings)


@dataclass(frozen=True)
class ConvergenceRow:
    fock_dim: int
    diff_to_next: float      # sup-norm change of every tracked curve to the next dim
    diff_to_finest: float
    max_excited_a: float     # max population of a-levels >= 1
    max_level2_a: float      # max population of a-levels >= 2


def truncation_convergence(experiment: Callable[[int], ModelComparison],
                           fock_dims: Sequence[int]) -> list[ConvergenceRow]:
    """Rerun ``experiment(fock_dim)`` for each truncation and compare curves."""
    dims = list(fock_dims)
    if len(dims) < 2 or sorted(dims) != dims or len(set(dims)) != len(dims):
        raise ValueError("fock_dims must be strictly ascending with at least two entries")
    runs = [experiment(n) for n in dims]

    def diff(r1, r2):
        return max(float(np.max(np.abs(r1.full_curves[k] - r2.full_curves[k])))
                   for k in r1.full_curves)

    rows = []
    for i, (n, run) in enumerate(zip(dims, runs)):
        ops = Ops(run.full_trajectory.layout)
        excited = run.full_trajectory.population(ops.fock_projector("a", range(1, n)))
        level2 = run.full_trajectory.population(ops.fock_projector("a", range(2, n)))
        nxt = diff(run, runs[i + 1]) if i + 1 < len(runs) else 0.0
        rows.append(ConvergenceRow(n, nxt, diff(run, runs[-1]), float(excited.max()),
                                   float(level2.max())))
    return rows
