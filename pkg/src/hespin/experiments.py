"""Named experiment recipes that bind a device to a simulation.

Every runner returns a :class:`ResultTable`: equal-length columns plus a
metadata dict holding the resolved configuration, the package version and
the numerical tolerances, so that a table is enough to rerun it.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ._version import __version__
from .device import (DeviceParams, bus_couplings, driven_pair_couplings, regime_check,
                     single_electron_couplings, trap_frequency)
from .effective_models import (DEFAULT_FOCK_DIM, DEFAULT_SAMPLES, ModelComparison,
                               compare_jc_reduction, compare_spin_spin_reduction)
from .errors import DegenerateCouplingError, DomainError
from .gates import (GATE_STEPS, GateReport, phase_gate_duration, simulate_phase_gate,
                    single_electron_cnot, two_spin_cnot)
from .propagator import NORM_TOLERANCE, StepControl

EXPERIMENTS = ("params_table", "fig3", "fig4", "phase_gate", "cnot_single",
               "cnot_two_spin", "sweep")
MODELS = ("full", "effective", "both")
SWEEP_METRICS = ("couplings", "max_deviation", "fidelity")
DEVICE_FIELDS = tuple(f.name for f in dataclasses.fields(DeviceParams))


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run.  ``None`` fields take the documented per-experiment default."""

    name: str
    device: DeviceParams = field(default_factory=DeviceParams)
    model: str = "both"
    initial_state: tuple = ()
    t_final: float | None = None
    samples: int = DEFAULT_SAMPLES
    outputs: tuple[str, ...] = ()
    fock_dim: int = DEFAULT_FOCK_DIM
    omega: float | None = None
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()
    sweep_metric: str = "couplings"

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise DomainError(f"unknown experiment {self.name!r}; expected one of {EXPERIMENTS}")
        if self.model not in MODELS:
            raise DomainError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.samples < 2:
            raise DomainError("samples must be at least 2")
        if self.fock_dim < 2:
            raise DomainError("fock_dim must be at least 2")
        if self.t_final is not None and not self.t_final > 0:
            raise DomainError("t_final must be positive")
        if self.name == "sweep":
            if self.sweep_param not in DEVICE_FIELDS:
                raise DomainError(f"sweep_param must be a device field, got {self.sweep_param!r}")
            if not self.sweep_values:
                raise DomainError("sweep_values must not be empty")
            if self.sweep_metric not in SWEEP_METRICS:
                raise DomainError(f"sweep_metric must be one of {SWEEP_METRICS}")


@dataclass(eq=False)
class ResultTable:
    """Ordered, equal-length columns plus metadata.

    ``payload`` carries the live result object (comparison or gate report)
    and is not part of the serialised table.
    """

    columns: dict[str, list]
    metadata: dict[str, Any]
    payload: Any = None

    def __post_init__(self):
        self.columns = {k: list(v) for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"column lengths differ: { {k: len(v) for k, v in self.columns.items()} }")

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    @property
    def header(self) -> list[str]:
        return list(self.columns)

    def rows(self) -> list[list]:
        return [list(r) for r in zip(*self.columns.values())]

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name])

    def where(self, name: str, value) -> ResultTable:
        keep = [i for i, v in enumerate(self.columns[name]) if v == value]
        return ResultTable({k: [v[i] for i in keep] for k, v in self.columns.items()},
                           dict(self.metadata), self.payload)


def _tolerances(step_control: StepControl = StepControl()) -> dict:
    return {"norm_tolerance": NORM_TOLERANCE,
            "points_per_period": step_control.points_per_period,
            "step_dt": step_control.dt, "step_tolerance": step_control.tolerance,
            "gate_step_tolerance": GATE_STEPS.tolerance}


def _metadata(spec: ExperimentSpec, resolved: dict, summary: dict | None = None) -> dict:
    return {
        "experiment": spec.name,
        "version": __version__,
        "config": {"device": dataclasses.asdict(spec.device),
                   "experiment": {k: v for k, v in dataclasses.asdict(spec).items()
                                  if k != "device"}},
        "resolved": resolved,
        "tolerances": _tolerances(),
        "summary": summary or {},
    }


def coupling_row(device: DeviceParams) -> dict[str, Any]:
    """All derived couplings of a device, one value per key (rad/s)."""
    single = single_electron_couplings(device)
    bus = bus_couplings(device)
    pair = driven_pair_couplings(device)
    row = {
        "omega_rad_per_s": single.omega,
        "omega_tilde_rad_per_s": pair.omega_tilde,
        "omega_prime_rad_per_s": bus.omega_prime,
        "drive_omega_rad_per_s": pair.omega,
        "g_rad_per_s": pair.g,
        "gamma_rad_per_s": pair.gamma,
        "omega_dprime_rad_per_s": pair.omega_dprime,
        "eta_rad_per_s": pair.eta,
        "delta_rad_per_s": device.delta,
        "nu_s_rad_per_s": pair.nu_s,
        "trap_frequency_rad_per_s": (trap_frequency(device.trap_charge, device.trap_depth)
                                     if device.trap_charge and device.trap_depth else None),
    }
    for flag in regime_check(device, pair).flags:
        row[f"{flag.name}"] = flag.value
        row[f"{flag.name}_ok"] = flag.passed
    return row


def run_params_table(device: DeviceParams, spec: ExperimentSpec | None = None) -> ResultTable:
    """One row with every derived coupling and the regime flags.

    ``omega`` is set by the electrode current, ``omega_prime`` is the bus
    strength at ``omega = omega_tilde`` and the spin-spin quantities use
    ``drive_omega``.
    """
    spec = spec or ExperimentSpec("params_table", device)
    row = coupling_row(device)
    return ResultTable({k: [v] for k, v in row.items()}, _metadata(spec, {}))


def _require_regime(device, couplings, names):
    report = regime_check(device, couplings)
    bad = [f for f in report.failures() if f.split(":")[0] in names]
    if bad:
        raise DomainError("regime check failed: " + "; ".join(bad))


def _series_table(spec, comparison: ModelComparison, prefix_map, model, resolved, summary):
    times = comparison.times
    cols: dict[str, list] = {"time_s": []}
    for col in prefix_map.values():
        cols[col] = []
    cols["model"] = []
    chosen = ("full", "effective") if model == "both" else (model,)
    for name in chosen:
        curves = comparison.full_curves if name == "full" else comparison.effective_curves
        cols["time_s"].extend(times.tolist())
        for obs, col in prefix_map.items():
            cols[col].extend(np.clip(curves[obs], 0.0, 1.0).tolist())
        cols["model"].extend([name] * times.size)
    return ResultTable(cols, _metadata(spec, resolved, summary), comparison)


def _comparison_summary(c: ModelComparison, transfer: str) -> dict:
    return {
        "peak_transfer": c.peak(transfer),
        "fitted_frequency_full_rad_per_s": c.fitted_full,
        "fitted_frequency_effective_rad_per_s": c.fitted_effective,
        "predicted_frequency_rad_per_s": c.predicted,
        "frequency_ratio": c.frequency_ratio,
        "fit_rms_residual": c.fit_residual,
        "max_deviation": dict(c.max_deviation),
        "norm_drift_full": c.full_trajectory.norm_drift,
        "norm_drift_effective": c.effective_trajectory.norm_drift,
        "steps_full": c.full_trajectory.steps,
        "warnings": list(c.warnings),
    }


def run_fig3(device: DeviceParams, t_final: float | None = None, samples: int = DEFAULT_SAMPLES,
             fock_dim: int = DEFAULT_FOCK_DIM, model: str = "both", omega: float | None = None,
             spec: ExperimentSpec | None = None) -> ResultTable:
    """Spin-to-distant-vibration transfer, driven model against the JC reduction.

    ``omega`` defaults to ``omega_tilde`` and ``t_final`` to ``2 pi / omega_prime``.
    Long format: one block of ``samples`` rows per model.
    """
    spec = spec or ExperimentSpec("fig3", device, model=model, t_final=t_final, samples=samples,
                                  fock_dim=fock_dim, omega=omega)
    c = bus_couplings(device, omega=omega)
    _require_regime(device, c, ("omega_over_delta", "omega_tilde_over_delta"))
    if t_final is None and c.omega_prime == 0:
        raise DomainError("omega_prime = 0: no transfer period to default to")
    t = t_final if t_final is not None else 2 * math.pi / abs(c.omega_prime)
    comp = compare_jc_reduction(c.omega, c.omega_tilde, device.delta, device.delta_ab, t,
                                fock_dim, samples)
    resolved = {"omega": c.omega, "omega_tilde": c.omega_tilde, "omega_prime": c.omega_prime,
                "t_final": t, "samples": samples, "fock_dim": fock_dim, "model": model,
                "initial_state": "up1_0_0"}
    cols = {"up1_0_0": "occ_up1_0_0", "down1_0_1": "occ_down1_0_1"}
    return _series_table(spec, comp, cols, model, resolved, _comparison_summary(comp, "down1_0_1"))


def run_fig4(device: DeviceParams, t_final: float | None = None, samples: int = DEFAULT_SAMPLES,
             fock_dim: int = DEFAULT_FOCK_DIM, model: str = "both",
             spec: ExperimentSpec | None = None) -> ResultTable:
    """Flip-flop between the two spins, doubly driven model against ``O''``.

    ``t_final`` defaults to one flip-flop period ``pi / |omega_dprime|``.
    """
    spec = spec or ExperimentSpec("fig4", device, model=model, t_final=t_final, samples=samples,
                                  fock_dim=fock_dim)
    c = driven_pair_couplings(device)
    if c.degenerate:
        raise DegenerateCouplingError("gamma = 0: drive_omega equals omega_tilde")
    _require_regime(device, c, ("omega_over_delta", "omega_tilde_over_delta", "g_over_gamma"))
    t = t_final if t_final is not None else math.pi / abs(c.omega_dprime)
    comp = compare_spin_spin_reduction(c.omega, c.omega_tilde, device.delta, c.g, c.eta, t,
                                       fock_dim, samples)
    resolved = {"omega": c.omega, "omega_tilde": c.omega_tilde, "g": c.g, "gamma": c.gamma,
                "eta": c.eta, "omega_dprime": c.omega_dprime, "t_final": t,
                "samples": samples, "fock_dim": fock_dim, "model": model,
                "initial_state": "down1_0_0_up2"}
    cols = {"down1_0_0_up2": "occ_down1_0_0_up2", "up1_0_0_down2": "occ_up1_0_0_down2"}
    return _series_table(spec, comp, cols, model, resolved,
                         _comparison_summary(comp, "up1_0_0_down2"))


def _gate_table(spec, reports: Sequence[tuple[str, GateReport]], resolved) -> ResultTable:
    cols: dict[str, list] = {k: [] for k in ("gate", "model", "fidelity", "truth_table_fidelity",
                                            "leakage", "unitarity_defect", "global_phase_rad")}
    for model, rep in reports:
        cols["gate"].append(rep.name)
        cols["model"].append(model)
        cols["fidelity"].append(rep.fidelity)
        cols["truth_table_fidelity"].append(rep.truth_table_fidelity)
        cols["leakage"].append(rep.leakage)
        cols["unitarity_defect"].append(rep.unitarity_defect)
        cols["global_phase_rad"].append(rep.global_phase)
    details = {model: {k: v for k, v in rep.details.items() if np.isscalar(v) or v is None}
               for model, rep in reports}
    payload = [rep for _, rep in reports]
    return ResultTable(cols, _metadata(spec, resolved, {"details": details}),
                       payload[0] if len(payload) == 1 else payload)


def run_phase_gate(device: DeviceParams, fock_dim: int = DEFAULT_FOCK_DIM,
                   spec: ExperimentSpec | None = None) -> ResultTable:
    """Resonant JC pulse of duration ``Omega t ~ 37.7`` on spin and vibration."""
    spec = spec or ExperimentSpec("phase_gate", device, model="full", fock_dim=fock_dim)
    omega = single_electron_couplings(device).omega
    if omega == 0:
        raise DomainError("omega = 0: no spin-vibration coupling to drive the gate")
    t, resid = phase_gate_duration(omega)
    rep = simulate_phase_gate(omega, t, fock_dim)
    return _gate_table(spec, [("jc", rep)], {"omega": omega, "duration_s": t, "omega_t": omega * t,
                                             "duration_residual": resid, "fock_dim": fock_dim})


def run_cnot_single(device: DeviceParams, fock_dim: int = DEFAULT_FOCK_DIM,
                    spec: ExperimentSpec | None = None) -> ResultTable:
    spec = spec or ExperimentSpec("cnot_single", device, model="full", fock_dim=fock_dim)
    omega = single_electron_couplings(device).omega
    if omega == 0:
        raise DomainError("omega = 0: no spin-vibration coupling to drive the gate")
    _, rep = single_electron_cnot(omega, fock_dim)
    return _gate_table(spec, [("jc", rep)], {"omega": omega, "fock_dim": fock_dim})


def run_cnot_two_spin(device: DeviceParams, fock_dim: int = DEFAULT_FOCK_DIM,
                      model: str = "effective", spec: ExperimentSpec | None = None) -> ResultTable:
    """Two-spin CNOT; ``model`` picks reduced bus pulses, driven ones, or both."""
    spec = spec or ExperimentSpec("cnot_two_spin", device, model=model, fock_dim=fock_dim)
    bus = bus_couplings(device)
    local = single_electron_couplings(device).omega
    if local == 0 or bus.omega_prime == 0:
        raise DomainError("both the local and the bus coupling must be nonzero")
    chosen = ("effective", "full") if model == "both" else (model,)
    reports = []
    for name in chosen:
        full_model = (bus.omega, bus.omega_tilde, device.delta) if name == "full" else None
        _, rep = two_spin_cnot(bus.omega_prime, local, fock_dim, full_model)
        reports.append((name, rep))
    return _gate_table(spec, reports, {"omega_prime": bus.omega_prime, "omega_local": local,
                                       "fock_dim": fock_dim, "model": model})


def _sweep_metric(device: DeviceParams, metric: str, fock_dim: int, samples: int) -> dict:
    if metric == "couplings":
        return coupling_row(device)
    if metric == "max_deviation":
        c = bus_couplings(device)
        t = 2 * math.pi / abs(c.omega_prime)
        comp = compare_jc_reduction(c.omega, c.omega_tilde, device.delta, device.delta_ab, t,
                                    fock_dim, samples)
        return {"max_deviation": comp.worst_deviation, "frequency_ratio": comp.frequency_ratio,
                "peak_transfer": comp.peak("down1_0_1")}
    omega = single_electron_couplings(device).omega
    bus = bus_couplings(device)
    t, _ = phase_gate_duration(omega)
    return {"phase_gate_fidelity": simulate_phase_gate(omega, t, fock_dim).fidelity,
            "cnot_single_truth_table_fidelity":
                single_electron_cnot(omega, fock_dim)[1].truth_table_fidelity,
            "cnot_two_spin_fidelity": two_spin_cnot(bus.omega_prime, omega, fock_dim)[1].fidelity}


def run_sweep(base_device: DeviceParams, swept_param: str, values: Sequence[float],
              metric: str = "couplings", fock_dim: int = DEFAULT_FOCK_DIM,
              samples: int = DEFAULT_SAMPLES, spec: ExperimentSpec | None = None) -> ResultTable:
    """One row per value of ``swept_param`` with everything else fixed.

    A failing row keeps NaN metrics and its message in the ``error`` column.
    Sweeping ``delta`` moves ``delta_ab`` along when the two start equal.
    """
    spec = spec or ExperimentSpec("sweep", base_device, fock_dim=fock_dim, samples=samples,
                                  sweep_param=swept_param, sweep_values=tuple(values),
                                  sweep_metric=metric)
    results, keys = [], []
    for value in values:
        try:
            changes = {swept_param: value}
            if swept_param == "delta" and base_device.delta_ab == base_device.delta:
                changes["delta_ab"] = value  # keep tied detunings tied
            device = dataclasses.replace(base_device, **changes)
            row, err = _sweep_metric(device, metric, fock_dim, samples), ""
        except (DomainError, ArithmeticError, RuntimeError) as exc:
            row, err = {}, f"{type(exc).__name__}: {exc}"
        results.append((value, row, err))
        keys.extend(k for k in row if k not in keys)
    cols: dict[str, list] = {swept_param: [v for v, _, _ in results]}
    for k in keys:
        cols[k] = [row.get(k, math.nan) if not err else math.nan for _, row, err in results]
    cols["error"] = [err for _, _, err in results]
    resolved = {"swept_param": swept_param, "values": list(values), "metric": metric,
                "fock_dim": fock_dim, "samples": samples}
    return ResultTable(cols, _metadata(spec, resolved))


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    """Dispatch a spec to its runner."""
    d = spec.device
    if spec.name == "params_table":
        return run_params_table(d, spec)
    if spec.name == "fig3":
        return run_fig3(d, spec.t_final, spec.samples, spec.fock_dim, spec.model, spec.omega, spec)
    if spec.name == "fig4":
        return run_fig4(d, spec.t_final, spec.samples, spec.fock_dim, spec.model, spec)
    if spec.name == "phase_gate":
        return run_phase_gate(d, spec.fock_dim, spec)
    if spec.name == "cnot_single":
        return run_cnot_single(d, spec.fock_dim, spec)
    if spec.name == "cnot_two_spin":
        return run_cnot_two_spin(d, spec.fock_dim, spec.model, spec)
    return run_sweep(d, spec.sweep_param, spec.sweep_values, spec.sweep_metric,
                     spec.fock_dim, spec.samples, spec)
