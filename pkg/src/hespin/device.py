"""Physical constants and closed-form device quantities.

Everything here is SI.  Formulas that are customarily written in Gaussian
form (image potential, trap frequency, Rydberg constant) are evaluated with
``e**2 -> e**2 / (4 pi eps0)``.

Frequencies quoted as "MHz" or "GHz" for this device are read as *angular*
frequencies with the same mantissa: ``nu_x = 10 GHz`` becomes ``1e10 rad/s``.
That is the only reading under which the spin-orbit strength for
``I = 1 mA, h = 0.5 um`` lands at 5.2e6.  Use :func:`cyclic_reading` to show
the alternative interpretation next to a value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import scipy.constants as sc

from .errors import DegenerateCouplingError, DomainError


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA constants plus the two material numbers used by the device."""

    electron_mass: float = sc.m_e
    elementary_charge: float = sc.e
    hbar: float = sc.hbar
    bohr_magneton: float = sc.physical_constants["Bohr magneton"][0]
    vacuum_permeability: float = sc.mu_0
    vacuum_permittivity: float = sc.epsilon_0
    boltzmann: float = sc.k
    g_factor: float = 2.0
    helium_dielectric: float = 1.057

    def __post_init__(self):
        for name in ("electron_mass", "elementary_charge", "hbar", "bohr_magneton",
                     "vacuum_permeability", "vacuum_permittivity", "boltzmann",
                     "g_factor", "helium_dielectric"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive")

    @property
    def coulomb_e2(self) -> float:
        """``e**2 / (4 pi eps0)`` in J*m."""
        return self.elementary_charge ** 2 / (4 * math.pi * self.vacuum_permittivity)


SI = PhysicalConstants()


@dataclass(frozen=True)
class DeviceParams:
    """Geometry, drive and detunings of the two-trap device.

    Lengths in metres, currents in amperes, fields in tesla, frequencies in
    rad/s.  ``trap_charge``/``trap_depth`` are optional: the vibrational
    frequencies are given directly and ``Q, H`` only feed the reported
    :func:`trap_frequency`.  ``eta`` defaults to ``drive_omega**2 / delta``
    and ``drive_omega`` (the e1 coupling used by the doubly driven scheme)
    defaults to the value implied by ``current``.
    """

    wire_height: float = 0.5e-6
    current: float = 1e-3
    static_field: float = 0.06
    distance: float = 10e-6
    nu_1x: float = 1e10
    nu_2x: float = 1e10
    delta: float = 250e6
    delta_ab: float = 250e6
    eta: float | None = None
    drive_omega: float | None = 2.6e6
    temperature: float = 0.020
    trap_charge: float | None = None
    trap_depth: float | None = None

    def __post_init__(self):
        for name in ("wire_height", "distance", "nu_1x", "nu_2x", "temperature"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("current", "static_field"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        for name in ("trap_charge", "trap_depth", "drive_omega"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise DomainError(f"{name} must be positive when given")
        if self.delta == 0:
            raise DomainError("delta must be nonzero")


@dataclass(frozen=True)
class DerivedCouplings:
    """Coupling strengths of one operating point (all rad/s).

    ``omega_dprime`` is ``None`` when ``gamma == 0``; :attr:`degenerate`
    flags that case and :meth:`spin_spin` raises for it.
    """

    omega: float
    omega_tilde: float
    delta: float
    omega_prime: float
    g: float
    gamma: float
    omega_dprime: float | None
    eta: float
    nu_s: float | None = None

    @property
    def degenerate(self) -> bool:
        return self.gamma == 0.0

    def spin_spin(self) -> float:
        if self.omega_dprime is None:
            raise DegenerateCouplingError(
                "gamma = 0 (omega == omega_tilde); spin-spin strength undefined")
        return self.omega_dprime


def rydberg_and_bohr(constants: PhysicalConstants = SI) -> tuple[float, float]:
    """Effective Rydberg frequency (rad/s) and Bohr radius (m) above helium.

    The image-charge strength is ``Lambda = (eps - 1) / (4 (eps + 1))``.
    ``R`` is returned as ``Lambda**2 e**4 m_e / (2 hbar**3)`` so that the
    level energies are ``-hbar R / n**2``.
    """
    eps = constants.helium_dielectric
    if eps <= 1:
        raise DomainError(f"dielectric constant must exceed 1, got {eps}")
    lam = (eps - 1) / (4 * (eps + 1))
    e2 = constants.coulomb_e2
    hbar = constants.hbar
    me = constants.electron_mass
    rydberg = lam ** 2 * e2 ** 2 * me / (2 * hbar ** 3)
    bohr = hbar ** 2 / (me * e2 * lam)
    return rydberg, bohr


def trap_frequency(charge: float, depth: float, constants: PhysicalConstants = SI) -> float:
    """In-plane vibrational frequency ``sqrt(e Q / (m_e H**3))`` (rad/s)."""
    if charge <= 0 or depth <= 0:
        raise DomainError("trap charge and depth must be positive")
    eq = constants.elementary_charge * charge / (4 * math.pi * constants.vacuum_permittivity)
    return math.sqrt(eq / (constants.electron_mass * depth ** 3))


def spin_frequency(static_field: float, current: float, wire_height: float,
                   constants: PhysicalConstants = SI) -> float:
    """Zeeman splitting from the static field plus the wire field at the electron."""
    if wire_height <= 0:
        raise DomainError("wire height must be positive")
    c = constants
    wire_field = c.vacuum_permeability * current / (2 * math.pi * wire_height)
    return c.g_factor * c.bohr_magneton / c.hbar * (static_field + wire_field)


def spin_orbit_strength(current: float, wire_height: float, nu_x: float,
                        constants: PhysicalConstants = SI) -> float:
    """Spin-vibration coupling produced by the field gradient of the wire."""
    if wire_height <= 0 or nu_x <= 0:
        raise DomainError("wire height and vibrational frequency must be positive")
    if current < 0:
        raise DomainError("current must be non-negative")
    c = constants
    num = c.g_factor * c.bohr_magneton * c.vacuum_permeability * current
    den = 4 * math.pi * wire_height ** 2 * math.sqrt(2 * c.hbar * c.electron_mass * nu_x)
    return num / den


def coulomb_strength(distance: float, nu_1x: float, nu_2x: float,
                     constants: PhysicalConstants = SI) -> float:
    """Dipole-dipole (x1 x2) coupling between the two vibrational modes."""
    if distance <= 0 or nu_1x <= 0 or nu_2x <= 0:
        raise DomainError("distance and vibrational frequencies must be positive")
    return constants.coulomb_e2 / (constants.electron_mass * distance ** 3
                                   * math.sqrt(nu_1x * nu_2x))


def effective_strengths(omega: float, omega_tilde: float, delta: float,
                        g: float | None = None, eta: float | None = None,
                        nu_s: float | None = None) -> DerivedCouplings:
    """Second-order couplings for detuning ``delta``.

    ``g`` and ``eta`` default to ``omega * omega_tilde / delta`` and
    ``omega**2 / delta``, the choice that puts both spin-bus terms at the
    same rotation rate ``gamma``.
    """
    if delta == 0:
        raise DomainError("delta must be nonzero")
    omega_prime = omega * omega_tilde / delta
    gamma = (omega ** 2 - omega_tilde ** 2) / delta
    if g is None:
        g = omega_prime
    if eta is None:
        eta = omega ** 2 / delta
    omega_dprime = None if gamma == 0.0 else g ** 2 / gamma
    return DerivedCouplings(omega=omega, omega_tilde=omega_tilde, delta=delta,
                            omega_prime=omega_prime, g=g, gamma=gamma,
                            omega_dprime=omega_dprime, eta=eta, nu_s=nu_s)


def single_electron_couplings(device: DeviceParams, constants: PhysicalConstants = SI) -> DerivedCouplings:
    """Operating point with the e1 coupling set by the electrode current."""
    omega = spin_orbit_strength(device.current, device.wire_height, device.nu_1x, constants)
    return _couplings(device, omega, constants)


def bus_couplings(device: DeviceParams, constants: PhysicalConstants = SI,
                  omega: float | None = None) -> DerivedCouplings:
    """Operating point of the spin-to-distant-vibration bus.

    By default the drive is matched to the Coulomb coupling
    (``omega = omega_tilde``), which turns the second-order Hamiltonian into
    a pure JC coupling of strength ``omega**2 / delta``.
    """
    if omega is None:
        omega = coulomb_strength(device.distance, device.nu_1x, device.nu_2x, constants)
    return _couplings(device, omega, constants)


def driven_pair_couplings(device: DeviceParams, constants: PhysicalConstants = SI) -> DerivedCouplings:
    """Operating point of the doubly driven spin-spin scheme."""
    omega = device.drive_omega
    if omega is None:
        omega = spin_orbit_strength(device.current, device.wire_height, device.nu_1x, constants)
    return _couplings(device, omega, constants)


def _couplings(device, omega, constants):
    omega_tilde = coulomb_strength(device.distance, device.nu_1x, device.nu_2x, constants)
    nu_s = spin_frequency(device.static_field, device.current, device.wire_height, constants)
    return effective_strengths(omega, omega_tilde, device.delta, eta=device.eta, nu_s=nu_s)


@dataclass(frozen=True)
class RegimeFlag:
    name: str
    value: float
    threshold: float
    passed: bool
    rule: str


@dataclass(frozen=True)
class ValidityReport:
    flags: tuple[RegimeFlag, ...] = field(default_factory=tuple)

    @property
    def all_passed(self) -> bool:
        return all(f.passed for f in self.flags)

    def __getitem__(self, name: str) -> RegimeFlag:
        for f in self.flags:
            if f.name == name:
                return f
        raise KeyError(name)

    def failures(self) -> list[str]:
        return [f"{f.name}: {f.value:.4g} ({f.rule} {f.threshold:g})"
                for f in self.flags if not f.passed]


def regime_check(device: DeviceParams, couplings: DerivedCouplings,
                 temperature: float | None = None, threshold: float = 0.2,
                 constants: PhysicalConstants = SI) -> ValidityReport:
    """Report whether the perturbative and ground-state assumptions hold.

    Never raises; every check becomes a :class:`RegimeFlag`.
    """
    if temperature is None:
        temperature = device.temperature
    delta = abs(couplings.delta)
    flags = [
        RegimeFlag("omega_over_delta", abs(couplings.omega) / delta, threshold,
                   abs(couplings.omega) / delta < threshold, "<"),
        RegimeFlag("omega_tilde_over_delta", abs(couplings.omega_tilde) / delta, threshold,
                   abs(couplings.omega_tilde) / delta < threshold, "<"),
    ]
    nu = min(device.nu_1x, device.nu_2x)
    if temperature > 0:
        freeze = constants.hbar * nu / (constants.boltzmann * temperature)
    else:
        freeze = math.inf
    flags.append(RegimeFlag("ground_state_freezing", freeze, 1.0, freeze > 1.0, ">"))
    if couplings.gamma != 0:
        ratio = abs(couplings.g) / abs(couplings.gamma)
        flags.append(RegimeFlag("g_over_gamma", ratio, threshold, ratio < threshold, "<"))
    else:
        flags.append(RegimeFlag("g_over_gamma", math.inf, threshold, False, "<"))
    return ValidityReport(tuple(flags))


def cyclic_reading(value: float) -> float:
    """The same number read as a cyclic frequency: ``value / (2 pi)`` Hz."""
    return value / (2 * math.pi)
