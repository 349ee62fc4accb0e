"""Interaction-picture Hamiltonians of the one- and two-electron device.

Hamiltonians are stored divided by hbar, i.e. in rad/s, so the Schrodinger
equation reads ``i d/dt psi = H(t) psi``.  Each coupling is a
:class:`RotatingTerm` ``amplitude * exp(i rate t) * op`` plus, when
``hermitian_pair`` is set, its conjugate ``conj(...) * op.dag()``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, LayoutError
from .hilbert import OperatorMatrix, Ops, SpaceLayout


@dataclass(frozen=True, eq=False)
class RotatingTerm:
    operator: OperatorMatrix
    amplitude: complex
    phase_rate: float = 0.0
    hermitian_pair: bool = True

    def __post_init__(self):
        if not self.hermitian_pair:
            if self.phase_rate != 0 or complex(self.amplitude).imag != 0:
                raise DomainError("an unpaired term must be static with a real amplitude")
            if not self.operator.is_hermitian():
                raise DomainError("an unpaired term needs a Hermitian operator")


@dataclass(frozen=True, eq=False)
class TimeDependentHamiltonian:
    layout: SpaceLayout
    terms: tuple[RotatingTerm, ...]
    _stack: np.ndarray = field(init=False, repr=False)
    _amps: np.ndarray = field(init=False, repr=False)
    _rates: np.ndarray = field(init=False, repr=False)
    _conj: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        mats, amps, rates, conj = [], [], [], []
        for term in terms:
            if term.operator.layout != self.layout:
                raise LayoutError("term operator layout differs from the Hamiltonian layout")
            mats.append(term.operator.entries)
            amps.append(complex(term.amplitude))
            rates.append(float(term.phase_rate))
            conj.append(False)
            if term.hermitian_pair:
                mats.append(term.operator.entries.conj().T)
                amps.append(complex(term.amplitude).conjugate())
                rates.append(-float(term.phase_rate))
                conj.append(True)
        n = self.layout.total_dim
        stack = np.array(mats, dtype=complex) if mats else np.zeros((0, n, n), dtype=complex)
        stack.setflags(write=False)
        object.__setattr__(self, "_stack", stack)
        object.__setattr__(self, "_amps", np.array(amps, dtype=complex))
        object.__setattr__(self, "_rates", np.array(rates, dtype=float))
        object.__setattr__(self, "_conj", np.array(conj, dtype=bool))

    @property
    def is_static(self) -> bool:
        return not np.any(self._rates[np.abs(self._amps) > 0])

    def coefficients(self, t: float) -> np.ndarray:
        return self._amps * np.exp(1j * self._rates * t)

    def matrix(self, t: float) -> np.ndarray:
        """``H(t)`` as a plain array (rad/s)."""
        if len(self._amps) == 0:
            return np.zeros((self.layout.total_dim,) * 2, dtype=complex)
        return np.tensordot(self.coefficients(t), self._stack, axes=1)

    def evaluate(self, t: float) -> OperatorMatrix:
        return OperatorMatrix(self.layout, self.matrix(t))

    def frequency_scale(self, weighted: bool = False) -> float:
        """Largest phase rate or amplitude present.

        With ``weighted`` the amplitudes are multiplied by the spectral norm
        of their operator and summed, giving a bound on ``||H(t)||``.
        """
        rates = np.abs(self._rates[np.abs(self._amps) > 0])
        max_rate = float(rates.max()) if rates.size else 0.0
        if not weighted:
            amp = float(np.abs(self._amps).max()) if self._amps.size else 0.0
            return max(max_rate, amp)
        bound = sum(abs(a) * np.linalg.norm(m, 2) for a, m in zip(self._amps, self._stack))
        return max(max_rate, float(bound))

    def time_reversed(self, t_final: float) -> TimeDependentHamiltonian:
        """``-H(t_final - s)``: evolving it for ``t_final`` undoes ``H``."""
        terms = []
        for term in self.terms:
            amp = -complex(term.amplitude) * np.exp(1j * term.phase_rate * t_final)
            if term.hermitian_pair:
                terms.append(RotatingTerm(term.operator, amp, -term.phase_rate, True))
            else:
                terms.append(RotatingTerm(term.operator, amp.real, 0.0, False))
        return TimeDependentHamiltonian(self.layout, tuple(terms))

    def __add__(self, other: TimeDependentHamiltonian) -> TimeDependentHamiltonian:
        if other.layout != self.layout:
            raise LayoutError("cannot add Hamiltonians on different layouts")
        return TimeDependentHamiltonian(self.layout, self.terms + other.terms)


def _jc_pair(ops, spin, mode, amplitude, rate):
    """``amplitude e^{i rate t} sigma_+ a + h.c.``"""
    return RotatingTerm(ops.sp(spin) @ ops.lower(mode), amplitude, rate)


def single_electron_jc(omega: float, delta: float, layout: SpaceLayout,
                       spin: str = "s1", mode: str = "a") -> TimeDependentHamiltonian:
    """Spin-vibration coupling of one electron, ``Omega (e^{i delta t} s+ a + h.c.)``."""
    layout.require(spin, mode)
    ops = Ops(layout)
    return TimeDependentHamiltonian(layout, (_jc_pair(ops, spin, mode, omega, delta),))


def two_electron_full(omega: float, delta: float, omega_tilde: float, delta_ab: float,
                      layout: SpaceLayout, spin: str = "s1", mode_a: str = "a",
                      mode_b: str = "b") -> TimeDependentHamiltonian:
    """Driven electron e1 plus the Coulomb beam splitter ``a b^dag`` to e2."""
    layout.require(spin, mode_a, mode_b)
    ops = Ops(layout)
    return TimeDependentHamiltonian(layout, (
        _jc_pair(ops, spin, mode_a, omega, delta),
        RotatingTerm(ops.lower(mode_a) @ ops.raise_(mode_b), omega_tilde, delta_ab),
    ))


def effective_second_order(omega: float, omega_tilde: float, delta: float,
                           layout: SpaceLayout, spin: str = "s1", mode_a: str = "a",
                           mode_b: str = "b") -> TimeDependentHamiltonian:
    """Static second-order Hamiltonian with the e1 mode still present.

    ``(O^2/d)[n_a (up - down) + up] + (Ot^2/d)(n_b - n_a) + (O Ot/d)(s+ b + h.c.)``
    """
    if delta == 0:
        raise DomainError("delta must be nonzero")
    layout.require(spin, mode_a, mode_b)
    ops = Ops(layout)
    na, nb = ops.number(mode_a), ops.number(mode_b)
    shift = na @ (ops.up(spin) - ops.down(spin)) + ops.up(spin)
    return TimeDependentHamiltonian(layout, (
        RotatingTerm(shift, omega ** 2 / delta, 0.0, False),
        RotatingTerm(nb - na, omega_tilde ** 2 / delta, 0.0, False),
        RotatingTerm(ops.sp(spin) @ ops.lower(mode_b), omega * omega_tilde / delta, 0.0),
    ))


def effective_reduced(omega: float, omega_tilde: float, delta: float, layout: SpaceLayout,
                      spin: str = "s1", mode_b: str = "b") -> TimeDependentHamiltonian:
    """Second-order Hamiltonian after dropping every ``n_a`` term.

    ``(O^2/d) up + (Ot^2/d) n_b + (O Ot/d)(s+ b + h.c.)``
    """
    if delta == 0:
        raise DomainError("delta must be nonzero")
    layout.require(spin, mode_b)
    ops = Ops(layout)
    return TimeDependentHamiltonian(layout, (
        RotatingTerm(ops.up(spin), omega ** 2 / delta, 0.0, False),
        RotatingTerm(ops.number(mode_b), omega_tilde ** 2 / delta, 0.0, False),
        RotatingTerm(ops.sp(spin) @ ops.lower(mode_b), omega * omega_tilde / delta, 0.0),
    ))


def distant_jc(omega_prime: float, layout: SpaceLayout, spin: str = "s1",
               mode: str = "b") -> TimeDependentHamiltonian:
    """Static JC coupling between the e1 spin and the e2 vibration."""
    layout.require(spin, mode)
    ops = Ops(layout)
    return TimeDependentHamiltonian(layout, (_jc_pair(ops, spin, mode, omega_prime, 0.0),))


def driven_pair_full(omega: float, delta: float, omega_tilde: float, g: float, eta: float,
                     layout: SpaceLayout, spin1: str = "s1", mode_a: str = "a",
                     mode_b: str = "b", spin2: str = "s2") -> TimeDependentHamiltonian:
    """Both electrons driven: e1 spin-a, Coulomb a-b, and e2 spin-b."""
    layout.require(spin1, mode_a, mode_b, spin2)
    ops = Ops(layout)
    return TimeDependentHamiltonian(layout, (
        _jc_pair(ops, spin1, mode_a, omega, delta),
        RotatingTerm(ops.lower(mode_a) @ ops.raise_(mode_b), omega_tilde, delta),
        _jc_pair(ops, spin2, mode_b, g, eta),
    ))


def driven_pair_intermediate(omega: float, omega_tilde: float, g: float, delta: float,
                             eta: float, layout: SpaceLayout, spin1: str = "s1",
                             mode_b: str = "b", spin2: str = "s2") -> TimeDependentHamiltonian:
    """Both spins coupled to the e2 vibration after eliminating mode a.

    The e1 term rotates at ``gamma = (O^2 - Ot^2)/delta`` and the e2 term at
    ``eta - Ot^2/delta``; with ``eta = O^2/delta`` the two rates coincide.
    """
    if delta == 0:
        raise DomainError("delta must be nonzero")
    layout.require(spin1, mode_b, spin2)
    ops = Ops(layout)
    gamma = (omega ** 2 - omega_tilde ** 2) / delta
    return TimeDependentHamiltonian(layout, (
        _jc_pair(ops, spin1, mode_b, omega * omega_tilde / delta, gamma),
        _jc_pair(ops, spin2, mode_b, g, eta - omega_tilde ** 2 / delta),
    ))


def spin_spin_effective(omega_dprime: float, layout: SpaceLayout, spin1: str = "s1",
                        spin2: str = "s2") -> TimeDependentHamiltonian:
    """Flip-flop ``O'' (s+ t- + s- t+)`` between the two spins."""
    layout.require(spin1, spin2)
    ops = Ops(layout)
    return TimeDependentHamiltonian(layout, (
        RotatingTerm(ops.sp(spin1) @ ops.sm(spin2), omega_dprime, 0.0),
    ))
