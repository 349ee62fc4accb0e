"""Dense operators and states on truncated spin/Fock tensor products.

Spin factors use the ordering ``(up, down)``: index 0 is ``|up>``.  The
axis labels follow the device convention, in which the static field points
along x, so the *diagonal* Pauli matrix is called ``sigma_x`` and the spin
flip ``sigma_z = sigma_minus + sigma_plus``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, LayoutError, TruncationError

SPIN = "spin"
FOCK = "fock"

_SPIN_LABELS = {"up": 0, "u": 0, "↑": 0, "down": 1, "d": 1, "↓": 1}


@dataclass(frozen=True)
class Factor:
    label: str
    kind: str
    dim: int


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor factors.  Order is fixed at construction."""

    factors: tuple[Factor, ...]

    def __post_init__(self):
        labels = [f.label for f in self.factors]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"factor labels must be unique: {labels}")
        if not self.factors:
            raise LayoutError("layout needs at least one factor")
        for f in self.factors:
            if f.kind == SPIN and f.dim != 2:
                raise LayoutError(f"spin factor {f.label!r} must have dimension 2")
            if f.kind == FOCK and f.dim < 2:
                raise DomainError(f"Fock factor {f.label!r} needs dimension >= 2")
            if f.kind not in (SPIN, FOCK):
                raise LayoutError(f"unknown factor kind {f.kind!r}")

    @classmethod
    def of(cls, *specs) -> SpaceLayout:
        """Build from ``(label, "spin")`` and ``(label, "fock", dim)`` tuples."""
        factors = []
        for spec in specs:
            if spec[1] == SPIN:
                factors.append(Factor(spec[0], SPIN, 2))
            else:
                factors.append(Factor(spec[0], spec[1], int(spec[2])))
        return cls(tuple(factors))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.factors)

    def position(self, label: str) -> int:
        for i, f in enumerate(self.factors):
            if f.label == label:
                return i
        raise LayoutError(f"no factor {label!r} in layout {self.labels}")

    def factor(self, label: str) -> Factor:
        return self.factors[self.position(label)]

    def require(self, *labels: str) -> None:
        missing = [lab for lab in labels if lab not in self.labels]
        if missing:
            raise LayoutError(f"layout {self.labels} lacks factors {missing}")

    def index(self, labels: dict | Sequence) -> int:
        """Flat basis index for per-factor labels (dict or ordered sequence)."""
        if isinstance(labels, dict):
            if set(labels) != set(self.labels):
                raise LayoutError(f"need labels for exactly {self.labels}, got {sorted(labels)}")
            labels = [labels[lab] for lab in self.labels]
        if len(labels) != len(self.factors):
            raise LayoutError(f"expected {len(self.factors)} labels, got {len(labels)}")
        digits = [_digit(f, lab) for f, lab in zip(self.factors, labels)]
        return int(np.ravel_multi_index(digits, self.dims))


def _digit(factor: Factor, label) -> int:
    if factor.kind == SPIN:
        if isinstance(label, str):
            key = label.lower() if label not in ("↑", "↓") else label
            if key in _SPIN_LABELS:
                return _SPIN_LABELS[key]
        raise LayoutError(f"spin label for {factor.label!r} must be 'up' or 'down', got {label!r}")
    n = int(label)
    if n != label or n < 0 or n >= factor.dim:
        raise TruncationError(f"Fock label {label!r} out of range for {factor.label!r} (dim {factor.dim})")
    return n


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    layout: SpaceLayout
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries)
        n = self.layout.total_dim
        if entries.shape != (n, n):
            raise LayoutError(f"operator shape {entries.shape} does not match layout dimension {n}")
        object.__setattr__(self, "entries", entries)

    def _check(self, other: OperatorMatrix) -> None:
        if other.layout != self.layout:
            raise LayoutError("operators live on different layouts")

    def __add__(self, other):
        self._check(other)
        return OperatorMatrix(self.layout, self.entries + other.entries)

    def __sub__(self, other):
        self._check(other)
        return OperatorMatrix(self.layout, self.entries - other.entries)

    def __neg__(self):
        return OperatorMatrix(self.layout, -self.entries)

    def __mul__(self, scalar):
        if isinstance(scalar, OperatorMatrix):
            return NotImplemented
        return OperatorMatrix(self.layout, scalar * self.entries)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            if other.layout != self.layout:
                raise LayoutError("state and operator live on different layouts")
            return StateVector(self.layout, self.entries @ other.amplitudes, normalize=False)
        self._check(other)
        return OperatorMatrix(self.layout, self.entries @ other.entries)

    def dag(self) -> OperatorMatrix:
        return OperatorMatrix(self.layout, self.entries.conj().T)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.entries, self.entries.conj().T, rtol=0, atol=atol))

    def expect(self, state: StateVector) -> complex:
        if state.layout != self.layout:
            raise LayoutError("state and operator live on different layouts")
        psi = state.amplitudes
        return complex(np.vdot(psi, self.entries @ psi))

    def matrix_element(self, bra: StateVector, ket: StateVector) -> complex:
        return complex(np.vdot(bra.amplitudes, self.entries @ ket.amplitudes))

    def __repr__(self):
        return f"OperatorMatrix(layout={self.layout.labels}, dim={self.layout.total_dim})"


@dataclass(frozen=True, eq=False)
class StateVector:
    layout: SpaceLayout
    amplitudes: np.ndarray
    normalize: bool = False

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (self.layout.total_dim,):
            raise LayoutError(f"state length {amps.shape[0]} does not match layout dimension "
                              f"{self.layout.total_dim}")
        if self.normalize:
            amps = amps / np.linalg.norm(amps)
        object.__setattr__(self, "amplitudes", _frozen(amps))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __add__(self, other):
        if other.layout != self.layout:
            raise LayoutError("states live on different layouts")
        return StateVector(self.layout, self.amplitudes + other.amplitudes)

    def __mul__(self, scalar):
        return StateVector(self.layout, scalar * self.amplitudes)

    __rmul__ = __mul__

    def __repr__(self):
        return f"StateVector(layout={self.layout.labels}, norm={self.norm():.12g})"


def single_layout(kind: str, dim: int = 2, label: str | None = None) -> SpaceLayout:
    label = label or kind
    return SpaceLayout((Factor(label, kind, 2 if kind == SPIN else dim),))


def fock_lowering(dim: int) -> OperatorMatrix:
    """Annihilation operator truncated to ``dim`` levels."""
    if dim < 2:
        raise DomainError(f"Fock dimension must be >= 2, got {dim}")
    return OperatorMatrix(single_layout(FOCK, dim), np.diag(np.sqrt(np.arange(1, dim)), k=1))


def spin_ops() -> tuple[OperatorMatrix, OperatorMatrix, OperatorMatrix, OperatorMatrix]:
    """``(sigma_minus, sigma_plus, sigma_z, sigma_x)`` in the device labelling.

    ``sigma_minus = |down><up|``, ``sigma_plus = |up><down|``,
    ``sigma_z = sigma_minus + sigma_plus`` (the flip) and
    ``sigma_x = |up><up| - |down><down|`` (diagonal).
    """
    lay = single_layout(SPIN)
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    sm = sp.T.copy()
    sz = sm + sp
    sx = np.diag([1.0, -1.0]).astype(complex)
    return tuple(OperatorMatrix(lay, m) for m in (sm, sp, sz, sx))


def embed(op: OperatorMatrix, layout: SpaceLayout, label: str) -> OperatorMatrix:
    """Kronecker-embed a single-factor operator at factor ``label``."""
    if len(op.layout.factors) != 1:
        raise LayoutError("embed expects an operator on a single factor")
    target = layout.factor(label)
    source = op.layout.factors[0]
    if source.dim != target.dim:
        raise LayoutError(f"operator dimension {source.dim} does not match factor "
                          f"{label!r} dimension {target.dim}")
    if source.kind != target.kind:
        raise LayoutError(f"cannot place a {source.kind} operator on {target.kind} factor {label!r}")
    mats = [op.entries if f.label == label else np.eye(f.dim) for f in layout.factors]
    return OperatorMatrix(layout, reduce(np.kron, mats))


def identity(layout: SpaceLayout) -> OperatorMatrix:
    return OperatorMatrix(layout, np.eye(layout.total_dim))


def basis_state(layout: SpaceLayout, labels: dict | Sequence) -> StateVector:
    """Computational basis vector, e.g. ``{"s1": "up", "a": 0, "b": 1}``."""
    amps = np.zeros(layout.total_dim, dtype=complex)
    amps[layout.index(labels)] = 1.0
    return StateVector(layout, amps)


def occupancy(psi: StateVector, phi: StateVector) -> float:
    """``|<phi|psi>|**2``."""
    if psi.layout != phi.layout:
        raise LayoutError("states live on different layouts")
    return float(abs(np.vdot(phi.amplitudes, psi.amplitudes)) ** 2)


class Ops:
    """Embedded ladder and spin operators for every factor of a layout.

    ``ops.lower("a")``, ``ops.raise_("a")``, ``ops.number("a")``,
    ``ops.sp("s1")``, ``ops.sm("s1")``, ``ops.up("s1")`` (projector on up).
    """

    def __init__(self, layout: SpaceLayout):
        self.layout = layout
        self._cache = {}

    def _get(self, key, label, build):
        if (key, label) not in self._cache:
            self._cache[key, label] = embed(build(), self.layout, label)
        return self._cache[key, label]

    def lower(self, label: str) -> OperatorMatrix:
        dim = self.layout.factor(label).dim
        return self._get("a", label, lambda: fock_lowering(dim))

    def raise_(self, label: str) -> OperatorMatrix:
        return self.lower(label).dag()

    def number(self, label: str) -> OperatorMatrix:
        return self.raise_(label) @ self.lower(label)

    def sm(self, label: str) -> OperatorMatrix:
        return self._get("sm", label, lambda: spin_ops()[0])

    def sp(self, label: str) -> OperatorMatrix:
        return self._get("sp", label, lambda: spin_ops()[1])

    def up(self, label: str) -> OperatorMatrix:
        """``sigma_plus sigma_minus = |up><up|``."""
        return self.sp(label) @ self.sm(label)

    def down(self, label: str) -> OperatorMatrix:
        return self.sm(label) @ self.sp(label)

    def fock_projector(self, label: str, levels: Iterable[int]) -> OperatorMatrix:
        dim = self.layout.factor(label).dim
        diag = np.zeros(dim)
        for n in levels:
            if 0 <= n < dim:
                diag[n] = 1.0
        return embed(OperatorMatrix(single_layout(FOCK, dim), np.diag(diag)), self.layout, label)
