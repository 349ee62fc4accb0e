import numpy as np
import pytest

from hespin.errors import DomainError, LayoutError, TruncationError
from hespin.hilbert import (Factor, OperatorMatrix, Ops, SpaceLayout, StateVector, basis_state,
                            embed, fock_lowering, identity, occupancy, spin_ops)


@pytest.fixture
def layout():
    return SpaceLayout.of(("s1", "spin"), ("a", "fock", 3), ("b", "fock", 4))


def test_layout_dims_and_index(layout):
    assert layout.dims == (2, 3, 4)
    assert layout.total_dim == 24
    assert layout.index(["up", 0, 0]) == 0
    assert layout.index({"s1": "down", "a": 2, "b": 3}) == 23
    assert layout.index(["down", 0, 1]) == 12 + 1


def test_layout_rejects_bad_factors():
    with pytest.raises(LayoutError):
        SpaceLayout.of(("x", "spin"), ("x", "fock", 3))
    with pytest.raises(DomainError):
        SpaceLayout.of(("a", "fock", 1))
    with pytest.raises(LayoutError):
        SpaceLayout((Factor("s", "spin", 3),))
    with pytest.raises(LayoutError):
        SpaceLayout(())


def test_index_errors(layout):
    with pytest.raises(TruncationError):
        layout.index(["up", 3, 0])
    with pytest.raises(LayoutError):
        layout.index(["sideways", 0, 0])
    with pytest.raises(LayoutError):
        layout.index({"s1": "up", "a": 0})
    with pytest.raises(LayoutError):
        layout.require("s2")


def test_fock_lowering_commutator():
    a = fock_lowering(5).entries
    comm = a @ a.conj().T - a.conj().T @ a
    # identity except the truncation edge
    assert np.allclose(np.diag(comm)[:-1], 1)
    assert np.isclose(comm[-1, -1], -4)
    with pytest.raises(DomainError):
        fock_lowering(1)


def test_spin_convention():
    sm, sp, sz, sx = (o.entries for o in spin_ops())
    up, down = np.array([1, 0]), np.array([0, 1])
    assert np.allclose(sp @ down, up)
    assert np.allclose(sm @ up, down)
    assert np.allclose(sx, np.diag([1, -1]))
    assert np.allclose(sz, sp + sm)


def test_embed_ordering(layout):
    a = fock_lowering(3)
    full = embed(a, layout, "a").entries
    expected = np.kron(np.kron(np.eye(2), a.entries), np.eye(4))
    assert np.allclose(full, expected)
    with pytest.raises(LayoutError):
        embed(fock_lowering(4), layout, "a")
    with pytest.raises(LayoutError):
        embed(spin_ops()[0], layout, "a")


def test_ops_number_and_projectors(layout):
    ops = Ops(layout)
    psi = basis_state(layout, ["up", 2, 1])
    assert ops.number("a").expect(psi) == pytest.approx(2)
    assert ops.number("b").expect(psi) == pytest.approx(1)
    assert ops.up("s1").expect(psi) == pytest.approx(1)
    assert ops.down("s1").expect(psi) == pytest.approx(0)
    assert ops.fock_projector("a", [2]).expect(psi) == pytest.approx(1)
    moved = ops.sm("s1") @ ops.raise_("b") @ psi
    assert occupancy(moved, basis_state(layout, ["down", 2, 2])) == pytest.approx(2)


def test_operator_algebra_and_immutability(layout):
    ops = Ops(layout)
    x = ops.lower("a") + ops.raise_("a")
    assert x.is_hermitian()
    assert not ops.lower("a").is_hermitian()
    assert np.allclose((2 * identity(layout)).entries, 2 * np.eye(24))
    assert np.allclose((x - x).entries, 0)
    with pytest.raises(ValueError):
        x.entries[0, 0] = 1
    other = SpaceLayout.of(("s1", "spin"))
    with pytest.raises(LayoutError):
        x + identity(other)
    with pytest.raises(LayoutError):
        OperatorMatrix(layout, np.eye(3))


def test_state_vector(layout):
    psi = StateVector(layout, np.ones(24), normalize=True)
    assert psi.norm() == pytest.approx(1)
    with pytest.raises(LayoutError):
        StateVector(layout, np.ones(5))
    phi = basis_state(layout, ["up", 0, 0])
    assert occupancy(psi, phi) == pytest.approx(1 / 24)
    assert Ops(layout).up("s1").matrix_element(phi, phi) == pytest.approx(1)
