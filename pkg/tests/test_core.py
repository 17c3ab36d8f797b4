import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmg_dynamics import core
from lmg_dynamics.core import (
    ConfigError,
    Direction,
    Schedule,
    Sector,
    build_spin_system,
    d_hamiltonian_ds,
    hamiltonian,
    hamiltonian_stack,
)


def ladder_sx(N):
    # independent oracle: S_x = (S+ + S-)/2 from the raising operator
    S = N / 2
    m = np.arange(N + 1) - S
    sp = np.diag(np.sqrt(S * (S + 1) - m[:-1] * (m[:-1] + 1)), -1)
    return 0.5 * (sp + sp.T)


@pytest.mark.parametrize("N", [2, 4, 10, 20])
def test_sx2_matches_ladder_square(N):
    sx = ladder_sx(N)
    system = build_spin_system(N)
    np.testing.assert_allclose(system.sx2, sx @ sx, atol=1e-12)


def test_n2_explicit_matrices():
    system = build_spin_system(2)
    np.testing.assert_array_equal(np.diag(system.sz), [-1.0, 0.0, 1.0])
    expected = np.array([[0.5, 0.0, 0.5], [0.0, 1.0, 0.0], [0.5, 0.0, 0.5]])
    np.testing.assert_allclose(system.sx2, expected, atol=1e-15)


@pytest.mark.parametrize("N", [2, 8, 20])
def test_sx2_spectrum_is_m_squared(N):
    system = build_spin_system(N)
    m = np.arange(N + 1) - N / 2
    np.testing.assert_allclose(np.linalg.eigvalsh(system.sx2), np.sort(m**2), atol=1e-10)


@pytest.mark.parametrize("bad", [0, 3, -2, 1, 2.0, "4", True])
def test_bad_n_rejected(bad):
    with pytest.raises(ConfigError):
        build_spin_system(bad)


def test_matrices_read_only():
    system = build_spin_system(4)
    with pytest.raises(ValueError):
        system.sx2[0, 0] = 1.0


def test_parity_sectors():
    system = build_spin_system(6)
    np.testing.assert_array_equal(system.sector_indices(Sector.EVEN), [0, 2, 4, 6])
    np.testing.assert_array_equal(system.sector_indices("odd"), [1, 3, 5])
    assert system.sector_indices(Sector.FULL).size == 7
    P = np.diag(system.parity)
    np.testing.assert_array_equal(P @ system.sx2, system.sx2 @ P)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 15), st.floats(0.0, 1.0))
def test_hamiltonian_symmetric_and_mirrored(half, s):
    system = build_spin_system(2 * half)
    Hf = hamiltonian(system, Direction.FORWARD, s)
    Hb = hamiltonian(system, Direction.BACKWARD, 1.0 - s)
    np.testing.assert_array_equal(Hf, Hf.T)
    np.testing.assert_allclose(Hf, Hb, atol=1e-14)


def test_hamiltonian_endpoints():
    system = build_spin_system(4)
    np.testing.assert_array_equal(hamiltonian(system, "forward", 0.0), -system.sz)
    np.testing.assert_allclose(hamiltonian(system, "forward", 1.0), -system.sx2 / 4)
    np.testing.assert_allclose(hamiltonian(system, "backward", 0.0), -system.sx2 / 4)


def test_hamiltonian_rejects_s_outside():
    system = build_spin_system(4)
    with pytest.raises(ConfigError):
        hamiltonian(system, "forward", 1.1)
    with pytest.raises(ConfigError):
        hamiltonian_stack(system, "forward", [-0.1, 0.5])


def test_stack_matches_single():
    system = build_spin_system(6)
    s = np.array([0.0, 0.3, 1.0])
    stack = hamiltonian_stack(system, "backward", s)
    for k, v in enumerate(s):
        np.testing.assert_allclose(stack[k], hamiltonian(system, "backward", v), atol=1e-15)


@pytest.mark.parametrize("direction", list(Direction))
def test_d_hamiltonian_finite_difference(direction):
    system = build_spin_system(10)
    h = 1e-6
    fd = (hamiltonian(system, direction, 0.4 + h) - hamiltonian(system, direction, 0.4 - h)) / (2 * h)
    np.testing.assert_allclose(d_hamiltonian_ds(system, direction), fd, atol=1e-8)


def test_backward_derivative_is_negated():
    system = build_spin_system(8)
    np.testing.assert_array_equal(d_hamiltonian_ds(system, "backward"), -d_hamiltonian_ds(system, "forward"))


def test_coefficients_vectorize():
    cx, cz = core._coefficients(10, Direction.FORWARD, np.array([0.0, 1.0]))
    np.testing.assert_allclose(cx, [0.0, 0.1])
    np.testing.assert_allclose(cz, [1.0, 0.0])


class TestSchedule:
    def test_uniform_defaults(self):
        sched = Schedule.uniform("forward", 10.0, n_grid=11)
        assert sched.steps == 200
        assert sched.substeps == 20
        assert sched.dt == pytest.approx(0.05)

    @pytest.mark.parametrize("kw", [
        dict(T=0.0),
        dict(T=-1.0),
        dict(steps=7),
        dict(grid=np.array([0.0, 0.6, 0.5, 1.0])),
        dict(grid=np.array([0.1, 1.0])),
        dict(grid=np.array([0.0])),
    ])
    def test_invalid(self, kw):
        args = dict(direction="forward", T=1.0, steps=10, grid=np.linspace(0, 1, 6))
        args.update(kw)
        with pytest.raises(ConfigError):
            Schedule(**args)

    def test_grid_frozen(self):
        sched = Schedule.uniform("backward", 1.0, n_grid=5)
        with pytest.raises(ValueError):
            sched.grid[0] = 0.5
