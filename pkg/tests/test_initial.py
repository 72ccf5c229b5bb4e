import math

import mpmath
import numpy as np
import pytest

from spinboltz.equilibrium import EquilibriumParams
from spinboltz.errors import ValidationError
from spinboltz.grid import EnergyGrid, total_energy, write_snapshot
from spinboltz.initial import StateSpec, benchmark_state, build_state, special, zeta_complex
from spinboltz.model import DEFAULT_MASSES

MASSES = np.array(DEFAULT_MASSES)
GRID = EnergyGrid(n=56, h=0.25)


def test_special_anchor_values():
    assert special("erfc", 0.0) == pytest.approx(1.0, abs=1e-10)
    assert special("erf", 0.0) == pytest.approx(0.0, abs=1e-10)
    assert special("gamma", 1.0) == pytest.approx(1.0, abs=1e-10)
    assert special("ai", 0.0) == pytest.approx(0.3550280538878172, abs=1e-10)
    assert special("si", 0.0) == pytest.approx(0.0, abs=1e-10)
    assert special("atan", 1.0) == pytest.approx(math.pi / 4.0, abs=1e-10)
    assert special("zeta", 0.0) == pytest.approx(-0.5, abs=1e-10)


def test_zeta_against_mpmath_reference():
    z = zeta_complex((1.0 + 0.5j) * 2.0)
    ref = complex(mpmath.zeta(2.0 + 1.0j))
    assert abs(z - ref) / abs(ref) <= 1e-8


def test_zeta_along_used_ray():
    for eps in np.linspace(0.0, 14.0, 29):
        s = (1.0 + 0.5j) * eps
        if abs(s - 1.0) < 1e-6:
            continue
        z = zeta_complex(s)
        ref = complex(mpmath.zeta(mpmath.mpc(s.real, s.imag)))
        assert abs(z - ref) / max(abs(ref), 1e-30) <= 1e-8


def test_zeta_domain_errors():
    with pytest.raises(ValidationError):
        zeta_complex(-0.5 + 0.2j)
    with pytest.raises(ValidationError):
        zeta_complex(1.0 + 1e-9j)
    with pytest.raises(ValidationError):
        special("nosuchfn", 1.0)
    with pytest.raises(ValidationError):
        special("erf", 1.0 + 1.0j)


def test_benchmark_anchor_values():
    f = benchmark_state(GRID)
    assert f.data[0, 0, 0, 0].real == pytest.approx(5.0 / 32.0, abs=1e-14)
    # species d, lower-spin diagonal at eps = 1 is the Airy value at 0
    j = int(round(1.0 / GRID.h))
    assert f.data[3, j, 1, 1].real == pytest.approx(0.3550280538878172, abs=1e-10)


def test_benchmark_hermitian_and_physical():
    f = benchmark_state(GRID)
    f.validate()
    np.testing.assert_array_equal(f.data[:, :, 1, 0], np.conj(f.data[:, :, 0, 1]))
    lam = f.eigenvalues()
    assert lam.min() >= -1e-9 and lam.max() <= 1.0 + 1e-9


def test_benchmark_tail_decay():
    f = benchmark_state(GRID)
    # spin-coherence entries die out with their smooth cutoffs near eps_max
    assert np.max(np.abs(f.data[:, -1, 0, 1])) <= 1e-10


def test_benchmark_moments_grid_convergent():
    base = EnergyGrid(n=29, h=0.5)
    e1 = total_energy(benchmark_state(base), MASSES)
    e2 = total_energy(benchmark_state(base.refine(2)), MASSES)
    e4 = total_energy(benchmark_state(base.refine(4)), MASSES)
    assert abs(e4 - e2) <= abs(e2 - e1) / 2.0


def test_benchmark_needs_wide_grid():
    with pytest.raises(ValidationError):
        benchmark_state(EnergyGrid(n=8, h=0.5))


def test_build_state_uniform():
    f = build_state(StateSpec(variant="uniform", level=0.5), GRID, MASSES)
    np.testing.assert_allclose(f.data[:, 3], np.broadcast_to(0.5 * np.eye(2), (4, 2, 2)), atol=0)
    with pytest.raises(ValidationError):
        build_state(StateSpec(variant="uniform"), GRID, MASSES)


def test_build_state_fermi_dirac_delegates():
    params = EquilibriumParams(
        variant="General",
        beta=1.0,
        nu=(0.3, 0.1, -0.2),
        shifts=(),
        basis=np.broadcast_to(np.eye(2, dtype=complex), (4, 2, 2)).copy(),
    )
    f = build_state(StateSpec(variant="fermi-dirac", params=params), GRID, MASSES)
    lam = f.eigenvalues()
    assert lam.min() > 0.0 and lam.max() < 1.0


def test_build_state_custom_roundtrip(tmp_path):
    f = benchmark_state(GRID)
    path = tmp_path / "state.csv"
    write_snapshot(f, path)
    back = build_state(StateSpec(variant="custom", path=str(path)), GRID, MASSES)
    np.testing.assert_array_equal(back.data, f.data)
    with pytest.raises(ValidationError):
        build_state(StateSpec(variant="custom", path=str(path)), EnergyGrid(n=8, h=0.5), MASSES)


def test_build_state_unknown_variant():
    with pytest.raises(ValidationError):
        build_state(StateSpec(variant="noise"), GRID, MASSES)
