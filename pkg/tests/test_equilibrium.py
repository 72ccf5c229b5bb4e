import numpy as np
import pytest

from spinboltz.conservation import (
    DIAGONAL_PATTERN,
    GENERAL,
    IDENTITY_FAMILY,
    ZERO_OUTER_FRAME,
    StructureClass,
    classify_vop,
    evaluate_conserved,
)
from spinboltz.entropy import entropy_production
from spinboltz.equilibrium import (
    EquilibriumParams,
    chemical_potentials,
    fermi_dirac,
    fit_equilibrium,
    stationarity_residual,
)
from spinboltz.errors import FitFailure, ValidationError
from spinboltz.grid import EnergyGrid, random_physical_field
from spinboltz.initial import benchmark_state
from spinboltz.model import DEFAULT_MASSES
from spinboltz.presets import make_preset
from spinboltz.spinalg import I2

MASSES = np.array(DEFAULT_MASSES)
EYE_BASIS = np.broadcast_to(I2, (4, 2, 2)).copy()


def general_params(beta=1.0, nu=(0.3, 0.1, -0.2)):
    return EquilibriumParams(variant=GENERAL, beta=beta, nu=nu, shifts=(), basis=EYE_BASIS)


def test_params_validation():
    with pytest.raises(ValidationError):
        EquilibriumParams(variant=GENERAL, beta=-1.0, nu=(0, 0, 0), shifts=(), basis=EYE_BASIS)
    with pytest.raises(ValidationError):
        EquilibriumParams(variant=GENERAL, beta=1.0, nu=(0, 0, 0), shifts=(0.1,), basis=EYE_BASIS)
    with pytest.raises(ValidationError):
        EquilibriumParams(
            variant=ZERO_OUTER_FRAME, beta=1.0, nu=(0, 0, 0), shifts=(0.1,), basis=EYE_BASIS
        )


def test_parameter_counts_per_class():
    assert general_params().n_parameters() == 4
    p5 = EquilibriumParams(
        variant=DIAGONAL_PATTERN, beta=1.0, nu=(0, 0, 0), shifts=(0.3,), basis=EYE_BASIS
    )
    assert p5.n_parameters() == 5
    p5b = EquilibriumParams(
        variant=IDENTITY_FAMILY, beta=1.0, nu=(0, 0, 0), shifts=(0.3,), basis=EYE_BASIS
    )
    assert p5b.n_parameters() == 5
    p6 = EquilibriumParams(
        variant=ZERO_OUTER_FRAME, beta=1.0, nu=(0, 0, 0), shifts=(0.2, 0.5), basis=EYE_BASIS
    )
    assert p6.n_parameters() == 6


def test_chemical_potentials_general():
    mu = chemical_potentials(general_params(nu=(1.0, 2.0, 3.0)))
    np.testing.assert_allclose(mu[:, 0], mu[:, 1], atol=0)
    assert mu[3, 0] == pytest.approx(2.0)  # nu_d = nu_a + nu_c - nu_b
    assert mu[0, 0] - mu[1, 0] + mu[2, 0] - mu[3, 0] == pytest.approx(0.0, abs=1e-14)


def test_chemical_potentials_diagonal_split():
    p = EquilibriumParams(
        variant=DIAGONAL_PATTERN, beta=1.0, nu=(0.2, -0.1, 0.4), shifts=(0.3,), basis=EYE_BASIS
    )
    mu = chemical_potentials(p)
    np.testing.assert_allclose(mu[:, 0] - mu[:, 1], 0.6, atol=1e-14)


def test_chemical_potentials_zero_frame_all_channels():
    p = EquilibriumParams(
        variant=ZERO_OUTER_FRAME,
        beta=1.0,
        nu=(0.2, -0.1, 0.4),
        shifts=(0.2, 0.5),
        basis=EYE_BASIS,
    )
    mu = chemical_potentials(p)  # canonical pattern check runs inside
    # explicit enumeration of all 16 combinations against the coupled set
    from spinboltz.presets import ZERO_FRAME_VOP

    for row in range(4):
        for col in range(4):
            if abs(ZERO_FRAME_VOP[row, col]) == 0.0:
                continue
            s1, s3 = divmod(row, 2)
            s2, s4 = divmod(col, 2)
            gap = mu[0, s1] - mu[1, s2] + mu[2, s3] - mu[3, s4]
            assert abs(gap) <= 1e-12


def test_chemical_potentials_inconsistent_with_vop():
    # spin-split potentials break the condition on a fully coupled tensor
    p = EquilibriumParams(
        variant=ZERO_OUTER_FRAME,
        beta=1.0,
        nu=(0.0, 0.0, 0.0),
        shifts=(0.3, -0.2),
        basis=EYE_BASIS,
    )
    dense = np.ones((4, 4))
    with pytest.raises(ValidationError):
        chemical_potentials(p, vop=dense)


def test_fermi_dirac_half_occupation_at_mu():
    grid = EnergyGrid(n=9, h=0.5)
    p = general_params(beta=1.7, nu=(2.0, 2.0, 2.0))  # mu = 2.0 = eps_4
    f = fermi_dirac(p, grid, MASSES)
    lam = np.linalg.eigvalsh(f.data[0, 4])
    np.testing.assert_allclose(lam, 0.5, atol=1e-15)


def test_fermi_dirac_large_beta_tail():
    grid = EnergyGrid(n=60, h=0.25)
    p = general_params(beta=5.0, nu=(0.0, 0.0, 0.0))
    f = fermi_dirac(p, grid, MASSES)
    cutoff = int(np.ceil((10.0 / 5.0) / grid.h))
    assert np.max(np.abs(f.data[:, cutoff:])) <= 1e-3


def test_fermi_dirac_physical_over_parameter_box():
    grid = EnergyGrid(n=12, h=1.0)
    for beta in (0.05, 1.0, 50.0):
        for mu in (-10.0, 0.0, 10.0):
            p = general_params(beta=beta, nu=(mu, mu, mu))
            f = fermi_dirac(p, grid, MASSES)
            f.validate()
            lam = f.eigenvalues()
            # occupations may underflow to exactly 0/1 at extreme beta*mu
            assert lam.min() >= 0.0 and lam.max() <= 1.0


def test_fit_recovers_known_params():
    grid = EnergyGrid(n=40, h=0.35)
    model = make_preset("zero-frame")
    sclass = classify_vop(model.vop)
    truth = EquilibriumParams(
        variant=ZERO_OUTER_FRAME,
        beta=1.3,
        nu=(0.6, 0.1, -0.2),
        shifts=(0.25, -0.15),
        basis=EYE_BASIS,
    )
    w0 = fermi_dirac(truth, grid, model.masses)
    fitted = fit_equilibrium(w0, sclass, model.masses)
    assert fitted.beta == pytest.approx(truth.beta, abs=1e-8)
    np.testing.assert_allclose(fitted.nu, truth.nu, atol=1e-8)
    np.testing.assert_allclose(fitted.shifts, truth.shifts, atol=1e-8)


def test_fit_benchmark_identity_family_beta():
    model = make_preset("beta-decay")
    sclass = classify_vop(model.vop)
    grid = EnergyGrid(n=56, h=0.25).refine(4)
    params = fit_equilibrium(benchmark_state(grid), sclass, model.masses)
    assert params.beta == pytest.approx(0.8193, abs=0.01)


def test_fit_roundtrip_conserved(rng):
    grid = EnergyGrid(n=24, h=0.6)
    model = make_preset("zero-frame")
    sclass = classify_vop(model.vop)
    w0 = benchmark_state(grid)
    params = fit_equilibrium(w0, sclass, model.masses)
    eq = fermi_dirac(params, grid, model.masses)
    qa = evaluate_conserved(w0, model.masses, sclass)
    qb = evaluate_conserved(eq, model.masses, sclass)
    assert np.max(np.abs(qa - qb) / np.maximum(np.abs(qa), 1.0)) <= 1e-8


def test_fit_failure_carries_best_residual():
    grid = EnergyGrid(n=16, h=0.9)
    model = make_preset("beta-decay")
    sclass = classify_vop(model.vop)
    w0 = benchmark_state(grid)
    with pytest.raises(FitFailure) as err:
        fit_equilibrium(w0, sclass, model.masses, max_iter=1, restarts=0)
    assert err.value.best_residual is not None and err.value.best_residual > 0


def _fd_field_with_raw_mu(grid, beta, mu):
    """Fermi-Dirac blocks with independently chosen potentials (no constraint)."""
    from spinboltz.equilibrium import occupation
    from spinboltz.grid import WignerField

    data = np.zeros((4, grid.n, 2, 2), dtype=complex)
    for s in range(4):
        lam = occupation(beta, grid.energies, mu[s])
        data[s, :, 0, 0] = lam
        data[s, :, 1, 1] = lam
    return WignerField(grid, data)


def test_stationarity_residual_and_negative_control():
    model = make_preset("beta-decay")
    sclass = classify_vop(model.vop)
    coarse = EnergyGrid(n=20, h=0.7)
    fine = coarse.refine(2)
    params = fit_equilibrium(benchmark_state(fine), sclass, model.masses)

    # the discrete operator annihilates consistent Fermi-Dirac states at any
    # resolution; both residuals sit at round-off, far below operator scale
    scale = np.max(np.abs(benchmark_state(coarse).data)) * 50.0
    r_coarse = stationarity_residual(fermi_dirac(params, coarse, model.masses), model)
    r_fine = stationarity_residual(fermi_dirac(params, fine, model.masses), model)
    floor = 1e-10 * scale
    assert r_coarse <= floor and r_fine <= floor

    # potentials violating the coupled-channel linear condition: the residual
    # is bounded away from zero and does not vanish under refinement
    mu = (0.5, 0.2, -0.1, 0.9)  # mu_a - mu_b + mu_c - mu_d = -0.7
    b_coarse = stationarity_residual(_fd_field_with_raw_mu(coarse, 1.1, mu), model)
    b_fine = stationarity_residual(_fd_field_with_raw_mu(fine, 1.1, mu), model)
    assert b_coarse > 1e3 * floor
    assert b_fine > 0.5 * b_coarse


def test_entropy_production_at_fit(beta_model):
    grid = EnergyGrid(n=20, h=0.7)
    sclass = classify_vop(beta_model.vop)
    params = fit_equilibrium(benchmark_state(grid), sclass, beta_model.masses)
    eq = fermi_dirac(params, grid, beta_model.masses)
    assert entropy_production(eq, beta_model) <= 1e-12
