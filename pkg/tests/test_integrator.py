import numpy as np
import pytest

from spinboltz.conservation import classify_vop, conserved_rates, evaluate_conserved
from spinboltz.equilibrium import fermi_dirac, fit_equilibrium
from spinboltz.errors import StepRejected, ValidationError
from spinboltz.grid import EnergyGrid, WignerField, random_physical_field
from spinboltz.initial import benchmark_state
from spinboltz.integrator import StepConfig, midpoint_step, run

GRID = EnergyGrid(n=16, h=0.9)


def test_step_config_validation():
    with pytest.raises(ValidationError):
        StepConfig(dt=0.0, t_end=1.0)
    with pytest.raises(ValidationError):
        StepConfig(dt=0.5, t_end=0.2)
    with pytest.raises(ValidationError):
        StepConfig(dt=0.1, t_end=1.0, stride=0)
    with pytest.raises(ValidationError):
        StepConfig(dt=0.3, t_end=1.0).n_steps
    assert StepConfig(dt=0.1, t_end=1.0).n_steps == 10
    assert StepConfig(dt=0.1, t_end=0.0).n_steps == 0


def test_equilibrium_is_fixed_point(beta_model):
    sclass = classify_vop(beta_model.vop)
    params = fit_equilibrium(benchmark_state(GRID), sclass, beta_model.masses)
    eq = fermi_dirac(params, GRID, beta_model.masses)
    stepped, clamped = midpoint_step(eq, 1e-3, beta_model)
    assert clamped == 0
    assert np.max(np.abs(stepped.data - eq.data)) <= 1e-14


def test_order_of_accuracy(beta_model):
    w0 = benchmark_state(GRID)

    def advance(field, dt, steps):
        for _ in range(steps):
            field, _ = midpoint_step(field, dt, beta_model)
        return field

    # local error is O(dt^3): the one-step vs two-half-steps defect drops 8x
    dt = 4e-3
    err1 = np.max(np.abs(advance(w0.copy(), dt, 1).data - advance(w0.copy(), dt / 2, 2).data))
    err2 = np.max(
        np.abs(advance(w0.copy(), dt / 2, 1).data - advance(w0.copy(), dt / 4, 2).data)
    )
    assert 6.0 <= err1 / err2 <= 10.0

    # global error over a fixed horizon is O(dt^2): halving dt gains 4x
    t_end = 0.016
    ref = advance(w0.copy(), t_end / 32, 32)
    g1 = np.max(np.abs(advance(w0.copy(), t_end / 4, 4).data - ref.data))
    g2 = np.max(np.abs(advance(w0.copy(), t_end / 8, 8).data - ref.data))
    assert 3.0 <= g1 / g2 <= 5.5


def test_linear_invariants_preserved_per_step(beta_model):
    sclass = classify_vop(beta_model.vop)
    w0 = benchmark_state(GRID)
    before = evaluate_conserved(w0, beta_model.masses, sclass)
    stepped, _ = midpoint_step(w0, 2e-3, beta_model)
    after = evaluate_conserved(stepped, beta_model.masses, sclass)
    assert np.max(np.abs(after - before) / np.maximum(np.abs(before), 1.0)) <= 1e-12


def test_guard_rejects_blowup(beta_model):
    w0 = benchmark_state(GRID)
    with pytest.raises(StepRejected) as err:
        midpoint_step(w0, 0.5, beta_model)
    assert err.value.shell is not None
    assert err.value.species is not None
    assert err.value.eigenvalue is not None


def test_run_t_end_zero(beta_model):
    sclass = classify_vop(beta_model.vop)
    w0 = benchmark_state(GRID)
    cfg = StepConfig(dt=1e-3, t_end=0.0)
    traj, final = run(w0, cfg, beta_model, sclass)
    assert traj.times.shape == (1,)
    np.testing.assert_array_equal(final.data, w0.data)
    assert traj.conserved.shape[0] == 1


def test_run_from_equilibrium_is_constant(beta_model):
    sclass = classify_vop(beta_model.vop)
    params = fit_equilibrium(benchmark_state(GRID), sclass, beta_model.masses)
    eq = fermi_dirac(params, GRID, beta_model.masses)
    cfg = StepConfig(dt=2e-3, t_end=0.02, stride=2)
    traj, _ = run(eq, cfg, beta_model, sclass, eq_field=eq)
    assert np.max(traj.entropy) - np.min(traj.entropy) <= 1e-10
    assert np.max(traj.l1_to_equilibrium) <= 1e-10
    drift = np.max(np.abs(traj.conserved - traj.conserved[0]), axis=0)
    assert np.max(drift / np.maximum(np.abs(traj.conserved[0]), 1.0)) <= 1e-12


def test_run_entropy_monotone_and_samples(beta_model):
    sclass = classify_vop(beta_model.vop)
    w0 = benchmark_state(GRID)
    cfg = StepConfig(dt=2e-3, t_end=0.1, stride=10)
    traj, final = run(w0, cfg, beta_model, sclass)
    assert np.all(np.diff(traj.times) > 0)
    assert np.all(np.diff(traj.entropy) >= -1e-12)
    assert traj.times[-1] == pytest.approx(0.1)
    final.validate()


def test_run_deterministic(beta_model):
    sclass = classify_vop(beta_model.vop)
    w0 = benchmark_state(GRID)
    cfg = StepConfig(dt=2e-3, t_end=0.02, stride=2)
    t1, f1 = run(w0, cfg, beta_model, sclass)
    t2, f2 = run(w0, cfg, beta_model, sclass)
    np.testing.assert_array_equal(f1.data, f2.data)
    np.testing.assert_array_equal(t1.entropy, t2.entropy)
    np.testing.assert_array_equal(t1.conserved, t2.conserved)


def test_on_sample_callback(beta_model):
    sclass = classify_vop(beta_model.vop)
    w0 = benchmark_state(GRID)
    seen = []
    cfg = StepConfig(dt=2e-3, t_end=0.02, stride=5)
    run(w0, cfg, beta_model, sclass, on_sample=lambda t, f: seen.append(t))
    np.testing.assert_allclose(seen, [0.0, 0.01, 0.02])
