import numpy as np
import pytest

from conftest import rand_block_stack, rand_full_rank
from spinboltz.collision import (
    HAVE_NUMBA,
    collision_tables,
    cons_operator,
    d_factor,
    diss_integrand,
    diss_operator,
    effective_hamiltonian,
    heff_integrand,
    rhs,
)
from spinboltz.equilibrium import EquilibriumParams, fermi_dirac
from spinboltz.grid import EnergyGrid, WignerField, random_physical_field
from spinboltz.model import GaugeRotation, InteractionSet, Model, gauge_blocks
from spinboltz.reference import (
    brute_cons_operator,
    brute_diss_operator,
    matrix_diss_integrand,
    matrix_heff_integrand,
)
from spinboltz.spinalg import I2, random_unitary

ENGINES = ["numpy"] + (["numba"] if HAVE_NUMBA else [])


def random_model(rng, masses=(1.0, 0.8, 0.2, 0.5)):
    inter = InteractionSet(
        vab=rand_full_rank(rng),
        vcd=rand_full_rank(rng),
        vad=rand_full_rank(rng),
        vcb=rand_full_rank(rng),
    )
    return Model.from_interactions(inter, masses=masses)


def test_d_factor_conventions():
    assert d_factor(1.0, 2.0, 3.0, 4.0) == 1.0
    assert d_factor(4.0, 2.0, 3.0, 1.0) == pytest.approx(0.5)
    assert d_factor(0.0, 1.0, 2.0, 3.0) == 1.0  # eps1 -> 0 limit
    assert d_factor(0.0, 0.0, 2.0, 3.0) == 0.0
    assert d_factor(2.0, 0.0, 1.0, 3.0) == 0.0


def test_diss_integrand_zero_field(beta_model):
    zero = np.zeros((4, 2, 2), dtype=complex)
    out = diss_integrand(beta_model.vops, zero, zero, zero, zero)
    np.testing.assert_allclose(out, 0.0, atol=1e-15)


def test_diss_integrand_half_filling(beta_model):
    half = np.broadcast_to(0.5 * I2, (4, 2, 2)).copy()
    out = diss_integrand(beta_model.vops, half, half, half, half)
    np.testing.assert_allclose(out, 0.0, atol=1e-14)


def test_diss_integrand_matches_matrix_form(rng):
    model = random_model(rng)
    for _ in range(25):
        blocks = [rand_block_stack(rng) for _ in range(4)]
        tens = diss_integrand(model.vops, *blocks)
        mat = matrix_diss_integrand(model.interactions, *blocks)
        assert np.max(np.abs(tens - mat)) <= 1e-12


def test_diss_integrand_particle_hole_antisymmetry(rng, beta_model):
    blocks = [rand_block_stack(rng) for _ in range(4)]
    holes = [np.broadcast_to(I2, (4, 2, 2)) - b for b in blocks]
    a = diss_integrand(beta_model.vops, *blocks)
    b = diss_integrand(beta_model.vops, *holes)
    np.testing.assert_allclose(b, -a, atol=1e-13)


def test_heff_integrand_tilde_invariance(rng, beta_model):
    w2, w3, w4 = (rand_block_stack(rng) for _ in range(3))
    holes = [np.broadcast_to(I2, (4, 2, 2)) - b for b in (w2, w3, w4)]
    a = heff_integrand(beta_model.vops, w2, w3, w4)
    b = heff_integrand(beta_model.vops, *holes)
    np.testing.assert_allclose(b, a, atol=1e-13)


def test_heff_integrand_matches_matrix_form(rng):
    model = random_model(rng)
    for _ in range(25):
        w2, w3, w4 = (rand_block_stack(rng) for _ in range(3))
        tens = heff_integrand(model.vops, w2, w3, w4)
        mat = matrix_heff_integrand(model.interactions, w2, w3, w4)
        assert np.max(np.abs(tens - mat)) <= 1e-12


def test_heff_integrand_vanishing_pair_slots(rng):
    # with W2 = W4 = 0 and identity couplings the a-component collapses to
    # -(2 tr[W3^c] I + 2 W3^c)
    inter = InteractionSet(vab=I2, vcd=I2, vad=I2, vcb=I2)
    model = Model.from_interactions(inter)
    zero = np.zeros((4, 2, 2), dtype=complex)
    w3 = rand_block_stack(rng)
    out = heff_integrand(model.vops, zero, w3, zero)
    expected = -2.0 * (np.trace(w3[2]) * I2 + w3[2])
    np.testing.assert_allclose(out[0], expected, atol=1e-13)


@pytest.mark.parametrize("engine", ENGINES)
def test_diss_operator_zero_and_half(small_grid, beta_model, engine):
    zero = WignerField.zeros(small_grid)
    np.testing.assert_allclose(
        diss_operator(zero, beta_model, engine=engine), 0.0, atol=1e-14
    )
    half = WignerField.uniform(small_grid, 0.5)
    out = diss_operator(half, beta_model, engine=engine)
    np.testing.assert_allclose(out, 0.0, atol=1e-12)


@pytest.mark.parametrize("engine", ENGINES)
def test_diss_operator_vs_brute(rng, small_grid, engine):
    model = random_model(rng)
    for form in ("matrix", "tensor"):
        f = random_physical_field(small_grid, rng)
        ours = diss_operator(f, model, engine=engine)
        brute = brute_diss_operator(f, model, form=form)
        scale = max(1.0, float(np.max(np.abs(brute))))
        assert np.max(np.abs(ours - brute)) / scale <= 1e-12


@pytest.mark.parametrize("engine", ENGINES)
def test_cons_operator_vs_brute(rng, small_grid, engine):
    model = random_model(rng)
    for form in ("matrix", "tensor"):
        f = random_physical_field(small_grid, rng)
        ours = cons_operator(f, model, engine=engine)
        brute = brute_cons_operator(f, model, form=form)
        scale = max(1.0, float(np.max(np.abs(brute))))
        assert np.max(np.abs(ours - brute)) / scale <= 1e-12


def test_cons_operator_spin_independent_state(small_grid, rng, beta_model):
    # scalar blocks commute with any effective Hamiltonian of the same form
    data = np.zeros((4, small_grid.n, 2, 2), dtype=complex)
    fill = rng.uniform(0.1, 0.9, size=(4, small_grid.n))
    data[:, :, 0, 0] = fill
    data[:, :, 1, 1] = fill
    f = WignerField(small_grid, data)
    out = cons_operator(f, beta_model)
    np.testing.assert_allclose(out, 0.0, atol=1e-12)


def test_detailed_balance(small_grid, beta_model):
    params = EquilibriumParams(
        variant="General",
        beta=1.1,
        nu=(0.4, -0.1, 0.2),
        shifts=(),
        basis=np.broadcast_to(I2, (4, 2, 2)).copy(),
    )
    feq = fermi_dirac(params, small_grid, beta_model.masses)
    out = diss_operator(feq, beta_model)
    scale = max(1.0, float(np.max(np.abs(diss_operator(
        random_physical_field(small_grid, np.random.default_rng(0)), beta_model)))))
    assert np.max(np.abs(out)) <= 1e-10 * scale


def test_outputs_hermitian(rng, small_grid, beta_model):
    f = random_physical_field(small_grid, rng)
    out = rhs(f, beta_model, include_cons=True)
    for blocks in (out.diss, out.cons, out.total):
        np.testing.assert_allclose(blocks, blocks.conj().swapaxes(-1, -2), atol=1e-12)


def test_engines_agree(rng):
    if not HAVE_NUMBA:
        pytest.skip("numba unavailable")
    grid = EnergyGrid(n=10, h=0.4)
    model = random_model(rng)
    f = random_physical_field(grid, rng)
    for op in (diss_operator, cons_operator):
        a = op(f, model, engine="numba")
        b = op(f, model, engine="numpy")
        scale = max(1.0, float(np.max(np.abs(b))))
        assert np.max(np.abs(a - b)) / scale <= 1e-12


def test_numba_thread_count_is_bitwise_stable(rng):
    if not HAVE_NUMBA:
        pytest.skip("numba unavailable")
    from spinboltz.collision import set_threads

    grid = EnergyGrid(n=12, h=0.4)
    model = random_model(rng)
    f = random_physical_field(grid, rng)
    set_threads(1)
    a = rhs(f, model, engine="numba").total
    set_threads(2)
    b = rhs(f, model, engine="numba").total
    np.testing.assert_array_equal(a, b)


def test_gauge_covariance_of_rhs(rng, small_grid):
    model = random_model(rng)
    f = random_physical_field(small_grid, rng)
    out = rhs(f, model, include_cons=True).total
    g = GaugeRotation(np.stack([random_unitary(rng) for _ in range(4)]))
    f_rot = WignerField(small_grid, gauge_blocks(g, f.data))
    out_rot = rhs(f_rot, model.rotated(g), include_cons=True).total
    expected = gauge_blocks(g, out)
    scale = max(1.0, float(np.max(np.abs(expected))))
    assert np.max(np.abs(out_rot - expected)) / scale <= 1e-11


def test_include_cons_toggle(rng, small_grid, beta_model):
    f = random_physical_field(small_grid, rng)
    out = rhs(f, beta_model, include_cons=False)
    assert out.cons is None
    np.testing.assert_array_equal(out.total, out.diss)
    full = rhs(f, beta_model, include_cons=True)
    np.testing.assert_allclose(
        full.total, full.diss + full.cons, atol=0
    )


def test_heff_hermitian_and_resonance_omission(rng, small_grid, beta_model):
    f = random_physical_field(small_grid, rng)
    H = effective_hamiltonian(f, beta_model)
    np.testing.assert_allclose(H, H.conj().swapaxes(-1, -2), atol=1e-12)
    tables = collision_tables(small_grid, beta_model.masses)
    assert tables.inv_k[2 * (small_grid.n - 1)] == 0.0  # k = 0 slot


def test_tables_shell_segments(small_grid, beta_model):
    tables = collision_tables(small_grid, beta_model.masses)
    n = small_grid.n
    # every quadruple is on-shell and inside the box
    np.testing.assert_array_equal(tables.i1 - tables.i2 + tables.i3 - tables.i4, 0)
    assert tables.i3.min() >= 0 and tables.i3.max() <= n - 1
    # i1-major enumeration with nonempty segments
    assert np.all(np.diff(tables.offsets) > 0)
    np.testing.assert_array_equal(np.sort(tables.i1), tables.i1)
