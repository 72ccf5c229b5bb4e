"""Fermi-Dirac equilibrium states and the conserved-quantity matching fit.

Stationary states have occupation eigenvalues 1/(exp(beta(eps - mu)) + 1)
with a spin basis independent of energy.  The chemical potentials are
constrained by the coupled-channel condition

    mu_a(s1) - mu_b(s2) + mu_c(s3) - mu_d(s4) = 0

for every mode combination the pair tensor couples, which per structure
class leaves

    General          mu = nu_alpha                      (4 parameters)
    DiagonalPattern  mu = nu_alpha + c z_sigma          (5)
    IdentityFamily   as diagonal, in the eigenbasis of the conserved
                     total density                      (5)
    ZeroOuterFrame   mu = nu_alpha + c_alpha z_sigma,
                     c_a = c_c, c_b = c_d               (6)

with nu_d = nu_a + nu_c - nu_b in all cases and z = (+1, -1).  The fit picks
the parameters so that the Fermi-Dirac state reproduces the conserved vector
of the initial state, via damped Newton with finite-difference Jacobian.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .conservation import (
    DIAGONAL_PATTERN,
    GENERAL,
    IDENTITY_FAMILY,
    ZERO_OUTER_FRAME,
    species_densities_in_frame,
)
from .errors import FitFailure, ValidationError
from .grid import WignerField, moment_weights, total_energy
from .spinalg import I2

MU_CONDITION_TOL = 1e-12

_Z = np.array([1.0, -1.0])


@dataclass(frozen=True)
class EquilibriumParams:
    """Inverse temperature, per-species potentials and the spin basis.

    nu holds the three free species potentials (a, b, c); the d potential is
    always the derived combination nu_a + nu_c - nu_b.  `shifts` is empty for
    spin-independent classes, (c,) for the diagonal/identity classes and
    (c_a, c_b) for the zero-outer-frame class.  `basis` columns are the
    per-species eigenmodes in the physical (unrotated) frame.
    """

    variant: str
    beta: float
    nu: tuple
    shifts: tuple
    basis: np.ndarray  # (4, 2, 2) complex

    def __post_init__(self):
        if self.beta <= 0:
            raise ValidationError(f"inverse temperature must be positive, got {self.beta}")
        if len(self.nu) != 3:
            raise ValidationError("nu must hold the three free potentials (a, b, c)")
        expected = {GENERAL: 0, DIAGONAL_PATTERN: 1, IDENTITY_FAMILY: 1, ZERO_OUTER_FRAME: 2}
        if self.variant not in expected:
            raise ValidationError(f"unknown structure variant {self.variant!r}")
        if len(self.shifts) != expected[self.variant]:
            raise ValidationError(
                f"{self.variant} expects {expected[self.variant]} spin shifts,"
                f" got {len(self.shifts)}"
            )
        basis = np.asarray(self.basis, dtype=complex)
        if basis.shape != (4, 2, 2):
            raise ValidationError("basis must have shape (4, 2, 2)")
        object.__setattr__(self, "nu", tuple(float(v) for v in self.nu))
        object.__setattr__(self, "shifts", tuple(float(v) for v in self.shifts))
        object.__setattr__(self, "basis", basis)

    @property
    def nu_full(self):
        na, nb, nc = self.nu
        return np.array([na, nb, nc, na + nc - nb])

    def n_parameters(self):
        return 1 + len(self.nu) + len(self.shifts)


def spin_shift_table(variant, shifts):
    """Per-species spin-shift coefficients c_alpha."""
    if variant == GENERAL:
        return np.zeros(4)
    if variant in (DIAGONAL_PATTERN, IDENTITY_FAMILY):
        return np.full(4, shifts[0])
    if variant == ZERO_OUTER_FRAME:
        ca, cb = shifts
        return np.array([ca, cb, ca, cb])
    raise ValidationError(f"unknown structure variant {variant!r}")


def chemical_potentials(params, vop=None, tol=MU_CONDITION_TOL):
    """mu[alpha, sigma] table; verifies the coupled-channel linear conditions.

    With a pair tensor supplied, every mode combination it actually couples is
    checked; otherwise the canonical pattern of the params' variant is used.
    """
    c = spin_shift_table(params.variant, params.shifts)
    mu = params.nu_full[:, None] + c[:, None] * _Z[None, :]

    if vop is not None:
        coupled = np.abs(np.asarray(vop)) > tol
    else:
        coupled = _canonical_pattern(params.variant)
    for row in range(4):
        for col in range(4):
            if not coupled[row, col]:
                continue
            s1, s3 = divmod(row, 2)
            s2, s4 = divmod(col, 2)
            gap = mu[0, s1] - mu[1, s2] + mu[2, s3] - mu[3, s4]
            if abs(gap) > tol:
                raise ValidationError(
                    f"chemical potentials violate the coupled-channel condition at"
                    f" modes ({s1}{s3}|{s2}{s4}): gap {gap:.3e}"
                )
    return mu


def _canonical_pattern(variant):
    pat = np.zeros((4, 4), dtype=bool)
    pat[1:3, 1:3] = True
    if variant in (DIAGONAL_PATTERN, IDENTITY_FAMILY):
        pat[0, 0] = True
        pat[3, 3] = True
    elif variant == GENERAL:
        pat[:, :] = True
    return pat


def occupation(beta, eps, mu):
    """Fermi-Dirac occupation 1/(exp(beta(eps-mu)) + 1), overflow-safe."""
    return expit(-beta * (np.asarray(eps, dtype=float) - mu))


def fermi_dirac(params, grid, masses):
    """Build the equilibrium Wigner field for the given parameters."""
    mu = chemical_potentials(params)
    eps = grid.energies
    data = np.empty((4, grid.n, 2, 2), dtype=complex)
    for s in range(4):
        lam = occupation(params.beta, eps[:, None], mu[s][None, :])  # (n, 2)
        B = params.basis[s]
        data[s] = np.einsum("ik,jk,lk->jil", B, lam, B.conj())
    return WignerField(grid, data)


# -- conserved-vector fit --------------------------------------------------------


def _reduced_names(variant):
    if variant == GENERAL:
        return ["tr_rho", "tr_ab", "tr_ad", "energy"]
    if variant in (DIAGONAL_PATTERN, IDENTITY_FAMILY):
        return ["tr_ab", "tr_ad", "energy", "rho_uu", "rho_dd"]
    if variant == ZERO_OUTER_FRAME:
        return ["tr_ab", "tr_ad", "energy", "rho_uu", "rho_dd", "sigma_z_ac"]
    raise ValidationError(f"unknown structure variant {variant!r}")


def _reduced_from_rho(rho_diag, energy, variant):
    """Reduced conserved vector from per-species diagonal densities (4,2)."""
    tr_sp = rho_diag.sum(axis=1)
    tot = rho_diag.sum(axis=0)
    if variant == GENERAL:
        return np.array([tot.sum(), tr_sp[0] + tr_sp[1], tr_sp[0] + tr_sp[3], energy])
    base = [tr_sp[0] + tr_sp[1], tr_sp[0] + tr_sp[3], energy, tot[0], tot[1]]
    if variant == ZERO_OUTER_FRAME:
        sz = (rho_diag[0, 0] - rho_diag[0, 1]) + (rho_diag[2, 0] - rho_diag[2, 1])
        base.append(sz)
    return np.array(base)


def _reduced_target(field, masses, sclass):
    """Reduced conserved vector of a field, in the fit frame.

    For the identity family the frame is the eigenbasis of the conserved
    total density (computed in the class frame); otherwise the class frame's
    standard basis.
    """
    rho = species_densities_in_frame(field, masses, sclass)
    if sclass.variant == IDENTITY_FAMILY:
        _, vecs = np.linalg.eigh(rho.sum(axis=0))
        rho = np.einsum("ji,sjk,kl->sil", vecs.conj(), rho, vecs)
    rho_diag = np.stack([np.diagonal(r).real for r in rho])
    return _reduced_from_rho(rho_diag, total_energy(field, masses), sclass.variant)


def _fd_reduced(theta, variant, grid, masses):
    """Reduced conserved vector of the Fermi-Dirac state with parameters theta."""
    beta = theta[0]
    nu = np.array([theta[1], theta[2], theta[3], theta[1] + theta[3] - theta[2]])
    c = spin_shift_table(variant, tuple(theta[4:]))
    w = moment_weights(grid, masses)
    eps = grid.energies
    lam = occupation(beta, eps[None, :, None], (nu[:, None] + c[:, None] * _Z[None, :])[:, None, :])
    rho_diag = np.einsum("sj,sjk->sk", w, lam)
    energy = float(np.einsum("sj,j,sjk->", w, eps, lam))
    return _reduced_from_rho(rho_diag, energy, variant)


def _theta_to_params(theta, variant, basis):
    return EquilibriumParams(
        variant=variant,
        beta=float(theta[0]),
        nu=(float(theta[1]), float(theta[2]), float(theta[3])),
        shifts=tuple(float(v) for v in theta[4:]),
        basis=basis,
    )


def fit_basis_for_class(field, masses, sclass):
    """Physical-frame spin basis used by the equilibrium state of each class."""
    if sclass.variant == IDENTITY_FAMILY:
        rho = species_densities_in_frame(field, masses, sclass)
        _, vecs = np.linalg.eigh(rho.sum(axis=0))
        frame_basis = np.broadcast_to(vecs, (4, 2, 2)).copy()
    else:
        frame_basis = np.broadcast_to(I2, (4, 2, 2)).copy()
    if sclass.gauge is not None:
        # class frame -> physical frame
        inv = sclass.gauge.inverse()
        frame_basis = np.einsum("sij,sjk->sik", inv.u, frame_basis)
    return frame_basis


def fit_equilibrium(
    field,
    sclass,
    masses,
    tol=1e-10,
    max_iter=200,
    restarts=10,
    seed=20,
):
    """Fit (beta, potentials, shifts) so the Fermi-Dirac state matches the
    conserved vector of `field`.

    Damped Newton on the residual with a central finite-difference Jacobian
    (relative step 1e-6); converged when every residual component is within
    1e-10 of scale.  Non-convergence after the restart budget raises
    FitFailure carrying the best residual seen.
    """
    variant = sclass.variant
    basis = fit_basis_for_class(field, masses, sclass)
    target = _reduced_target(field, masses, sclass)
    scale = np.maximum(np.abs(target), 1.0)
    grid = field.grid
    masses = np.asarray(masses, dtype=float)

    n_shift = {GENERAL: 0, DIAGONAL_PATTERN: 1, IDENTITY_FAMILY: 1, ZERO_OUTER_FRAME: 2}[variant]

    def residual(theta):
        return _fd_reduced(theta, variant, grid, masses) - target

    def jacobian(theta):
        k = theta.size
        J = np.empty((target.size, k))
        for i in range(k):
            step = 1e-6 * max(abs(theta[i]), 1.0)
            tp = theta.copy()
            tm = theta.copy()
            tp[i] += step
            tm[i] -= step
            if i == 0:
                tm[i] = max(tm[i], 1e-8)  # keep beta positive
            J[:, i] = (residual(tp) - residual(tm)) / (tp[i] - tm[i])
        return J

    rng = np.random.default_rng(seed)
    best_norm = np.inf
    best_theta = None

    for attempt in range(restarts + 1):
        if attempt == 0:
            theta = np.array([1.0] + [0.0] * 3 + [0.0] * n_shift)
        else:
            theta = np.concatenate(
                [
                    [math.exp(rng.uniform(math.log(0.1), math.log(10.0)))],
                    rng.normal(0.0, 1.0, size=3),
                    rng.normal(0.0, 0.5, size=n_shift),
                ]
            )
        r = residual(theta)
        for _ in range(max_iter):
            if np.all(np.abs(r) <= tol * scale):
                return _theta_to_params(theta, variant, basis)
            J = jacobian(theta)
            try:
                step = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(J, -r, rcond=None)[0]
            # backtracking with a positivity guard on beta
            improved = False
            for damp in range(12):
                trial = theta + step * (0.5**damp)
                if trial[0] <= 1e-6:
                    continue
                r_trial = residual(trial)
                if np.max(np.abs(r_trial) / scale) < np.max(np.abs(r) / scale):
                    theta, r = trial, r_trial
                    improved = True
                    break
            if not improved:
                break
        norm = float(np.max(np.abs(r) / scale))
        if np.all(np.abs(r) <= tol * scale):
            return _theta_to_params(theta, variant, basis)
        if norm < best_norm:
            best_norm = norm
            best_theta = theta.copy()

    best = _theta_to_params(best_theta, variant, basis) if best_theta is not None else None
    raise FitFailure(
        f"equilibrium fit did not converge (best residual {best_norm:.3e})",
        best_residual=best_norm,
        best_params=best,
    )


def stationarity_residual(field, model, include_cons=True, tables=None, engine=None):
    """Largest |entry| of the collision output; vanishes as the grid refines
    when the field is a consistent equilibrium state."""
    from .collision import rhs

    out = rhs(field, model, include_cons=include_cons, tables=tables, engine=engine)
    return float(np.max(np.abs(out.total)))
