"""Explicit midpoint time stepping with physicality guards and diagnostics.

The midpoint rule preserves every linear conserved functional exactly (each
stage RHS is annihilated by them), so conservation drift over a run is pure
round-off.  After each full step eigenvalue excursions inside the round-off
band are clamped back into [0, 1]; excursions beyond the reject band abort
the step with a "reduce dt" error.  Entropy is checked to be non-decreasing
(tolerance -1e-12) after every accepted step.
"""

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .collision import collision_tables, rhs
from .conservation import conserved_names, evaluate_conserved
from .entropy import entropy, entropy_production
from .errors import InvariantFailure, StepRejected, ValidationError
from .grid import CLAMP_BAND, REJECT_BAND, WignerField, l1_distance
from .model import SPECIES
from .spinalg import hermitian_part

ENTROPY_STEP_TOL = 1e-12


@dataclass(frozen=True)
class StepConfig:
    dt: float
    t_end: float
    stride: int = 10
    include_cons: bool = True
    engine: str | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError("dt must be positive")
        if self.t_end < 0:
            raise ValidationError("t_end must be non-negative")
        if self.t_end > 0 and self.dt > self.t_end:
            raise ValidationError("dt must not exceed t_end")
        if self.stride < 1:
            raise ValidationError("snapshot stride must be >= 1")

    @property
    def n_steps(self):
        if self.t_end == 0:
            return 0
        steps = int(round(self.t_end / self.dt))
        if abs(steps * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValidationError("t_end must be an integer multiple of dt")
        return steps


@dataclass
class Trajectory:
    """Sampled diagnostics of one run; times are strictly increasing."""

    times: np.ndarray
    entropy: np.ndarray
    sigma: np.ndarray
    conserved: np.ndarray          # (n_samples, k)
    conserved_names: list
    l1_to_equilibrium: np.ndarray  # NaN-filled when no reference state given
    clamp_events: list = dataclass_field(default_factory=list)


def _guard_and_clamp(field, t):
    """Clamp round-off excursions; reject anything beyond the guard band."""
    lam = field.eigenvalues()
    excess = np.maximum(-lam, lam - 1.0)
    worst = float(excess.max())
    if worst > REJECT_BAND:
        s, j, k = np.unravel_index(int(np.argmax(excess)), lam.shape)
        raise StepRejected(
            f"eigenvalue {lam[s, j, k]:.6e} outside [-{REJECT_BAND:g}, 1+{REJECT_BAND:g}]"
            f" at species {SPECIES[s]}, shell {j}, t={t:.6g}: reduce dt",
            species=SPECIES[s],
            shell=int(j),
            time=t,
            eigenvalue=float(lam[s, j, k]),
        )
    clamped = field.clamp(CLAMP_BAND) if worst > 0.0 else 0
    return clamped


def midpoint_step(field, dt, model, include_cons=True, tables=None, engine=None, t=0.0):
    """One explicit midpoint step; returns (new_field, clamped_block_count)."""
    tables = tables or collision_tables(field.grid, model.masses)
    k1 = rhs(field, model, include_cons=include_cons, tables=tables, engine=engine).total
    mid = WignerField(field.grid, hermitian_part(field.data + (0.5 * dt) * k1), validate=False)
    k2 = rhs(mid, model, include_cons=include_cons, tables=tables, engine=engine).total
    out = WignerField(field.grid, hermitian_part(field.data + dt * k2), validate=False)
    clamped = _guard_and_clamp(out, t + dt)
    return out, clamped


def run(
    w0,
    cfg,
    model,
    sclass,
    eq_field=None,
    on_sample=None,
    check_entropy=True,
):
    """Integrate to t_end, recording diagnostics every `stride` steps.

    `eq_field` (same grid) enables the L1-distance-to-equilibrium column;
    `on_sample(t, field)` is invoked at every sampled time, e.g. to write
    snapshots.  Identical inputs produce bitwise-identical trajectories.
    """
    tables = collision_tables(w0.grid, model.masses)
    names = conserved_names(sclass)

    times = []
    entropies = []
    sigmas = []
    conserved = []
    l1s = []
    clamp_events = []

    def sample(t, field):
        times.append(t)
        entropies.append(entropy(field, model.masses))
        sigmas.append(entropy_production(field, model, tables=tables))
        conserved.append(evaluate_conserved(field, model.masses, sclass))
        if eq_field is not None:
            l1s.append(l1_distance(field, eq_field, model.masses))
        else:
            l1s.append(np.nan)
        if on_sample is not None:
            on_sample(t, field)

    field = w0.copy()
    sample(0.0, field)
    s_prev = entropies[0]

    for k in range(1, cfg.n_steps + 1):
        t = k * cfg.dt
        field, clamped = midpoint_step(
            field,
            cfg.dt,
            model,
            include_cons=cfg.include_cons,
            tables=tables,
            engine=cfg.engine,
            t=t - cfg.dt,
        )
        if clamped:
            clamp_events.append((t, clamped))
        s_now = entropy(field, model.masses)
        if check_entropy and s_now < s_prev - ENTROPY_STEP_TOL:
            raise InvariantFailure(
                f"entropy decreased from {s_prev:.15g} to {s_now:.15g} at t={t:.6g}"
            )
        s_prev = s_now
        if k % cfg.stride == 0 or k == cfg.n_steps:
            sample(t, field)

    return (
        Trajectory(
            times=np.array(times),
            entropy=np.array(entropies),
            sigma=np.array(sigmas),
            conserved=np.array(conserved),
            conserved_names=names,
            l1_to_equilibrium=np.array(l1s),
            clamp_events=clamp_events,
        ),
        field,
    )
