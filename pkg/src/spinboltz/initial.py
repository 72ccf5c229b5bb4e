"""Initial states: the bundled analytic benchmark state, synthetic fills,
tabulated states, and the special functions the benchmark formulas need.

The benchmark state is a smooth, spin-coherent four-species profile built
from elementary and special functions (error functions, Gamma, the sine
integral, the Airy function and the Riemann zeta function along a complex
ray).  It decays fast enough that the default grid cutoff eps_max ~ 14
truncates only negligible tails.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .errors import ValidationError
from .grid import WignerField, read_snapshot

ZETA_POLE_GUARD = 1e-6


def zeta_complex(s, terms=50):
    """Riemann zeta for complex s with Re(s) >= 0, away from the pole s=1.

    Uses the alternating (Dirichlet eta) series with Borwein's Chebyshev
    acceleration: zeta(s) = eta(s) / (1 - 2^(1-s)).  With ~50 terms the
    relative error is far below 1e-8 on the strip used here.
    """
    s = complex(s)
    if s.real < 0:
        raise ValidationError(f"zeta_complex needs Re(s) >= 0, got {s}")
    if abs(s - 1.0) < ZETA_POLE_GUARD:
        raise ValidationError(f"zeta evaluated too close to the pole s=1: {s}")

    n = int(terms)
    # Borwein d_k coefficients, built by the stable upward recurrence.
    d = np.empty(n + 1)
    d[0] = 1.0
    t = 1.0
    for j in range(1, n + 1):
        t *= (n + j - 1) * (n - j + 1) / ((2 * j - 1) * (2 * j))
        t *= 4.0
        d[j] = d[j - 1] + t
    eta = 0.0 + 0.0j
    for k in range(n):
        eta += (-1.0) ** k * (d[k] - d[n]) * (k + 1.0) ** (-s)
    eta /= -d[n]
    denom = 1.0 - 2.0 ** (1.0 - s)
    return eta / denom


_REAL_FNS = {
    "erf": lambda z: sp.erf(z),
    "erfc": lambda z: sp.erfc(z),
    "atan": lambda z: math.atan(z),
    "gamma": lambda z: sp.gamma(z),
    "si": lambda z: sp.sici(z)[0],
    "ai": lambda z: sp.airy(z)[0],
}


def special(fn, z):
    """Evaluate one of the named special functions with domain checks.

    erf/erfc/atan/gamma/si/ai take real arguments here; zeta takes complex z
    with Re(z) >= 0 (pole neighbourhood |z-1| < 1e-6 excluded).
    """
    name = fn.lower()
    if name == "zeta":
        return zeta_complex(z)
    if name not in _REAL_FNS:
        raise ValidationError(f"unknown special function {fn!r}")
    z = complex(z)
    if abs(z.imag) > 0:
        raise ValidationError(f"{fn} is evaluated on the real axis only, got {z}")
    return float(_REAL_FNS[name](z.real))


# -- analytic benchmark state --------------------------------------------------


def _benchmark_a(eps):
    uu = 2.5 * math.exp(-2.0 * eps) * (eps**2 + 0.25) ** 2
    ud = 42.0 * cmath.exp(
        2.0j * (eps - 1.0 / 3.0) - 0.5 * (eps - 15.0 / 4.0) ** 2 - 2.0 * eps
    )
    dd = (
        (1.0 / 6.0)
        * sp.erfc(eps - 6.0)
        * math.exp(-2.0 * eps / 3.0)
        * math.atan(eps + 1.0)
        * (2.0 * sp.erf(eps / 2.0) + 1.0 / 8.0)
        * (2.0 + 0.5 * math.sin(3.0 * eps))
    )
    return uu, ud, dd


def _benchmark_b(eps):
    uu = (2.0 / 3.0) * (2.0 + math.sin(2.0 * eps)) / (2.0 + sp.gamma(1.0 + eps))
    ud = 0.5 * zeta_complex((1.0 + 0.5j) * eps) * math.exp(-2.0 * eps)
    dd = math.exp(-(1.0 + 2.0 * eps / 3.0))
    return uu, ud, dd


def _benchmark_c(eps):
    uu = (2.0 / 3.0) * sp.erfc(eps / 2.0) * (eps**2 + 0.8) * (0.6 + eps**2 / 6.0)
    ud = (
        0.5
        * math.exp(-1.5 * eps)
        * (1.0 + sp.erf(eps - 2.0))
        * sp.erfc(eps - 6.0)
        * (0.4 - 1.0j * eps + 4.0 * (1.0 + 1.0j) * eps * math.sin(eps) ** 2)
    )
    dd = sp.erfc(eps - 6.0) * math.exp(-0.5 * eps) * (1.0 + math.sin(eps) ** 2) / (3.0 + 0.6 * eps)
    return uu, ud, dd


def _benchmark_d(eps):
    uu = (3.0 / (4.0 * math.pi)) * sp.erfc(eps - 7.0) * math.exp(-0.5 * eps) * sp.sici(6.0 * eps + 0.5)[0]
    ud = (
        (1.0 / 24.0)
        * sp.erfc(eps - 6.0)
        * cmath.exp(1j * math.pi * 6.0 / 7.0 - 1.5 * eps)
        * math.sqrt(eps)
        * (15.0 - 18.0 * eps + 3.0 * eps**2)
    )
    dd = sp.airy(eps - 1.0)[0]
    return uu, ud, dd


_BENCHMARK_COMPONENTS = (_benchmark_a, _benchmark_b, _benchmark_c, _benchmark_d)


def benchmark_state(grid):
    """Evaluate the analytic benchmark state on a grid.

    The lower off-diagonal is filled as the complex conjugate of the upper
    one; every shell is checked for physical occupations.
    """
    if grid.eps_max < 12.0:
        raise ValidationError(
            f"benchmark state needs eps_max >= 12 to cover its tails, got {grid.eps_max}"
        )
    data = np.zeros((4, grid.n, 2, 2), dtype=complex)
    for s, component in enumerate(_BENCHMARK_COMPONENTS):
        for j, eps in enumerate(grid.energies):
            uu, ud, dd = component(float(eps))
            data[s, j, 0, 0] = uu
            data[s, j, 1, 1] = dd
            data[s, j, 0, 1] = ud
            data[s, j, 1, 0] = np.conj(ud)
    return WignerField(grid, data)


# -- state catalog -------------------------------------------------------------


@dataclass(frozen=True)
class StateSpec:
    """What initial state to build: benchmark | uniform | fermi-dirac | custom."""

    variant: str
    level: float | None = None        # uniform fill level
    params: object | None = None      # EquilibriumParams for fermi-dirac
    path: str | None = None           # CSV path for custom tabulated states


def build_state(spec, grid, masses):
    """Construct and validate the initial field described by `spec`."""
    variant = spec.variant.lower()
    if variant == "benchmark":
        return benchmark_state(grid)
    if variant == "uniform":
        if spec.level is None:
            raise ValidationError("uniform state needs a fill level")
        return WignerField.uniform(grid, spec.level)
    if variant == "fermi-dirac":
        if spec.params is None:
            raise ValidationError("fermi-dirac state needs equilibrium parameters")
        from .equilibrium import fermi_dirac

        return fermi_dirac(spec.params, grid, masses)
    if variant == "custom":
        if spec.path is None:
            raise ValidationError("custom state needs a CSV path")
        field = read_snapshot(spec.path)
        if field.grid != grid:
            raise ValidationError(
                f"custom state grid {field.grid} does not match configured grid {grid}"
            )
        return field
    raise ValidationError(f"unknown initial-state variant {spec.variant!r}")
