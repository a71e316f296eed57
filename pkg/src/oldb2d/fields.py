"""Domain state types: physical coefficients, symmetric stress in (a, b, c)
coordinates, bundled simulation states and norm reports.

The stress matrix is stored through a = (s11 - s22)/2, b = s12 and the trace
c = s11 + s22, so symmetry is structural.  Positive semi-definiteness is
equivalent to gamma = c - 2*sqrt(a^2 + b^2) >= 0 pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .spectral import (
    ScalarField,
    SpectralGrid,
    VectorField,
    curl,
    divergence,
    same_grid,
    scalar_field,
)
from .units import CM, DIMENSIONLESS, MIXED, SEC, Unit


@dataclass(frozen=True)
class PhysParams:
    """Physical coefficients: viscosity nu and stress diffusivity kappa in
    cm^2/sec, damping frequency k in 1/sec, coupling K in cm^2/sec^2."""

    nu: float
    kappa: float
    k: float
    bigK: float

    def __post_init__(self):
        if not self.nu > 0.0:
            raise ValueError("nu must be positive")
        if not self.kappa >= 0.0:
            raise ValueError("kappa must be nonnegative")
        if not self.k > 0.0:
            raise ValueError("k must be positive")
        if not self.bigK > 0.0:
            raise ValueError("bigK must be positive")


@dataclass(frozen=True)
class StressField:
    """Symmetric 2x2 stress field in (a, b, c) coordinates."""

    a: ScalarField
    b: ScalarField
    c: ScalarField

    def __post_init__(self):
        if not (same_grid(self.a.grid, self.b.grid) and same_grid(self.a.grid, self.c.grid)):
            raise ValueError("stress components must share a grid")

    @property
    def grid(self) -> SpectralGrid:
        return self.a.grid

    def as_real(self) -> "StressField":
        return StressField(self.a.as_real(), self.b.as_real(), self.c.as_real())


def stress_from_matrix(s11: ScalarField, s12: ScalarField, s22: ScalarField) -> StressField:
    """Convert matrix components to (a, b, c) = ((s11-s22)/2, s12, s11+s22)."""
    if not (same_grid(s11.grid, s12.grid) and same_grid(s11.grid, s22.grid)):
        raise ValueError("matrix components must share a grid")
    g = s11.grid
    v11, v12, v22 = s11.values, s12.values, s22.values
    return StressField(
        scalar_field(g, 0.5 * (v11 - v22)),
        scalar_field(g, v12.copy()),
        scalar_field(g, v11 + v22),
    )


def matrix_from_stress(s: StressField):
    """Matrix components (s11, s12, s22) recovered from (a, b, c)."""
    g = s.grid
    a, b, c = s.a.values, s.b.values, s.c.values
    return (
        scalar_field(g, 0.5 * c + a),
        scalar_field(g, b.copy()),
        scalar_field(g, 0.5 * c - a),
    )


def min_eigenvalue(s: StressField) -> ScalarField:
    """Pointwise smaller eigenvalue c/2 - sqrt(a^2 + b^2)."""
    a, b, c = s.a.values, s.b.values, s.c.values
    return scalar_field(s.grid, 0.5 * c - np.sqrt(a * a + b * b))


def gamma_field(s: StressField) -> ScalarField:
    """Pointwise c - 2*sqrt(a^2 + b^2); twice the smaller eigenvalue."""
    a, b, c = s.a.values, s.b.values, s.c.values
    return scalar_field(s.grid, c - 2.0 * np.sqrt(a * a + b * b))


def stress_admissible(s: StressField, tol: float = 1e-10) -> bool:
    """Positivity test with slack proportional to the field magnitude."""
    g = gamma_field(s).values
    scale = max(1.0, float(np.max(s.c.values)))
    return bool(np.min(g) >= -tol * scale)


@dataclass(frozen=True)
class SimState:
    """The coupled unknowns (u, sigma, rho) at one time instant."""

    time: float
    u: VectorField
    stress: StressField
    rho: ScalarField

    @property
    def grid(self) -> SpectralGrid:
        return self.u.grid

    def validate(self):
        """Check the construction invariants: u divergence-free, rho >= 0."""
        du = divergence(self.u).coeffs
        unorm = np.sqrt(np.sum(np.abs(self.u.coeffs) ** 2))
        if np.max(np.abs(du)) > 1e-12 * max(unorm, 1e-300):
            raise ValueError("velocity is not divergence-free")
        r = self.rho.values
        if np.min(r) < -1e-10 * max(float(np.max(r)), 1.0):
            raise ValueError("rho has a negative excursion beyond tolerance")


@dataclass(frozen=True)
class NormReport:
    """Named norms with unit annotations; all values are nonnegative."""

    values: dict
    units: dict

    def __getitem__(self, key: str) -> float:
        return self.values[key]

    def unit(self, key: str) -> str:
        return self.units[key]


# Unit tags for each norm entry, derived from u ~ cm/sec and sigma, rho
# dimensionless, with the L^p integral over a cm^2 area.
_NORM_UNITS = {
    "u_L2": CM ** 2 / SEC,
    "u_L4": CM ** Fraction(3, 2) / SEC,
    "grad_u_L2": CM / SEC,
    "sigma_L1": CM ** 2,
    "sigma_L2": CM,
    "sigma_L4": CM ** Fraction(1, 2),
    "grad_sigma_L2": DIMENSIONLESS,
    "delta_sigma_L2": CM ** -1,
    "omega_L2": CM / SEC,
    "grad_omega_L2": SEC ** -1,
    "delta_omega_L2": (CM * SEC) ** -1,
    "rho_L1": CM ** 2,
    "rho_L2": CM,
    "grad_rho_L2": DIMENSIONLESS,
    "rho_W12": MIXED,
    "c_max": DIMENSIONLESS,
}


def norm_unit(key: str) -> Unit:
    return _NORM_UNITS[key]


def _sq_int(grid, *real_arrays) -> float:
    total = 0.0
    for arr in real_arrays:
        total += float(np.mean(arr * arr))
    return total * grid.area


def _spectral_weighted(grid, weight, *coeff_arrays) -> float:
    total = 0.0
    for ch in coeff_arrays:
        total += float(np.sum(weight * (ch.real ** 2 + ch.imag ** 2)))
    return total * grid.area


def norms(state: SimState) -> NormReport:
    """Every norm used by the diagnostics and the a priori bound ledger.

    The stress L^1 norm is the trace integral; L^2-type stress norms are
    Frobenius, i.e. the density c^2/2 + 2a^2 + 2b^2 in (a, b, c) variables.
    """
    g = state.grid
    area = g.area
    u1, u2 = state.u.values
    u1h, u2h = state.u.coeffs
    a, b, c = (f.values for f in (state.stress.a, state.stress.b, state.stress.c))
    ah, bh, ch = (f.coeffs for f in (state.stress.a, state.stress.b, state.stress.c))
    rho = state.rho.values
    rhoh = state.rho.coeffs
    omh = curl(state.u).coeffs

    ksq = g.k_sq
    ksq2 = ksq * ksq

    vals = {}
    vals["u_L2"] = np.sqrt(_sq_int(g, u1, u2))
    vals["u_L4"] = (float(np.mean((u1 * u1 + u2 * u2) ** 2)) * area) ** 0.25
    vals["grad_u_L2"] = np.sqrt(_spectral_weighted(g, ksq, u1h, u2h))

    vals["sigma_L1"] = float(np.mean(c)) * area
    frob = 0.5 * c * c + 2.0 * a * a + 2.0 * b * b
    vals["sigma_L2"] = np.sqrt(float(np.mean(frob)) * area)
    vals["sigma_L4"] = (float(np.mean(frob * frob)) * area) ** 0.25
    grad_sig_sq = (
        0.5 * _spectral_weighted(g, ksq, ch)
        + 2.0 * _spectral_weighted(g, ksq, ah, bh)
    )
    vals["grad_sigma_L2"] = np.sqrt(grad_sig_sq)
    delta_sig_sq = (
        0.5 * _spectral_weighted(g, ksq2, ch)
        + 2.0 * _spectral_weighted(g, ksq2, ah, bh)
    )
    vals["delta_sigma_L2"] = np.sqrt(delta_sig_sq)

    vals["omega_L2"] = np.sqrt(_spectral_weighted(g, np.ones_like(ksq), omh))
    vals["grad_omega_L2"] = np.sqrt(_spectral_weighted(g, ksq, omh))
    vals["delta_omega_L2"] = np.sqrt(_spectral_weighted(g, ksq2, omh))

    vals["rho_L1"] = float(np.mean(np.abs(rho))) * area
    rho_l2_sq = _sq_int(g, rho)
    grad_rho_sq = _spectral_weighted(g, ksq, rhoh)
    vals["rho_L2"] = np.sqrt(rho_l2_sq)
    vals["grad_rho_L2"] = np.sqrt(grad_rho_sq)
    vals["rho_W12"] = np.sqrt(rho_l2_sq + grad_rho_sq)

    vals["c_max"] = float(np.max(c))

    vals = {k: float(v) for k, v in vals.items()}
    units = {k: str(_NORM_UNITS[k]) for k in vals}
    return NormReport(vals, units)
