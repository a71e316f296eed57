"""Right-hand sides for the coupled system: strain decomposition, stress
transport/stretching/relaxation, momentum with Leray projection, density
advection, and the closed determinant law at zero stress diffusivity.

All quadratic products are formed pointwise from dealiased factors and the
product is dealiased again immediately (2/3 rule), so transport integrals
are exact divergences at the discrete level.

The core assembly operates on packed half-spectrum (rfft2) arrays of shape
(6, n, n//2+1) ordered as (u1, u2, a, b, c, rho); the time stepper and the
field-level operations below share it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import PhysParams, SimState, StressField
from .spectral import (
    ScalarField,
    SpectralGrid,
    VectorField,
    dealias,
    irfft2,
    rfft2,
    scalar_field,
    vector_field,
)


@dataclass(frozen=True)
class StrainDecomposition:
    """Rate-of-strain components and vorticity, each in 1/sec:
    lam = (d1u1 - d2u2)/2, mu = (d1u2 + d2u1)/2, omega = d1u2 - d2u1."""

    lam: ScalarField
    mu: ScalarField
    omega: ScalarField


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative bundle; du is divergence-free (cm/sec^2), the stress
    and density rates are in 1/sec."""

    du: VectorField
    da: ScalarField
    db: ScalarField
    dc: ScalarField
    drho: ScalarField


def pack_state(state: SimState) -> np.ndarray:
    """Half-spectrum coefficients (6, n, n//2+1), dealiased on entry."""
    g = state.grid
    mask = g._half["mask"]
    stack = np.stack([
        state.u.values[0],
        state.u.values[1],
        state.stress.a.values,
        state.stress.b.values,
        state.stress.c.values,
        state.rho.values,
    ])
    return rfft2(stack) * mask


def unpack_state(grid: SpectralGrid, sh: np.ndarray, time: float) -> SimState:
    vals = irfft2(sh, grid.n)
    return SimState(
        time=time,
        u=vector_field(grid, vals[0:2].copy()),
        stress=StressField(
            scalar_field(grid, vals[2]),
            scalar_field(grid, vals[3]),
            scalar_field(grid, vals[4]),
        ),
        rho=scalar_field(grid, vals[5]),
    )


def _terms(grid: SpectralGrid, params: PhysParams, sh: np.ndarray):
    """Dealiased explicit terms from packed coefficients.

    Returns (f1, f2, na, nb, nc, nr): the unprojected momentum force
    -u.grad(u) + K div(sigma), the stress advection+stretching terms, the
    c source 4*k*rho, and -u.grad(rho).  Semigroup-absorbed linear parts
    (nu*lap(u), kappa*lap - 2k on the stress) are excluded.
    """
    h = grid._half
    ikx, iky, mask = h["ikx"], h["iky"], h["mask"]
    ah, bh, ch, rh = sh[2], sh[3], sh[4], sh[5]

    stack = np.concatenate([sh[0:2], ikx * sh, iky * sh, sh[2:5]])
    (u1, u2,
     d1u1, d1u2, da1, db1, dc1, dr1,
     d2u1, d2u2, da2, db2, dc2, dr2,
     a, b, c) = irfft2(stack, grid.n)

    lam = 0.5 * (d1u1 - d2u2)
    mu = 0.5 * (d1u2 + d2u1)
    om = d1u2 - d2u1

    prods = np.stack([
        -(u1 * d1u1 + u2 * d2u1),
        -(u1 * d1u2 + u2 * d2u2),
        -(u1 * da1 + u2 * da2) - om * b + c * lam,
        -(u1 * db1 + u2 * db2) + om * a + c * mu,
        -(u1 * dc1 + u2 * dc2) + 4.0 * (lam * a + mu * b),
        -(u1 * dr1 + u2 * dr2),
    ])
    nh = rfft2(prods) * mask

    bigK = params.bigK
    f1 = nh[0] + bigK * (ikx * (0.5 * ch + ah) + iky * bh)
    f2 = nh[1] + bigK * (ikx * bh + iky * (0.5 * ch - ah))
    nc = nh[4] + 4.0 * params.k * rh
    return f1, f2, nh[2], nh[3], nc, nh[5]


def explicit_terms(grid: SpectralGrid, params: PhysParams, sh: np.ndarray) -> np.ndarray:
    """Projected explicit right-hand sides for the integrating-factor stages."""
    h = grid._half
    f1, f2, na, nb, nc, nr = _terms(grid, params, sh)
    kd = (h["kx"] * f1 + h["ky"] * f2) * h["inv_k_sq"]
    return np.stack([f1 - h["kx"] * kd, f2 - h["ky"] * kd, na, nb, nc, nr])


def strain_decompose(u: VectorField) -> StrainDecomposition:
    g = u.grid
    uh = u.coeffs
    d1u1 = scalar_field(g, g.ikx * uh[0], "spectral").values
    d2u1 = scalar_field(g, g.iky * uh[0], "spectral").values
    d1u2 = scalar_field(g, g.ikx * uh[1], "spectral").values
    d2u2 = scalar_field(g, g.iky * uh[1], "spectral").values
    return StrainDecomposition(
        lam=scalar_field(g, 0.5 * (d1u1 - d2u2)),
        mu=scalar_field(g, 0.5 * (d1u2 + d2u1)),
        omega=scalar_field(g, d1u2 - d2u1),
    )


def stress_rhs(state: SimState, params: PhysParams):
    """Full (a, b, c) rates: advection, stretching, relaxation -2k, diffusion
    kappa*lap, and the density source 4*k*rho in the trace equation."""
    g = state.grid
    h = g._half
    sh = pack_state(state)
    _, _, na, nb, nc, _ = _terms(g, params, sh)
    lam_lin = -params.kappa * h["k_sq"] - 2.0 * params.k
    da = na + lam_lin * sh[2]
    db = nb + lam_lin * sh[3]
    dc = nc + lam_lin * sh[4]
    vals = irfft2(np.stack([da, db, dc]), g.n)
    return (
        scalar_field(g, vals[0]),
        scalar_field(g, vals[1]),
        scalar_field(g, vals[2]),
    )


def momentum_rhs(state: SimState, params: PhysParams) -> VectorField:
    """Divergence-free velocity rate: P(-u.grad(u) + K div(sigma)) + nu*lap(u)."""
    g = state.grid
    h = g._half
    sh = pack_state(state)
    nh = explicit_terms(g, params, sh)
    visc = -params.nu * h["k_sq"]
    du = np.stack([nh[0] + visc * sh[0], nh[1] + visc * sh[1]])
    return vector_field(g, irfft2(du, g.n))


def rho_rhs(state: SimState) -> ScalarField:
    """Dealiased advection rate -u.grad(rho); its integral vanishes."""
    g = state.grid
    h = g._half
    sh = pack_state(state)
    u1, u2, dr1, dr2 = irfft2(
        np.stack([sh[0], sh[1], h["ikx"] * sh[5], h["iky"] * sh[5]]), g.n
    )
    nr = rfft2(-(u1 * dr1 + u2 * dr2)) * h["mask"]
    return scalar_field(g, irfft2(nr, g.n))


def full_rhs(state: SimState, params: PhysParams) -> StateDerivative:
    g = state.grid
    h = g._half
    sh = pack_state(state)
    nh = explicit_terms(g, params, sh)
    visc = -params.nu * h["k_sq"]
    lam_lin = -params.kappa * h["k_sq"] - 2.0 * params.k
    du = np.stack([nh[0] + visc * sh[0], nh[1] + visc * sh[1]])
    rates = irfft2(np.stack([du[0], du[1], nh[2] + lam_lin * sh[2],
                             nh[3] + lam_lin * sh[3], nh[4] + lam_lin * sh[4],
                             nh[5]]), g.n)
    return StateDerivative(
        du=vector_field(g, rates[0:2].copy()),
        da=scalar_field(g, rates[2]),
        db=scalar_field(g, rates[3]),
        dc=scalar_field(g, rates[4]),
        drho=scalar_field(g, rates[5]),
    )


def recover_pressure(state: SimState, params: PhysParams) -> ScalarField:
    """Zero-mean pressure from the Poisson equation lap(p) = div(force) with
    force = -u.grad(u) + K div(sigma).  Diagnostic only; the stepper never
    uses pressure."""
    g = state.grid
    h = g._half
    sh = pack_state(state)
    f1, f2, *_ = _terms(g, params, sh)
    div_f = h["ikx"] * f1 + h["iky"] * f2
    ph = -h["inv_k_sq"] * div_f
    return scalar_field(g, irfft2(ph, g.n))


def unprojected_force(state: SimState, params: PhysParams) -> VectorField:
    """-u.grad(u) + K div(sigma) + nu*lap(u) before Leray projection."""
    g = state.grid
    h = g._half
    sh = pack_state(state)
    f1, f2, *_ = _terms(g, params, sh)
    visc = -params.nu * h["k_sq"]
    return vector_field(g, irfft2(np.stack([f1 + visc * sh[0], f2 + visc * sh[1]]), g.n))


def determinant_rhs(state: SimState, params: PhysParams) -> ScalarField:
    """Rate of det(sigma) = c^2/4 - a^2 - b^2 under the closed law valid at
    kappa = 0: -u.grad(d) - 4k d + 2k rho c."""
    if params.kappa != 0.0:
        raise ValueError("the determinant law is exact only for kappa = 0")
    g = state.grid
    a = dealias(state.stress.a).values
    b = dealias(state.stress.b).values
    c = dealias(state.stress.c).values
    rho = dealias(state.rho).values
    u = dealias(state.u)

    d = dealias(scalar_field(g, 0.25 * c * c - a * a - b * b))
    dh = d.coeffs
    d1d = scalar_field(g, g.ikx * dh, "spectral").values
    d2d = scalar_field(g, g.iky * dh, "spectral").values
    u1, u2 = u.values
    adv = dealias(scalar_field(g, u1 * d1d + u2 * d2d)).values
    src = dealias(scalar_field(g, rho * c)).values
    k = params.k
    return scalar_field(g, -adv - 4.0 * k * d.values + 2.0 * k * src)
