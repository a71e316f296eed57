"""Invariant monitors and the a priori bound ledger.

The ledger evaluates the Gronwall-type bound constants R0..R5 and the
dimensionless combination B literally from initial data, coefficients and
the horizon T, carrying cm/sec units through every operation so the bound
formulas are unit-checked as they are computed.  R0 bounds the energy
budget with no generic constant and is a hard gate; R1..R5 involve the
generic-constant policy value C and are reported as informational ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import dynamics
from .fields import (
    NormReport,
    PhysParams,
    SimState,
    gamma_field,
    min_eigenvalue,
    norms,
)
from .spectral import scalar_field
from .units import CM, DIMENSIONLESS, MIXED, SEC, UnitValue, uexp, uv


@dataclass(frozen=True)
class EnergyLedger:
    """Energy integral(|u|^2 + K c), dissipation integral(2 nu |grad u|^2 +
    2 k K c), and source 4 k K integral(rho); cm^4/sec^2, /sec^3, /sec^3."""

    energy: float
    dissipation: float
    source: float


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    energy: float
    dissipation: float
    source: float
    min_gamma: float
    min_rho: float
    min_c: float
    min_eig: float
    c_max: float
    norms: NormReport
    determinant_residual: float
    momentum_residual: float


@dataclass(frozen=True)
class PositivityReport:
    min_c: float
    min_gamma: float
    min_eig: float
    min_rho: float
    max_c: float
    max_rho: float
    tol: float
    passed: bool


@dataclass(frozen=True)
class LedgerEntry:
    value: float
    units: str
    overflowed: bool


@dataclass(frozen=True)
class BoundLedger:
    """A priori constants evaluated from the initial state over [0, T]."""

    R0: LedgerEntry
    R1: LedgerEntry
    R2: LedgerEntry
    R3: LedgerEntry
    R4: LedgerEntry
    R5: LedgerEntry
    B: LedgerEntry
    constant_c: float
    horizon: float

    def entries(self) -> dict:
        return {k: getattr(self, k) for k in ("R0", "R1", "R2", "R3", "R4", "R5", "B")}


@dataclass(frozen=True)
class BoundRow:
    name: str
    observed: float
    bound: float
    ratio: float
    hard: bool
    passed: bool | None


@dataclass(frozen=True)
class BoundCheckReport:
    rows: tuple

    @property
    def hard_pass(self) -> bool:
        return all(r.passed for r in self.rows if r.hard)


def energy_ledger(state: SimState, params: PhysParams) -> EnergyLedger:
    g = state.grid
    area = g.area
    u1, u2 = state.u.values
    c = state.stress.c.values
    rho = state.rho.values
    rep = norms(state)
    energy = area * float(np.mean(u1 * u1 + u2 * u2)) + params.bigK * float(np.mean(c)) * area
    dissipation = (
        2.0 * params.nu * rep["grad_u_L2"] ** 2
        + 2.0 * params.k * params.bigK * float(np.mean(c)) * area
    )
    source = 4.0 * params.k * params.bigK * float(np.mean(rho)) * area
    return EnergyLedger(energy, dissipation, source)


def positivity_report(state: SimState, tol: float) -> PositivityReport:
    c = state.stress.c.values
    rho = state.rho.values
    gam = gamma_field(state.stress).values
    eig = min_eigenvalue(state.stress).values
    max_c = float(np.max(c))
    max_rho = float(np.max(rho))
    min_gamma = float(np.min(gam))
    min_rho = float(np.min(rho))
    passed = (
        min_gamma >= -tol * max(1.0, max_c)
        and min_rho >= -tol * max(1.0, max_rho)
    )
    return PositivityReport(
        min_c=float(np.min(c)),
        min_gamma=min_gamma,
        min_eig=float(np.min(eig)),
        min_rho=min_rho,
        max_c=max_c,
        max_rho=max_rho,
        tol=tol,
        passed=bool(passed),
    )


def momentum_residual(state: SimState, params: PhysParams) -> float:
    """L^2 norm of (unprojected force - grad p) - momentum_rhs; the pressure
    recovery must reproduce the discarded gradient part to rounding."""
    g = state.grid
    force = dynamics.unprojected_force(state, params).values
    p = dynamics.recover_pressure(state, params)
    ph = p.coeffs
    gp1 = scalar_field(g, g.ikx * ph, "spectral").values
    gp2 = scalar_field(g, g.iky * ph, "spectral").values
    du = dynamics.momentum_rhs(state, params).values
    r1 = force[0] - gp1 - du[0]
    r2 = force[1] - gp2 - du[1]
    return float(np.sqrt(np.mean(r1 * r1 + r2 * r2) * g.area))


def make_record(state: SimState, params: PhysParams, *,
                determinant_residual: float = float("nan")) -> DiagnosticsRecord:
    rep = norms(state)
    pos = positivity_report(state, tol=0.0)
    # energy = int(|u|^2 + K c); sigma_L1 is the trace integral.
    energy = rep["u_L2"] ** 2 + params.bigK * rep["sigma_L1"]
    dissipation = (2.0 * params.nu * rep["grad_u_L2"] ** 2
                   + 2.0 * params.k * params.bigK * rep["sigma_L1"])
    source = (4.0 * params.k * params.bigK
              * float(np.mean(state.rho.values)) * state.grid.area)
    return DiagnosticsRecord(
        time=state.time,
        energy=energy,
        dissipation=dissipation,
        source=source,
        min_gamma=pos.min_gamma,
        min_rho=pos.min_rho,
        min_c=pos.min_c,
        min_eig=pos.min_eig,
        c_max=rep["c_max"],
        norms=rep,
        determinant_residual=determinant_residual,
        momentum_residual=momentum_residual(state, params),
    )


# --- a priori bound ledger ------------------------------------------------

_U_L2SQ = (CM ** 2 / SEC) ** 2        # ||u||_L2^2
_SIG_L1 = CM ** 2
_SIG_L2SQ = CM ** 2
_GRAD_SIG_L2SQ = DIMENSIONLESS
_OMEGA_L2SQ = (CM / SEC) ** 2
_GRAD_OMEGA_L2SQ = SEC ** -2
_RHO_L1 = CM ** 2
_RHO_L2SQ = CM ** 2


def apriori_ledger(initial: SimState, params: PhysParams, T: float,
                   constant_c: float = 1.0) -> BoundLedger:
    """Evaluate R0..R5 and B from the initial data over the horizon T.

    Every generic constant is set to `constant_c` (default 1) and recorded.
    Exponential overflow produces +inf entries flagged `overflowed`, never
    an exception: the bounds are legitimately astronomic for small nu*kappa.
    """
    if not T > 0.0:
        raise ValueError("T must be positive")
    rep = norms(initial)

    C = uv(constant_c)
    nu = uv(params.nu, CM ** 2 / SEC)
    kappa = uv(params.kappa, CM ** 2 / SEC)
    k = uv(params.k, SEC ** -1)
    bigK = uv(params.bigK, (CM / SEC) ** 2)
    horizon = uv(T, SEC)

    u0_sq = uv(rep["u_L2"] ** 2, _U_L2SQ)
    sig_l1 = uv(rep["sigma_L1"], _SIG_L1)
    sig_l2_sq = uv(rep["sigma_L2"] ** 2, _SIG_L2SQ)
    grad_sig_sq = uv(rep["grad_sigma_L2"] ** 2, _GRAD_SIG_L2SQ)
    om_sq = uv(rep["omega_L2"] ** 2, _OMEGA_L2SQ)
    grad_om_sq = uv(rep["grad_omega_L2"] ** 2, _GRAD_OMEGA_L2SQ)
    rho_l1 = uv(rep["rho_L1"], _RHO_L1)
    rho_l2_sq = uv(rep["rho_L2"] ** 2, _RHO_L2SQ)
    rho_w12 = uv(rep["rho_W12"], MIXED)

    four = uv(4.0)

    r0 = u0_sq + bigK * sig_l1 + four * k * bigK * horizon * rho_l1

    gronwall = uexp(r0 / (nu * kappa))
    sig_bracket = sig_l2_sq + k * horizon * rho_l2_sq
    r1 = C * gronwall * sig_bracket

    r2 = (C * bigK * bigK / (kappa * nu)) * gronwall * sig_bracket + om_sq

    b = (C / (kappa * (kappa * nu).sqrt())) * r1 * r2

    r3 = C * gronwall * (grad_sig_sq + b + (k * k * horizon / kappa) * rho_l2_sq)

    r4_exp = uexp(C * (nu ** Fraction(-3, 2)) * (horizon * r0 * r2).sqrt())
    r4 = C * r4_exp * (grad_om_sq + (bigK * bigK / (nu * kappa)) * r3)

    r5_exp = uexp(
        (nu ** Fraction(-1, 4))
        * (r2 ** Fraction(1, 4))
        * (horizon ** Fraction(3, 4))
        * (r4 ** Fraction(1, 4))
    )
    r5 = r5_exp * rho_w12

    def entry(x: UnitValue) -> LedgerEntry:
        return LedgerEntry(x.value, str(x.unit), not math.isfinite(x.value))

    return BoundLedger(
        R0=entry(r0), R1=entry(r1), R2=entry(r2), R3=entry(r3),
        R4=entry(r4), R5=entry(r5), B=entry(b),
        constant_c=constant_c, horizon=T,
    )


def _records_of(traj) -> list:
    return list(traj.records) if hasattr(traj, "records") else list(traj)


def _running_sup(times, sup_part, integrand, coeff) -> float:
    """max over t of [sup_part(t) + coeff * integral_0^t integrand ds] by
    trapezoid over the recorded times."""
    acc = 0.0
    best = sup_part[0]
    for i in range(1, len(times)):
        acc += 0.5 * (times[i] - times[i - 1]) * (integrand[i] + integrand[i - 1])
        best = max(best, sup_part[i] + coeff * acc)
    return best


def bound_check(traj, ledger: BoundLedger, params: PhysParams,
                rel_tol: float = 1e-6) -> BoundCheckReport:
    """Compare trajectory norms against the ledger.

    The R0 row is the constant-free energy budget sup_t [ ||u||^2 +
    K ||sigma||_L1 + 2 nu int_0^t ||grad u||^2 ] <= R0 and is a strict
    pass/fail at the quadrature tolerance.  The remaining rows carry
    generic constants, so only observed/bound ratios are reported.
    """
    recs = _records_of(traj)
    times = np.array([r.time for r in recs])

    def series(key, power=1.0):
        return np.array([r.norms[key] ** power for r in recs])

    rows = []

    obs0 = _running_sup(
        times,
        series("u_L2", 2) + params.bigK * series("sigma_L1"),
        series("grad_u_L2", 2),
        2.0 * params.nu,
    )
    bound0 = ledger.R0.value
    rows.append(BoundRow(
        "R0", obs0, bound0,
        obs0 / bound0 if bound0 > 0 else (0.0 if obs0 == 0.0 else float("inf")),
        hard=True,
        passed=bool(obs0 <= bound0 * (1.0 + rel_tol) or obs0 == bound0 == 0.0),
    ))

    informational = (
        ("R1", series("sigma_L2", 2), series("grad_sigma_L2", 2), params.kappa),
        ("R2", series("omega_L2", 2), series("grad_omega_L2", 2), params.nu),
        ("R3", series("grad_sigma_L2", 2), series("delta_sigma_L2", 2), params.kappa),
        ("R4", series("grad_omega_L2", 2), series("delta_omega_L2", 2), params.nu),
    )
    for name, sup_part, integrand, coeff in informational:
        obs = _running_sup(times, sup_part, integrand, coeff)
        bound = getattr(ledger, name).value
        ratio = obs / bound if bound > 0 else (0.0 if obs == 0.0 else float("inf"))
        rows.append(BoundRow(name, obs, bound, ratio, hard=False, passed=None))

    obs5 = float(np.max(series("rho_W12")))
    bound5 = ledger.R5.value
    rows.append(BoundRow(
        "R5", obs5, bound5,
        obs5 / bound5 if bound5 > 0 else (0.0 if obs5 == 0.0 else float("inf")),
        hard=False, passed=None,
    ))
    return BoundCheckReport(tuple(rows))


def determinant_residual(states, params: PhysParams, *, informational: bool = False) -> float:
    """L^2 residual of the determinant law on a uniformly spaced window of
    consecutive states, with centered time differencing.

    Requires kappa = 0, where d = c^2/4 - a^2 - b^2 obeys the closed law
    d_t d + u.grad(d) + 4k d - 2k rho c = 0.  With informational=True a
    kappa > 0 window is accepted and the diffusion-induced correction
    kappa*(c/2 lap(c) - 2a lap(a) - 2b lap(b)) is included in the law.
    """
    states = list(states)
    if len(states) < 3:
        raise ValueError("need at least three consecutive states")
    if params.kappa != 0.0 and not informational:
        raise ValueError("determinant residual requires kappa = 0 "
                         "(pass informational=True to include the diffusion term)")

    times = [s.time for s in states]
    dts = np.diff(times)
    if np.max(np.abs(dts - dts[0])) > 1e-9 * max(dts[0], 1e-300):
        raise ValueError("window must be uniformly spaced in time")

    g = states[0].grid

    def det_values(s: SimState):
        a, b, c = s.stress.a.values, s.stress.b.values, s.stress.c.values
        return 0.25 * c * c - a * a - b * b

    worst = 0.0
    for j in range(1, len(states) - 1):
        s = states[j]
        dt = times[j + 1] - times[j]
        ddt = (det_values(states[j + 1]) - det_values(states[j - 1])) / (2.0 * dt)
        d = scalar_field(g, det_values(s))
        dh = d.coeffs
        d1 = scalar_field(g, g.ikx * dh, "spectral").values
        d2 = scalar_field(g, g.iky * dh, "spectral").values
        u1, u2 = s.u.values
        a, b, c = s.stress.a.values, s.stress.b.values, s.stress.c.values
        resid = (
            ddt + u1 * d1 + u2 * d2 + 4.0 * params.k * d.values
            - 2.0 * params.k * s.rho.values * c
        )
        if params.kappa != 0.0:
            lap = lambda f: scalar_field(g, -g.k_sq * scalar_field(g, f).coeffs, "spectral").values
            resid -= params.kappa * (0.5 * c * lap(c) - 2.0 * a * lap(a) - 2.0 * b * lap(b))
        worst = max(worst, float(np.sqrt(np.mean(resid * resid) * g.area)))
    return worst
