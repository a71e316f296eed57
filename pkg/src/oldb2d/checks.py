"""The aggregated invariant/property suite behind `oldb2d check`.

Each check returns (name, passed, detail).  The set mirrors the library's
documented invariants: spectral exactness, positivity equivalences, the
nonlinearity cancellations, discrete conservation, ledger sanity, and the
fixed-point diagnostics.  `check` exits zero iff every entry passes.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from . import config as cfgmod
from . import diagnostics, dynamics, picard, snapshots
from .fields import PhysParams, SimState, StressField, norms
from .integrate import StepControl, run, step
from .spectral import (
    dealias,
    ddx,
    divergence,
    heat_semigroup,
    laplacian,
    leray_project,
    make_grid,
    scalar_field,
    to_real,
    to_spectral,
    vector_field,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name, passed, detail) -> CheckResult:
    return CheckResult(name, bool(passed), detail)


def _random_state(cfg, n=None, seed=None, amplitude=None) -> SimState:
    tweaked = replace(
        cfg,
        preset="random_admissible",
        n=n or cfg.n,
        seed=cfg.seed if seed is None else seed,
        amplitude=cfg.amplitude if amplitude is None else amplitude,
    )
    return cfgmod.build_initial(tweaked, make_grid(tweaked.n, tweaked.length))


def band_limited_admissible_state(grid, seed: int, kmax: int,
                                  c_base: float = 3.0, amp: float = 0.2,
                                  u_amp: float = 0.2) -> SimState:
    """Admissible state whose a, b, c, rho, u are all supported on modes with
    max(|k1|,|k2|) <= kmax.  With 3*kmax below the dealias cut, every
    quadratic product in the right-hand sides is alias-free and untouched by
    the mask, so algebraic cancellation identities hold to rounding."""
    rng = np.random.default_rng(seed)
    a = amp * cfgmod.band_limited_random(grid, rng, kmax)
    b = amp * cfgmod.band_limited_random(grid, rng, kmax)
    c = c_base + amp * cfgmod.band_limited_random(grid, rng, kmax)
    rho = 1.0 + 0.4 * cfgmod.band_limited_random(grid, rng, kmax)
    psih = to_spectral(cfgmod.band_limited_random(grid, rng, kmax))
    u = np.stack([to_real(-grid.iky * psih), to_real(grid.ikx * psih)])
    peak = np.max(np.abs(u))
    if peak > 0:
        u *= u_amp / peak
    state = SimState(
        time=0.0,
        u=vector_field(grid, u),
        stress=StressField(
            scalar_field(grid, a), scalar_field(grid, b), scalar_field(grid, c)
        ),
        rho=scalar_field(grid, rho),
    )
    assert diagnostics.positivity_report(state, 1e-10).passed
    return state


def _rel(err, scale) -> float:
    return err / max(scale, 1e-300)


def check_transform_roundtrip(cfg) -> CheckResult:
    g = make_grid(cfg.n, cfg.length)
    rng = np.random.default_rng(7)
    f = rng.standard_normal((g.n, g.n))
    back = to_real(to_spectral(f))
    err = _rel(np.max(np.abs(back - f)), np.max(np.abs(f)))
    return _result("spectral.transform_roundtrip", err <= 1e-13, f"rel err {err:.2e}")


def check_projector(cfg) -> CheckResult:
    g = make_grid(cfg.n, cfg.length)
    rng = np.random.default_rng(8)
    v = vector_field(g, rng.standard_normal((2, g.n, g.n)))
    pv = leray_project(v)
    scale = np.sqrt(np.sum(np.abs(v.coeffs) ** 2))
    div_err = np.max(np.abs(divergence(pv).coeffs)) / scale
    idem = np.max(np.abs(leray_project(pv).coeffs - pv.coeffs)) / scale
    ok = div_err <= 1e-13 and idem <= 1e-13
    return _result("spectral.projector", ok, f"div {div_err:.2e}, idem {idem:.2e}")


def check_derivative_exactness(cfg) -> CheckResult:
    g = make_grid(cfg.n, cfg.length)
    x, y = g.nodes()
    s = 2.0 * np.pi / g.length
    f = scalar_field(g, np.sin(3 * s * x) * np.cos(2 * s * y))
    exact = 3 * s * np.cos(3 * s * x) * np.cos(2 * s * y)
    err = _rel(np.max(np.abs(ddx(f, 1).values - exact)), np.max(np.abs(exact)))
    return _result("spectral.derivative_exactness", err <= 1e-13, f"rel err {err:.2e}")


def check_semigroup_law(cfg) -> CheckResult:
    g = make_grid(cfg.n, cfg.length)
    rng = np.random.default_rng(9)
    f = scalar_field(g, rng.standard_normal((g.n, g.n)))
    one = heat_semigroup(f, 0.01, 2.0, 0.7)
    two = heat_semigroup(heat_semigroup(f, 0.01, 2.0, 0.3), 0.01, 2.0, 0.4)
    err = _rel(np.max(np.abs(one.values - two.values)), np.max(np.abs(f.values)))
    return _result("spectral.semigroup_law", err <= 1e-13, f"rel err {err:.2e}")


def check_parseval(cfg) -> CheckResult:
    g = make_grid(cfg.n, cfg.length)
    rng = np.random.default_rng(10)
    f = scalar_field(g, rng.standard_normal((g.n, g.n)))
    real_norm = np.sqrt(np.mean(f.values ** 2) * g.area)
    spec_norm = np.sqrt(np.sum(np.abs(f.coeffs) ** 2) * g.area)
    err = _rel(abs(real_norm - spec_norm), real_norm)
    return _result("spectral.parseval", err <= 1e-12, f"rel err {err:.2e}")


def check_gamma_equivalence(cfg) -> CheckResult:
    g = make_grid(min(cfg.n, 32), cfg.length)
    rng = np.random.default_rng(11)
    agree = True
    for _ in range(5):
        a = rng.standard_normal((g.n, g.n))
        b = rng.standard_normal((g.n, g.n))
        c = 2.0 * rng.standard_normal((g.n, g.n))
        gam = c - 2.0 * np.sqrt(a * a + b * b)
        detpos = (c >= 0) & (0.25 * c * c - a * a - b * b >= 0)
        agree &= bool(np.array_equal(gam >= 0, detpos))
    return _result("fields.gamma_detpos_equivalence", agree, "pointwise predicates agree")


def check_trace_bound(cfg) -> CheckResult:
    state = _random_state(cfg, n=min(cfg.n, 32))
    a, b, c = (f.values for f in (state.stress.a, state.stress.b, state.stress.c))
    lhs = 2.0 * np.mean(np.sqrt(a * a + b * b))
    rhs = np.mean(c)
    return _result("fields.trace_bound", lhs <= rhs * (1 + 1e-12),
                   f"2 int sqrt(a^2+b^2) = {lhs:.6g} <= int c = {rhs:.6g}")


def check_norm_parseval(cfg) -> CheckResult:
    state = _random_state(cfg, n=min(cfg.n, 32))
    rep = norms(state)
    u1, u2 = state.u.values
    direct = np.sqrt(np.mean(u1 * u1 + u2 * u2) * state.grid.area)
    err = _rel(abs(rep["u_L2"] - direct), max(direct, 1e-300))
    return _result("fields.norm_parseval", err <= 1e-12, f"rel err {err:.2e}")


def check_determinant_cancellation(cfg) -> CheckResult:
    params = replace_kappa(cfg.params, 0.0)
    state = band_limited_admissible_state(make_grid(32, cfg.length), seed=21, kmax=3)
    da, db, dc = dynamics.stress_rhs(state, params)
    combo = (
        0.5 * state.stress.c.values * dc.values
        - 2.0 * state.stress.a.values * da.values
        - 2.0 * state.stress.b.values * db.values
    )
    law = dynamics.determinant_rhs(state, params).values
    err = np.max(np.abs(combo - law))
    return _result("dynamics.determinant_cancellation", err <= 1e-10,
                   f"pointwise gap {err:.2e}")


def replace_kappa(params: PhysParams, kappa: float) -> PhysParams:
    return PhysParams(params.nu, kappa, params.k, params.bigK)


def check_energy_rate(cfg) -> CheckResult:
    params = cfg.params
    state = _random_state(cfg, n=min(cfg.n, 32))
    g = state.grid
    du = dynamics.momentum_rhs(state, params).values
    _, _, dc = dynamics.stress_rhs(state, params)
    u1, u2 = state.u.values
    lhs = np.mean(2.0 * (u1 * du[0] + u2 * du[1]) + params.bigK * dc.values) * g.area
    rep = norms(state)
    rhs = (
        -2.0 * params.nu * rep["grad_u_L2"] ** 2
        - 2.0 * params.k * params.bigK * rep["sigma_L1"]
        + 4.0 * params.k * params.bigK * np.mean(state.rho.values) * g.area
    )
    scale = abs(rhs) + rep["u_L2"] ** 2 + 1.0
    ok = lhs <= rhs + 1e-8 * scale
    return _result("dynamics.energy_rate", ok,
                   f"rate {lhs:.6g} vs budget {rhs:.6g}")


def check_cubic_cancellation(cfg) -> CheckResult:
    params = cfg.params
    state = _random_state(cfg, n=min(cfg.n, 32))
    g = state.grid
    strain = dynamics.strain_decompose(state.u)
    a, b, c = (f.values for f in (state.stress.a, state.stress.b, state.stress.c))
    u1, u2 = state.u.values

    # Work of (-u.grad u + K div sigma) against 2u plus the trace-equation
    # stretching integral: the cubic terms cancel when products share the
    # dealiasing rule.
    force = dynamics.unprojected_force(state, params).values
    visc = params.nu * np.stack([
        laplacian(state.u.component(0)).values,
        laplacian(state.u.component(1)).values,
    ])
    work = np.mean(2.0 * (u1 * (force[0] - visc[0]) + u2 * (force[1] - visc[1]))) * g.area
    stretch = 4.0 * params.bigK * np.mean(strain.lam.values * a + strain.mu.values * b) * g.area
    total = work + stretch
    scale = (np.max(np.abs(u1)) + np.max(np.abs(c)) + 1.0) ** 3
    ok = abs(total) <= 1e-9 * scale + 1e-12
    return _result("dynamics.cubic_cancellation", ok, f"residual {total:.2e}")


def check_momentum_divfree(cfg) -> CheckResult:
    state = _random_state(cfg, n=min(cfg.n, 32))
    du = dynamics.momentum_rhs(state, cfg.params)
    dh = divergence(du).coeffs
    scale = np.sqrt(np.sum(np.abs(du.coeffs) ** 2))
    err = np.max(np.abs(dh)) / max(scale, 1e-300)
    return _result("dynamics.momentum_divfree", err <= 1e-12, f"rel div {err:.2e}")


def check_transport_means(cfg) -> CheckResult:
    state = _random_state(cfg, n=min(cfg.n, 32))
    g = state.grid
    drho = dynamics.rho_rhs(state)
    mean_rho = abs(np.mean(drho.values))
    u = dealias(state.u)
    ch = dealias(state.stress.c)
    adv_c = dealias(scalar_field(g, u.values[0] * ddx(ch, 1).values
                                 + u.values[1] * ddx(ch, 2).values))
    mean_c = abs(np.mean(adv_c.values))
    scale = np.max(np.abs(u.values)) * np.max(np.abs(ch.values)) + 1e-300
    ok = mean_rho <= 1e-12 * scale and mean_c <= 1e-12 * scale
    return _result("dynamics.transport_means", ok,
                   f"mean drho {mean_rho:.2e}, mean u.grad(c) {mean_c:.2e}")


def check_equilibrium_fixed_point(cfg) -> CheckResult:
    grid = make_grid(16, cfg.length)
    state = cfgmod.build_initial(replace(cfg, preset="equilibrium", n=16), grid)
    # The explicit source holds the fixed point to O((2k dt)^4 * k dt) per
    # step, so a small step keeps the drift at rounding level.
    out = step(state, 1e-3, cfg.params)
    gap = max(
        np.max(np.abs(out.u.values - state.u.values)),
        np.max(np.abs(out.stress.c.values - state.stress.c.values)),
        np.max(np.abs(out.rho.values - state.rho.values)),
    )
    return _result("integrate.equilibrium_fixed_point", gap <= 1e-13,
                   f"max drift {gap:.2e}")


def check_temporal_order(cfg) -> CheckResult:
    params = cfg.params
    grid = make_grid(8, cfg.length)
    rho0, c0, t_end = 1.0, 3.0, 1.0
    exact = 2.0 * rho0 + (c0 - 2.0 * rho0) * np.exp(-2.0 * params.k * t_end)

    def solve(dt):
        base = cfgmod.build_initial(replace(cfg, preset="equilibrium", n=8, rho0=rho0), grid)
        c = scalar_field(grid, np.full((8, 8), c0))
        state = SimState(0.0, base.u, StressField(base.stress.a, base.stress.b, c), base.rho)
        steps = int(round(t_end / dt))
        for _ in range(steps):
            state = step(state, dt, params)
        return abs(np.max(state.stress.c.values) - exact)

    errs = [solve(dt) for dt in (0.2, 0.1, 0.05)]
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    ok = min(orders) >= 1.9
    return _result("integrate.temporal_order", ok,
                   f"errors {[f'{e:.2e}' for e in errs]}, orders {[f'{o:.2f}' for o in orders]}")


def _short_random_run(cfg):
    n = min(cfg.n, 32)
    tweaked = replace(cfg, preset="random_admissible", n=n)
    grid = make_grid(n, tweaked.length)
    state = cfgmod.build_initial(tweaked, grid)
    ctl = StepControl(dt_max=0.01, t_end=0.5, output_every=5)
    return run(state, tweaked.params, ctl, tweaked.monitors)


def check_rho_conservation(cfg) -> CheckResult:
    traj = _short_random_run(cfg)
    first, last = traj.records[0], traj.records[-1]
    span = last.time - first.time
    drift1 = abs(last.norms["rho_L1"] - first.norms["rho_L1"]) / first.norms["rho_L1"]
    drift2 = abs(last.norms["rho_L2"] - first.norms["rho_L2"]) / first.norms["rho_L2"]
    ok = max(drift1, drift2) <= 1e-8 * max(span, 1.0)
    return _result("integrate.rho_conservation", ok,
                   f"relative drifts {drift1:.2e}, {drift2:.2e} over {span:.2g}s")


def check_run_positivity(cfg) -> CheckResult:
    traj = _short_random_run(cfg)
    worst = min(r.min_gamma for r in traj.records)
    ceiling = max(r.c_max for r in traj.records)
    ok = worst >= -1e-8 * max(1.0, ceiling)
    return _result("integrate.run_positivity", ok, f"min gamma {worst:.3e}")


def check_equilibrium_balance(cfg) -> CheckResult:
    grid = make_grid(16, cfg.length)
    state = cfgmod.build_initial(replace(cfg, preset="equilibrium", n=16), grid)
    led = diagnostics.energy_ledger(state, cfg.params)
    gap = _rel(abs(led.dissipation - led.source), led.source)
    ctl = StepControl(dt_max=1e-3, t_end=0.05, output_every=10)
    traj = run(state, cfg.params, ctl, cfg.monitors)
    energies = [r.energy for r in traj.records]
    drift = _rel(max(energies) - min(energies), abs(energies[0]))
    ok = gap <= 1e-12 and drift <= 1e-12
    return _result("diagnostics.equilibrium_balance", ok,
                   f"balance gap {gap:.2e}, energy drift {drift:.2e}")


def check_energy_budget_gate(cfg) -> CheckResult:
    traj = _short_random_run(cfg)
    n = min(cfg.n, 32)
    tweaked = replace(cfg, preset="random_admissible", n=n)
    grid = make_grid(n, tweaked.length)
    state = cfgmod.build_initial(tweaked, grid)
    ledger = diagnostics.apriori_ledger(state, tweaked.params, traj.records[-1].time,
                                        tweaked.constant_c)
    report = diagnostics.bound_check(traj, ledger, tweaked.params)
    row = report.rows[0]
    return _result("diagnostics.energy_budget_gate", row.passed,
                   f"observed/bound = {row.ratio:.6f}")


def check_positivity_scan(cfg) -> CheckResult:
    state = _random_state(cfg, n=min(cfg.n, 32))
    rep = diagnostics.positivity_report(state, tol=1e-8)
    a, b, c = (f.values for f in (state.stress.a, state.stress.b, state.stress.c))
    eigs = np.linalg.eigvalsh(
        np.moveaxis(np.array([[0.5 * c + a, b], [b, 0.5 * c - a]]), (0, 1), (-2, -1))
    )
    brute_eig = float(np.min(eigs[..., 0]))
    brute_gamma = float(np.min(c - 2.0 * np.sqrt(a * a + b * b)))
    ok = (
        rep.min_c == float(np.min(c))
        and rep.min_rho == float(np.min(state.rho.values))
        and abs(rep.min_eig - brute_eig) <= 1e-12
        and abs(rep.min_gamma - brute_gamma) <= 1e-12
    )
    return _result("diagnostics.positivity_scan", ok,
                   f"min eig {rep.min_eig:.6g} vs brute {brute_eig:.6g}")


def check_ledger_sanity(cfg) -> CheckResult:
    state = _random_state(cfg, n=16)
    rng = np.random.default_rng(13)
    monotone = True
    for _ in range(5):
        params = PhysParams(
            nu=float(rng.uniform(0.005, 0.1)),
            kappa=float(rng.uniform(0.005, 0.1)),
            k=float(rng.uniform(0.2, 2.0)),
            bigK=float(rng.uniform(0.2, 2.0)),
        )
        t_short = float(rng.uniform(0.2, 1.0))
        led1 = diagnostics.apriori_ledger(state, params, t_short)
        led2 = diagnostics.apriori_ledger(state, params, 2.0 * t_short)
        for name, e1 in led1.entries().items():
            e2 = getattr(led2, name)
            if e2.value < e1.value * (1 - 1e-12):
                monotone = False
    led = diagnostics.apriori_ledger(state, cfg.params, 1.0, cfg.constant_c)
    units_ok = led.R0.units == "cm^4 sec^-2" and led.B.units == "dimensionless"
    ok = monotone and units_ok
    return _result("diagnostics.ledger_sanity", ok,
                   f"R0 [{led.R0.units}], B [{led.B.units}], monotone={monotone}")


def check_ledger_overflow(cfg) -> CheckResult:
    state = _random_state(cfg, n=16)
    params = PhysParams(nu=1e-8, kappa=1e-8, k=1.0, bigK=1.0)
    led = diagnostics.apriori_ledger(state, params, 10.0)
    ok = led.R1.overflowed and np.isinf(led.R1.value)
    return _result("diagnostics.ledger_overflow", ok,
                   f"R1 = {led.R1.value}, flagged {led.R1.overflowed}")


def _picard_setup(cfg, n=16, t0=0.1, nodes=33, seed=5, amplitude=0.05):
    tweaked = replace(cfg, preset="random_admissible", n=n, seed=seed,
                      amplitude=amplitude, stress_amplitude=0.05)
    grid = make_grid(n, tweaked.length)
    state = cfgmod.build_initial(tweaked, grid)
    pcfg = picard.PicardConfig(t0=t0, n_time_nodes=nodes, max_iter=40, tol=1e-11)
    return grid, state, tweaked.params, pcfg


def check_picard_bilinearity(cfg) -> CheckResult:
    grid, state, params, pcfg = _picard_setup(cfg)
    rng = np.random.default_rng(17)
    m = pcfg.n_time_nodes

    def rand_u():
        raw = rng.standard_normal((m, 2, grid.n, grid.n))
        return to_spectral(raw) * grid.dealias_mask

    u, v, w = rand_u(), rand_u(), rand_u()
    q_scaled = picard.op_q1(2.5 * u, v, grid, params, pcfg)
    q_base = picard.op_q1(u, v, grid, params, pcfg)
    q_sum = picard.op_q1(u, v + w, grid, params, pcfg)
    q_parts = q_base + picard.op_q1(u, w, grid, params, pcfg)
    scale = np.max(np.abs(q_base)) + 1e-300
    err1 = np.max(np.abs(q_scaled - 2.5 * q_base)) / scale
    err2 = np.max(np.abs(q_sum - q_parts)) / scale

    iso = np.zeros((m, 3, grid.n, grid.n), dtype=complex)
    iso[:, 2] = 2.0 * to_spectral(rng.standard_normal((m, grid.n, grid.n))) * grid.dealias_mask
    l1_iso = np.max(np.abs(picard.op_l1(iso, grid, params, pcfg)))
    ok = err1 <= 1e-12 and err2 <= 1e-12 and l1_iso <= 1e-13
    return _result("picard.bilinearity", ok,
                   f"homog {err1:.2e}, additive {err2:.2e}, L1(rho I) {l1_iso:.2e}")


def check_picard_zeroth_semigroup(cfg) -> CheckResult:
    grid, state, params, pcfg = _picard_setup(cfg)
    u0h, abc0h, _ = picard._initial_coeffs(state.u, state.stress, state.rho, grid)
    _, sem_abc = picard.semigroup_paths(u0h, abc0h, grid, params, pcfg)
    times = pcfg.times()
    decay = np.exp(-(params.kappa * grid.k_sq + 2.0 * params.k) * times[:, None, None])
    err = np.max(np.abs(sem_abc - decay[:, None] * abc0h[None]))
    return _result("picard.zeroth_semigroup", err == 0.0, f"max gap {err:.2e}")


def check_picard_q2_consistency(cfg) -> CheckResult:
    grid, state, params, pcfg = _picard_setup(cfg)
    u0h, abc0h, rho0h = picard._initial_coeffs(state.u, state.stress, state.rho, grid)
    integrand = picard.q2_integrand(u0h[None], abc0h[None], grid)[0]
    da, db, dc = dynamics.stress_rhs(state, params)
    lin = -(params.kappa * grid.k_sq) - 2.0 * params.k
    expect = np.stack([
        to_spectral(da.values) - lin * abc0h[0],
        to_spectral(db.values) - lin * abc0h[1],
        to_spectral(dc.values) - lin * abc0h[2] - 4.0 * params.k * rho0h,
    ])
    scale = np.max(np.abs(expect)) + 1e-300
    err = np.max(np.abs(integrand - expect)) / scale
    return _result("picard.q2_consistency", err <= 1e-12, f"rel gap {err:.2e}")


def check_picard_fixed_point(cfg) -> CheckResult:
    grid, state, params, pcfg = _picard_setup(cfg)
    traj, hist = picard.picard_iterate(state.u, state.stress, state.rho, params, pcfg)
    u0h, abc0h, rho0h = picard._initial_coeffs(state.u, state.stress, state.rho, grid)
    nu, nabc, nrho = picard.apply_map(traj.u, traj.abc, traj.rho,
                                      u0h, abc0h, rho0h, grid, params, pcfg)
    times = pcfg.times()
    change = picard.composite_norm(grid, nu - traj.u, nabc - traj.abc,
                                   nrho - traj.rho, times)
    scale = picard.composite_norm(grid, traj.u, traj.abc, traj.rho, times)
    ok = change <= 2.0 * pcfg.tol * max(scale, 1e-300)
    return _result("picard.fixed_point", ok, f"reapplication change {change:.2e}")


def check_picard_stepper_agreement(cfg) -> CheckResult:
    grid, state, params, pcfg = _picard_setup(cfg, n=16, t0=0.1, nodes=65)
    traj, _ = picard.picard_iterate(state.u, state.stress, state.rho, params, pcfg)
    ctl = StepControl(dt_min=1e-12, dt_max=2e-3, t_end=pcfg.t0, output_every=10**9)
    stepped = run(state, params, ctl).final_state
    mild = traj.state(pcfg.n_time_nodes - 1)

    def rel(fa, fb):
        num = np.sqrt(np.mean((fa - fb) ** 2))
        den = np.sqrt(np.mean(fb ** 2))
        return num / max(den, 1e-300)

    gaps = [
        rel(mild.u.values, stepped.u.values),
        rel(mild.stress.a.values, stepped.stress.a.values),
        rel(mild.stress.b.values, stepped.stress.b.values),
        rel(mild.stress.c.values, stepped.stress.c.values),
        rel(mild.rho.values, stepped.rho.values),
    ]
    worst = max(gaps)
    return _result("picard.stepper_agreement", worst <= 1e-4,
                   f"worst relative L2 gap {worst:.2e}")


def check_determinism(cfg) -> CheckResult:
    tweaked = replace(cfg, preset="random_admissible", n=min(cfg.n, 32), seed=42)
    grid = make_grid(tweaked.n, tweaked.length)
    s1 = cfgmod.build_initial(tweaked, grid)
    s2 = cfgmod.build_initial(tweaked, grid)
    same = (
        np.array_equal(s1.u.values, s2.u.values)
        and np.array_equal(s1.stress.c.values, s2.stress.c.values)
        and np.array_equal(s1.rho.values, s2.rho.values)
    )
    return _result("cli_io.determinism", same, "seeded builds are bit-identical")


def check_snapshot_roundtrip(cfg) -> CheckResult:
    state = _random_state(cfg, n=16)
    grid = state.grid
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "state.snap")
        snapshots.write_snapshot(state, path)
        back = snapshots.read_snapshot(path, grid)
    same = all(
        np.array_equal(a, b)
        for a, b in (
            (state.u.values, back.u.values),
            (state.stress.a.values, back.stress.a.values),
            (state.stress.b.values, back.stress.b.values),
            (state.stress.c.values, back.stress.c.values),
            (state.rho.values, back.rho.values),
        )
    )
    return _result("cli_io.snapshot_roundtrip", same, "bitwise round trip")


def check_config_validation(cfg) -> CheckResult:
    rejected = 0
    for text in ("bogus_key=1\n", "n=32\nn=64\n", "kappa=-1\n", "cfl=2\n"):
        try:
            cfgmod.parse_config(text)
        except cfgmod.ConfigError:
            rejected += 1
    return _result("cli_io.config_validation", rejected == 4,
                   f"{rejected}/4 invalid configs rejected")


ALL_CHECKS = (
    check_transform_roundtrip,
    check_projector,
    check_derivative_exactness,
    check_semigroup_law,
    check_parseval,
    check_gamma_equivalence,
    check_trace_bound,
    check_norm_parseval,
    check_determinant_cancellation,
    check_energy_rate,
    check_cubic_cancellation,
    check_momentum_divfree,
    check_transport_means,
    check_equilibrium_fixed_point,
    check_temporal_order,
    check_rho_conservation,
    check_run_positivity,
    check_equilibrium_balance,
    check_energy_budget_gate,
    check_positivity_scan,
    check_ledger_sanity,
    check_ledger_overflow,
    check_picard_bilinearity,
    check_picard_zeroth_semigroup,
    check_picard_q2_consistency,
    check_picard_fixed_point,
    check_picard_stepper_agreement,
    check_determinism,
    check_snapshot_roundtrip,
    check_config_validation,
)


def run_checks(cfg) -> list:
    results = []
    for fn in ALL_CHECKS:
        try:
            results.append(fn(cfg))
        except Exception as exc:  # a crashed check is a failed check
            results.append(CheckResult(fn.__name__, False, f"raised {exc!r}"))
    return results
