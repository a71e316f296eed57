"""Flat key=value run configuration and initial-condition presets.

Unknown and duplicate keys are errors; every key has a documented default
(see README).  Presets produce admissible states: `equilibrium` sits at the
relaxation fixed point, `taylor_green` is the decaying vortex with zero
stress, `random_admissible` builds band-limited data with a strictly
positive determinant margin, and `snapshot:<path>` restores a saved state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import positivity_report
from .fields import PhysParams, SimState, StressField
from .integrate import Monitors, StepControl
from .spectral import (
    SpectralGrid,
    dealias,
    scalar_field,
    to_real,
    to_spectral,
    vector_field,
)


class ConfigError(ValueError):
    pass


PRESETS = ("equilibrium", "taylor_green", "random_admissible")


@dataclass(frozen=True)
class RunConfig:
    n: int
    length: float
    params: PhysParams
    preset: str
    rho0: float
    amplitude: float
    stress_amplitude: float
    init_kmax: int
    seed: int
    control: StepControl
    monitors: Monitors
    constant_c: float


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_times(raw: str) -> tuple:
    raw = raw.strip()
    if not raw:
        return ()
    return tuple(float(part) for part in raw.split(","))


_SCHEMA = {
    # key: (parser, default)
    "n": (int, 64),
    "L": (float, 2.0 * np.pi),
    "nu": (float, 0.01),
    "kappa": (float, 0.01),
    "k": (float, 1.0),
    "bigK": (float, 1.0),
    "preset": (str, "equilibrium"),
    "rho0": (float, 1.0),
    "amplitude": (float, 0.1),
    "stress_amplitude": (float, 0.2),
    "init_kmax": (int, 4),
    "seed": (int, 0),
    "cfl": (float, 0.5),
    "dt_min": (float, 1e-10),
    "dt_max": (float, 1e-2),
    "t_end": (float, 1.0),
    "output_every": (int, 1),
    "snapshot_times": (_parse_times, ()),
    "keep_states": (_parse_bool, False),
    "positivity_tol": (float, 1e-8),
    "rho_tol": (float, 1e-6),
    "energy_tol": (float, 1e-2),
    "c_ceiling": (float, 1e12),
    "constant_c": (float, 1.0),
}


def parse_config(text: str) -> RunConfig:
    """Parse flat key=value lines ('#' starts a comment) into a RunConfig."""
    seen: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw_line!r}")
        key, raw_value = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parser, _ = _SCHEMA[key]
        try:
            seen[key] = parser(raw_value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: invalid value for {key!r}: {exc}") from exc

    values = {key: seen.get(key, default) for key, (_, default) in _SCHEMA.items()}

    preset = values["preset"]
    if preset not in PRESETS and not preset.startswith("snapshot:"):
        raise ConfigError(f"unknown preset {values['preset']!r}")
    try:
        params = PhysParams(values["nu"], values["kappa"], values["k"], values["bigK"])
        control = StepControl(
            cfl=values["cfl"],
            dt_min=values["dt_min"],
            dt_max=values["dt_max"],
            t_end=values["t_end"],
            output_every=values["output_every"],
            snapshot_times=values["snapshot_times"],
            keep_states=values["keep_states"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    monitors = Monitors(
        positivity_tol=values["positivity_tol"],
        rho_tol=values["rho_tol"],
        energy_tol=values["energy_tol"],
        c_ceiling=values["c_ceiling"],
    )
    if values["n"] < 8 or values["n"] % 2:
        raise ConfigError("n must be an even integer of at least 8")
    if values["L"] <= 0:
        raise ConfigError("L must be positive")
    if values["init_kmax"] < 1:
        raise ConfigError("init_kmax must be at least 1")
    return RunConfig(
        n=values["n"],
        length=values["L"],
        params=params,
        preset=preset,
        rho0=values["rho0"],
        amplitude=values["amplitude"],
        stress_amplitude=values["stress_amplitude"],
        init_kmax=values["init_kmax"],
        seed=values["seed"],
        control=control,
        monitors=monitors,
        constant_c=values["constant_c"],
    )


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def band_limited_random(grid: SpectralGrid, rng: np.random.Generator,
                        kmax: int) -> np.ndarray:
    """Zero-mean random field supported on modes with max(|k1|,|k2|) <= kmax,
    scaled to unit max amplitude."""
    noise = rng.standard_normal((grid.n, grid.n))
    kint = np.rint(np.fft.fftfreq(grid.n, 1.0 / grid.n)).astype(int)
    ki, kj = np.meshgrid(kint, kint, indexing="ij")
    band = (np.abs(ki) <= kmax) & (np.abs(kj) <= kmax)
    band[0, 0] = False
    f = to_real(to_spectral(noise) * band)
    peak = np.max(np.abs(f))
    return f / peak if peak > 0 else f


def _uniform_state(grid, rho0: float) -> SimState:
    c = scalar_field(grid, np.full((grid.n, grid.n), 2.0 * rho0))
    zero = scalar_field(grid, np.zeros((grid.n, grid.n)))
    return SimState(
        time=0.0,
        u=vector_field(grid, np.zeros((2, grid.n, grid.n))),
        stress=StressField(zero, zero, c),
        rho=scalar_field(grid, np.full((grid.n, grid.n), rho0)),
    )


def _taylor_green_state(grid, amplitude: float) -> SimState:
    x, y = grid.nodes()
    scale = 2.0 * np.pi / grid.length
    u = np.stack([
        amplitude * np.sin(scale * x) * np.cos(scale * y),
        -amplitude * np.cos(scale * x) * np.sin(scale * y),
    ])
    zero = scalar_field(grid, np.zeros((grid.n, grid.n)))
    return SimState(
        time=0.0,
        u=vector_field(grid, u),
        stress=StressField(zero, zero, zero),
        rho=zero,
    )


def _random_admissible_state(grid, cfg: RunConfig) -> SimState:
    rng = np.random.default_rng(cfg.seed)
    kmax = min(cfg.init_kmax, grid.n // 3)
    g_a = band_limited_random(grid, rng, kmax)
    g_b = band_limited_random(grid, rng, kmax)
    g_d = band_limited_random(grid, rng, kmax)
    g_rho = band_limited_random(grid, rng, kmax)
    g_psi = band_limited_random(grid, rng, kmax)

    a = cfg.stress_amplitude * g_a
    b = cfg.stress_amplitude * g_b
    det_margin = cfg.rho0 ** 2 * (1.0 + 0.5 * g_d)  # strictly positive
    c = 2.0 * np.sqrt(a * a + b * b + det_margin)
    rho = cfg.rho0 * (1.0 + 0.5 * g_rho)

    psih = to_spectral(g_psi)
    u = np.stack([
        to_real(-grid.iky * psih),
        to_real(grid.ikx * psih),
    ])
    umax = np.max(np.abs(u))
    if umax > 0:
        u *= cfg.amplitude / umax

    state = SimState(
        time=0.0,
        u=dealias(vector_field(grid, u)),
        stress=StressField(
            dealias(scalar_field(grid, a)),
            dealias(scalar_field(grid, b)),
            dealias(scalar_field(grid, c)),
        ),
        rho=dealias(scalar_field(grid, rho)),
    )
    return state


def build_initial(cfg: RunConfig, grid: SpectralGrid) -> SimState:
    """Construct the configured initial state; the result always passes the
    positivity report (inadmissible output is an internal bug)."""
    if cfg.preset == "equilibrium":
        state = _uniform_state(grid, cfg.rho0)
    elif cfg.preset == "taylor_green":
        state = _taylor_green_state(grid, cfg.amplitude)
    elif cfg.preset == "random_admissible":
        state = _random_admissible_state(grid, cfg)
    elif cfg.preset.startswith("snapshot:"):
        from .snapshots import read_snapshot

        state = read_snapshot(cfg.preset.split(":", 1)[1], grid)
    else:
        raise ConfigError(f"unknown preset {cfg.preset!r}")

    report = positivity_report(state, tol=1e-10)
    if not report.passed:
        raise RuntimeError(
            f"preset {cfg.preset!r} produced an inadmissible state "
            f"(min gamma {report.min_gamma:.3e}, min rho {report.min_rho:.3e})"
        )
    state.validate()
    return state
