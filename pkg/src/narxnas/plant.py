"""Surrogate reactor-like plant and dataset I/O.

The plant is one-group point kinetics with a single effective precursor
group, a rod-position reactivity curve and first-order temperature feedback,
integrated with fixed-step RK4.  In normalised units (power ``n`` and
precursor concentration ``c`` equal 1 at nominal, temperature excess
``theta`` equal 0)::

    dn/dt     = ((rho - beta) * n + beta * c) / Lambda
    dc/dt     = lambda_c * (n - c)
    dtheta/dt = (n - 1 - theta) / tau_th
    rho       = rod_worth * (1 - exp(-rod_curvature * (z - z_nom))) - alpha_T * theta

At equilibrium ``rho = 0`` so steady power is
``1 + rod_worth / alpha_T * (1 - exp(-rod_curvature * (z - z_nom)))``.  The
default curve puts full withdrawal (``z = 0``) at 1.184 and full insertion
(``z = -2.196``) at 0.

Sample ``k`` holds the rods at ``u[k]`` for one sample period; ``y[k]`` is
the normalised power at the end of that period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numba import njit

ROD_MIN = -2.196
ROD_NOMINAL = -1.098
ROD_MAX = 0.0
NOMINAL_POWER_MW = 3436.0


class DatasetError(ValueError):
    """Malformed or inconsistent dataset."""


class PlantError(RuntimeError):
    """The surrogate plant left its admissible operating envelope."""


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    nominal_input: float = ROD_NOMINAL
    nominal_output: float = 1.0
    sample_period: float = 1.0
    name: str = "dataset"

    def __post_init__(self):
        u = np.array(self.inputs, dtype=np.float64).ravel()
        y = np.array(self.targets, dtype=np.float64).ravel()
        u.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", u)
        object.__setattr__(self, "targets", y)
        if u.size != y.size:
            raise DatasetError(f"{u.size} inputs but {y.size} targets")
        if u.size == 0:
            raise DatasetError("dataset is empty")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(y))):
            raise DatasetError("dataset contains non-finite values")
        if not self.nominal_output > 0:
            raise DatasetError("nominal_output must be positive")
        if not self.sample_period > 0:
            raise DatasetError("sample_period must be positive")

    def __len__(self):
        return self.inputs.size


def calibrate_rod_curve(n_withdrawn: float = 1.184, n_inserted: float = 0.0,
                        half_stroke: float = ROD_NOMINAL - ROD_MIN):
    """Solve for (worth ratio, curvature) of the exponential rod curve.

    Returns ``(a, k)`` such that ``1 + a*(1 - exp(-k*dz))`` equals
    ``n_withdrawn`` at ``dz = +half_stroke`` and ``n_inserted`` at
    ``dz = -half_stroke``.
    """
    up, down = n_withdrawn - 1.0, 1.0 - n_inserted
    if up <= 0 or down <= 0:
        raise ValueError("steady powers must bracket nominal")
    # a(1 - 1/q) = up, a(q - 1) = down  =>  q = down / up
    q = down / up
    if q <= 1:
        raise ValueError("exponential curve needs more insertion than withdrawal worth")
    a = down / (q - 1)
    k = math.log(q) / half_stroke
    return a, k


_A, _K = calibrate_rod_curve()


@dataclass(frozen=True)
class SurrogatePlantParams:
    beta: float = 0.0065          # delayed neutron fraction
    decay_const: float = 0.08     # effective precursor decay constant, 1/s
    generation_time: float = 1e-4  # neutron generation time Lambda, s
    alpha_t: float = 0.0065       # temperature feedback, reactivity per unit theta
    tau_th: float = 8.0           # thermal time constant, s
    rod_worth: float = _A * 0.0065  # reactivity scale of the rod curve
    rod_curvature: float = _K     # 1/m
    rod_nominal: float = ROD_NOMINAL
    rod_min: float = ROD_MIN
    rod_max: float = ROD_MAX
    nominal_power_mw: float = NOMINAL_POWER_MW
    integration_step: float = 0.01  # RK4 step, s
    power_limit: float = 10.0     # abort above this many times nominal

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.generation_time <= 0:
            raise ValueError("generation_time must be positive")
        if self.alpha_t < 0:
            raise ValueError("temperature feedback must be stabilising (alpha_t >= 0)")
        if self.tau_th <= 0 or self.decay_const <= 0 or self.integration_step <= 0:
            raise ValueError("time constants and step must be positive")

    def steady_power(self, z) -> np.ndarray:
        """Equilibrium normalised power for a constant rod position."""
        rho = self.rod_worth * (1 - np.exp(-self.rod_curvature * (np.asarray(z) - self.rod_nominal)))
        return 1.0 + rho / self.alpha_t


@njit(cache=True)
def _deriv(n, c, th, rho_rod, beta, lam, gen, alpha, tau):
    rho = rho_rod - alpha * th
    return (((rho - beta) * n + beta * c) / gen, lam * (n - c), (n - 1.0 - th) / tau)


@njit(cache=True)
def _integrate(z_samples, substeps, h, beta, lam, gen, alpha, tau, worth, curv, z_nom, limit):
    m = z_samples.shape[0]
    out = np.empty(m)
    n, c, th = 1.0, 1.0, 0.0
    for k in range(m):
        rho_rod = worth * (1.0 - np.exp(-curv * (z_samples[k] - z_nom)))
        for _ in range(substeps):
            k1 = _deriv(n, c, th, rho_rod, beta, lam, gen, alpha, tau)
            k2 = _deriv(n + 0.5 * h * k1[0], c + 0.5 * h * k1[1], th + 0.5 * h * k1[2],
                        rho_rod, beta, lam, gen, alpha, tau)
            k3 = _deriv(n + 0.5 * h * k2[0], c + 0.5 * h * k2[1], th + 0.5 * h * k2[2],
                        rho_rod, beta, lam, gen, alpha, tau)
            k4 = _deriv(n + h * k3[0], c + h * k3[1], th + h * k3[2],
                        rho_rod, beta, lam, gen, alpha, tau)
            n += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            c += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            th += h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            if not (n <= limit):
                out[k] = n
                return out[:k + 1], False
        out[k] = n
    return out, True


def schedule_samples(schedule: Sequence[tuple], n_samples: int, sample_period: float = 1.0,
                     start: float = ROD_NOMINAL) -> np.ndarray:
    """Expand ``[(time_s, position_m), ...]`` steps into one value per sample."""
    z = np.full(n_samples, float(start))
    t = np.arange(n_samples) * sample_period
    for time, pos in sorted(schedule):
        z[t >= time] = pos
    return z


def generate_dataset(params: SurrogatePlantParams, schedule: Sequence[tuple],
                     duration: float, sample_period: float = 1.0,
                     rng: Optional[np.random.Generator] = None, noise_std: float = 0.0,
                     name: str = "surrogate") -> Dataset:
    """Simulate the plant under a piecewise-constant rod schedule.

    ``schedule`` lists ``(time_s, position_m)`` steps starting from the
    nominal position.  With ``rng`` and ``noise_std > 0`` white noise is added
    to the recorded power.
    """
    n_samples = int(round(duration / sample_period))
    if n_samples < 1:
        raise ValueError("duration shorter than one sample")
    z = schedule_samples(schedule, n_samples, sample_period, params.rod_nominal)
    lo, hi = params.rod_min, params.rod_max
    if np.any(z < lo - 1e-12) or np.any(z > hi + 1e-12):
        bad = z[(z < lo) | (z > hi)][0]
        raise ValueError(f"rod position {bad} outside [{lo}, {hi}]")
    substeps = max(1, int(round(sample_period / params.integration_step)))
    h = sample_period / substeps
    y, ok = _integrate(z, substeps, h, params.beta, params.decay_const, params.generation_time,
                       params.alpha_t, params.tau_th, params.rod_worth, params.rod_curvature,
                       params.rod_nominal, params.power_limit)
    if not ok:
        raise PlantError(
            f"power exceeded {params.power_limit} x nominal at sample {y.size - 1}"
        )
    if rng is not None and noise_std > 0:
        y = y + rng.normal(0.0, noise_std, size=y.size)
    return Dataset(z, y, params.rod_nominal, 1.0, sample_period, name)


# Staircase rod programmes (time_s, position_m); shapes only, loosely styled
# on a learning trajectory and two verification trajectories.
SCHEDULES = {
    "learning": [
        (100, -1.25), (300, -1.45), (500, -1.20), (700, -0.95), (900, -0.80),
        (1100, -1.00), (1300, -1.35), (1500, -1.60), (1700, -1.40), (1900, -1.10),
        (2100, -0.90), (2300, -1.05), (2500, -1.30), (2700, -1.098),
    ],
    "verification1": [
        (150, -1.30), (450, -1.55), (800, -1.25), (1100, -1.00), (1500, -0.85),
        (1900, -1.15), (2300, -1.40), (2650, -1.098),
    ],
    "verification2": [
        (200, -0.95), (400, -0.82), (650, -1.02), (900, -1.22), (1200, -1.48),
        (1500, -1.33), (1800, -1.12), (2100, -0.92), (2400, -1.18), (2700, -1.098),
    ],
    "nominal": [],
}
DEFAULT_DURATION = 3000.0


def bundled_dataset(name: str = "learning", params: SurrogatePlantParams | None = None,
                    duration: float = DEFAULT_DURATION, sample_period: float = 1.0) -> Dataset:
    if name not in SCHEDULES:
        raise KeyError(f"unknown schedule {name!r}; choose from {sorted(SCHEDULES)}")
    return generate_dataset(params or SurrogatePlantParams(), SCHEDULES[name], duration,
                            sample_period, name=name)


def save_csv(dataset: Dataset, path: str | Path) -> None:
    lines = [
        f"# nominal_input={dataset.nominal_input!r} nominal_output={dataset.nominal_output!r} "
        f"sample_period={dataset.sample_period!r}",
        "u,y",
    ]
    lines += [f"{u!r},{y!r}" for u, y in zip(dataset.inputs.tolist(), dataset.targets.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def load_csv(path: str | Path) -> Dataset:
    """Read a ``u,y`` CSV with an optional ``# key=value ...`` metadata line."""
    path = Path(path)
    meta = {"nominal_input": ROD_NOMINAL, "nominal_output": 1.0, "sample_period": 1.0}
    u, y = [], []
    header_seen = False
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if "=" not in token:
                        continue
                    key, value = token.split("=", 1)
                    if key in meta:
                        try:
                            meta[key] = float(value)
                        except ValueError:
                            raise DatasetError(f"{path}:{lineno}: bad {key} value {value!r}") from None
                continue
            cells = [c.strip() for c in line.split(",")]
            if not header_seen and not _is_number(cells[0]):
                if [c.lower() for c in cells[:2]] != ["u", "y"]:
                    raise DatasetError(f"{path}:{lineno}: expected columns 'u,y', got {line!r}")
                header_seen = True
                continue
            if len(cells) != 2:
                raise DatasetError(f"{path}:{lineno}: expected 2 columns, found {len(cells)}")
            try:
                uu, yy = float(cells[0]), float(cells[1])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: malformed number in {line!r}") from None
            if not (math.isfinite(uu) and math.isfinite(yy)):
                raise DatasetError(f"{path}:{lineno}: non-finite value in {line!r}")
            u.append(uu)
            y.append(yy)
    if not u:
        raise DatasetError(f"{path}: no data rows")
    return Dataset(np.array(u), np.array(y), meta["nominal_input"], meta["nominal_output"],
                   meta["sample_period"], path.stem)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True
