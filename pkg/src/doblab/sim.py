"""Fixed-step closed-loop servo simulation with an estimator realization.

The digital controller runs once per sampling period: a backward-Euler PD on
position error produces a desired acceleration, a one-state disturbance
estimator cancels the lumped load, and the summed command is held by ZoH.
Between samples the double-integrator plant (optionally with viscous
friction) is advanced by its exact closed form, so every deviation from the
transfer-function theory is attributable to the controller, never to the
integrator.
"""

from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .params import DObParams, OuterGains, per_sample_gain

__all__ = [
    "PlantParams",
    "Step",
    "Trajectory",
    "Scenario",
    "SimTrace",
    "simulate",
    "inner_loop_disturbance_oracle",
    "noise_channel_oracle",
    "aggregate_mismatch",
    "DIVERGENCE_LIMIT",
]

# |q| beyond this declares divergence: far above any test reference, far
# below overflow.
DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class PlantParams:
    """Actual servo constants plus a piecewise-constant opposing load.

    external_load holds (time, torque) pairs with strictly increasing times;
    each torque takes effect at its time and holds until the next entry.
    Positive load torque opposes the control input.
    """

    jm: float
    kt: float
    viscous: float = 0.0
    external_load: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if not (self.jm > 0.0 and math.isfinite(self.jm)):
            raise ValueError("jm must be positive")
        if not (self.kt > 0.0 and math.isfinite(self.kt)):
            raise ValueError("kt must be positive")
        if not (self.viscous >= 0.0 and math.isfinite(self.viscous)):
            raise ValueError("viscous must be nonnegative")
        times = [t for t, _ in self.external_load]
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise ValueError("external_load times must be strictly increasing")

    @functools.cached_property
    def _times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.external_load)

    def load_at(self, t: float) -> float:
        """Load torque in effect at time t (0 before the first entry)."""
        i = bisect.bisect_right(self._times, t)
        if i == 0:
            return 0.0
        return self.external_load[i - 1][1]


@dataclass(frozen=True)
class Step:
    """Constant position reference applied from t = 0."""

    amplitude: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.amplitude):
            raise ValueError("step amplitude must be finite")


@dataclass(frozen=True)
class Trajectory:
    """Pre-sampled position reference, one value per controller tick."""

    samples: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.samples) == 0:
            raise ValueError("trajectory must have at least one sample")
        if not all(math.isfinite(v) for v in self.samples):
            raise ValueError("trajectory samples must be finite")


@dataclass(frozen=True)
class Scenario:
    """Complete description of one deterministic closed-loop run.

    gains=None opens the outer loop (desired acceleration pinned to zero),
    which exposes the bare estimator channels for oracle comparisons.
    Velocity noise is uniform on [-noise_amplitude, +noise_amplitude] from a
    seeded generator, added to the measured velocity each tick.
    """

    plant: PlantParams
    dob: DObParams
    gains: OuterGains | None
    reference: Step | Trajectory
    duration: float
    noise_seed: int = 0
    noise_amplitude: float = 0.0

    def __post_init__(self) -> None:
        if not (self.duration > 0.0 and math.isfinite(self.duration)):
            raise ValueError("duration must be positive")
        if not (self.noise_amplitude >= 0.0 and math.isfinite(self.noise_amplitude)):
            raise ValueError("noise_amplitude must be nonnegative")
        ts = self.dob.require_ts()
        n = self.n_steps
        if n < 1:
            raise ValueError("duration shorter than one sampling period")
        if isinstance(self.reference, Trajectory):
            if len(self.reference.samples) != n:
                raise ValueError(
                    f"trajectory length {len(self.reference.samples)} does not "
                    f"match duration/ts = {n}"
                )
        del ts

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dob.require_ts()))

    def reference_samples(self) -> np.ndarray:
        n = self.n_steps
        if isinstance(self.reference, Step):
            return np.full(n, self.reference.amplitude)
        return np.asarray(self.reference.samples, dtype=float)

    def noise_samples(self) -> np.ndarray:
        n = self.n_steps
        if self.noise_amplitude == 0.0:
            return np.zeros(n)
        rng = np.random.Generator(np.random.PCG64(self.noise_seed))
        return rng.uniform(-self.noise_amplitude, self.noise_amplitude, n)


@dataclass(frozen=True)
class SimTrace:
    """Logged run: time grid, reference, state, command, load, estimate.

    Rows are spaced by ts/log_substeps.  Once |q| crosses DIVERGENCE_LIMIT at
    a controller tick, diverged_at records that tick's row index and the
    computed columns (q, qdot, u, tau_d_hat) hold NaN from there on; the time
    grid and the input columns (q_ref, tau_d) stay filled.
    """

    t: np.ndarray
    q_ref: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    u: np.ndarray
    tau_d: np.ndarray
    tau_d_hat: np.ndarray
    diverged_at: int | None

    @property
    def tracking_error(self) -> np.ndarray:
        return self.q_ref - self.q

    def __len__(self) -> int:
        return len(self.t)


def aggregate_mismatch(jn: float, ktn: float, jm: float, kt: float) -> float:
    """Single mismatch ratio combining inertia and torque-constant errors."""
    if min(jn, ktn, jm, kt) <= 0.0:
        raise ValueError("plant and nominal constants must be positive")
    return (kt * jn) / (ktn * jm)


def _plant_step(q, v, force, jm, b, dt):
    """Exact state advance under constant force over dt."""
    if b == 0.0:
        a = force / jm
        return q + dt * v + 0.5 * dt * dt * a, v + dt * a
    # m*vdot = F - b*v  has the closed form below; expm1 keeps the small-dt
    # difference accurate
    vinf = force / b
    decay = math.exp(-b * dt / jm)
    grow = -math.expm1(-b * dt / jm)
    q1 = q + vinf * dt + (v - vinf) * (jm / b) * grow
    v1 = vinf + (v - vinf) * decay
    return q1, v1


def simulate(sc: Scenario, log_substeps: int = 1) -> SimTrace:
    """Run the scenario tick by tick and log the trace.

    log_substeps > 1 inserts extra rows inside each sampling period by
    evaluating the plant's closed form at fractional times; the states at
    controller ticks are bitwise independent of the logging rate because the
    state advance itself always uses the full period.
    """
    if log_substeps < 1:
        raise ValueError("log_substeps must be at least 1")
    ts = sc.dob.require_ts()
    n = sc.n_steps
    m = log_substeps
    refs = sc.reference_samples()
    noise = sc.noise_samples()

    jm, kt, b = sc.plant.jm, sc.plant.kt, sc.plant.viscous
    # the mismatch ratio is realized through the nominal inertia; the nominal
    # torque constant is kept exact so alpha = jn/jm
    jn = sc.dob.alpha * jm
    ktn = kt
    g = sc.dob.g_dob
    g_v = sc.dob.g_v
    gains = sc.gains

    rows = n * m
    t = np.arange(rows) * (ts / m)
    out = {
        name: np.empty(rows)
        for name in ("q_ref", "q", "qdot", "u", "tau_d", "tau_d_hat")
    }

    q = 0.0
    v = 0.0
    tau_hat = 0.0
    vf_prev = 0.0
    e_prev = 0.0
    diverged_at: int | None = None

    for k in range(n):
        tk = k * ts
        ref = refs[k]
        load = sc.plant.load_at(tk)
        base = k * m
        out["q_ref"][base : base + m] = ref
        out["tau_d"][base : base + m] = load

        if diverged_at is None and abs(q) > DIVERGENCE_LIMIT:
            diverged_at = base
        if diverged_at is not None:
            for name in ("q", "qdot", "u", "tau_d_hat"):
                out[name][base : base + m] = math.nan
            continue

        vm = v + noise[k]
        if math.isinf(g_v):
            vf = vm
        else:
            vf = (vf_prev + g_v * ts * vm) / (1.0 + g_v * ts)

        if gains is None:
            acc_des = 0.0
        else:
            e = ref - q
            acc_des = gains.kp * e + gains.kd * (e - e_prev) / ts
            e_prev = e

        tau_hat = tau_hat + g * jn * (ts * acc_des - (vf - vf_prev))
        vf_prev = vf
        u = kt * (jn * acc_des + tau_hat) / ktn

        force = u - load
        out["q"][base] = q
        out["qdot"][base] = v
        out["u"][base : base + m] = u
        out["tau_d_hat"][base : base + m] = tau_hat
        for j in range(1, m):
            qj, vj = _plant_step(q, v, force, jm, b, j * (ts / m))
            out["q"][base + j] = qj
            out["qdot"][base + j] = vj
        q, v = _plant_step(q, v, force, jm, b, ts)

    return SimTrace(
        t=t,
        q_ref=out["q_ref"],
        q=out["q"],
        qdot=out["qdot"],
        u=out["u"],
        tau_d=out["tau_d"],
        tau_d_hat=out["tau_d_hat"],
        diverged_at=diverged_at,
    )


def inner_loop_disturbance_oracle(
    p: DObParams, jm: float, disturbance: Sequence[float]
) -> np.ndarray:
    """Acceleration response to a sampled load, straight from the loop algebra.

    Direct-form recursion of the disturbance channel (the sensitivity filter
    scaled by -1/jm): y[k] = (1-x)*y[k-1] - (d[k]-d[k-1])/jm with x the
    per-sample gain.  Serves as the independent truth for simulate's inner
    path when the outer loop is opened.
    """
    if not jm > 0.0:
        raise ValueError("jm must be positive")
    x = per_sample_gain(p)
    d = np.asarray(disturbance, dtype=float)
    y = np.empty(len(d))
    prev_y = 0.0
    prev_d = 0.0
    for k in range(len(d)):
        prev_y = (1.0 - x) * prev_y - (d[k] - prev_d) / jm
        prev_d = d[k]
        y[k] = prev_y
    return y


def noise_channel_oracle(p: DObParams, noise: Sequence[float]) -> np.ndarray:
    """Acceleration response to measured-velocity noise.

    Direct-form recursion of the noise channel (differenced complementary
    filter): y[k] = (1-x)*y[k-1] - alpha*g_dob*(n[k]-n[k-1]).  The z-1
    factor kills DC, so constant noise decays to exactly zero.
    """
    x = per_sample_gain(p)
    a_g = p.alpha * p.g_dob
    n_arr = np.asarray(noise, dtype=float)
    y = np.empty(len(n_arr))
    prev_y = 0.0
    prev_n = 0.0
    for k in range(len(n_arr)):
        prev_y = (1.0 - x) * prev_y - a_g * (n_arr[k] - prev_n)
        prev_n = n_arr[k]
        y[k] = prev_y
    return y
