"""Open-loop and closed-loop transfer functions of the DOb motion controller.

The controller has two nested loops.  The inner loop estimates the lumped
disturbance with bandwidth g_dob; with a velocity low-pass of bandwidth g_v
its continuous open loop is

    L_i(s) = alpha*g_v*g_dob / (s*(s + g_v)),

collapsing to alpha*g_dob/s for ideal velocity measurement.  Sampling turns
the estimator into a forward-difference integrator loop,

    L_i(z) = alpha*g_dob*ts / (z - 1),

whose single closed-loop pole sits at 1 - alpha*g_dob*ts.  The outer loop
wraps a PD position controller around the inner loop; in the sampled domain
the loop factors into C(z) * C_i(z) * G_p(z) where C_i is the inner-loop
reference-channel compensator and G_p the ZoH double integrator.  The finite
g_v continuous outer loop decomposes as the inner loop in parallel with
alpha*(s+g_v)*(s+g_dob)*(kd*s+kp) / (s^3*(s+g_v)); re-summing the two gives
back the single printed rational form built here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .discretize import backward_euler_pd, zoh_double_integrator
from .lti import (
    POLE_EVAL_TOL,
    ConnectMode,
    Polynomial,
    RationalTransferFunction,
    tf_connect,
    validate_grid,
)
from .params import DObParams, OuterGains, per_sample_gain

__all__ = [
    "LoopSet",
    "PhaseCharacter",
    "CiCompensator",
    "inner_loop_ct",
    "inner_loop_dt",
    "outer_loop_ct",
    "outer_loop_dt",
    "ci_compensator_dt",
]

# Band around the lead/lag threshold classified as Neutral.
NEUTRAL_TOL = 1e-12


@dataclass(frozen=True)
class LoopSet:
    """Open loop L with its sensitivity S = 1/(1+L) and complement T = L/(1+L).

    S and T share one denominator polynomial (den_L + num_L) by construction,
    so S + T == 1 holds identically as rational functions.
    """

    L: RationalTransferFunction
    S: RationalTransferFunction
    T: RationalTransferFunction

    @classmethod
    def from_open_loop(cls, L: RationalTransferFunction) -> "LoopSet":
        if L.num.degree > L.den.degree:
            raise ValueError("open loop must be proper")
        chi = L.den + L.num
        if chi.is_zero:
            raise ValueError("degenerate loop: 1 + L vanishes identically")
        S = RationalTransferFunction(L.den, chi, ts=L.ts)
        T = RationalTransferFunction(L.num, chi, ts=L.ts)
        return cls(L, S, T)

    def eval_st(self, point: complex) -> tuple[complex, complex]:
        """Evaluate S and T jointly from the open loop.

        Both channels divide by the same once-computed value den(p)+num(p),
        which keeps S + T within a few ulp of 1 even where the summed
        characteristic polynomial is badly conditioned for Horner evaluation.
        """
        d = self.L.den(point)
        n = self.L.num(point)
        w = d + n
        scale = self.S.den.max_abs * max(1.0, abs(point)) ** self.S.den.degree
        if abs(w) <= POLE_EVAL_TOL * scale:
            raise ValueError(f"evaluation at pole: point={point!r}")
        return d / w, n / w

    def st_response(self, omega) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(omega, S values, T values) over a validated frequency grid."""
        om = validate_grid(self.L, omega)
        s_vals = np.empty(om.shape, dtype=complex)
        t_vals = np.empty(om.shape, dtype=complex)
        for i, w in enumerate(om):
            point = self.L.contour_point(w)
            try:
                s_vals[i], t_vals[i] = self.eval_st(point)
            except ValueError as exc:
                raise ValueError(f"evaluation at pole: omega={w!r} rad/s") from exc
        return om, s_vals, t_vals


def inner_loop_ct(p: DObParams) -> LoopSet:
    """Continuous inner estimation loop; g_v = inf gives the ideal-velocity form."""
    a_g = p.alpha * p.g_dob
    if math.isinf(p.g_v):
        L = RationalTransferFunction(
            Polynomial((a_g,)), Polynomial((1.0, 0.0)), ts=None
        )
    else:
        L = RationalTransferFunction(
            Polynomial((a_g * p.g_v,)), Polynomial((1.0, p.g_v, 0.0)), ts=None
        )
    return LoopSet.from_open_loop(L)


def inner_loop_dt(p: DObParams) -> LoopSet:
    """Sampled inner estimation loop, alpha*g_dob*ts/(z-1)."""
    x = per_sample_gain(p)
    L = RationalTransferFunction(
        Polynomial((x,)), Polynomial((1.0, -1.0)), ts=p.ts
    )
    return LoopSet.from_open_loop(L)


def outer_loop_ct(p: DObParams, gains: OuterGains) -> LoopSet:
    """Continuous position loop around the compensated plant."""
    s2 = Polynomial((1.0, 0.0, 0.0))
    pd = Polynomial((gains.kd, gains.kp))
    s_plus_g = Polynomial((1.0, p.g_dob))
    if math.isinf(p.g_v):
        num = p.alpha * (p.g_dob * s2 + s_plus_g * pd)
        den = Polynomial((1.0, 0.0, 0.0, 0.0))
    else:
        s_plus_gv = Polynomial((1.0, p.g_v))
        num = p.alpha * ((p.g_v * p.g_dob) * s2 + s_plus_gv * s_plus_g * pd)
        den = Polynomial((1.0, p.g_v, 0.0, 0.0, 0.0))
    L = RationalTransferFunction(num, den, ts=None)
    return LoopSet.from_open_loop(L)


class PhaseCharacter(enum.Enum):
    LEAD = "lead"
    LAG = "lag"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class CiCompensator:
    tf: RationalTransferFunction
    character: PhaseCharacter
    threshold: float


def ci_compensator_dt(p: DObParams) -> CiCompensator:
    """Inner-loop reference-channel compensator.

    C_i(z) = alpha*((1 + g_dob*ts)*z - 1) / (z - (1 - alpha*g_dob*ts)).
    Its zero leads the pole exactly when alpha exceeds 1/(1 + g_dob*ts); at
    the threshold the pair cancels and the block is a pure gain.
    """
    ts = p.require_ts()
    x = per_sample_gain(p)
    tf = RationalTransferFunction(
        Polynomial((p.alpha * (1.0 + p.g_dob * ts), -p.alpha)),
        Polynomial((1.0, -(1.0 - x))),
        ts=ts,
    )
    threshold = 1.0 / (1.0 + p.g_dob * ts)
    if abs(p.alpha - threshold) <= NEUTRAL_TOL:
        character = PhaseCharacter.NEUTRAL
    elif p.alpha > threshold:
        character = PhaseCharacter.LEAD
    else:
        character = PhaseCharacter.LAG
    return CiCompensator(tf, character, threshold)


def outer_loop_dt(p: DObParams, gains: OuterGains) -> LoopSet:
    """Sampled position loop: PD * inner compensator * ZoH double integrator."""
    ts = p.require_ts()
    c = backward_euler_pd(gains, ts)
    ci = ci_compensator_dt(p).tf
    gp = zoh_double_integrator(1.0, ts)
    L = tf_connect(tf_connect(c, ci, ConnectMode.SERIES), gp, ConnectMode.SERIES)
    return LoopSet.from_open_loop(L)
