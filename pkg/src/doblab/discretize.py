"""Continuous-to-discrete maps: exact ZoH plant, PD difference law, s->z rules."""

from __future__ import annotations

import enum
import math
from fractions import Fraction

from .lti import Polynomial, RationalTransferFunction
from .params import OuterGains

__all__ = [
    "DiscretizationRule",
    "zoh_double_integrator",
    "backward_euler_pd",
    "substitute",
]


def zoh_double_integrator(gain: float, ts: float) -> RationalTransferFunction:
    """Exact zero-order-hold discretization of gain/s^2.

    gain * (ts^2/2) * (z + 1) / (z - 1)^2; this is the step-invariant map of
    the double integrator, not an approximation.
    """
    if not (ts > 0.0 and math.isfinite(ts)):
        raise ValueError("ts must be positive")
    half = 0.5 * gain * ts * ts
    return RationalTransferFunction(
        Polynomial((half, half)), Polynomial((1.0, -2.0, 1.0)), ts=ts
    )


def backward_euler_pd(gains: OuterGains, ts: float) -> RationalTransferFunction:
    """PD law with a backward-Euler derivative: kp + kd*(z-1)/(ts*z)."""
    if not (ts > 0.0 and math.isfinite(ts)):
        raise ValueError("ts must be positive")
    if gains.kd == 0.0:
        # pure proportional; keep the removable z = 0 pole out of the form
        return RationalTransferFunction(
            Polynomial((gains.kp,)), Polynomial((1.0,)), ts=ts
        )
    kd_ts = gains.kd / ts
    return RationalTransferFunction(
        Polynomial((gains.kp + kd_ts, -kd_ts)), Polynomial((1.0, 0.0)), ts=ts
    )


class DiscretizationRule(enum.Enum):
    FORWARD_EULER = "forward_euler"
    BACKWARD_EULER = "backward_euler"
    TUSTIN = "tustin"


def _rule_fraction(rule: DiscretizationRule, ts: float):
    # s is replaced by p(z)/q(z); kept as exact rationals for the clearing
    t = Fraction(ts)
    if rule is DiscretizationRule.FORWARD_EULER:
        return (Fraction(1), Fraction(-1)), (t,)
    if rule is DiscretizationRule.BACKWARD_EULER:
        return (Fraction(1), Fraction(-1)), (t, Fraction(0))
    if rule is DiscretizationRule.TUSTIN:
        return (Fraction(2), Fraction(-2)), (t, t)
    raise ValueError(f"unknown discretization rule {rule!r}")  # pragma: no cover


def _frac_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return tuple(out)


def _frac_add(a, b):
    # coefficients are highest-degree first, so align on the right
    if len(a) < len(b):
        a, b = b, a
    shift = len(a) - len(b)
    return a[:shift] + tuple(x + y for x, y in zip(a[shift:], b))


def _compose(poly: Polynomial, p_pows, q_pows, order: int) -> Polynomial:
    # sum over terms c_k * p^k * q^(order - k) for coefficient c_k of s^k,
    # in exact rational arithmetic so the only rounding is the final cast
    acc = (Fraction(0),)
    deg = poly.degree
    for i, c in enumerate(poly.coeffs):
        k = deg - i
        if c == 0.0:
            continue
        term = _frac_mul(p_pows[k], q_pows[order - k])
        acc = _frac_add(acc, tuple(Fraction(c) * t for t in term))
    return Polynomial(tuple(float(v) for v in acc))


def substitute(
    tf_s: RationalTransferFunction, ts: float, rule: DiscretizationRule
) -> RationalTransferFunction:
    """Replace s by the rule's rational map of z and clear fractions.

    Both polynomials are multiplied through by the least common denominator
    q(z)^N with N = max(deg num, deg den).  The clearing runs in exact
    rational arithmetic and each output coefficient is rounded exactly once;
    nothing is normalized to monic, so identities like forward-Euler of
    a*g/s -> (a*g*ts)/(z-1) hold at coefficient level.
    """
    if tf_s.ts is not None:
        raise ValueError("substitute expects a continuous-time system")
    if not (ts > 0.0 and math.isfinite(ts)):
        raise ValueError("ts must be positive")
    p, q = _rule_fraction(rule, ts)
    order = max(tf_s.num.degree, tf_s.den.degree)
    p_pows = [(Fraction(1),)]
    q_pows = [(Fraction(1),)]
    for _ in range(order):
        p_pows.append(_frac_mul(p_pows[-1], p))
        q_pows.append(_frac_mul(q_pows[-1], q))
    num = _compose(tf_s.num, p_pows, q_pows, order)
    den = _compose(tf_s.den, p_pows, q_pows, order)
    if den.is_zero:
        raise ValueError("substitution produced a zero denominator")
    return RationalTransferFunction(num, den, ts=ts)
