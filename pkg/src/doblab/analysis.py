"""Frequency-domain analysis: peaks, sensitivity integrals, design constraints.

The sensitivity integral is evaluated by honest quadrature rather than by the
residue bookkeeping that proves the underlying theorem, so the reported value
and the theorem's prediction stay independent of each other.  Log-magnitudes
are computed from root factorizations (sum of ln|p - r_i| terms): evaluating
the expanded characteristic polynomial by Horner loses every significant
digit near contour zeros, while the factored form keeps the absolute error
near machine precision everywhere on the contour.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .lti import (
    RationalTransferFunction,
    Stability,
    classify_roots,
    is_stable,
    poly_roots,
)
from .loops import LoopSet, outer_loop_ct
from .params import DObParams, OuterGains, per_sample_gain

__all__ = [
    "PeakSpec",
    "ConstraintReport",
    "BodeIntegralReport",
    "RootLocusRow",
    "RootLocusTable",
    "OuterGainAudit",
    "sensitivity_peak",
    "bode_integral",
    "check_constraints",
    "max_bandwidth",
    "root_locus",
    "critical_parameter",
    "audit_outer_gain_condition",
    "nyquist_s_magnitude",
    "nyquist_t_magnitude",
]

# Peak search ties within this relative band resolve to the Nyquist endpoint
# (any maximizer of an exactly flat magnitude is equally valid).
PEAK_TIE_RTOL = 1e-12

# A root this close to the frequency contour is treated as sitting on it.
CONTOUR_TOL = 1e-7

# Analytic log-singularity pads shrink until their model integral is smaller
# than this.
PAD_BUDGET = 1e-6

# Total quadrature error above this raises instead of returning a value.
QUAD_ERROR_CEILING = 1e-4


# ---------------------------------------------------------------------------
# peak search


def _golden_max(f: Callable[[float], float], a: float, b: float, iters: int = 90):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    best_x, best_f = (x1, f1) if f1 >= f2 else (x2, f2)
    for _ in range(iters):
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        if f1 > best_f:
            best_x, best_f = x1, f1
        if f2 > best_f:
            best_x, best_f = x2, f2
        if b - a <= 1e-15 * max(1.0, abs(a), abs(b)):
            break
    return best_x, best_f


def sensitivity_peak(
    tf: RationalTransferFunction, grid_points: int = 4096
) -> tuple[float, float]:
    """Worst-case magnitude over frequency and where it occurs.

    A dense grid (including the exact Nyquist endpoint for sampled systems)
    brackets the maximum and golden-section refines it.  Ties within
    PEAK_TIE_RTOL resolve to the Nyquist endpoint so the exactly flat case
    reports the conventional frequency.  Requires a strictly stable system.
    """
    verdict = is_stable(tf)
    if verdict.stability is not Stability.STABLE:
        kind = (
            "unstable"
            if verdict.stability is Stability.UNSTABLE
            else "marginally stable"
        )
        raise ValueError(f"peak undefined for {kind} system")

    def mag(w: float) -> float:
        return abs(tf.at_frequency(w))

    if tf.is_discrete:
        nyq = tf.nyquist
        om = np.linspace(0.0, nyq, grid_points)
        mags = np.array([mag(w) for w in om])
        i = int(np.argmax(mags))
        lo = om[max(i - 1, 0)]
        hi = om[min(i + 1, len(om) - 1)]
        w_ref, m_ref = _golden_max(mag, lo, hi)
        candidates = [(nyq, mags[-1]), (om[i], mags[i]), (w_ref, m_ref)]
        w_best, m_best = max(candidates, key=lambda c: c[1])
        if mags[-1] >= m_best - PEAK_TIE_RTOL * max(m_best, 1e-300):
            return nyq, float(mags[-1])
        return float(w_best), float(m_best)

    root_mags = [abs(r) for r in (*tf.zeros(), *tf.poles()) if abs(r) > 0.0]
    lo = min(root_mags) / 1e3 if root_mags else 1e-3
    hi = max(root_mags) * 1e3 if root_mags else 1e3
    om = np.logspace(math.log10(lo), math.log10(hi), grid_points)
    mags = np.array([mag(w) for w in om])
    i = int(np.argmax(mags))
    w_ref, m_ref = _golden_max(mag, om[max(i - 1, 0)], om[min(i + 1, len(om) - 1)])
    candidates = [(float(om[i]), float(mags[i])), (float(w_ref), float(m_ref))]
    try:
        candidates.append((0.0, mag(0.0)))
    except ValueError:
        pass
    if tf.num.degree == tf.den.degree:
        asym = abs(tf.num.lead / tf.den.lead)
        w_best, m_best = max(candidates, key=lambda c: c[1])
        if asym > m_best:
            return math.inf, asym
        return w_best, m_best
    return max(candidates, key=lambda c: c[1])


def nyquist_s_magnitude(gain_product: float) -> float:
    """|S| of the sampled inner loop evaluated exactly at the Nyquist point."""
    return 2.0 / abs(gain_product - 2.0)


def nyquist_t_magnitude(gain_product: float) -> float:
    """|T| of the sampled inner loop evaluated exactly at the Nyquist point."""
    return gain_product / abs(gain_product - 2.0)


# ---------------------------------------------------------------------------
# sensitivity integral


def _quad(f, a: float, b: float):
    out = quad(f, a, b, epsabs=1e-10, epsrel=1e-10, limit=200, full_output=1)
    return out[0], out[1]


def _factored_log_mag(lead_log: float, plus_roots, minus_roots, point_of):
    def f(x: float) -> float:
        pt = point_of(x)
        acc = lead_log
        for r in plus_roots:
            d = abs(pt - r)
            acc += math.log(d if d > 1e-300 else 1e-300)
        for r in minus_roots:
            d = abs(pt - r)
            acc -= math.log(d if d > 1e-300 else 1e-300)
        return acc

    return f


def _cluster_singular(points: list[tuple[float, int]], ctol: float):
    """Merge (position, signed count) pairs into (position, net multiplicity)."""
    if not points:
        return []
    points = sorted(points)
    clusters = []
    start, total, members = points[0][0], points[0][1], [points[0][0]]
    for pos, sign in points[1:]:
        if pos - start <= ctol * max(1.0, abs(start)):
            total += sign
            members.append(pos)
        else:
            if total != 0:
                clusters.append((sum(members) / len(members), total))
            start, total, members = pos, sign, [pos]
    if total != 0:
        clusters.append((sum(members) / len(members), total))
    return clusters


def _pad_side(f, x0: float, mu: float, other: float):
    """Integrate f over the directed interval from x0 (singular) to other.

    Near x0 the integrand behaves as mu*ln|x - x0| + c.  The numeric part
    stays a pad away from x0; the pad halves geometrically until the local
    model contributes less than PAD_BUDGET, which is then added analytically.
    """
    sgn = 1.0 if other > x0 else -1.0
    span = abs(other - x0)
    h = span * 0.25
    lo, hi = sorted((x0 + sgn * h, other))
    total, err = _quad(f, lo, hi)
    for _ in range(80):
        c = f(x0 + sgn * h) - mu * math.log(h)
        tail = mu * (h * math.log(h) - h) + c * h
        if abs(tail) <= PAD_BUDGET or h <= 1e-14 * max(1.0, span):
            total += tail
            err += 0.5 * abs(tail) + 1e-9
            break
        lo, hi = sorted((x0 + sgn * (h / 2.0), x0 + sgn * h))
        v, e = _quad(f, lo, hi)
        total += v
        err += e
        h /= 2.0
    return total, err


def _integrate_log_mag(f, a: float, b: float, singular, features):
    """Piecewise adaptive integral of f over [a, b] with log singularities.

    singular: (position, mu) pairs where f ~ mu*ln|x - pos|; features: plain
    split points that help the adaptive rule (resonance and corner spots).
    """
    sing = sorted((x, m) for x, m in singular if a <= x <= b)
    cuts = {a, b}
    for x, _ in sing:
        cuts.add(x)
    for x in features:
        if a < x < b and all(abs(x - s) > 1e-9 * max(1.0, abs(s)) for s, _ in sing):
            cuts.add(x)
    pts = sorted(cuts)
    mu_at = {}
    for x, m in sing:
        mu_at[x] = mu_at.get(x, 0.0) + m
    total = 0.0
    err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            continue
        mu_lo = mu_at.get(lo)
        mu_hi = mu_at.get(hi)
        if mu_lo is None and mu_hi is None:
            v, e = _quad(f, lo, hi)
        elif mu_lo is not None and mu_hi is None:
            v, e = _pad_side(f, lo, mu_lo, hi)
        elif mu_lo is None and mu_hi is not None:
            v, e = _pad_side(f, hi, mu_hi, lo)
        else:
            mid = 0.5 * (lo + hi)
            v1, e1 = _pad_side(f, lo, mu_lo, mid)
            v2, e2 = _pad_side(f, hi, mu_hi, mid)
            v, e = v1 + v2, e1 + e2
        total += v
        err += e
    return total, err


@dataclass(frozen=True)
class BodeIntegralReport:
    """Computed sensitivity integral next to its theorem prediction.

    value             the quadrature result
    rhp_pole_sum      continuous: sum of real parts of unstable open-loop
                      poles; discrete: sum of log-magnitudes of open-loop
                      poles outside the unit circle
    limit_term        continuous: lim s*L(s); discrete: ln|1 + L(inf)|
    predicted         pi*rhp_pole_sum - (pi/2)*limit_term  (continuous)
                      2*pi*(rhp_pole_sum - limit_term)     (discrete)
    quadrature_error  accumulated error estimate of the numeric integral
    """

    value: float
    rhp_pole_sum: float
    limit_term: float
    predicted: float
    quadrature_error: float


def _bode_integral_dt(loop: RationalTransferFunction) -> BodeIntegralReport:
    chi = loop.den + loop.num
    if chi.is_zero:
        raise ValueError("degenerate loop: 1 + L vanishes identically")
    num_roots = poly_roots(loop.den) if loop.den.degree >= 1 else ()
    den_roots = poly_roots(chi) if chi.degree >= 1 else ()
    lead_log = math.log(abs(loop.den.lead / chi.lead))

    f = _factored_log_mag(
        lead_log, num_roots, den_roots, lambda th: cmath.exp(1j * th)
    )

    def on_circle(roots, sign):
        out = []
        for r in roots:
            if abs(abs(r) - 1.0) <= CONTOUR_TOL:
                ph = cmath.phase(r)
                if ph >= -1e-6:  # lower-half partners are covered by symmetry
                    out.append((min(max(ph, 0.0), math.pi), sign))
        return out

    singular = _cluster_singular(
        on_circle(num_roots, +1) + on_circle(den_roots, -1), 1e-6
    )
    features = sorted(
        {abs(cmath.phase(r)) for r in (*num_roots, *den_roots)}
    )
    half, err = _integrate_log_mag(f, 0.0, math.pi, singular, features)
    # the integrand is even in theta, so the full-circle integral is twice
    # the half-range one; the result is reported in omega*ts units
    value = 2.0 * half
    err *= 2.0
    if err > QUAD_ERROR_CEILING:
        raise RuntimeError(f"quadrature did not converge: achieved +-{err:.3g}")

    rhp = sum(
        math.log(abs(r)) for r in num_roots if abs(r) > 1.0 + CONTOUR_TOL
    )
    l_inf = loop.num.lead / loop.den.lead if loop.num.degree == loop.den.degree else 0.0
    mag = abs(1.0 + l_inf)
    if mag <= 1e-300:
        raise ValueError("limit term undefined: 1 + L(inf) vanishes")
    limit_term = math.log(mag)
    predicted = 2.0 * math.pi * (rhp - limit_term)
    return BodeIntegralReport(value, rhp, limit_term, predicted, err)


def _bode_integral_ct(loop: RationalTransferFunction) -> BodeIntegralReport:
    rel_deg = loop.den.degree - loop.num.degree
    if rel_deg < 1:
        raise ValueError(
            "integral diverges: continuous loop must have relative degree >= 1"
        )
    chi = loop.den + loop.num
    num_roots = poly_roots(loop.den) if loop.den.degree >= 1 else ()
    den_roots = poly_roots(chi) if chi.degree >= 1 else ()
    # S is biproper with unit high-frequency gain here (chi shares the
    # leading coefficient of den when rel_deg >= 1)
    lead_log = math.log(abs(loop.den.lead / chi.lead))
    f = _factored_log_mag(lead_log, num_roots, den_roots, lambda w: 1j * w)

    scale = max([1.0] + [abs(r) for r in (*num_roots, *den_roots)])
    cutoff = 1e4 * scale

    def on_axis(roots, sign):
        out = []
        for r in roots:
            if abs(r.real) <= CONTOUR_TOL * max(1.0, abs(r)):
                if r.imag >= -CONTOUR_TOL * max(1.0, abs(r)):
                    out.append((max(r.imag, 0.0), sign))
        return out

    singular = _cluster_singular(
        on_axis(num_roots, +1) + on_axis(den_roots, -1), 1e-6
    )
    features = sorted(
        {abs(r.imag) for r in (*num_roots, *den_roots)}
        | {abs(r) for r in (*num_roots, *den_roots)}
    )
    body, err = _integrate_log_mag(f, 0.0, cutoff, singular, features)

    # Beyond the cutoff ln|S| ~ A/w^2 + B/w^4 (odd powers are imaginary for
    # real coefficients); fit the two constants at w and 2w and integrate the
    # model to infinity.
    f1 = f(cutoff)
    f2 = f(2.0 * cutoff)
    a_fit = cutoff * cutoff * (16.0 * f2 - f1) / 3.0
    b_fit = (f1 - a_fit / (cutoff * cutoff)) * cutoff ** 4
    tail = a_fit / cutoff + b_fit / (3.0 * cutoff ** 3)
    err += abs(b_fit) / (3.0 * cutoff ** 3) + 1e-10
    value = body + tail
    if err > QUAD_ERROR_CEILING:
        raise RuntimeError(f"quadrature did not converge: achieved +-{err:.3g}")

    rhp = sum(
        r.real
        for r in num_roots
        if r.real > CONTOUR_TOL * max(1.0, abs(r))
    )
    limit_term = loop.num.lead / loop.den.lead if rel_deg == 1 else 0.0
    predicted = math.pi * rhp - 0.5 * math.pi * limit_term
    return BodeIntegralReport(value, rhp, limit_term, predicted, err)


def bode_integral(loop: RationalTransferFunction) -> BodeIntegralReport:
    """Numeric integral of ln|S| for the open loop, with theorem prediction.

    Continuous: integral of ln|S(j*omega)| over omega in [0, inf), split into
    segmented adaptive quadrature up to a cutoff plus an analytic asymptotic
    tail.  Discrete: integral of ln|S(exp(j*omega*ts))| d(omega*ts) over the
    full circle, reduced to [0, pi] by symmetry.  Contour zeros of S produce
    integrable log singularities handled by shrinking analytic pads.
    """
    if loop.is_discrete:
        return _bode_integral_dt(loop)
    return _bode_integral_ct(loop)


# ---------------------------------------------------------------------------
# design constraints


@dataclass(frozen=True)
class PeakSpec:
    """Admissible sensitivity/complementary peak budgets, each in (0, 1)."""

    gamma_s: float
    gamma_t: float

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma_s < 1.0:
            raise ValueError("gamma_s must lie strictly inside (0, 1)")
        if not 0.0 < self.gamma_t < 1.0:
            raise ValueError("gamma_t must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class ConstraintReport:
    """Pass/fail of the sampled-design constraints with signed margins.

    Margins are boundary minus value, so positive means satisfied.  Marginal
    cases sit at zero and count as violations for the strict inequalities.
    outer_gain_ok is the printed continuous outer-loop gain inequality; it is
    None when no PD gains were supplied.
    """

    inner_stable: bool
    no_ringing: bool
    s_peak_ok: bool
    t_peak_ok: bool
    outer_gain_ok: bool | None
    margins: dict[str, float]


def check_constraints(
    p: DObParams, gains: OuterGains | None, spec: PeakSpec
) -> ConstraintReport:
    x = per_sample_gain(p)
    b_s = 2.0 * (1.0 - spec.gamma_s)
    b_t = 2.0 / (1.0 + spec.gamma_t)
    margins = {
        "inner": 2.0 - x,
        "ringing": 1.0 - x,
        "s_peak": b_s - x,
        "t_peak": b_t - x,
    }
    outer_gain_ok: bool | None = None
    if gains is not None:
        rhs = 1.0 + p.g_dob * (
            gains.kd / gains.kp
            + gains.kd / p.g_dob
            + gains.kd * gains.kd / gains.kp
        )
        margins["outer_gain"] = rhs - 1.0 / p.alpha
        outer_gain_ok = 1.0 / p.alpha < rhs
    return ConstraintReport(
        inner_stable=x < 2.0,
        no_ringing=x <= 1.0,
        s_peak_ok=x <= b_s,
        t_peak_ok=x <= b_t,
        outer_gain_ok=outer_gain_ok,
        margins=margins,
    )


def max_bandwidth(alpha: float, ts: float, spec: PeakSpec) -> float:
    """Largest estimator bandwidth meeting both peak budgets."""
    if not alpha > 0.0:
        raise ValueError("alpha must be positive")
    if not ts > 0.0:
        raise ValueError("ts must be positive")
    bound = min(2.0 * (1.0 - spec.gamma_s), 2.0 / (1.0 + spec.gamma_t))
    return bound / (alpha * ts)


@dataclass(frozen=True)
class OuterGainAudit:
    """Printed analytic outer-loop gain inequality vs root-based truth."""

    predicate_ok: bool
    margin: float
    root_stable: bool
    agree: bool


def audit_outer_gain_condition(p: DObParams, gains: OuterGains) -> OuterGainAudit:
    rhs = 1.0 + p.g_dob * (
        gains.kd / gains.kp
        + gains.kd / p.g_dob
        + gains.kd * gains.kd / gains.kp
    )
    predicate_ok = 1.0 / p.alpha < rhs
    loop = outer_loop_ct(p, gains)
    root_stable = is_stable(loop.S).is_stable
    return OuterGainAudit(
        predicate_ok=predicate_ok,
        margin=rhs - 1.0 / p.alpha,
        root_stable=root_stable,
        agree=predicate_ok == root_stable,
    )


# ---------------------------------------------------------------------------
# parameter sweeps


@dataclass(frozen=True)
class RootLocusRow:
    param: float
    roots: tuple[complex, ...]
    stable: bool


@dataclass(frozen=True)
class RootLocusTable:
    rows: tuple[RootLocusRow, ...]

    def __iter__(self):
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def flip_count(self) -> int:
        """Number of stability transitions along the sweep order."""
        flags = [row.stable for row in self.rows]
        return sum(1 for a, b in zip(flags[:-1], flags[1:]) if a != b)


def _locus_point(
    build_loop: Callable[[float], LoopSet], value: float
) -> RootLocusRow:
    try:
        loops = build_loop(value)
        chi = loops.S.den
        roots = poly_roots(chi)
        verdict = classify_roots(roots, loops.L.ts)
    except ValueError as exc:
        raise ValueError(f"root locus failed at parameter {value!r}: {exc}") from exc
    return RootLocusRow(param=value, roots=roots, stable=verdict.is_stable)


def root_locus(
    build_loop: Callable[[float], LoopSet],
    values: Sequence[float],
    workers: int = 1,
) -> RootLocusTable:
    """Closed-loop roots of 1 + L = 0 for each swept parameter value.

    build_loop maps the swept value to its LoopSet; the closed-loop roots are
    those of the shared S/T denominator.  Points are independent, so
    workers > 1 evaluates them concurrently; results are merged back in
    parameter order and are bitwise identical to a sequential run.
    """
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("root locus needs at least one parameter value")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda v: _locus_point(build_loop, v), vals))
    else:
        rows = [_locus_point(build_loop, v) for v in vals]
    return RootLocusTable(tuple(rows))


def critical_parameter(
    build_loop: Callable[[float], LoopSet],
    lo: float,
    hi: float,
) -> float:
    """Bisect the stability boundary between two parameter values.

    The endpoints must give opposite closed-loop verdicts; the bracket is
    shrunk to a relative width of 1e-6 and its midpoint returned.
    """
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")

    def stable_at(v: float) -> bool:
        loops = build_loop(v)
        roots = poly_roots(loops.S.den)
        return classify_roots(roots, loops.L.ts).is_stable

    s_lo = stable_at(lo)
    if s_lo == stable_at(hi):
        raise ValueError("bracket endpoints give the same stability verdict")
    while hi - lo > 1e-6 * max(abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if stable_at(mid) == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
