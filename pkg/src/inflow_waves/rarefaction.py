"""Smoothed 3-rarefaction fan as a time-dependent sampler.

The fan connects a left state to a right state along the isentrope of the
right state.  Its characteristic speed field w solves a Burgers equation
whose initial data is a gamma-tail mollification of the jump, so the fan
is smooth for all times and spreads linearly.  States are recovered from w
through the isentrope: v inverts the Lagrangian 3-speed, theta follows
from the pressure law, and u integrates the Riemann invariant in closed
form.

Everything is expressed in the shifted Lagrangian coordinate xi = x - s*t
used by the solver, where s < 0 is the boundary-layer shift speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammainccinv

from .errors import EnvelopeViolated, InvalidWaveOrdering
from .fitting import linear_fit
from .gas import GasParams, LagState

# Residual tolerance of the characteristic-foot bisection, scaled by 1+|x|.
FOOT_TOL = 1e-11
FOOT_MAX_ITER = 200


def isentrope_pressure(v, S: float, g: GasParams):
    """Pressure A * v^-gamma * exp((gamma-1)*S/R) on the isentrope S."""
    return g.A * v ** (-g.gamma) * math.exp((g.gamma - 1.0) * S / g.R)


def isentrope_theta(v, S: float, g: GasParams):
    """Temperature p(v,S)*v/R on the isentrope S."""
    return isentrope_pressure(v, S, g) * v / g.R


def lambda3(v, S: float, g: GasParams):
    """Lagrangian 3-characteristic speed sqrt(gamma * p(v,S) / v).

    Strictly decreasing in v, which makes it invertible along an isentrope.
    """
    return np.sqrt(g.gamma * isentrope_pressure(v, S, g) / v)


def lambda3_inverse(w, S: float, g: GasParams):
    """Specific volume with 3-speed w on the isentrope S (inverts lambda3)."""
    coeff = g.gamma * g.A * math.exp((g.gamma - 1.0) * S / g.R)
    return (coeff / (w * w)) ** (1.0 / (g.gamma + 1.0))


def sound_speed_lagrangian(v, S: float, g: GasParams):
    """Eulerian sound speed on the isentrope, lambda3 * v."""
    return lambda3(v, S, g) * v


@dataclass(frozen=True)
class RareSetup:
    """Fan data: end states, isentrope, and smoothing parameters.

    Attributes:
        g: gas constants.
        z_minus: left state of the fan (the composite's intermediate state).
        z_plus: right state; the isentrope S_r is its entropy.
        S_r: entropy value shared by every fan state.
        delta_r: fan strength w_plus - w_minus, >= 0.  Zero strength means
            z_minus == z_plus and the fan is the constant state.
        eps: smoothing parameter in (0, 1); the initial data varies over a
            length 1/eps.
        q: gamma-tail exponent (> 16); larger q makes the data flatter at
            the left edge of the fan.
        w_minus, w_plus: 3-speeds of the end states.
    """

    g: GasParams
    z_minus: LagState
    z_plus: LagState
    S_r: float
    delta_r: float
    eps: float
    q: float
    w_minus: float
    w_plus: float

    @classmethod
    def build(
        cls, g: GasParams, z_minus: LagState, z_plus: LagState, eps: float, q: float
    ) -> "RareSetup":
        """Validate the end states and derive the fan parameters.

        The left state must sit on the 3-rarefaction curve through the
        right state: same entropy, velocity matching the Riemann-invariant
        integral, and v_minus >= v_plus so the speeds order w_minus <=
        w_plus without a shock.

        Raises:
            InvalidWaveOrdering: end states not in rarefaction order.
            ValueError: eps or q out of range, or z_minus off the curve.
        """
        if not (0.0 < eps < 1.0):
            raise ValueError("smoothing parameter eps must lie in (0, 1)")
        if not (q > 16.0):
            raise ValueError("tail exponent q must exceed 16")
        S_r = z_plus.entropy(g)
        if z_minus.v < z_plus.v:
            raise InvalidWaveOrdering(
                "left specific volume below right one: 3-wave would be a shock"
            )
        if z_minus is not z_plus and z_minus.v != z_plus.v:
            if not (z_minus.u < z_plus.u and z_minus.theta < z_plus.theta):
                raise InvalidWaveOrdering(
                    "fan requires u_minus < u_plus and theta_minus < theta_plus"
                )
        s_minus_val = z_minus.entropy(g)
        scale = max(abs(S_r), 1.0)
        if abs(s_minus_val - S_r) > 1e-10 * scale:
            raise ValueError("left state is not on the right state's isentrope")
        c_plus = sound_speed_lagrangian(z_plus.v, S_r, g)
        c_minus = sound_speed_lagrangian(z_minus.v, S_r, g)
        u_expect = z_plus.u - (2.0 / (g.gamma - 1.0)) * (c_plus - c_minus)
        if abs(z_minus.u - u_expect) > 1e-9 * max(abs(z_plus.u), 1.0):
            raise ValueError("left velocity is off the 3-rarefaction curve")
        w_minus = float(lambda3(z_minus.v, S_r, g))
        w_plus = float(lambda3(z_plus.v, S_r, g))
        if z_minus.v == z_plus.v:
            w_minus = w_plus
        return cls(
            g=g,
            z_minus=z_minus,
            z_plus=z_plus,
            S_r=S_r,
            delta_r=w_plus - w_minus,
            eps=eps,
            q=q,
            w_minus=w_minus,
            w_plus=w_plus,
        )


def fan_tail_cover(setup: RareSetup, mass_frac: float = 1e-12) -> float:
    """Data coordinate beyond which w0 is within mass_frac of w_plus."""
    return float(gammainccinv(setup.q + 1.0, mass_frac)) / setup.eps


def _data_w(x0, setup: RareSetup):
    """Initial data w0(x0): w_minus for x0 < 0, gamma-tail ramp beyond."""
    y = np.maximum(setup.eps * np.asarray(x0, dtype=float), 0.0)
    return setup.w_minus + setup.delta_r * gammainc(setup.q + 1.0, y)


def _data_derivs(x0, setup: RareSetup):
    """(w0', w0'') of the ramp; identically zero for x0 <= 0.

    w0'(x)  = delta_r * eps   * (eps x)^q     * e^(-eps x) / Gamma(q+1)
    w0''(x) = delta_r * eps^2 * (eps x)^(q-1) * e^(-eps x) * (q - eps x)
              / Gamma(q+1)

    The power, the exponential, and 1/Gamma(q+1) are combined inside a
    single exp(...) call: for large q the normalizer alone underflows and
    the power alone overflows, and only their log-space sum stays finite.
    """
    y = setup.eps * np.asarray(x0, dtype=float)
    pos = y > 0.0
    lognorm = math.lgamma(setup.q + 1.0)
    d1 = np.zeros_like(y)
    d2 = np.zeros_like(y)
    if np.any(pos):
        yp = y[pos]
        logy = np.log(yp)
        amp = setup.delta_r * setup.eps
        core = np.exp((setup.q - 1.0) * logy - yp - lognorm)
        d1[pos] = amp * np.exp(setup.q * logy - yp - lognorm)
        d2[pos] = amp * setup.eps * core * (setup.q - yp)
    return d1, d2


def _char_foot(t: float, x, setup: RareSetup):
    """Characteristic foot x0 solving x0 + w0(x0)*t = x, by bisection.

    The data is nondecreasing, so the map is strictly increasing and the
    bracket [x - w_plus*t, x - w_minus*t] always contains the root.  Each
    point freezes as soon as its own residual is within FOOT_TOL*(1+|x|),
    which keeps the result independent of how points are batched.
    """
    xa = np.asarray(x, dtype=float)
    lo = xa - setup.w_plus * t
    hi = xa - setup.w_minus * t
    tol = FOOT_TOL * (1.0 + np.abs(xa))
    mid = 0.5 * (lo + hi)
    done = np.zeros(xa.shape, dtype=bool)
    for _ in range(FOOT_MAX_ITER):
        f = mid + _data_w(mid, setup) * t - xa
        done |= np.abs(f) <= tol
        if done.all():
            break
        below = (f < 0.0) & ~done
        above = ~(f < 0.0) & ~done
        lo = np.where(below, mid, lo)
        hi = np.where(above, mid, hi)
        mid = np.where(done, mid, 0.5 * (lo + hi))
    return mid


def _burgers_arrays(t: float, x, setup: RareSetup):
    """(w, w_x, w_xx, constant-zone mask) of the Burgers solution at time t.

    t is the full similarity time (1 + physical time).  Points with
    x <= w_minus*t sit in the constant zone and return exact end values.
    """
    if t < 1.0:
        raise ValueError("Burgers sampler is defined for similarity time >= 1")
    xa = np.asarray(x, dtype=float)
    const = xa <= setup.w_minus * t
    if setup.delta_r == 0.0:
        w = np.full(xa.shape, setup.w_minus)
        zero = np.zeros(xa.shape)
        return w, zero, zero.copy(), np.ones(xa.shape, dtype=bool)
    w = np.full(xa.shape, setup.w_minus)
    w_x = np.zeros(xa.shape)
    w_xx = np.zeros(xa.shape)
    moving = ~const
    if np.any(moving):
        x0 = _char_foot(t, xa[moving], setup)
        d1, d2 = _data_derivs(x0, setup)
        jac = 1.0 + d1 * t
        w[moving] = _data_w(x0, setup)
        w_x[moving] = d1 / jac
        w_xx[moving] = d2 / jac**3
    return w, w_x, w_xx, const


def burgers_w(t: float, x, setup: RareSetup):
    """Burgers solution w and its x-derivative at similarity time t >= 1.

    Solves w(t,x) = w0(x0) along straight characteristics x = x0 + w0(x0)*t
    by monotone bisection; w_x = w0'(x0)/(1 + w0'(x0)*t).  The data is
    nondecreasing so no shock ever forms.
    """
    w, w_x, _, _ = _burgers_arrays(t, x, setup)
    if isinstance(x, np.ndarray):
        return w, w_x
    return float(w), float(w_x)


@dataclass(frozen=True)
class SmoothWaveSample:
    """Fan state, its xi-derivatives, and the constant-zone flag."""

    state: LagState
    dstate_dxi: tuple[float, float, float]
    in_constant_zone: bool


def _fan_state_arrays(t: float, xi, setup: RareSetup, s_minus: float):
    """Vectorized fan sampling in the shifted coordinate.

    Returns (v, u, theta, v_xi, u_xi, theta_xi, constant-zone mask).
    Constant-zone entries carry the left state bitwise with zero
    derivatives; u comes from the closed-form Riemann-invariant integral
    u_plus - (2/(gamma-1)) * (c_plus - w*v).
    """
    g = setup.g
    xia = np.asarray(xi, dtype=float)
    x = xia + s_minus * t
    w, w_x, _, const = _burgers_arrays(1.0 + t, x, setup)

    v = np.full(xia.shape, setup.z_minus.v)
    u = np.full(xia.shape, setup.z_minus.u)
    theta = np.full(xia.shape, setup.z_minus.theta)
    v_xi = np.zeros(xia.shape)
    u_xi = np.zeros(xia.shape)
    th_xi = np.zeros(xia.shape)

    fan = ~const
    if np.any(fan):
        wf = w[fan]
        vf = lambda3_inverse(wf, setup.S_r, g)
        thf = isentrope_theta(vf, setup.S_r, g)
        c_plus = sound_speed_lagrangian(setup.z_plus.v, setup.S_r, g)
        uf = setup.z_plus.u - (2.0 / (g.gamma - 1.0)) * (c_plus - wf * vf)
        dv = -(2.0 / (g.gamma + 1.0)) * vf / wf * w_x[fan]
        v[fan] = vf
        u[fan] = uf
        theta[fan] = thf
        v_xi[fan] = dv
        u_xi[fan] = -wf * dv
        th_xi[fan] = (1.0 - g.gamma) * thf / vf * dv
    return v, u, theta, v_xi, u_xi, th_xi, const


def sample_smooth(
    t: float, xi: float, setup: RareSetup, s_minus: float
) -> SmoothWaveSample:
    """Fan state and xi-derivatives at one point of the shifted coordinate.

    The underlying space point is x = xi + s_minus*t and the Burgers field
    is evaluated at similarity time 1 + t.  Inside the constant zone
    (xi + s_minus*t <= w_minus*(1+t)) the left state is returned bitwise
    with zero derivatives.
    """
    if t < 0.0:
        raise ValueError("fan sampling requires t >= 0")
    arr = np.array([xi], dtype=float)
    v, u, th, vx, ux, tx, const = _fan_state_arrays(t, arr, setup, s_minus)
    if const[0]:
        return SmoothWaveSample(setup.z_minus, (0.0, 0.0, 0.0), True)
    return SmoothWaveSample(
        LagState(v=float(v[0]), u=float(u[0]), theta=float(th[0])),
        (float(vx[0]), float(ux[0]), float(tx[0])),
        False,
    )


def sample_smooth_grid(t: float, xi: np.ndarray, setup: RareSetup, s_minus: float):
    """Vectorized sample_smooth over a grid of shifted coordinates.

    Returns (v, u, theta, v_xi, u_xi, theta_xi, in_constant_zone).
    """
    if t < 0.0:
        raise ValueError("fan sampling requires t >= 0")
    return _fan_state_arrays(t, xi, setup, s_minus)


# ------------------------------------------------------------------ bounds


def _derivative_norms(t: float, setup: RareSetup, n_param: int = 3000):
    """L1, L2, Linf in xi of the first-derivative magnitude at time t.

    Parametrized by the data coordinate: with jac = 1 + w0'*t_full, a
    derivative in x is the data-space one over jac, and dx = jac dx0, so
    norms integrate in x0 with weight jac.  Also returns the L1 norm of
    the second-derivative magnitude.
    """
    g = setup.g
    if setup.delta_r == 0.0:
        return 0.0, 0.0, 0.0, 0.0
    t_full = 1.0 + t
    y = np.linspace(0.0, gammainccinv(setup.q + 1.0, 1e-13), n_param)
    x0 = y / setup.eps
    d1, d2 = _data_derivs(x0, setup)
    jac = 1.0 + d1 * t_full
    w = _data_w(x0, setup)
    w_x = d1 / jac
    w_xx = d2 / jac**3

    v = lambda3_inverse(w, setup.S_r, g)
    theta = isentrope_theta(v, setup.S_r, g)
    a = 2.0 / (g.gamma + 1.0)
    b = 2.0 * (g.gamma - 1.0) / (g.gamma + 1.0)
    dv, du, dth = -a * v / w, a * v, b * theta / w
    d2v = a * (a + 1.0) * v / w**2
    d2u = -a * a * v / w
    d2th = b * (b - 1.0) * theta / w**2

    first = np.sqrt((dv * w_x) ** 2 + (du * w_x) ** 2 + (dth * w_x) ** 2)
    second = np.sqrt(
        (d2v * w_x**2 + dv * w_xx) ** 2
        + (d2u * w_x**2 + du * w_xx) ** 2
        + (d2th * w_x**2 + dth * w_xx) ** 2
    )
    l1 = float(np.trapezoid(first * jac, x0))
    l2 = float(math.sqrt(np.trapezoid(first**2 * jac, x0)))
    linf = float(first.max())
    l1_second = float(np.trapezoid(second * jac, x0))
    return l1, l2, linf, l1_second


def first_derivative_linf(
    t: float, setup: RareSetup, component: str = "all", n_param: int = 3000
) -> float:
    """Sup over xi of a fan first-derivative component at time t.

    component picks "v", "u", "theta", or "all" for the Euclidean
    magnitude of the triple.  Evaluated in the data parametrization, which
    covers the whole fan regardless of the shift.
    """
    if component not in ("v", "u", "theta", "all"):
        raise ValueError(f"unknown component {component!r}")
    if setup.delta_r == 0.0:
        return 0.0
    g = setup.g
    t_full = 1.0 + t
    y = np.linspace(0.0, gammainccinv(setup.q + 1.0, 1e-13), n_param)
    x0 = y / setup.eps
    d1, _ = _data_derivs(x0, setup)
    w_x = d1 / (1.0 + d1 * t_full)
    w = _data_w(x0, setup)
    v = lambda3_inverse(w, setup.S_r, g)
    a = 2.0 / (g.gamma + 1.0)
    if component == "v":
        field = np.abs(a * v / w * w_x)
    elif component == "u":
        field = np.abs(a * v * w_x)
    else:
        theta = isentrope_theta(v, setup.S_r, g)
        b = 2.0 * (g.gamma - 1.0) / (g.gamma + 1.0)
        if component == "theta":
            field = np.abs(b * theta / w * w_x)
        else:
            field = np.sqrt(
                (a * v / w * w_x) ** 2 + (a * v * w_x) ** 2 + (b * theta / w * w_x) ** 2
            )
    return float(field.max())


def _envelope(p: float, t: float, setup: RareSetup) -> float:
    """min{delta_r * eps^(1-1/p), delta_r^(1/p) * (1+t)^(-1+1/p)}."""
    d, e = setup.delta_r, setup.eps
    return min(d * e ** (1.0 - 1.0 / p), d ** (1.0 / p) * (1.0 + t) ** (-1.0 + 1.0 / p))


@dataclass(frozen=True)
class BoundsReport:
    """Fitted envelope constants for the fan derivative norms.

    fitted_constants maps "L1"/"L2"/"Linf" to the median ratio of the
    measured norm to its envelope over the sampled times; max_ratio holds
    the worst ratio.  second_deriv_l1_exponent is the fitted late-time
    power of the second-derivative L1 norm in 1+t (None for a fan of zero
    strength), which tends to -1 + 1/q.
    """

    horizon: float
    n_times: int
    fitted_constants: dict[str, float]
    max_ratio: dict[str, float]
    second_deriv_l1_exponent: float | None


def check_lemma22_bounds(setup: RareSetup, horizon: float) -> BoundsReport:
    """Measure fan derivative norms against their decay envelopes.

    For p in {1, 2, inf}, the L^p norm in xi of the first-derivative
    magnitude must stay under a constant times
    min{delta_r*eps^(1-1/p), delta_r^(1/p)*(1+t)^(-1+1/p)} for t in
    [0, horizon].  The constant is fitted as the median measured/envelope
    ratio.

    Raises:
        EnvelopeViolated: some time's ratio exceeds ten times the fitted
            constant, meaning the envelope shape does not hold.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    if setup.delta_r == 0.0:
        zeros = {"L1": 0.0, "L2": 0.0, "Linf": 0.0}
        return BoundsReport(horizon, 0, zeros, dict(zeros), None)

    times = np.expm1(np.linspace(0.0, math.log1p(horizon), 33))
    norms = {"L1": [], "L2": [], "Linf": []}
    second_l1 = []
    for t in times:
        l1, l2, linf, l1s = _derivative_norms(float(t), setup)
        norms["L1"].append(l1)
        norms["L2"].append(l2)
        norms["Linf"].append(linf)
        second_l1.append(l1s)

    p_of = {"L1": 1.0, "L2": 2.0, "Linf": math.inf}
    fitted: dict[str, float] = {}
    worst: dict[str, float] = {}
    for key, series in norms.items():
        ratios = np.array(
            [val / _envelope(p_of[key], float(t), setup) for val, t in zip(series, times)]
        )
        fitted[key] = float(np.median(ratios))
        worst[key] = float(ratios.max())
        if worst[key] > 10.0 * fitted[key]:
            at = float(times[int(np.argmax(ratios))])
            raise EnvelopeViolated(
                f"{key} norm at t={at:g} exceeds 10x the fitted envelope constant"
            )

    # Late-time power of the second-derivative L1 norm, fitted over the
    # final decade of the sampled window.
    late = times >= horizon / 10.0
    exponent = None
    if np.count_nonzero(late) >= 4:
        slope, _, _ = linear_fit(
            np.log1p(times[late]), np.log(np.array(second_l1)[late])
        )
        exponent = float(slope)
    return BoundsReport(horizon, len(times), fitted, worst, exponent)


def linf_decay_exponent(
    setup: RareSetup,
    t_lo: float,
    t_hi: float,
    n_times: int = 25,
    component: str = "all",
) -> float:
    """Fitted power of a first-derivative Linf norm in 1+t over a window.

    Log-log least squares of the norm against 1+t at log-spaced times in
    [t_lo, t_hi]; component as in first_derivative_linf.  In the genuinely
    spread regime (t well past 1/(delta_r*eps)) this tends to -1; before
    the data's small slope has sharpened, the norm is still nearly flat.
    """
    if not (0.0 <= t_lo < t_hi):
        raise ValueError("need 0 <= t_lo < t_hi")
    times = np.expm1(np.linspace(math.log1p(t_lo), math.log1p(t_hi), n_times))
    vals = np.array(
        [first_derivative_linf(float(t), setup, component) for t in times]
    )
    slope, _, _ = linear_fit(np.log1p(times), np.log(vals))
    return float(slope)
