"""Superposed boundary-layer + rarefaction reference wave and its sources.

The reference wave is the componentwise superposition

    z_hat(t, xi) = z_bar(xi) + z_tilde(t, xi) - z_m

of the stationary layer z_bar (far state z_m) and the smoothed fan z_tilde
(left state z_m), so each constituent's plateau cancels against the shared
intermediate state.  Construction is forward only: pick the right state
and the fan strength, derive z_m on the right state's isentrope, then
build the layer from z_m down to the prescribed boundary temperature.

Where one constituent sits exactly on its plateau the other is returned
bitwise instead of summed, which keeps the wave free of rounding seams:
the boundary value z_hat(t, 0) equals the layer's boundary state exactly
while the fan's constant zone covers xi = 0, and pure-layer composites
make both source terms identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary_layer import BlSetup, LayerSampler
from .errors import InvalidWaveOrdering
from .gas import GasParams, LagState
from .rarefaction import (
    RareSetup,
    isentrope_theta,
    lambda3,
    lambda3_inverse,
    sample_smooth_grid,
    sound_speed_lagrangian,
)

# Step scale of the outer centered difference in the G2 diffusion term.
SOURCE_FD_STEP = 1e-5


def v_m_from_strength(g: GasParams, z_plus: LagState, delta_r: float) -> float:
    """Specific volume whose 3-speed sits delta_r below the right state's.

    delta_r = 0 returns v_plus exactly.

    Raises:
        InvalidWaveOrdering: negative strength.
        ValueError: strength at or above the right state's 3-speed.
    """
    if delta_r < 0.0:
        raise InvalidWaveOrdering("fan strength must be nonnegative")
    if delta_r == 0.0:
        return z_plus.v
    S_r = z_plus.entropy(g)
    w_plus = float(lambda3(z_plus.v, S_r, g))
    if delta_r >= w_plus:
        raise ValueError("fan strength must stay below the right state's 3-speed")
    return float(lambda3_inverse(w_plus - delta_r, S_r, g))


def connect_zm(z_plus: LagState, v_m: float, g: GasParams) -> LagState:
    """Intermediate state at volume v_m on the right state's isentrope.

    The temperature follows the isentrope and the velocity integrates the
    3-speed between the volumes, so the pair (z_m, z_plus) always spans a
    valid 3-rarefaction.  v_m == v_plus returns z_plus itself, which lets
    zero-strength composites collapse bitwise onto the pure layer.

    Raises:
        InvalidWaveOrdering: v_m below v_plus (that jump would compress).
    """
    if v_m < z_plus.v:
        raise InvalidWaveOrdering(
            "intermediate volume below the right state: the 3-wave would compress"
        )
    if v_m == z_plus.v:
        return z_plus
    S_r = z_plus.entropy(g)
    theta_m = float(isentrope_theta(v_m, S_r, g))
    c_plus = float(sound_speed_lagrangian(z_plus.v, S_r, g))
    c_m = float(sound_speed_lagrangian(v_m, S_r, g))
    u_m = z_plus.u - (2.0 / (g.gamma - 1.0)) * (c_plus - c_m)
    return LagState(v=v_m, u=u_m, theta=theta_m)


@dataclass(frozen=True)
class CompositeWave:
    """Reference wave: layer sampler, fan setup, and the shared state.

    Attributes:
        g: gas constants.
        bl: stationary-layer sampler with far state z_m.
        rare: fan setup from z_m to the far state z_plus.
        z_m: intermediate state both constituents plateau on.
        z_minus: boundary state of the layer (velocity > 0).
        s_minus: shift speed of the moving coordinate, -u_minus/v_minus.
    """

    g: GasParams
    bl: LayerSampler
    rare: RareSetup
    z_m: LagState
    z_minus: LagState
    s_minus: float


def build_composite(
    g: GasParams,
    z_plus: LagState,
    v_m: float,
    theta_minus: float,
    eps: float,
    q: float,
) -> CompositeWave:
    """Forward construction of the composite wave.

    Derives z_m = connect_zm(z_plus, v_m), builds the fan from z_m to
    z_plus and the layer from z_m down to theta_minus.  The layer's own
    admissibility window is enforced by its sampler.

    Raises:
        InvalidWaveOrdering: the fan strength drives the intermediate
            velocity nonpositive, so no inflow layer can attach.
        InadmissibleBoundaryValue: theta_minus outside the layer window.
        ValueError: degenerate or nonexistent layer regime.
    """
    z_m = connect_zm(z_plus, v_m, g)
    if not (z_m.u > 0.0):
        raise InvalidWaveOrdering(
            "fan strength drives the intermediate velocity nonpositive"
        )
    rare = RareSetup.build(g, z_m, z_plus, eps=eps, q=q)
    bl = LayerSampler(BlSetup(g, z_m.to_euler(), theta_minus))
    return CompositeWave(
        g=g,
        bl=bl,
        rare=rare,
        z_m=z_m,
        z_minus=bl.boundary_state,
        s_minus=bl.s_minus,
    )


@dataclass(frozen=True)
class HatSample:
    """Composite state and its xi-derivatives at one point."""

    state: LagState
    dstate_dxi: tuple[float, float, float]


@dataclass(frozen=True)
class SourceSample:
    """Residual forcing of the superposed wave at one point."""

    G1: float
    G2: float


def _wave_arrays(t: float, xi: np.ndarray, wave: CompositeWave):
    """Layer, fan, and superposed field arrays at (t, xi).

    Each entry is (v, u, theta, v_xi, u_xi, theta_xi).  Points where the
    layer is clamped to its far state take the fan fields bitwise; points
    where the fan still sits in its constant zone take the layer fields
    bitwise; elsewhere the superposition is summed componentwise.
    """
    bar = wave.bl.sample(xi)
    fan = sample_smooth_grid(t, xi, wave.rare, wave.s_minus)
    at_far, const = bar[6], fan[6]
    zm = (wave.z_m.v, wave.z_m.u, wave.z_m.theta, 0.0, 0.0, 0.0)
    hat = tuple(
        np.where(at_far, f, np.where(const, b, b + f - m))
        for b, f, m in zip(bar[:6], fan[:6], zm)
    )
    return bar[:6], fan[:6], hat


def hat_state_grid(t: float, xi: np.ndarray, wave: CompositeWave):
    """Superposed state and xi-derivatives on a grid.

    Returns (v, u, theta, v_xi, u_xi, theta_xi) arrays.
    """
    if t < 0.0:
        raise ValueError("composite sampling requires t >= 0")
    xi = np.asarray(xi, dtype=float)
    if xi.size and xi.min() < 0.0:
        raise ValueError("composite sampling requires xi >= 0")
    _, _, hat = _wave_arrays(t, xi, wave)
    return hat


def hat_sample(t: float, xi: float, wave: CompositeWave) -> HatSample:
    """Superposed state and xi-derivatives at one point."""
    v, u, th, vx, ux, thx = hat_state_grid(t, np.array([xi]), wave)
    return HatSample(
        state=LagState(v=float(v[0]), u=float(u[0]), theta=float(th[0])),
        dstate_dxi=(float(vx[0]), float(ux[0]), float(thx[0])),
    )


def _pressure(R: float, fields) -> np.ndarray:
    v, _, th = fields[0], fields[1], fields[2]
    return R * th / v


def _pressure_grad(R: float, fields) -> np.ndarray:
    # p = R*theta/v  =>  p_xi = R*(theta_xi*v - theta*v_xi)/v^2
    v, th, vx, thx = fields[0], fields[2], fields[3], fields[5]
    return R * (thx * v - th * vx) / (v * v)


def _diffusion_flux_gap(t: float, xi: np.ndarray, wave: CompositeWave) -> np.ndarray:
    """theta_hat_xi / v_hat - theta_bar_xi / v_bar, analytically."""
    bar, _, hat = _wave_arrays(t, xi, wave)
    return hat[5] / hat[0] - bar[5] / bar[0]


def sources_grid(t: float, xi: np.ndarray, wave: CompositeWave):
    """Source terms (G1, G2) of the superposed wave on a grid.

    G1 is the xi-derivative of the pressure mismatch p_hat - p_bar -
    p_tilde + p_m, taken analytically.  G2 collects the pressure-work
    mismatch and the diffusion-flux mismatch; the outer derivative of the
    latter has no analytic form here and uses a centered difference with
    step 1e-5*(1+xi), one-sided second order where xi - h would leave the
    domain.
    """
    if t < 0.0:
        raise ValueError("composite sampling requires t >= 0")
    xi = np.asarray(xi, dtype=float)
    if xi.size and xi.min() < 0.0:
        raise ValueError("composite sampling requires xi >= 0")
    bar, fan, hat = _wave_arrays(t, xi, wave)
    R = wave.g.R

    g1 = _pressure_grad(R, hat) - _pressure_grad(R, bar) - _pressure_grad(R, fan)

    work = (
        _pressure(R, hat) * hat[4]
        - _pressure(R, bar) * bar[4]
        - _pressure(R, fan) * fan[4]
    )
    h = SOURCE_FD_STEP * (1.0 + xi)
    flux_rate = np.empty_like(xi)
    centered = xi - h >= 0.0
    if np.any(centered):
        xc, hc = xi[centered], h[centered]
        flux_rate[centered] = (
            _diffusion_flux_gap(t, xc + hc, wave)
            - _diffusion_flux_gap(t, xc - hc, wave)
        ) / (2.0 * hc)
    if np.any(~centered):
        xo, ho = xi[~centered], h[~centered]
        flux_rate[~centered] = (
            -3.0 * _diffusion_flux_gap(t, xo, wave)
            + 4.0 * _diffusion_flux_gap(t, xo + ho, wave)
            - _diffusion_flux_gap(t, xo + 2.0 * ho, wave)
        ) / (2.0 * ho)
    g2 = work - wave.g.kappa * flux_rate
    return g1, g2


def sources(t: float, xi: float, wave: CompositeWave) -> SourceSample:
    """Source terms at one point."""
    g1, g2 = sources_grid(t, np.array([xi]), wave)
    return SourceSample(G1=float(g1[0]), G2=float(g2[0]))
