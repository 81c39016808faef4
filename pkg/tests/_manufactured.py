"""Manufactured traveling-sine solution for solver convergence studies.

All three fields ride the same phase k*xi - omega*t; the forcing that makes
them an exact solution of the shifted system follows by differentiating
through the fluxes, and the Dirichlet override feeds the exact trace at both
ends.  Shared by the module-level order check and the acceptance study.
"""

import numpy as np

from inflow_waves.gas import GasParams, LagState
from inflow_waves.solver import Grid, SimConfig, SimState, step

L_DOMAIN = 10.0
V0, U0, TH0 = 1.0, 0.5, 1.0
AMP = 0.05
OMEGA = 1.0
SHIFT = -1.0


def _fields(g: GasParams, k: float, t: float, xi):
    ch = k * xi - OMEGA * t
    s, c = np.sin(ch), np.cos(ch)
    return V0 + AMP * s, U0 + AMP * s, TH0 + AMP * s, s, c


def build(N: int, t_end: float = 0.25, m: int = 1) -> tuple[SimState, float]:
    """Solver state primed with the exact solution, forcing, and traces."""
    g = GasParams()
    k = 2.0 * np.pi * m / L_DOMAIN
    R, cv, kap = g.R, g.cv, g.kappa

    def source(t, xi):
        v, u, th, s, c = _fields(g, k, t, xi)
        v_t, v_x = -AMP * OMEGA * c, AMP * k * c
        u_t, u_x = v_t, v_x
        th_t, th_x = v_t, v_x
        th_xx = -AMP * k * k * s
        p = R * th / v
        p_x = R * (th_x * v - th * v_x) / (v * v)
        sv = v_t - SHIFT * v_x - u_x
        su = u_t - SHIFT * u_x + p_x
        sE = (
            (cv * th_t + u * u_t)
            - SHIFT * (cv * th_x + u * u_x)
            + (p_x * u + p * u_x)
            - kap * (th_xx / v - th_x * v_x / (v * v))
        )
        return sv, su, sE

    def dirichlet(t):
        out = []
        for x in (0.0, L_DOMAIN):
            v, u, th, _, _ = _fields(g, k, t, np.asarray(x))
            out.append(LagState(float(v), float(u), float(th)))
        return out[0], out[1]

    grid = Grid(L=L_DOMAIN, N=N)
    v, u, th, _, _ = _fields(g, k, 0.0, grid.xi)
    state = SimState(
        grid=grid,
        g=g,
        t=0.0,
        v=v,
        u=u,
        theta=th,
        s_minus=SHIFT,
        bc_left=dirichlet(0.0)[0],
        far_field=dirichlet(0.0)[1],
        config=SimConfig(t_end=t_end),
        source=source,
        dirichlet=dirichlet,
    )
    return state, k


def l2_error(N: int, t_end: float = 0.25) -> float:
    """L2 gap between the computed and exact fields at t_end."""
    state, k = build(N, t_end)
    while state.config.t_end - state.t > 1e-12 * state.config.t_end:
        step(state, dt_max=state.config.t_end - state.t)
    v, u, th, _, _ = _fields(state.g, k, state.t, state.grid.xi)
    dx = state.grid.dxi
    return float(
        np.sqrt(
            np.trapezoid((state.v - v) ** 2, dx=dx)
            + np.trapezoid((state.u - u) ** 2, dx=dx)
            + np.trapezoid((state.theta - th) ** 2, dx=dx)
        )
    )
