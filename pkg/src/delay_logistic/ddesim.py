"""Numerical integration of the delay system and its ODE reductions.

The primary simulator is the two-component form with one discrete delay,

    x'(t) = -r x(t) y(t),      y'(t) = x(t) - x(t-1),

with y(0) = integral_0^1 phi(-s) ds - 1 computed from the history by
composite Simpson.  Integration is fixed-step classical Runge-Kutta with the
step an exact divisor of the delay, so the delayed argument at stage times
always falls on a node or an interval midpoint of already-computed history;
dense output is cubic Hermite on (x, x') node pairs with x' re-evaluated
from the right-hand side.

Also provided: the four-component ODE system generating the periodic
solution, the reduced two-component ODE (x' = -r x y, y' = x - ab/x), and
the temporary-immunity SIRS model whose rescaled infective fraction
approaches the delay equation as gamma*tau grows.

All integrators accept scalar initial data or a batch: a history returning
an array of shape (m,) integrates m independent copies in lockstep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .orbit import OrbitParams

__all__ = [
    "PositivityLossError",
    "Trajectory",
    "integrate_dde",
    "integrate_four_dim",
    "integrate_reduced",
    "orbit_trajectory",
    "window_integral",
    "SirsParams",
    "SirsTrajectory",
    "endemic_equilibrium",
    "integrate_sirs",
    "sirs_limit_distance",
]

_BLOWUP = 1e12


class PositivityLossError(RuntimeError):
    """A state component left the positive (or bounded) region.

    Signals blow-up or a step too coarse for the growth rate; solutions of
    the model from positive data stay positive.
    """


def _composite_simpson(vals: np.ndarray, h: float) -> Union[float, np.ndarray]:
    """Composite Simpson over uniformly spaced samples (first axis).

    An odd interval count is handled with a closing 3/8 panel.
    """
    n = vals.shape[0] - 1
    if n < 4:
        raise ValueError("need at least 4 intervals for Simpson")
    if n % 2 == 1:
        head = _composite_simpson(vals[: n - 2], h) if n > 3 else 0.0
        tail = (
            3.0 * h / 8.0 * (vals[n - 3] + 3.0 * vals[n - 2] + 3.0 * vals[n - 1] + vals[n])
        )
        return head + tail
    acc = vals[0] + vals[-1] + 4.0 * vals[1:-1:2].sum(axis=0) + 2.0 * vals[2:-2:2].sum(axis=0)
    return acc * (h / 3.0)


@dataclass
class Trajectory:
    """Node samples (t, x, y) plus the data for cubic-Hermite dense output.

    ``x_at`` is defined on [history_start, t[-1]]: node-exact on the grid,
    cubic Hermite between nodes, and delegated to the stored history callable
    left of t[0].
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    xdot: np.ndarray
    step: float
    method: str = "rk4/hermite-dense"
    history: Optional[Callable] = None
    history_start: float = field(default=0.0)

    def __post_init__(self) -> None:
        if self.history is None:
            self.history_start = float(self.t[0])

    def x_at(self, tq):
        """Dense evaluation of x at scalar or array times."""
        tq_arr = np.asarray(tq, dtype=float)
        scalar = tq_arr.ndim == 0
        pts = np.atleast_1d(tq_arr)
        t0 = float(self.t[0])
        tiny = 1e-9 * self.step
        if np.any(pts < self.history_start - tiny) or np.any(pts > self.t[-1] + tiny):
            raise ValueError("query time outside trajectory+history coverage")
        n = self.t.shape[0] - 1
        s = np.clip((pts - t0) / self.step, 0.0, n)
        j = np.minimum(s.astype(int), n - 1)
        th = s - j
        h00 = (2.0 * th - 3.0) * th * th + 1.0
        h10 = ((th - 2.0) * th + 1.0) * th
        h01 = (3.0 - 2.0 * th) * th * th
        h11 = (th - 1.0) * th * th
        if self.x.ndim > 1:
            sh = (-1,) + (1,) * (self.x.ndim - 1)
            h00, h10, h01, h11 = (c.reshape(sh) for c in (h00, h10, h01, h11))
        out = (
            h00 * self.x[j]
            + h10 * self.step * self.xdot[j]
            + h01 * self.x[j + 1]
            + h11 * self.step * self.xdot[j + 1]
        )
        if self.history is not None:
            past = pts < t0
            if np.any(past):
                for idx in np.nonzero(past)[0]:
                    out[idx] = self.history(float(pts[idx]))
        if scalar:
            return out[0] if out.ndim > 0 and self.x.ndim > 1 else float(out[0])
        return out


def _step_count(t_end: float, h: float) -> int:
    if not t_end > 0.0:
        raise ValueError("t_end must be positive")
    return int(math.ceil(t_end / h - 1e-9))


def _check_state(x, t: float) -> None:
    if np.any(x <= 0.0):
        raise PositivityLossError(f"x lost positivity at t={t:.6g}")
    if np.any(x > _BLOWUP):
        raise PositivityLossError(f"x exceeded {_BLOWUP:.0e} at t={t:.6g} (blow-up)")


def integrate_dde(phi: Callable, r: float, t_end: float, h: float) -> Trajectory:
    """Integrate the delay system from history ``phi`` on [-1, 0].

    ``h`` must equal 1/N for an integer N >= 100 so that the delayed argument
    lands on the stored grid.  ``phi`` is only ever evaluated on [-1, 0].
    """
    n_per_unit = round(1.0 / h)
    if n_per_unit < 100 or abs(n_per_unit * h - 1.0) > 1e-12:
        raise ValueError("step h must be 1/N for an integer N >= 100")
    n_delay = n_per_unit
    steps = _step_count(t_end, h)

    hist = np.asarray([phi(-1.0 + j * h) for j in range(n_delay + 1)], dtype=float)
    x0 = hist[-1]
    if np.any(x0 <= 0.0):
        raise ValueError("history must be positive at t = 0")
    y0 = _composite_simpson(hist, h) - 1.0

    shape = (steps + 1,) + np.shape(x0)
    xs = np.empty(shape)
    ys = np.empty(shape)
    xds = np.empty(shape)
    x, y = x0 + 0.0, y0 + 0.0
    xs[0], ys[0], xds[0] = x, y, -r * x * y

    sixth = h / 6.0
    for i in range(steps):
        t = i * h
        j = i - n_delay
        if j < 0:
            xd0 = hist[i]
            xdm = phi(t + 0.5 * h - 1.0)
        else:
            xd0 = xs[j]
            xdm = 0.5 * (xs[j] + xs[j + 1]) + 0.125 * h * (xds[j] - xds[j + 1])
        xd1 = hist[i + 1] if j + 1 < 0 else xs[j + 1]

        k1x = -r * x * y
        k1y = x - xd0
        x2 = x + 0.5 * h * k1x
        y2 = y + 0.5 * h * k1y
        k2x = -r * x2 * y2
        k2y = x2 - xdm
        x3 = x + 0.5 * h * k2x
        y3 = y + 0.5 * h * k2y
        k3x = -r * x3 * y3
        k3y = x3 - xdm
        x4 = x + h * k3x
        y4 = y + h * k3y
        k4x = -r * x4 * y4
        k4y = x4 - xd1

        x = x + sixth * (k1x + 2.0 * (k2x + k3x) + k4x)
        y = y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y)
        _check_state(x, t + h)
        xs[i + 1], ys[i + 1], xds[i + 1] = x, y, -r * x * y

    t_nodes = np.arange(steps + 1) * h
    return Trajectory(
        t=t_nodes, x=xs, y=ys, xdot=xds, step=h,
        history=phi, history_start=-1.0,
    )


def _integrate_ode_pair(rhs, x0, y0, r: float, t_end: float, h: float) -> Trajectory:
    """Fixed-step RK4 for a positive/unconstrained pair (x, y)."""
    steps = _step_count(t_end, h)
    shape = (steps + 1,) + np.shape(x0)
    xs = np.empty(shape)
    ys = np.empty(shape)
    xds = np.empty(shape)
    x, y = x0 + 0.0, y0 + 0.0
    xs[0], ys[0] = x, y
    xds[0] = rhs(x, y)[0]
    sixth = h / 6.0
    for i in range(steps):
        k1x, k1y = rhs(x, y)
        k2x, k2y = rhs(x + 0.5 * h * k1x, y + 0.5 * h * k1y)
        k3x, k3y = rhs(x + 0.5 * h * k2x, y + 0.5 * h * k2y)
        k4x, k4y = rhs(x + h * k3x, y + h * k3y)
        x = x + sixth * (k1x + 2.0 * (k2x + k3x) + k4x)
        y = y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y)
        _check_state(x, (i + 1) * h)
        xs[i + 1], ys[i + 1] = x, y
        xds[i + 1] = rhs(x, y)[0]
    return Trajectory(
        t=np.arange(steps + 1) * h, x=xs, y=ys, xdot=xds, step=h,
    )


def integrate_four_dim(
    a: float, b: float, r: float, t_end: float, h: float
) -> tuple[Trajectory, Trajectory]:
    """RK4 on the four-component periodic generator (no delay).

    States (x1, y1) and (x2, y2) start at (a, 0) and (b, 0); the second pair
    tracks the solution shifted by half a period.  Returns both trajectories.
    """
    if not (a > 0.0 and b > 0.0):
        raise ValueError("initial values a, b must be positive")
    if not h > 0.0:
        raise ValueError("step must be positive")
    steps = _step_count(t_end, h)
    state = np.array([a, 0.0, b, 0.0])

    def rhs(s):
        x1, y1, x2, y2 = s
        return np.array([-r * x1 * y1, x1 - x2, -r * x2 * y2, x2 - x1])

    out = np.empty((steps + 1, 4))
    douts = np.empty((steps + 1, 4))
    out[0] = state
    douts[0] = rhs(state)
    sixth = h / 6.0
    for i in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * h * k1)
        k3 = rhs(state + 0.5 * h * k2)
        k4 = rhs(state + h * k3)
        state = state + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        _check_state(state[::2], (i + 1) * h)
        out[i + 1] = state
        douts[i + 1] = rhs(state)

    t_nodes = np.arange(steps + 1) * h
    first = Trajectory(t=t_nodes, x=out[:, 0], y=out[:, 1], xdot=douts[:, 0], step=h)
    second = Trajectory(t=t_nodes, x=out[:, 2], y=out[:, 3], xdot=douts[:, 2], step=h)
    return first, second


def integrate_reduced(a: float, b: float, r: float, t_end: float, h: float) -> Trajectory:
    """RK4 on the reduced pair x' = -r x y, y' = x - a b / x from (a, 0).

    Solutions conserve x + ab/x + (r/2) y^2.
    """
    if not (a > 0.0 and b > 0.0):
        raise ValueError("initial values a, b must be positive")
    if not h > 0.0:
        raise ValueError("step must be positive")
    ab = a * b

    def rhs(x, y):
        return -r * x * y, x - ab / x

    return _integrate_ode_pair(rhs, a, 0.0, r, t_end, h)


def orbit_trajectory(params: OrbitParams, t0: float, t1: float, h: float) -> Trajectory:
    """Materialize the closed-form orbit as a dense Trajectory on [t0, t1].

    Nodes carry the analytic values and the exact derivative -r x y, so the
    Hermite interpolant reproduces the orbit to O(h^4); the orbit itself
    serves as the history callable, making every past window queryable.
    """
    if not (t1 > t0 and h > 0.0):
        raise ValueError("need t1 > t0 and h > 0")
    n = int(math.ceil((t1 - t0) / h - 1e-9))
    t_nodes = t0 + np.arange(n + 1) * h
    x = params.x_at(t_nodes)
    y = params.y_at(t_nodes)
    return Trajectory(
        t=t_nodes, x=x, y=y, xdot=-params.r * x * y, step=h,
        history=params.x_at, history_start=-math.inf,
    )


def window_integral(traj: Trajectory, t: float, width: float):
    """integral_{t-width}^{t} x(s) ds by composite Simpson on the dense output."""
    if not width > 0.0:
        raise ValueError("width must be positive")
    tiny = 1e-9 * traj.step
    if t > float(traj.t[-1]) + tiny or t - width < traj.history_start - tiny:
        raise ValueError("window [t-width, t] not covered by trajectory+history")
    panels = max(int(math.ceil(width / traj.step)), 4)
    panels += panels % 2
    pts = np.linspace(t - width, t, panels + 1)
    return _composite_simpson(traj.x_at(pts), width / panels)


# -- SIRS model with temporary immunity --------------------------------------


@dataclass(frozen=True)
class SirsParams:
    """Transmission/recovery/immunity-duration parameters (beta > gamma > 0)."""

    beta: float
    gamma: float
    tau: float

    def __post_init__(self) -> None:
        if not (self.gamma > 0.0 and self.tau > 0.0):
            raise ValueError("gamma and tau must be positive")
        if not self.beta > self.gamma:
            raise ValueError("beta must exceed gamma for a positive endemic state")


def endemic_equilibrium(params: SirsParams) -> float:
    """Endemic infective fraction (1 - gamma/beta) / (1 + gamma*tau)."""
    return (1.0 - params.gamma / params.beta) / (1.0 + params.gamma * params.tau)


@dataclass
class SirsTrajectory:
    """Node samples of the susceptible/infective/recovered fractions."""

    t: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    params: SirsParams
    step: float


def integrate_sirs(
    params: SirsParams, psi: Callable, t_end: float, h: float
) -> SirsTrajectory:
    """Integrate the scalar infective equation and reconstruct S and R.

    The distributed term J(t) = integral_0^tau I(t-s) ds rides along as an
    auxiliary state with J' = I(t) - I(t-tau) (only the point delay at tau is
    needed); R = gamma*J and S = 1 - I - R, so the population total is
    conserved by construction.  ``h`` must divide tau exactly.

    ``psi`` is the infective history on [-tau, 0]; the initial recovered
    fraction is gamma * integral_0^tau psi(-s) ds, and S(0) computed from the
    total must be nonnegative.
    """
    tau = params.tau
    n_delay = round(tau / h)
    if n_delay < 100 or abs(n_delay * h - tau) > 1e-12 * max(tau, 1.0):
        raise ValueError("step h must be tau/N for an integer N >= 100")
    steps = _step_count(t_end, h)

    hist = np.asarray([psi(-tau + j * h) for j in range(n_delay + 1)], dtype=float)
    if np.any(hist <= 0.0):
        raise ValueError("infective history must be positive")
    i0 = float(hist[-1])
    j0 = float(_composite_simpson(hist, h))
    s0 = 1.0 - i0 - params.gamma * j0
    if s0 < 0.0:
        raise ValueError("history inconsistent: S(0) < 0 for a unit population")

    beta, gamma = params.beta, params.gamma

    def f_i(i_val, j_val):
        return i_val * (beta * (1.0 - i_val - gamma * j_val) - gamma)

    i_nodes = np.empty(steps + 1)
    j_nodes = np.empty(steps + 1)
    id_nodes = np.empty(steps + 1)
    i_cur, j_cur = i0, j0
    i_nodes[0], j_nodes[0] = i_cur, j_cur
    id_nodes[0] = f_i(i_cur, j_cur)

    sixth = h / 6.0
    for n in range(steps):
        t = n * h
        jj = n - n_delay
        if jj < 0:
            d0 = hist[n]
            dm = psi(t + 0.5 * h - tau)
        else:
            d0 = i_nodes[jj]
            dm = 0.5 * (i_nodes[jj] + i_nodes[jj + 1]) + 0.125 * h * (
                id_nodes[jj] - id_nodes[jj + 1]
            )
        d1 = hist[n + 1] if jj + 1 < 0 else i_nodes[jj + 1]

        k1i = f_i(i_cur, j_cur)
        k1j = i_cur - d0
        i2 = i_cur + 0.5 * h * k1i
        j2 = j_cur + 0.5 * h * k1j
        k2i = f_i(i2, j2)
        k2j = i2 - dm
        i3 = i_cur + 0.5 * h * k2i
        j3 = j_cur + 0.5 * h * k2j
        k3i = f_i(i3, j3)
        k3j = i3 - dm
        i4 = i_cur + h * k3i
        j4 = j_cur + h * k3j
        k4i = f_i(i4, j4)
        k4j = i4 - d1

        i_cur = i_cur + sixth * (k1i + 2.0 * (k2i + k3i) + k4i)
        j_cur = j_cur + sixth * (k1j + 2.0 * (k2j + k3j) + k4j)
        _check_state(i_cur, t + h)
        i_nodes[n + 1], j_nodes[n + 1] = i_cur, j_cur
        id_nodes[n + 1] = f_i(i_cur, j_cur)

    r_nodes = gamma * j_nodes
    return SirsTrajectory(
        t=np.arange(steps + 1) * h,
        s=1.0 - i_nodes - r_nodes,
        i=i_nodes,
        r=r_nodes,
        params=params,
        step=h,
    )


def sirs_limit_distance(
    r: float,
    gamma_tau: float,
    t_end: float = 3.0,
    h: float = 0.005,
    x_history: Optional[Callable] = None,
) -> float:
    """Sup-distance between the rescaled SIRS infective fraction and the
    delay-equation solution started from the same history.

    Time is measured in immune periods (tau = 1, gamma = gamma_tau,
    beta = r + gamma); the distance shrinks like 1/(1 + gamma*tau).
    """
    if x_history is None:
        x_history = lambda t: 1.0 + 0.2 * math.cos(math.pi * t)
    params = SirsParams(beta=r + gamma_tau, gamma=gamma_tau, tau=1.0)
    i_eq = endemic_equilibrium(params)
    sirs = integrate_sirs(params, lambda s: i_eq * x_history(s), t_end, h)
    dde = integrate_dde(x_history, r, t_end, h)
    return float(np.max(np.abs(sirs.i / i_eq - dde.x)))
