"""High-accuracy reference solutions for scalar ODEs.

Dormand-Prince 5(4) with a PI step-size controller and the standard
fourth-order continuous extension, so the solution is reported at every node
of a fixed :class:`~odebound.grid.TimeGrid` without re-integrating.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import SampledFn, TimeGrid

DEFAULT_RTOL = 1e-11
DEFAULT_ATOL = 1e-16

_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
# difference between the 5th- and embedded 4th-order weights
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# dense output: u(t + s h) = u + h * sum_k K_k * sum_p P[k, p] s^(p+1)
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# PI controller exponents (Gustafsson / Hairer-Wanner values for order 5)
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5


class OracleFailure(RuntimeError):
    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (reached t = {float(t_reached):.17g})")
        self.t_reached = t_reached


@dataclass(frozen=True)
class OracleSolution:
    grid: TimeGrid
    u: SampledFn
    du: SampledFn
    stats: dict = field(default_factory=dict)


def _initial_step(rhs, t0, y0, f0, direction_len, rtol, atol):
    scale = atol + rtol * abs(y0)
    d0 = abs(y0) / scale
    d1 = abs(f0) / scale
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_len)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = abs(f1 - f0) / scale / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_len)


def solve(
    model,
    grid: TimeGrid | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_steps: int = 1_000_000,
) -> OracleSolution:
    """Integrate ``du/dt = -f(u, t)`` from ``model.t0`` across ``grid``."""
    if rtol <= 0 or atol <= 0:
        raise ValueError("rtol and atol must be positive")
    grid = model.grid() if grid is None else grid
    if abs(grid.t_start - model.t0) > 1e-12 * max(1.0, abs(model.t0)):
        raise ValueError(f"grid starts at {grid.t_start}, model t0 is {model.t0}")

    def rhs(t, y):
        return -float(model.f(y, t))

    nodes = grid.t
    out = np.empty(grid.n_points)
    out[0] = model.u0

    t, y = grid.t_start, model.u0
    t_end = grid.t_end
    fy = rhs(t, y)
    h = _initial_step(rhs, t, y, fy, t_end - t, rtol, atol)
    err_prev = 1e-4
    accepted = rejected = 0
    max_err = 0.0
    next_node = 1
    K = np.empty(7)
    stages_a = [np.array(row) for row in _A]

    while next_node < grid.n_points:
        if accepted + rejected >= max_steps:
            raise OracleFailure("step budget exhausted", t)
        if h < 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise OracleFailure("step size underflow", t)
        last = h >= (t_end - t) * (1 - 1e-12)
        if last:
            h = t_end - t

        K[0] = fy
        for s in range(1, 7):
            K[s] = rhs(t + _C[s] * h, y + h * np.dot(stages_a[s], K[:s]))
        y_new = y + h * np.dot(_B, K)
        if not np.isfinite(y_new):
            rejected += 1
            h *= _MIN_FACTOR
            continue
        err_est = h * np.dot(_E, K)
        scale = atol + rtol * max(abs(y), abs(y_new))
        err = abs(err_est) / scale

        if err <= 1.0:
            t_new = t_end if last else t + h
            # dense output for nodes in (t, t_new]
            stop = np.searchsorted(nodes, t_new, side="right")
            if stop > next_node:
                s = (nodes[next_node:stop] - t) / h
                powers = np.cumprod(np.repeat(s[:, None], 4, axis=1), axis=1)
                Q = K @ _P
                out[next_node:stop] = y + h * powers @ Q
                if last:
                    out[grid.n_points - 1] = y_new
                next_node = stop
            accepted += 1
            max_err = max(max_err, err)
            factor = _SAFETY * max(err, 1e-10) ** -_ALPHA * err_prev**_BETA
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            err_prev = max(err, 1e-4)
            t, y, fy = t_new, y_new, K[6]
            h *= factor
        else:
            rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err**-0.2)

    u = SampledFn(grid, out, name="oracle u")
    du = SampledFn(grid, -model.f(out, grid.t), name="oracle du")
    stats = {"accepted": accepted, "rejected": rejected, "max_error_ratio": float(max_err)}
    return OracleSolution(grid, u, du, stats)
