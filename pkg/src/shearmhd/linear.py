"""Per-Fourier-mode linear dynamics in the sheared frame.

For a mode (k, xi) with k != 0 and s = t - xi/k the coupled pair (p1, p2)
(shear-frame velocity / magnetic scalars, after rotating p1 by i) obeys

    p1' = -s/(1+s^2) p1 - alpha k p2 - nu    k^2 (1+s^2) p1
    p2' = +s/(1+s^2) p2 + alpha k p1 - kappa k^2 (1+s^2) p2

The dissipation coefficients grow quadratically in time, so the system is
stiff on long horizons; we integrate with an adaptive implicit solver and
locate the |p| peak from the dense output.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar


class ModeIntegrationError(RuntimeError):
    """Adaptive integration failed (stiffness breakdown or non-finite state)."""


@dataclass(frozen=True)
class PhysParams:
    """Viscosity, resistivity and background field strength."""

    nu: float
    kappa: float
    alpha: float

    @property
    def regime_kappa_le_nu3(self) -> bool:
        """True in the norm-inflation regime kappa <= nu^3."""
        return self.kappa <= self.nu ** 3

    @property
    def lipschitz_L(self) -> float:
        """max(1, nu * kappa^(-1/3)); the transient growth amplitude."""
        if self.kappa <= 0:
            return math.inf
        return max(1.0, self.nu * self.kappa ** (-1.0 / 3.0))

    @property
    def decay_c(self) -> float:
        """Envelope decay constant (1/200)(1 - 1/(2 alpha))^2."""
        return (1.0 - 0.5 / self.alpha) ** 2 / 200.0


@dataclass(frozen=True)
class ModeIndex:
    k: int
    xi: float

    def __post_init__(self):
        if self.k == 0:
            raise ValueError("k != 0 required; the x-average evolves separately")


@dataclass
class ModeRunResult:
    growth_factor: float
    t_peak: float
    envelope_ratio: float
    #: sup of |p| over the algebraic-growth window [xi/k + 1/nu, t_end], divided
    #: by |p| at the window entry; NaN when the window lies beyond t_end.
    window_inflation: float = float("nan")
    trace_t: Optional[np.ndarray] = None
    trace_p: Optional[np.ndarray] = None  # shape (2, len(trace_t))

    @property
    def trace_abs(self) -> Optional[np.ndarray]:
        if self.trace_p is None:
            return None
        return np.hypot(self.trace_p[0], self.trace_p[1])


def mode_rhs(p1: float, p2: float, t: float, mode: ModeIndex, params: PhysParams):
    """Exact right-hand side of the per-mode system."""
    k = mode.k
    s = t - mode.xi / k
    shear = s / (1.0 + s * s)
    diss = k * k * (1.0 + s * s)
    d1 = -shear * p1 - params.alpha * k * p2 - params.nu * diss * p1
    d2 = shear * p2 + params.alpha * k * p1 - params.kappa * diss * p2
    return d1, d2


def mode_jacobian(t: float, mode: ModeIndex, params: PhysParams) -> np.ndarray:
    k = mode.k
    s = t - mode.xi / k
    shear = s / (1.0 + s * s)
    diss = k * k * (1.0 + s * s)
    return np.array(
        [
            [-shear - params.nu * diss, -params.alpha * k],
            [params.alpha * k, shear - params.kappa * diss],
        ]
    )


def circular_rotation(p_in, alpha: float, k: int, t: float):
    """Closed-form solution of the constant-field toy model: rotation by alpha*k*t."""
    a = alpha * k * t
    c, s = math.cos(a), math.sin(a)
    return (c * p_in[0] - s * p_in[1], s * p_in[0] + c * p_in[1])


def strong_viscosity_reference(
    t0: float, t: float, kappa: float, p2_0: float, alt_reading: bool = False
) -> float:
    """Closed-form magnetic toy-model solution: algebraic growth cut by resistivity.

    p2(t) = (<t>/<t0>) * exp(-kappa * int_{t0}^{t} (1 + tau^2) dtau) * p2(t0)
    with <t> = sqrt(1 + t^2).  alt_reading integrates (1 + (tau - t)^2) instead
    (a literal transcription of the printed display, kept behind a switch).
    """
    if t < t0 or t0 < 0:
        raise ValueError("need t >= t0 >= 0")
    growth = math.sqrt((1.0 + t * t) / (1.0 + t0 * t0))
    if alt_reading:
        dt = t - t0
        integral = dt + dt ** 3 / 3.0
    else:
        integral = (t - t0) + (t ** 3 - t0 ** 3) / 3.0
    return growth * math.exp(-kappa * integral) * p2_0


def default_t_end(mode: ModeIndex, params: PhysParams) -> float:
    """Horizon capturing peak and decay: 10 (kappa k^2)^(-1/3), past the resonance."""
    k2 = float(mode.k * mode.k)
    horizon = 10.0 * (params.kappa * k2) ** (-1.0 / 3.0) if params.kappa > 0 else 10.0 / params.nu
    return max(mode.xi / mode.k, 0.0) + horizon


def solve_mode(
    mode: ModeIndex,
    params: PhysParams,
    p_in: Sequence[float],
    t_end: float,
    tol: float = 1e-8,
    keep_trace: bool = False,
    n_samples: int = 4000,
) -> ModeRunResult:
    """Integrate one mode adaptively and measure growth and envelope statistics.

    The supremum of |p| is taken over the union of solver steps and a uniform
    sample of the dense output, then refined by local maximization.
    envelope_ratio = sup_t |p| e^{c kappa^(1/3) t} / ((1 + nu kappa^(-1/3)) |p_in|).
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol outside [1e-12, 1e-4]")
    p0 = np.asarray(p_in, dtype=float)
    norm0 = float(np.hypot(p0[0], p0[1]))
    if norm0 == 0.0:
        ts = np.linspace(0.0, t_end, 2)
        return ModeRunResult(
            growth_factor=1.0,
            t_peak=0.0,
            envelope_ratio=0.0,
            trace_t=ts if keep_trace else None,
            trace_p=np.zeros((2, 2)) if keep_trace else None,
        )

    def f(t, p):
        return mode_rhs(p[0], p[1], t, mode, params)

    def jac(t, p):
        return mode_jacobian(t, mode, params)

    sol = solve_ivp(
        f,
        (0.0, t_end),
        p0,
        method="LSODA",
        jac=jac,
        rtol=tol,
        atol=tol * norm0 * 1e-3,
        dense_output=True,
        max_step=max(1.0, t_end / 2000.0),
    )
    if not sol.success or not np.all(np.isfinite(sol.y)):
        raise ModeIntegrationError(f"mode ({mode.k}, {mode.xi}): {sol.message}")

    ts = np.unique(np.concatenate([sol.t, np.linspace(0.0, t_end, n_samples)]))
    p = sol.sol(ts)
    absp = np.hypot(p[0], p[1])

    i = int(np.argmax(absp))
    lo = ts[max(i - 1, 0)]
    hi = ts[min(i + 1, len(ts) - 1)]
    t_peak, peak = ts[i], absp[i]
    if hi > lo:
        res = minimize_scalar(
            lambda t: -float(np.hypot(*sol.sol(t))), bounds=(lo, hi), method="bounded"
        )
        if res.success and -res.fun > peak:
            t_peak, peak = float(res.x), -float(res.fun)

    c = params.decay_c
    kcube = params.kappa ** (1.0 / 3.0) if params.kappa > 0 else 0.0
    weighted = absp * np.exp(c * kcube * ts)
    env_den = (1.0 + params.nu * params.kappa ** (-1.0 / 3.0)) * norm0 if params.kappa > 0 else norm0
    envelope_ratio = float(np.max(weighted) / env_den)

    # growth across the viscosity-delayed window where the magnetic component
    # grows algebraically: reference point t0 = max(xi/k, 0) + 1/nu
    t0_win = max(mode.xi / mode.k, 0.0) + 1.0 / params.nu
    window_inflation = float("nan")
    if t0_win < t_end:
        base = float(np.hypot(*sol.sol(t0_win)))
        if base > 0:
            tail = absp[ts >= t0_win]
            window_inflation = float(max(tail.max(initial=0.0), base) / base)

    return ModeRunResult(
        growth_factor=peak / norm0,
        t_peak=t_peak,
        envelope_ratio=envelope_ratio,
        window_inflation=window_inflation,
        trace_t=ts if keep_trace else None,
        trace_p=p if keep_trace else None,
    )


def solve_mode_rk4(
    mode: ModeIndex,
    params: PhysParams,
    p_in: Sequence[float],
    t_end: float,
    h: float,
) -> ModeRunResult:
    """Fixed-step classical RK4 reference (oracle for the adaptive path)."""
    n = int(math.ceil(t_end / h))
    p1, p2 = float(p_in[0]), float(p_in[1])
    norm0 = math.hypot(p1, p2)
    if norm0 == 0.0:
        return ModeRunResult(growth_factor=1.0, t_peak=0.0, envelope_ratio=0.0)
    t = 0.0
    best, t_best = norm0, 0.0
    rhs = mode_rhs
    for _ in range(n):
        a1, a2 = rhs(p1, p2, t, mode, params)
        b1, b2 = rhs(p1 + 0.5 * h * a1, p2 + 0.5 * h * a2, t + 0.5 * h, mode, params)
        c1, c2 = rhs(p1 + 0.5 * h * b1, p2 + 0.5 * h * b2, t + 0.5 * h, mode, params)
        d1, d2 = rhs(p1 + h * c1, p2 + h * c2, t + h, mode, params)
        p1 += h / 6.0 * (a1 + 2.0 * (b1 + c1) + d1)
        p2 += h / 6.0 * (a2 + 2.0 * (b2 + c2) + d2)
        t += h
        m = math.hypot(p1, p2)
        if m > best:
            best, t_best = m, t
        if not (math.isfinite(p1) and math.isfinite(p2)):
            raise ModeIntegrationError("RK4 reference diverged (step too large)")
    env_den = (
        (1.0 + params.nu * params.kappa ** (-1.0 / 3.0)) * norm0 if params.kappa > 0 else norm0
    )
    return ModeRunResult(
        growth_factor=best / norm0, t_peak=t_best, envelope_ratio=best / env_den
    )


def sweep_growth(
    params_grid: Sequence[PhysParams],
    modes: Sequence[ModeIndex],
    p_in=(1.0, 0.0),
    t_end_rule=default_t_end,
    tol: float = 1e-8,
) -> list:
    """One row per (params, mode), in deterministic input order.

    Failed integrations yield a row with error text instead of aborting the sweep.
    """
    if not params_grid or not modes:
        raise ValueError("parameter grid and mode list must be nonempty")
    rows = []
    for params in params_grid:
        for mode in modes:
            row = {
                "nu": params.nu,
                "kappa": params.kappa,
                "alpha": params.alpha,
                "k": mode.k,
                "xi": mode.xi,
                "p1_0": p_in[0],
                "p2_0": p_in[1],
                "regime_flag": params.regime_kappa_le_nu3,
            }
            try:
                result = solve_mode(mode, params, p_in, t_end_rule(mode, params), tol=tol)
                row.update(
                    growth_factor=result.growth_factor,
                    t_peak=result.t_peak,
                    envelope_ratio=result.envelope_ratio,
                    error="",
                )
            except ModeIntegrationError as exc:
                row.update(
                    growth_factor=math.nan,
                    t_peak=math.nan,
                    envelope_ratio=math.nan,
                    error=str(exc),
                )
            rows.append(row)
    return rows


def fit_loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise ValueError("slope fit needs at least two points")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
