"""Finite-window, non-stationary kernel machinery.

Everything here lives on a uniform time grid ``t_0 = tau, ..., t_N = T``.
The dressed response G(t, s-t) obeys the two-time integral equation

    G(t, s-t) = G0(s-t) + int_t^T dt1 int_t1^T dt2 G0(t1-t) kI(t1, t2-t1) G(t2, s-t2),

with ``G0(u) = (2/(m omega)) sin(omega u)`` twice the bare response.  It is
solved by successive substitution (the Neumann series of the Volterra
operator) with trapezoidal quadrature; on a finite window the series always
terminates factorially, but the iteration count grows near and beyond the
disordered-phase boundary, so exhaustion of the cap is reported as a
diagnostic rather than raised.

The single-edge updates built on G:

* dissipation: ``kI_out(t, s-t) = (1/2) C(t) C(s) G(t, s-t)``;
* noise, full form: a double convolution of the upstream noise kernel with
  two G factors plus two boundary terms set by the initial Gaussian state,
  ``C' G(tau, t-tau) G(tau, s-tau)`` and ``(1/A') dG/dr|_tau dG/dr|_tau``.

The auxiliary backward path Q driven by a deviation history solves

    (m/2) Q'' + (m omega^2/2) Q = (1/2) C(t) drive(t) + int_t^T kI(t, s-t) Q(s) ds

with rest conditions at T, and coincides with ``(1/2) int G(t,s-t) C(s)
drive(s) ds``; :func:`ode_response_check` computes the left-hand route,
:func:`response_from_twinning` the right-hand one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AccuracyError, DomainError, ShapeError
from .model import ModelParams


@dataclass(frozen=True)
class ThermalState:
    """Symmetric Gaussian initial state of one oscillator (hbar = 1).

    ``A_prime = (m omega/2) tanh(beta omega/2)`` and ``C_prime = (m omega/2)
    coth(beta omega/2)`` satisfy A'C' = (m omega/2)^2; the length scale is
    ``l = 1/sqrt(A'C') = 2/(m omega)``.
    """

    beta: float
    A_prime: float
    C_prime: float
    length_scale: float


def thermal_init(beta: float, params: ModelParams) -> ThermalState:
    """Thermal-state parameters at inverse temperature beta (> 0)."""
    if beta <= 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    omega = math.sqrt(params.omega_sq)
    half = beta * omega / 2.0
    a_p = params.m * omega / 2.0 * math.tanh(half)
    c_p = params.m * omega / 2.0 / math.tanh(half)
    return ThermalState(beta=float(beta), A_prime=a_p, C_prime=c_p,
                        length_scale=2.0 / (params.m * omega))


@dataclass
class TwoTimeKernel:
    """Kernel on the uniform two-time grid tau <= t <= s <= T.

    ``values[i, j]`` holds K(t_i, t_j - t_i); causal kernels vanish below the
    diagonal, symmetric kernels (noise type) satisfy V = V^T instead.
    """

    times: np.ndarray
    values: np.ndarray
    kind: str = "causal"
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        n = self.times.size
        if self.values.shape != (n, n):
            raise ShapeError("values must be square over the time grid")
        steps = np.diff(self.times)
        if n > 1 and (np.any(steps <= 0)
                      or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0)):
            raise ShapeError("time grid must be uniform and increasing")
        if self.kind not in ("causal", "symmetric"):
            raise ShapeError(f"unknown kind {self.kind!r}")
        if self.kind == "causal":
            lower = np.tril(self.values, k=-1)
            if np.any(lower != 0.0):
                raise ShapeError("causal kernel has entries below the diagonal")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    @classmethod
    def from_stationary(cls, times, func, kind: str = "causal") -> "TwoTimeKernel":
        """Build K(t, s-t) = func(s-t) on the grid (zero below the diagonal)."""
        times = np.asarray(times, dtype=float)
        lag = times[None, :] - times[:, None]
        vals = np.where(lag >= 0, func(np.maximum(lag, 0.0)), 0.0)
        if kind == "symmetric":
            vals = np.where(lag >= 0, vals, vals.T)
        return cls(times=times, values=vals, kind=kind)


def time_grid(T: float, dt: float, tau: float = 0.0) -> np.ndarray:
    """Uniform grid tau..T, endpoint included, step no coarser than dt."""
    n = max(1, int(math.ceil((T - tau) / dt - 1e-9)))
    return tau + (T - tau) * np.arange(n + 1) / n


def bare_response(params: ModelParams, u):
    """Twice the bare oscillator response, (2/(m omega)) sin(omega u) for u >= 0."""
    omega = math.sqrt(params.omega_sq)
    u = np.asarray(u, dtype=float)
    out = np.where(u >= 0, 2.0 / (params.m * omega) * np.sin(omega * u), 0.0)
    return float(out) if out.ndim == 0 else out


def _compose(x: np.ndarray, y: np.ndarray, dt: float) -> np.ndarray:
    """Trapezoid-weighted causal composition, (X * Y)[i,j] ~ int X[i,l] Y[l,j] dl.

    For causal factors the integration variable runs l in [i, j]; endpoint
    weights are halved.  The weight pattern factorizes per variable, so the
    composition is associative at the discrete level.
    """
    out = x @ y
    out -= 0.5 * np.diag(x)[:, None] * y
    out -= 0.5 * x * np.diag(y)[None, :]
    return dt * out


def _apply(x: np.ndarray, h: np.ndarray, dt: float) -> np.ndarray:
    """Weighted action on a history vector, (X * h)[i] ~ int_t_i^T X[i,l] h[l] dl."""
    out = x @ h
    out -= 0.5 * np.diag(x) * h
    out -= 0.5 * x[:, -1] * h[-1]
    return dt * out


@dataclass
class TwinningResult:
    """Solved dressed response with iteration diagnostics."""

    G: TwoTimeKernel
    iterations: int
    converged: bool
    residual: float
    residual_history: np.ndarray


def twinning_solve(kI_upstream: TwoTimeKernel, params: ModelParams,
                   T: float | None = None, dt: float | None = None,
                   tol: float = 1e-10, max_iter: int = 200) -> TwinningResult:
    """Solve the two-time response equation by successive substitution.

    ``kI_upstream`` fixes the grid; T and dt, when given, must agree with it.
    The step must resolve the band, dt <= 1/(20 lambda_pp) (falls back to the
    oscillator period when the band is degenerate).  Non-convergence at the
    iteration cap returns a diagnostic result instead of raising.
    """
    times = kI_upstream.times
    grid_dt = kI_upstream.dt
    if dt is not None and abs(dt - grid_dt) > 1e-9 * grid_dt:
        raise ShapeError("dt disagrees with the kernel grid")
    if T is not None and abs(T - times[-1]) > 1e-9 * max(1.0, abs(T)):
        raise ShapeError("T disagrees with the kernel grid")
    if params.band_defined and params.lambda_pp > 0:
        limit = 1.0 / (20.0 * params.lambda_pp)
    else:
        limit = 1.0 / (20.0 * math.sqrt(params.omega_sq))
    if grid_dt > limit * (1.0 + 1e-12):
        raise AccuracyError(
            f"dt={grid_dt:.3g} coarser than resolution limit {limit:.3g}")

    lag = times[None, :] - times[:, None]
    a = np.where(lag >= 0, bare_response(params, np.maximum(lag, 0.0)), 0.0)
    k = kI_upstream.values
    g = a.copy()
    history = []
    converged = False
    iterations = 0
    residual = np.inf
    for i in range(1, max_iter + 1):
        g_new = a + _compose(a, _compose(k, g, grid_dt), grid_dt)
        scale = max(1.0, np.abs(g_new).max())
        residual = float(np.abs(g_new - g).max() / scale)
        history.append(residual)
        g = g_new
        iterations = i
        if residual <= tol:
            converged = True
            break
    g = np.triu(g)
    kernel = TwoTimeKernel(times=times, values=g, kind="causal",
                           meta={"iterations": iterations,
                                 "converged": converged})
    return TwinningResult(G=kernel, iterations=iterations, converged=converged,
                          residual=residual,
                          residual_history=np.asarray(history))


def neumann_first_correction(kI_upstream: TwoTimeKernel, params: ModelParams) -> np.ndarray:
    """First-order term int int G0 kI G0 of the successive-substitution series."""
    times = kI_upstream.times
    lag = times[None, :] - times[:, None]
    a = np.where(lag >= 0, bare_response(params, np.maximum(lag, 0.0)), 0.0)
    return _compose(a, _compose(kI_upstream.values, a, kI_upstream.dt),
                    kI_upstream.dt)


def _coupling_on_grid(C_edge, times: np.ndarray) -> np.ndarray:
    if callable(C_edge):
        return np.asarray([C_edge(t) for t in times], dtype=float)
    return np.full(times.size, float(C_edge))


def vernon_imag_finite(G: TwoTimeKernel, C_edge) -> TwoTimeKernel:
    """Downstream dissipation kernel (1/2) C(t) C(s) G(t, s-t).

    ``C_edge`` is a constant or a callable C(t); a coupling that vanishes
    before a turn-on time zeroes the kernel there.
    """
    c = _coupling_on_grid(C_edge, G.times)
    vals = 0.5 * c[:, None] * c[None, :] * G.values
    return TwoTimeKernel(times=G.times, values=vals, kind="causal")


def vernon_real_full(kR_upstream: TwoTimeKernel | None, G: TwoTimeKernel,
                     state: ThermalState, C_edge) -> TwoTimeKernel:
    """Downstream noise kernel: double convolution plus two boundary terms.

    ``out(t,s) = C(t)C(s) [ int_tau^t int_tau^s kR(t',s') G(t',t-t') G(s',s-s')
    + C' G(tau,t-tau) G(tau,s-tau) + (1/A') dG(r,t-r)/dr|_tau dG(r,s-r)/dr|_tau ]``.
    The boundary terms stem from the initial state of the integrated-out
    oscillator and matter only near the start of the window when G has
    finite memory.  Output is symmetric.
    """
    times = G.times
    dt = G.dt
    c = _coupling_on_grid(C_edge, times)
    g = G.values
    if kR_upstream is not None:
        if kR_upstream.times.shape != times.shape or \
                not np.allclose(kR_upstream.times, times, rtol=1e-12, atol=0.0):
            raise ShapeError("noise kernel grid differs from G grid")
        # Weighted columns: w_l in [tau, t_i], halved at both ends.
        gw = g * dt
        gw[0, :] *= 0.5
        idx = np.arange(times.size)
        gw[idx, idx] *= 0.5
        conv = gw.T @ kR_upstream.values @ gw
    else:
        conv = np.zeros((times.size, times.size))
    g_start = g[0, :]
    # One-sided 2nd-order derivative along the first argument at r = tau.
    dg = (-3.0 * g[0, :] + 4.0 * g[1, :] - g[2, :]) / (2.0 * dt)
    boundary = state.C_prime * np.outer(g_start, g_start) \
        + (1.0 / state.A_prime) * np.outer(dg, dg)
    vals = c[:, None] * c[None, :] * (conv + boundary)
    return TwoTimeKernel(times=times, values=vals, kind="symmetric")


def response_from_twinning(G: TwoTimeKernel, C_edge, drive: np.ndarray) -> np.ndarray:
    """Q(t) = (1/2) int_t^T G(t, s-t) C(s) drive(s) ds on the grid."""
    c = _coupling_on_grid(C_edge, G.times)
    return 0.5 * _apply(G.values, c * np.asarray(drive, dtype=float), G.dt)


def ode_response_check(kI_upstream: TwoTimeKernel, params: ModelParams,
                       drive: np.ndarray, T: float | None = None,
                       dt: float | None = None, C_edge: float | None = None,
                       tol: float = 1e-12, max_iter: int = 400) -> np.ndarray:
    """Backward response to a deviation drive by iterated quadrature.

    Solves ``(m/2)Q'' + (m omega^2/2) Q = (1/2) C drive + int_t^T kI Q`` with
    rest conditions at T, never referencing the dressed response: the bare
    kernel is applied repeatedly until the history stops changing.  The
    result must agree with :func:`response_from_twinning` built from
    :func:`twinning_solve` on the same grid.
    """
    times = kI_upstream.times
    grid_dt = kI_upstream.dt
    if dt is not None and abs(dt - grid_dt) > 1e-9 * grid_dt:
        raise ShapeError("dt disagrees with the kernel grid")
    if T is not None and abs(T - times[-1]) > 1e-9 * max(1.0, abs(T)):
        raise ShapeError("T disagrees with the kernel grid")
    omega = math.sqrt(params.omega_sq)
    if grid_dt * omega > 0.5:
        raise AccuracyError(
            f"dt={grid_dt:.3g} too coarse for the oscillation period "
            f"{2 * math.pi / omega:.3g}; backward quadrature would be unstable")
    drive = np.asarray(drive, dtype=float)
    if drive.shape != times.shape:
        raise ShapeError("drive must be sampled on the kernel grid")
    c = params.C if C_edge is None else C_edge
    lag = times[None, :] - times[:, None]
    a = np.where(lag >= 0, bare_response(params, np.maximum(lag, 0.0)), 0.0)
    source = 0.5 * _coupling_on_grid(c, times) * drive
    q = _apply(a, source, grid_dt)
    for _ in range(max_iter):
        q_new = _apply(a, source + _apply(kI_upstream.values, q, grid_dt),
                       grid_dt)
        delta = np.abs(q_new - q).max()
        q = q_new
        if delta <= tol * max(1.0, np.abs(q).max()):
            return q
    raise AccuracyError("backward response iteration did not converge; "
                        "reduce the window or the kernel strength")
