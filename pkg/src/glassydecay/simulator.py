"""Time integration of ``u'' + A u - (k * A u) = 0`` in the eigenbasis of ``A``.

Each mode obeys the scalar Volterra equation
``u'' = -lambda u + lambda (k * u)``. Three integrators are provided:

* :func:`simulate` -- fast path. For a Prony kernel the convolution is
  carried by auxiliaries ``z_i = b_i e^{-r_i t} * u`` with
  ``z_i' = -r_i z_i + b_i u``; energy auxiliaries ``w_i`` do the same with
  ``u^2``. The augmented system is integrated by classical RK4.
* :func:`simulate_direct` -- oracle path. The convolution is a composite
  trapezoid sum over the stored history, time stepping is trapezoidal
  (Crank-Nicolson). Second order, ``O(n^2)`` work, accepts tabulated kernels.
* :func:`exact_modal_solution` -- closed form for one mode and one
  exponential term.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .kernels import PronyKernel, Strictness, TabulatedKernel, validate
from .operator import InitialData, SpectralOperator

__all__ = [
    "ModalState",
    "Trajectory",
    "modal_rhs",
    "simulate",
    "simulate_direct",
    "exact_modal_solution",
    "step_count",
]

STABILITY_LIMIT = 2.8
_HISTORY_BLOCK = 128


@dataclass
class ModalState:
    """State of one mode: displacement, velocity and per-term auxiliaries."""

    u: float
    v: float
    z: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.z = np.atleast_1d(np.asarray(self.z, dtype=float))
        self.w = np.atleast_1d(np.asarray(self.w, dtype=float))

    @property
    def conv(self) -> float:
        """``(k * u)(t)``, the sum of the memory auxiliaries."""
        return float(np.sum(self.z))


def modal_rhs(lam, kernel, s):
    """Time derivative of a :class:`ModalState` under the augmented system.

    ``u' = v``, ``v' = -lam u + lam sum(z)``, ``z_i' = -r_i z_i + b_i u``,
    ``w_i' = -r_i w_i + b_i u^2``.
    """
    n = kernel.n_terms
    if s.z.size != n or s.w.size != n:
        raise ValueError(f"state has {s.z.size} memory terms, kernel has {n}")
    b, r = kernel.weights, kernel.rates
    return ModalState(
        u=s.v,
        v=-lam * s.u + lam * s.conv,
        z=-r * s.z + b * s.u,
        w=-r * s.w + b * s.u * s.u,
    )


@dataclass
class Trajectory:
    """Uniform-grid solution history for every mode.

    Arrays are indexed ``[step, mode]`` and ``[step, mode, term]``. On the
    fast path ``z`` and ``w`` hold one column per Prony term; on the direct
    path they hold a single column with the quadrature values of
    ``k * u`` and ``k * u^2``.
    """

    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    z: np.ndarray
    w: np.ndarray
    kernel: object
    operator: SpectralOperator
    method: str
    dt: float = field(default=0.0)

    @property
    def n_points(self) -> int:
        return self.times.size

    @property
    def n_modes(self) -> int:
        return self.u.shape[1]

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def conv(self) -> np.ndarray:
        """``(k * u)(t_j)`` per mode, shape ``(n_points, n_modes)``."""
        return _ordered_sum(self.z)

    def index(self, t) -> int:
        """Grid index of time ``t``; raises if ``t`` is not a grid point."""
        j = int(round(float(t) / self.dt)) if self.dt > 0 else 0
        if not 0 <= j < self.n_points or abs(self.times[j] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t = {t!r} is not on the trajectory grid (dt = {self.dt})")
        return j

    def state(self, j, mode):
        return ModalState(self.u[j, mode], self.v[j, mode], self.z[j, mode], self.w[j, mode])

    def mode(self, m):
        """Single-mode view (as if simulated alone)."""
        op = SpectralOperator(self.operator.eigenvalues[m : m + 1], label=self.operator.label)
        return Trajectory(
            self.times, self.u[:, m : m + 1], self.v[:, m : m + 1], self.z[:, m : m + 1],
            self.w[:, m : m + 1], self.kernel, op, self.method, self.dt,
        )


def _ordered_sum(a):
    # fixed left-to-right order over the last axis, independent of the other axes
    out = np.zeros(a.shape[:-1])
    for i in range(a.shape[-1]):
        out = out + a[..., i]
    return out


def step_count(T, dt):
    """Number of steps ``floor(T / dt)``, robust to ``T / dt`` landing just below an integer."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not T >= dt:
        raise ValueError(f"final time T = {T} is smaller than dt = {dt}")
    ratio = T / dt
    n = round(ratio)
    if abs(ratio - n) <= 1e-9 * ratio:
        return int(n)
    return int(np.floor(ratio))


def _check_inputs(op, kernel, init, T, dt):
    n = step_count(T, dt)
    init.check(op)
    if isinstance(kernel, PronyKernel):
        report = validate(kernel)
        if report.violations:
            raise ValueError("kernel rejected: " + "; ".join(report.violations))
        rmax = max(kernel.r, default=0.0)
    else:
        rmax = 0.0
    lmax = float(op.eigenvalues[-1])
    if dt * np.sqrt(lmax) > STABILITY_LIMIT or dt * rmax > STABILITY_LIMIT:
        warnings.warn(
            f"dt = {dt:g} violates the explicit stability guide "
            f"(dt*sqrt(lambda_max) = {dt * np.sqrt(lmax):.3g}, dt*max(r) = {dt * rmax:.3g}, limit {STABILITY_LIMIT})",
            RuntimeWarning,
            stacklevel=3,
        )
    return n


def simulate(op, kernel, init, T, dt):
    """Integrate every mode with fixed-step classical RK4.

    Parameters
    ----------
    op : SpectralOperator
    kernel : PronyKernel
        Must pass :func:`~glassydecay.kernels.validate` (raw kernels skip
        the mass requirement).
    init : InitialData
    T, dt : float
        Final time and step; the grid has ``floor(T/dt) + 1`` points.

    Returns
    -------
    Trajectory
        ``method == "fast"``. Modes are integrated with elementwise
        operations only, so a mode's history does not depend on which other
        modes were integrated alongside it.
    """
    if not isinstance(kernel, PronyKernel):
        raise TypeError("the fast path needs a PronyKernel; use simulate_direct for tabulated kernels")
    n = _check_inputs(op, kernel, init, T, dt)
    M, N = op.n_modes, kernel.n_terms

    D, S = rk4_propagators(op, kernel, dt)
    dw, Bq = rk4_quadrature_weights(kernel, dt)

    U = np.empty((n + 1, M))
    V = np.empty((n + 1, M))
    Z = np.empty((n + 1, M, N))
    W = np.empty((n + 1, M, N))
    y = np.zeros((M, 2 + N))
    y[:, 0] = init.u0
    y[:, 1] = init.v0
    w = np.zeros((M, N))
    U[0], V[0], Z[0], W[0] = y[:, 0], y[:, 1], y[:, 2:], w
    for j in range(1, n + 1):
        stages = np.einsum("msj,mj->ms", S, y)
        w = w + (dw * w + np.einsum("ms,ns->mn", stages * stages, Bq))
        y = y + np.einsum("mij,mj->mi", D, y)
        U[j], V[j], Z[j], W[j] = y[:, 0], y[:, 1], y[:, 2:], w
    times = np.arange(n + 1) * dt
    return Trajectory(times, U, V, Z, W, kernel, op, "fast", dt)


def modal_matrices(op, kernel):
    """Per-mode matrices ``J`` of the linear part ``(u, v, z)' = J (u, v, z)``."""
    M, N = op.n_modes, kernel.n_terms
    lam = op.eigenvalues
    J = np.zeros((M, 2 + N, 2 + N))
    J[:, 0, 1] = 1.0
    J[:, 1, 0] = -lam
    J[:, 1, 2:] = lam[:, None]
    for i, (bi, ri) in enumerate(zip(kernel.b, kernel.r)):
        J[:, 2 + i, 0] = bi
        J[:, 2 + i, 2 + i] = -ri
    return J


def rk4_propagators(op, kernel, dt):
    """One classical RK4 step written as matrices.

    For the linear part the four stages are polynomials in ``h J``:
    ``Y1 = y``, ``Y2 = (I + h/2 J) y``, ``Y3 = (I + h/2 J (I + h/2 J)) y``,
    ``Y4 = (I + h J P3) y`` and ``y+ = y + D y``. ``D`` is formed directly
    (never as ``G - I``) to keep the increment free of cancellation.
    ``S[m, s]`` extracts the stage value of ``u`` for the quadratic ``w``
    update.
    """
    J = modal_matrices(op, kernel)
    eye = np.broadcast_to(np.eye(J.shape[-1]), J.shape)
    P2 = eye + 0.5 * dt * J
    P3 = eye + 0.5 * dt * J @ P2
    P4 = eye + dt * J @ P3
    D = (dt / 6.0) * J @ (eye + 2.0 * P2 + 2.0 * P3 + P4)
    S = np.stack([eye[:, 0], P2[:, 0], P3[:, 0], P4[:, 0]], axis=1)
    return np.ascontiguousarray(D), np.ascontiguousarray(S)


def rk4_quadrature_weights(kernel, dt):
    """Coefficients of one RK4 step of ``w' = -r w + b u^2``.

    Returns ``dw`` and ``Bq`` with ``w+ = w + dw w + sum_s Bq[:, s] U_s^2``, where
    ``U_s`` are the four stage values of ``u``. Obtained by running the stage
    recurrence on the basis ``(w, q_1..q_4)`` with ``q_s = b U_s^2``.
    """
    r = kernel.rates[:, None]
    e = np.eye(5)
    h = dt
    W1 = e[0]
    k1 = -r * W1 + e[1]
    k2 = -r * (W1 + 0.5 * h * k1) + e[2]
    k3 = -r * (W1 + 0.5 * h * k2) + e[3]
    k4 = -r * (W1 + h * k3) + e[4]
    inc = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return inc[:, 0].copy(), kernel.weights[:, None] * inc[:, 1:]


def kernel_on_grid(kernel, dt, n_points):
    if isinstance(kernel, TabulatedKernel):
        return kernel.on_grid(dt, n_points)
    return kernel.eval(np.arange(n_points) * dt)


def simulate_direct(op, kernel, init, T, dt):
    """Oracle integrator with a trapezoid convolution over the full history.

    The step is the trapezoidal rule applied to ``(u, v)``::

        u+ = u + dt/2 (v + v+)
        v+ = v + dt/2 (a + a+),   a = -lam u + lam C

    with ``C(t_n) = dt [k(t_n) u_0 / 2 + sum_{0<j<n} k(t_n - t_j) u_j + k(0) u_n / 2]``.
    ``a+`` depends linearly on ``u+`` through the last quadrature weight,
    which is solved for exactly. Global error is ``O(dt^2)``.

    History older than the current block of steps enters through a single
    Toeplitz matrix product per block; the quadrature itself is unchanged.

    Returns
    -------
    Trajectory
        ``method == "direct"``; ``z[:, :, 0]`` holds ``C`` and ``w[:, :, 0]``
        holds the same quadrature applied to ``u^2``.
    """
    n = _check_inputs(op, kernel, init, T, dt)
    M = op.n_modes
    lam = op.eigenvalues
    K = kernel_on_grid(kernel, dt, n + 1)
    k0 = K[0]

    # columns [u_1..u_M, u_1^2..u_M^2]; both histories share the quadrature
    X = np.zeros((n + 1, 2 * M))
    V = np.empty((n + 1, M))
    Hist = np.zeros((n + 1, 2 * M))
    X[0, :M] = init.u0
    X[0, M:] = init.u0**2
    V[0] = init.v0
    a = -lam * X[0, :M]
    g = lam * (1.0 - 0.5 * dt * k0)
    inv_denom = 1.0 / (1.0 + 0.25 * dt * dt * g)
    quarter = 0.25 * dt * dt
    half = 0.5 * dt
    dK = dt * K
    for start in range(1, n + 1, _HISTORY_BLOCK):
        stop = min(start + _HISTORY_BLOCK, n + 1)
        # u_0 endpoint plus nodes 1..start-1 for every step of this block in one product:
        # old[b] = dt (K[start + b] X[0] / 2 + sum_{i=1}^{start-1} K[start + b - i] X[i])
        old = np.outer(0.5 * dK[start:stop], X[0])
        if start > 1:
            windows = np.ascontiguousarray(sliding_window_view(dK, start - 1)[1 : stop - start + 1])
            old += windows @ np.ascontiguousarray(X[start - 1 : 0 : -1])
        for j in range(start, stop):
            H = old[j - start] + dK[j - start : 0 : -1] @ X[start:j] if j > start else old[0]
            lam_Hu = lam * H[:M]
            u = (X[j - 1, :M] + dt * V[j - 1] + quarter * (a + lam_Hu)) * inv_denom
            a_new = lam_Hu - g * u
            V[j] = V[j - 1] + half * (a + a_new)
            X[j, :M] = u
            X[j, M:] = u * u
            Hist[j] = H
            a = a_new
    Hist[1:] += half * k0 * X[1:]

    U = X[:, :M].copy()
    C, Q = Hist[:, :M], Hist[:, M:]
    times = np.arange(n + 1) * dt
    return Trajectory(times, U, V, C[:, :, None], Q[:, :, None], kernel, op, "direct", dt)


def _cluster_roots(roots, tol=1e-4):
    """Group numerically repeated roots; returns ``[(root, multiplicity), ...]``.

    Single linkage: a root joins a group if it is close to any member. A
    computed triple root splits by about ``eps**(1/3)``, so the tolerance sits
    well above that; the group mean is accurate since the root sum is.
    """
    groups: list[list[complex]] = []
    for rho in roots:
        hits = [g for g in groups if any(abs(rho - x) <= tol * max(1.0, abs(x)) for x in g)]
        merged = [rho] + [x for g in hits for x in g]
        groups = [g for g in groups if not any(g is h for h in hits)] + [merged]
    return [(complex(np.mean(g)), len(g)) for g in groups]


def exact_modal_solution(lam, kernel, u0, v0, t):
    """Closed-form ``(u, v, z)`` for one mode and a single-term kernel.

    The mode ``u'' = -lam u + lam z``, ``z' = -r z + b u`` has characteristic
    polynomial ``s^3 + r s^2 + lam s + lam (r - b)``. The solution is a sum of
    ``t^j e^{rho t}`` over the roots ``rho`` (``j`` below the multiplicity),
    fitted to ``u(0) = u0``, ``u'(0) = v0``, ``u''(0) = -lam u0``. Roots closer
    than ``1e-4`` (relative) are treated as repeated.

    An empty kernel is the conservative oscillator.
    """
    if not lam > 0:
        raise ValueError("eigenvalue must be positive")
    t = np.asarray(t, dtype=float)
    if kernel.n_terms == 0:
        w = np.sqrt(lam)
        u = u0 * np.cos(w * t) + v0 / w * np.sin(w * t)
        v = -u0 * w * np.sin(w * t) + v0 * np.cos(w * t)
        return u, v, np.zeros_like(u)
    if kernel.n_terms != 1:
        raise NotImplementedError("exact solution only for single-term kernels; use simulate_direct")
    b, r = kernel.b[0], kernel.r[0]
    roots = np.roots([1.0, r, lam, lam * (r - b)])
    basis = [(rho, j) for rho, mult in _cluster_roots(roots) for j in range(mult)]

    # rows: value, first and second derivative at t = 0
    A = np.zeros((3, 3), dtype=complex)
    for col, (rho, j) in enumerate(basis):
        A[0, col] = 1.0 if j == 0 else 0.0
        A[1, col] = rho if j == 0 else (1.0 if j == 1 else 0.0)
        A[2, col] = rho**2 if j == 0 else (2 * rho if j == 1 else 2.0)
    c = np.linalg.solve(A, np.array([u0, v0, -lam * u0], dtype=complex))

    u = np.zeros(t.shape, dtype=complex)
    du = np.zeros(t.shape, dtype=complex)
    ddu = np.zeros(t.shape, dtype=complex)
    for ci, (rho, j) in zip(c, basis):
        e = np.exp(rho * t)
        tj = t**j
        tj1 = j * t ** (j - 1) if j >= 1 else 0.0
        tj2 = j * (j - 1) * t ** (j - 2) if j >= 2 else 0.0
        u += ci * tj * e
        du += ci * (tj1 + rho * tj) * e
        ddu += ci * (tj2 + 2 * rho * tj1 + rho**2 * tj) * e
    z = (ddu + lam * u) / lam
    return u.real, du.real, z.real
