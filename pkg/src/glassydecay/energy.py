"""Energy functional, its time derivative, and the multiplier identity.

The energy of a modal trajectory is

    E = 1/2 ||u'||^2 + 1/2 (1 - int_0^t k) ||A^{1/2} u||^2
        + 1/2 int_0^t k(t-s) ||A^{1/2}(u(s) - u(t))||^2 ds

and for a glassy kernel ``1 - int_0^t k`` is the tail mass ``int_t^inf k``.

Two routes are implemented. The fast route expands the history term under
each exponential weight,

    int_0^t b e^{-r(t-s)} (u(s) - u(t))^2 ds = w - 2 u z + u^2 I(t),

with ``z``, ``w`` the auxiliaries carried by the RK4 simulator and
``I(t) = (b/r)(1 - e^{-rt})`` in closed form. The direct route evaluates the
history integral by the trapezoid rule over the stored displacement history
and works for any trajectory, including tabulated kernels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import PronyKernel, TabulatedKernel
from .simulator import Trajectory, kernel_on_grid

__all__ = [
    "EnergyBreakdown",
    "EnergySeries",
    "energy_fast",
    "energy_rate",
    "energy_direct",
    "energy_rate_direct",
    "energy_series",
    "lemma1_terms",
    "lemma1_residual",
    "trapezoid",
]


@dataclass
class EnergyBreakdown:
    kinetic: np.ndarray | float
    elastic: np.ndarray | float
    history: np.ndarray | float

    @property
    def total(self):
        return self.kinetic + self.elastic + self.history


@dataclass
class EnergySeries:
    """Energy components and ``E'`` on a time grid."""

    times: np.ndarray
    kinetic: np.ndarray
    elastic: np.ndarray
    history: np.ndarray
    rate: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        for name in ("kinetic", "elastic", "history", "rate"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        self.total = self.kinetic + self.elastic + self.history

    @property
    def E0(self) -> float:
        return float(self.total[0])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def index(self, t) -> int:
        dt = self.dt
        j = int(round(float(t) / dt)) if dt > 0 else 0
        if not 0 <= j < len(self.times) or abs(self.times[j] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t = {t!r} is not on the energy grid")
        return j

    def breakdown(self, j) -> EnergyBreakdown:
        return EnergyBreakdown(self.kinetic[j], self.elastic[j], self.history[j])


def trapezoid(y, dt, axis=0):
    """Composite trapezoid rule on a uniform grid."""
    return np.trapezoid(y, dx=dt, axis=axis)


def _mode_sum(a):
    # reduce the trailing mode axis in ascending mode order
    out = np.zeros(a.shape[:-1])
    for m in range(a.shape[-1]):
        out = out + a[..., m]
    return out


def _require_fast(kernel, z, w):
    if not isinstance(kernel, PronyKernel):
        raise TypeError("fast energy needs a PronyKernel; use energy_direct")
    if z.shape[-1] != kernel.n_terms or w.shape[-1] != kernel.n_terms:
        raise ValueError(
            "state lacks per-term auxiliaries (direct-path trajectory?); use energy_direct"
        )


def _require_fast_trajectory(traj):
    if traj.method != "fast":
        raise ValueError(f"{traj.method}-path trajectory has no per-term auxiliaries; use energy_direct")
    _require_fast(traj.kernel, traj.z, traj.w)


def _history_terms(kernel, u, z, w, t):
    # per mode and term: int_0^t b_i e^{-r_i(t-s)} (u(s) - u(t))^2 ds
    I = kernel.partial_mass(t)
    return w - 2.0 * u[..., None] * z + (u * u)[..., None] * I[..., None, :]


def energy_fast(op, kernel, u, v, z, w, t):
    """Energy from fast-path state.

    Parameters
    ----------
    op : SpectralOperator
    kernel : PronyKernel
    u, v : array_like, shape (..., M)
    z, w : array_like, shape (..., M, N)
        Memory and energy auxiliaries.
    t : float or array_like, shape (...)

    Returns
    -------
    EnergyBreakdown
    """
    u, v, z, w = (np.asarray(a, dtype=float) for a in (u, v, z, w))
    _require_fast(kernel, z, w)
    t = np.asarray(t, dtype=float)
    lam = op.eigenvalues
    kinetic = 0.5 * _mode_sum(v * v)
    elastic = 0.5 * kernel.elastic_weight(t) * _mode_sum(lam * u * u)
    hist = _history_terms(kernel, u, z, w, t)
    history = 0.5 * _mode_sum(lam * _ordered_terms(hist))
    return EnergyBreakdown(kinetic, elastic, history)


def _ordered_terms(a):
    out = np.zeros(a.shape[:-1])
    for i in range(a.shape[-1]):
        out = out + a[..., i]
    return out


def energy_rate(op, kernel, u, z, w, t):
    """``E'(t)`` from fast-path state.

    ``1/2 int k'(t-s) ||A^{1/2}(u(s)-u(t))||^2 ds - 1/2 k(t) ||A^{1/2}u||^2``,
    where the ``k'`` weight of term ``i`` is ``-r_i`` times its ``k`` weight.
    """
    u, z, w = (np.asarray(a, dtype=float) for a in (u, z, w))
    _require_fast(kernel, z, w)
    t = np.asarray(t, dtype=float)
    lam = op.eigenvalues
    hist = _history_terms(kernel, u, z, w, t) * -kernel.rates
    return 0.5 * _mode_sum(lam * _ordered_terms(hist)) - 0.5 * kernel.eval(t) * _mode_sum(lam * u * u)


def _elastic_weights(kernel, traj):
    if isinstance(kernel, TabulatedKernel):
        return 1.0 - kernel.cumulative_mass(traj.n_points)
    return kernel.elastic_weight(traj.times)


def energy_direct(traj, t):
    """Energy at grid time ``t`` with the history term by trapezoid quadrature.

    Works for fast and direct trajectories alike. Off-grid ``t`` raises.
    """
    j = traj.index(t)
    kinetic, elastic, history, _ = _direct_arrays(traj, np.array([j]))
    return EnergyBreakdown(float(kinetic[0]), float(elastic[0]), float(history[0]))


def energy_rate_direct(traj, t):
    """``E'(t)`` with the ``k'``-weighted history integral by trapezoid quadrature."""
    j = traj.index(t)
    return float(_direct_arrays(traj, np.array([j]))[3][0])


def energy_series(traj, method=None, every=1):
    """Energy along a trajectory.

    Parameters
    ----------
    traj : Trajectory
    method : {"fast", "direct"}, optional
        Defaults to the trajectory's own method. ``"fast"`` needs per-term
        auxiliaries.
    every : int
        Direct route only: evaluate at every ``every``-th grid point.

    Returns
    -------
    EnergySeries
    """
    method = method or traj.method
    if method == "fast":
        _require_fast_trajectory(traj)
        t = traj.times
        e = energy_fast(traj.operator, traj.kernel, traj.u, traj.v, traj.z, traj.w, t)
        rate = energy_rate(traj.operator, traj.kernel, traj.u, traj.z, traj.w, t)
        return EnergySeries(t, e.kinetic, e.elastic, e.history, rate)
    if method != "direct":
        raise ValueError(f"unknown energy method {method!r}")
    idx = np.arange(0, traj.n_points, int(every))
    kinetic, elastic, history, rate = _direct_arrays(traj, idx)
    return EnergySeries(traj.times[idx], kinetic, elastic, history, rate)


def _direct_arrays(traj, idx):
    lam = traj.operator.eigenvalues
    n, dt = traj.n_points, traj.dt
    K = kernel_on_grid(traj.kernel, dt, n)
    if isinstance(traj.kernel, TabulatedKernel):
        Kp = traj.kernel.derivative_on_grid(n)
    else:
        Kp = traj.kernel.eval_derivative(traj.times)
    U = traj.u
    h1 = np.empty(idx.size)
    h2 = np.empty(idx.size)
    for out, j in enumerate(idx):
        if j == 0:
            h1[out] = h2[out] = 0.0
            continue
        d = U[: j + 1] - U[j]
        f = np.einsum("jm,m->j", d * d, lam)
        kw, kpw = K[j::-1], Kp[j::-1]
        # f[-1] = 0, so only the s = 0 endpoint needs the half weight
        h1[out] = dt * (kw @ f - 0.5 * kw[0] * f[0])
        h2[out] = dt * (kpw @ f - 0.5 * kpw[0] * f[0])
    u2 = np.einsum("jm,m->j", U[idx] ** 2, lam)
    kinetic = 0.5 * _mode_sum(traj.v[idx] ** 2)
    elastic = 0.5 * _elastic_weights(traj.kernel, traj)[idx] * u2
    rate = 0.5 * h2 - 0.5 * K[idx] * u2
    return kinetic, elastic, 0.5 * h1, rate


def lemma1_terms(traj):
    """Pointwise integrands of the multiplier identity along a fast trajectory.

    Returns ``(kin, cross, defect, bracket)`` with ``kin = ||u'||^2``,
    ``cross = <u', (k*u)'>``, ``defect = ||A^{1/2}(u - k*u)||^2`` and
    ``bracket = <u', u - k*u>``; inner products sum over modes.
    """
    kernel = traj.kernel
    _require_fast_trajectory(traj)
    lam = traj.operator.eigenvalues
    u, v, z = traj.u, traj.v, traj.z
    conv = _ordered_terms(z)
    dconv = _ordered_terms(kernel.weights * u[..., None] - kernel.rates * z)
    gap = u - conv
    return (
        _mode_sum(v * v),
        _mode_sum(v * dconv),
        _mode_sum(lam * gap * gap),
        _mode_sum(v * gap),
    )


def lemma1_residual(traj, S, T, terms=None, E0=None):
    """Check ``int_S^T ||u'||^2 = int <u',(k*u)'> + int ||A^{1/2}(u - k*u)||^2 + [<u', u - k*u>]_S^T``.

    Integrals use the trapezoid rule on the trajectory grid.

    Returns
    -------
    lhs, rhs, residual : float
        ``residual = |lhs - rhs| / max(|lhs|, |rhs|, floor)`` with
        ``floor = 1e-14 E(0) (T - S)``; zero when both sides vanish.
    """
    i, j = traj.index(S), traj.index(T)
    if i > j:
        raise ValueError("need S <= T")
    kin, cross, defect, bracket = terms if terms is not None else lemma1_terms(traj)
    if E0 is None:
        e = energy_fast(traj.operator, traj.kernel, traj.u[0], traj.v[0], traj.z[0], traj.w[0], 0.0)
        E0 = float(e.total)
    sl = slice(i, j + 1)
    lhs = float(trapezoid(kin[sl], traj.dt)) if j > i else 0.0
    rhs = (
        (float(trapezoid(cross[sl], traj.dt)) + float(trapezoid(defect[sl], traj.dt)) if j > i else 0.0)
        + float(bracket[j] - bracket[i])
    )
    floor = 1e-14 * E0 * (traj.times[j] - traj.times[i])
    denom = max(abs(lhs), abs(rhs), floor)
    residual = abs(lhs - rhs) / denom if denom > 0 else 0.0
    return lhs, rhs, residual
