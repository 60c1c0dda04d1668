"""Decay constant, exponential bound, integral criterion and rate fitting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import energy_series, trapezoid
from .kernels import validate
from .simulator import simulate

__all__ = [
    "theoretical_alpha",
    "scenario_alpha",
    "check_bound",
    "KomornikResult",
    "check_komornik",
    "fit_decay_rate",
    "default_window",
    "DecayReport",
    "decay_report",
    "SweepRow",
    "sweep_eta",
]

RESOLUTION_FLOOR = 1e-13


def theoretical_alpha(k0, C, eta):
    """Decay constant ``1 / (2 ((k0 + 2)/C + 1 + 3/eta))``.

    Parameters
    ----------
    k0 : float
        Kernel value at zero.
    C : float
        Coercivity constant of the operator.
    eta : float
        Kernel decay rate, ``k' <= -eta k``.
    """
    for name, x in (("k0", k0), ("C", C), ("eta", eta)):
        if not x > 0:
            raise ValueError(f"{name} must be positive, got {x}")
    return 1.0 / (2.0 * ((k0 + 2.0) / C + 1.0 + 3.0 / eta))


def scenario_alpha(kernel, op, eta=None):
    """``theoretical_alpha`` for a kernel/operator pair.

    The empty kernel has no ``k(0) > 0`` or ``eta``; it gets the formula's
    limit ``k0 -> 0``, ``eta -> inf``, i.e. ``1 / (2 (2/C + 1))``. That value is
    only a yardstick for the conservative negative control.
    """
    C = op.coercivity
    if kernel.n_terms == 0:
        return 1.0 / (2.0 * (2.0 / C + 1.0))
    eta = kernel.extract_eta() if eta is None else eta
    return theoretical_alpha(kernel.k0, C, eta)


def check_bound(energies, alpha, bound_tolerance=1e-8):
    """Largest ratio ``E(t) / (E(0) e^{1 - alpha t})`` on the grid.

    Returns ``(margin, passed)``; zero initial energy passes with margin 0.
    """
    E = energies.total
    E0 = float(E[0])
    if E0 <= 0:
        return 0.0, True
    # ratio computed in log space to avoid overflow of e^{alpha t}
    with np.errstate(divide="ignore"):
        logratio = np.log(np.maximum(E, 0.0) / E0) - 1.0 + alpha * energies.times
    margin = float(np.exp(np.max(logratio)))
    return margin, margin <= 1.0 + bound_tolerance


@dataclass
class KomornikResult:
    S: list
    margins: list
    unresolved: list
    truncation_ratio: float
    tail_rate: float | None
    passed: bool

    @property
    def max_margin(self) -> float:
        vals = [m for m in self.margins if not math.isnan(m)]
        return max(vals) if vals else 0.0


def check_komornik(
    energies,
    alpha,
    S_grid,
    tolerance=1e-6,
    truncation_cap=1e-4,
    tail_rate=None,
    resolution=RESOLUTION_FLOOR,
):
    """Margins ``alpha int_S^T E / E(S)`` of the integral decay criterion.

    The infinite-horizon integral is truncated at the final time ``T``. When
    ``tail_rate`` is given, ``E(T) / tail_rate`` is added as a bound on
    ``int_T^inf E`` (valid for a decreasing energy decaying at least that
    fast). ``S`` values with ``E(S) < resolution * E(0)`` are reported as
    unresolved rather than divided by.

    Returns
    -------
    KomornikResult
        Passes iff every resolved margin is ``<= 1 + tolerance`` and
        ``E(T) / min resolved E(S) <= truncation_cap``.
    """
    E = energies.total
    dt = energies.dt
    E0 = float(E[0])
    ET = float(E[-1])
    if tail_rate is None:
        tail = 0.0
    elif tail_rate > 0:
        tail = ET / tail_rate
    else:
        tail = math.inf

    # cumulative trapezoid so every S costs O(1)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * dt * (E[1:] + E[:-1]))))
    margins, unresolved, resolved_E = [], [], []
    S_list = [float(s) for s in S_grid]
    for S in S_list:
        j = energies.index(S)
        ES = float(E[j])
        if E0 <= 0 or ES < resolution * E0:
            margins.append(math.nan)
            unresolved.append(S)
            continue
        integral = cum[-1] - cum[j] + tail
        margins.append(alpha * integral / ES if integral > 0 else 0.0)
        resolved_E.append(ES)
    if resolved_E:
        truncation_ratio = ET / min(resolved_E)
    else:
        truncation_ratio = 0.0 if E0 <= 0 else math.inf
    passed = all(m <= 1.0 + tolerance for m in margins if not math.isnan(m)) and (
        truncation_ratio <= truncation_cap
    )
    return KomornikResult(S_list, margins, unresolved, truncation_ratio, tail_rate, passed)


def default_window(T):
    return (0.25 * T, 0.75 * T)


def fit_decay_rate(energies, window=None):
    """Least-squares fit of ``log E = intercept - rate * t`` over a window.

    Parameters
    ----------
    energies : EnergySeries
    window : (float, float), optional
        Defaults to ``[0.25 T, 0.75 T]``.

    Returns
    -------
    rate, intercept, r_squared : float
        ``r_squared`` is 1 for data with no variance in ``log E``.
    """
    t = energies.times
    a, b = window if window is not None else default_window(float(t[-1]))
    eps = 1e-9 * max(1.0, abs(b))
    sel = (t >= a - eps) & (t <= b + eps)
    if np.count_nonzero(sel) < 10:
        raise ValueError(f"fit window [{a}, {b}] holds fewer than 10 grid points")
    E = energies.total[sel]
    if np.any(E <= 0):
        raise ValueError("energy underflow, shrink window")
    x, y = t[sel], np.log(E)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    # no variance beyond roundoff in log E: the fit is exact by definition
    flat = ss_tot <= y.size * (1e-12 * max(1.0, float(np.max(np.abs(y))))) ** 2
    r2 = 1.0 if flat else 1.0 - ss_res / ss_tot
    return float(-slope), float(intercept), r2


@dataclass
class DecayReport:
    alpha_theory: float
    alpha_fitted: float
    fit_r_squared: float
    bound_margin: float
    komornik: KomornikResult
    verdicts: dict = field(default_factory=dict)

    @property
    def komornik_margins(self):
        return list(zip(self.komornik.S, self.komornik.margins))

    @property
    def truncation_ratio(self):
        return self.komornik.truncation_ratio

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())


def decay_report(
    energies,
    alpha,
    S_grid=None,
    window=None,
    bound_tolerance=1e-8,
    komornik_tolerance=1e-6,
    truncation_cap=1e-4,
    tail_correction=True,
):
    """Run the bound check, the integral criterion and the rate fit together.

    The fitted rate doubles as the tail rate for the Komornik check. If the
    fit fails (energy underflow) the tail correction is disabled and the
    fitted rate is reported as NaN.
    """
    T = float(energies.times[-1])
    if S_grid is None:
        S_grid = list(range(0, int(math.floor(T / 2)) + 1))
    try:
        rate, _, r2 = fit_decay_rate(energies, window)
    except ValueError:
        rate, r2 = math.nan, math.nan
    margin, bound_ok = check_bound(energies, alpha, bound_tolerance)
    tail_rate = rate if tail_correction and not math.isnan(rate) else None
    kom = check_komornik(energies, alpha, S_grid, komornik_tolerance, truncation_cap, tail_rate)
    verdicts = {"bound": bound_ok, "komornik": kom.passed}
    return DecayReport(alpha, rate, r2, margin, kom, verdicts)


@dataclass
class SweepRow:
    eta: float
    k0: float = math.nan
    alpha_theory: float = math.nan
    alpha_fitted: float = math.nan
    bound_margin: float = math.nan
    komornik_max: float = math.nan
    skipped: str = ""


def sweep_eta(base_kernel, eta_values, op, init, T, dt, S_grid=None, window=None):
    """Decay constant against kernel rate, one independent run per ``eta``.

    Each row's kernel is ``base_kernel.rescaled(eta)``: rates scaled so the
    slowest equals ``eta``, weights renormalized to unit mass (a single term
    becomes ``b = r = eta``). Rows whose kernel cannot be built or validated
    are kept with a skip reason.
    """
    rows = []
    for eta in eta_values:
        eta = float(eta)
        try:
            kernel = base_kernel.rescaled(eta)
        except ValueError as exc:
            rows.append(SweepRow(eta, skipped=str(exc)))
            continue
        report = validate(kernel)
        if report.violations:
            rows.append(SweepRow(eta, skipped="; ".join(report.violations)))
            continue
        traj = simulate(op, kernel, init, T, dt)
        energies = energy_series(traj)
        alpha = theoretical_alpha(kernel.k0, op.coercivity, kernel.extract_eta())
        rep = decay_report(energies, alpha, S_grid, window)
        rows.append(
            SweepRow(eta, kernel.k0, alpha, rep.alpha_fitted, rep.bound_margin, rep.komornik.max_margin)
        )
    return rows
