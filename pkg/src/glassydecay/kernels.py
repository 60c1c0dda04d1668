"""Prony-sum memory kernels.

A kernel is the exponential sum ``k(t) = sum_i b_i exp(-r_i t)``. Everything
the decay estimates consume is available in closed form: the value ``k(0)``,
the total mass ``sum_i b_i / r_i``, the tail mass ``int_t^inf k``, and the
largest admissible exponential rate ``eta`` in ``k' <= -eta k``.

A kernel is *glassy* when its mass is exactly one.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Strictness",
    "PronyKernel",
    "TabulatedKernel",
    "KernelReport",
    "DEFAULT_MASS_TOLERANCE",
    "validate",
]

DEFAULT_MASS_TOLERANCE = 1e-9


class Strictness(enum.Enum):
    GLASSY = "glassy"
    SUBCRITICAL = "subcritical"
    RAW = "raw"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown strictness {value!r} (expected one of {names})") from None


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("kernel evaluated at negative time")
    return t


def _merge_terms(b, r):
    # equal rates collapse to one term, order of first appearance kept
    merged: dict[float, float] = {}
    for bi, ri in zip(b, r):
        merged[ri] = merged.get(ri, 0.0) + bi
    rates = list(merged)
    return tuple(merged[ri] for ri in rates), tuple(rates)


@dataclass(frozen=True)
class PronyKernel:
    """Exponential-sum kernel ``k(t) = sum_i b[i] * exp(-r[i] * t)``.

    Parameters
    ----------
    b : sequence of float
        Term weights.
    r : sequence of float
        Term decay rates. Terms sharing a rate are merged.
    strictness : Strictness or str
        ``glassy`` (mass must be one), ``subcritical`` (mass below one) or
        ``raw`` (no mass constraint; may be the empty sum ``k = 0``).

    Construction only checks shapes. Sign and mass requirements are reported
    by :func:`validate`, which returns violations as data.
    """

    b: tuple
    r: tuple
    strictness: Strictness = Strictness.GLASSY

    def __init__(self, b, r, strictness=Strictness.GLASSY):
        b = [float(x) for x in np.atleast_1d(np.asarray(b, dtype=float))]
        r = [float(x) for x in np.atleast_1d(np.asarray(r, dtype=float))]
        if len(b) != len(r):
            raise ValueError(f"got {len(b)} weights but {len(r)} rates")
        if not all(np.isfinite(b + r)):
            raise ValueError("kernel parameters must be finite")
        strictness = Strictness.parse(strictness)
        if not b and strictness is not Strictness.RAW:
            raise ValueError("only a raw kernel may be the empty sum")
        b, r = _merge_terms(b, r)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "strictness", strictness)

    @classmethod
    def from_terms(cls, terms, strictness=Strictness.GLASSY):
        """Build from ``[(b, r), ...]`` pairs."""
        terms = list(terms)
        return cls([t[0] for t in terms], [t[1] for t in terms], strictness)

    @classmethod
    def maxwell(cls, rate):
        """Single-term glassy kernel ``rate * exp(-rate t)``."""
        return cls([rate], [rate], Strictness.GLASSY)

    @classmethod
    def zero(cls):
        """The empty raw kernel ``k = 0`` (conservative wave limit)."""
        return cls([], [], Strictness.RAW)

    @property
    def n_terms(self) -> int:
        return len(self.b)

    @property
    def is_empty(self) -> bool:
        return not self.b

    @property
    def weights(self) -> np.ndarray:
        return np.array(self.b, dtype=float)

    @property
    def rates(self) -> np.ndarray:
        return np.array(self.r, dtype=float)

    @property
    def k0(self) -> float:
        return float(sum(self.b))

    def eval(self, t):
        """Kernel value at ``t >= 0`` (scalar or array)."""
        t = _check_time(t)
        out = np.zeros_like(t)
        for bi, ri in zip(self.b, self.r):
            out = out + bi * np.exp(-ri * t)
        return out if out.ndim else float(out)

    def eval_derivative(self, t):
        """``k'(t) = -sum_i b_i r_i exp(-r_i t)``."""
        t = _check_time(t)
        out = np.zeros_like(t)
        for bi, ri in zip(self.b, self.r):
            out = out - bi * ri * np.exp(-ri * t)
        return out if out.ndim else float(out)

    def mass(self) -> float:
        """Closed-form ``int_0^inf k``; zero for the empty kernel."""
        return float(sum(bi / ri for bi, ri in zip(self.b, self.r)))

    def tail_mass(self, t):
        """Closed-form ``int_t^inf k(s) ds``."""
        t = _check_time(t)
        out = np.zeros_like(t)
        for bi, ri in zip(self.b, self.r):
            out = out + (bi / ri) * np.exp(-ri * t)
        return out if out.ndim else float(out)

    def elastic_weight(self, t):
        """Coefficient ``1 - int_0^t k`` of the elastic energy.

        For glassy kernels this is the tail mass. Otherwise the
        ``1 - mass + tail`` form is used, which stays exact when the mass
        differs from one.
        """
        if self.strictness is Strictness.GLASSY:
            return self.tail_mass(t)
        return (1.0 - self.mass()) + self.tail_mass(t)

    def partial_mass(self, t):
        """``I_i(t) = (b_i / r_i) (1 - exp(-r_i t))`` per term, last axis."""
        t = _check_time(t)
        b, r = self.weights, self.rates
        return (b / r) * -np.expm1(-r * np.multiply.outer(t, np.ones_like(r)))

    def extract_eta(self) -> float:
        """Largest ``eta`` with ``k' <= -eta k`` everywhere, i.e. ``min r_i``."""
        if self.is_empty:
            raise ValueError("eta is undefined for the empty kernel")
        return float(min(self.r))

    def normalized(self):
        """Copy with all weights scaled by ``1 / mass`` (forces mass one)."""
        m = self.mass()
        if m <= 0:
            raise ValueError("cannot normalize a kernel with nonpositive mass")
        return PronyKernel([bi / m for bi in self.b], self.r, self.strictness)

    def rescaled(self, eta):
        """Glassy kernel of the same shape whose slowest rate equals ``eta``.

        All rates are multiplied by ``eta / min(r)`` and the weights are
        renormalized to unit mass. A single term becomes ``b = r = eta``.
        """
        if not np.isfinite(eta) or eta <= 0:
            raise ValueError(f"eta must be positive, got {eta}")
        scale = eta / self.extract_eta()
        r = [ri * scale for ri in self.r]
        m = sum(bi / ri for bi, ri in zip(self.b, r))
        return PronyKernel([bi / m for bi in self.b], r, Strictness.GLASSY)

    def sample(self, dt, n):
        """Tabulate on ``t_j = j dt``, ``j = 0..n-1``."""
        return TabulatedKernel(dt, self.eval(np.arange(n) * dt))


@dataclass(frozen=True)
class TabulatedKernel:
    """Kernel known only through samples ``values[j] = k(j * dt)``.

    Second-class input, accepted by the direct-quadrature simulator and
    energy path. Mass-type quantities use trapezoid sums on the grid, and the
    glassy identity ``1 - int_0^t k = int_t^inf k`` is not assumed.
    """

    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("need at least two kernel samples")
        if self.dt <= 0:
            raise ValueError("sample spacing must be positive")
        object.__setattr__(self, "values", values)

    strictness = Strictness.RAW

    @property
    def k0(self) -> float:
        return float(self.values[0])

    def on_grid(self, dt, n):
        if not np.isclose(dt, self.dt, rtol=1e-12, atol=0):
            raise ValueError(f"kernel tabulated at dt={self.dt}, simulation uses dt={dt}")
        if n > self.values.size:
            raise ValueError(f"kernel has {self.values.size} samples, need {n}")
        return self.values[:n]

    def cumulative_mass(self, n):
        """Trapezoid ``int_0^{t_j} k`` for ``j < n``."""
        vals = self.values[:n]
        out = np.zeros(n)
        out[1:] = np.cumsum(0.5 * self.dt * (vals[1:] + vals[:-1]))
        return out

    def derivative_on_grid(self, n):
        return np.gradient(self.values[:n], self.dt)


@dataclass
class KernelReport:
    """Kernel-level quantities plus a list of failed assumptions."""

    mass: float
    k0: float
    eta: float
    is_glassy: bool
    strictness: Strictness
    n_terms: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_text(self) -> str:
        lines = [
            f"kernel: {self.n_terms} term(s), strictness {self.strictness.value}",
            f"  k(0)  = {self.k0:.17g}",
            f"  mass  = {self.mass:.17g}",
            f"  eta   = {self.eta:.17g}",
            f"  glassy: {'yes' if self.is_glassy else 'no'}",
        ]
        if self.violations:
            lines.append("violations:")
            lines.extend(f"  - {v}" for v in self.violations)
        else:
            lines.append("violations: none")
        return "\n".join(lines)

    def as_key_values(self) -> str:
        pairs = [
            ("strictness", self.strictness.value),
            ("n_terms", self.n_terms),
            ("k0", f"{self.k0:.17g}"),
            ("mass", f"{self.mass:.17g}"),
            ("eta", f"{self.eta:.17g}"),
            ("is_glassy", str(self.is_glassy).lower()),
            ("violations", len(self.violations)),
        ]
        return "\n".join(f"{k}={v}" for k, v in pairs)


def validate(kernel, mass_tolerance=DEFAULT_MASS_TOLERANCE, eta=None):
    """Check a kernel against the standing assumptions of the decay theorem.

    Parameters
    ----------
    kernel : PronyKernel
    mass_tolerance : float
        Allowed ``|mass - 1|`` for a glassy kernel.
    eta : float, optional
        User-chosen decay rate; must satisfy ``0 < eta <= min r_i``.
        Defaults to ``min r_i``.

    Returns
    -------
    KernelReport
        Never raises for bad kernels; failures are listed in ``violations``.
    """
    if not mass_tolerance > 0:
        raise ValueError("mass_tolerance must be positive")
    violations = []
    b, r = kernel.weights, kernel.rates
    if kernel.is_empty and kernel.strictness is not Strictness.RAW:
        violations.append("empty kernel is only allowed with raw strictness")
    for i, bi in enumerate(b):
        if bi <= 0:
            violations.append(f"weight b[{i}] = {bi:g} is not positive")
    for i, ri in enumerate(r):
        if ri <= 0:
            violations.append(f"rate r[{i}] = {ri:g} is not positive")
    positive = bool(np.all(r > 0))
    mass = kernel.mass() if positive else float("nan")
    is_glassy = bool(positive and abs(mass - 1.0) <= mass_tolerance)

    if positive:
        if kernel.strictness is Strictness.GLASSY and not is_glassy:
            violations.append(f"mass {mass:.12g} != 1 (glassy kernel, tolerance {mass_tolerance:g})")
        if kernel.strictness is Strictness.SUBCRITICAL and mass >= 1.0:
            violations.append(f"mass {mass:.12g} >= 1 (subcritical kernel)")
        if mass > 1.0 + mass_tolerance:
            violations.append(f"mass {mass:.12g} > 1: elastic coefficient 1 - int k turns negative")

    if kernel.is_empty or not positive:
        max_eta = float("nan")
    else:
        max_eta = kernel.extract_eta()
    if eta is None:
        eta_used = max_eta
    else:
        eta_used = float(eta)
        if not eta_used > 0:
            violations.append(f"eta = {eta_used:g} is not positive")
        elif np.isfinite(max_eta) and eta_used > max_eta * (1 + 1e-15):
            violations.append(f"eta = {eta_used:g} exceeds min rate {max_eta:g}: k' <= -eta k fails")

    return KernelReport(
        mass=mass if not kernel.is_empty else 0.0,
        k0=kernel.k0,
        eta=eta_used,
        is_glassy=is_glassy,
        strictness=kernel.strictness,
        n_terms=kernel.n_terms,
        violations=violations,
    )
