"""Self-adjoint coercive operators in diagonal form.

Only the spectrum of ``A`` is stored. Energies need nothing beyond
``<Ax, x>`` and ``||A^{1/2} x||^2``, which are diagonal in the eigenbasis, so
modal simulation carries no spatial discretization error. Initial data
supported on the retained modes is represented exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpectralOperator",
    "InitialData",
    "dirichlet_laplacian_1d",
    "diagonal_operator",
    "project_function_1d",
    "h1_seminorm_sq",
    "first_mode",
    "equipartition",
    "random_data",
]


@dataclass(frozen=True)
class SpectralOperator:
    """Eigenvalues of ``A`` in ascending order.

    ``length`` is set only for the 1-D Dirichlet Laplacian and enables
    :func:`project_function_1d`.
    """

    eigenvalues: np.ndarray = field(repr=False)
    label: str = "diagonal"
    length: float | None = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        if lam.size == 0:
            raise ValueError("operator needs at least one eigenvalue")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError("eigenvalues must be finite and strictly positive")
        lam = np.sort(lam)
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def coercivity(self) -> float:
        """``C`` in ``<Ax, x> >= C ||x||^2``, the smallest eigenvalue."""
        return float(self.eigenvalues[0])

    C = coercivity

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    def __len__(self):
        return self.n_modes


@dataclass(frozen=True)
class InitialData:
    """Modal coefficients of ``u(0)`` and ``u'(0)``."""

    u0: np.ndarray
    v0: np.ndarray

    def __post_init__(self):
        u0 = np.atleast_1d(np.asarray(self.u0, dtype=float)).copy()
        v0 = np.atleast_1d(np.asarray(self.v0, dtype=float)).copy()
        if u0.shape != v0.shape or u0.ndim != 1:
            raise ValueError("u0 and v0 must be 1-D with equal length")
        u0.setflags(write=False)
        v0.setflags(write=False)
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "v0", v0)

    def check(self, op):
        if self.u0.size != op.n_modes:
            raise ValueError(
                f"initial data has {self.u0.size} modes, operator has {op.n_modes}"
            )

    def __mul__(self, a):
        return InitialData(a * self.u0, a * self.v0)

    __rmul__ = __mul__

    def __add__(self, other):
        return InitialData(self.u0 + other.u0, self.v0 + other.v0)


def dirichlet_laplacian_1d(length, mode_count):
    """``-d^2/dx^2`` on ``(0, length)`` with zero boundary values.

    Eigenpairs are ``lambda_m = (m pi / L)^2`` and
    ``phi_m(x) = sqrt(2/L) sin(m pi x / L)`` for ``m = 1..mode_count``.
    """
    if not length > 0:
        raise ValueError(f"length must be positive, got {length}")
    if int(mode_count) != mode_count or mode_count < 1:
        raise ValueError(f"mode_count must be a positive integer, got {mode_count}")
    m = np.arange(1, int(mode_count) + 1)
    return SpectralOperator((m * np.pi / length) ** 2, label="dirichlet_1d", length=float(length))


def diagonal_operator(eigenvalues, label="diagonal"):
    """Operator from a user-supplied spectrum (sorted on construction)."""
    return SpectralOperator(eigenvalues, label=label)


def eigenfunctions_1d(op, x):
    """Matrix ``phi[m, j] = phi_m(x_j)`` for a 1-D Dirichlet operator."""
    if op.length is None:
        raise ValueError("eigenfunctions are only known for dirichlet_laplacian_1d operators")
    m = np.arange(1, op.n_modes + 1)
    L = op.length
    return np.sqrt(2.0 / L) * np.sin(np.outer(m, x) * np.pi / L)


def project_function_1d(op, samples):
    """Sine coefficients of ``f`` sampled uniformly on ``[0, L]`` (endpoints included).

    Each coefficient ``int_0^L f phi_m dx`` is computed by the composite
    trapezoid rule. Requires at least ``2M + 1`` samples.
    """
    if op.length is None:
        raise ValueError("projection needs an operator built by dirichlet_laplacian_1d")
    f = np.asarray(samples, dtype=float)
    if f.ndim != 1:
        raise ValueError("samples must be 1-D")
    if f.size < 2 * op.n_modes + 1:
        raise ValueError(
            f"insufficient resolution: {f.size} samples for {op.n_modes} modes "
            f"(need at least {2 * op.n_modes + 1})"
        )
    x = np.linspace(0.0, op.length, f.size)
    phi = eigenfunctions_1d(op, x)
    return np.trapezoid(phi * f, x, axis=1)


def h1_seminorm_sq(op, coeffs):
    """``||A^{1/2} u||^2 = sum_m lambda_m u_m^2``."""
    c = np.asarray(coeffs, dtype=float)
    if c.shape[-1] != op.n_modes:
        raise ValueError(f"expected {op.n_modes} coefficients, got {c.shape[-1]}")
    return np.sum(op.eigenvalues * c**2, axis=-1)


def first_mode(op, amplitude=1.0):
    u0 = np.zeros(op.n_modes)
    u0[0] = amplitude
    return InitialData(u0, np.zeros(op.n_modes))


def equipartition(op, k=None):
    """Displacement spread evenly over the first ``k`` modes.

    Every active mode carries ``lambda_m u_m^2 = 1/k``, so the total
    ``||A^{1/2} u0||^2`` is one. Velocities are zero.
    """
    k = op.n_modes if k is None else int(k)
    if not 1 <= k <= op.n_modes:
        raise ValueError(f"equipartition over {k} modes, operator has {op.n_modes}")
    u0 = np.zeros(op.n_modes)
    u0[:k] = 1.0 / np.sqrt(k * op.eigenvalues[:k])
    return InitialData(u0, np.zeros(op.n_modes))


def random_data(op, seed=0, smoothness=2.0):
    """Seeded Gaussian coefficients damped by ``m^-smoothness``.

    The velocity carries an extra ``sqrt(lambda_m)`` so that kinetic and
    elastic contributions are of comparable size per mode.
    """
    rng = np.random.default_rng(seed)
    m = np.arange(1, op.n_modes + 1, dtype=float)
    damp = m**-smoothness
    u0 = rng.standard_normal(op.n_modes) * damp
    v0 = rng.standard_normal(op.n_modes) * damp * np.sqrt(op.eigenvalues) / np.sqrt(op.eigenvalues[0])
    return InitialData(u0, v0)
