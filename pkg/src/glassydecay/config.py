"""Scenario files.

A scenario is a TOML document::

    name = "maxwell_glassy"

    [kernel]
    terms = [{b = 2.0, r = 2.0}]
    strictness = "glassy"      # glassy | subcritical | raw
    normalize = false          # rescale b so that sum b/r = 1
    # eta = 2.0                # optional, must not exceed min r

    [operator]
    type = "diagonal"          # or "dirichlet_1d" with length, modes
    eigenvalues = [1.0]

    [initial]
    u0 = [1.0]                 # or preset = "first_mode" | "equipartition_K" | "random"
    v0 = [0.0]

    [time]
    T = 15.0
    dt = 1e-3

    [checks]                   # all optional
    bound_tolerance = 1e-8

    [output]
    stride = 1

Unknown keys are errors. Every problem found is collected and reported at
once through :class:`ConfigError`.
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .kernels import DEFAULT_MASS_TOLERANCE, PronyKernel, Strictness, validate
from .operator import (
    InitialData,
    diagonal_operator,
    dirichlet_laplacian_1d,
    equipartition,
    first_mode,
    random_data,
)
from .simulator import step_count

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "Checks", "Scenario", "load_scenario", "parse_scenario", "preset_names", "preset_path"]


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class Checks:
    bound_tolerance: float = 1e-8
    komornik_tolerance: float = 1e-6
    truncation_cap: float = 1e-4
    monotonicity_tolerance: float = 1e-10
    rate_sign_tolerance: float = 1e-12
    nonnegativity_tolerance: float = 1e-12
    lemma_tolerance: float = 1e-5
    lemma_points: int = 11
    oracle_tolerance: float = 1e-5
    rate_consistency_constant: float = 10.0
    fit_slack: float = 1e-3
    fit_window: list | None = None
    S: list | None = None
    direct: bool = True


@dataclass
class Scenario:
    name: str
    kernel: PronyKernel
    operator: object
    initial: InitialData
    T: float
    dt: float
    eta: float | None = None
    mass_tolerance: float = DEFAULT_MASS_TOLERANCE
    checks: Checks = field(default_factory=Checks)
    stride: int = 1
    description: str = ""

    @property
    def in_theorem_scope(self) -> bool:
        return self.kernel.strictness is Strictness.GLASSY

    @property
    def S_grid(self):
        if self.checks.S is not None:
            return list(self.checks.S)
        T = step_count(self.T, self.dt) * self.dt
        return [float(s) for s in range(0, int(math.floor(T / 2)) + 1)]


_TOP = {"name", "description", "kernel", "operator", "initial", "time", "checks", "output"}
_KERNEL = {"terms", "strictness", "normalize", "eta", "mass_tolerance"}
_OPERATOR = {"type", "length", "modes", "eigenvalues", "label"}
_INITIAL = {"u0", "v0", "preset", "seed", "smoothness"}
_TIME = {"T", "dt"}
_OUTPUT = {"stride"}
_CHECKS = {f.name for f in fields(Checks)}


def _unknown(section, data, allowed, errors):
    for key in data:
        if key not in allowed:
            errors.append(f"unknown key {section}{key!r}")


def _number(data, key, where, errors, required=True, positive=False):
    if key not in data:
        if required:
            errors.append(f"missing {where}.{key}")
        return None
    x = data[key]
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        errors.append(f"{where}.{key} must be a finite number, got {x!r}")
        return None
    if positive and not x > 0:
        errors.append(f"{where}.{key} must be positive, got {x!r}")
        return None
    return float(x)


def _numbers(data, key, where, errors):
    x = data.get(key)
    if not isinstance(x, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in x
    ):
        errors.append(f"{where}.{key} must be a list of finite numbers")
        return None
    return [float(v) for v in x]


def _parse_kernel(data, errors):
    _unknown("kernel.", data, _KERNEL, errors)
    terms = data.get("terms")
    if not isinstance(terms, list):
        errors.append("kernel.terms must be a list of {b, r} tables")
        return None, None, DEFAULT_MASS_TOLERANCE
    b, r = [], []
    for i, term in enumerate(terms):
        if not isinstance(term, dict) or set(term) != {"b", "r"}:
            errors.append(f"kernel.terms[{i}] must have exactly the keys b and r")
            continue
        bi = _number(term, "b", f"kernel.terms[{i}]", errors)
        ri = _number(term, "r", f"kernel.terms[{i}]", errors)
        if bi is not None and ri is not None:
            b.append(bi)
            r.append(ri)
    try:
        strictness = Strictness.parse(data.get("strictness", "glassy"))
    except ValueError as exc:
        errors.append(f"kernel.strictness: {exc}")
        return None, None, DEFAULT_MASS_TOLERANCE
    tol = _number(data, "mass_tolerance", "kernel", errors, required=False, positive=True)
    tol = DEFAULT_MASS_TOLERANCE if tol is None else tol
    eta = _number(data, "eta", "kernel", errors, required=False)
    normalize = data.get("normalize", False)
    if not isinstance(normalize, bool):
        errors.append("kernel.normalize must be true or false")
        normalize = False
    if len(b) != len(terms):
        return None, eta, tol
    try:
        kernel = PronyKernel(b, r, strictness)
        if normalize:
            kernel = kernel.normalized()
    except ValueError as exc:
        errors.append(f"kernel: {exc}")
        return None, eta, tol
    return kernel, eta, tol


def _parse_operator(data, errors):
    _unknown("operator.", data, _OPERATOR, errors)
    kind = data.get("type")
    try:
        if kind == "dirichlet_1d":
            length = _number(data, "length", "operator", errors, positive=True)
            modes = data.get("modes")
            if isinstance(modes, bool) or not isinstance(modes, int) or modes < 1:
                errors.append(f"operator.modes must be a positive integer, got {modes!r}")
                return None
            if length is None:
                return None
            return dirichlet_laplacian_1d(length, modes)
        if kind == "diagonal":
            lam = _numbers(data, "eigenvalues", "operator", errors)
            if lam is None:
                return None
            return diagonal_operator(lam, label=data.get("label", "diagonal"))
    except ValueError as exc:
        errors.append(f"operator: {exc}")
        return None
    errors.append(f"operator.type must be 'dirichlet_1d' or 'diagonal', got {kind!r}")
    return None


def _parse_initial(data, op, errors):
    _unknown("initial.", data, _INITIAL, errors)
    preset = data.get("preset")
    if preset is not None:
        extra = set(data) & {"u0", "v0"}
        if extra:
            errors.append("initial: give either a preset or u0/v0 coefficient lists, not both")
        if op is None:
            return None
        if preset == "first_mode":
            return first_mode(op)
        if preset == "random":
            seed = data.get("seed", 0)
            if isinstance(seed, bool) or not isinstance(seed, int):
                errors.append("initial.seed must be an integer")
                return None
            smooth = _number(data, "smoothness", "initial", errors, required=False)
            return random_data(op, seed=seed, smoothness=2.0 if smooth is None else smooth)
        m = re.fullmatch(r"equipartition(?:_(\d+))?", str(preset))
        if m:
            try:
                return equipartition(op, int(m.group(1)) if m.group(1) else None)
            except ValueError as exc:
                errors.append(f"initial: {exc}")
                return None
        errors.append(f"initial.preset {preset!r} is not one of first_mode, equipartition_K, random")
        return None
    u0 = _numbers(data, "u0", "initial", errors)
    v0 = _numbers(data, "v0", "initial", errors) if "v0" in data else None
    if u0 is None:
        return None
    if v0 is None:
        v0 = [0.0] * len(u0)
    if op is not None and (len(u0) != op.n_modes or len(v0) != op.n_modes):
        errors.append(f"initial: u0/v0 need {op.n_modes} coefficients, got {len(u0)}/{len(v0)}")
        return None
    try:
        return InitialData(u0, v0)
    except ValueError as exc:
        errors.append(f"initial: {exc}")
        return None


def _parse_checks(data, errors):
    _unknown("checks.", data, _CHECKS, errors)
    checks = Checks()
    for f in fields(Checks):
        if f.name not in data:
            continue
        value = data[f.name]
        if f.name == "direct":
            if not isinstance(value, bool):
                errors.append("checks.direct must be true or false")
            else:
                checks.direct = value
        elif f.name == "lemma_points":
            if isinstance(value, bool) or not isinstance(value, int) or value < 2:
                errors.append("checks.lemma_points must be an integer >= 2")
            else:
                checks.lemma_points = value
        elif f.name in ("S", "fit_window"):
            vals = _numbers(data, f.name, "checks", errors)
            if vals is not None:
                if f.name == "fit_window" and (len(vals) != 2 or vals[0] >= vals[1]):
                    errors.append("checks.fit_window must be [start, end] with start < end")
                else:
                    setattr(checks, f.name, vals)
        else:
            x = _number(data, f.name, "checks", errors, positive=True)
            if x is not None:
                setattr(checks, f.name, x)
    return checks


def parse_scenario(doc, default_name="scenario"):
    """Build a validated :class:`Scenario` from a parsed TOML mapping."""
    errors: list[str] = []
    _unknown("", doc, _TOP, errors)
    for section in ("kernel", "operator", "initial", "time"):
        if not isinstance(doc.get(section), dict):
            errors.append(f"missing section [{section}]")
    if errors:
        raise ConfigError(errors)

    kernel, eta, tol = _parse_kernel(doc["kernel"], errors)
    op = _parse_operator(doc["operator"], errors)
    init = _parse_initial(doc["initial"], op, errors)
    time = doc["time"]
    _unknown("time.", time, _TIME, errors)
    T = _number(time, "T", "time", errors, positive=True)
    dt = _number(time, "dt", "time", errors, positive=True)
    if T is not None and dt is not None and T < dt:
        errors.append(f"time.T = {T} is smaller than time.dt = {dt}")
    checks = _parse_checks(doc.get("checks", {}), errors)
    output = doc.get("output", {})
    _unknown("output.", output, _OUTPUT, errors)
    stride = output.get("stride", 1)
    if isinstance(stride, bool) or not isinstance(stride, int) or stride < 1:
        errors.append("output.stride must be a positive integer")

    if kernel is not None:
        report = validate(kernel, tol, eta)
        errors.extend(f"kernel: {v}" for v in report.violations)
    if errors:
        raise ConfigError(errors)
    return Scenario(
        name=str(doc.get("name", default_name)),
        description=str(doc.get("description", "")),
        kernel=kernel,
        operator=op,
        initial=init,
        T=T,
        dt=dt,
        eta=eta,
        mass_tolerance=tol,
        checks=checks,
        stride=stride,
    )


def read_toml(path):
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror or exc}"]) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"cannot parse {path}: {exc}"]) from None


def load_kernel_section(path):
    """Kernel, user eta and mass tolerance only; no validation of the rest."""
    doc = read_toml(path)
    if not isinstance(doc.get("kernel"), dict):
        raise ConfigError(["missing section [kernel]"])
    errors: list[str] = []
    kernel, eta, tol = _parse_kernel(doc["kernel"], errors)
    if errors:
        raise ConfigError(errors)
    return kernel, eta, tol


def load_scenario(path):
    path = Path(path)
    return parse_scenario(read_toml(path), default_name=path.stem)


def preset_names():
    root = resources.files("glassydecay") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def preset_path(name):
    p = resources.files("glassydecay") / "presets" / f"{name}.toml"
    if not p.is_file():
        raise ConfigError([f"unknown preset {name!r} (available: {', '.join(preset_names())})"])
    return Path(str(p))
