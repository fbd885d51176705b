"""Laboratory inputs and the effective parameters of the atomic parametric amplifier.

All derived frequencies are expressed in units of the recoil frequency
``omega_R = hbar k^2 / (2 m0)`` with ``hbar = 1``; time enters downstream only
through the dimensionless ``tau = Omega'_c t``.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from scipy import constants

__all__ = [
    "ConfigError",
    "UnstableFrequencyError",
    "PhysicalConfig",
    "DerivedParams",
    "WeakCoupling",
    "BRANCHES",
    "RB87_MASS",
    "derive",
    "weak_coupling_check",
    "reference_config",
    "load_config",
    "config_from_mapping",
]

RB87_MASS = 86.909180527 * constants.atomic_mass  # kg

#: Sign conventions for the Bogoliubov squeeze amplitude ``nu``.
#: ``"printed"`` takes the non-negative root; ``"diagonalizing"`` takes the root
#: that actually cancels the ``c**2 + c.dag**2`` term (``mu * nu`` opposite in
#: sign to ``omega_sw``).
BRANCHES = ("printed", "diagonalizing")

WEAK_COUPLING_BOUND = 10.0


class ConfigError(ValueError):
    """Invalid or incomplete physical configuration."""


class UnstableFrequencyError(ValueError):
    """The effective Bogoliubov frequency squared is not positive."""


@dataclass(frozen=True, kw_only=True)
class PhysicalConfig:
    """Raw laboratory inputs (SI units)."""

    n_atoms: int
    cavity_length: float
    pump_wavelength: float
    atom_mass: float
    vacuum_rabi: float
    atom_detuning: float
    scattering_length: float
    alpha_sq: float
    waist: float | None = None
    omega_sw_over_omega_r: float | None = None
    cavity_detuning: float = 0.0

    def __post_init__(self):
        if isinstance(self.n_atoms, bool) or int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ConfigError(f"n_atoms: must be a positive integer, got {self.n_atoms!r}")
        for name in ("cavity_length", "pump_wavelength", "atom_mass", "scattering_length"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name}: must be strictly positive, got {value!r}")
        if not (math.isfinite(self.vacuum_rabi) and self.vacuum_rabi > 0):
            raise ConfigError(f"vacuum_rabi: must be strictly positive, got {self.vacuum_rabi!r}")
        if not math.isfinite(self.atom_detuning) or self.atom_detuning == 0:
            raise ConfigError("atom_detuning: dispersive regime needs a finite non-zero detuning")
        if not (math.isfinite(self.alpha_sq) and self.alpha_sq >= 0):
            raise ConfigError(f"alpha_sq: must be >= 0, got {self.alpha_sq!r}")
        if not math.isfinite(self.cavity_detuning):
            raise ConfigError("cavity_detuning: must be finite")
        have_waist = self.waist is not None
        have_override = self.omega_sw_over_omega_r is not None
        if have_waist == have_override:
            raise ConfigError(
                "exactly one of 'waist' and 'omega_sw_over_omega_r' must be given"
                f" (got waist={self.waist!r}, omega_sw_over_omega_r={self.omega_sw_over_omega_r!r})"
            )
        if have_waist and not (math.isfinite(self.waist) and self.waist > 0):
            raise ConfigError(f"waist: must be strictly positive, got {self.waist!r}")
        if have_override and not math.isfinite(self.omega_sw_over_omega_r):
            raise ConfigError("omega_sw_over_omega_r: must be finite")

    def with_omega_sw(self, omega_sw_over_omega_r: float) -> PhysicalConfig:
        """Copy with the s-wave frequency given directly in recoil units."""
        return dataclasses.replace(self, waist=None, omega_sw_over_omega_r=float(omega_sw_over_omega_r))


@dataclass(frozen=True)
class DerivedParams:
    """Effective model quantities; frequencies in units of ``omega_r``.

    ``omega_r`` itself is kept in rad/s so that SI values can be recovered.
    """

    omega_r: float
    u0: float
    omega_sw: float
    zeta: float
    delta_c: float
    omega_c: float
    beta: float
    omega_c_prime: float
    mu: float
    nu: float
    xi: float
    branch: str = "printed"

    @property
    def kerr(self) -> float:
        """Coefficient of ``(a.dag a)**2`` left after the displacement step."""
        return -(self.omega_c + 0.5 * self.omega_sw) * self.beta**2

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


class WeakCoupling(NamedTuple):
    ok: bool
    ratio: float
    bound: float


def _omega_r(config: PhysicalConfig) -> float:
    k = 2.0 * math.pi / config.pump_wavelength
    return constants.hbar * k * k / (2.0 * config.atom_mass)


def _omega_sw(config: PhysicalConfig, omega_r: float) -> float:
    if config.omega_sw_over_omega_r is not None:
        return float(config.omega_sw_over_omega_r)
    si = (
        8.0 * math.pi * constants.hbar * config.scattering_length * config.n_atoms
        / (config.atom_mass * config.cavity_length * config.waist**2)
    )
    return si / omega_r


def derive(config: PhysicalConfig, branch: str = "printed") -> DerivedParams:
    """Compute every effective parameter from the laboratory inputs.

    Parameters
    ----------
    config : PhysicalConfig
    branch : {"printed", "diagonalizing"}
        Sign of ``nu``. ``"printed"`` gives ``nu >= 0`` and ``xi = arccosh(mu)``.
        ``"diagonalizing"`` gives ``sign(nu) = -sign(omega_sw)``, which is the
        root for which ``S(xi)`` removes the quadratic coupling of the mode.

    Raises
    ------
    UnstableFrequencyError
        If ``(4 + omega_sw/2)(4 + 3 omega_sw/2) <= 0``.
    """
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
    omega_r = _omega_r(config)
    u0 = config.vacuum_rabi**2 / config.atom_detuning / omega_r
    omega_sw = _omega_sw(config, omega_r)
    zeta = 0.5 * math.sqrt(config.n_atoms) * u0
    delta_c = -config.cavity_detuning / omega_r + 0.5 * config.n_atoms * u0
    omega_c = 4.0 + omega_sw

    lower = 4.0 + 0.5 * omega_sw
    upper = 4.0 + 1.5 * omega_sw
    if lower <= 0 or upper <= 0:
        raise UnstableFrequencyError(
            f"unstable effective frequency: Omega'_c^2 = {lower * upper:.6g} omega_R^2"
            f" is not positive for omega_sw = {omega_sw:.6g} omega_R"
        )
    omega_c_prime = math.sqrt(lower * upper)
    beta = math.sqrt(2.0) / 2.0 * zeta / (omega_c + 0.5 * omega_sw)

    # Omega_c - Omega'_c written without cancellation for small omega_sw.
    gap = 0.25 * omega_sw**2 / (omega_c + omega_c_prime)
    mu = math.sqrt((omega_c + omega_c_prime) / (2.0 * omega_c_prime))
    nu = math.sqrt(gap / (2.0 * omega_c_prime))
    if branch == "diagonalizing" and omega_sw > 0:
        nu = -nu
    xi = math.asinh(nu)

    return DerivedParams(
        omega_r=omega_r,
        u0=u0,
        omega_sw=omega_sw,
        zeta=zeta,
        delta_c=delta_c,
        omega_c=omega_c,
        beta=beta,
        omega_c_prime=omega_c_prime,
        mu=mu,
        nu=nu,
        xi=xi,
        branch=branch,
    )


def weak_coupling_check(params: DerivedParams, alpha_sq: float) -> WeakCoupling:
    """Whether ``U0 <a.dag a> <= 10 omega_R``; ``ratio`` is ``U0 |alpha|^2 / omega_R``."""
    ratio = params.u0 * alpha_sq
    return WeakCoupling(ok=ratio <= WEAK_COUPLING_BOUND, ratio=ratio, bound=WEAK_COUPLING_BOUND)


def reference_config(omega_sw_over_omega_r: float = 20.0, alpha_sq: float = 0.01) -> PhysicalConfig:
    """87Rb condensate in a 178 um cavity; the parameter set used for every figure."""
    return PhysicalConfig(
        n_atoms=100_000,
        cavity_length=178e-6,
        pump_wavelength=780e-9,
        atom_mass=RB87_MASS,
        vacuum_rabi=2 * math.pi * 14.1e6,
        atom_detuning=2 * math.pi * 58e9,
        scattering_length=5e-9,
        omega_sw_over_omega_r=omega_sw_over_omega_r,
        alpha_sq=alpha_sq,
    )


_FIELDS = {f.name: f for f in dataclasses.fields(PhysicalConfig)}
_REQUIRED = [name for name, f in _FIELDS.items() if f.default is dataclasses.MISSING]


def config_from_mapping(data: dict) -> PhysicalConfig:
    """Build a config from a flat mapping, rejecting unknown and missing keys."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat JSON object")
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = [name for name in _REQUIRED if name not in data]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    values = {}
    for name, value in data.items():
        if value is None:
            values[name] = None
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        values[name] = int(value) if name == "n_atoms" and float(value).is_integer() else value
    return PhysicalConfig(**values)


def load_config(path: str | Path) -> PhysicalConfig:
    """Read a JSON config file with exactly the ``PhysicalConfig`` field names."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_mapping(data)
