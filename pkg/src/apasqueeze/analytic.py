"""Closed-form dynamics of the Bogoliubov mode.

Starting from ``|alpha>_a (x) |0>_c`` the photon number ``n`` is conserved, and
each photon-number branch leaves the Bogoliubov mode in

    |phi_n(tau)> = D(-beta n) S(-xi) S(xi e^{-2i tau}) D(beta n e^{-i tau}) |0>,

so ``rho_c`` is a Poisson mixture of pure squeezed coherent states. Everything
here is a function of ``(mu, nu, beta, |alpha|^2, tau)`` taken from
:class:`~apasqueeze.params.DerivedParams`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.stats import poisson

from . import fock
from .params import DerivedParams

__all__ = [
    "POISSON_TAIL",
    "DUAL_ROUTE_TOL",
    "Q_CLOSED_FORM_TOL",
    "f1234",
    "Moments",
    "moments",
    "SqueezingResult",
    "squeezing",
    "SqueezeSeries",
    "squeeze_series",
    "poisson_cutoff",
    "poisson_weights",
    "rho_c",
    "phi_state",
    "GridSpec",
    "QGrid",
    "q_function",
    "q_closed_form",
    "f_abs_sq",
]

POISSON_TAIL = 1e-12
DUAL_ROUTE_TOL = 1e-10
Q_CLOSED_FORM_TOL = 1e-7
#: Estimated relative rounding error above which the squeezing brackets are redone in mpmath.
CANCELLATION_TOL = 1e-12
MP_DPS = 40

_EPS = np.finfo(float).eps


# -- moments and squeezing ---------------------------------------------------


def f1234(mu, nu, tau):
    """The four auxiliary functions of the single-branch moments.

    ``<phi_n|c^2|phi_n> = beta^2 n^2 f1 + f2`` and
    ``<phi_n|c.dag c|phi_n> = beta^2 n^2 f3 + f4``. Accepts scalars or arrays.

    Returns
    -------
    f1, f2 : complex
    f3, f4 : float
    """
    tau = np.asarray(tau, dtype=float)
    e1 = np.exp(-1j * tau)
    e2 = np.exp(-2j * tau)
    d = mu - nu
    rot2 = mu**2 * e2 + nu**2 * np.conj(e2)
    f1 = d**2 * rot2 + 2 * mu * nu * d**2 - 2 * d * (mu * e1 + nu * np.conj(e1)) + 1
    f2 = -mu * nu * rot2 + mu * nu + 2 * mu * nu**3
    f3 = 2 * mu * nu * d**2 * np.cos(2 * tau) + (mu**2 + nu**2) * d**2 - 2 * np.cos(tau) + 1
    f4 = -2 * mu**2 * nu**2 * np.cos(2 * tau) + nu**2 * (mu**2 + nu**2) + nu**2
    if tau.ndim == 0:
        return complex(f1), complex(f2), float(f3), float(f4)
    return f1, f2, f3, f4


@dataclass(frozen=True)
class Moments:
    """First and second moments of the Bogoliubov mode at one instant."""

    c_mean: complex
    c_sq: complex
    n_mean: float
    tau: float

    def quadrature_variances(self) -> tuple[float, float]:
        """``(<dq^2>, <dp^2>)`` for ``q = (c + c.dag)/sqrt2``, ``p = (c - c.dag)/(i sqrt2)``."""
        anom = self.c_sq - self.c_mean**2
        normal = self.n_mean - abs(self.c_mean) ** 2
        var_q = 0.5 * (2 * anom.real + 2 * normal + 1)
        var_p = 0.5 * (-2 * anom.real + 2 * normal + 1)
        return var_q, var_p

    def squeezing(self) -> tuple[float, float]:
        """``(S_q, S_p)`` assembled from the moments."""
        anom = 2 * (self.c_sq - self.c_mean**2).real
        normal = 2 * (self.n_mean - abs(self.c_mean) ** 2)
        return anom + normal, -anom + normal

    def as_dict(self) -> dict:
        return {
            "c_mean_re": self.c_mean.real,
            "c_mean_im": self.c_mean.imag,
            "c_sq_re": self.c_sq.real,
            "c_sq_im": self.c_sq.imag,
            "n_mean": self.n_mean,
            "tau": self.tau,
        }


def _moment_arrays(params: DerivedParams, alpha_sq: float, tau):
    mu, nu, beta = params.mu, params.nu, params.beta
    tau = np.asarray(tau, dtype=float)
    f1, f2, f3, f4 = f1234(mu, nu, tau)
    second = alpha_sq * (1 + alpha_sq)
    c_mean = beta * alpha_sq * ((mu - nu) * (mu * np.exp(-1j * tau) + nu * np.exp(1j * tau)) - 1)
    c_sq = second * beta**2 * f1 + f2
    # a sum of squared moduli; only rounding can push it below zero (e.g. at tau = 0)
    n_mean = np.maximum(beta**2 * f3 * second + f4, 0.0)
    return c_mean, c_sq, n_mean


def moments(params: DerivedParams, alpha_sq: float, tau: float) -> Moments:
    """``<c>``, ``<c^2>`` and ``<c.dag c>`` of the reduced state at time ``tau``."""
    c_mean, c_sq, n_mean = _moment_arrays(params, alpha_sq, float(tau))
    return Moments(complex(c_mean), complex(c_sq), float(n_mean), float(tau))


def _closed_form(mu, nu, beta, alpha_sq, tau):
    """Closed-form ``S_q``, ``S_p`` and a rounding-error estimate for each."""
    cos1, cos2, sin1 = np.cos(tau), np.cos(2 * tau), np.sin(tau)
    s, d = mu + nu, mu - nu
    coherent_q = 4 * beta**2 * alpha_sq * (1 - cos1) ** 2
    coherent_p = 4 * beta**2 * alpha_sq * d**4 * sin1**2
    bracket_q = 1 - s * (mu * cos2 - nu)
    bracket_p = d * (mu * cos2 + nu) - 1
    s_q = coherent_q + 2 * nu * s * bracket_q
    s_p = coherent_p + 2 * nu * d * bracket_p
    err_q = 8 * _EPS * (coherent_q + abs(2 * nu * s) * (1 + abs(s) * (mu + abs(nu))))
    err_p = 8 * _EPS * (coherent_p + abs(2 * nu * d) * (1 + abs(d) * (mu + abs(nu))))
    return s_q, s_p, err_q, err_p


def _closed_form_mp(mu, nu, beta, alpha_sq, tau, dps=MP_DPS):
    with mpmath.workdps(dps):
        mu, nu, beta, a2, tau = (mpmath.mpf(x) for x in (mu, nu, beta, alpha_sq, tau))
        s, d = mu + nu, mu - nu
        s_q = 4 * beta**2 * a2 * (1 - mpmath.cos(tau)) ** 2 + 2 * nu * s * (1 - s * (mu * mpmath.cos(2 * tau) - nu))
        s_p = 4 * beta**2 * a2 * d**4 * mpmath.sin(tau) ** 2 + 2 * nu * d * (d * (mu * mpmath.cos(2 * tau) + nu) - 1)
        return float(s_q), float(s_p)


def _needs_mp(value, err):
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(value != 0, err / np.abs(value), np.where(err > 0, np.inf, 0.0))
    return rel > CANCELLATION_TOL


@dataclass(frozen=True)
class SqueezingResult:
    """Squeezing parameters by both routes.

    Unpacks as ``s_q, s_p = squeezing(...)``; the closed-form values are the
    primary result and the moment-assembled values are the cross-check.
    """

    s_q: float
    s_p: float
    s_q_moments: float
    s_p_moments: float
    tau: float
    extended_precision: bool = False

    @property
    def dual_route_residual(self) -> float:
        scale = max(1.0, abs(self.s_q), abs(self.s_p))
        return max(abs(self.s_q - self.s_q_moments), abs(self.s_p - self.s_p_moments)) / scale

    @property
    def discrepancy(self) -> bool:
        return not self.dual_route_residual <= DUAL_ROUTE_TOL

    def __iter__(self):
        yield self.s_q
        yield self.s_p


def squeezing(params: DerivedParams, alpha_sq: float, tau: float) -> SqueezingResult:
    """``S_q = 2<dq^2> - 1`` and ``S_p = 2<dp^2> - 1`` at time ``tau``.

    The closed forms are differences of near-unity products when ``nu`` is
    small; when the estimated relative rounding error exceeds 1e-12 they are
    re-evaluated with 40-digit arithmetic.
    """
    tau = float(tau)
    args = (params.mu, params.nu, params.beta, alpha_sq)
    s_q, s_p, err_q, err_p = _closed_form(*args, tau)
    extended = bool(_needs_mp(s_q, err_q) or _needs_mp(s_p, err_p))
    if extended:
        s_q, s_p = _closed_form_mp(*args, tau)
    mq, mp_ = moments(params, alpha_sq, tau).squeezing()
    return SqueezingResult(float(s_q), float(s_p), float(mq), float(mp_), tau, extended)


@dataclass(frozen=True, eq=False)
class SqueezeSeries:
    """Squeezing parameters along a time grid for one value of ``omega_sw``."""

    tau: np.ndarray
    s_q: np.ndarray
    s_p: np.ndarray
    omega_sw_over_omega_r: float
    s_q_moments: np.ndarray = field(repr=False, default=None)
    s_p_moments: np.ndarray = field(repr=False, default=None)

    @property
    def dual_route_residual(self) -> float:
        if self.s_q_moments is None:
            return 0.0
        scale = np.maximum(1.0, np.maximum(np.abs(self.s_q), np.abs(self.s_p)))
        diff = np.maximum(np.abs(self.s_q - self.s_q_moments), np.abs(self.s_p - self.s_p_moments))
        return float(np.max(diff / scale)) if diff.size else 0.0

    @property
    def discrepancy(self) -> bool:
        return not self.dual_route_residual <= DUAL_ROUTE_TOL

    def heisenberg_margin(self) -> float:
        """``min (S_q + 1)(S_p + 1) - 1``; the uncertainty relation requires ``>= 0``."""
        return float(np.min((self.s_q + 1) * (self.s_p + 1)) - 1)


def squeeze_series(params: DerivedParams, alpha_sq: float, taus) -> SqueezeSeries:
    """Vectorized :func:`squeezing` over ``taus``."""
    taus = np.asarray(taus, dtype=float)
    args = (params.mu, params.nu, params.beta, alpha_sq)
    s_q, s_p, err_q, err_p = _closed_form(*args, taus)
    s_q, s_p = np.array(s_q, dtype=float), np.array(s_p, dtype=float)
    for i in np.nonzero(_needs_mp(s_q, err_q) | _needs_mp(s_p, err_p))[0]:
        s_q[i], s_p[i] = _closed_form_mp(*args, taus[i])
    c_mean, c_sq, n_mean = _moment_arrays(params, alpha_sq, taus)
    anom = 2 * (c_sq - c_mean**2).real
    normal = 2 * (n_mean - np.abs(c_mean) ** 2)
    return SqueezeSeries(taus, s_q, s_p, params.omega_sw, anom + normal, -anom + normal)


# -- reduced density operator -------------------------------------------------


def poisson_cutoff(alpha_sq: float, tail: float = POISSON_TAIL) -> int:
    """Smallest ``n_max`` with ``P(n > n_max) < tail`` for a Poisson law of mean ``alpha_sq``."""
    if alpha_sq == 0:
        return 0
    n = 0
    while poisson.sf(n, alpha_sq) >= tail:
        n += 1
    return n


def poisson_weights(alpha_sq: float, n_max: int) -> np.ndarray:
    return poisson.pmf(np.arange(n_max + 1), alpha_sq)


def _occupation_bound(params: DerivedParams, n: int) -> float:
    # largest mean occupation met along D(beta n e^{-i tau}), two squeezes and D(-beta n)
    amp = abs(params.beta) * n * (1.0 + math.exp(2 * abs(params.xi)))
    return amp**2 + math.sinh(2 * abs(params.xi)) ** 2


def phi_state(params: DerivedParams, n: int, tau: float, space: fock.FockSpace) -> fock.FockState:
    """``|phi_n(tau)>``, the Bogoliubov state on the ``n``-photon branch."""
    beta_n = params.beta * n
    state = fock.displace_state(fock.vacuum(space), beta_n * np.exp(-1j * tau))
    if params.xi != 0:
        state = fock.squeeze_state(state, params.xi * np.exp(-2j * tau))
        state = fock.squeeze_state(state, -params.xi)
    return fock.displace_state(state, -beta_n)


def rho_c(
    params: DerivedParams,
    alpha_sq: float,
    tau: float,
    space: fock.FockSpace | None = None,
    *,
    tail: float = POISSON_TAIL,
    weights=None,
    verify: bool = True,
) -> fock.DensityMatrix:
    """Reduced density operator of the Bogoliubov mode at time ``tau``.

    Parameters
    ----------
    space : FockSpace, optional
        Number-basis cutoff. Chosen from the largest intermediate occupation
        when omitted.
    tail : float
        Poisson tail mass allowed beyond the last retained photon number.
    weights : array_like, optional
        Explicit photon-number weights, used as given (no renormalization).
    verify : bool
        Recompute every branch at twice the cutoff and raise
        ``TruncationError`` if the retained block moves by more than 1e-10.

    Notes
    -----
    ``meta`` records ``n_max``, the retained Poisson weight, the raw trace
    before renormalization, the cutoff and the doubling delta.
    """
    if weights is None:
        n_max = poisson_cutoff(alpha_sq, tail)
        raw = poisson_weights(alpha_sq, n_max)
        retained = float(raw.sum())
        probs = raw / retained
    else:
        probs = np.asarray(weights, dtype=float)
        n_max = probs.size - 1
        retained = float(probs.sum())
    if space is None:
        space = fock.FockSpace(fock.checked_cutoff(_occupation_bound(params, n_max), 2 * params.xi, "rho_c"))
    dim = space.dim
    mat = np.zeros((dim, dim), dtype=complex)
    delta = 0.0
    leak = 0.0
    for n, p in enumerate(probs):
        vec = phi_state(params, n, tau, space).amplitudes
        leak = max(leak, fock.top_leakage(vec))
        if verify:
            big = phi_state(params, n, tau, space.doubled()).amplitudes
            delta = max(delta, float(np.linalg.norm(big[:dim] - vec)), float(np.linalg.norm(big[dim:])))
        mat += p * np.outer(vec, vec.conj())
    if verify and (delta > fock.LEAK_TOL or leak > fock.LEAK_TOL):
        raise fock.TruncationError(
            f"rho_c: cutoff dim={dim} not converged (doubling delta {delta:.3e}, leakage {leak:.3e})",
            leakage=max(delta, leak),
            dim=dim,
        )
    meta = {
        "n_max": n_max,
        "retained_weight": retained,
        "raw_trace": float(np.trace(mat).real) * (retained if weights is None else 1.0),
        "dim": dim,
        "convergence_delta": delta,
        "leakage": leak,
        "branch": params.branch,
    }
    return fock.DensityMatrix(space, mat, meta)


# -- Q function --------------------------------------------------------------

_AXIS = re.compile(r"^\s*([^:]+):([^:]+):([^:]+)\s*$")


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid of coherent-state labels ``gamma = re + i im``."""

    re_min: float
    re_max: float
    re_steps: int
    im_min: float
    im_max: float
    im_steps: int

    def __post_init__(self):
        for lo, hi, steps, axis in (
            (self.re_min, self.re_max, self.re_steps, "re"),
            (self.im_min, self.im_max, self.im_steps, "im"),
        ):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"grid {axis}: bounds must be finite")
            if int(steps) != steps or steps < 1:
                raise ValueError(f"grid {axis}: steps must be a positive integer, got {steps!r}")
            if steps == 1 and lo != hi:
                raise ValueError(f"grid {axis}: a single step needs min == max")
            if hi < lo:
                raise ValueError(f"grid {axis}: max {hi} < min {lo}")

    @classmethod
    def parse(cls, text: str) -> GridSpec:
        """Parse ``min:max:steps`` (both axes) or ``min:max:steps,min:max:steps`` (re, im)."""
        parts = text.split(",")
        if len(parts) not in (1, 2):
            raise ValueError(f"grid spec {text!r}: expected one or two 'min:max:steps' groups")
        axes = []
        for part in parts:
            m = _AXIS.match(part)
            if m is None:
                raise ValueError(f"grid spec {part!r}: expected 'min:max:steps'")
            try:
                lo, hi = float(m.group(1)), float(m.group(2))
                steps = int(m.group(3))
            except ValueError as exc:
                raise ValueError(f"grid spec {part!r}: {exc}") from exc
            axes.append((lo, hi, steps))
        if len(axes) == 1:
            axes.append(axes[0])
        (rl, rh, rs), (il, ih, is_) = axes
        return cls(rl, rh, rs, il, ih, is_)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.linspace(self.re_min, self.re_max, self.re_steps),
            np.linspace(self.im_min, self.im_max, self.im_steps),
        )

    def gammas(self) -> np.ndarray:
        """Labels with shape ``(re_steps, im_steps)``; the real part varies slowest."""
        re, im = self.axes()
        return re[:, None] + 1j * im[None, :]


@dataclass(frozen=True, eq=False)
class QGrid:
    """Husimi function sampled on a :class:`GridSpec`; ``values[i, j]`` is at ``(re[i], im[j])``."""

    grid: GridSpec
    values: np.ndarray
    tau: float
    closed_form_residual: float | None = None

    @property
    def discrepancy(self) -> bool:
        return self.closed_form_residual is not None and not self.closed_form_residual <= Q_CLOSED_FORM_TOL

    def _cell(self) -> float:
        re, im = self.grid.axes()
        d_re = re[1] - re[0] if re.size > 1 else 1.0
        d_im = im[1] - im[0] if im.size > 1 else 1.0
        return float(d_re * d_im)

    def normalization(self) -> float:
        """Riemann sum of ``Q`` over the grid; close to 1 if the grid covers the support."""
        return float(self.values.sum() * self._cell())

    def mean(self) -> tuple[float, float]:
        re, im = self.grid.axes()
        w = self.values / self.values.sum()
        return float(np.sum(w * re[:, None])), float(np.sum(w * im[None, :]))

    def second_moments(self) -> tuple[float, float]:
        """Central second moments of ``Q`` along ``gamma_R`` and ``gamma_I``."""
        re, im = self.grid.axes()
        w = self.values / self.values.sum()
        m_re, m_im = self.mean()
        return (
            float(np.sum(w * (re[:, None] - m_re) ** 2)),
            float(np.sum(w * (im[None, :] - m_im) ** 2)),
        )


def _branch_state(params: DerivedParams, n: int, tau: float, dim: int | None) -> fock.FockState:
    """``S(-xi) S(xi e^{-2i tau}) |beta n e^{-i tau}>``, whose overlap with ``|beta n + gamma>`` gives Q."""
    amp = params.beta * n * np.exp(-1j * tau)
    if params.xi == 0:
        m = abs(amp) ** 2
        space = fock.FockSpace(dim or fock.auto_cutoff(m))
        return fock.coherent(space, amp)
    m = (abs(amp) * math.exp(2 * abs(params.xi))) ** 2 + math.sinh(2 * abs(params.xi)) ** 2
    space = fock.FockSpace(dim or fock.checked_cutoff(m, 2 * params.xi, "q_function"))
    state = fock.coherent(space, amp)
    state = fock.squeeze_state(state, params.xi * np.exp(-2j * tau))
    state = fock.squeeze_state(state, -params.xi)
    fock.check_leakage(state.amplitudes, "q_function branch state", fock.LEAK_TOL)
    return state


def q_function(
    params: DerivedParams,
    alpha_sq: float,
    tau: float,
    grid: GridSpec,
    *,
    tail: float = POISSON_TAIL,
    cutoff: int | None = None,
) -> QGrid:
    """Husimi function ``Q(gamma) = <gamma|rho_c|gamma>/pi`` on a grid.

    Each photon-number branch contributes ``|<beta n + gamma|w_n>|^2`` where
    ``w_n = S(-xi) S(xi e^{-2i tau}) |beta n e^{-i tau}>``; the displacement
    ``D(-beta n)`` only shifts the label and adds a phase. At ``tau = 0`` and
    ``tau = pi/2`` the result is compared with the Gaussian closed forms and
    the largest difference is stored in ``closed_form_residual``.
    """
    tau = float(tau)
    gammas = grid.gammas()
    n_max = poisson_cutoff(alpha_sq, tail)
    probs = poisson_weights(alpha_sq, n_max)
    probs = probs / probs.sum()
    values = np.zeros(gammas.shape)
    for n, p in enumerate(probs):
        state = _branch_state(params, n, tau, cutoff)
        values += p * np.abs(fock.coherent_overlaps(params.beta * n + gammas, state)) ** 2
    values /= np.pi
    closed = q_closed_form(params, alpha_sq, tau, gammas, tail=tail)
    residual = None if closed is None else float(np.max(np.abs(values - closed)))
    return QGrid(grid, values, tau, residual)


def f_abs_sq(params: DerivedParams, n: int, gammas) -> np.ndarray:
    """``|<beta n + gamma, xi | -i beta n, -xi>|^2``, the branch overlap at ``tau = pi/2``."""
    gammas = np.asarray(gammas, dtype=complex)
    g_re, g_im = gammas.real, gammas.imag
    mu_p, nu_p = math.cosh(2 * params.xi), math.sinh(2 * params.xi)
    k = nu_p / mu_p
    bn = params.beta * n
    expo = (
        (k - 1) * g_re**2
        - (k + 1) * g_im**2
        + 2 * bn * (k - 1) * g_re
        - 2 * bn / mu_p * g_im
        + 2 * (k - 1) * bn**2
    )
    return np.exp(expo) / mu_p


def q_closed_form(params: DerivedParams, alpha_sq: float, tau: float, gammas, *, tail: float = POISSON_TAIL):
    """Gaussian closed form of ``Q`` at ``tau = 0`` or ``tau = pi/2``; ``None`` at other times."""
    gammas = np.asarray(gammas, dtype=complex)
    if abs(tau) <= 1e-12:
        return np.exp(-np.abs(gammas) ** 2) / np.pi
    if abs(tau - 0.5 * np.pi) <= 1e-12:
        n_max = poisson_cutoff(alpha_sq, tail)
        probs = poisson_weights(alpha_sq, n_max)
        probs = probs / probs.sum()
        total = sum(p * f_abs_sq(params, n, gammas) for n, p in enumerate(probs))
        return total / np.pi
    return None
