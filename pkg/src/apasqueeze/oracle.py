"""Brute-force reference results from the two-mode Hamiltonian on a truncated basis.

The cavity photon number is conserved, so the Hamiltonian is block diagonal
with one Bogoliubov-mode block per photon number ``n``:

    H_n = delta_c n + Omega_c c.dag c + (omega_sw/4)(c^2 + c.dag^2) + (sqrt2/2) zeta n (c + c.dag)

(units of ``omega_R``, time ``t = tau / Omega'_c``). Every block is a real
pentadiagonal matrix; it is diagonalized once and then evolved exactly to any
number of times. Nothing here uses the displacement/squeeze solution except
:func:`check_diagonalization`, whose job is to test it.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eig_banded
from scipy.stats import poisson

from . import fock
from .analytic import POISSON_TAIL, Moments, poisson_cutoff, poisson_weights
from .params import DerivedParams

__all__ = [
    "CONVERGENCE_TOL",
    "BlockHamiltonian",
    "OracleReport",
    "MomentSeries",
    "build_blocks",
    "block_cutoff",
    "evolve_block",
    "evolve_rho_c",
    "evolve_moments",
    "evolve_moment_series",
    "state_moments",
    "check_diagonalization",
    "check_full_tensor",
]

CONVERGENCE_TOL = 1e-8
#: Largest coherent amplitude reached by the polynomial-in-coupling probes.
PROBE_AMPLITUDE = 4.0


@dataclass(frozen=True)
class OracleReport:
    """One analytic-versus-oracle comparison.

    ``rel_residual`` is ``abs_residual`` divided by the scale appropriate to the
    quantity (``max(1, |oracle|)`` unless stated otherwise by the producer).
    """

    quantity: str
    analytic: float
    oracle: float
    abs_residual: float
    rel_residual: float
    cutoff: int
    convergence_delta: float
    converged: bool

    @classmethod
    def build(cls, quantity, analytic, oracle, cutoff, convergence_delta, scale=None) -> OracleReport:
        analytic, oracle = float(analytic), float(oracle)
        abs_res = abs(analytic - oracle)
        scale = max(1.0, abs(oracle)) if scale is None else float(scale)
        return cls(
            quantity=quantity,
            analytic=analytic,
            oracle=oracle,
            abs_residual=abs_res,
            rel_residual=abs_res / scale,
            cutoff=int(cutoff),
            convergence_delta=float(convergence_delta),
            converged=bool(convergence_delta < CONVERGENCE_TOL),
        )

    def passed(self, tol: float) -> bool:
        return self.converged and self.rel_residual <= tol

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


# -- block Hamiltonians ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlockHamiltonian:
    """``H_n`` on the Bogoliubov space for photon number ``photon_number``."""

    photon_number: int
    matrix: np.ndarray
    space: fock.FockSpace

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def _coupling(params: DerivedParams) -> float:
    return math.sqrt(2.0) / 2.0 * params.zeta


def _bands(omega_c: float, omega_sw: float, coupling: float, dim: int) -> np.ndarray:
    """Lower banded storage of ``H_n - delta_c n`` with ``coupling = g n``."""
    k = np.arange(dim, dtype=float)
    band = np.zeros((3, dim))
    band[0] = omega_c * k
    band[1, :-1] = coupling * np.sqrt(k[1:])
    band[2, :-2] = 0.25 * omega_sw * np.sqrt(k[1:-1] * k[2:])
    return band


def _dense(band: np.ndarray) -> np.ndarray:
    dim = band.shape[1]
    mat = np.diag(band[0])
    for off in (1, 2):
        mat += np.diag(band[off, : dim - off], -off) + np.diag(band[off, : dim - off], off)
    return mat


def build_blocks(params: DerivedParams, n_max: int, space: fock.FockSpace) -> list[BlockHamiltonian]:
    """One Hermitian block per photon number ``0..n_max``."""
    g = _coupling(params)
    blocks = []
    for n in range(n_max + 1):
        mat = _dense(_bands(params.omega_c, params.omega_sw, g * n, space.dim)) + params.delta_c * n * np.eye(space.dim)
        blocks.append(BlockHamiltonian(n, mat.astype(complex), space))
    return blocks


@lru_cache(maxsize=8)
def _block_eig(omega_c: float, omega_sw: float, coupling: float, dim: int):
    lam, vecs = eig_banded(_bands(omega_c, omega_sw, coupling, dim), lower=True)
    lam.flags.writeable = False
    vecs.flags.writeable = False
    return lam, vecs


def _orbit_scale(params: DerivedParams) -> tuple[float, float]:
    """Classical orbit factor and squeeze modulus of the quadratic part of ``H_n``.

    In quadratures ``H_n = A q^2 + B p^2 + sqrt2 g n q`` with
    ``A = Omega_c/2 + omega_sw/4`` and ``B = Omega_c/2 - omega_sw/4``. From the
    vacuum the mean amplitude stays within ``beta n max(2, sqrt(1 + kappa))``,
    ``kappa = max(A/B, B/A)``, and the width is squeezed by at most ``ln(kappa)/2``.
    """
    a = 0.5 * params.omega_c + 0.25 * params.omega_sw
    b = 0.5 * params.omega_c - 0.25 * params.omega_sw
    kappa = max(a / b, b / a)
    return max(2.0, math.sqrt(1.0 + kappa)), 0.5 * math.log(kappa)


def block_cutoff(params: DerivedParams, coupling_n: float) -> int:
    """Automatic dimension for evolving the vacuum under ``H_n`` with photon number ``coupling_n``."""
    factor, r = _orbit_scale(params)
    amp = abs(params.beta) * coupling_n * factor
    return fock.checked_cutoff(amp**2, r, "oracle block")


def evolve_block(params: DerivedParams, n: float, taus, dim: int) -> np.ndarray:
    """``exp(-i (H_n - delta_c n) tau / Omega'_c) |0>`` for every ``tau``; shape ``(dim, len(taus))``.

    ``n`` may be any real number; the coupling is ``(sqrt2/2) zeta n``.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    lam, vecs = _block_eig(params.omega_c, params.omega_sw, _coupling(params) * float(n), int(dim))
    t = taus / params.omega_c_prime
    return vecs @ (np.exp(-1j * lam[:, None] * t[None, :]) * vecs[0][:, None])


def state_moments(psi: np.ndarray):
    """``<c>``, ``<c^2>`` and ``<c.dag c>`` of state vectors stored as columns."""
    psi = np.asarray(psi)
    if psi.ndim == 1:
        psi = psi[:, None]
    k = np.arange(psi.shape[0], dtype=float)
    s1 = np.sqrt(k[1:])[:, None]
    s2 = np.sqrt(k[1:-1] * k[2:])[:, None]
    c_mean = np.sum(psi[:-1].conj() * s1 * psi[1:], axis=0)
    c_sq = np.sum(psi[:-2].conj() * s2 * psi[2:], axis=0)
    n_mean = np.sum(k[:, None] * np.abs(psi) ** 2, axis=0)
    return c_mean, c_sq, n_mean


# -- reduced state -----------------------------------------------------------


def _weights(alpha_sq, weights, tail):
    if weights is not None:
        probs = np.asarray(weights, dtype=float)
        return probs, float(probs.sum())
    n_max = poisson_cutoff(alpha_sq, tail)
    raw = poisson_weights(alpha_sq, n_max)
    return raw / raw.sum(), float(raw.sum())


def evolve_rho_c(
    params: DerivedParams,
    alpha_sq: float,
    tau: float,
    space: fock.FockSpace | None = None,
    *,
    tail: float = POISSON_TAIL,
    weights=None,
    verify: bool = True,
) -> fock.DensityMatrix:
    """Reduced Bogoliubov state from exact block evolution of the initial ``|alpha>|0>``.

    The scalar ``delta_c n`` only multiplies each block by a phase and drops
    out of the projector, so it is not included in the exponentials. With
    ``verify`` every block is re-evolved at twice the cutoff and a
    ``TruncationError`` is raised if the retained amplitudes move by more than
    1e-10.
    """
    probs, retained = _weights(alpha_sq, weights, tail)
    n_max = probs.size - 1
    if space is None:
        space = fock.FockSpace(block_cutoff(params, n_max))
    dim = space.dim
    mat = np.zeros((dim, dim), dtype=complex)
    delta = 0.0
    leak = 0.0
    for n, p in enumerate(probs):
        psi = evolve_block(params, n, [tau], dim)[:, 0]
        leak = max(leak, fock.top_leakage(psi))
        if verify:
            big = evolve_block(params, n, [tau], 2 * dim)[:, 0]
            delta = max(delta, float(np.linalg.norm(big[:dim] - psi)), float(np.linalg.norm(big[dim:])))
        mat += p * np.outer(psi, psi.conj())
    if verify and (delta > fock.LEAK_TOL or leak > fock.LEAK_TOL):
        raise fock.TruncationError(
            f"evolve_rho_c: cutoff dim={dim} not converged (doubling delta {delta:.3e}, leakage {leak:.3e})",
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
    }
    return fock.DensityMatrix(space, mat, meta)


# -- moments -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentSeries:
    """Oracle moments along a time grid, with their cutoff diagnostics."""

    tau: np.ndarray
    c_mean: np.ndarray
    c_sq: np.ndarray
    n_mean: np.ndarray
    cutoff: int
    convergence_delta: float
    polynomial_residual: float

    def at(self, i: int) -> Moments:
        return Moments(complex(self.c_mean[i]), complex(self.c_sq[i]), float(self.n_mean[i]), float(self.tau[i]))

    def squeezing(self) -> tuple[np.ndarray, np.ndarray]:
        anom = 2 * (self.c_sq - self.c_mean**2).real
        normal = 2 * (self.n_mean - np.abs(self.c_mean) ** 2)
        return anom + normal, -anom + normal


def _probe_step(params: DerivedParams) -> float:
    factor, _ = _orbit_scale(params)
    reach = abs(params.beta) * factor
    return 1.0 if reach == 0 else PROBE_AMPLITUDE / (3.0 * reach)


def _polynomial_moments(params, alpha_sq, taus, dim):
    """Moments of the photon-number mixture from four probe couplings.

    Under ``H(s) = Omega_c c.dag c + (omega_sw/4)(c^2 + c.dag^2) + (sqrt2/2) zeta s (c + c.dag)``
    the vacuum's moments are polynomials of degree at most two in ``s``
    (the Heisenberg equations are linear with an ``s``-proportional drive).
    The polynomial is interpolated at ``s = 0, h, 2h``, checked at ``3h``,
    and averaged with the exact Poisson moments ``E[n] = |alpha|^2``,
    ``E[n^2] = |alpha|^2 + |alpha|^4``.
    """
    h = _probe_step(params)
    probes = [state_moments(evolve_block(params, j * h, taus, dim)) for j in range(4)]
    e_n = alpha_sq
    e_n2 = alpha_sq + alpha_sq**2
    out = []
    residual = 0.0
    for idx in range(3):
        y0, y1, y2, y3 = (probes[j][idx] for j in range(4))
        p2 = (y2 - 2 * y1 + y0) / (2 * h * h)
        p1 = (y1 - y0) / h - p2 * h
        p0 = y0
        predicted = p0 + 3 * h * p1 + 9 * h * h * p2
        scale = np.maximum(1.0, np.abs(y3))
        residual = max(residual, float(np.max(np.abs(predicted - y3) / scale)))
        out.append(p0 + p1 * e_n + p2 * e_n2)
    c_mean, c_sq, n_mean = out
    return c_mean, c_sq, n_mean.real, residual


def _direct_moments(params, alpha_sq, taus, dim, tail):
    probs, _ = _weights(alpha_sq, None, tail)
    c_mean = np.zeros(len(taus), dtype=complex)
    c_sq = np.zeros(len(taus), dtype=complex)
    n_mean = np.zeros(len(taus))
    for n, p in enumerate(probs):
        m1, m2, m3 = state_moments(evolve_block(params, n, taus, dim))
        c_mean += p * m1
        c_sq += p * m2
        n_mean += p * m3
    return c_mean, c_sq, n_mean, 0.0


def evolve_moment_series(
    params: DerivedParams,
    alpha_sq: float,
    taus,
    *,
    cutoff: int | None = None,
    method: str = "polynomial",
    tail: float = POISSON_TAIL,
) -> MomentSeries:
    """Oracle ``<c>``, ``<c^2>``, ``<c.dag c>`` on a time grid, checked under cutoff doubling.

    Parameters
    ----------
    method : {"polynomial", "direct"}
        ``"direct"`` evolves every retained photon-number block and averages
        with Poisson weights; its cutoff grows with ``beta n_max``.
        ``"polynomial"`` evolves four small probe couplings and averages the
        exact quadratic dependence on ``n``; its cutoff does not depend on ``beta``.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if method == "polynomial":
        auto = block_cutoff(params, 3 * _probe_step(params))
        run = lambda d: _polynomial_moments(params, alpha_sq, taus, d)  # noqa: E731
    elif method == "direct":
        auto = block_cutoff(params, poisson_cutoff(alpha_sq, tail))
        run = lambda d: _direct_moments(params, alpha_sq, taus, d, tail)  # noqa: E731
    else:
        raise ValueError(f"method must be 'polynomial' or 'direct', got {method!r}")
    dim = int(cutoff) if cutoff is not None else auto
    c_mean, c_sq, n_mean, residual = run(dim)
    c2, s2, n2, _ = run(2 * dim)
    delta = float(max(np.max(np.abs(c2 - c_mean)), np.max(np.abs(s2 - c_sq)), np.max(np.abs(n2 - n_mean))))
    return MomentSeries(taus, c_mean, c_sq, n_mean, dim, delta, residual)


def evolve_moments(
    params: DerivedParams,
    alpha_sq: float,
    tau: float,
    space: fock.FockSpace | None = None,
    *,
    method: str = "polynomial",
) -> Moments:
    """Oracle moments at a single time; see :func:`evolve_moment_series`."""
    cutoff = None if space is None else space.dim
    return evolve_moment_series(params, alpha_sq, [tau], cutoff=cutoff, method=method).at(0)


# -- diagonalization chain ---------------------------------------------------


def _transformed_block(params: DerivedParams, n: int, dim: int, count: int) -> np.ndarray:
    """``<k|S(xi) D(beta n) H_n D(-beta n) S(-xi)|k'>`` for ``k, k' < count``."""
    basis = np.zeros((dim, count), dtype=complex)
    basis[np.arange(count), np.arange(count)] = 1.0
    vecs = fock.apply_displacement(fock.apply_squeeze(basis, -params.xi), -params.beta * n)
    band = _bands(params.omega_c, params.omega_sw, _coupling(params) * n, dim)
    hv = band[0][:, None] * vecs
    for off in (1, 2):
        w = band[off, : dim - off][:, None]
        hv[off:] += w * vecs[:-off]
        hv[:-off] += w * vecs[off:]
    hv += params.delta_c * n * vecs
    return vecs.conj().T @ hv


def _diagonalization_numbers(params: DerivedParams, dim: int, photon_numbers, interior: int):
    count = interior + 3
    mats = {n: _transformed_block(params, n, dim, count) for n in photon_numbers}
    m0 = mats[photon_numbers[0]]
    k = np.arange(interior)
    offdiag = 0.0
    for mat in mats.values():
        c2 = np.abs(np.diag(mat, 2)[:interior]) / np.sqrt((k + 1) * (k + 2))
        c2t = np.abs(np.diag(mat, -2)[:interior]) / np.sqrt((k + 1) * (k + 2))
        offdiag = max(offdiag, float(c2.max()), float(c2t.max()))
    number_coeff = float(np.mean(np.diff(np.diag(m0).real)[:interior]))
    d = [mats[n][0, 0].real for n in photon_numbers[:3]]
    kerr = 0.5 * (d[2] - 2 * d[1] + d[0])
    return offdiag, number_coeff, kerr


def check_diagonalization(
    params: DerivedParams,
    space: fock.FockSpace | None = None,
    *,
    photon_numbers=(0, 1, 2),
    interior: int = 8,
) -> tuple[OracleReport, OracleReport, OracleReport]:
    """Test the displacement-then-squeeze diagonalization on photon blocks ``0, 1, 2``.

    For each block the transformed Hamiltonian ``S(xi) D(beta n) H_n D(-beta n) S(-xi)``
    is sampled on the lowest ``interior + 3`` number states. Reported:

    * ``offdiag_c2``: largest ``c^2`` / ``c.dag^2`` coefficient, relative to ``Omega_c``;
    * ``number_coefficient``: mean level spacing, expected ``Omega'_c``;
    * ``kerr``: second difference of the block ground energies in ``n``,
      expected ``-(Omega_c + omega_sw/2) beta^2``.

    Each number is recomputed at twice the cutoff to establish convergence.
    """
    if len(photon_numbers) < 3 or tuple(photon_numbers[:3]) != (0, 1, 2):
        raise ValueError("photon_numbers must start with 0, 1, 2")
    if space is None:
        amp = abs(params.beta) * max(photon_numbers) + math.exp(abs(params.xi)) * math.sqrt(interior + 3)
        space = fock.FockSpace(fock.checked_cutoff(amp**2, abs(params.xi), "check_diagonalization"))
    dim = space.dim
    small = _diagonalization_numbers(params, dim, tuple(photon_numbers), interior)
    large = _diagonalization_numbers(params, 2 * dim, tuple(photon_numbers), interior)
    deltas = [abs(a - b) for a, b in zip(small, large)]
    offdiag, number_coeff, kerr = small
    return (
        OracleReport.build("offdiag_c2", 0.0, offdiag, dim, deltas[0], scale=params.omega_c),
        OracleReport.build(
            "number_coefficient", params.omega_c_prime, number_coeff, dim, deltas[1], scale=params.omega_c_prime
        ),
        OracleReport.build("kerr", params.kerr, kerr, dim, deltas[2], scale=max(1.0, abs(params.kerr))),
    )


# -- full tensor-product check -----------------------------------------------


def _full_hamiltonian(params: DerivedParams, photon_dim: int, bog_dim: int) -> np.ndarray:
    bog = fock.FockSpace(bog_dim)
    c = fock.annihilation(bog).matrix
    cd = c.conj().T
    num_a = np.diag(np.arange(photon_dim, dtype=float))
    eye_a, eye_c = np.eye(photon_dim), np.eye(bog_dim)
    h_c = params.omega_c * cd @ c + 0.25 * params.omega_sw * (c @ c + cd @ cd)
    return (
        params.delta_c * np.kron(num_a, eye_c)
        + np.kron(eye_a, h_c)
        + _coupling(params) * np.kron(num_a, c + cd)
    )


def _full_reduced_state(params, alpha_sq, tau, photon_dim, bog_dim):
    photon = fock.coherent(fock.FockSpace(photon_dim), math.sqrt(alpha_sq), leak_tol=None).normalized()
    psi0 = np.kron(photon.amplitudes, fock.vacuum(fock.FockSpace(bog_dim)).amplitudes)
    hamiltonian = _full_hamiltonian(params, photon_dim, bog_dim)
    propagator = fock.matrix_exp_hermitian(hamiltonian, tau / params.omega_c_prime)
    psi = propagator.matrix @ psi0
    rho = np.outer(psi, psi.conj())
    return fock.partial_trace_first(rho, photon_dim, bog_dim), photon, hamiltonian


def check_full_tensor(
    params: DerivedParams,
    alpha_sq: float,
    tau: float,
    *,
    photon_dim: int = 5,
    bog_dim: int = 64,
) -> tuple[OracleReport, OracleReport, OracleReport]:
    """Compare one dense evolution of the whole two-mode state with the block oracle.

    Runs on a micro truncation (photon levels ``< photon_dim``, Bogoliubov
    levels ``< bog_dim``). The photon coherent state is truncated and
    renormalized, and the block oracle is given exactly those weights, so the
    two routes describe the same finite model. Reported:

    * ``full_tensor_trace_distance``: block oracle versus partial trace;
    * ``delta_c_independence``: partial traces with ``delta_c = 0`` and ``3``;
    * ``photon_number_commutator``: ``max |[H, a.dag a (x) 1]|``.

    ``convergence_delta`` is zero for all three: the comparison is between two
    treatments of the same truncated model, not a limit.
    """
    if photon_dim > 5 or bog_dim > 64:
        raise ValueError("check_full_tensor is a micro-scale check: photon_dim <= 5, bog_dim <= 64")
    reduced, photon, hamiltonian = _full_reduced_state(params, alpha_sq, tau, photon_dim, bog_dim)
    block = evolve_rho_c(
        params,
        alpha_sq,
        tau,
        fock.FockSpace(bog_dim),
        weights=np.abs(photon.amplitudes) ** 2,
        verify=False,
    )
    distance = fock.trace_distance(reduced, block)

    at_zero, _, _ = _full_reduced_state(dataclasses.replace(params, delta_c=0.0), alpha_sq, tau, photon_dim, bog_dim)
    at_three, _, _ = _full_reduced_state(dataclasses.replace(params, delta_c=3.0), alpha_sq, tau, photon_dim, bog_dim)
    delta_c_distance = fock.trace_distance(at_zero, at_three)

    num_a = np.kron(np.diag(np.arange(photon_dim, dtype=float)), np.eye(bog_dim))
    commutator = float(np.max(np.abs(hamiltonian @ num_a - num_a @ hamiltonian)))

    return (
        OracleReport.build("full_tensor_trace_distance", 0.0, distance, bog_dim, 0.0),
        OracleReport.build("delta_c_independence", 0.0, delta_c_distance, bog_dim, 0.0),
        OracleReport.build("photon_number_commutator", 0.0, commutator, bog_dim, 0.0),
    )


def poisson_tail(alpha_sq: float, n_max: int) -> float:
    """Poisson mass beyond ``n_max``."""
    return float(poisson.sf(n_max, alpha_sq))
