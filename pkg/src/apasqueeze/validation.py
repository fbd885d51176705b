"""Analytic-versus-oracle sweep used by ``apasqueeze validate``."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import analytic, fock, oracle
from .params import DerivedParams, PhysicalConfig, derive

__all__ = [
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_DISCREPANCY",
    "EXIT_TRUNCATION",
    "ValidationResult",
    "default_taus",
    "lattice_reports",
    "run_validation",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DISCREPANCY = 3
EXIT_TRUNCATION = 4

DUAL_ROUTE_POINTS = 400


def default_taus(steps: int = 9, tau_max: float = 2 * math.pi) -> np.ndarray:
    return np.linspace(0.0, tau_max, steps)


@dataclass
class ValidationResult:
    reports: list = field(default_factory=list)
    truncation_failures: list = field(default_factory=list)
    tol: float = 1e-6

    def failing(self) -> list:
        return [r for r in self.reports if r.converged and not r.passed(self.tol)]

    def unconverged(self) -> list:
        return [r for r in self.reports if not r.converged]

    @property
    def exit_code(self) -> int:
        # a disagreement at converged cutoffs outranks a cutoff problem
        if self.failing():
            return EXIT_DISCREPANCY
        if self.unconverged() or self.truncation_failures:
            return EXIT_TRUNCATION
        return EXIT_OK

    def as_dict(self) -> dict:
        return {
            "tol": self.tol,
            "exit_code": self.exit_code,
            "n_reports": len(self.reports),
            "n_failing": len(self.failing()),
            "n_unconverged": len(self.unconverged()),
            "truncation_failures": list(self.truncation_failures),
            "reports": [r.as_dict() for r in self.reports],
        }


def _tau_label(tau: float) -> str:
    return f"{tau:.6f}"


def lattice_reports(params: DerivedParams, alpha_sq: float, taus, cutoff: int | None = None) -> list:
    """Analytic moments and squeezing parameters against the oracle on a time grid.

    Also adds one ``dual_route`` report comparing the closed-form squeezing
    parameters with the moment-assembled ones on a dense grid over ``[0, 4 pi]``.
    """
    taus = np.asarray(taus, dtype=float)
    label = f"omega_sw={params.omega_sw:g}"
    series = oracle.evolve_moment_series(params, alpha_sq, taus, cutoff=cutoff)
    oq, op = series.squeezing()
    reports = []
    for i, tau in enumerate(taus):
        mom = analytic.moments(params, alpha_sq, tau)
        sq = analytic.squeezing(params, alpha_sq, tau)
        ref = series.at(i)
        where = f"{label},tau={_tau_label(tau)}"
        pairs = [
            ("c_mean_re", mom.c_mean.real, ref.c_mean.real),
            ("c_mean_im", mom.c_mean.imag, ref.c_mean.imag),
            ("c_sq_re", mom.c_sq.real, ref.c_sq.real),
            ("c_sq_im", mom.c_sq.imag, ref.c_sq.imag),
            ("n_mean", mom.n_mean, ref.n_mean),
            ("s_q", sq.s_q, oq[i]),
            ("s_p", sq.s_p, op[i]),
        ]
        for name, a_val, o_val in pairs:
            reports.append(
                oracle.OracleReport.build(f"{name}[{where}]", a_val, o_val, series.cutoff, series.convergence_delta)
            )
    dense = analytic.squeeze_series(params, alpha_sq, np.linspace(0, 4 * math.pi, DUAL_ROUTE_POINTS))
    reports.append(
        oracle.OracleReport(
            quantity=f"dual_route[{label}]",
            analytic=0.0,
            oracle=dense.dual_route_residual,
            abs_residual=dense.dual_route_residual,
            rel_residual=dense.dual_route_residual,
            cutoff=0,
            convergence_delta=0.0,
            converged=True,
        )
    )
    return reports


def _lattice_job(args):
    config, branch, omega_sw, taus, cutoff = args
    params = derive(config.with_omega_sw(omega_sw), branch=branch)
    return lattice_reports(params, config.alpha_sq, taus, cutoff)


def _state_reports(params: DerivedParams, alpha_sq: float, tau: float) -> list:
    """Trace distance between the closed-form and the oracle reduced states."""
    ref = oracle.evolve_rho_c(params, alpha_sq, tau)
    closed = analytic.rho_c(params, alpha_sq, tau, ref.space)
    distance = fock.trace_distance(closed, ref)
    delta = max(ref.meta["convergence_delta"], closed.meta["convergence_delta"])
    where = f"omega_sw={params.omega_sw:g},tau={_tau_label(tau)}"
    return [oracle.OracleReport.build(f"rho_c_trace_distance[{where}]", 0.0, distance, ref.space.dim, delta)]


def run_validation(
    config: PhysicalConfig,
    *,
    tol: float = 1e-6,
    branch: str = "printed",
    omega_sw_list=(0.0, 5.0, 10.0, 15.0, 20.0),
    taus=None,
    cutoff: int | None = None,
    state_tau: float = 0.5 * math.pi,
    workers: int = 1,
) -> ValidationResult:
    """Run every oracle comparison and collect the reports.

    The moment lattice covers ``omega_sw_list x taus``; the diagonalization
    check runs at each ``omega_sw``; the reduced-state and full-tensor checks
    run once at the configuration's own parameters. Truncation failures are
    recorded rather than raised.
    """
    taus = default_taus() if taus is None else np.asarray(taus, dtype=float)
    result = ValidationResult(tol=tol)
    jobs = [(config, branch, float(w), taus, cutoff) for w in omega_sw_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_lattice_job, jobs))
    else:
        outcomes = [_lattice_job(job) for job in jobs]
    for reports in outcomes:
        result.reports.extend(reports)

    for w in omega_sw_list:
        params = derive(config.with_omega_sw(w), branch=branch)
        try:
            for report in oracle.check_diagonalization(params):
                result.reports.append(_relabel(report, f"{report.quantity}[omega_sw={w:g}]"))
        except fock.TruncationError as exc:
            result.truncation_failures.append(f"check_diagonalization[omega_sw={w:g}]: {exc}")

    params = derive(config, branch=branch)
    for report in oracle.check_full_tensor(params, config.alpha_sq, state_tau):
        result.reports.append(_relabel(report, f"{report.quantity}[omega_sw={params.omega_sw:g}]"))
    try:
        result.reports.extend(_state_reports(params, config.alpha_sq, state_tau))
    except fock.TruncationError as exc:
        result.truncation_failures.append(f"rho_c[omega_sw={params.omega_sw:g}]: {exc}")
    return result


def _relabel(report: oracle.OracleReport, quantity: str) -> oracle.OracleReport:
    return replace(report, quantity=quantity)
