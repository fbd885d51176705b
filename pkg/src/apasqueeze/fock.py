"""Dense linear algebra on a truncated number basis ``|0>, ..., |dim-1>``.

Displacement and squeeze unitaries are exponentials of the *truncated*
generators, so they are unitary on the retained block to rounding error.
Their generators are real tridiagonal matrices after a diagonal phase change:

    beta c.dag - beta* c      = -i P (c + c.dag) P.dag,       P = diag(e^{ik(theta + pi/2)})
    (xi* c^2 - xi c.dag^2)/2  = i P (c^2 + c.dag^2)/2 P.dag,  P = diag(e^{ik(theta/2 + pi/4)})

so one symmetric tridiagonal eigendecomposition per dimension (cached) serves
every amplitude and phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln
from scipy.stats import poisson

from . import kernels

__all__ = [
    "TruncationError",
    "FockSpace",
    "FockState",
    "FockOperator",
    "DensityMatrix",
    "LEAK_TOL",
    "MAX_DIM",
    "auto_cutoff",
    "checked_cutoff",
    "annihilation",
    "creation",
    "number",
    "identity",
    "displacement",
    "squeeze",
    "rotation",
    "apply_displacement",
    "apply_squeeze",
    "displace_state",
    "squeeze_state",
    "basis",
    "vacuum",
    "coherent",
    "squeezed_coherent",
    "evolve_free",
    "overlap",
    "fidelity",
    "coherent_overlaps",
    "matrix_exp_hermitian",
    "partial_trace_first",
    "trace_distance",
    "top_leakage",
    "check_leakage",
]

LEAK_TOL = 1e-10
#: Largest dense number-basis dimension chosen automatically.
MAX_DIM = 4096
HERMITIAN_TOL = 1e-10


class TruncationError(RuntimeError):
    """The number-basis cutoff is too small for the requested object."""

    def __init__(self, message: str, leakage: float = float("nan"), dim: int | None = None):
        super().__init__(message)
        self.leakage = leakage
        self.dim = dim


def auto_cutoff(mean_occupation: float, squeeze_r: float = 0.0) -> int:
    """Default dimension ``ceil(m + 10 sqrt(m + 1) + 20)`` for mean occupation ``m``.

    A squeeze of modulus ``r`` widens the number distribution of a displaced
    state by up to ``e^r`` and gives it a geometric tail ``~ tanh(r)^(k/2)``;
    the width term is scaled accordingly and enough levels are added for that
    tail to fall below 1e-16.
    """
    m = max(float(mean_occupation), 0.0)
    r = abs(float(squeeze_r))
    dim = int(math.ceil(m + 10.0 * math.exp(r) * math.sqrt(m + 1.0) + 20.0))
    if r > 0:
        dim += int(math.ceil(2.0 * math.log(1e-16) / math.log(math.tanh(r))))
    return dim


def checked_cutoff(mean_occupation: float, squeeze_r: float = 0.0, what: str = "state") -> int:
    """:func:`auto_cutoff`, refusing dimensions whose doubling check would exceed ``2 * MAX_DIM``."""
    dim = auto_cutoff(mean_occupation, squeeze_r)
    if dim > MAX_DIM:
        raise TruncationError(
            f"{what}: automatic cutoff {dim} exceeds the dense limit {MAX_DIM}; pass an explicit cutoff",
            dim=dim,
        )
    return dim


@dataclass(frozen=True)
class FockSpace:
    dim: int

    def __post_init__(self):
        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"FockSpace dim must be an integer >= 2, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))

    def doubled(self) -> FockSpace:
        return FockSpace(2 * self.dim)


def top_leakage(amplitudes: np.ndarray) -> float:
    """Norm of the component in the topmost 10% of the retained levels."""
    dim = amplitudes.shape[0]
    top = max(1, int(math.ceil(0.1 * dim)))
    return float(np.linalg.norm(amplitudes[dim - top:]))


def check_leakage(amplitudes: np.ndarray, what: str, tol: float | None) -> float:
    leak = top_leakage(amplitudes)
    if tol is not None and leak > tol:
        raise TruncationError(
            f"{what}: cutoff dim={amplitudes.shape[0]} too small, top-level leakage {leak:.3e} > {tol:.1e}",
            leakage=leak,
            dim=amplitudes.shape[0],
        )
    return leak


@dataclass(frozen=True, eq=False)
class FockState:
    space: FockSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.dim,):
            raise ValueError(f"amplitudes must have shape ({self.space.dim},), got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.space.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> FockState:
        return FockState(self.space, self.amplitudes / self.norm())

    def expect(self, op) -> complex:
        matrix = op.matrix if isinstance(op, FockOperator) else np.asarray(op)
        return complex(np.vdot(self.amplitudes, matrix @ self.amplitudes))

    def leakage(self) -> float:
        return top_leakage(self.amplitudes)

    def projector(self) -> DensityMatrix:
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class FockOperator:
    space: FockSpace
    matrix: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        mat = np.asarray(self.matrix)
        if mat.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix must be {self.space.dim}x{self.space.dim}, got {mat.shape}")
        object.__setattr__(self, "matrix", mat)

    def dag(self) -> FockOperator:
        return FockOperator(self.space, self.matrix.conj().T, self.leakage)

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            _same_space(self.space, other.space)
            return FockOperator(self.space, self.matrix @ other.matrix, max(self.leakage, other.leakage))
        if isinstance(other, FockState):
            _same_space(self.space, other.space)
            return FockState(self.space, self.matrix @ other.amplitudes)
        return NotImplemented

    def unitarity_residual(self) -> float:
        """``max |U.dag U - I|`` over the retained block."""
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.space.dim))))

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian matrix over a truncated space; ``meta`` carries provenance numbers."""

    space: FockSpace
    matrix: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix must be {self.space.dim}x{self.space.dim}, got {mat.shape}")
        herm = float(np.max(np.abs(mat - mat.conj().T)))
        if herm > HERMITIAN_TOL:
            raise ValueError(f"density matrix not Hermitian: residual {herm:.3e}")
        object.__setattr__(self, "matrix", 0.5 * (mat + mat.conj().T))

    @classmethod
    def from_state(cls, state: FockState) -> DensityMatrix:
        return state.projector()

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.real(np.sum(self.matrix * self.matrix.T)))

    def expect(self, op) -> complex:
        matrix = op.matrix if isinstance(op, FockOperator) else np.asarray(op)
        return complex(np.sum(self.matrix * matrix.T))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def check(self, trace_tol: float = 1e-8, eig_floor: float = -1e-10) -> None:
        """Raise ``ValueError`` unless trace and positivity hold."""
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace {tr!r} differs from 1 by more than {trace_tol:g}")
        lo = float(self.eigenvalues().min())
        if lo < eig_floor:
            raise ValueError(f"negative eigenvalue {lo:.3e} below {eig_floor:g}")

    def leakage(self) -> float:
        """Square root of the population in the topmost 10% of levels."""
        dim = self.space.dim
        top = max(1, int(math.ceil(0.1 * dim)))
        return math.sqrt(max(float(np.trace(self.matrix[dim - top:, dim - top:]).real), 0.0))


def _same_space(a: FockSpace, b: FockSpace) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


# -- ladder operators --------------------------------------------------------


def annihilation(space: FockSpace) -> FockOperator:
    return FockOperator(space, np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), 1).astype(complex))


def creation(space: FockSpace) -> FockOperator:
    return annihilation(space).dag()


def number(space: FockSpace) -> FockOperator:
    return FockOperator(space, np.diag(np.arange(space.dim, dtype=float)).astype(complex))


def identity(space: FockSpace) -> FockOperator:
    return FockOperator(space, np.eye(space.dim, dtype=complex))


def rotation(space: FockSpace, angle: float) -> FockOperator:
    """``exp(-i angle c.dag c)``."""
    return FockOperator(space, np.diag(np.exp(-1j * angle * np.arange(space.dim))))


# -- spectral caches for the displacement and squeeze generators -------------


@lru_cache(maxsize=4)
def _quadrature_eig(dim: int):
    # c + c.dag: zero diagonal, off-diagonal sqrt(k)
    lam, vecs = eigh_tridiagonal(np.zeros(dim), np.sqrt(np.arange(1, dim, dtype=float)))
    lam.flags.writeable = False
    vecs.flags.writeable = False
    return lam, vecs


@lru_cache(maxsize=4)
def _pair_eig(dim: int):
    # (c^2 + c.dag^2)/2 splits into two tridiagonal blocks by parity
    blocks = []
    for parity in (0, 1):
        idx = np.arange(parity, dim, 2)
        if idx.size == 1:
            lam, vecs = np.zeros(1), np.ones((1, 1))
        else:
            k = idx[:-1].astype(float)
            lam, vecs = eigh_tridiagonal(np.zeros(idx.size), 0.5 * np.sqrt((k + 1.0) * (k + 2.0)))
        for arr in (idx, lam, vecs):
            arr.flags.writeable = False
        blocks.append((idx, lam, vecs))
    return tuple(blocks)


def _displacement_factors(dim: int, beta: complex):
    r, theta = abs(beta), float(np.angle(beta))
    lam, vecs = _quadrature_eig(dim)
    phase = np.exp(1j * (theta + 0.5 * np.pi) * np.arange(dim))
    return phase, vecs, np.exp(-1j * r * lam)


def _squeeze_factors(dim: int, xi: complex):
    r, theta = abs(xi), float(np.angle(xi))
    phase = np.exp(1j * (0.5 * theta + 0.25 * np.pi) * np.arange(dim))
    return phase, [(idx, vecs, np.exp(1j * r * lam)) for idx, lam, vecs in _pair_eig(dim)]


def apply_displacement(vectors: np.ndarray, beta: complex) -> np.ndarray:
    """``D(beta)`` applied to the columns of ``vectors`` (first axis is the number index)."""
    if beta == 0:
        return np.array(vectors, dtype=complex)
    phase, vecs, spec = _displacement_factors(vectors.shape[0], beta)
    col = (slice(None),) + (None,) * (vectors.ndim - 1)
    w = phase.conj()[col] * vectors
    w = vecs @ (spec[col] * (vecs.T @ w))
    return phase[col] * w


def apply_squeeze(vectors: np.ndarray, xi: complex) -> np.ndarray:
    """``S(xi)`` applied to the columns of ``vectors`` (first axis is the number index)."""
    if xi == 0:
        return np.array(vectors, dtype=complex)
    phase, blocks = _squeeze_factors(vectors.shape[0], xi)
    col = (slice(None),) + (None,) * (vectors.ndim - 1)
    w = phase.conj()[col] * vectors
    out = np.empty_like(w, dtype=complex)
    for idx, vecs, spec in blocks:
        out[idx] = vecs @ (spec[col] * (vecs.T @ w[idx]))
    return phase[col] * out


def displacement(space: FockSpace, beta: complex, leak_tol: float | None = LEAK_TOL) -> FockOperator:
    """``D(beta) = exp(beta c.dag - beta* c)`` on the truncated space.

    Raises ``TruncationError`` when ``D(beta)|0>`` reaches the top 10% of the
    levels with norm above ``leak_tol`` (pass ``None`` to skip the check).
    """
    mat = apply_displacement(np.eye(space.dim, dtype=complex), complex(beta))
    leak = check_leakage(mat[:, 0], f"displacement({beta})", leak_tol)
    return FockOperator(space, mat, leak)


def squeeze(space: FockSpace, xi: complex, leak_tol: float | None = LEAK_TOL) -> FockOperator:
    """``S(xi) = exp((xi* c^2 - xi c.dag^2)/2)`` on the truncated space."""
    mat = apply_squeeze(np.eye(space.dim, dtype=complex), complex(xi))
    leak = check_leakage(mat[:, 0], f"squeeze({xi})", leak_tol)
    return FockOperator(space, mat, leak)


def displace_state(state: FockState, beta: complex) -> FockState:
    """``D(beta)|state>`` without forming the operator."""
    return FockState(state.space, apply_displacement(state.amplitudes, complex(beta)))


def squeeze_state(state: FockState, xi: complex) -> FockState:
    """``S(xi)|state>`` without forming the operator."""
    return FockState(state.space, apply_squeeze(state.amplitudes, complex(xi)))


# -- states ------------------------------------------------------------------


def basis(space: FockSpace, n: int) -> FockState:
    amps = np.zeros(space.dim, dtype=complex)
    amps[n] = 1.0
    return FockState(space, amps)


def vacuum(space: FockSpace) -> FockState:
    return basis(space, 0)


def coherent(space: FockSpace, beta: complex, leak_tol: float | None = LEAK_TOL) -> FockState:
    """Coherent state from its number-basis expansion ``e^{-|b|^2/2} b^n / sqrt(n!)``."""
    beta = complex(beta)
    if beta == 0:
        return vacuum(space)
    k = np.arange(space.dim)
    r = abs(beta)
    log_mag = -0.5 * r * r + k * math.log(r) - 0.5 * gammaln(k + 1.0)
    amps = np.exp(log_mag) * np.exp(1j * np.angle(beta) * k)
    missing = math.sqrt(max(float(poisson.sf(space.dim - 1, r * r)), 0.0))
    if leak_tol is not None and missing > leak_tol:
        raise TruncationError(
            f"coherent({beta}): dim={space.dim} misses norm {missing:.3e}", leakage=missing, dim=space.dim
        )
    return FockState(space, amps)


def squeezed_coherent(
    space: FockSpace, beta: complex, xi: complex, leak_tol: float | None = LEAK_TOL
) -> FockState:
    """``|beta, xi> = S(xi) D(beta) |0>``."""
    state = squeeze_state(displace_state(vacuum(space), beta), xi)
    check_leakage(state.amplitudes, f"squeezed_coherent({beta}, {xi})", leak_tol)
    return state


def evolve_free(state: FockState, omega_t: float) -> FockState:
    """Free evolution ``exp(-i omega_t c.dag c)``: amplitude ``n`` picks up ``e^{-i n omega_t}``."""
    return FockState(state.space, state.amplitudes * np.exp(-1j * omega_t * np.arange(state.dim)))


def overlap(a: FockState, b: FockState) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    _same_space(a.space, b.space)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: FockState, b: FockState) -> float:
    """``|<a|b>|^2`` for normalized states; insensitive to global phase."""
    return abs(overlap(a, b)) ** 2


def coherent_overlaps(gammas, state: FockState) -> np.ndarray:
    """``<gamma|state>`` for every coherent label in ``gammas`` (any shape)."""
    gammas = np.asarray(gammas, dtype=complex)
    flat = kernels.coherent_overlaps(np.ascontiguousarray(gammas.ravel()), state.amplitudes)
    return flat.reshape(gammas.shape)


def matrix_exp_hermitian(H, t: float) -> FockOperator:
    """``exp(-i H t)`` by spectral decomposition of a Hermitian ``H``."""
    if isinstance(H, FockOperator):
        space, mat = H.space, H.matrix
    else:
        mat = np.asarray(H)
        space = FockSpace(mat.shape[0])
    scale = max(1.0, float(np.max(np.abs(mat))))
    herm = float(np.max(np.abs(mat - mat.conj().T)))
    if herm > HERMITIAN_TOL * scale:
        raise ValueError(f"matrix_exp_hermitian: input not Hermitian (residual {herm:.3e})")
    lam, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    return FockOperator(space, (vecs * np.exp(-1j * t * lam)) @ vecs.conj().T)


def partial_trace_first(rho, dim_a: int, dim_b: int) -> DensityMatrix:
    """Trace out the first factor of ``A (x) B``."""
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if mat.shape != (dim_a * dim_b, dim_a * dim_b):
        raise ValueError(f"partial_trace_first: shape {mat.shape} is not ({dim_a}*{dim_b})^2")
    reduced = np.einsum("ijik->jk", mat.reshape(dim_a, dim_b, dim_a, dim_b))
    return DensityMatrix(FockSpace(dim_b), reduced)


def trace_distance(a, b) -> float:
    """``(1/2) ||a - b||_1`` for Hermitian matrices."""
    ma = a.matrix if isinstance(a, DensityMatrix) else np.asarray(a)
    mb = b.matrix if isinstance(b, DensityMatrix) else np.asarray(b)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    diff = ma - mb
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))
