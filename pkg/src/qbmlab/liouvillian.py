"""Dense-scale Liouvillians in a truncated Fock basis.

Vectorization is column-stacking throughout: vec(A rho B) = (B^T kron A)
vec(rho), so the generator of

    drho/dt = -i[H, rho] + sum_k ( L_k rho L_k^dag - {L_k^dag L_k, rho}/2 )

is

    L = -i (I kron H - H^T kron I)
        + sum_k [ conj(L_k) kron L_k
                  - (I kron L_k^dag L_k)/2 - ((L_k^dag L_k)^T kron I)/2 ].

Double-commutator (coefficient-only) dissipators are assembled directly from
the same building blocks.  Matrices are kept sparse internally (the Fock
representations of x and p are banded); `Superoperator.entries` materializes
the dense array on demand.

The generator can also be applied in matrix form without ever forming the
dim^2 x dim^2 matrix (`GeneratorAction`); the covariance checks use this
path, which scales as dim^3 instead of dim^4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import (
    InvalidGridError,
    InvalidParameterError,
    NoStationaryStateError,
    NumericalError,
    ResourceLimitError,
    ShapeError,
)
from .fock import DensityMatrix, build_quadratures, default_guard, truncation_residual
from .models import MasterEquationModel

RESOURCE_CAP_DIM_SQ = 6400       # largest allowed superoperator side length
DENSE_EXPM_MAX = 2500            # dense expm up to this side length, integrator above
STATIONARY_EIGENVALUE_TOL = 1e-8
UNIQUENESS_GAP = 1e-6
TRACE_DRIFT_TOL = 1e-8
TRUNCATION_TOL = 1e-8

__all__ = [
    "Superoperator",
    "EvolutionResult",
    "StationaryState",
    "GeneratorAction",
    "vec",
    "unvec",
    "model_operators",
    "assemble",
    "generator_action",
    "evolve",
    "stationary_state",
    "choi_matrix",
    "generator_residual",
    "normalized_generator_residual",
]


def vec(mat: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(mat, dtype=complex).reshape(-1, order="F")


def unvec(vector: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(vector, dtype=complex).reshape(dim, dim, order="F")


@dataclass(frozen=True)
class Superoperator:
    """Generator matrix acting on column-stacked density matrices."""

    dim: int
    matrix: sp.csr_matrix
    label: str = ""

    @property
    def entries(self) -> np.ndarray:
        """Dense dim^2 x dim^2 array (materialized on demand)."""
        return self.matrix.toarray()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim)

    def frobenius_norm(self) -> float:
        return float(spla.norm(self.matrix))


@dataclass(frozen=True)
class EvolutionResult:
    """States at the requested times plus reliability diagnostics.

    States are Hermitized reshapes of exp(L t) vec(rho0); they are *not*
    renormalized and negative eigenvalues are reported, never clipped —
    positivity violations are data for the CP checks.
    """

    times: tuple[float, ...]
    states: tuple[DensityMatrix, ...]
    trace_drift: float
    min_eigenvalue: float
    truncation_residual: float
    guard: int
    reliable: bool


@dataclass(frozen=True)
class StationaryState:
    """Kernel element of a generator.

    For a degenerate kernel no representative is chosen: `state` is None and
    `kernel` holds every Hermitized kernel matrix found (unitary models
    genuinely have non-unique stationary states).
    """

    state: DensityMatrix | None
    eigenvalue: complex
    unique: bool
    gap: float
    degenerate: bool
    min_eigenvalue: float | None
    residual: float | None
    kernel: tuple[np.ndarray, ...] = field(default=())


def model_operators(
    model: MasterEquationModel, dim: int
) -> tuple[np.ndarray, list[np.ndarray], np.ndarray, np.ndarray]:
    """Hamiltonian, channel matrices and quadratures of a model at size dim.

    The basis frequency is the model's own omega for harmonic models and the
    recorded reference frequency for free ones.
    """
    ham = model.hamiltonian
    w_basis = model.fock_basis_omega()
    x_op, p_op = build_quadratures(dim, ham.mass, w_basis)
    x, p = x_op.entries, p_op.entries
    h = p @ p / (2.0 * ham.mass)
    if ham.omega > 0:
        h = h + 0.5 * ham.mass * ham.omega ** 2 * (x @ x)
    if ham.kappa != 0.0:
        h = h + 0.5 * ham.kappa * (x @ p + p @ x)
    channels = [ch.cx * x + ch.cp * p for ch in model.channels]
    return h, channels, x, p


def _left(op: np.ndarray) -> sp.csr_matrix:
    n = op.shape[0]
    return sp.kron(sp.identity(n), sp.csr_matrix(op), format="csr")


def _right(op: np.ndarray) -> sp.csr_matrix:
    n = op.shape[0]
    return sp.kron(sp.csr_matrix(op).T, sp.identity(n), format="csr")


def assemble(model: MasterEquationModel, dim: int, part: str = "full") -> Superoperator:
    """Superoperator of a model at Hilbert dimension `dim`.

    `part` selects which generator to build: "full"; "ti" drops the external
    potential commutator -i[(1/2) M w^2 x^2, .] but keeps kinetic and kappa
    terms (the translation-covariance checks act on this one); "dissipator"
    drops the Hamiltonian entirely.
    """
    if part not in ("full", "ti", "dissipator"):
        raise InvalidParameterError(f"unknown generator part {part!r}")
    if dim * dim > RESOURCE_CAP_DIM_SQ:
        raise ResourceLimitError(
            f"dim^2 = {dim * dim} exceeds the superoperator cap {RESOURCE_CAP_DIM_SQ}"
        )
    h, channels, x, p = model_operators(model, dim)
    if part == "ti" and model.hamiltonian.omega > 0:
        ham = model.hamiltonian
        h = h - 0.5 * ham.mass * ham.omega ** 2 * (x @ x)
    n2 = dim * dim
    total = sp.csr_matrix((n2, n2), dtype=complex)
    if part != "dissipator":
        total = total + (-1j) * (_left(h) - _right(h))
    for L in channels:
        ldl = L.conj().T @ L
        total = total + sp.kron(sp.csr_matrix(L).conj(), sp.csr_matrix(L), format="csr")
        total = total - 0.5 * _left(ldl) - 0.5 * _right(ldl)
    if model.coefficients is not None:
        c = model.coefficients
        comm_x = _left(x) - _right(x)
        comm_p = _left(p) - _right(p)
        anti_p = _left(p) + _right(p)
        total = total - 1j * c.eta * comm_x @ anti_p
        total = total - c.dpp * comm_x @ comm_x - c.dxx * comm_p @ comm_p
        if c.dxp != 0.0:
            total = total + c.dxp * (comm_x @ comm_p + comm_p @ comm_x)
    return Superoperator(dim=dim, matrix=total.tocsr(), label=f"{model.label}:{part}")


@dataclass(frozen=True)
class GeneratorAction:
    """Matrix-form application of a generator part (no dim^4 object)."""

    dim: int
    hamiltonian: np.ndarray | None
    channels: tuple[np.ndarray, ...]
    coefficients: tuple[float, float, float, float] | None
    x: np.ndarray
    p: np.ndarray

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        if self.hamiltonian is not None:
            out = out - 1j * (self.hamiltonian @ rho - rho @ self.hamiltonian)
        for L in self.channels:
            ld = L.conj().T
            ldl = ld @ L
            out = out + L @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl)
        if self.coefficients is not None:
            eta, dpp, dxx, dxp = self.coefficients
            x, p = self.x, self.p
            if eta != 0.0:
                anti = p @ rho + rho @ p
                out = out - 1j * eta * (x @ anti - anti @ x)
            if dpp != 0.0:
                c = x @ rho - rho @ x
                out = out - dpp * (x @ c - c @ x)
            if dxx != 0.0:
                c = p @ rho - rho @ p
                out = out - dxx * (p @ c - c @ p)
            if dxp != 0.0:
                cp_ = p @ rho - rho @ p
                cx_ = x @ rho - rho @ x
                out = out + dxp * ((x @ cp_ - cp_ @ x) + (p @ cx_ - cx_ @ p))
        return out


def generator_action(model: MasterEquationModel, dim: int, part: str = "full") -> GeneratorAction:
    """Build the matrix-form generator; `part` as in :func:`assemble`."""
    if part not in ("full", "ti", "dissipator"):
        raise InvalidParameterError(f"unknown generator part {part!r}")
    h, channels, x, p = model_operators(model, dim)
    if part == "ti" and model.hamiltonian.omega > 0:
        ham = model.hamiltonian
        h = h - 0.5 * ham.mass * ham.omega ** 2 * (x @ x)
    coeffs = None
    if model.coefficients is not None:
        c = model.coefficients
        coeffs = (c.eta, c.dpp, c.dxx, c.dxp)
    return GeneratorAction(
        dim=dim,
        hamiltonian=None if part == "dissipator" else h,
        channels=tuple(channels),
        coefficients=coeffs,
        x=x,
        p=p,
    )


def _check_times(times: list[float]) -> list[float]:
    ts = [float(t) for t in times]
    if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])) or (ts and ts[0] < 0):
        raise InvalidGridError(f"times must be ascending and nonnegative, got {ts}")
    return ts


def evolve(
    sop: Superoperator,
    rho0: DensityMatrix,
    times: list[float],
    guard: int | None = None,
) -> EvolutionResult:
    """Propagate a state to the requested times.

    Uses the dense matrix exponential up to side length DENSE_EXPM_MAX and an
    adaptive integrator (rtol 1e-10) above it.
    """
    if rho0.dim != sop.dim:
        raise ShapeError(f"state dim {rho0.dim} != superoperator dim {sop.dim}")
    ts = _check_times(times)
    if guard is None:
        guard = default_guard(sop.dim)
    n2 = sop.dim * sop.dim
    raw_states: list[np.ndarray] = []
    if n2 <= DENSE_EXPM_MAX:
        dense = sop.matrix.toarray()
        v = vec(rho0.entries)
        t_prev = 0.0
        step_cache: dict[float, np.ndarray] = {}
        for t in ts:
            dt = t - t_prev
            if dt > 0:
                if dt not in step_cache:
                    step_cache[dt] = expm(dense * dt)
                v = step_cache[dt] @ v
            raw_states.append(unvec(v, sop.dim))
            t_prev = t
    else:
        matrix = sop.matrix
        def rhs(_t: float, y: np.ndarray) -> np.ndarray:
            return matrix @ y
        v0 = vec(rho0.entries)
        t_end = ts[-1] if ts else 0.0
        positive = [t for t in ts if t > 0]
        if positive:
            sol = solve_ivp(rhs, (0.0, t_end), v0, t_eval=positive,
                            rtol=1e-10, atol=1e-12, method="DOP853")
            if not sol.success:
                raise NumericalError(f"evolution integrator failed: {sol.message}")
        col = 0
        for t in ts:
            if t == 0.0:
                raw_states.append(unvec(v0, sop.dim))
            else:
                raw_states.append(unvec(sol.y[:, col], sop.dim))
                col += 1

    states = []
    trace_drift = 0.0
    min_eig = np.inf
    trunc = 0.0
    for raw in raw_states:
        herm = 0.5 * (raw + raw.conj().T)
        state = DensityMatrix(sop.dim, herm, validate=False)
        states.append(state)
        trace_drift = max(trace_drift, abs(float(herm.trace().real) - 1.0))
        min_eig = min(min_eig, state.min_eigenvalue())
        trunc = max(trunc, truncation_residual(state, guard))
    if not states:
        min_eig = 0.0
    reliable = trace_drift <= TRACE_DRIFT_TOL and trunc <= TRUNCATION_TOL
    return EvolutionResult(
        times=tuple(ts),
        states=tuple(states),
        trace_drift=trace_drift,
        min_eigenvalue=float(min_eig),
        truncation_residual=trunc,
        guard=guard,
        reliable=reliable,
    )


def _kernel_candidates(sop: Superoperator, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of smallest modulus: shift-invert first, dense fallback."""
    n2 = sop.dim * sop.dim
    k = min(k, n2 - 2)
    try:
        # fixed start vector keeps repeated runs bit-identical
        v0 = np.full(n2, 1.0 / np.sqrt(n2), dtype=complex)
        vals, vecs = spla.eigs(sop.matrix.tocsc(), k=k, sigma=0.0, which="LM", v0=v0)
        return vals, vecs
    except Exception:
        if n2 > DENSE_EXPM_MAX:
            raise NumericalError(
                f"shift-invert eigensolve failed at dim^2 = {n2}, too large for dense fallback"
            )
        vals, vecs = np.linalg.eig(sop.matrix.toarray())
        order = np.argsort(np.abs(vals))
        return vals[order[:k]], vecs[:, order[:k]]


def stationary_state(sop: Superoperator) -> StationaryState:
    """Kernel of the generator, phase-fixed, Hermitized, trace-normalized.

    Raises NoStationaryStateError when no eigenvalue lies within 1e-8 of
    zero.  A kernel gap below 1e-6 marks the result degenerate; then all
    kernel vectors found are returned and no representative is selected.
    """
    vals, vecs = _kernel_candidates(sop, k=4)
    order = np.argsort(np.abs(vals))
    vals, vecs = vals[order], vecs[:, order]
    if abs(vals[0]) > STATIONARY_EIGENVALUE_TOL:
        raise NoStationaryStateError(
            f"smallest generator eigenvalue has modulus {abs(vals[0]):.3e}"
        )
    gap = float(abs(vals[1])) if len(vals) > 1 else np.inf
    degenerate = gap <= UNIQUENESS_GAP
    if degenerate:
        kernel = []
        n2 = sop.dim * sop.dim
        if n2 <= DENSE_EXPM_MAX:
            all_vals, all_vecs = np.linalg.eig(sop.matrix.toarray())
            sel = np.abs(all_vals) <= STATIONARY_EIGENVALUE_TOL
            vectors = all_vecs[:, sel].T
        else:
            vectors = [vecs[:, i] for i in range(len(vals))
                       if abs(vals[i]) <= STATIONARY_EIGENVALUE_TOL]
        for v in vectors:
            mat = unvec(np.asarray(v), sop.dim)
            kernel.append(0.5 * (mat + mat.conj().T))
        return StationaryState(
            state=None, eigenvalue=complex(vals[0]), unique=False, gap=gap,
            degenerate=True, min_eigenvalue=None, residual=None, kernel=tuple(kernel),
        )
    rho = unvec(vecs[:, 0], sop.dim)
    tr = rho.trace()
    if abs(tr) < 1e-12:
        raise NumericalError("kernel vector is traceless; cannot normalize to a state")
    rho = rho * (np.conj(tr) / abs(tr))      # make the trace positive real
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / rho.trace().real
    image = sop.apply(rho)
    image = 0.5 * (image + image.conj().T)
    residual = float(np.abs(np.linalg.eigvalsh(image)).sum())
    state = DensityMatrix(sop.dim, rho, validate=False)
    return StationaryState(
        state=state,
        eigenvalue=complex(vals[0]),
        unique=True,
        gap=gap,
        degenerate=False,
        min_eigenvalue=state.min_eigenvalue(),
        residual=residual,
    )


def choi_matrix(sop: Superoperator, t: float) -> np.ndarray:
    """Choi matrix of exp(L t): sum_ij |i><j| kron map(|i><j|).

    Positive semidefinite exactly when the time-t map is completely
    positive; trace equals dim for a trace-preserving map.
    """
    if t <= 0:
        raise InvalidParameterError(f"Choi time must be positive, got {t}")
    dim = sop.dim
    umap = expm(sop.matrix.toarray() * t)
    j = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for jj in range(dim):
            block = umap[:, jj * dim + i].reshape(dim, dim, order="F")
            j[i * dim:(i + 1) * dim, jj * dim:(jj + 1) * dim] = block
    dev = np.abs(j - j.conj().T).max()
    if dev > 1e-10 * max(1.0, np.abs(j).max()):
        raise NumericalError(f"Choi matrix deviates from Hermiticity by {dev:.3e}")
    return 0.5 * (j + j.conj().T)


def generator_residual(sop: Superoperator, rho: DensityMatrix) -> float:
    """Trace norm of the generator applied to a state."""
    if rho.dim != sop.dim:
        raise ShapeError(f"state dim {rho.dim} != superoperator dim {sop.dim}")
    image = sop.apply(rho.entries)
    image = 0.5 * (image + image.conj().T)
    return float(np.abs(np.linalg.eigvalsh(image)).sum())


def normalized_generator_residual(sop: Superoperator, rho: DensityMatrix) -> float:
    """Stationarity residual on the generator's mean-entry scale.

    The raw trace norm is divided by ||L||_F / dim^2 (the RMS matrix entry
    of the generator), which makes verdicts comparable across dimensions and
    parameter grids.
    """
    scale = sop.frobenius_norm() / (sop.dim * sop.dim)
    if scale < 1e-300:
        return generator_residual(sop, rho)
    return generator_residual(sop, rho) / scale
