"""Truncated Fock-space operators, states, unitaries and distances.

Everything works in natural units (hbar = k_B = 1).  Matrices are dense
complex numpy arrays wrapped in thin validating containers.  All values are
immutable after construction (the wrapped arrays are marked read-only), so
they can be shared freely between threads.

Truncation policy: a computation that needs `dim` reliable levels should be
carried out at ``dim + guard`` levels and certified afterwards with
:func:`truncation_residual`; results are then read off the leading ``dim``
block.  :func:`default_guard` gives the default band width.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import (
    InvalidDimensionError,
    InvalidParameterError,
    ShapeError,
    TruncationUnsafeShiftError,
)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-10
UNITARY_BLOCK_TOL = 1e-8

__all__ = [
    "FockOperator",
    "DensityMatrix",
    "UnitaryOperator",
    "default_guard",
    "safe_shift_limit",
    "build_ladder",
    "build_quadratures",
    "gibbs_state",
    "ground_state_projector",
    "vacuum_state",
    "coherent_state",
    "number_superposition",
    "maximally_mixed",
    "displacement_unitary",
    "rotation_unitary",
    "trace_distance",
    "truncation_residual",
]


def default_guard(dim: int) -> int:
    """Default guard-band width for a target block of size `dim`."""
    return max(8, dim // 5)


def _freeze(entries: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(entries, dtype=complex)
    out.setflags(write=False)
    return out


def _check_dim(dim: int) -> None:
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise InvalidDimensionError(f"Fock dimension must be an integer >= 2, got {dim!r}")


@dataclass(frozen=True)
class FockOperator:
    """A dim x dim complex matrix acting on the truncated number basis."""

    dim: int
    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self) -> None:
        _check_dim(self.dim)
        if self.entries.shape != (self.dim, self.dim):
            raise ShapeError(f"expected {self.dim}x{self.dim} entries, got {self.entries.shape}")
        object.__setattr__(self, "entries", _freeze(self.entries))
        if self.hermitian:
            dev = np.abs(self.entries - self.entries.conj().T).max()
            if dev > HERMITIAN_TOL:
                raise InvalidParameterError(f"operator flagged hermitian deviates by {dev:.3e}")

    def dag(self) -> "FockOperator":
        return FockOperator(self.dim, self.entries.conj().T, hermitian=self.hermitian)


@dataclass(frozen=True)
class DensityMatrix:
    """A state on the truncated space: Hermitian, unit trace, positive.

    ``validate=False`` skips the positivity/trace gates; it is reserved for
    evolution outputs, where negative eigenvalues must be *reported* (they
    are the signal a positivity check looks for), never silently repaired.
    """

    dim: int
    entries: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        _check_dim(self.dim)
        if self.entries.shape != (self.dim, self.dim):
            raise ShapeError(f"expected {self.dim}x{self.dim} entries, got {self.entries.shape}")
        object.__setattr__(self, "entries", _freeze(self.entries))
        if self.validate:
            dev = np.abs(self.entries - self.entries.conj().T).max()
            if dev > HERMITIAN_TOL:
                raise InvalidParameterError(f"density matrix not Hermitian: deviation {dev:.3e}")
            tr = self.entries.trace()
            if abs(tr - 1.0) > TRACE_TOL:
                raise InvalidParameterError(f"density matrix trace {tr} != 1")
            lam_min = float(np.linalg.eigvalsh(self.entries)[0])
            if lam_min < -EIGENVALUE_TOL:
                raise InvalidParameterError(f"density matrix has eigenvalue {lam_min:.3e}")

    @property
    def populations(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])


@dataclass(frozen=True)
class UnitaryOperator:
    """A (truncation-limited) unitary; `kind` is 'displacement' or 'rotation'.

    Unitarity is only required on the lower ``dim - guard`` block: a
    displacement necessarily leaks amplitude through the top of a truncated
    basis, and the guard band is where that leakage is allowed to live.
    """

    dim: int
    entries: np.ndarray
    kind: str
    guard: int

    def __post_init__(self) -> None:
        _check_dim(self.dim)
        if self.kind not in ("displacement", "rotation"):
            raise InvalidParameterError(f"unknown unitary kind {self.kind!r}")
        if not 0 <= self.guard < self.dim:
            raise InvalidParameterError(f"guard {self.guard} outside [0, {self.dim})")
        object.__setattr__(self, "entries", _freeze(self.entries))
        k = self.dim - self.guard
        dev = np.abs((self.entries @ self.entries.conj().T - np.eye(self.dim))[:k, :k]).max()
        if dev > UNITARY_BLOCK_TOL:
            raise InvalidParameterError(
                f"U U^dag deviates from identity by {dev:.3e} on the lower {k}x{k} block"
            )

    def conjugate_operator(self, op: np.ndarray) -> np.ndarray:
        """Heisenberg transform U^dag op U."""
        return self.entries.conj().T @ op @ self.entries

    def conjugate_state(self, rho: np.ndarray) -> np.ndarray:
        """Schroedinger transform U rho U^dag."""
        return self.entries @ rho @ self.entries.conj().T


def build_ladder(dim: int) -> tuple[FockOperator, FockOperator]:
    """Annihilation and creation operators on `dim` levels.

    a[n-1, n] = sqrt(n); the creation operator is the conjugate transpose.
    On the truncated space [a, a^dag] equals the identity except for the
    corner entry (dim-1, dim-1), which is exactly -(dim-1).
    """
    _check_dim(dim)
    a = np.zeros((dim, dim), dtype=complex)
    ns = np.arange(1, dim)
    a[ns - 1, ns] = np.sqrt(ns)
    return FockOperator(dim, a), FockOperator(dim, a.conj().T)


def build_quadratures(dim: int, mass: float, omega_ref: float) -> tuple[FockOperator, FockOperator]:
    """Position and momentum for a basis oscillator of the given mass/frequency.

    x = (a + a^dag)/sqrt(2 M w), p = i sqrt(M w / 2) (a^dag - a).  `omega_ref`
    is a pure basis choice; free-particle computations still need one.
    """
    if mass <= 0 or omega_ref <= 0:
        raise InvalidParameterError(f"mass and omega_ref must be positive, got {mass}, {omega_ref}")
    a, ad = build_ladder(dim)
    x = (a.entries + ad.entries) / np.sqrt(2.0 * mass * omega_ref)
    p = 1j * np.sqrt(mass * omega_ref / 2.0) * (ad.entries - a.entries)
    return FockOperator(dim, x, hermitian=True), FockOperator(dim, p, hermitian=True)


def gibbs_state(dim: int, mass: float, omega: float, temperature: float) -> DensityMatrix:
    """Canonical oscillator state: diagonal populations ~ exp(-omega n / T).

    Renormalized over the truncated space.  T <= 0 is rejected; the
    zero-temperature limit must be requested explicitly via
    :func:`ground_state_projector`.
    """
    _check_dim(dim)
    if mass <= 0 or omega <= 0:
        raise InvalidParameterError(f"mass and omega must be positive, got {mass}, {omega}")
    if temperature <= 0:
        raise InvalidParameterError(
            "temperature must be positive; request the T=0 limit via ground_state_projector"
        )
    log_p = -omega * np.arange(dim) / temperature
    pops = np.exp(log_p - log_p.max())
    pops /= pops.sum()
    return DensityMatrix(dim, np.diag(pops.astype(complex)))


def ground_state_projector(dim: int) -> DensityMatrix:
    """|0><0| — the explicit T -> 0 limit of gibbs_state."""
    return vacuum_state(dim)


def vacuum_state(dim: int) -> DensityMatrix:
    _check_dim(dim)
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return DensityMatrix(dim, rho)


def coherent_state(dim: int, alpha: complex) -> DensityMatrix:
    """|alpha><alpha| built from the truncated expansion, renormalized."""
    _check_dim(dim)
    if alpha == 0:
        return vacuum_state(dim)
    ns = np.arange(dim)
    log_fact = np.cumsum(np.log(np.maximum(ns, 1)))  # log n!
    amps = np.exp(ns * np.log(complex(alpha)) - 0.5 * log_fact)
    amps /= np.linalg.norm(amps)
    return DensityMatrix(dim, np.outer(amps, amps.conj()))


def number_superposition(dim: int, levels: tuple[int, ...]) -> DensityMatrix:
    """Equal-amplitude pure superposition of the given number states."""
    _check_dim(dim)
    if any(n < 0 or n >= dim for n in levels):
        raise InvalidParameterError(f"levels {levels} outside [0, {dim})")
    psi = np.zeros(dim, dtype=complex)
    psi[list(levels)] = 1.0 / np.sqrt(len(levels))
    return DensityMatrix(dim, np.outer(psi, psi.conj()))


def maximally_mixed(dim: int, levels: int) -> DensityMatrix:
    """Uniform mixture over the leading `levels` number states."""
    _check_dim(dim)
    if not 0 < levels <= dim:
        raise InvalidParameterError(f"levels must lie in (0, {dim}], got {levels}")
    rho = np.zeros((dim, dim), dtype=complex)
    rho[np.arange(levels), np.arange(levels)] = 1.0 / levels
    return DensityMatrix(dim, rho)


def safe_shift_limit(dim: int, mass: float, omega_ref: float) -> float:
    """Largest displacement that keeps a shifted state well inside the basis."""
    return 0.1 * np.sqrt(dim) / np.sqrt(2.0 * mass * omega_ref)


def displacement_unitary(
    dim: int, shift: float, momentum: FockOperator, guard: int | None = None
) -> UnitaryOperator:
    """U = exp(-i s p), realizing x -> x + s on states (U^dag x U = x + s).

    The mass * omega_ref scale of the basis is recovered from the momentum
    operator itself, so the safe-shift limit needs no extra arguments.
    """
    _check_dim(dim)
    if momentum.dim != dim:
        raise ShapeError(f"momentum operator has dim {momentum.dim}, expected {dim}")
    if guard is None:
        guard = default_guard(dim)
    # p[0,1] = -i sqrt(M w / 2)  =>  M w = 2 |p[0,1]|^2
    mass_omega = 2.0 * abs(momentum.entries[0, 1]) ** 2
    limit = 0.1 * np.sqrt(dim) / np.sqrt(2.0 * mass_omega)
    if abs(shift) > limit:
        raise TruncationUnsafeShiftError(
            f"|shift| = {abs(shift):.4g} exceeds the safe limit {limit:.4g} at dim {dim}"
        )
    u = expm(-1j * shift * momentum.entries)
    return UnitaryOperator(dim, u, kind="displacement", guard=guard)


def rotation_unitary(dim: int, theta: float, guard: int | None = None) -> UnitaryOperator:
    """R = exp(-i theta n), diagonal, truncation-exact.

    Heisenberg conjugation R^dag a R = a e^{-i theta}, i.e.
    x -> x cos(theta) + p sin(theta), p -> -x sin(theta) + p cos(theta).
    """
    _check_dim(dim)
    if guard is None:
        guard = 0  # number-diagonal: exact at every level
    r = np.diag(np.exp(-1j * theta * np.arange(dim)))
    return UnitaryOperator(dim, r, kind="rotation", guard=guard)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of rho - sigma; lies in [0, 1] for states."""
    if rho.dim != sigma.dim:
        raise ShapeError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    diff = rho.entries - sigma.entries
    return float(0.5 * np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum())


def truncation_residual(rho: DensityMatrix, guard: int) -> float:
    """Total population in the top `guard` levels.

    Certifies that a computation at this dimension did not push weight into
    the guard band; callers must refuse to report values when this exceeds
    the 1e-8 policy threshold.
    """
    if not 0 < guard < rho.dim:
        raise InvalidParameterError(f"guard must lie in (0, {rho.dim}), got {guard}")
    return float(rho.populations[rho.dim - guard:].sum())
