"""Exact first/second-moment dynamics for quadratic models.

For a quadratic Hamiltonian with linear channels the means r = (<x>, <p>)
and the symmetrized covariance sigma close on themselves:

    dr/dt     = A r
    dsigma/dt = A sigma + sigma A^T + D

with drift A and diffusion D read off the generator:

    A = [[kappa + mu, 1/M], [-M w^2, -kappa + mu]],   mu = sum Im(c_x c_p*)
    D = [[sum |c_p|^2, -sum Re(c_x c_p*)], [-sum Re(c_x c_p*), sum |c_x|^2]]

(equivalently D = [[2 Dxx, 2 Dxp], [2 Dxp, 2 Dpp]] for coefficient models,
whose drift is A = [[0, 1/M], [-M w^2, -2 eta]]).

Propagation uses augmented matrix exponentials, which are exact for every
drift including the non-contracting free-particle case; stationary
covariances solve the continuous Lyapunov equation when the drift is
Hurwitz, and otherwise a structured no-stationary report is produced
(including the momentum-marginal fixed point when the momentum block is
autonomous and contracting).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from .errors import InvalidGridError, InvalidParameterError, NumericalError
from .models import MasterEquationModel

HURWITZ_THRESHOLD = -1e-12
LYAPUNOV_RESIDUAL_TOL = 1e-10
QUANTUM_VALID_SLACK = 1e-10

__all__ = [
    "GaussianMoments",
    "DriftDiffusion",
    "StationaryCovariance",
    "NoStationaryReport",
    "generator_matrices",
    "evolve_moments",
    "stationary_covariance",
    "gibbs_covariance",
    "equipartition_deltas",
]


@dataclass(frozen=True)
class GaussianMoments:
    """Means (x, p) and covariance triple (sxx, sxp, spp)."""

    mean_x: float
    mean_p: float
    sigma_xx: float
    sigma_xp: float
    sigma_pp: float

    def __post_init__(self) -> None:
        if self.sigma_xx <= 0 or self.sigma_pp <= 0:
            raise InvalidParameterError("diagonal covariances must be positive")

    @property
    def quantum_valid(self) -> bool:
        """Uncertainty principle det(sigma) >= 1/4 at hbar = 1."""
        det = self.sigma_xx * self.sigma_pp - self.sigma_xp ** 2
        return det >= 0.25 - QUANTUM_VALID_SLACK

    @property
    def covariance(self) -> tuple[float, float, float]:
        return (self.sigma_xx, self.sigma_xp, self.sigma_pp)


@dataclass(frozen=True)
class DriftDiffusion:
    """Drift A (2x2) and diffusion D (2x2, symmetric PSD) of the moment flow."""

    drift: np.ndarray
    diffusion: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.drift, dtype=float).reshape(2, 2)
        d = np.asarray(self.diffusion, dtype=float).reshape(2, 2)
        if np.abs(d - d.T).max() > 1e-12:
            raise InvalidParameterError("diffusion matrix must be symmetric")
        if np.linalg.eigvalsh(0.5 * (d + d.T))[0] < -1e-10:
            raise InvalidParameterError("diffusion matrix must be positive semidefinite")
        a.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "drift", a)
        object.__setattr__(self, "diffusion", d)


@dataclass(frozen=True)
class StationaryCovariance:
    sigma_xx: float
    sigma_xp: float
    sigma_pp: float
    residual: float

    @property
    def covariance(self) -> tuple[float, float, float]:
        return (self.sigma_xx, self.sigma_xp, self.sigma_pp)

    @property
    def quantum_valid(self) -> bool:
        det = self.sigma_xx * self.sigma_pp - self.sigma_xp ** 2
        return det >= 0.25 - QUANTUM_VALID_SLACK


@dataclass(frozen=True)
class NoStationaryReport:
    """Why no full stationary covariance exists, and what survives.

    `non_contracting` lists the drift eigenvalues with real part above the
    Hurwitz threshold together with their eigendirections in (x, p).
    `momentum_fixed_point` is the stationary momentum variance when the
    momentum row is autonomous (no x coupling) and contracting, else None.
    """

    non_contracting: tuple[tuple[complex, tuple[float, float]], ...]
    momentum_fixed_point: float | None
    momentum_mean_decay: float | None


def generator_matrices(model: MasterEquationModel) -> DriftDiffusion:
    """Drift and diffusion of a model's moment flow (see module docstring)."""
    ham = model.hamiltonian
    m, w, kappa = ham.mass, ham.omega, ham.kappa
    if model.coefficients is not None:
        c = model.coefficients
        drift = np.array([[kappa, 1.0 / m], [-m * w * w, kappa - 2.0 * c.eta]])
        diffusion = np.array([[2.0 * c.dxx, 2.0 * c.dxp], [2.0 * c.dxp, 2.0 * c.dpp]])
        return DriftDiffusion(drift, diffusion)
    mu = 0.0
    dxx2 = 0.0
    dpp2 = 0.0
    cross = 0.0
    for ch in model.channels:
        prod = ch.cx * np.conj(ch.cp)
        mu += float(np.imag(prod))
        cross += float(np.real(prod))
        dxx2 += abs(ch.cp) ** 2
        dpp2 += abs(ch.cx) ** 2
    drift = np.array([[kappa + mu, 1.0 / m], [-m * w * w, -kappa + mu]])
    diffusion = np.array([[dxx2, -cross], [-cross, dpp2]])
    return DriftDiffusion(drift, diffusion)


def _covariance_flow_matrix(dd: DriftDiffusion) -> np.ndarray:
    """Affine generator of (sxx, sxp, spp, 1) under dsigma = A s + s A^T + D."""
    a = dd.drift
    d = dd.diffusion
    return np.array([
        [2 * a[0, 0], 2 * a[0, 1], 0.0, d[0, 0]],
        [a[1, 0], a[0, 0] + a[1, 1], a[0, 1], d[0, 1]],
        [0.0, 2 * a[1, 0], 2 * a[1, 1], d[1, 1]],
        [0.0, 0.0, 0.0, 0.0],
    ])


def evolve_moments(
    dd: DriftDiffusion, start: GaussianMoments, times: list[float]
) -> list[GaussianMoments]:
    """Moments at the requested times (ascending, first >= 0); exact via expm."""
    ts = list(times)
    if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])) or (ts and ts[0] < 0):
        raise InvalidGridError(f"times must be ascending and nonnegative, got {ts}")
    k = _covariance_flow_matrix(dd)
    out = []
    s0 = np.array([start.sigma_xx, start.sigma_xp, start.sigma_pp, 1.0])
    r0 = np.array([start.mean_x, start.mean_p])
    for t in ts:
        mean = expm(dd.drift * t) @ r0
        sig = expm(k * t) @ s0
        out.append(GaussianMoments(mean[0], mean[1], sig[0], sig[1], sig[2]))
    return out


def stationary_covariance(dd: DriftDiffusion) -> StationaryCovariance | NoStationaryReport:
    """Unique stationary covariance for Hurwitz drift, else a structured report."""
    a = dd.drift
    eigvals, eigvecs = np.linalg.eig(a)
    if eigvals.real.max() < HURWITZ_THRESHOLD:
        sigma = solve_continuous_lyapunov(a, -dd.diffusion)
        sigma = 0.5 * (sigma + sigma.T)
        residual = float(np.linalg.norm(a @ sigma + sigma @ a.T + dd.diffusion))
        if residual > LYAPUNOV_RESIDUAL_TOL:
            raise NumericalError(f"Lyapunov residual {residual:.3e} above tolerance")
        return StationaryCovariance(sigma[0, 0], sigma[0, 1], sigma[1, 1], residual)
    bad = []
    for lam, v in zip(eigvals, eigvecs.T):
        if lam.real >= HURWITZ_THRESHOLD:
            v = v / np.linalg.norm(v)
            bad.append((complex(lam), (float(v[0].real), float(v[1].real))))
    fixed = None
    decay = None
    if a[1, 0] == 0.0 and a[1, 1] < HURWITZ_THRESHOLD:
        # momentum subsystem autonomous and contracting:
        # dspp/dt = 2 a11 spp + D11 has the fixed point below
        fixed = -dd.diffusion[1, 1] / (2.0 * a[1, 1])
        decay = -a[1, 1]
    return NoStationaryReport(tuple(bad), fixed, decay)


def gibbs_covariance(mass: float, omega: float, temperature: float) -> tuple[float, float, float]:
    """Covariance of the canonical oscillator state.

    sxx = coth(w/2T)/(2 M w), spp = (M w / 2) coth(w/2T), sxp = 0.
    """
    if mass <= 0 or omega <= 0 or temperature <= 0:
        raise InvalidParameterError("mass, omega, temperature must be positive")
    coth = 1.0 / math.tanh(omega / (2.0 * temperature))
    return (coth / (2.0 * mass * omega), 0.0, 0.5 * mass * omega * coth)


def equipartition_deltas(
    cov: tuple[float, float, float], mass: float, omega: float, temperature: float
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Equipartition gaps of a covariance triple.

    Returns (classical, quantum): classical = (spp/M - T, M w^2 sxx - T),
    the kinetic and potential gaps; quantum = (sxx - sxx_gibbs,
    spp - spp_gibbs), the componentwise offset from the canonical
    covariance.  The canonical reference carries the coth corrections, so a
    nonzero classical gap with zero quantum gap is physics, not a defect.
    """
    sxx, _, spp = cov
    gxx, _, gpp = gibbs_covariance(mass, omega, temperature)
    classical = (spp / mass - temperature, mass * omega * omega * sxx - temperature)
    quantum = (sxx - gxx, spp - gpp)
    return classical, quantum
