"""Master-equation catalog and coefficient/channel representations.

A model is a quadratic Hamiltonian

    H = p^2 / 2M + (1/2) M w^2 x^2 + (kappa/2)(xp + px)

plus either linear Lindblad channels L_k = c_x x + c_p p or an explicit
double-commutator coefficient set

    L rho = -i[H, rho] - i eta [x, {p, rho}]
            - Dpp [x, [x, rho]] - Dxx [p, [p, rho]]
            + Dxp ([x, [p, rho]] + [p, [x, rho]]).

The two dissipator representations are linked through the 2x2 Gram
("Kossakowski") matrix over the operator basis (x, p):

    C = [[2 Dpp, -2 Dxp - i eta], [-2 Dxp + i eta, 2 Dxx]]
      = sum_k (c_x, c_p)_k (c_x, c_p)_k^dag ,

which is positive semidefinite exactly when the generator is of Lindblad
form (Dpp >= 0, Dxx >= 0, 4 Dpp Dxx - 4 Dxp^2 >= eta^2).

Catalog (exposed to the CLI by name):

* ``vme-free`` / ``vme-ho`` — translation-covariant diffusive Brownian
  motion: single channel L = alpha x + i beta p with alpha = 2 sqrt(eta M T),
  beta = sqrt(eta / M T) / 2, plus the Hamiltonian correction kappa = eta
  that keeps d<x>/dt = <p>/M exact.  Coefficients saturate the positivity
  bound: Dpp Dxx = eta^2 / 4 with Dxp = 0 (minimal position diffusion).
* ``rwa`` — quantum-optical damping: channels sqrt(gamma (nbar+1)) a and
  sqrt(gamma nbar) a^dag, H = w a^dag a.
* ``cl`` — high-temperature Brownian motion with no position diffusion
  (Dxx = 0); not of Lindblad form.
* ``custom`` — any coefficient set, factorized into channels when the
  Kossakowski matrix allows it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError, UnsupportedModelError

BROWNIAN_MASS_RATIO_LIMIT = 0.1
KOSSAKOWSKI_PSD_TOL = 1e-12

CATALOG_NAMES = ("vme-free", "vme-ho", "rwa", "cl", "custom")

__all__ = [
    "ModelParams",
    "QuadraticHamiltonian",
    "LinearChannel",
    "CoefficientForm",
    "KossakowskiVerdict",
    "MasterEquationModel",
    "thermal_occupation",
    "vme_diffusive",
    "rwa_optical",
    "caldeira_leggett",
    "custom_coefficients",
    "kossakowski",
    "kossakowski_of_model",
    "channels_from_kossakowski",
    "coefficient_form_of",
    "harmonic_extrapolation",
    "catalog_model",
    "CATALOG_NAMES",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs. friction acts on <p> at rate 2*friction."""

    mass: float = 1.0
    temperature: float = 1.0
    friction: float = 0.0          # eta
    omega: float = 0.0             # 0 = free particle
    decay: float = 0.0             # gamma, optical damping rate
    gas_mass: float | None = None  # only gates the heavy-bath validity warning

    def __post_init__(self) -> None:
        if self.mass <= 0:
            raise InvalidParameterError(f"mass must be positive, got {self.mass}")
        if self.temperature <= 0:
            raise InvalidParameterError(f"temperature must be positive, got {self.temperature}")
        for name in ("friction", "omega", "decay"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be nonnegative")
        if self.gas_mass is not None and self.gas_mass <= 0:
            raise InvalidParameterError(f"gas_mass must be positive, got {self.gas_mass}")

    @property
    def beta(self) -> float:
        return 1.0 / self.temperature

    def brownian_limit_warning(self) -> str | None:
        """Warn when the gas/particle mass ratio leaves the heavy-particle regime."""
        if self.gas_mass is None:
            return None
        ratio = self.gas_mass / self.mass
        if ratio > BROWNIAN_MASS_RATIO_LIMIT:
            return (
                f"gas/particle mass ratio {ratio:.4g} exceeds "
                f"{BROWNIAN_MASS_RATIO_LIMIT}; the diffusive construction assumes a heavy particle"
            )
        return None


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """H = p^2/2M + (1/2) M omega^2 x^2 + (kappa/2)(xp + px)."""

    mass: float
    omega: float
    kappa: float = 0.0

    def __post_init__(self) -> None:
        if self.mass <= 0:
            raise InvalidParameterError(f"mass must be positive, got {self.mass}")
        if self.omega < 0:
            raise InvalidParameterError(f"omega must be nonnegative, got {self.omega}")
        if not math.isfinite(self.kappa):
            raise InvalidParameterError("kappa must be finite")


@dataclass(frozen=True)
class LinearChannel:
    """Lindblad operator L = cx * x + cp * p."""

    cx: complex
    cp: complex

    def __post_init__(self) -> None:
        if not (math.isfinite(abs(self.cx)) and math.isfinite(abs(self.cp))):
            raise InvalidParameterError("channel coefficients must be finite")


@dataclass(frozen=True)
class CoefficientForm:
    """Double-commutator coefficients (eta, Dpp, Dxx, Dxp); see module docs."""

    eta: float
    dpp: float
    dxx: float
    dxp: float = 0.0

    def __post_init__(self) -> None:
        if self.dpp < 0 or self.dxx < 0:
            raise InvalidParameterError("diffusion coefficients Dpp, Dxx must be nonnegative")


@dataclass(frozen=True)
class KossakowskiVerdict:
    """Gram matrix over (x, p) with its positivity certificate."""

    matrix: np.ndarray
    eigenvalues: tuple[float, float]
    is_cp: bool

    @property
    def min_eigenvalue(self) -> float:
        return self.eigenvalues[0]


@dataclass(frozen=True)
class MasterEquationModel:
    """One master equation: Hamiltonian + dissipator + parameter record.

    Exactly one dissipator representation is authoritative: channel models
    carry `channels` (Lindblad form by construction); coefficient-only models
    carry `coefficients` and may fall outside Lindblad form.
    `basis_omega_ref` records the Fock-basis frequency used for free-particle
    models; harmonic models always use their own omega.
    """

    label: str
    hamiltonian: QuadraticHamiltonian
    params: ModelParams
    channels: tuple[LinearChannel, ...] = ()
    coefficients: CoefficientForm | None = None
    basis_omega_ref: float = 1.0
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.channels and self.coefficients is not None:
            raise UnsupportedModelError("model must not carry both channels and coefficients")
        if self.basis_omega_ref <= 0:
            raise InvalidParameterError("basis_omega_ref must be positive")

    @property
    def is_free(self) -> bool:
        return self.hamiltonian.omega == 0.0

    @property
    def lindblad_form(self) -> bool:
        """Structural Lindblad property (channels, or a PSD coefficient set)."""
        if self.channels or self.coefficients is None:
            return True
        return kossakowski(self.coefficients).is_cp

    def fock_basis_omega(self) -> float:
        """Frequency of the Fock basis this model is represented in."""
        return self.hamiltonian.omega if self.hamiltonian.omega > 0 else self.basis_omega_ref


def thermal_occupation(omega: float, temperature: float) -> float:
    """Mean bath occupation nbar = 1/(exp(omega/T) - 1)."""
    if omega <= 0 or temperature <= 0:
        raise InvalidParameterError("omega and temperature must be positive")
    return 1.0 / math.expm1(omega / temperature)


def vme_diffusive(params: ModelParams, potential: str = "free") -> MasterEquationModel:
    """Translation-covariant diffusive Brownian-motion model.

    Single channel L = alpha x + i beta p with alpha beta = eta, plus the
    kappa = eta Hamiltonian correction; the moment flow is then exactly
    d<x>/dt = <p>/M, d<p>/dt = -2 eta <p> - M w^2 <x>.  The harmonic variant
    is the same construction with the oscillator potential added.
    """
    if potential not in ("free", "harmonic"):
        raise InvalidParameterError(f"potential must be 'free' or 'harmonic', got {potential!r}")
    if params.friction <= 0:
        raise InvalidParameterError("vme_diffusive requires friction > 0")
    if potential == "harmonic" and params.omega <= 0:
        raise InvalidParameterError("harmonic potential requires omega > 0")
    m, temp, eta = params.mass, params.temperature, params.friction
    alpha = 2.0 * math.sqrt(eta * m * temp)
    beta_c = 0.5 * math.sqrt(eta / (m * temp))
    omega = params.omega if potential == "harmonic" else 0.0
    warning = params.brownian_limit_warning()
    return MasterEquationModel(
        label="vme-ho" if potential == "harmonic" else "vme-free",
        hamiltonian=QuadraticHamiltonian(mass=m, omega=omega, kappa=eta),
        params=params,
        channels=(LinearChannel(cx=alpha, cp=1j * beta_c),),
        warnings=(warning,) if warning else (),
    )


def rwa_optical(params: ModelParams) -> MasterEquationModel:
    """Quantum-optical damping of an oscillator mode.

    Channels sqrt(gamma (nbar+1)) a and sqrt(gamma nbar) a^dag obey detailed
    balance (rate ratio exp(-w/T)); the zero-temperature limit leaves pure
    decay.  Channels are stored through a = sqrt(M w / 2) x + i p / sqrt(2 M w).
    """
    if params.omega <= 0 or params.decay <= 0:
        raise InvalidParameterError("rwa_optical requires omega > 0 and decay > 0")
    m, w, gamma = params.mass, params.omega, params.decay
    nbar = thermal_occupation(w, params.temperature)
    ax = math.sqrt(m * w / 2.0)
    ap = 1.0 / math.sqrt(2.0 * m * w)
    channels = [LinearChannel(cx=math.sqrt(gamma * (nbar + 1.0)) * ax,
                              cp=1j * math.sqrt(gamma * (nbar + 1.0)) * ap)]
    if nbar > 0:
        channels.append(LinearChannel(cx=math.sqrt(gamma * nbar) * ax,
                                      cp=-1j * math.sqrt(gamma * nbar) * ap))
    warning = params.brownian_limit_warning()
    return MasterEquationModel(
        label="rwa",
        hamiltonian=QuadraticHamiltonian(mass=m, omega=w, kappa=0.0),
        params=params,
        channels=tuple(channels),
        warnings=(warning,) if warning else (),
    )


def caldeira_leggett(params: ModelParams) -> CoefficientForm:
    """High-temperature Brownian-motion coefficients: Dpp = 2 eta M T, Dxx = 0.

    Violates the positivity bound (4 Dpp Dxx = 0 < eta^2), so this set has
    no channel realization.
    """
    if params.friction <= 0:
        raise InvalidParameterError("caldeira_leggett requires friction > 0")
    return CoefficientForm(
        eta=params.friction,
        dpp=2.0 * params.friction * params.mass * params.temperature,
        dxx=0.0,
        dxp=0.0,
    )


def kossakowski(form: CoefficientForm) -> KossakowskiVerdict:
    """Gram matrix of a coefficient set and its positivity verdict."""
    c = np.array(
        [[2.0 * form.dpp, -2.0 * form.dxp - 1j * form.eta],
         [-2.0 * form.dxp + 1j * form.eta, 2.0 * form.dxx]],
        dtype=complex,
    )
    eigs = np.linalg.eigvalsh(c)
    return KossakowskiVerdict(
        matrix=c,
        eigenvalues=(float(eigs[0]), float(eigs[1])),
        is_cp=bool(eigs[0] >= -KOSSAKOWSKI_PSD_TOL),
    )


def kossakowski_of_model(model: MasterEquationModel) -> KossakowskiVerdict:
    """Gram matrix straight from the model's authoritative dissipator."""
    if model.coefficients is not None:
        return kossakowski(model.coefficients)
    c = np.zeros((2, 2), dtype=complex)
    for ch in model.channels:
        v = np.array([ch.cx, ch.cp], dtype=complex)
        c += np.outer(v, v.conj())
    eigs = np.linalg.eigvalsh(c)
    return KossakowskiVerdict(
        matrix=c,
        eigenvalues=(float(eigs[0]), float(eigs[1])),
        is_cp=bool(eigs[0] >= -KOSSAKOWSKI_PSD_TOL),
    )


def channels_from_kossakowski(matrix: np.ndarray) -> tuple[LinearChannel, ...]:
    """Factor a PSD Gram matrix into channels C = sum_k c_k c_k^dag."""
    eigs, vecs = np.linalg.eigh(matrix)
    scale = max(abs(eigs[-1]), 1.0)
    channels = []
    for lam, v in zip(eigs, vecs.T):
        if lam < -KOSSAKOWSKI_PSD_TOL * scale:
            raise InvalidParameterError(f"matrix is not PSD: eigenvalue {lam:.3e}")
        if lam <= KOSSAKOWSKI_PSD_TOL * scale:
            continue
        c = np.sqrt(lam) * v
        channels.append(LinearChannel(cx=complex(c[0]), cp=complex(c[1])))
    return tuple(channels)


def coefficient_form_of(model: MasterEquationModel) -> CoefficientForm:
    """Coefficient readout of a model's dissipator.

    For channel models: Dpp = sum |c_x|^2 / 2, Dxx = sum |c_p|^2 / 2,
    Dxp = -sum Re(c_x c_p*) / 2, eta = -sum Im(c_x c_p*).  The friction eta
    read off here belongs to the dissipator alone; whether the *full*
    generator matches the standard form additionally depends on the model's
    kappa (kappa = eta for the diffusive construction).
    """
    if model.coefficients is not None:
        return model.coefficients
    dpp = 0.5 * sum(abs(ch.cx) ** 2 for ch in model.channels)
    dxx = 0.5 * sum(abs(ch.cp) ** 2 for ch in model.channels)
    cross = sum(ch.cx * np.conj(ch.cp) for ch in model.channels)
    return CoefficientForm(eta=-float(np.imag(cross)), dpp=float(dpp),
                           dxx=float(dxx), dxp=-0.5 * float(np.real(cross)))


def custom_coefficients(
    form: CoefficientForm, params: ModelParams, potential: str = "free",
    label: str = "custom",
) -> MasterEquationModel:
    """Model from an explicit coefficient set.

    If the Gram matrix is PSD the set is factorized into channels and the
    kappa = eta Hamiltonian correction is attached (the combination
    reproduces the standard-form generator exactly).  Otherwise the
    coefficients are kept as-is for direct double-commutator assembly and
    the model is flagged as not of Lindblad form.
    """
    if potential not in ("free", "harmonic"):
        raise InvalidParameterError(f"potential must be 'free' or 'harmonic', got {potential!r}")
    if potential == "harmonic" and params.omega <= 0:
        raise InvalidParameterError("harmonic potential requires omega > 0")
    omega = params.omega if potential == "harmonic" else 0.0
    verdict = kossakowski(form)
    warning = params.brownian_limit_warning()
    warnings = (warning,) if warning else ()
    if verdict.is_cp:
        # Channels reproduce the eta term only up to a Hamiltonian piece;
        # kappa = eta restores the standard-form generator exactly.
        return MasterEquationModel(
            label=label,
            hamiltonian=QuadraticHamiltonian(mass=params.mass, omega=omega, kappa=form.eta),
            params=params,
            channels=channels_from_kossakowski(verdict.matrix),
            warnings=warnings,
        )
    # Coefficient terms already carry the full friction; kappa stays 0.
    return MasterEquationModel(
        label=label,
        hamiltonian=QuadraticHamiltonian(mass=params.mass, omega=omega, kappa=0.0),
        params=params,
        coefficients=form,
        warnings=warnings + ("coefficient set is not of Lindblad form (not CP)",),
    )


def harmonic_extrapolation(model: MasterEquationModel, omega: float) -> MasterEquationModel:
    """Add an oscillator potential to a free-particle model, dissipator untouched."""
    if model.hamiltonian.omega != 0.0:
        raise InvalidParameterError("harmonic_extrapolation expects a free-particle model")
    if omega <= 0:
        raise InvalidParameterError(f"omega must be positive, got {omega}")
    return replace(
        model,
        label=f"{model.label}+ho",
        hamiltonian=replace(model.hamiltonian, omega=omega),
        params=replace(model.params, omega=omega),
    )


def catalog_model(name: str, params: ModelParams) -> MasterEquationModel:
    """Build a catalog entry by CLI name ('custom' needs custom_coefficients)."""
    if name == "vme-free":
        return vme_diffusive(params, potential="free")
    if name == "vme-ho":
        return vme_diffusive(params, potential="harmonic")
    if name == "rwa":
        return rwa_optical(params)
    if name == "cl":
        model = custom_coefficients(caldeira_leggett(params), params, potential="harmonic",
                                    label="cl")
        return model
    raise InvalidParameterError(
        f"unknown catalog name {name!r}; custom models are built from coefficient sets"
    )
