"""Property checkers: covariance, positivity, stationarity, equipartition.

Each checker produces a :class:`PropertyVerdict` — pass/fail plus the
measured residual, the tolerance it was judged against, and enough
diagnostics to rerun the computation.  Failures are findings, not errors;
checkers only raise when the *computation itself* cannot be trusted
(truncation gate, resource cap, solver failure).

The covariance checks compare superoperator actions on a fixed sample
family of states rather than all dim^4 matrix entries:

    residual = max over transforms U and samples rho of
               || G(U rho U^dag) - U G(rho) U^dag ||_1 / || G(rho) ||_1

evaluated on the non-guard block, where G is the generator part under test
(kinetic + friction correction + dissipator for translations; dissipator
only for phase-space rotations).  Residuals are normalized per sample, with
an absolute fallback when the denominator is tiny.

The headline table (`trilemma`) combines complete positivity, translation
covariance of the dissipative part, and canonical equilibrium; models with
an oscillator potential can satisfy at most two of the three, while the
free-particle diffusive model passes all three (recorded as an exception
flag in the report).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (
    InvalidCandidateError,
    InvalidGridError,
    InvalidParameterError,
    NumericalError,
    TruncationUnsafeError,
)
from .fock import (
    DensityMatrix,
    build_quadratures,
    coherent_state,
    default_guard,
    displacement_unitary,
    gibbs_state,
    maximally_mixed,
    number_superposition,
    rotation_unitary,
    trace_distance,
    truncation_residual,
    vacuum_state,
)
from .gaussian import (
    NoStationaryReport,
    StationaryCovariance,
    equipartition_deltas,
    generator_matrices,
    gibbs_covariance,
    stationary_covariance,
)
from .liouvillian import (
    assemble,
    choi_matrix,
    generator_action,
    normalized_generator_residual,
    stationary_state,
)
from .models import (
    MasterEquationModel,
    ModelParams,
    caldeira_leggett,
    coefficient_form_of,
    custom_coefficients,
    kossakowski_of_model,
    vme_diffusive,
)

DEFAULT_SHIFTS = (0.1, 0.3)
DEFAULT_THETAS = (math.pi / 7, math.pi / 3)
DEFAULT_CHOI_TIMES = (0.05, 0.5, 5.0)
TRANSLATION_TOL = 1e-6
ROTATION_TOL = 1e-8
STRUCTURAL_CP_TOL = 1e-12
DYNAMICAL_CP_TOL = 1e-8
STATIONARITY_TOL = 1e-6
MOMENTUM_FIXED_POINT_TOL = 1e-10
EQUIPARTITION_TOL = 1e-8
CANONICALITY_TOL = 1e-6
TRUNCATION_GATE = 1e-8
SAMPLE_TAIL_TARGET = 1e-10
MATRIX_FORM_DIM_CAP = 512
NORM_FLOOR = 1e-12

SAMPLE_STATE_NAMES = (
    "vacuum",
    "thermal",
    "coherent+0.5",
    "coherent-0.5i",
    "superposition-0-3",
    "mixed-10",
)

TRILEMMA_COLUMNS = ("cp", "translation-invariance", "canonical-equilibrium")

__all__ = [
    "PropertyVerdict",
    "TrilemmaReport",
    "HighTemperatureRow",
    "sample_states",
    "check_translation_covariance",
    "check_rotation_covariance",
    "check_cp",
    "check_stationarity",
    "check_equipartition",
    "check_canonicality",
    "trilemma",
    "high_temperature_comparison",
    "TRILEMMA_COLUMNS",
]


@dataclass(frozen=True)
class PropertyVerdict:
    """Outcome of one property check.

    `passed` means residual <= tolerance, except for structural CP where it
    means min-eigenvalue >= -tolerance (the residual then *is* the smallest
    Kossakowski/Choi eigenvalue and may legitimately be negative).
    Checks that do not apply to a model (canonicality of a free particle)
    set applicable=False and never count as failures.
    """

    property: str
    passed: bool
    residual: float
    tolerance: float
    details: dict
    applicable: bool = True

    @property
    def failed(self) -> bool:
        return self.applicable and not self.passed


@dataclass(frozen=True)
class TrilemmaReport:
    """Model x property verdict matrix with its free-particle exceptions."""

    rows: tuple[str, ...]
    columns: tuple[str, ...]
    cells: dict
    metadata: dict
    free_exceptions: tuple[str, ...]


@dataclass(frozen=True)
class HighTemperatureRow:
    temperature: float
    coefficient_ratio: float
    generator_distance: float | None


def _thermal_fit_dim(omega_basis: float, temperature: float) -> int:
    """Levels needed before a thermal tail drops under SAMPLE_TAIL_TARGET."""
    ratio = omega_basis / temperature
    return int(math.ceil(-math.log(SAMPLE_TAIL_TARGET) / ratio)) + 1


def working_dimension(model: MasterEquationModel, dim: int, guard: int) -> int:
    """Computation size dim + guard, enlarged if the thermal sample needs it."""
    fit = _thermal_fit_dim(model.fock_basis_omega(), model.params.temperature)
    dim_build = max(dim + guard, fit + guard)
    if dim_build > MATRIX_FORM_DIM_CAP:
        raise TruncationUnsafeError(
            f"sample states at T = {model.params.temperature} need {dim_build} levels, "
            f"beyond the working cap {MATRIX_FORM_DIM_CAP}"
        )
    return dim_build


def sample_states(model: MasterEquationModel, dim_build: int) -> list[tuple[str, DensityMatrix]]:
    """The fixed six-state probe family, realized at the working dimension."""
    m = model.params.mass
    w_basis = model.fock_basis_omega()
    return [
        ("vacuum", vacuum_state(dim_build)),
        ("thermal", gibbs_state(dim_build, m, w_basis, model.params.temperature)),
        ("coherent+0.5", coherent_state(dim_build, 0.5)),
        ("coherent-0.5i", coherent_state(dim_build, -0.5j)),
        ("superposition-0-3", number_superposition(dim_build, (0, 3))),
        ("mixed-10", maximally_mixed(dim_build, 10)),
    ]


def _nuclear_norm(mat: np.ndarray) -> float:
    return float(np.linalg.svd(mat, compute_uv=False).sum())


def _guard_population(rho: np.ndarray, guard: int) -> float:
    return float(rho.diagonal().real[rho.shape[0] - guard:].sum())


def _covariance_residual(action, samples, unitaries, guard: int) -> tuple[float, dict]:
    """Worst normalized covariance defect over samples and transforms."""
    k = action.dim - guard
    worst = 0.0
    per_sample = {}
    for name, rho in samples:
        base = action(rho.entries)
        den = _nuclear_norm(base[:k, :k])
        sample_worst = 0.0
        for u in unitaries:
            transformed = u.conjugate_state(rho.entries)
            leak = _guard_population(transformed, guard)
            if leak > TRUNCATION_GATE:
                raise TruncationUnsafeError(
                    f"transformed sample {name!r} puts {leak:.3e} in the guard band"
                )
            delta = action(transformed) - u.conjugate_state(base)
            num = _nuclear_norm(delta[:k, :k])
            value = num / den if den >= NORM_FLOOR else num
            sample_worst = max(sample_worst, value)
        per_sample[name] = sample_worst
        worst = max(worst, sample_worst)
    return worst, per_sample


def check_translation_covariance(
    model: MasterEquationModel,
    dim: int = 40,
    shifts: tuple[float, ...] = DEFAULT_SHIFTS,
    guard: int | None = None,
    tolerance: float = TRANSLATION_TOL,
) -> PropertyVerdict:
    """Covariance of the dissipative part under x -> x + s.

    The generator under test is the full one minus the external-potential
    commutator; for a harmonic model the potential breaks full-generator
    covariance trivially, which would say nothing about the dissipator.
    """
    if guard is None:
        guard = default_guard(dim)
    dim_build = working_dimension(model, dim, guard)
    action = generator_action(model, dim_build, part="ti")
    _, p_op = build_quadratures(dim_build, model.params.mass, model.fock_basis_omega())
    unitaries = [displacement_unitary(dim_build, s, p_op, guard) for s in shifts]
    samples = sample_states(model, dim_build)
    residual, per_sample = _covariance_residual(action, samples, unitaries, guard)
    return PropertyVerdict(
        property="translation-covariance",
        passed=residual <= tolerance,
        residual=residual,
        tolerance=tolerance,
        details={
            "model": model.label,
            "dim": dim_build,
            "guard": guard,
            "shifts": list(shifts),
            "per_sample": per_sample,
        },
    )


def check_rotation_covariance(
    model: MasterEquationModel,
    dim: int = 40,
    thetas: tuple[float, ...] = DEFAULT_THETAS,
    guard: int | None = None,
    tolerance: float = ROTATION_TOL,
) -> PropertyVerdict:
    """Covariance of the dissipator under a -> a e^{-i theta}."""
    if guard is None:
        guard = default_guard(dim)
    dim_build = working_dimension(model, dim, guard)
    action = generator_action(model, dim_build, part="dissipator")
    unitaries = [rotation_unitary(dim_build, th) for th in thetas]
    samples = sample_states(model, dim_build)
    residual, per_sample = _covariance_residual(action, samples, unitaries, guard)
    return PropertyVerdict(
        property="rotation-covariance",
        passed=residual <= tolerance,
        residual=residual,
        tolerance=tolerance,
        details={
            "model": model.label,
            "dim": dim_build,
            "guard": guard,
            "thetas": list(thetas),
            "per_sample": per_sample,
        },
    )


def check_cp(
    model: MasterEquationModel,
    dim: int = 20,
    times: tuple[float, ...] = DEFAULT_CHOI_TIMES,
) -> tuple[PropertyVerdict, PropertyVerdict]:
    """Structural (Kossakowski) and dynamical (Choi) positivity verdicts.

    Truncating a Lindblad-form generator leaves it of Lindblad form, so the
    dynamical check needs no guard band: a genuinely negative Choi
    eigenvalue is physics, not a truncation artifact.
    """
    if any(t <= 0 for t in times):
        raise InvalidParameterError("Choi times must be positive")
    verdict = kossakowski_of_model(model)
    structural = PropertyVerdict(
        property="cp-structural",
        passed=verdict.min_eigenvalue >= -STRUCTURAL_CP_TOL,
        residual=verdict.min_eigenvalue,
        tolerance=STRUCTURAL_CP_TOL,
        details={"model": model.label, "eigenvalues": list(verdict.eigenvalues)},
    )
    sop = assemble(model, dim)
    worst = np.inf
    per_time = {}
    for t in times:
        lam = float(np.linalg.eigvalsh(choi_matrix(sop, t))[0])
        per_time[repr(float(t))] = lam
        worst = min(worst, lam)
    dynamical = PropertyVerdict(
        property="cp-dynamical",
        passed=worst >= -DYNAMICAL_CP_TOL,
        residual=float(worst),
        tolerance=DYNAMICAL_CP_TOL,
        details={"model": model.label, "dim": dim, "min_choi_eigenvalue": per_time},
    )
    return structural, dynamical


def check_stationarity(
    model: MasterEquationModel,
    candidate: DensityMatrix | str = "gibbs",
    dim: int = 40,
    guard: int | None = None,
    tolerance: float = STATIONARITY_TOL,
) -> PropertyVerdict:
    """Is the candidate state annihilated by the generator?

    Explicit states and 'gibbs' are tested through the assembled generator
    (trace-norm residual on the generator's mean-entry scale).  The
    'maxwell-momentum' candidate — the free particle's stationary momentum
    marginal — is delegated to the moment backend: it passes when the
    momentum drift has no position coupling and the momentum variance fixed
    point equals M*T.
    """
    if guard is None:
        guard = default_guard(dim)
    if isinstance(candidate, str) and candidate == "maxwell-momentum":
        if model.hamiltonian.omega > 0:
            raise InvalidCandidateError(
                "maxwell-momentum candidate is only defined for free models"
            )
        dd = generator_matrices(model)
        report = stationary_covariance(dd)
        m, temp = model.params.mass, model.params.temperature
        coupling = abs(dd.drift[1, 0])
        if isinstance(report, NoStationaryReport) and report.momentum_fixed_point is not None:
            residual = abs(report.momentum_fixed_point - m * temp)
            passed = residual <= MOMENTUM_FIXED_POINT_TOL and coupling <= 1e-12
            fixed = report.momentum_fixed_point
        elif isinstance(report, StationaryCovariance):
            residual = abs(report.sigma_pp - m * temp)
            passed = residual <= MOMENTUM_FIXED_POINT_TOL and coupling <= 1e-12
            fixed = report.sigma_pp
        else:
            residual, passed, fixed = math.inf, False, None
        return PropertyVerdict(
            property="stationarity",
            passed=passed,
            residual=residual,
            tolerance=MOMENTUM_FIXED_POINT_TOL,
            details={
                "model": model.label,
                "candidate": "maxwell-momentum",
                "momentum_fixed_point": fixed,
                "position_coupling": coupling,
                "target": m * temp,
            },
        )

    if isinstance(candidate, str):
        if candidate != "gibbs":
            raise InvalidCandidateError(f"unknown candidate {candidate!r}")
        if model.hamiltonian.omega <= 0:
            raise InvalidCandidateError("gibbs candidate needs an oscillator potential")
        dim_build = working_dimension(model, dim, guard)
        state = gibbs_state(dim_build, model.params.mass, model.hamiltonian.omega,
                            model.params.temperature)
        label = "gibbs"
    else:
        state = candidate
        dim_build = candidate.dim
        label = "explicit"
    leak = truncation_residual(state, guard)
    if leak > TRUNCATION_GATE:
        raise TruncationUnsafeError(
            f"stationarity candidate puts {leak:.3e} in the guard band at dim {dim_build}"
        )
    sop = assemble(model, dim_build)
    residual = normalized_generator_residual(sop, state)
    return PropertyVerdict(
        property="stationarity",
        passed=residual <= tolerance,
        residual=residual,
        tolerance=tolerance,
        details={"model": model.label, "candidate": label, "dim": dim_build, "guard": guard},
    )


def check_equipartition(model: MasterEquationModel, tolerance: float = EQUIPARTITION_TOL) -> PropertyVerdict:
    """Quantum equipartition gaps of the stationary second moments.

    Gates on the *quantum* deltas (offset from the canonical covariance);
    the classical coth corrections are reported but never fail a model.
    """
    dd = generator_matrices(model)
    report = stationary_covariance(dd)
    m = model.params.mass
    temp = model.params.temperature
    if isinstance(report, StationaryCovariance):
        omega = model.hamiltonian.omega
        if omega > 0:
            classical, quantum = equipartition_deltas(report.covariance, m, omega, temp)
            residual = max(abs(quantum[0]), abs(quantum[1]))
            return PropertyVerdict(
                property="equipartition",
                passed=residual <= tolerance,
                residual=residual,
                tolerance=tolerance,
                details={
                    "model": model.label,
                    "covariance": list(report.covariance),
                    "classical_delta": list(classical),
                    "quantum_delta": list(quantum),
                },
            )
        residual = abs(report.sigma_pp - m * temp)
        return PropertyVerdict(
            property="equipartition",
            passed=residual <= tolerance,
            residual=residual,
            tolerance=tolerance,
            details={"model": model.label, "momentum_variance": report.sigma_pp,
                     "target": m * temp},
        )
    if report.momentum_fixed_point is not None:
        residual = abs(report.momentum_fixed_point - m * temp)
        return PropertyVerdict(
            property="equipartition",
            passed=residual <= tolerance,
            residual=residual,
            tolerance=tolerance,
            details={
                "model": model.label,
                "momentum_fixed_point": report.momentum_fixed_point,
                "target": m * temp,
                "classical_delta": [report.momentum_fixed_point / m - temp, None],
                "quantum_delta": [report.momentum_fixed_point - m * temp, None],
            },
        )
    return PropertyVerdict(
        property="equipartition",
        passed=False,
        residual=math.inf,
        tolerance=tolerance,
        details={"model": model.label, "reason": "no stationary covariance or momentum fixed point"},
        applicable=False,
    )


def check_canonicality(
    model: MasterEquationModel,
    dim: int = 40,
    guard: int | None = None,
    tolerance: float = CANONICALITY_TOL,
) -> PropertyVerdict:
    """Trace distance of the numerically extracted stationary state from the
    canonical oscillator state at the model's temperature."""
    if guard is None:
        guard = default_guard(dim)
    if model.hamiltonian.omega <= 0:
        return PropertyVerdict(
            property="canonicality",
            passed=False,
            residual=math.inf,
            tolerance=tolerance,
            details={"model": model.label,
                     "reason": "free particle has no normalizable canonical state"},
            applicable=False,
        )
    dim_build = working_dimension(model, dim, guard)
    sop = assemble(model, dim_build)
    result = stationary_state(sop)
    if result.degenerate or result.state is None:
        raise NumericalError(
            f"stationary state of {model.label} is degenerate (gap {result.gap:.3e})"
        )
    leak = truncation_residual(result.state, guard)
    if leak > TRUNCATION_GATE:
        raise TruncationUnsafeError(
            f"stationary state of {model.label} puts {leak:.3e} in the guard band"
        )
    reference = gibbs_state(dim_build, model.params.mass, model.hamiltonian.omega,
                            model.params.temperature)
    residual = trace_distance(result.state, reference)
    return PropertyVerdict(
        property="canonicality",
        passed=residual <= tolerance,
        residual=residual,
        tolerance=tolerance,
        details={
            "model": model.label,
            "dim": dim_build,
            "guard": guard,
            "unique": result.unique,
            "kernel_gap": result.gap,
            "stationary_min_eigenvalue": result.min_eigenvalue,
        },
    )


def _cp_cell(model: MasterEquationModel, dim: int) -> PropertyVerdict:
    structural, dynamical = check_cp(model, dim=dim)
    return PropertyVerdict(
        property="cp",
        passed=structural.passed and dynamical.passed,
        residual=dynamical.residual,
        tolerance=dynamical.tolerance,
        details={
            "structural": {"passed": structural.passed, "min_eigenvalue": structural.residual},
            "dynamical": {"passed": dynamical.passed, "min_choi_eigenvalue": dynamical.residual},
        },
    )


def trilemma(
    models: list[MasterEquationModel],
    dim: int = 40,
    guard: int | None = None,
    cp_dim: int = 20,
) -> TrilemmaReport:
    """The headline model x property matrix.

    Columns: complete positivity (structural and dynamical), translation
    covariance of the dissipative part, canonical equilibrium (stationary
    canonical state for confined models, Maxwell momentum marginal for free
    ones).  A confined model passing all three violates the incompatibility
    this table demonstrates and aborts with NumericalError; a free model
    passing all three is recorded as an exception flag.
    """
    if not models:
        raise InvalidParameterError("trilemma needs at least one model")
    if guard is None:
        guard = default_guard(dim)
    rows = []
    cells: dict[str, dict[str, PropertyVerdict]] = {}
    exceptions = []
    for model in models:
        row: dict[str, PropertyVerdict] = {}
        row["cp"] = _cp_cell(model, cp_dim)
        row["translation-invariance"] = check_translation_covariance(model, dim, guard=guard)
        if model.hamiltonian.omega > 0:
            row["canonical-equilibrium"] = check_canonicality(model, dim, guard=guard)
        else:
            row["canonical-equilibrium"] = check_stationarity(
                model, candidate="maxwell-momentum", dim=dim, guard=guard
            )
        all_pass = all(row[c].passed for c in TRILEMMA_COLUMNS)
        if model.hamiltonian.omega > 0 and all_pass:
            raise NumericalError(
                f"model {model.label!r} with an oscillator potential passed CP, "
                "translation covariance and canonical equilibrium simultaneously; "
                "this contradicts the generator structure and indicates a numerical defect"
            )
        if model.hamiltonian.omega == 0 and all_pass:
            exceptions.append(model.label)
        rows.append(model.label)
        cells[model.label] = row
    return TrilemmaReport(
        rows=tuple(rows),
        columns=TRILEMMA_COLUMNS,
        cells=cells,
        metadata={"dim": dim, "guard": guard, "cp_dim": cp_dim},
        free_exceptions=tuple(exceptions),
    )


def high_temperature_comparison(
    params: ModelParams,
    temperatures: tuple[float, ...],
    dim: int = 20,
) -> list[HighTemperatureRow]:
    """Distance between the diffusive model and its high-temperature
    no-position-diffusion counterpart, as a function of temperature.

    Reports the coefficient-level ratio Dxx/Dpp = 1/(16 M^2 T^2) and the
    Frobenius distance between the assembled generators relative to the
    counterpart's norm (None when that norm degenerates).
    """
    ts = list(temperatures)
    if not ts or any(t <= 0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
        raise InvalidGridError("temperatures must be positive and ascending")
    if params.omega <= 0:
        raise InvalidParameterError("high-temperature comparison uses the oscillator potential")
    rows = []
    for temp in ts:
        p_t = replace(params, temperature=temp)
        vme = vme_diffusive(p_t, potential="harmonic")
        cl = custom_coefficients(caldeira_leggett(p_t), p_t, potential="harmonic", label="cl")
        form = coefficient_form_of(vme)
        ratio = form.dxx / form.dpp
        lv = assemble(vme, dim)
        lc = assemble(cl, dim)
        den = lc.frobenius_norm()
        if den < NORM_FLOOR:
            distance = None
        else:
            distance = float(spla.norm(lv.matrix - lc.matrix)) / den
        rows.append(HighTemperatureRow(temperature=temp, coefficient_ratio=ratio,
                                       generator_distance=distance))
    return rows
