"""Scenario files: parsing, validation, defaults.

A scenario is a TOML document (see README for the full schema):

    dim = 40
    guard = 12

    [outputs]
    report = "report.json"

    [[model]]
    name = "rwa"
    temperature = 1.0
    omega = 1.0
    gamma = 0.1

    [[check]]
    name = "canonicality"
    models = ["rwa"]

Parsing is strict: unknown keys, unknown model or check names, and
resource-cap violations are ConfigError (CLI exit code 2).  Every default is
resolved here, so the scenario echo inside a report is sufficient to rerun
it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .checks import DEFAULT_CHOI_TIMES, DEFAULT_SHIFTS, DEFAULT_THETAS
from .errors import ConfigError, QbmError
from .models import (
    CATALOG_NAMES,
    CoefficientForm,
    MasterEquationModel,
    ModelParams,
    catalog_model,
    custom_coefficients,
)

DEFAULT_DIM = 40
DEFAULT_GUARD = 12
RESOURCE_CAP_DIM_SQ = 6400

CHECK_NAMES = (
    "cp",
    "translation-covariance",
    "rotation-covariance",
    "stationarity",
    "canonicality",
    "equipartition",
    "trilemma",
    "high-temperature",
)

_COMMON_MODEL_KEYS = {"name", "label", "mass", "temperature", "gas-mass"}
_MODEL_KEYS = {
    "vme-free": _COMMON_MODEL_KEYS | {"eta", "omega-ref"},
    "vme-ho": _COMMON_MODEL_KEYS | {"eta", "omega"},
    "rwa": _COMMON_MODEL_KEYS | {"omega", "gamma"},
    "cl": _COMMON_MODEL_KEYS | {"eta", "omega"},
    "custom": _COMMON_MODEL_KEYS | {"omega", "omega-ref", "potential", "coefficients"},
}
_CHECK_KEYS = {
    "cp": {"name", "models", "times", "cp-dim"},
    "translation-covariance": {"name", "models", "shifts", "tolerance"},
    "rotation-covariance": {"name", "models", "thetas", "tolerance"},
    "stationarity": {"name", "models", "candidate", "tolerance"},
    "canonicality": {"name", "models", "tolerance"},
    "equipartition": {"name", "models", "tolerance"},
    "trilemma": {"name", "models", "cp-dim"},
    "high-temperature": {"name", "models", "temperatures", "cp-dim", "dim"},
}
_EVOLUTION_KEYS = {"model", "initial", "times", "backend", "initial-moments", "output"}

_MODEL_PARAM_DEFAULTS = {
    "mass": 1.0,
    "temperature": 1.0,
    "eta": 0.1,
    "omega": 1.0,
    "gamma": 0.1,
    "omega-ref": 1.0,
}


@dataclass(frozen=True)
class ScenarioCheck:
    name: str
    models: tuple[str, ...]
    options: dict


@dataclass(frozen=True)
class ScenarioEvolution:
    model: str
    backend: str
    initial: str
    initial_moments: tuple[float, ...] | None
    times: tuple[float, ...]
    output: str | None


@dataclass(frozen=True)
class Scenario:
    """Fully resolved scenario: every default has been applied."""

    dim: int
    guard: int
    models: dict  # label -> MasterEquationModel
    model_specs: tuple[dict, ...]  # resolved echo of each model block
    checks: tuple[ScenarioCheck, ...]
    evolutions: tuple[ScenarioEvolution, ...] = ()
    report_path: str | None = None
    trajectory_path: str | None = None

    def echo(self) -> dict:
        """Report-embeddable resolved form (sufficient to rerun)."""
        return {
            "dim": self.dim,
            "guard": self.guard,
            "models": list(self.model_specs),
            "checks": [
                {"name": c.name, "models": list(c.models), **c.options} for c in self.checks
            ],
            "evolutions": [
                {
                    "model": e.model,
                    "backend": e.backend,
                    "initial": e.initial,
                    "initial-moments": list(e.initial_moments) if e.initial_moments else None,
                    "times": list(e.times),
                    "output": e.output,
                }
                for e in self.evolutions
            ],
            "outputs": {"report": self.report_path, "trajectories": self.trajectory_path},
        }


def nearest_name(name: str, candidates: tuple[str, ...]) -> str | None:
    """Closest known name: longest common prefix, ties broken alphabetically."""
    def prefix_len(a: str, b: str) -> int:
        n = 0
        for ca, cb in zip(a, b):
            if ca != cb:
                break
            n += 1
        return n

    best = sorted(candidates, key=lambda c: (-prefix_len(name, c), c))
    return best[0] if best and prefix_len(name, best[0]) > 0 else None


def _reject_unknown_keys(block: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def _require(block: dict, key: str, where: str):
    if key not in block:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return block[key]


def _float(block: dict, key: str, default: float | None = None) -> float:
    value = block.get(key, default)
    if value is None:
        raise ConfigError(f"missing numeric key {key!r}")
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ConfigError(f"key {key!r} must be a finite number, got {value!r}")
    return float(value)


def build_model_from_spec(spec: dict) -> tuple[MasterEquationModel, dict]:
    """Instantiate one resolved [[model]] block; returns (model, echo dict)."""
    name = _require(spec, "name", "[[model]]")
    if name not in CATALOG_NAMES:
        hint = nearest_name(name, CATALOG_NAMES)
        suffix = f"; nearest match {hint!r}" if hint else ""
        raise ConfigError(f"unknown model name {name!r}{suffix}")
    _reject_unknown_keys(spec, _MODEL_KEYS[name], f"model {name!r}")
    label = spec.get("label", name)
    if not isinstance(label, str) or not label:
        raise ConfigError(f"model label must be a nonempty string, got {label!r}")
    mass = _float(spec, "mass", _MODEL_PARAM_DEFAULTS["mass"])
    temperature = _float(spec, "temperature", _MODEL_PARAM_DEFAULTS["temperature"])
    gas_mass = _float(spec, "gas-mass") if "gas-mass" in spec else None
    try:
        if name == "vme-free":
            params = ModelParams(mass=mass, temperature=temperature,
                                 friction=_float(spec, "eta", _MODEL_PARAM_DEFAULTS["eta"]),
                                 omega=0.0, gas_mass=gas_mass)
            model = catalog_model(name, params)
            omega_ref = _float(spec, "omega-ref", _MODEL_PARAM_DEFAULTS["omega-ref"])
            if omega_ref <= 0:
                raise ConfigError("omega-ref must be positive")
            from dataclasses import replace
            model = replace(model, basis_omega_ref=omega_ref)
        elif name in ("vme-ho", "cl"):
            params = ModelParams(mass=mass, temperature=temperature,
                                 friction=_float(spec, "eta", _MODEL_PARAM_DEFAULTS["eta"]),
                                 omega=_float(spec, "omega", _MODEL_PARAM_DEFAULTS["omega"]),
                                 gas_mass=gas_mass)
            model = catalog_model(name, params)
        elif name == "rwa":
            params = ModelParams(mass=mass, temperature=temperature,
                                 omega=_float(spec, "omega", _MODEL_PARAM_DEFAULTS["omega"]),
                                 decay=_float(spec, "gamma", _MODEL_PARAM_DEFAULTS["gamma"]),
                                 gas_mass=gas_mass)
            model = catalog_model(name, params)
        else:  # custom
            coeff_block = _require(spec, "coefficients", "custom model")
            if not isinstance(coeff_block, dict):
                raise ConfigError("coefficients must be a table {eta, dpp, dxx, dxp}")
            _reject_unknown_keys(coeff_block, {"eta", "dpp", "dxx", "dxp"}, "coefficients")
            form = CoefficientForm(
                eta=_float(coeff_block, "eta", 0.0),
                dpp=_float(coeff_block, "dpp", 0.0),
                dxx=_float(coeff_block, "dxx", 0.0),
                dxp=_float(coeff_block, "dxp", 0.0),
            )
            potential = spec.get("potential", "free")
            if potential not in ("free", "harmonic"):
                raise ConfigError(f"potential must be 'free' or 'harmonic', got {potential!r}")
            omega = _float(spec, "omega", _MODEL_PARAM_DEFAULTS["omega"]) \
                if potential == "harmonic" else 0.0
            params = ModelParams(mass=mass, temperature=temperature, omega=omega,
                                 gas_mass=gas_mass)
            model = custom_coefficients(form, params, potential=potential, label=label)
            omega_ref = _float(spec, "omega-ref", _MODEL_PARAM_DEFAULTS["omega-ref"])
            from dataclasses import replace
            model = replace(model, basis_omega_ref=omega_ref)
    except ConfigError:
        raise
    except QbmError as exc:
        raise ConfigError(f"model {label!r}: {exc}") from exc
    if label != model.label:
        from dataclasses import replace
        model = replace(model, label=label)
    echo = {"name": name, "label": label, "mass": mass, "temperature": temperature}
    if gas_mass is not None:
        echo["gas-mass"] = gas_mass
    if name in ("vme-free", "vme-ho", "cl"):
        echo["eta"] = model.params.friction
    if name in ("vme-ho", "rwa", "cl"):
        echo["omega"] = model.params.omega
    if name == "rwa":
        echo["gamma"] = model.params.decay
    if name in ("vme-free", "custom"):
        echo["omega-ref"] = model.basis_omega_ref
    if name == "custom":
        c = spec["coefficients"]
        echo["potential"] = spec.get("potential", "free")
        if echo["potential"] == "harmonic":
            echo["omega"] = model.params.omega
        echo["coefficients"] = {
            "eta": _float(c, "eta", 0.0), "dpp": _float(c, "dpp", 0.0),
            "dxx": _float(c, "dxx", 0.0), "dxp": _float(c, "dxp", 0.0),
        }
    return model, echo


def _resolve_check(block: dict, labels: tuple[str, ...], dim: int) -> ScenarioCheck:
    name = _require(block, "name", "[[check]]")
    if name not in CHECK_NAMES:
        hint = nearest_name(name, CHECK_NAMES)
        suffix = f"; nearest match {hint!r}" if hint else ""
        raise ConfigError(f"unknown check name {name!r}{suffix}")
    _reject_unknown_keys(block, _CHECK_KEYS[name], f"check {name!r}")
    models = block.get("models")
    if models is None:
        models = list(labels)
    if not isinstance(models, list) or not all(isinstance(m, str) for m in models):
        raise ConfigError(f"check {name!r}: models must be a list of labels")
    for m in models:
        if m not in labels:
            hint = nearest_name(m, labels)
            suffix = f"; nearest match {hint!r}" if hint else ""
            raise ConfigError(f"check {name!r} references unknown model {m!r}{suffix}")
    options: dict = {}
    if name == "cp":
        options["times"] = [float(t) for t in block.get("times", list(DEFAULT_CHOI_TIMES))]
        options["cp-dim"] = int(block.get("cp-dim", 20))
    elif name == "translation-covariance":
        options["shifts"] = [float(s) for s in block.get("shifts", list(DEFAULT_SHIFTS))]
        options["tolerance"] = _float(block, "tolerance", 1e-6)
    elif name == "rotation-covariance":
        options["thetas"] = [float(t) for t in block.get("thetas", list(DEFAULT_THETAS))]
        options["tolerance"] = _float(block, "tolerance", 1e-8)
    elif name == "stationarity":
        options["candidate"] = block.get("candidate", "gibbs")
        if options["candidate"] not in ("gibbs", "maxwell-momentum"):
            raise ConfigError(
                f"stationarity candidate must be 'gibbs' or 'maxwell-momentum', "
                f"got {options['candidate']!r}"
            )
        options["tolerance"] = _float(block, "tolerance", 1e-6)
    elif name in ("canonicality", "equipartition"):
        options["tolerance"] = _float(block, "tolerance", 1e-6 if name == "canonicality" else 1e-8)
    elif name == "trilemma":
        options["cp-dim"] = int(block.get("cp-dim", 20))
    elif name == "high-temperature":
        options["temperatures"] = [float(t) for t in block.get("temperatures", [1.0, 10.0, 100.0])]
        options["dim"] = int(block.get("dim", 20))
    return ScenarioCheck(name=name, models=tuple(models), options=options)


def _resolve_evolution(block: dict, labels: tuple[str, ...]) -> ScenarioEvolution:
    _reject_unknown_keys(block, _EVOLUTION_KEYS, "[[evolution]]")
    model = _require(block, "model", "[[evolution]]")
    if model not in labels:
        raise ConfigError(f"evolution references unknown model {model!r}")
    backend = block.get("backend", "fock")
    if backend not in ("fock", "moments"):
        raise ConfigError(f"evolution backend must be 'fock' or 'moments', got {backend!r}")
    times = block.get("times")
    if not isinstance(times, list) or not all(isinstance(t, (int, float)) for t in times):
        raise ConfigError("evolution times must be a list of numbers")
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])) or (times and times[0] < 0):
        raise ConfigError("evolution times must be ascending and nonnegative")
    initial = block.get("initial", "vacuum")
    moments = block.get("initial-moments")
    if backend == "moments":
        if moments is None:
            raise ConfigError("moments evolution needs initial-moments = [x, p, sxx, sxp, spp]")
        if not isinstance(moments, list) or len(moments) != 5:
            raise ConfigError("initial-moments must be a 5-element list [x, p, sxx, sxp, spp]")
        moments = tuple(float(v) for v in moments)
    elif moments is not None:
        raise ConfigError("initial-moments is only valid for the moments backend")
    output = block.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("evolution output must be a path string")
    return ScenarioEvolution(
        model=model, backend=backend, initial=str(initial),
        initial_moments=moments, times=tuple(times), output=output,
    )


def parse_scenario(text: str) -> Scenario:
    """Parse and fully resolve a scenario document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"scenario syntax error: {exc}") from exc
    _reject_unknown_keys(doc, {"dim", "guard", "outputs", "model", "check", "evolution"},
                         "scenario")
    dim = doc.get("dim", DEFAULT_DIM)
    guard = doc.get("guard", DEFAULT_GUARD)
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 2:
        raise ConfigError(f"dim must be an integer >= 2, got {dim!r}")
    if not isinstance(guard, int) or isinstance(guard, bool) or guard < 1:
        raise ConfigError(f"guard must be a positive integer, got {guard!r}")
    if (dim + guard) ** 2 > RESOURCE_CAP_DIM_SQ:
        raise ConfigError(
            f"(dim + guard)^2 = {(dim + guard) ** 2} exceeds the resource cap "
            f"{RESOURCE_CAP_DIM_SQ} (dim + guard must stay <= {int(math.isqrt(RESOURCE_CAP_DIM_SQ))})"
        )
    outputs = doc.get("outputs", {})
    if not isinstance(outputs, dict):
        raise ConfigError("outputs must be a table")
    _reject_unknown_keys(outputs, {"report", "trajectories"}, "[outputs]")
    report_path = outputs.get("report")
    trajectory_path = outputs.get("trajectories")
    for key, value in (("report", report_path), ("trajectories", trajectory_path)):
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"outputs.{key} must be a path string")

    model_blocks = doc.get("model", [])
    if not isinstance(model_blocks, list) or not model_blocks:
        raise ConfigError("scenario needs at least one [[model]] block")
    models: dict[str, MasterEquationModel] = {}
    specs = []
    for block in model_blocks:
        model, echo = build_model_from_spec(block)
        if model.label in models:
            raise ConfigError(f"duplicate model label {model.label!r}")
        models[model.label] = model
        specs.append(echo)
    labels = tuple(models)

    check_blocks = doc.get("check", [])
    if not isinstance(check_blocks, list):
        raise ConfigError("check must be an array of tables")
    checks = tuple(_resolve_check(b, labels, dim) for b in check_blocks)

    evolution_blocks = doc.get("evolution", [])
    if not isinstance(evolution_blocks, list):
        raise ConfigError("evolution must be an array of tables")
    evolutions = tuple(_resolve_evolution(b, labels) for b in evolution_blocks)
    if not checks and not evolutions:
        raise ConfigError("scenario declares neither checks nor evolutions")

    return Scenario(
        dim=dim,
        guard=guard,
        models=models,
        model_specs=tuple(specs),
        checks=checks,
        evolutions=evolutions,
        report_path=report_path,
        trajectory_path=trajectory_path,
    )
