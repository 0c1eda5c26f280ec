"""
Scenario configuration for gibbsposterior
JSON configs validated against a schema compiled from the runners' declared inputs
"""

import copy
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Type, Union

import numpy as np
from jsonschema import Draft7Validator

from .errors import ConfigError, GibbsPosteriorError
from .models import (
    LossKind,
    LossSpec,
    PotentialFamily,
    bernoulli_family,
    discrete_loss,
    family_from_tables,
    gaussian_loss,
    linear_gaussian_loss,
    markov_family,
    regularity_report,
    squared_loss,
    zero_loss,
)
from .posterior import DirectLoss, ObservationLoss, direct_loss
from .scenarios import SCENARIO_RUNNERS, ScenarioRunner
from .sft import Sft, sft_from_dict
from .simulate import MISSPECIFIED_GENERATORS
from .thermo import Potential

logger = logging.getLogger(__name__)

ENV_OUTPUT_DIR = "GIBBSPOST_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "gibbspost-out"

# Config-level keys every scenario accepts besides its runner inputs
BASE_PROPERTIES: Dict[str, Any] = {
    "scenario": {"enum": sorted(SCENARIO_RUNNERS)},
    "sft": {"type": ["object", "string"]},
    "output_dir": {"type": "string"},
    "description": {"type": "string"},
}

INPUT_SCHEMAS: Dict[str, Dict[str, Any]] = {
    "INT": {"type": "integer"},
    "FLOAT": {"type": "number"},
    "BOOLEAN": {"type": "boolean"},
    "STRING": {"type": "string"},
    "INT_LIST": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
    "FLOAT_LIST": {"type": "array", "items": {"type": "number"}},
    "THETA": {"type": ["number", "array"], "items": {"type": "number"}},
    "FAMILY": {"type": ["object", "string"]},
    "LOSS": {"type": ["object", "string"]},
    "GENERATOR": {
        "type": "object",
        "required": ["name"],
        "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
    },
}


def _input_schema(spec: tuple) -> Dict[str, Any]:
    kind = spec[0]
    options = spec[1] if len(spec) > 1 else {}
    if isinstance(kind, list):
        return {"enum": list(kind)}
    schema = copy.deepcopy(INPUT_SCHEMAS[kind])
    bounded = schema["items"] if kind == "INT_LIST" else schema
    if "min" in options:
        bounded["minimum"] = options["min"]
    if "max" in options:
        bounded["maximum"] = options["max"]
    return schema


def scenario_schema(runner: Type[ScenarioRunner]) -> Dict[str, Any]:
    """JSON schema of one scenario's config, compiled from INPUT_TYPES()"""
    inputs = runner.INPUT_TYPES()
    properties = dict(BASE_PROPERTIES)
    for group in ("required", "optional"):
        for name, spec in inputs.get(group, {}).items():
            properties[name] = _input_schema(spec)
    return {
        "type": "object",
        "required": ["scenario"] + list(inputs.get("required", {})),
        "properties": properties,
        "additionalProperties": False,
    }


def _first_violation(schema: Mapping[str, Any], data: Any) -> None:
    errors = sorted(Draft7Validator(schema).iter_errors(data), key=lambda e: [str(p) for p in e.path])
    if not errors:
        return
    error = errors[0]
    if error.validator == "required":
        missing = [p for p in error.validator_value if p not in error.instance]
        name = ".".join([str(p) for p in error.path] + missing[:1])
        raise ConfigError(f"{name}: required field is missing", field=name)
    if error.validator == "additionalProperties":
        extra = sorted(set(error.instance) - set(error.schema.get("properties", {})))
        name = extra[0] if extra else None
        raise ConfigError(f"unknown field {name!r}", field=name)
    name = ".".join(str(p) for p in error.path) or None
    raise ConfigError(f"{name}: {error.message}", field=name)


def _load_json(path: Path, field_name: str) -> Any:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{field_name}: file {str(path)!r} does not exist", field=field_name)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{field_name}: {path} is not valid JSON ({e})", field=field_name)


def _resolve(value: Union[str, Mapping[str, Any]], base_dir: Path, field_name: str) -> Dict[str, Any]:
    """Inline object or a path relative to the config file"""
    if isinstance(value, str):
        data = _load_json(base_dir / value, field_name)
        if not isinstance(data, dict):
            raise ConfigError(f"{field_name}: {value} must hold a JSON object", field=field_name)
        return data
    return dict(value)


def build_family(data: Mapping[str, Any], sft: Optional[Sft]) -> PotentialFamily:
    """Family from its file form

    {"kind": "bernoulli", "grid": [...], "prior": [...]} on the full 2-shift,
    {"kind": "affine", "grid": [...], "range": r, "base_a": {...}, "base_b": {...}},
    {"grid": [...], "prior": [...], "potentials": {"range": r, "tables": [{...}, ...]}}.
    """
    kind = data.get("kind", "tables")
    grid = data.get("grid")
    if not grid:
        raise ConfigError("family.grid: at least one grid point is required", field="family.grid")
    prior = data.get("prior")
    for name, value in (("grid", grid), ("prior", prior)):
        if value is None:
            continue
        try:
            np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"family.{name}: entries must be numbers", field=f"family.{name}")
    try:
        if kind == "bernoulli":
            return bernoulli_family(grid, prior)
        if sft is None:
            raise ConfigError(f"sft: a {kind} family needs an sft", field="sft")
        if kind == "affine":
            r = int(data.get("range", 1))
            base_a = Potential.from_table(sft, r, data["base_a"])
            base_b = Potential.from_table(sft, r, data["base_b"])
            return markov_family(grid, base_a, base_b, prior)
        if kind == "tables":
            potentials = data.get("potentials", {})
            tables = potentials.get("tables", [])
            if len(tables) != len(grid):
                raise ConfigError(
                    f"family.potentials.tables: {len(tables)} tables for {len(grid)} grid points",
                    field="family.potentials.tables",
                )
            return family_from_tables(sft, int(potentials.get("range", 1)), grid, tables, prior)
    except KeyError as e:
        raise ConfigError(f"family.{e.args[0]}: required field is missing", field=f"family.{e.args[0]}")
    raise ConfigError(f"family.kind: unknown family kind {kind!r}", field="family.kind")


def build_loss(data: Mapping[str, Any], family: PotentialFamily) -> ObservationLoss:
    """Loss from its file form {"kind": ..., "observation_map": {...}}

    Per-theta tables may be given as a single row shared by every grid point.
    """
    kind = data.get("kind")
    maps = data.get("observation_map", {})
    n_theta = len(family.grid)
    size = family.sft.alphabet_size

    def per_theta(name: str) -> np.ndarray:
        if name not in maps:
            raise ConfigError(
                f"loss.observation_map.{name}: required for {kind} losses", field=f"loss.observation_map.{name}"
            )
        table = np.asarray(maps[name], dtype=float)
        if table.ndim == 0:
            return np.full((n_theta, size), float(table))
        if table.ndim == 1:
            return np.tile(table, (n_theta, 1))
        return table

    if kind == "direct":
        return direct_loss(family)
    if kind == LossKind.ZERO.value:
        return zero_loss(size, n_theta)
    if kind == LossKind.SQUARED.value:
        return squared_loss(per_theta("phi"))
    if kind == LossKind.DISCRETE.value:
        return discrete_loss(maps.get("output_map", list(range(size))), n_theta)
    if kind == LossKind.NEG_LOG_DENSITY.value:
        if "slope" in maps:
            intercept = maps.get("intercept", [0.0] * size)
            return linear_gaussian_loss(family.grid, intercept, maps["slope"], float(maps.get("std", 1.0)))
        return gaussian_loss(per_theta("mean"), per_theta("std"))
    raise ConfigError(f"loss.kind: unknown loss kind {kind!r}", field="loss.kind")


@dataclass
class ScenarioConfig:
    """A validated scenario config with every reference resolved

    Attributes:
        scenario: Runner name
        inputs: Keyword inputs of the runner's run method, already built
        seed: Master seed all replicate streams derive from
        beta: Inverse temperature (1 where the runner has none)
        output_dir: Directory the reports go to
        raw: The config as read
    """

    scenario: str
    inputs: Dict[str, Any]
    seed: int
    beta: float
    output_dir: Path
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def runner(self) -> Type[ScenarioRunner]:
        return SCENARIO_RUNNERS[self.scenario]

    @property
    def family(self) -> PotentialFamily:
        return self.inputs["family"]

    def header(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "scenario": self.scenario,
            "beta": self.beta,
            "grid": self.family.grid.grid_hash(),
        }


def read_config(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    data = _load_json(path, "config")
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object", field="config")
    scenario = data.get("scenario")
    if scenario not in SCENARIO_RUNNERS:
        raise ConfigError(
            f"scenario: {scenario!r} is not one of {sorted(SCENARIO_RUNNERS)}", field="scenario"
        )
    _first_violation(scenario_schema(SCENARIO_RUNNERS[scenario]), data)
    schedule = data["n_schedule"]
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ConfigError("n_schedule: must be strictly increasing", field="n_schedule")
    generator = data.get("generator")
    if generator is not None and generator["name"] not in MISSPECIFIED_GENERATORS:
        raise ConfigError(
            f"generator.name: unknown generator {generator['name']!r}; available: {sorted(MISSPECIFIED_GENERATORS)}",
            field="generator.name",
        )
    return data


def _theta_index(family: PotentialFamily, value: Any) -> int:
    try:
        return family.grid.index_of(value)
    except GibbsPosteriorError:
        raise ConfigError(f"theta_star: {value!r} is not a grid point", field="theta_star")


def _build_parts(
    data: Mapping[str, Any], base_dir: Path, require_mixing: bool = True
) -> Tuple[Optional[Sft], PotentialFamily, ObservationLoss]:
    sft = None
    if "sft" in data:
        sft = sft_from_dict(_resolve(data["sft"], base_dir, "sft"), require_mixing=require_mixing)
    family = build_family(_resolve(data["family"], base_dir, "family"), sft)
    loss = build_loss(_resolve(data["loss"], base_dir, "loss"), family)
    return sft, family, loss


def load_config(
    path: Union[str, Path],
    output_dir: Optional[str] = None,
    seed: Optional[int] = None,
) -> ScenarioConfig:
    """Read, validate and build a scenario config

    Precedence for the output directory: argument, GIBBSPOST_OUTPUT_DIR, config, default.
    The seed argument overrides the config's seed.

    Raises:
        ConfigError: On any schema or reference problem, naming the field
        GibbsPosteriorError: If the SFT, family or loss cannot be built
    """
    path = Path(path)
    data = read_config(path)
    _, family, loss = _build_parts(data, path.parent)

    runner = SCENARIO_RUNNERS[data["scenario"]]
    declared = runner.INPUT_TYPES()
    inputs: Dict[str, Any] = {"family": family, "loss": loss}
    for group in ("required", "optional"):
        for name in declared.get(group, {}):
            if name in ("family", "loss") or name not in data:
                continue
            inputs[name] = data[name]
    if seed is not None:
        inputs["seed"] = int(seed)
    if "theta_star" in inputs:
        inputs["theta_star"] = _theta_index(family, inputs["theta_star"])

    override = output_dir or os.environ.get(ENV_OUTPUT_DIR)
    if override:
        out = Path(override)
    else:
        # config-relative, like the sft/family/loss references
        out = path.parent / data.get("output_dir", DEFAULT_OUTPUT_DIR)
    logger.debug("config %s: scenario=%s output_dir=%s", path, data["scenario"], out)
    return ScenarioConfig(
        scenario=data["scenario"],
        inputs=inputs,
        seed=int(inputs.get("seed", 0)),
        beta=float(inputs.get("beta", 1.0)),
        output_dir=out,
        raw=data,
    )


def validate(path: Union[str, Path]) -> List[str]:
    """Dry run of a config: parse, build, mixing and regularity checks; never writes

    Returns:
        Diagnostics, empty when the config is usable
    """
    path = Path(path)
    diagnostics: List[str] = []
    try:
        data = read_config(path)
    except ConfigError as e:
        return [str(e)]

    base_dir = path.parent
    sft = None
    if "sft" in data:
        try:
            sft = sft_from_dict(_resolve(data["sft"], base_dir, "sft"), require_mixing=False)
        except GibbsPosteriorError as e:
            return [f"sft: {e}"]
        if not sft.is_mixing:
            return [f"sft: {sft.describe()}: is_mixing = false"]

    try:
        family = build_family(_resolve(data["family"], base_dir, "family"), sft)
    except ConfigError as e:
        return [str(e)]
    except GibbsPosteriorError as e:
        return [f"family: {e}"]
    try:
        loss = build_loss(_resolve(data["loss"], base_dir, "loss"), family)
        if "theta_star" in data:
            _theta_index(family, data["theta_star"])
    except ConfigError as e:
        return [str(e)]
    except GibbsPosteriorError as e:
        return [f"loss: {e}"]

    if not family.sft.is_mixing:
        diagnostics.append(f"family: {family.sft.describe()}: is_mixing = false")
        return diagnostics
    if len(family.grid) >= 2:
        try:
            report = regularity_report(family)
        except GibbsPosteriorError as e:
            diagnostics.append(f"family: {e}")
        else:
            if not report.pressure_bound_holds:
                diagnostics.append("family: pressure jumps exceed the sup-norm differences")
    if isinstance(loss, LossSpec) and loss.n_theta != len(family.grid):
        diagnostics.append(f"loss: tables cover {loss.n_theta} grid points, family has {len(family.grid)}")
    return diagnostics


def summarize(config: ScenarioConfig) -> List[str]:
    """Grid, prior and shift summary lines for the validate verb"""
    family = config.family
    grid = family.grid
    loss = config.inputs["loss"]
    loss_kind = "direct" if isinstance(loss, DirectLoss) else loss.kind.value
    lines = [
        f"scenario: {config.scenario}",
        f"shift: {family.sft.describe()}",
        f"family: {family.name}, {len(grid)} points, dim {grid.dim}, range {family.range}",
        f"loss: {loss_kind}",
        f"prior: min {grid.prior_weights.min():.6g}, max {grid.prior_weights.max():.6g}",
        f"grid hash: {grid.grid_hash()}",
    ]
    if "theta_star" in config.inputs:
        lines.append(f"theta*: {grid.label(config.inputs['theta_star'])}")
    return lines
