"""
Experiment Configuration Management

Handles loading, validating, resolving and saving experiment configurations
and the shipped presets.
"""

import copy
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from ..analysis.basis import WeightKind, WeightSequence, check_regularity
from ..analysis.model import ErrorKind, ErrorLaw, LinkPattern, ProcessSpec, SlopeProfile, SlopeSpec
from ..analysis.rates import (DIMENSION_RULES, THRESHOLD_RULES, RateCase, RateTarget,
                              consistency_diagnostics, resolve_dimension, resolve_threshold)
from .data_exporter import ExportFormat
from .exceptions import ConfigValidationError, EllipsoidError

CONFIG_VERSION = "1.0"
DEFAULT_OUTPUT_DIR = "results"
OUTPUT_DIR_ENV = "FLM_OUTPUT_DIR"
MIN_TRUNCATION = 128

PRESETS_DIR = Path(__file__).resolve().parent.parent / "configs"


@dataclass
class ProcessConfig:
    """Regressor design and noise"""
    decay: str = "poly"  # poly, exp
    a: float = 1.0
    d: float = 1.0
    sigma: float = 0.5
    link_pattern: str = "constant"  # constant, alternating
    error_law: str = "gaussian"  # gaussian, student_t
    df: Optional[float] = None
    truncation: Optional[int] = None  # J; resolved when missing


@dataclass
class SlopeConfig:
    """Slope function inside the Sobolev ellipsoid"""
    p: float = 1.0
    rho: float = 1.0
    profile: str = "smooth_default"  # smooth_default, explicit
    coeffs: Optional[List[float]] = None


@dataclass
class EstimatorConfig:
    """Dimension rule, threshold rule and derivative order"""
    m: Union[int, str] = "n^{1/(2p+2a+1)}"
    gamma: Union[float, str] = "n"
    s: int = 0
    threshold_power: int = 1
    allow_s_above_p: bool = False


@dataclass
class ExperimentSettings:
    """Monte Carlo settings"""
    n_grid: List[int] = field(default_factory=lambda: [500, 1000, 2000, 4000, 8000])
    replications: int = 200
    master_seed: int = 20240611
    weight_kind: str = "prediction"  # prediction, l2, upsilon, derivative_l2
    workers: int = 1
    tolerance: float = 0.2
    low_power_replications: int = 30
    retain_risks: bool = False
    side_condition_k: int = 6
    lowerbound_replications: int = 50


@dataclass
class OutputConfig:
    """Where and how results are written"""
    directory: Optional[str] = None
    formats: List[str] = field(default_factory=lambda: ["dat", "gnuplot"])  # optional plot data


@dataclass
class ExperimentConfig:
    """Complete experiment configuration"""
    name: str = "default"
    description: str = ""
    version: str = CONFIG_VERSION

    process: ProcessConfig = None
    slope: SlopeConfig = None
    estimator: EstimatorConfig = None
    experiment: ExperimentSettings = None
    output: OutputConfig = None

    def __post_init__(self):
        """Initialize default sections"""
        if self.process is None:
            self.process = ProcessConfig()

        if self.slope is None:
            self.slope = SlopeConfig()

        if self.estimator is None:
            self.estimator = EstimatorConfig()

        if self.experiment is None:
            self.experiment = ExperimentSettings()

        if self.output is None:
            self.output = OutputConfig()


SECTIONS = {
    'process': ProcessConfig,
    'slope': SlopeConfig,
    'estimator': EstimatorConfig,
    'experiment': ExperimentSettings,
    'output': OutputConfig,
}

DECAY_KINDS = ("poly", "exp")
LINK_PATTERNS = ("constant", "alternating")
ERROR_LAWS = ("gaussian", "student_t")
SLOPE_PROFILES = ("smooth_default", "explicit")
RISK_KINDS = ("prediction", "l2", "upsilon", "derivative_l2")
OUTPUT_FORMATS = tuple(f.value for f in ExportFormat)


def config_to_dict(config: ExperimentConfig) -> Dict[str, Any]:
    """Convert configuration to dictionary"""
    return asdict(config)


def dict_to_config(config_dict: Dict[str, Any]) -> ExperimentConfig:
    """Convert dictionary to configuration; unknown keys are rejected"""
    config_dict = copy.deepcopy(config_dict)
    sections = {}
    for name, section_cls in SECTIONS.items():
        data = config_dict.pop(name, {}) or {}
        if not isinstance(data, dict):
            raise ConfigValidationError(name, "section must be an object")
        known = {f.name for f in fields(section_cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigValidationError(f"{name}.{unknown[0]}", "unknown configuration key")
        sections[name] = section_cls(**data)

    known_top = {'name', 'description', 'version'}
    unknown_top = sorted(set(config_dict) - known_top)
    if unknown_top:
        raise ConfigValidationError(unknown_top[0], "unknown configuration key")
    return ExperimentConfig(**sections, **config_dict)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


class ConfigurationManager:
    """Manages experiment configurations and shipped presets"""

    def __init__(self, presets_dir: Optional[Union[str, Path]] = None):
        """
        Initialize configuration manager

        Args:
            presets_dir: Directory holding preset JSON files
        """
        self.logger = logging.getLogger(__name__)
        self.presets_dir = Path(presets_dir) if presets_dir is not None else PRESETS_DIR

    # Presets and files

    def list_presets(self) -> List[Dict[str, Any]]:
        """
        List all available presets

        Returns:
            List of preset information dictionaries
        """
        presets = []
        for preset_file in self.presets_dir.glob("*.json"):
            with open(preset_file, 'r', encoding='utf-8') as f:
                config_dict = json.load(f)
            presets.append({
                'name': preset_file.stem,
                'description': config_dict.get('description', ''),
                'file': str(preset_file),
            })
        return sorted(presets, key=lambda x: x['name'])

    def load_preset(self, name: str) -> ExperimentConfig:
        """Load a shipped preset by name"""
        preset_file = self.presets_dir / f"{name}.json"
        if not preset_file.exists():
            available = ", ".join(p['name'] for p in self.list_presets())
            raise ConfigValidationError("preset", f"unknown preset '{name}' (available: {available})")
        self.logger.info(f"Loading preset '{name}'")
        return self.load_file(preset_file)

    def load_file(self, filepath: Union[str, Path]) -> ExperimentConfig:
        """Load a configuration file"""
        try:
            with open(filepath, 'r', encoding='utf-8') as f:
                config_dict = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigValidationError("file", f"{filepath} is not valid JSON: {e}") from e
        if not isinstance(config_dict, dict):
            raise ConfigValidationError("file", f"{filepath} must hold a JSON object")
        # Sidecars written by the exporter wrap the resolved config
        if 'config' in config_dict and 'schema_version' in config_dict:
            config_dict = config_dict['config']
        return dict_to_config(config_dict)

    def load(self, source: Optional[str]) -> ExperimentConfig:
        """Load from a file path or a preset name; None gives the defaults"""
        if source is None:
            return ExperimentConfig()
        path = Path(source)
        if path.suffix == ".json" or path.exists():
            if not path.exists():
                raise ConfigValidationError("file", f"configuration file {source} not found")
            return self.load_file(path)
        return self.load_preset(source)

    def save(self, config: ExperimentConfig, filepath: Union[str, Path]):
        """Save configuration as JSON"""
        Path(filepath).parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(config_to_dict(config), f, indent=2, sort_keys=True)
            f.write("\n")

    # Overrides

    def apply_overrides(self, config: ExperimentConfig, overrides: Sequence[str]) -> ExperimentConfig:
        """
        Apply section.key=value overrides

        Values are JSON-decoded when possible, otherwise kept as strings.
        """
        config = copy.deepcopy(config)
        for item in overrides or ():
            if "=" not in item:
                raise ConfigValidationError(item, "override must look like section.key=value")
            key, raw = item.split("=", 1)
            key = key.strip()
            self.set_value(config, key, _parse_value(raw.strip()))
        return config

    def set_value(self, config: ExperimentConfig, key: str, value: Any):
        """Set a single dotted key"""
        parts = key.split(".")
        if len(parts) == 1 and parts[0] in ('name', 'description'):
            setattr(config, parts[0], value)
            return
        if len(parts) != 2 or parts[0] not in SECTIONS:
            raise ConfigValidationError(key, "unknown configuration key")
        section = getattr(config, parts[0])
        if not hasattr(section, parts[1]):
            raise ConfigValidationError(key, "unknown configuration key")
        setattr(section, parts[1], value)
        self.logger.debug(f"Override {key} = {value!r}")

    def output_directory(self, config: ExperimentConfig) -> Path:
        """Output directory: config value, then FLM_OUTPUT_DIR, then ./results"""
        if config.output.directory:
            return Path(config.output.directory)
        return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))

    # Validation

    def validate(self, config: ExperimentConfig) -> List[str]:
        """
        Check every precondition before any simulation

        Raises:
            ConfigValidationError: naming the key and the violated condition

        Returns:
            Soft findings, also logged as warnings
        """
        self._validate_process(config.process)
        self._validate_slope(config.slope)
        self._validate_estimator(config)
        self._validate_experiment(config)
        self._validate_output(config.output)

        resolved = self.resolve(config)
        J = resolved.process.truncation
        dims = self.dimensions(resolved)
        for n, m in zip(resolved.experiment.n_grid, dims):
            if m > J:
                raise ConfigValidationError(
                    "estimator.m", f"dimension m={m} at n={n} exceeds truncation J={J}")
        if config.slope.profile == "explicit" and len(config.slope.coeffs) > J:
            raise ConfigValidationError(
                "slope.coeffs", f"{len(config.slope.coeffs)} coefficients exceed truncation J={J}")

        findings = self._soft_findings(resolved, dims)
        for finding in findings:
            self.logger.warning(finding)
        return findings

    def _validate_process(self, proc: ProcessConfig):
        if proc.decay not in DECAY_KINDS:
            raise ConfigValidationError("process.decay", f"must be one of {DECAY_KINDS}, got {proc.decay!r}")
        if not _is_number(proc.a):
            raise ConfigValidationError("process.a", f"must be a number, got {proc.a!r}")
        if proc.decay == "poly" and not proc.a > 0.5:
            raise ConfigValidationError("process.a", f"polynomial decay requires a > 1/2, got {proc.a}")
        if proc.decay == "exp" and not proc.a > 0:
            raise ConfigValidationError("process.a", f"exponential decay requires a > 0, got {proc.a}")
        if not _is_number(proc.d) or proc.d < 1:
            raise ConfigValidationError("process.d", f"link constant requires d >= 1, got {proc.d}")
        if not _is_number(proc.sigma) or proc.sigma < 0:
            raise ConfigValidationError("process.sigma", f"noise level requires sigma >= 0, got {proc.sigma}")
        if proc.link_pattern not in LINK_PATTERNS:
            raise ConfigValidationError(
                "process.link_pattern", f"must be one of {LINK_PATTERNS}, got {proc.link_pattern!r}")
        if proc.error_law not in ERROR_LAWS:
            raise ConfigValidationError(
                "process.error_law", f"must be one of {ERROR_LAWS}, got {proc.error_law!r}")
        if proc.error_law == "student_t" and not (_is_number(proc.df) and proc.df >= 17):
            raise ConfigValidationError(
                "process.df", f"Student-t errors require df >= 17, got {proc.df}")
        if proc.truncation is not None and not (_is_int(proc.truncation) and proc.truncation >= 3):
            raise ConfigValidationError(
                "process.truncation", f"truncation requires an integer J >= 3, got {proc.truncation!r}")

    def _validate_slope(self, slope: SlopeConfig):
        if not _is_number(slope.p) or slope.p < 0:
            raise ConfigValidationError("slope.p", f"smoothness requires p >= 0, got {slope.p}")
        if not _is_number(slope.rho) or not slope.rho > 0:
            raise ConfigValidationError("slope.rho", f"ellipsoid radius requires rho > 0, got {slope.rho}")
        if slope.profile not in SLOPE_PROFILES:
            raise ConfigValidationError(
                "slope.profile", f"must be one of {SLOPE_PROFILES}, got {slope.profile!r}")
        if slope.profile == "explicit":
            if not slope.coeffs or not all(_is_number(c) for c in slope.coeffs):
                raise ConfigValidationError("slope.coeffs", "explicit profile needs a list of numbers")
            try:
                SlopeSpec(slope.p, slope.rho, SlopeProfile.EXPLICIT, slope.coeffs)
            except EllipsoidError as e:
                raise ConfigValidationError("slope.coeffs", str(e)) from e

    def _validate_estimator(self, config: ExperimentConfig):

        est = config.estimator
        if _is_int(est.m):
            if est.m < 1:
                raise ConfigValidationError("estimator.m", f"explicit dimension requires m >= 1, got {est.m}")
        elif est.m not in DIMENSION_RULES:
            raise ConfigValidationError(
                "estimator.m", f"must be a positive integer or one of {DIMENSION_RULES}, got {est.m!r}")

        if _is_number(est.gamma):
            if not est.gamma > 0:
                raise ConfigValidationError("estimator.gamma", f"threshold requires gamma > 0, got {est.gamma}")
        elif est.gamma not in THRESHOLD_RULES:
            raise ConfigValidationError(
                "estimator.gamma", f"must be a positive number or one of {THRESHOLD_RULES}, got {est.gamma!r}")

        if not _is_int(est.s) or est.s < 0:
            raise ConfigValidationError("estimator.s", f"derivative order must be an integer >= 0, got {est.s!r}")
        if est.s > config.slope.p and not est.allow_s_above_p:
            raise ConfigValidationError(
                "estimator.s", f"derivative order requires s <= p, got s={est.s}, p={config.slope.p} "
                               f"(set estimator.allow_s_above_p to override)")
        if est.s > config.slope.p and not (_is_int(est.m) and _is_number(est.gamma)):
            # rate rules are defined for s <= p only
            raise ConfigValidationError(
                "estimator.m", f"s={est.s} > p={config.slope.p} needs an explicit integer m and numeric gamma")
        if est.threshold_power not in (1, 2) or isinstance(est.threshold_power, bool):
            raise ConfigValidationError(
                "estimator.threshold_power", f"must be 1 or 2, got {est.threshold_power!r}")

    def _validate_experiment(self, config: ExperimentConfig):
        exp = config.experiment
        grid = exp.n_grid
        if not isinstance(grid, list) or not grid:
            raise ConfigValidationError("experiment.n_grid", "sample-size grid must be a nonempty list")
        if not all(_is_int(n) and n >= 2 for n in grid):
            raise ConfigValidationError("experiment.n_grid", f"sample sizes must be integers >= 2, got {grid}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigValidationError("experiment.n_grid", f"sample sizes must be strictly increasing, got {grid}")
        if not _is_int(exp.replications) or exp.replications < 2:
            raise ConfigValidationError(
                "experiment.replications", f"experiments need R >= 2, got {exp.replications!r}")
        if not _is_int(exp.master_seed) or exp.master_seed < 0:
            raise ConfigValidationError(
                "experiment.master_seed", f"seed must be a nonnegative integer, got {exp.master_seed!r}")
        if exp.weight_kind not in RISK_KINDS:
            raise ConfigValidationError(
                "experiment.weight_kind", f"must be one of {RISK_KINDS}, got {exp.weight_kind!r}")
        if exp.weight_kind in ("prediction", "upsilon") and config.estimator.s != 0:
            raise ConfigValidationError(
                "experiment.weight_kind", f"'{exp.weight_kind}' risk applies to s=0 only, got s={config.estimator.s}")
        if not _is_int(exp.workers) or exp.workers < 1:
            raise ConfigValidationError("experiment.workers", f"workers must be >= 1, got {exp.workers!r}")
        if not _is_number(exp.tolerance) or not exp.tolerance > 0:
            raise ConfigValidationError("experiment.tolerance", f"tolerance must be > 0, got {exp.tolerance!r}")
        if not _is_int(exp.side_condition_k) or exp.side_condition_k < 4:
            raise ConfigValidationError(
                "experiment.side_condition_k", f"moment index requires k >= 4, got {exp.side_condition_k!r}")
        if not _is_int(exp.lowerbound_replications) or exp.lowerbound_replications < 2:
            raise ConfigValidationError(
                "experiment.lowerbound_replications", f"need at least 2, got {exp.lowerbound_replications!r}")

    def _validate_output(self, output: OutputConfig):
        unknown = [f for f in output.formats if f not in OUTPUT_FORMATS]
        if unknown:
            raise ConfigValidationError("output.formats", f"unknown formats {unknown}; expected {OUTPUT_FORMATS}")

    def _soft_findings(self, config: ExperimentConfig, dims: List[int]) -> List[str]:
        findings = []
        if config.estimator.s > config.slope.p:
            findings.append(f"Derivative order s={config.estimator.s} exceeds smoothness "
                            f"p={config.slope.p} (override active)")
            return findings

        case = rate_case(config)
        J = config.process.truncation
        problems = check_regularity(case.b(), case.omega(), case.upsilon(), J)
        findings.extend(f"Regularity assumption: {problem}" for problem in problems)

        grid = config.experiment.n_grid
        gammas = [self.threshold(config, n, m) for n, m in zip(grid, dims)]
        proc = process_spec(config)
        findings.extend(consistency_diagnostics(grid, dims, gammas, case.omega(), proc.eigenvalues()))
        return findings

    # Resolution

    def resolve(self, config: ExperimentConfig) -> ExperimentConfig:
        """Copy with derived values filled: odd truncation J >= max(128, 4 * m_max)

        Odd J keeps the last cosine paired with its sine under differentiation.
        """
        resolved = copy.deepcopy(config)
        if resolved.process.truncation is None:
            m_max = max(self.dimensions(resolved))
            J = max(MIN_TRUNCATION, 4 * m_max)
            if resolved.slope.profile == "explicit" and resolved.slope.coeffs:
                J = max(J, len(resolved.slope.coeffs))
            J |= 1
            resolved.process.truncation = J
            self.logger.debug(f"Resolved truncation J={J} (m_max={m_max})")
        return resolved

    def dimensions(self, config: ExperimentConfig) -> List[int]:
        """Dimension m(n) for every n of the grid"""
        return [self.dimension(config, n) for n in config.experiment.n_grid]

    def dimension(self, config: ExperimentConfig, n: int) -> int:
        rule = config.estimator.m
        if _is_int(rule):
            return int(rule)
        return resolve_dimension(rule, n, rate_case(config))

    def threshold(self, config: ExperimentConfig, n: int, m: int) -> float:
        rule = config.estimator.gamma
        if _is_number(rule):
            return float(rule)
        return resolve_threshold(rule, n, m, config.process.d, rate_case(config))


# Builders of analysis objects from a validated configuration

def rate_case(config: ExperimentConfig) -> RateCase:
    """RateCase of the configured decay, smoothness and risk"""
    kind = WeightKind.POLY_DECAY if config.process.decay == "poly" else WeightKind.EXP_DECAY
    if config.experiment.weight_kind in ("prediction", "upsilon"):
        target = RateTarget.PREDICTION
    else:
        target = RateTarget.DERIVATIVE_L2
    return RateCase(kind, float(config.process.a), float(config.slope.p), target, int(config.estimator.s))


def process_spec(config: ExperimentConfig) -> ProcessSpec:
    """ProcessSpec of a resolved configuration"""
    proc = config.process
    if proc.truncation is None:
        raise ConfigValidationError("process.truncation", "configuration must be resolved first")
    decay = (WeightSequence.poly_decay(proc.a) if proc.decay == "poly"
             else WeightSequence.exp_decay(proc.a))
    error_law = (ErrorLaw(ErrorKind.STUDENT_T, float(proc.df)) if proc.error_law == "student_t"
                 else ErrorLaw())
    return ProcessSpec(decay=decay, truncation=int(proc.truncation), sigma=float(proc.sigma),
                       d=float(proc.d), link_pattern=LinkPattern(proc.link_pattern),
                       error_law=error_law)


def slope_spec(config: ExperimentConfig) -> SlopeSpec:
    """SlopeSpec of a configuration"""
    slope = config.slope
    return SlopeSpec(p=float(slope.p), rho=float(slope.rho), profile=SlopeProfile(slope.profile),
                     coeffs=slope.coeffs)


def is_low_power(config: ExperimentConfig) -> bool:
    """Too few replications for the rate verdict to mean much"""
    return config.experiment.replications < config.experiment.low_power_replications
