"""Configuration parser for torusflux

Handles loading, validation, and default values for run and sweep
documents (YAML).
"""
import copy
import itertools
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml

from torusflux.core.errors import ConfigError, TorusfluxError
from torusflux.fields.grid import TorusGrid
from torusflux.laws import law_from_dict

logger = logging.getLogger(__name__)

ENV_PREFIX = "TORUSFLUX_"
ENV_SEPARATOR = "__"

# sweep axis name -> dotted config key it overrides
AXES: Dict[str, str] = {
    "epsilon": "scheme.epsilon",
    "delta": "scheme.delta",
    "mu": "law.mu",
    "n_per_axis": "grid.n_per_axis",
    "dt": "scheme.dt",
    "h": "diagnostics.kernel.h_list",
}

# keys whose default is None, with the types they accept
OPTIONAL_TYPES: Dict[str, Tuple[type, ...]] = {
    "law.amplitude": (float, int),
    "law.support": (float, int),
    "law.table": (str,),
    "law.rho_table": (list,),
    "law.pi_table": (list,),
    "scheme.velocity_epsilon": (float, int),
    "scheme.m": (float, int),
    "scheme.dt": (float, int),
    "diagnostics.weight.cap": (float, int),
    "diagnostics.kernel.sigma": (float, int),
    "diagnostics.bogovskii.alpha": (float, int),
}

# subtrees whose keys are free-form
OPEN_SECTIONS = ("sweep.axes",)

PRESSURE_STAGES = ("end", "midpoint")
RHO_RECIPES = ("sine", "constant", "gaussian", "random")
U_RECIPES = ("zero", "sine", "constant", "random")
WEIGHT_INITIAL = ("one", "capped")


def m_from_Gamma(Gamma: float) -> float:
    """Damping exponent m = 5/2 Γ + 3/2"""
    return 2.5 * Gamma + 1.5


class Config:
    """Configuration manager for torusflux

    Loads a YAML document with sensible defaults and environment
    overrides of the form TORUSFLUX_<SECTION>__<KEY>=value.
    """

    DEFAULT_CONFIG: Dict[str, Any] = {
        "version": "1.0",
        "grid": {
            "dim": 1,
            "n_per_axis": 64,
            "length": 2.0 * math.pi,
        },
        "law": {
            "kind": "isentropic",
            "gamma": 2.0,
            "Gamma": 4.0,
            "mu": 0.0,
            "coefficient": 1.0,
            "amplitude": None,
            "support": None,
            "table": None,
            "rho_table": None,
            "pi_table": None,
        },
        "scheme": {
            "epsilon": 0.2,
            "velocity_epsilon": None,  # defaults to epsilon
            "delta": 0.0,
            "m": None,  # defaults to 5/2 Γ + 3/2
            "dt": None,  # defaults to the CFL estimate
            "t_end": 0.1,
            "picard_tol": 1e-10,
            "picard_max": 20,
            "relaxation": 1.0,
            "pressure_stage": "end",
        },
        "initial": {
            "rho": {
                "recipe": "sine",
                "mean": 1.0,
                "amplitude": 0.5,
                "mode": 1,
                "width": 0.5,
                "rho_min": 0.1,
                "rho_max": 10.0,
            },
            "u": {
                "recipe": "zero",
                "amplitude": 0.0,
                "mode": 1,
            },
            "mollify": True,
        },
        "diagnostics": {
            "stride": 10,
            "energy_tolerance": 1e-3,
            "weight": {
                "enabled": True,
                "c1": 1.0,
                "c2": 1.0,
                "c3": 1.0,
                "c4": 0.0,
                "initial": "one",
                "cap": None,
            },
            "kernel": {
                "h_list": [2.0 ** -j for j in range(2, 8)],
                "sigma": None,
                "p": 1.0,
                "normalized": True,
                "weighted": True,
            },
            "defect": {
                "alpha": 2.0,
                "k_list": [1, 2, 4, 8, 16],
            },
            "bogovskii": {
                "alpha": None,  # defaults to 13/20 Γ - 1/20
            },
        },
        "sweep": {
            "axes": {},
            "max_runs": 64,
            "workers": 1,
        },
        "outputs": {
            "dir": "torusflux-out",
            "snapshot_times": [],
            "csv": True,
            "markdown": True,
            "final_snapshot": True,
            "series": True,
        },
        "seed": 0,
    }

    RESOLVED_FILE = "resolved_config.yaml"

    def __init__(
        self,
        config_file: Optional[Union[str, Path]] = None,
        environ: Optional[Mapping[str, str]] = None,
    ):
        """Initialize configuration

        Args:
            config_file: YAML document to load (defaults only if None)
            environ: Environment for overrides (os.environ if None)
        """
        self.config_file = Path(config_file) if config_file else None
        self.environ = os.environ if environ is None else environ
        self._config: Optional[Dict[str, Any]] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Config":
        """Wrap an already merged configuration"""
        config = cls(environ={})
        config._config = copy.deepcopy(data)
        return config

    def load(self) -> Dict[str, Any]:
        """Load and merge configuration

        Returns:
            Merged configuration dict with defaults and overrides applied
        """
        if self._config is None:
            self._config = copy.deepcopy(self.DEFAULT_CONFIG)

            if self.config_file and self.config_file.exists():
                user_config = yaml.safe_load(self.config_file.read_text())
                if isinstance(user_config, dict):
                    self._config = self._merge_config(self._config, user_config)

            overrides, _ = env_overrides(self.environ)
            if overrides:
                self._config = self._merge_config(self._config, overrides)

        return self._config

    def _merge_config(self, default: Dict[str, Any], user: Dict[str, Any]) -> Dict[str, Any]:
        """Deep merge user config with defaults

        Args:
            default: Default configuration
            user: User-provided configuration

        Returns:
            Merged configuration
        """
        return merge_config(default, user)

    def save(self, path: Union[str, Path], config: Optional[Dict[str, Any]] = None) -> Path:
        """Save configuration to a YAML file

        Args:
            path: Target file, or a directory to hold resolved_config.yaml
            config: Configuration to save, or current config if None
        """
        path = Path(path)
        if path.is_dir():
            path = path / self.RESOLVED_FILE
        to_save = config or self._config or self.load()
        path.write_text(yaml.safe_dump(to_save, default_flow_style=False, sort_keys=False))
        return path

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value by dot-notation key

        Args:
            key: Dot-notation key (e.g., "scheme.epsilon")
            default: Default value if not found

        Returns:
            Configuration value or default
        """
        config = self._config or self.load()
        value = config
        for k in key.split("."):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    @property
    def stride(self) -> int:
        return self.get("diagnostics.stride", 10)

    @property
    def output_dir(self) -> Path:
        return Path(self.get("outputs.dir", "torusflux-out")).expanduser()

    @property
    def workers(self) -> int:
        return self.get("sweep.workers", 1)

    @property
    def max_runs(self) -> int:
        return self.get("sweep.max_runs", 64)

    @property
    def axes(self) -> Dict[str, List[float]]:
        return self.get("sweep.axes", {}) or {}

    def validate(self) -> List[str]:
        """Validate current configuration

        Returns:
            List of validation errors (empty if valid)
        """
        errors: List[Tuple[str, str]] = []
        config = self.load()
        _check_tree(config, self.DEFAULT_CONFIG, "", {}, errors)
        _check_semantics(config, {}, errors)
        return [f"{loc}: {msg}" if loc else msg for loc, msg in errors]


def merge_config(default: Dict[str, Any], user: Dict[str, Any]) -> Dict[str, Any]:
    """Deep merge; dict values merge recursively, everything else replaces"""
    result = copy.deepcopy(default)
    for key, value in user.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = merge_config(result[key], value)
        else:
            result[key] = copy.deepcopy(value)
    return result


def get_dotted(config: Dict[str, Any], key: str, default: Any = None) -> Any:
    value = config
    for k in key.split("."):
        if isinstance(value, dict) and k in value:
            value = value[k]
        else:
            return default
    return value


def set_dotted(config: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    target = config
    for k in parts[:-1]:
        target = target.setdefault(k, {})
    target[parts[-1]] = value


def env_overrides(environ: Mapping[str, str]) -> Tuple[Dict[str, Any], Dict[str, str]]:
    """Collect TORUSFLUX_<SECTION>__<KEY> overrides

    Returns:
        (nested override dict, dotted key -> variable name)
    """
    overrides: Dict[str, Any] = {}
    sources: Dict[str, str] = {}
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX) or ENV_SEPARATOR not in name:
            continue
        parts = name[len(ENV_PREFIX):].split(ENV_SEPARATOR)
        key = _env_key(parts)
        try:
            value = yaml.safe_load(environ[name])
        except yaml.YAMLError:
            value = environ[name]
        set_dotted(overrides, key, value)
        sources[key] = name
    return overrides, sources


def _env_key(parts: List[str]) -> str:
    """Dotted key for env name parts; exact spelling wins (LAW__Gamma), else lowercase"""
    keys = []
    section: Any = Config.DEFAULT_CONFIG
    for part in parts:
        key = part if isinstance(section, dict) and part in section else part.lower()
        keys.append(key)
        section = section.get(key) if isinstance(section, dict) else None
    return ".".join(keys)


def _line_index(text: str) -> Dict[str, int]:
    """Map dotted keys to 1-based source lines"""
    index: Dict[str, int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return index

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                key = f"{prefix}{key_node.value}"
                index[key] = key_node.start_mark.line + 1
                walk(value_node, key + ".")

    walk(root, "")
    return index


def _location(key: str, lines: Dict[str, int]) -> str:
    line = lines.get(key)
    return f"line {line}: {key}" if line else key


def _type_ok(value: Any, expected: Tuple[type, ...]) -> bool:
    if isinstance(value, bool):
        return bool in expected
    if float in expected and isinstance(value, int):
        return True
    return isinstance(value, expected)


def _expected_types(key: str, default: Any) -> Optional[Tuple[type, ...]]:
    if key in OPTIONAL_TYPES:
        return OPTIONAL_TYPES[key] + (type(None),)
    if default is None:
        return None
    if isinstance(default, bool):
        return (bool,)
    if isinstance(default, float):
        return (float, int)
    return (type(default),)


def _check_tree(
    user: Dict[str, Any],
    defaults: Dict[str, Any],
    prefix: str,
    lines: Dict[str, int],
    errors: List[Tuple[str, str]],
) -> None:
    for key, value in user.items():
        dotted = f"{prefix}{key}"
        if dotted in OPEN_SECTIONS:
            continue
        if key not in defaults:
            errors.append((_location(dotted, lines), "unknown key"))
            continue
        default = defaults[key]
        if isinstance(default, dict):
            if not isinstance(value, dict):
                errors.append((_location(dotted, lines), "expected a section"))
            else:
                _check_tree(value, default, dotted + ".", lines, errors)
            continue
        expected = _expected_types(dotted, default)
        if expected and not _type_ok(value, expected):
            names = "/".join(t.__name__ for t in expected if t is not type(None))
            errors.append((_location(dotted, lines), f"expected {names}, got {type(value).__name__}"))


def _check_semantics(config: Dict[str, Any], lines: Dict[str, int], errors: List[Tuple[str, str]]) -> None:
    """Checks that need the merged document"""

    def fail(key, msg):
        errors.append((_location(key, lines), msg))

    axes = get_dotted(config, "sweep.axes", {}) or {}
    if not isinstance(axes, dict):
        fail("sweep.axes", "expected a mapping of axis name to values")
        axes = {}
    size = 1
    for name, values in axes.items():
        key = f"sweep.axes.{name}"
        if name not in AXES:
            fail(key, f"unknown sweep axis (known: {', '.join(AXES)})")
            continue
        if not isinstance(values, list) or not values:
            fail(key, "axis needs a nonempty list of values")
            continue
        if not all(_type_ok(v, (float, int)) for v in values):
            fail(key, "axis values must be numbers")
            continue
        size *= len(values)
    max_runs = get_dotted(config, "sweep.max_runs", 64)
    if isinstance(max_runs, int) and size > max_runs:
        fail("sweep.axes", f"sweep has {size} runs, above the cap of {max_runs}")

    if get_dotted(config, "scheme.pressure_stage") not in PRESSURE_STAGES:
        fail("scheme.pressure_stage", f"expected one of {', '.join(PRESSURE_STAGES)}")
    if get_dotted(config, "initial.rho.recipe") not in RHO_RECIPES:
        fail("initial.rho.recipe", f"expected one of {', '.join(RHO_RECIPES)}")
    if get_dotted(config, "initial.u.recipe") not in U_RECIPES:
        fail("initial.u.recipe", f"expected one of {', '.join(U_RECIPES)}")
    if get_dotted(config, "diagnostics.weight.initial") not in WEIGHT_INITIAL:
        fail("diagnostics.weight.initial", f"expected one of {', '.join(WEIGHT_INITIAL)}")

    for key in ("scheme.epsilon", "scheme.velocity_epsilon", "scheme.dt", "scheme.t_end", "scheme.picard_tol", "scheme.relaxation"):
        value = get_dotted(config, key)
        if _type_ok(value, (float, int)) and not value > 0:
            fail(key, "must be positive")
    for key in ("scheme.delta", "law.mu"):
        value = get_dotted(config, key)
        if _type_ok(value, (float, int)) and value < 0:
            fail(key, "must be nonnegative")
    for key in ("scheme.picard_max", "diagnostics.stride", "sweep.workers", "sweep.max_runs"):
        value = get_dotted(config, key)
        if isinstance(value, int) and value < 1:
            fail(key, "must be at least 1")
    h_list = get_dotted(config, "diagnostics.kernel.h_list", [])
    if isinstance(h_list, list) and any(not (_type_ok(h, (float, int)) and 0 < h < 0.5) for h in h_list):
        fail("diagnostics.kernel.h_list", "kernel scales must lie in (0, 1/2)")
    for h in axes.get("h", []) if isinstance(axes.get("h"), list) else []:
        if _type_ok(h, (float, int)) and not 0 < h < 0.5:
            fail("sweep.axes.h", "kernel scales must lie in (0, 1/2)")
            break

    if errors:
        return
    # domain checks delegated to the objects the config builds
    try:
        TorusGrid(config["grid"]["dim"], config["grid"]["n_per_axis"], config["grid"]["length"])
    except TorusfluxError as e:
        fail("grid", str(e))
    try:
        law_from_dict(config["law"])
    except TorusfluxError as e:
        fail("law", str(e))
    for n in axes.get("n_per_axis", []):
        try:
            TorusGrid(config["grid"]["dim"], int(n), config["grid"]["length"])
        except TorusfluxError as e:
            fail("sweep.axes.n_per_axis", str(e))


def estimate_dt(config: Dict[str, Any]) -> float:
    """CFL-based default step 0.25·spacing / max(1, max|u0|, sqrt(π_μ'(ρ_peak)))"""
    grid = config["grid"]
    spacing = grid["length"] / grid["n_per_axis"]
    rho = config["initial"]["rho"]
    if rho["recipe"] == "constant":
        peak = rho["mean"]
    else:
        peak = rho["mean"] + abs(rho["amplitude"])
    peak = min(max(peak, rho["rho_min"]), rho["rho_max"])
    law = law_from_dict(config["law"])
    sound = math.sqrt(max(float(law.pressure(max(peak, 0.0), 1)), 0.0))
    u_peak = abs(config["initial"]["u"]["amplitude"])
    dt = 0.25 * spacing / max(1.0, u_peak, sound)
    return min(dt, config["scheme"]["t_end"])


DERIVED_KEYS = ("scheme.m", "scheme.velocity_epsilon", "scheme.dt", "diagnostics.bogovskii.alpha")


def resolve_config(config: Dict[str, Any], warn: bool = True) -> Dict[str, Any]:
    """Fill derived defaults (m, velocity ε, dt, Bogovskii α) in place"""
    scheme = config["scheme"]
    law = config["law"]
    expected_m = m_from_Gamma(law["Gamma"])
    if scheme["m"] is None:
        scheme["m"] = expected_m
    elif warn and abs(scheme["m"] - expected_m) > 1e-12:
        logger.warning(
            "scheme.m = %g differs from the relation m = 5/2 Γ + 3/2 = %g (Γ = %g)",
            scheme["m"],
            expected_m,
            law["Gamma"],
        )
    if scheme["velocity_epsilon"] is None:
        scheme["velocity_epsilon"] = scheme["epsilon"]
    if scheme["dt"] is None:
        scheme["dt"] = estimate_dt(config)
    bog = config["diagnostics"]["bogovskii"]
    if bog["alpha"] is None:
        bog["alpha"] = 13.0 / 20.0 * law["Gamma"] - 1.0 / 20.0
    return config


@dataclass
class SweepConfig:
    """Validated sweep description

    Attributes:
        base: Fully resolved run configuration (axes excluded)
        axes: Axis name -> values, in document order
        outputs: Output section of base
        seed: Reserved; the solver is deterministic
        max_runs: Cap on the cross-product size
        workers: Worker pool size
        derived: Dotted keys whose values were derived rather than given
    """

    base: Dict[str, Any]
    axes: Dict[str, List[float]] = field(default_factory=dict)
    outputs: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    max_runs: int = 64
    workers: int = 1
    derived: Tuple[str, ...] = ()

    @property
    def size(self) -> int:
        size = 1
        for values in self.axes.values():
            size *= len(values)
        return size

    def points(self) -> List[Dict[str, float]]:
        """Cross product of axis values, last axis varying fastest"""
        names = list(self.axes)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.axes[n] for n in names))]

    def run_config(self, point: Dict[str, float]) -> Dict[str, Any]:
        """Resolved configuration of one sweep point

        Derived values are recomputed from the overridden ones.
        """
        config = copy.deepcopy(self.base)
        for key in self.derived:
            set_dotted(config, key, None)
        for name, value in point.items():
            if name == "h":
                value = [float(value)]
            elif name == "n_per_axis":
                value = int(value)
            else:
                value = float(value)
            set_dotted(config, AXES[name], value)
        return resolve_config(config, warn=False)

    def to_dict(self) -> Dict[str, Any]:
        """Document that reproduces this sweep when parsed again

        Derived values that depend on an axis are written as null.
        """
        config = copy.deepcopy(self.base)
        if self.axes:
            for key in self.derived:
                set_dotted(config, key, None)
        config["sweep"]["axes"] = copy.deepcopy(self.axes)
        return config


def parse_config(text: str, environ: Optional[Mapping[str, str]] = None) -> SweepConfig:
    """Parse and validate a configuration document

    Args:
        text: YAML document
        environ: Environment for TORUSFLUX_<SECTION>__<KEY> overrides
            (none are applied if None)

    Returns:
        SweepConfig with every default resolved

    Raises:
        ConfigError: Malformed document, unknown keys, type mismatches,
            invalid values or axis cap exceeded
    """
    try:
        user = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        loc = f"line {mark.line + 1}" if mark else ""
        raise ConfigError([(loc, f"malformed YAML: {getattr(e, 'problem', e)}")])
    if user is None:
        user = {}
    if not isinstance(user, dict):
        raise ConfigError([("", "configuration document must be a mapping")])

    lines = _line_index(text)
    errors: List[Tuple[str, str]] = []
    _check_tree(user, Config.DEFAULT_CONFIG, "", lines, errors)

    overrides, sources = env_overrides(environ or {})
    env_errors: List[Tuple[str, str]] = []
    _check_tree(overrides, Config.DEFAULT_CONFIG, "", {}, env_errors)
    for loc, msg in env_errors:
        errors.append((f"env {sources.get(loc, loc)}", msg))
    if errors:
        raise ConfigError(errors)

    merged = merge_config(merge_config(Config.DEFAULT_CONFIG, user), overrides)
    _check_semantics(merged, lines, errors)
    if errors:
        raise ConfigError(errors)

    derived = tuple(key for key in DERIVED_KEYS if get_dotted(merged, key) is None)
    resolve_config(merged)
    axes = {name: list(values) for name, values in (merged["sweep"]["axes"] or {}).items()}
    merged["sweep"]["axes"] = {}
    return SweepConfig(
        base=merged,
        axes=axes,
        outputs=merged["outputs"],
        seed=int(merged["seed"]),
        max_runs=merged["sweep"]["max_runs"],
        workers=merged["sweep"]["workers"],
        derived=derived,
    )
