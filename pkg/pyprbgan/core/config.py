"""
Configuration management for PyPrbGAN

Settings holds process-wide options (logging, workers, progress bars).
ExperimentConfig holds one experiment: GAN hyperparameters, the mixture,
the training schedule and where results go.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple
import json
import os

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
import yaml

from pyprbgan.core.errors import ConfigError
from pyprbgan.data.synthetic import MixtureSpec, grid_mixture, paper_mixture
from pyprbgan.gan.config import GanConfig
from pyprbgan.utils.file_parsers import LineMap, parse_vectors, read_config_text, split_list

THREADS_ENV = "PRBGAN_THREADS"

MIXTURE_PRESETS = {
    "paper": paper_mixture,
    "grid": grid_mixture,
}

# Keys whose text value is always a comma list
_LIST_KEYS = {
    ("gan", "layer_drop_probs"),
    ("run", "seeds"),
    ("mixture", "weights"),
}
_VECTOR_KEYS = {("mixture", "means"), ("mixture", "stds")}


class Settings(BaseModel):
    """
    Process-wide settings

    Attributes:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        max_workers: Parallel seed workers (-1 = PRBGAN_THREADS or CPU count)
        show_progress: Whether to show tqdm progress bars
    """

    log_level: str = Field(default="INFO")
    max_workers: int = Field(default=-1, ge=-1, validate_default=True)
    show_progress: bool = True

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level"""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v_upper

    @field_validator("max_workers")
    @classmethod
    def validate_max_workers(cls, v: int) -> int:
        """Resolve -1 from PRBGAN_THREADS, falling back to the CPU count"""
        if v == -1:
            env = os.environ.get(THREADS_ENV)
            if env:
                try:
                    return max(1, int(env))
                except ValueError:
                    raise ValueError(f"{THREADS_ENV} must be an integer, got '{env}'")
            return os.cpu_count() or 1
        if v == 0:
            raise ValueError("max_workers must be positive or -1")
        return v


class ScheduleConfig(BaseModel):
    """
    Training schedule

    Attributes:
        total_steps: Generator updates to run
        disc_steps_per_gen_step: Discriminator updates per generator update
        eval_every: Steps between evaluation checkpoints (step 0 and the
            final step are always evaluated)
        sample_count_for_eval: Generated and real samples per evaluation
        dataset_size: Size of the pre-sampled training pool (None = fresh
            draws every batch)
        normalize_data: Train on the mixture standardised by its analytic
            mean and std; evaluation is always in data units
        eval_bins: Histogram bins for evaluation
        tau: Mode capture threshold
    """
    total_steps: int = Field(default=2000, ge=1)
    disc_steps_per_gen_step: int = Field(default=1, ge=1)
    eval_every: int = Field(default=200, ge=1)
    sample_count_for_eval: int = Field(default=10000, ge=1)
    dataset_size: Optional[int] = Field(default=600000, ge=1)
    normalize_data: bool = True
    eval_bins: int = Field(default=100, ge=1)
    tau: float = Field(default=0.02, gt=0.0, lt=1.0)

    def eval_steps(self) -> List[int]:
        """Steps at which the run is evaluated"""
        steps = list(range(0, self.total_steps + 1, self.eval_every))
        if steps[-1] != self.total_steps:
            steps.append(self.total_steps)
        return steps


class RunConfig(BaseModel):
    """
    Output location and seeds

    Attributes:
        output_dir: Directory receiving one subdirectory per seed
        seeds: Seeds to run (non-empty)
    """
    output_dir: Path = Field(default=Path("runs"))
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)

    @field_validator("output_dir", mode="before")
    @classmethod
    def validate_path(cls, v: Any) -> Path:
        """Convert string to Path"""
        if isinstance(v, str):
            return Path(v)
        return v


def mixture_from_dict(data: Dict[str, Any]) -> MixtureSpec:
    """
    Build a mixture from a config mapping

    Accepts {"preset": "paper" | "grid"}, {"means", "stds", "weights"} or a
    full {"components": [...]} mapping.
    """
    data = dict(data)
    if "preset" in data:
        preset = str(data.pop("preset")).lower()
        if preset not in MIXTURE_PRESETS:
            raise ValueError(f"Unknown mixture preset '{preset}', expected one of {list(MIXTURE_PRESETS)}")
        if data:
            raise ValueError(f"mixture preset cannot be combined with {sorted(data)}")
        return MIXTURE_PRESETS[preset]()
    if "components" in data:
        return MixtureSpec(**data)
    if "means" not in data or "stds" not in data:
        raise ValueError("mixture needs a preset, components, or means and stds")
    return MixtureSpec.from_arrays(data["means"], data["stds"], data.get("weights"))


class ExperimentConfig(BaseModel):
    """
    Complete description of one experiment

    gan.data_dim always follows the mixture dimension.

    Attributes:
        gan: GAN hyperparameters (gan.seed is replaced per run seed)
        mixture: Real data distribution
        schedule: Training schedule
        run: Output directory and seeds
    """

    gan: GanConfig = Field(default_factory=GanConfig)
    mixture: MixtureSpec = Field(default_factory=paper_mixture)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    run: RunConfig = Field(default_factory=RunConfig)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_validator("mixture", mode="before")
    @classmethod
    def validate_mixture(cls, v: Any) -> Any:
        """Resolve presets and parallel lists"""
        if isinstance(v, dict):
            return mixture_from_dict(v)
        return v

    @model_validator(mode="after")
    def sync_data_dim(self) -> "ExperimentConfig":
        """Match the generator output width to the mixture"""
        if self.gan.data_dim != self.mixture.dimension:
            self.gan = self.gan.model_copy(update={"data_dim": self.mixture.dimension})
        return self

    def seed_config(self, seed: int) -> GanConfig:
        """GanConfig of one seed"""
        return self.gan.model_copy(update={"seed": seed})

    @classmethod
    def from_dict(cls, data: Dict[str, Any], lines: Optional[LineMap] = None) -> "ExperimentConfig":
        """
        Validate a nested mapping

        Raises:
            ConfigError: With the source line of the first failing key when
                lines is given
        """
        try:
            return cls(**data)
        except ValidationError as e:
            first = e.errors()[0]
            loc = tuple(str(part) for part in first["loc"])
            where = "[" + loc[0] + "] " + ".".join(loc[1:]) if loc else "config"
            raise ConfigError(f"{where}: {first['msg']}", line=_find_line(loc, lines)) from e
        except ValueError as e:
            raise ConfigError(str(e)) from e

    @classmethod
    def from_file(cls, file_path: Path) -> "ExperimentConfig":
        """
        Load a configuration file

        .yaml/.yml and .json are read as nested mappings; any other suffix is
        the key = value text format.
        """
        file_path = Path(file_path)
        if not file_path.exists():
            raise ConfigError(f"Config file not found: {file_path}")

        suffix = file_path.suffix.lower()
        if suffix in (".yaml", ".yml"):
            return cls.from_yaml(file_path)
        if suffix == ".json":
            return cls.from_json(file_path)
        return cls.from_text(file_path)

    @classmethod
    def from_yaml(cls, file_path: Path) -> "ExperimentConfig":
        with open(file_path, "r") as f:
            try:
                data = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Invalid YAML in {file_path}: {e}") from e
        return cls.from_dict(data)

    @classmethod
    def from_json(cls, file_path: Path) -> "ExperimentConfig":
        with open(file_path, "r") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"Invalid JSON in {file_path}: {e.msg}", line=e.lineno) from e
        return cls.from_dict(data)

    @classmethod
    def from_text(cls, file_path: Path) -> "ExperimentConfig":
        """Load the [section] / key = value format"""
        sections, lines = read_config_text(file_path)
        return cls.from_dict(sections_to_dict(sections, lines), lines)

    def to_dict(self) -> Dict[str, Any]:
        data = self.model_dump(mode="json")
        data["mixture"] = {
            "means": self.mixture.means.tolist(),
            "stds": self.mixture.stds.tolist(),
            "weights": [c.weight for c in self.mixture.components],
        }
        return data

    def to_yaml(self, file_path: Path) -> None:
        with open(file_path, "w") as f:
            yaml.safe_dump(self.to_dict(), f, default_flow_style=False, sort_keys=False)

    def to_json(self, file_path: Path) -> None:
        with open(file_path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    def to_text(self, file_path: Path) -> None:
        """Write the key = value format (reads back through from_text)"""
        data = self.to_dict()
        out: List[str] = []
        optimizer = data["gan"].pop("optimizer")
        for section, values in (("gan", data["gan"]), ("optimizer", optimizer),
                                ("mixture", data["mixture"]), ("schedule", data["schedule"]),
                                ("run", data["run"])):
            out.append(f"[{section}]")
            for key, value in values.items():
                out.append(f"{key} = {_format_value(section, key, value)}")
            out.append("")
        Path(file_path).write_text("\n".join(out), encoding="utf-8")


def _format_value(section: str, key: str, value: Any) -> str:
    if value is None:
        return "none"
    if (section, key) in _VECTOR_KEYS:
        return ", ".join(" ".join(repr(float(x)) for x in vec) for vec in value)
    if isinstance(value, list):
        return ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _find_line(loc: Tuple[str, ...], lines: Optional[LineMap]) -> Optional[int]:
    if not lines or not loc:
        return None
    # optimizer keys live in their own text section
    if len(loc) >= 3 and loc[:2] == ("gan", "optimizer"):
        loc = ("optimizer",) + loc[2:]
    for depth in range(min(len(loc), 2), 0, -1):
        if loc[:depth] in lines:
            return lines[loc[:depth]]
    return None


def sections_to_dict(sections: Dict[str, Dict[str, str]], lines: LineMap) -> Dict[str, Any]:
    """
    Convert parsed text sections into the nested mapping ExperimentConfig takes

    Raises:
        ConfigError: On unknown sections or unparsable vectors
    """
    known = {"gan", "optimizer", "mixture", "schedule", "run"}
    data: Dict[str, Any] = {}
    for section, values in sections.items():
        if section not in known:
            raise ConfigError(f"Unknown section [{section}]", line=lines.get((section,)))
        converted: Dict[str, Any] = {}
        for key, raw in values.items():
            if raw.lower() in ("none", "null", ""):
                converted[key] = None
            elif (section, key) in _LIST_KEYS:
                converted[key] = split_list(raw)
            elif (section, key) in _VECTOR_KEYS:
                try:
                    converted[key] = parse_vectors(raw)
                except ValueError as e:
                    raise ConfigError(f"[{section}] {key}: {e}", line=lines[(section, key)]) from e
            else:
                converted[key] = raw
        data[section] = converted

    if "optimizer" in data:
        data.setdefault("gan", {})["optimizer"] = data.pop("optimizer")
    return data


# Default global settings instance
_default_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """
    Get the global settings instance

    Returns:
        Global Settings instance
    """
    global _default_settings
    if _default_settings is None:
        _default_settings = Settings()
    return _default_settings


def set_settings(settings: Settings) -> None:
    global _default_settings
    _default_settings = settings


def reset_settings() -> None:
    """Reset settings to default"""
    global _default_settings
    _default_settings = Settings()
