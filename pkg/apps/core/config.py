"""
Run configuration loading and validation.

A run is fully described by one JSON document. It is validated against
run_config_schema before anything is computed; command-line flags are
applied as overrides and the document is validated again.
"""

import copy
from dataclasses import dataclass
import hashlib
import json
import logging
from pathlib import Path
from typing import Optional

from django.conf import settings
from jsonschema import Draft7Validator, ValidationError, validate

from apps.analysis.quadrature import QuadratureConfig
from apps.estimation.params import FIT_QUADRATURE, FitConfig
from apps.rates.services import rate_model_from_config
from apps.simulation.tables import SimConfig
from idmodds.exceptions import ConfigError
from .schema import run_config_schema

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_DIR = "output"
DEFAULT_FORMATS = ("csv", "json")


def canonical_json(value):
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def validate_document(document):
    """
    Validate a run configuration document.

    Raises:
        ConfigError: naming the offending key path
    """
    try:
        validate(instance=document, schema=run_config_schema, cls=Draft7Validator)
    except ValidationError as e:
        where = "/".join(str(part) for part in e.absolute_path) or "<root>"
        logger.error(f"Invalid run configuration at {where}: {e.message}")
        raise ConfigError(f"{where}: {e.message}") from e


@dataclass(frozen=True)
class RunConfig:
    """A validated run configuration document."""

    document: dict
    source: Optional[Path] = None

    @property
    def config_hash(self):
        """sha256 of the canonical JSON form."""
        return hashlib.sha256(canonical_json(self.document).encode("utf-8")).hexdigest()

    def section(self, name):
        return copy.deepcopy(self.document.get(name, {}))

    def with_override(self, section, key, value):
        """Copy with document[section][key] = value, validated again."""
        if value is None:
            return self
        document = copy.deepcopy(self.document)
        document.setdefault(section, {})[key] = value
        validate_document(document)
        return RunConfig(document, self.source)

    # Built objects

    def rate_model(self):
        return rate_model_from_config(self.document)

    def quadrature(self):
        return QuadratureConfig.from_config(self.document.get("quadrature"))

    def sim_config(self):
        return SimConfig.from_config(self.section("simulation"))

    def fit_config(self, model=None):
        model = model or self.rate_model()
        quadrature = self.quadrature().tightened(FIT_QUADRATURE.rel_tol, FIT_QUADRATURE.abs_tol)
        return FitConfig.from_config(self.section("fit"), model, quadrature)

    @property
    def calibration_target(self):
        return self.document.get("simulation", {}).get("calibrate_to")

    @property
    def dump_ledger(self):
        return bool(self.document.get("simulation", {}).get("dump_ledger", False))

    @property
    def echo_input(self):
        return bool(self.document.get("fit", {}).get("echo_input", False))

    @property
    def output_dir(self):
        return Path(self.document.get("output", {}).get("directory", DEFAULT_OUTPUT_DIR))

    @property
    def formats(self):
        return tuple(self.document.get("output", {}).get("formats", DEFAULT_FORMATS))


def load_run_config(path=None):
    """
    Read and validate a run configuration file.

    Args:
        path (str | Path): JSON file; the bundled published set-up when None

    Returns:
        RunConfig

    Raises:
        ConfigError: on unreadable JSON or schema violations
        FileNotFoundError: if the file does not exist
    """
    path = Path(path) if path is not None else Path(settings.REFERENCE_CONFIG_PATH)
    text = path.read_text(encoding="utf-8")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    validate_document(document)
    config = RunConfig(document, path)
    logger.debug(f"Loaded run configuration {path} ({config.config_hash[:12]})")
    return config
