"""Config-driven scenario runner behind the ``photon-reshape`` command."""

from .config import ScenarioConfig, load_config, parse_document, schema
from .scenarios import RUNNERS, run

__all__ = ["ScenarioConfig", "load_config", "parse_document", "schema", "RUNNERS", "run"]
