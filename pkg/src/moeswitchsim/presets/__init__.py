"""Named experiment presets shipped with the package.

Each preset is a config file in this directory; the name is the file
stem. ``preset_spec`` parses and validates one into an ExperimentSpec,
so CLI invocations and tests share identical geometry.
"""

from __future__ import annotations

from importlib import resources
from typing import List

from ..config import ConfigError, ExperimentSpec, parse_config


def list_presets() -> List[str]:
    names = []
    for entry in resources.files(__name__).iterdir():
        if entry.name.endswith(".cfg"):
            names.append(entry.name[: -len(".cfg")])
    return sorted(names)


def preset_text(name: str) -> str:
    ref = resources.files(__name__).joinpath(f"{name}.cfg")
    if not ref.is_file():
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(list_presets())}"
        )
    return ref.read_text()


def preset_spec(name: str) -> ExperimentSpec:
    return parse_config(preset_text(name))
