"""OPC recipe development pipeline: baseline OPC, RL point placement,
feature labeling, decision trees and recipe emission."""

from ._core import (
    ConfigError,
    Error,
    LayoutClip,
    MissingArtifactError,
    ParseError,
    Pipeline,
    RecipeError,
    ValidationError,
    __version__,
    config_hash,
    desk_config_json,
    format_layout,
    label_clip,
    merge_config,
    parse_layout,
    ratio_table,
    recipe_downstream,
    run_opc,
    synth_suite,
)

__all__ = [
    "ConfigError",
    "Error",
    "LayoutClip",
    "MissingArtifactError",
    "ParseError",
    "Pipeline",
    "RecipeError",
    "ValidationError",
    "__version__",
    "config_hash",
    "desk_config_json",
    "format_layout",
    "label_clip",
    "merge_config",
    "parse_layout",
    "ratio_table",
    "recipe_downstream",
    "run_opc",
    "synth_suite",
]
