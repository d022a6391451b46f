"""Spectrum allocation for integrated access and backhaul networks."""

from ._core import (
    Allocation,
    CapacityError,
    Config,
    ConfigError,
    Env,
    Error,
    InfeasibleAllocation,
    ShapeError,
    action_space_size,
    decode_action,
    encode_action,
    evaluate,
    fixed_orthogonal,
    full_reuse,
    improvement_check,
    load_config,
    parse_config,
    train,
    validate_allocation,
)

__all__ = [
    "Allocation",
    "CapacityError",
    "Config",
    "ConfigError",
    "Env",
    "Error",
    "InfeasibleAllocation",
    "ShapeError",
    "action_space_size",
    "decode_action",
    "encode_action",
    "evaluate",
    "fixed_orthogonal",
    "full_reuse",
    "improvement_check",
    "load_config",
    "parse_config",
    "train",
    "validate_allocation",
]
