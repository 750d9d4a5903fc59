"""Redescription mining by alternately growing decision trees over two descriptor families."""

from .descriptors import (
    BucketSpec,
    Descriptor,
    DescriptorFamily,
    ObjectUniverse,
    StoreError,
    bucketize_numeric,
    load_descriptor_family,
    load_universe,
)
from .expressions import (
    Coefficient,
    Literal,
    Redescription,
    SetExpression,
    Threshold,
    canonicalize,
    complement_jaccard,
    entropy_distance,
    evaluate,
    jaccard,
    parse,
    render,
)
from .miner import ConfigError, InvariantError, MinerConfig, SyntacticBias, run
from .tightening import tighten

__all__ = [
    "BucketSpec",
    "Coefficient",
    "ConfigError",
    "Descriptor",
    "DescriptorFamily",
    "InvariantError",
    "Literal",
    "MinerConfig",
    "ObjectUniverse",
    "Redescription",
    "SetExpression",
    "StoreError",
    "SyntacticBias",
    "Threshold",
    "bucketize_numeric",
    "canonicalize",
    "complement_jaccard",
    "entropy_distance",
    "evaluate",
    "jaccard",
    "load_descriptor_family",
    "load_universe",
    "parse",
    "render",
    "run",
    "tighten",
]

__version__ = "0.1.0"
