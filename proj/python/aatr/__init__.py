"""Volumetric segmentation, material classification and threat detection."""

from ._core import (
    CLASSES,
    AatrError,
    MaterialModel,
    ccl,
    dilate_constrained,
    erode,
    generate_bag,
    match_counts,
    object_stats,
    opening_block,
    prune_small,
    read_bvox,
    segment,
    threshold,
    write_bvox,
)

__all__ = [
    "CLASSES",
    "AatrError",
    "MaterialModel",
    "ccl",
    "dilate_constrained",
    "erode",
    "generate_bag",
    "match_counts",
    "object_stats",
    "opening_block",
    "prune_small",
    "read_bvox",
    "segment",
    "threshold",
    "write_bvox",
]
