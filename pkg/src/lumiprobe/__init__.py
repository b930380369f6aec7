"""Spatially-varying indoor lighting estimation toolkit."""

__version__ = "0.1.0"

# Identifies the SH basis/index/cubemap conventions used by every artifact
# (probe meta.json, checkpoints, wire responses, viewer fixtures). Bump only
# on a breaking convention change.
SH_CONVENTION = "lumiprobe-sh-v1"
