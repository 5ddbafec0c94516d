"""Parameter spaces: parsing, washing, pruning, checking and feasible sampling."""

from .paramspace import (
    Configuration,
    ParameterSpace,
    check,
    load_space,
    load_space_file,
    prune,
    read_configuration,
    render_configuration,
    wash,
)
from .sampling import repair, sample

__all__ = [
    "Configuration", "ParameterSpace", "check", "load_space", "load_space_file", "prune",
    "read_configuration", "render_configuration", "wash", "repair", "sample",
]
