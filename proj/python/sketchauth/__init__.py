"""Handcrafted-feature drawing verification (bindings over the C++ core)."""

try:
    from ._sketchauth import *  # noqa: F401,F403  (installed wheel)
    from ._sketchauth import ValidationError, RuntimeFailure
except ImportError:
    from _sketchauth import *  # noqa: F401,F403  (build tree)
    from _sketchauth import ValidationError, RuntimeFailure

__all__ = [
    "RuntimeFailure",
    "ValidationError",
    "calibrate_threshold",
    "canny",
    "compute_metrics",
    "extract_features",
    "generate_corpus",
    "run",
    "wilson_interval",
]
