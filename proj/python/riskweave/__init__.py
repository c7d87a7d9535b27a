"""Decision trees and discrete-time cycle models with verbal explanations.

Structured results are plain dicts with the same fields as the HTTP service.
Errors raise :class:`RiskweaveError`, carrying ``code``, ``detail`` and ``context``.
"""

from ._riskweave import (
    Model,
    RiskweaveError,
    chd_schema_text,
    chi_square_sf,
    ivf_schema_text,
    leaf_confidence,
    load_model,
    synthesize_chd,
    synthesize_ivf,
    train,
    train_cycles,
)

__all__ = [
    "Model",
    "RiskweaveError",
    "chd_schema_text",
    "chi_square_sf",
    "ivf_schema_text",
    "leaf_confidence",
    "load_model",
    "synthesize_chd",
    "synthesize_ivf",
    "train",
    "train_cycles",
]
