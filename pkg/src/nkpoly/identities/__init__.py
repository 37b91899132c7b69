"""Identity registry and verification engine."""

from __future__ import annotations

from .core import (
    EXACT_TOL,
    KINDS,
    MODES,
    STATUSES,
    Evaluation,
    IdentityDescriptor,
    IdentityResult,
    Variant,
    VerificationReport,
    XSeries,
    check_identity,
    expand_grid,
    identity_ids,
    list_identities,
    lookup,
    register,
    residual_of,
    run_grid,
    variant_search,
)

__all__ = [
    "EXACT_TOL",
    "KINDS",
    "MODES",
    "STATUSES",
    "Evaluation",
    "IdentityDescriptor",
    "IdentityResult",
    "Variant",
    "VerificationReport",
    "XSeries",
    "check_identity",
    "expand_grid",
    "identity_ids",
    "list_identities",
    "lookup",
    "register",
    "residual_of",
    "run_grid",
    "variant_search",
]
