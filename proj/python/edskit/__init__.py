"""Third-order Euler-Poisson toolkit.

Reports come back as dictionaries with the same keys as the command-line
JSON output.
"""

import json as _json

from ._edskit import (
    ConfigurationError,
    DomainError,
    Error,
    FlowDivergence,
    JetOrderViolation,
    JetPoint,
    Model,
    NonAffineLagrangian,
    ParseError,
    SchemaError,
    SingularDenominator,
    SplitMix64,
    StepTooLarge,
    cli,
    evaluate,
    helmholtz_at,
    invariance_survey,
    load_model,
    load_model_file,
    parse,
    spin,
)
from . import _edskit

__version__ = "0.1.0"


def check_variational(model=None, samples=200, seed=42, tol=1e-8, convention="averaged"):
    """H1..H6 report for a Model, or the builtin spin system when model is None."""
    return _json.loads(_edskit.helmholtz_report(model, samples, seed, tol, convention))


def check_random_lagrangian(q, lagrangian_seed, samples=100, seed=42, tol=1e-8, convention="averaged"):
    """H1..H6 report for the triple of a seeded random affine Lagrangian."""
    return _json.loads(_edskit.random_lagrangian_report(q, lagrangian_seed, samples, seed, tol, convention))


def check_symmetry(rotation=None, boost=None, generator="", model=None, samples=100, seed=42, tol=1e-6, step=1e-3):
    """Multiplier-solve report for a rotation/boost or a generator document."""
    return _json.loads(
        _edskit.symmetry_report(rotation, boost, str(generator), model, samples, seed, tol, step)
    )


__all__ = [
    "ConfigurationError",
    "DomainError",
    "Error",
    "FlowDivergence",
    "JetOrderViolation",
    "JetPoint",
    "Model",
    "NonAffineLagrangian",
    "ParseError",
    "SchemaError",
    "SingularDenominator",
    "SplitMix64",
    "StepTooLarge",
    "check_random_lagrangian",
    "check_symmetry",
    "check_variational",
    "cli",
    "evaluate",
    "helmholtz_at",
    "invariance_survey",
    "load_model",
    "load_model_file",
    "parse",
    "spin",
]
