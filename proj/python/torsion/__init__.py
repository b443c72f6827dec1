"""Spectra, heat traces and zeta-regularized torsion of radial metrics on O(m) over the sphere."""

import json as _json

from ._torsion import (
    BaseProfile,
    Discretization,
    MetricProfile,
    NumericalError,
    Spectrum,
    ValidationError,
    _canonical_config,
    _run,
    canonical,
    fs_base,
    fubini_study,
    heat_fit,
    opcalc,
    pnorm,
    recipe_names,
    spectrum,
    tx_base,
    zeta,
    zeta_prime0,
)


def resolve_config(config=None):
    """Validated configuration with every default filled in."""
    return _json.loads(_canonical_config(_json.dumps(config or {})))


def run(config):
    """Run a recipe; returns (exit_code, summary)."""
    code, summary = _run(_json.dumps(config))
    return code, _json.loads(summary)
