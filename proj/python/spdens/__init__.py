"""Spectral functionals, lattice SPDE simulation and density diagnostics."""

import json as _json
from fractions import Fraction as _Fraction

from . import _spdens
from ._spdens import (
    ConfigError,
    DomainError,
    besov_norm,
    difference_l1,
    fit_exponent,
    gaussian_derivative_l1,
    hermite,
    kde,
    ks_test_normal,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "analytic_exponents",
    "besov_norm",
    "closed_form_s_max",
    "compute_functionals",
    "compute_g",
    "difference_l1",
    "fit_exponent",
    "gaussian_derivative_l1",
    "hermite",
    "kde",
    "ks_test_normal",
    "lattice_variance",
    "simulate",
    "version_info",
]


def _model(model):
    return model if isinstance(model, str) else _json.dumps(model)


def _beta(beta):
    f = _Fraction(beta).limit_denominator(10**6)
    return f.numerator, f.denominator


def _fractions(report):
    exact = report.get("exact")
    if exact:
        report["exact"] = {k: _Fraction(*v) for k, v in exact.items()}
    return report


def version_info():
    return _json.loads(_spdens.version_info())


def analytic_exponents(kind, beta=0):
    """kind: wave_riesz, wave_finite, heat_riesz or heat_finite."""
    return _fractions(_spdens.analytic_exponents(kind, *_beta(beta)))


def closed_form_s_max(kind, beta=0):
    return _Fraction(*_spdens.closed_form_s_max(kind, *_beta(beta)))


def compute_g(model, t):
    """model: dict in the config 'model' schema."""
    return _spdens.compute_g(_model(model), t)


def compute_functionals(model, times):
    return _spdens.compute_functionals(_model(model), list(times))


def simulate(model, N, L, dt, t, replicas, seed=1, threads=1):
    """u(t, 0) for replica seeds seed, seed + 1, ..."""
    return _spdens.simulate(_model(model), N, L, dt, t, replicas, seed, threads)


def lattice_variance(model, N, L, dt, t):
    return _spdens.lattice_variance(_model(model), N, L, dt, t)
