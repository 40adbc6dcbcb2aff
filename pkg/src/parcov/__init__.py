"""Parametric number covariance of chaotic spectra.

Three independent routes to the same statistics:

* Monte Carlo over parametric Gaussian ensembles (:mod:`parcov.ensembles`,
  :mod:`parcov.counting`),
* quantum kicked rotors on the torus (:mod:`parcov.kicked_rotor`),
* theory, both compact closed forms (:mod:`parcov.theory`) and quadrature of
  the exact correlation functions (:mod:`parcov.exact`).
"""

__version__ = "0.1.0"

BETAS = (1, 2, 4)


class ConfigurationError(ValueError):
    """Invalid or inconsistent parameters."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message if achieved is None else f"{message} (achieved error {achieved:.3g})")
        self.achieved = achieved


def check_beta(beta):
    beta = int(beta)
    if beta not in BETAS:
        raise ConfigurationError(f"beta must be one of {BETAS}, got {beta}")
    return beta
