"""Exact piecewise-linear path transforms and Monte Carlo checks of identities in law.

Modules
-------
pathkit     exact algebra of continuous piecewise-linear paths
transforms  running-extremum transforms (Pitman, M_x, N, Q, S, inversion) and
            the exponential functionals behind their smooth approximations
samplers    seeded Brownian and three-dimensional Bessel paths and bridges
statlab     two-sample tests and closed-form reference probabilities
scenarios   registered verification plans and their JSON reports
selftest    deterministic identity suite on random paths
cli         command-line front end (``python3 -m pathlaw``)
"""

from . import errors, pathkit, samplers, scenarios, statlab, transforms
from .pathkit import PLPath, make_path
from .samplers import Seed

__version__ = "0.1.0"

__all__ = [
    "errors",
    "pathkit",
    "samplers",
    "scenarios",
    "statlab",
    "transforms",
    "PLPath",
    "make_path",
    "Seed",
    "__version__",
]
