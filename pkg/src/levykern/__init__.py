"""Numerical checks of two-sided Dirichlet heat kernel and Green function
estimates for subordinate Brownian motions and their jump perturbations.

Modules
-------
bernstein     complete Bernstein families, Phi and its inverse
levy_kernel   jump densities, characteristic exponents, free heat kernel
geometry      test domains with exact boundary distance
bounds        analytic shapes of the two-sided estimates
simulate      Monte Carlo engine for killed paths
verify        ratio-spread reports
cli           command-line front end
"""
from . import bernstein, bounds, geometry, levy_kernel, simulate, verify
from .bernstein import (BernsteinFunction, capital_phi, capital_phi_inv, logstable, mixed,
                        parse_family, phi, relativistic, stable)
from .errors import (ConfigError, ConvergenceError, DomainError, InsufficientSignalError,
                     InversionAccuracyError, LevyKernError, QuadratureError, RegimeError,
                     ScalingFitError)
from .geometry import Domain, annulus, ball, intervals, parse_domain
from .levy_kernel import ProcessSpec, free_kernel, jump_density_j

__version__ = "0.1.0"
