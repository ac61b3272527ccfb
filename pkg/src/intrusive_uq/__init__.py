"""Intrusive and non-intrusive uncertainty quantification for hyperbolic conservation laws.

Subpackages: :mod:`random_space` (bases, quadrature), :mod:`closure`
(entropy closures, dual Newton), :mod:`models` (fluxes), :mod:`mesh`,
:mod:`solver` (IPM, One-Shot IPM, adaptivity), :mod:`collocation` and
:mod:`harness` (configs, presets, CLI).
"""

__version__ = "0.1.0"
