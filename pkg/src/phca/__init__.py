"""Probabilistic hosting capacity analysis by Bayesian optimization.

Modules: ``network`` (feeder model), ``scenario`` (day scenarios),
``distflow`` (power flow), ``risk`` (violation probability and penalized
capacity), ``gp`` and ``acquisition`` (surrogate model), ``solvers``
(BayesOpt, pattern search, grid), ``report`` and ``cli``.
"""

__version__ = "0.1.0"
