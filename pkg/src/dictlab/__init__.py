"""dictlab: exact and Monte Carlo tooling for k-query dictatorship testing.

The package builds the Hadamard-based accepting predicate P_k (k = 2^m - 1),
the almost-pairwise-independent test distribution D_{k,eps} on its accepting
strings, and the k-query test that samples coordinates from that distribution
and checks the queried values against the predicate. Around that core it
provides exact Fourier machinery for Boolean functions, Efron-Stein
decompositions with Markov-operator checks, correlated Gaussian ensembles
matching the distribution's second moments, and the level schedule that
drives the multi-scale variant of the test.
"""

from dictlab._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
