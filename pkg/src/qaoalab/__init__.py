"""qaoalab: exact simulation of cost-phase circuits and their classical samplers.

Submodules:

* ``csp`` - truth-table constraint instances, brute-force oracles, file I/O
* ``statevec`` - dense amplitude engine with gates, sampling, post-selection
* ``qaoa`` - alternating-layer states, objective, angle search
* ``counting`` - Fourier counting from matrix elements; multiplicative-error checks
* ``postsel`` - post-selected search, amplification, exact marked-item counting
* ``compiler`` - compilation of {H, T, CZ-phase} circuits into one post-selected
  cost-phase sandwich, with exact equivalence verification
* ``adiabatic`` - interpolating Hamiltonians, PIMC/SQA samplers, rejection
  sampling, Schroedinger evolution
* ``cli`` - batch experiment runner (``qaoalab`` console script)
"""

__version__ = "0.1.0"

from . import adiabatic, compiler, counting, csp, postsel, qaoa, statevec  # noqa: F401
