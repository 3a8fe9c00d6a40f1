"""hyperlap: a desk-scale calculus for Laplace hyperfunctions.

Contour-based forward/inverse Laplace transforms for hyperfunctions with
unbounded exponential-type support, cutoff (Cech-Dolbeault) representatives,
Cauchy-kernel reconstruction, and operational calculus for constant-
coefficient operators.
"""

__version__ = "0.1.0"
