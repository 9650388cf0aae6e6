"""Spectral geometry of optimal-transport Hessians.

Numerical toolkit for the affine-invariant SPD geometry, closed-form and
entropic Brenier maps between log-concave measures, the associated
diffusion-operator calculus, and Monte Carlo / quadrature experiments
probing variance bounds and spectral-gap inequalities for the Hessian
log-spectrum.
"""

__version__ = "0.1.0"
