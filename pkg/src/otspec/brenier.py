"""Monotone transport maps with evaluable Hessians.

Each constructor returns a map T = grad(Phi) between log-concave measures
together with the Hessian D^2 Phi as a positive-definite matrix oracle.
Four shapes admit exact or quadrature-exact solutions: one-dimensional
(monotone rearrangement), Gaussian to Gaussian (a constant linear map),
products of one-dimensional maps, and rotationally symmetric pairs
(a radial profile from mass balance).

All map objects are pure: evaluation never mutates state, and the radial
interpolation cache is built once at construction and read afterward, so
instances can be shared freely across threads.
"""

import math

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import logsumexp

from .measures import (
    GaussianMeasure,
    LogConcaveMeasure1D,
    ProductMeasure,
    RadialMeasure,
)
from .spd import SpdMatrix, log_eigen_map

__all__ = [
    "TransportMap",
    "brenier_1d",
    "brenier_gaussian",
    "brenier_product",
    "brenier_radial",
    "transport_residual",
    "hessian_spectrum_at",
]

# Evaluation is restricted to source quantile levels inside this band; the
# second derivative of Phi can blow up at support endpoints (1/(1-x) for
# uniform to exponential), and quantile solves lose accuracy there.
_EDGE = 1e-9


class TransportMap:
    """Base for maps T = grad(Phi) with Hessian oracles.

    Subclasses implement ``map_points`` (vectorized T), ``hessian``
    (single-point SpdMatrix), ``log_spectra`` (batched descending
    log-eigenvalues of the Hessian), and the potentials of source and
    target needed by the transport residual.
    """

    kind = "abstract"

    def __init__(self, dim, source, target):
        self.dim = int(dim)
        self.source = source
        self.target = target

    def __call__(self, x):
        return self.map_points(x)

    def map_points(self, x):
        raise NotImplementedError

    def hessian(self, x):
        raise NotImplementedError

    def log_spectra(self, x):
        raise NotImplementedError

    def log_quadratic_forms(self, x, theta):
        """log(theta' H(x) theta) for a fixed unit direction, batched."""
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(kind={self.kind!r}, dim={self.dim})"


class Map1D(TransportMap):
    """Monotone rearrangement T = G^{-1} o F between 1D measures."""

    kind = "1d"

    def __init__(self, source, target):
        super().__init__(1, source, target)

    def map_points(self, x):
        u = np.clip(self.source.cdf(np.asarray(x, dtype=float)), _EDGE, 1.0 - _EDGE)
        return self.target.quantile(u)

    def log_second_derivative(self, x):
        """log Phi'' from the one-dimensional transport equation.

        The density quotient f(x) / g(T(x)) is the same quantity written
        multiplicatively; tests use a finite-difference slope of T as the
        independent check.
        """
        x = np.asarray(x, dtype=float)
        t = self.map_points(x)
        return -self.source.potential(x) + self.target.potential(t)

    def second_derivative(self, x):
        return np.exp(self.log_second_derivative(x))

    def hessian(self, x):
        val = float(self.second_derivative(np.asarray(x, dtype=float).reshape(())))
        return SpdMatrix(np.array([[val]]))

    def log_spectra(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.ndim == 2 and x.shape[1] == 1:
            x = x[:, 0]
        return self.log_second_derivative(x)[:, None]

    def log_quadratic_forms(self, x, theta):
        # the normalized form theta H theta / theta.theta is Phi'' itself
        return self.log_spectra(x)[:, 0]


class LinearMap(TransportMap):
    """T(x) = A (x - m1) + m2 between Gaussians; constant Hessian A."""

    kind = "gaussian-linear"

    def __init__(self, source, target, matrix):
        super().__init__(source.dim, source, target)
        self.matrix = matrix  # SpdMatrix
        self._log_spec = np.sort(np.log(matrix.eigenvalues))[::-1]

    def map_points(self, x):
        x = np.asarray(x, dtype=float)
        return (x - self.source.mean) @ self.matrix.values + self.target.mean

    def hessian(self, x):
        return self.matrix

    def log_spectra(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.broadcast_to(self._log_spec, (x.shape[0], self.dim)).copy()

    def log_quadratic_forms(self, x, theta):
        theta = np.asarray(theta, dtype=float).ravel()
        q = float(theta @ self.matrix.values @ theta) / float(theta @ theta)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.full(x.shape[0], math.log(q))


class ProductMap(TransportMap):
    """Coordinatewise action of one-dimensional maps."""

    kind = "product"

    def __init__(self, factor_maps):
        factor_maps = list(factor_maps)
        source = ProductMeasure([m.source for m in factor_maps])
        target = ProductMeasure([m.target for m in factor_maps])
        super().__init__(len(factor_maps), source, target)
        self.factors = factor_maps

    def map_points(self, x):
        x = np.asarray(x, dtype=float)
        cols = [f.map_points(x[..., i]) for i, f in enumerate(self.factors)]
        return np.stack(cols, axis=-1)

    def _factor_log_d2(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        cols = [
            np.atleast_1d(f.log_second_derivative(x[:, i]))
            for i, f in enumerate(self.factors)
        ]
        return np.stack(cols, axis=1)

    def hessian(self, x):
        logs = self._factor_log_d2(np.asarray(x, dtype=float).reshape(1, -1))[0]
        return SpdMatrix(np.diag(np.exp(logs)))

    def log_spectra(self, x):
        return -np.sort(-self._factor_log_d2(x), axis=1)

    def log_quadratic_forms(self, x, theta):
        theta = np.asarray(theta, dtype=float).ravel()
        logs = self._factor_log_d2(x)
        with np.errstate(divide="ignore"):
            weights = 2.0 * np.log(np.abs(theta)) - math.log(float(theta @ theta))
        return logsumexp(logs + weights, axis=1)


class RadialMap(TransportMap):
    """Map between rotation-invariant measures through a radial profile.

    The profile solves radial_cdf_source(r) = radial_cdf_target(phi(r)).
    The Hessian at x with r = |x| has eigenvalue phi'(r) on the radial
    line and phi(r)/r on the tangent space (multiplicity n - 1); at the
    origin the tangential value degenerates to phi'(0).
    """

    kind = "radial"

    _SPLINE_NODES = 10_000

    def __init__(self, source, target):
        super().__init__(source.dim, source, target)
        # the profile is regular at the origin (phi ~ phi'(0) r), so only the
        # outer quantile edge needs clipping
        u = np.linspace(0.0, 1.0 - _EDGE, self._SPLINE_NODES)
        r_nodes = source.radial_quantile(u)
        phi_nodes = target.radial_quantile(u)
        self._r_hi = float(r_nodes[-1])
        self._spline = PchipInterpolator(r_nodes, phi_nodes, extrapolate=False)

    def profile(self, r):
        """phi(r) from exact mass balance (safeguarded quantile solve)."""
        r = np.asarray(r, dtype=float)
        u = np.clip(self.source.radial_cdf(r), 0.0, 1.0 - _EDGE)
        return self.target.radial_quantile(u)

    def profile_fast(self, r):
        """Monotone interpolation of the profile for sampling throughput."""
        r = np.clip(np.asarray(r, dtype=float), 0.0, self._r_hi)
        return self._spline(r)

    def profile_d1(self, r, phi=None):
        """phi'(r) from differentiating the mass balance."""
        r = np.asarray(r, dtype=float)
        if phi is None:
            phi = self.profile(r)
        return self.source.radial_pdf(r) / self.target.radial_pdf(phi)

    def _eigen_pair(self, r, fast=False):
        """(radial eigenvalue, tangential eigenvalue) at radius r."""
        r = np.asarray(r, dtype=float)
        tiny = 1e-7 * max(self._r_hi, 1.0)
        r_safe = np.maximum(r, tiny)
        phi = self.profile_fast(r_safe) if fast else self.profile(r_safe)
        lam_tan = phi / r_safe
        lam_rad = self.source.radial_pdf(r_safe) / self.target.radial_pdf(phi)
        return lam_rad, lam_tan

    def map_points(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        tiny = 1e-7 * max(self._r_hi, 1.0)
        r_safe = np.maximum(r, tiny)
        scale = self.profile(r_safe) / r_safe
        return x * np.expand_dims(scale, -1)

    def hessian(self, x):
        x = np.asarray(x, dtype=float).ravel()
        r = float(np.linalg.norm(x))
        lam_rad, lam_tan = self._eigen_pair(np.array([r]))
        lam_rad, lam_tan = float(lam_rad[0]), float(lam_tan[0])
        if r < 1e-7 * max(self._r_hi, 1.0):
            return SpdMatrix(lam_rad * np.eye(self.dim))
        u = x / r
        proj = np.outer(u, u)
        h = lam_rad * proj + lam_tan * (np.eye(self.dim) - proj)
        return SpdMatrix(0.5 * (h + h.T))

    def log_spectra(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        lam_rad, lam_tan = self._eigen_pair(r, fast=True)
        spectra = np.empty((x.shape[0], self.dim))
        spectra[:, 0] = np.log(lam_rad)
        spectra[:, 1:] = np.log(lam_tan)[:, None]
        return -np.sort(-spectra, axis=1)

    def log_quadratic_forms(self, x, theta):
        theta = np.asarray(theta, dtype=float).ravel()
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        lam_rad, lam_tan = self._eigen_pair(r, fast=True)
        tiny = 1e-7 * max(self._r_hi, 1.0)
        r_safe = np.maximum(r, tiny)
        cos2 = (x @ theta) ** 2 / (r_safe**2 * float(theta @ theta))
        return np.log(lam_rad * cos2 + lam_tan * (1.0 - cos2))


def brenier_1d(mu, nu):
    """Monotone rearrangement between one-dimensional measures."""
    for m in (mu, nu):
        if not isinstance(m, LogConcaveMeasure1D):
            raise TypeError(f"{m!r} is not a one-dimensional log-concave measure")
    return Map1D(mu, nu)


def brenier_gaussian(mu, nu):
    """Closed-form linear map between Gaussians.

    A = S1^{-1/2} (S1^{1/2} S2 S1^{1/2})^{1/2} S1^{-1/2} is the unique
    positive-definite matrix with A S1 A = S2.
    """
    if not isinstance(mu, GaussianMeasure) or not isinstance(nu, GaussianMeasure):
        raise TypeError("brenier_gaussian expects Gaussian measures")
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    s1_half, s1_inv_half = mu.covariance.sqrt_factors()
    middle = SpdMatrix(s1_half @ nu.covariance.values @ s1_half)
    mid_half, _ = middle.sqrt_factors()
    a = s1_inv_half @ mid_half @ s1_inv_half
    return LinearMap(mu, nu, SpdMatrix(0.5 * (a + a.T)))


def brenier_product(factor_maps):
    """Coordinatewise product of one-dimensional maps."""
    factor_maps = list(factor_maps)
    if not factor_maps:
        raise ValueError("product map needs at least one factor")
    for f in factor_maps:
        if not isinstance(f, Map1D):
            raise TypeError(f"{f!r} is not a one-dimensional transport map")
    return ProductMap(factor_maps)


def brenier_radial(mu, nu):
    """Radial transport between rotation-invariant measures, n >= 2."""
    if not isinstance(mu, RadialMeasure) or not isinstance(nu, RadialMeasure):
        raise TypeError("brenier_radial expects radial measures")
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if mu.dim < 2:
        raise ValueError("radial transport needs dimension at least 2")
    return RadialMap(mu, nu)


def _source_potential(tm, x):
    if tm.kind == "1d":
        return float(tm.source.potential(np.asarray(x, dtype=float).reshape(())))
    if tm.kind == "radial":
        r = float(np.linalg.norm(np.asarray(x, dtype=float)))
        return float(tm.source.radial_potential(r))
    return float(tm.source.potential(np.asarray(x, dtype=float)))


def _target_potential(tm, y):
    if tm.kind == "1d":
        return float(tm.target.potential(np.asarray(y, dtype=float).reshape(())))
    if tm.kind == "radial":
        r = float(np.linalg.norm(np.asarray(y, dtype=float)))
        return float(tm.target.radial_potential(r))
    return float(tm.target.potential(np.asarray(y, dtype=float)))


def transport_residual(tm, x):
    """V(x) + log det D^2 Phi(x) - W(T(x)); zero when mass is conserved."""
    x = np.asarray(x, dtype=float)
    v = _source_potential(tm, x)
    if not np.isfinite(v):
        raise ValueError(f"point {x!r} is outside the source support")
    log_det = float(np.sum(np.log(tm.hessian(x).eigenvalues)))
    t = tm.map_points(x if tm.kind != "1d" else x.reshape(()))
    w = _target_potential(tm, t)
    return v + log_det - w


def hessian_spectrum_at(tm, x):
    """Descending log-eigenvalues of the Hessian at a point."""
    return log_eigen_map(tm.hessian(x))
