"""Concentration experiments for the map-Hessian log-spectrum.

Quadrature and Monte Carlo estimators of Var[log lambda_i], Poincare
ratios for Lipschitz functions of the sorted log-spectrum, of single log
quadratic forms, and of matrix functionals of the Hessian itself, plus
exponential-moment checks and the curvature floor of regularized pairs.

Statistical conventions fixed across the module, so reports reproduce
bit for bit:

* Monte Carlo draws are generated in 50 index blocks with counter-derived
  RNG streams keyed (seed, block); generation could run per block in
  parallel without changing a single draw.
* Moments are numpy pairwise sums in index order.
* Standard errors are delete-one-block jackknife over the same 50 blocks.
* Variance means the population variance of the weighted sample; no
  Bessel correction, matching the quadrature estimators exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .brenier import (
    _EDGE as _MAP_EDGE,
    brenier_1d,
    brenier_gaussian,
    brenier_product,
    brenier_radial,
)
from .entropic import entropic_map
from .measures import (
    GaussianMeasure,
    make_catalog_measure,
    make_radial_measure,
    regularize,
)
from .spd import random_spd

__all__ = [
    "SpectralSampleSet",
    "VarianceReport",
    "RatioReport",
    "BankFunction",
    "Bank1DFunction",
    "MatrixBankFunction",
    "function_bank",
    "function_bank_1d",
    "matrix_function_bank",
    "spectral_samples",
    "entropic_spectral_samples",
    "variance_report",
    "eigen_log_variance_quadrature_1d",
    "eigen_log_variance_mc",
    "poincare_ratio",
    "quadform_poincare",
    "matrix_poincare",
    "exp_concentration",
    "exp_concentration_sweep",
    "caffarelli_floor_check",
    "default_experiments",
    "default_directions",
]

_BLOCKS = 50
_VARIANCE_BOUND = 4.0


# --------------------------------------------------------------- containers


@dataclass(frozen=True)
class SpectralSampleSet:
    """Batch of spectral observations of one transport map.

    ``spectra`` rows are descending log-eigenvalues of the map Hessian at
    the corresponding point.  ``weights`` are all ones for Monte Carlo
    draws and quadrature weights otherwise.  ``quadform_logs`` column k
    holds log of the quadratic form along ``directions[k]``.  ``flagged``
    counts degenerate (non positive definite) estimates that were
    excluded; ``skipped`` counts points discarded before estimation, for
    grid estimators whose stencil would leave the domain.
    """

    points: np.ndarray
    spectra: np.ndarray
    weights: np.ndarray
    directions: np.ndarray | None = None
    quadform_logs: np.ndarray | None = None
    hessians: np.ndarray | None = None
    flagged: int = 0
    skipped: int = 0
    approximate: bool = False
    label: str = ""

    def __post_init__(self):
        if not np.all(np.isfinite(self.spectra)):
            raise ValueError("spectra must be finite")
        if np.any(self.weights < 0.0):
            raise ValueError("weights must be nonnegative")
        if self.spectra.shape[0] != self.weights.shape[0]:
            raise ValueError("spectra and weights lengths disagree")
        if (self.quadform_logs is None) != (self.directions is None):
            raise ValueError("quadform logs and directions come together")

    @property
    def count(self):
        return int(self.spectra.shape[0])

    @property
    def dim(self):
        return int(self.spectra.shape[1])

    def __repr__(self):
        tag = ", approximate" if self.approximate else ""
        return (
            f"SpectralSampleSet({self.label or 'unlabeled'}, n={self.count}, "
            f"dim={self.dim}, flagged={self.flagged}{tag})"
        )


@dataclass(frozen=True)
class VarianceReport:
    """Per-index variance of the log-spectrum with statistical context."""

    variances: np.ndarray
    standard_errors: np.ndarray
    sample_count: int
    flagged: int
    truncation: float = 0.0
    approximate: bool = False
    label: str = ""

    def __post_init__(self):
        if np.any(self.variances < 0.0):
            raise ValueError("variances must be nonnegative")
        if np.any(self.standard_errors < 0.0):
            raise ValueError("standard errors must be nonnegative")

    @property
    def bound_margin(self):
        return _VARIANCE_BOUND - self.variances

    @property
    def max_variance(self):
        return float(np.max(self.variances))

    def __repr__(self):
        tag = ", approximate" if self.approximate else ""
        return (
            f"VarianceReport({self.label or 'unlabeled'}, "
            f"max_var={self.max_variance:.6g}, n={self.sample_count}{tag})"
        )


@dataclass(frozen=True)
class RatioReport:
    """A variance-over-energy ratio with its jackknife standard error.

    ``violation_candidate`` marks the degenerate case of zero denominator
    with nonzero numerator; callers decide what to do with it.
    """

    value: float
    standard_error: float
    numerator: float
    denominator: float
    sample_count: int
    violation_candidate: bool = False

    def within(self, bound, sigmas=3.0):
        """bound check with the statistical tolerance folded in."""
        if self.violation_candidate:
            return False
        return self.value <= bound + sigmas * self.standard_error


# ------------------------------------------------------------ test functions


@dataclass(frozen=True)
class BankFunction:
    """Lipschitz function on R^n with a pointwise squared-gradient oracle.

    ``grad_sq`` is exact almost everywhere (ties in max have measure
    zero), so Poincare denominators carry no differentiation bias.
    """

    name: str
    value: object
    grad_sq: object


@dataclass(frozen=True)
class Bank1DFunction:
    name: str
    value: object
    slope_sq: object


@dataclass(frozen=True)
class MatrixBankFunction:
    """Functional of an SPD matrix with an upper-gradient oracle.

    ``upper_grad_sq`` bounds the squared metric slope pointwise; for the
    bank built here the bounds are the Lipschitz constants of the
    spectral functionals, all at most one.
    """

    name: str
    value: object
    upper_grad_sq: object


def function_bank(dim, anchor=None):
    """Fixed Lipschitz bank on R^dim: coordinates, mean, max, log-sum-exp
    at temperature one, and distance to an anchor point (default origin).
    """
    dim = int(dim)
    if dim < 1:
        raise ValueError("bank dimension must be at least 1")
    anchor = np.zeros(dim) if anchor is None else np.asarray(anchor, float).ravel()
    if anchor.size != dim:
        raise ValueError("anchor dimension disagrees with the bank")
    out = []
    for i in range(dim):
        out.append(
            BankFunction(
                name=f"coordinate[{i}]",
                value=lambda x, i=i: x[:, i],
                grad_sq=lambda x, i=i: np.ones(x.shape[0]),
            )
        )
    out.append(
        BankFunction(
            name="mean",
            value=lambda x: np.mean(x, axis=1),
            grad_sq=lambda x: np.full(x.shape[0], 1.0 / x.shape[1]),
        )
    )
    out.append(
        BankFunction(
            name="max",
            value=lambda x: np.max(x, axis=1),
            grad_sq=lambda x: np.ones(x.shape[0]),
        )
    )

    def _lse(x):
        m = np.max(x, axis=1, keepdims=True)
        return (m + np.log(np.sum(np.exp(x - m), axis=1, keepdims=True)))[:, 0]

    def _lse_grad_sq(x):
        m = np.max(x, axis=1, keepdims=True)
        p = np.exp(x - m)
        p /= np.sum(p, axis=1, keepdims=True)
        return np.sum(p * p, axis=1)

    out.append(BankFunction(name="log-sum-exp", value=_lse, grad_sq=_lse_grad_sq))
    out.append(
        BankFunction(
            name="distance-to-anchor",
            value=lambda x: np.linalg.norm(x - anchor, axis=1),
            grad_sq=lambda x: np.ones(x.shape[0]),
        )
    )
    return out


def function_bank_1d():
    """1-Lipschitz bank on the real line with exact slopes."""
    return [
        Bank1DFunction(
            name="identity",
            value=lambda y: y,
            slope_sq=lambda y: np.ones_like(y),
        ),
        Bank1DFunction(
            name="clamp[-1,1]",
            value=lambda y: np.clip(y, -1.0, 1.0),
            slope_sq=lambda y: (np.abs(y) < 1.0).astype(float),
        ),
        Bank1DFunction(
            name="tanh",
            value=np.tanh,
            slope_sq=lambda y: (1.0 - np.tanh(y) ** 2) ** 2,
        ),
    ]


def _sorted_log_eigs(h):
    w = np.linalg.eigvalsh(h)
    if np.any(w <= 0.0):
        raise ValueError("matrix bank needs positive definite samples")
    return np.log(w)[..., ::-1]


def matrix_function_bank(dim, directions=None, spectrum_bank=None):
    """Lipschitz functionals of SPD matrices with unit upper gradients.

    Contains log quadratic forms along the given directions, the metric
    distance to the identity, and every spectrum-bank function composed
    with the sorted log-eigenvalue map, whose metric slope is bounded by
    the Euclidean slope of the outer function at the spectrum.
    """
    dim = int(dim)
    directions = default_directions(dim) if directions is None else directions
    out = []
    for k, v in enumerate(np.atleast_2d(np.asarray(directions, float))):
        v = v / np.linalg.norm(v)
        out.append(
            MatrixBankFunction(
                name=f"log-quadform[{k}]",
                value=lambda h, v=v: np.log(np.einsum("mij,i,j->m", h, v, v)),
                upper_grad_sq=lambda h, v=v: np.ones(h.shape[0]),
            )
        )
    out.append(
        MatrixBankFunction(
            name="distance-to-identity",
            value=lambda h: np.linalg.norm(np.log(np.linalg.eigvalsh(h)), axis=1),
            upper_grad_sq=lambda h: np.ones(h.shape[0]),
        )
    )
    for f in spectrum_bank if spectrum_bank is not None else function_bank(dim):
        out.append(
            MatrixBankFunction(
                name=f"spectral:{f.name}",
                value=lambda h, f=f: f.value(_sorted_log_eigs(h)),
                upper_grad_sq=lambda h, f=f: f.grad_sq(_sorted_log_eigs(h)),
            )
        )
    return out


def default_directions(dim):
    """First basis vector and the normalized diagonal."""
    dim = int(dim)
    e1 = np.zeros(dim)
    e1[0] = 1.0
    if dim == 1:
        return np.array([e1])
    return np.stack([e1, np.full(dim, 1.0 / math.sqrt(dim))])


# ----------------------------------------------------------------- sampling


def _block_sizes(n):
    base, extra = divmod(int(n), _BLOCKS)
    return [base + (1 if b < extra else 0) for b in range(_BLOCKS)]


def spectral_samples(
    tm, n_samples, seed, directions=None, keep_hessians=False, label=None
):
    """Monte Carlo spectral observations of an analytic transport map."""
    n_samples = int(n_samples)
    if n_samples < _BLOCKS:
        raise ValueError(f"need at least {_BLOCKS} samples, got {n_samples}")
    chunks = []
    for b, size in enumerate(_block_sizes(n_samples)):
        if size:
            chunks.append(tm.source.sample(rng.stream(seed, b), size=size))
    pts = np.concatenate(chunks, axis=0)
    if pts.ndim == 1:
        pts = pts[:, None]
    spectra = tm.log_spectra(pts)
    qlogs = None
    if directions is not None:
        directions = np.atleast_2d(np.asarray(directions, float))
        qlogs = np.stack(
            [tm.log_quadratic_forms(pts, v) for v in directions], axis=1
        )
    hess = None
    if keep_hessians:
        hess = np.stack([tm.hessian(p).values for p in pts])
    return SpectralSampleSet(
        points=pts,
        spectra=spectra,
        weights=np.ones(pts.shape[0]),
        directions=directions,
        quadform_logs=qlogs,
        hessians=hess,
        label=label or f"{tm.kind}:{tm.source.name}->{tm.target.name}",
    )


def entropic_spectral_samples(
    plan, measure, n_samples, seed, h=None, directions=None, label=None
):
    """Spectral observations from a grid plan's barycentric map.

    Draws from ``measure``, drops points whose difference stencil would
    leave the source box (``skipped``), estimates the Hessian by the
    symmetrized central-difference Jacobian in one batched evaluation,
    and excludes non positive definite estimates (``flagged``).  The
    resulting set is marked approximate.
    """
    n_samples = int(n_samples)
    if n_samples < _BLOCKS:
        raise ValueError(f"need at least {_BLOCKS} samples, got {n_samples}")
    if h is None:
        h = 2.0 * max(plan.source.spacing)
    h = float(h)
    if h <= 0.0:
        raise ValueError("step must be positive")
    chunks = [
        measure.sample(rng.stream(seed, b), size=size)
        for b, size in enumerate(_block_sizes(n_samples))
        if size
    ]
    pts = np.concatenate(chunks, axis=0)
    (x0, x1), (y0, y1) = plan.source.box
    inside = (
        (pts[:, 0] >= x0 + 2.0 * h)
        & (pts[:, 0] <= x1 - 2.0 * h)
        & (pts[:, 1] >= y0 + 2.0 * h)
        & (pts[:, 1] <= y1 - 2.0 * h)
    )
    skipped = int(np.sum(~inside))
    pts = pts[inside]
    offsets = np.array([[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]])
    stencil = (pts[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
    vals = entropic_map(plan, stencil).reshape(-1, 4, 2)
    jac = np.empty((pts.shape[0], 2, 2))
    jac[:, :, 0] = (vals[:, 0] - vals[:, 1]) / (2.0 * h)
    jac[:, :, 1] = (vals[:, 2] - vals[:, 3]) / (2.0 * h)
    sym = 0.5 * (jac + np.swapaxes(jac, 1, 2))
    eigs = np.linalg.eigvalsh(sym)
    keep = eigs[:, 0] > 0.0
    flagged = int(np.sum(~keep))
    pts, sym, eigs = pts[keep], sym[keep], eigs[keep]
    qlogs = None
    if directions is not None:
        directions = np.atleast_2d(np.asarray(directions, float))
        directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
        qlogs = np.log(np.einsum("mij,ki,kj->mk", sym, directions, directions))
    return SpectralSampleSet(
        points=pts,
        spectra=np.log(eigs)[:, ::-1],
        weights=np.ones(pts.shape[0]),
        directions=directions,
        quadform_logs=qlogs,
        hessians=sym,
        flagged=flagged,
        skipped=skipped,
        approximate=True,
        label=label or "entropic-grid",
    )


# ---------------------------------------------------------------- jackknife


def _block_index_sets(n):
    return np.array_split(np.arange(int(n)), _BLOCKS)


def _jackknife_se(theta_blocks):
    """Delete-one-block jackknife standard error along axis 0."""
    theta_blocks = np.asarray(theta_blocks, float)
    b = theta_blocks.shape[0]
    center = np.mean(theta_blocks, axis=0)
    dev = theta_blocks - center
    return np.sqrt((b - 1.0) / b * np.sum(dev * dev, axis=0))


def _block_partials(values, weights, n):
    """Per-block (sum w, sum w v, sum w v^2) triples for delete-one stats."""
    parts = []
    for idx in _block_index_sets(n):
        w = weights[idx]
        v = values[idx]
        parts.append(
            (float(np.sum(w)), np.sum(w * v, axis=0), np.sum(w * v * v, axis=0))
        )
    return parts


def _variance_from_sums(s0, s1, s2):
    mean = s1 / s0
    return np.maximum(s2 / s0 - mean * mean, 0.0)


# ---------------------------------------------------------------- variances


def variance_report(samples):
    """Per-index variance of the log-spectrum with jackknife errors."""
    if samples.count == 0:
        raise ValueError("sample set is empty (all draws flagged or skipped)")
    v = samples.spectra
    w = samples.weights
    parts = _block_partials(v, w[:, None] if v.ndim == 2 else w, samples.count)
    t0 = sum(p[0] for p in parts)
    t1 = sum(p[1] for p in parts)
    t2 = sum(p[2] for p in parts)
    var = _variance_from_sums(t0, t1, t2)
    thetas = [
        _variance_from_sums(t0 - p0, t1 - p1, t2 - p2)
        for p0, p1, p2 in parts
        if t0 - p0 > 0.0
    ]
    se = _jackknife_se(thetas) if len(thetas) == _BLOCKS else np.zeros_like(var)
    return VarianceReport(
        variances=var,
        standard_errors=se,
        sample_count=samples.count,
        flagged=samples.flagged,
        approximate=samples.approximate,
        label=samples.label,
    )


def eigen_log_variance_mc(tm, n_samples, seed, label=None):
    """Monte Carlo Var[log lambda_i] for an analytic map, per index."""
    n_samples = int(n_samples)
    if n_samples < 1000:
        raise ValueError("Monte Carlo variance needs at least 1000 samples")
    return variance_report(spectral_samples(tm, n_samples, seed, label=label))


def _panel_nodes(nodes):
    """Dyadic panels of the trusted quantile window, with GL nodes on each.

    Panels shrink geometrically into both endpoints down to the map
    evaluation clip, so integrable log blowups of the integrand are
    graded away; beyond the clip the maps saturate and report no
    information, so that tail mass is what the truncation budget
    charges for.
    """
    nodes = int(nodes)
    if nodes < 32:
        raise ValueError("quadrature needs at least 32 nodes")
    edges = [_MAP_EDGE] + [2.0**-j for j in range(29, 0, -1)]
    degree = max(4, nodes // (2 * (len(edges) - 1)))
    z, w = np.polynomial.legendre.leggauss(degree)
    us, ws = [], []
    for a, b in zip(edges, edges[1:]):
        for lo, hi in ((a, b), (1.0 - b, 1.0 - a)):
            us.append(0.5 * (hi + lo) + 0.5 * (hi - lo) * z)
            ws.append(0.5 * (hi - lo) * w)
    u = np.concatenate(us)
    order = np.argsort(u)
    return u[order], np.concatenate(ws)[order], 2.0 * _MAP_EDGE


def eigen_log_variance_quadrature_1d(tm, nodes=2048, label=None):
    """Deterministic Var[log Phi''(X)] in the quantile variable.

    Writes X = F^{-1}(U) with U uniform, so the variance is an integral
    over (0,1); composite Gauss-Legendre on dyadic panels handles the
    catalog's integrable endpoint blowups.  The report's truncation
    field bounds the ignored tail contribution by tail mass times the
    squared observed log-range, and any non-finite node is dropped into
    the same budget.
    """
    if tm.dim != 1:
        raise ValueError("quadrature variance is for one-dimensional maps")
    u, w, tail = _panel_nodes(nodes)
    x = tm.source.quantile(u)
    vals = tm.log_second_derivative(x)
    good = np.isfinite(vals)
    dropped = float(np.sum(w[~good]))
    vals, w, x = vals[good], w[good], x[good]
    log_range = float(np.max(vals) - np.min(vals)) if vals.size else 0.0
    truncation = (tail + dropped) * log_range**2
    samples = SpectralSampleSet(
        points=x[:, None],
        spectra=vals[:, None],
        weights=w,
        flagged=int(np.sum(~good)),
        label=label or f"quadrature:{tm.source.name}->{tm.target.name}",
    )
    base = variance_report(samples)
    return VarianceReport(
        variances=base.variances,
        standard_errors=np.zeros(1),
        sample_count=samples.count,
        flagged=samples.flagged,
        truncation=truncation,
        label=samples.label,
    )


# ------------------------------------------------------------- ratio checks


def _ratio_report(values, grad_sq, weights, count):
    if count == 0:
        raise ValueError("sample set is empty (all draws flagged or skipped)")
    parts_v = _block_partials(values, weights, count)
    parts_g = [
        float(np.sum(weights[idx] * grad_sq[idx])) for idx in _block_index_sets(count)
    ]
    t0 = sum(p[0] for p in parts_v)
    t1 = sum(p[1] for p in parts_v)
    t2 = sum(p[2] for p in parts_v)
    tg = sum(parts_g)
    num = float(_variance_from_sums(t0, t1, t2))
    den = 4.0 * tg / t0
    scale = max(num, float(t2 / t0), 1e-300)
    if den <= 0.0:
        degenerate = num <= 1e-14 * scale
        return RatioReport(
            value=0.0 if degenerate else math.inf,
            standard_error=0.0,
            numerator=num,
            denominator=den,
            sample_count=count,
            violation_candidate=not degenerate,
        )
    thetas = []
    for (p0, p1, p2), pg in zip(parts_v, parts_g):
        r0 = t0 - p0
        rg = tg - pg
        if r0 <= 0.0 or rg <= 0.0:
            continue
        thetas.append(
            float(_variance_from_sums(r0, t1 - p1, t2 - p2)) / (4.0 * rg / r0)
        )
    se = float(_jackknife_se(thetas)) if len(thetas) == _BLOCKS else 0.0
    return RatioReport(
        value=num / den,
        standard_error=se,
        numerator=num,
        denominator=den,
        sample_count=count,
    )


def poincare_ratio(samples, f):
    """Var[f(Lambda(X))] over 4 E|grad f|^2(Lambda(X)) with jackknife error."""
    values = np.asarray(f.value(samples.spectra), float)
    grad_sq = np.asarray(f.grad_sq(samples.spectra), float)
    return _ratio_report(values, grad_sq, samples.weights, samples.count)


def quadform_poincare(samples, v, f):
    """One-dimensional ratio for Y = log quadratic form along v."""
    if samples.quadform_logs is None:
        raise ValueError("sample set carries no quadratic-form observations")
    v = np.asarray(v, float).ravel()
    v = v / np.linalg.norm(v)
    configured = samples.directions / np.linalg.norm(
        samples.directions, axis=1, keepdims=True
    )
    hits = np.where(np.all(np.abs(configured - v) < 1e-12, axis=1))[0]
    if hits.size == 0:
        raise ValueError("direction is not among the configured directions")
    y = samples.quadform_logs[:, hits[0]]
    values = np.asarray(f.value(y), float)
    slope_sq = np.asarray(f.slope_sq(y), float)
    return _ratio_report(values, slope_sq, samples.weights, samples.count)


def matrix_poincare(samples, f):
    """Ratio for a matrix functional on the Hessian-valued pushforward."""
    if samples.hessians is None:
        raise ValueError("sample set carries no Hessian matrices")
    values = np.asarray(f.value(samples.hessians), float)
    grad_sq = np.asarray(f.upper_grad_sq(samples.hessians), float)
    return _ratio_report(values, grad_sq, samples.weights, samples.count)


# --------------------------------------------------- exponential concentration


def exp_concentration(samples, f, c):
    """Empirical E exp(c |f(Lambda(X)) - mean|); inf signals overflow."""
    c = float(c)
    if c <= 0.0:
        raise ValueError("exponential concentration needs c > 0")
    values = np.asarray(f.value(samples.spectra), float)
    w = samples.weights / np.sum(samples.weights)
    center = float(np.sum(w * values))
    z = c * np.abs(values - center)
    if float(np.max(z, initial=0.0)) > 700.0:
        return math.inf
    return float(np.sum(w * np.exp(z)))


def exp_concentration_sweep(samples, f, c_grid):
    """Calibration curve: the exponential moment on a grid of constants."""
    return [(float(c), exp_concentration(samples, f, c)) for c in c_grid]


# ------------------------------------------------------------ curvature floor


def caffarelli_floor_check(mu, nu, n_reg, grid_points=512):
    """Margin of the regularized pair's map curvature over 1/n_reg^2.

    Builds the monotone map between regularize(mu, n_reg) and
    regularize(nu, n_reg) and minimizes Phi'' over a uniform quantile
    grid; a positive return certifies the floor on that grid.
    """
    n_reg = int(n_reg)
    grid_points = int(grid_points)
    if grid_points < 2:
        raise ValueError("quantile grid needs at least 2 points")
    tm = brenier_1d(regularize(mu, n_reg), regularize(nu, n_reg))
    u = (np.arange(grid_points) + 0.5) / grid_points
    d2 = tm.second_derivative(tm.source.quantile(u))
    return float(np.min(d2)) - 1.0 / n_reg**2


# ------------------------------------------------------------ experiment list


def default_experiments():
    """Fixed desk-scale catalog of analytic maps, in deterministic order.

    Four one-dimensional pairs, two Gaussian pairs with frozen random
    covariances, one three-factor product, and the ball-to-Gaussian
    radial family in dimensions 2, 3, 5, 8.
    """
    pair_specs = [
        ("uniform(0,1)", ("uniform", (0.0, 1.0)), ("exponential", (1.0,))),
        ("gaussian-logistic", ("gaussian", (0.0, 1.0)), ("logistic", (0.0, 1.0))),
        ("beta-gaussian", ("beta", (2.0, 3.0)), ("gaussian", (0.0, 1.0))),
        ("gamma-gaussian", ("gamma", (3.0, 1.0)), ("gaussian", (0.5, 0.8))),
    ]
    out = []
    maps_1d = []
    for tag, (na, pa), (nb, pb) in pair_specs:
        tm = brenier_1d(make_catalog_measure(na, pa), make_catalog_measure(nb, pb))
        maps_1d.append(tm)
        out.append((f"1d:{tm.source.name}->{tm.target.name}", tm))
    for d in (3, 5):
        s = rng.stream(2024, 10, d)
        mu = GaussianMeasure(np.zeros(d), random_spd(s, d, log_spread=1.5))
        nu = GaussianMeasure(0.3 * np.ones(d), random_spd(s, d, log_spread=1.5))
        out.append((f"gaussian:n={d}", brenier_gaussian(mu, nu)))
    out.append(("product:n=3", brenier_product(maps_1d[:3])))
    for d in (2, 3, 5, 8):
        tm = brenier_radial(
            make_radial_measure("uniform-ball", d),
            make_radial_measure("gaussian", d),
        )
        out.append((f"radial:ball->gaussian n={d}", tm))
    return out
