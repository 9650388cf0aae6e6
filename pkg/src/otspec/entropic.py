"""Entropic transport on 2D grids.

Discretizes a planar log-concave measure on a rectangular lattice,
solves the entropically regularized transport problem with log-domain
Sinkhorn iterations under the quadratic cost |x - y|^2 / 2, and exposes
the barycentric-projection map together with a finite-difference Hessian
estimator.  This is the only part of the library that produces Hessian
fields with no product or radial structure; everything it feeds into the
experiment layer is tagged approximate.

The grid is rectangular, so the cost kernel factorizes along axes and
every logsumexp over the plane is two one-dimensional logsumexps.  All
updates run in the log domain throughout; the weights of a discretized
Gaussian span hundreds of orders of magnitude and linear-domain scaling
would underflow at the epsilon values the map estimates need.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .measures import GaussianMeasure, ProductMeasure, RadialMeasure
from .spd import SpdMatrix

__all__ = [
    "GridMeasure",
    "EntropicPlan",
    "discretize",
    "sinkhorn_solve",
    "default_eps_schedule",
    "entropic_map",
    "map_jacobian",
    "hessian_fd",
]

_COVERAGE = 1.0 - 1e-6


@dataclass(frozen=True)
class GridMeasure:
    """Probability weights on a rectangular lattice of nx * ny nodes."""

    xs: np.ndarray  # (nx,) node abscissae
    ys: np.ndarray  # (ny,) node ordinates
    weights: np.ndarray  # (nx, ny), nonnegative, sums to 1
    box: tuple  # ((x0, x1), (y0, y1))

    def __post_init__(self):
        if self.xs.size < 2 or self.ys.size < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        if np.any(self.weights < 0):
            raise ValueError("grid weights must be nonnegative")
        total = float(self.weights.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"grid weights sum to {total!r}, expected 1")

    @property
    def shape(self):
        return (self.xs.size, self.ys.size)

    @property
    def spacing(self):
        return (
            float(self.xs[1] - self.xs[0]),
            float(self.ys[1] - self.ys[0]),
        )

    def nodes(self):
        """All node coordinates as an (nx*ny, 2) array, x-major."""
        gx, gy = np.meshgrid(self.xs, self.ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass
class EntropicPlan:
    """Converged dual potentials plus the iteration trail that led there.

    The plan itself is the implicit coupling
    pi[ij, pq] = mu[ij] nu[pq] exp((f[ij] + g[pq] - C) / eps); only the
    potentials are stored.  ``history`` rows are
    (eps, iteration, target-marginal error, dual objective).
    """

    source: GridMeasure
    target: GridMeasure
    f: np.ndarray
    g: np.ndarray
    eps: float
    marginal_error: float
    history: list = field(default_factory=list)

    def stage_history(self, eps):
        return [row for row in self.history if row[0] == eps]


def _box_mass(m, box):
    """Mass the measure assigns to the box (lower bound for radial)."""
    if isinstance(m, (GaussianMeasure, ProductMeasure)):
        return float(m.box_mass(box))
    if isinstance(m, RadialMeasure):
        # inscribed-disk bound; exact only when the support fits the box
        (x0, x1), (y0, y1) = box
        r_in = min(x1, -x0, y1, -y0)
        if r_in <= 0:
            return 0.0
        return float(m.radial_cdf(r_in))
    raise TypeError(f"cannot compute box coverage for {type(m).__name__}")


def discretize(m, box, nx, ny):
    """Sample a planar measure's density on a regular grid in the box.

    The box must capture all but 1e-6 of the mass; weights are the node
    densities renormalized to sum to one.
    """
    (x0, x1), (y0, y1) = box
    if not (x1 > x0 and y1 > y0):
        raise ValueError("box must have positive extent on both axes")
    if nx < 2 or ny < 2:
        raise ValueError("need at least 2 nodes per axis")
    if getattr(m, "dim", None) != 2:
        raise ValueError("entropic grids are two-dimensional")
    mass = _box_mass(m, box)
    if mass < _COVERAGE:
        raise ValueError(
            f"box covers only {mass:.9f} of the mass; "
            f"need at least {_COVERAGE:.7f}"
        )
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    with np.errstate(over="ignore"):
        logw = -np.asarray(m.potential(pts), dtype=float).reshape(nx, ny)
    logw -= logw.max()
    w = np.exp(logw)
    return GridMeasure(xs=xs, ys=ys, weights=w / w.sum(), box=box)


def default_eps_schedule(mu, nu, floor=None, start_factor=0.1, ratio=0.5):
    """Geometric epsilon ladder from the box scale down to grid resolution.

    The start is a fraction of the squared joint box diagonal.  The floor
    defaults to 1.2 times the squared coarsest grid spacing: the
    barycentric map needs the softmax kernel width sqrt(eps) to stay
    near the lattice spacing, and pushing the floor to a fixed fraction
    of diam^2 leaves a smoothing bias of order eps/2 times the inverse
    covariance, which is several times too large for tight oracle
    agreement on mass-complete boxes.
    """
    corners = []
    for g in (mu, nu):
        (x0, x1), (y0, y1) = g.box
        corners.extend([(x0, y0), (x1, y1)])
    xs = [c[0] for c in corners]
    ys = [c[1] for c in corners]
    diam2 = (max(xs) - min(xs)) ** 2 + (max(ys) - min(ys)) ** 2
    if floor is None:
        h = max(max(mu.spacing), max(nu.spacing))
        floor = 1.2 * h * h
    floor = float(floor)
    if floor <= 0:
        raise ValueError("epsilon floor must be positive")
    eps = max(start_factor * diam2, floor)
    out = [eps]
    while out[-1] > floor:
        out.append(max(out[-1] * ratio, floor))
    return out


def _log_weights(g):
    with np.errstate(divide="ignore"):
        return np.log(g.weights)


def _half_update(dx, dy, pot_plus_logw, eps):
    """One side of the Sinkhorn step, factorized along grid axes.

    dx, dy : (n_from_x, n_to_x), (n_from_y, n_to_y) negated squared
    half-distances between axis nodes.  pot_plus_logw lives on the "from"
    grid; the result is -eps * logsumexp over it, on the "to" grid.
    """
    inner = pot_plus_logw / eps
    # stage 1: collapse the x axis of the source grid
    a = logsumexp(dx[:, :, None] / eps + inner[:, None, :], axis=0)
    # stage 2: collapse the y axis
    b = logsumexp(dy[None, :, :] / eps + a[:, :, None], axis=1)
    return b


def sinkhorn_solve(mu, nu, eps_schedule, max_iter=2000, tol=1e-8):
    """Log-domain Sinkhorn with epsilon-scaling warm starts.

    Each ladder stage reuses the previous stage's potentials.  The
    returned plan satisfies both marginals to ``tol`` in sup norm: the
    final f-update makes the source marginal exact and iteration stops
    only once the target marginal error is below ``tol``.
    """
    eps_schedule = [float(e) for e in eps_schedule]
    if not eps_schedule:
        raise ValueError("empty epsilon schedule")
    if eps_schedule[-1] <= 0:
        raise ValueError("final epsilon must be positive")
    if any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise ValueError("epsilon schedule must be strictly decreasing")
    if mu.xs.size * mu.ys.size == 0 or nu.xs.size * nu.ys.size == 0:
        raise ValueError("empty grids")

    log_mu = _log_weights(mu)
    log_nu = _log_weights(nu)
    # negated squared half-distances between axis node sets; rows index
    # the grid being summed over, columns the grid being updated
    dx_for_f = -0.5 * (nu.xs[:, None] - mu.xs[None, :]) ** 2  # (nx_t, nx_s)
    dy_for_f = -0.5 * (nu.ys[:, None] - mu.ys[None, :]) ** 2
    dx_for_g = dx_for_f.T.copy()
    dy_for_g = dy_for_f.T.copy()

    f = np.zeros(mu.shape)
    g = np.zeros(nu.shape)
    history = []
    err = math.inf
    for stage, eps in enumerate(eps_schedule):
        last = stage == len(eps_schedule) - 1
        stage_tol = tol if last else max(tol, 1e-4)
        for it in range(max_iter):
            f = -eps * _half_update(dx_for_f, dy_for_f, g + eps * log_nu, eps)
            b = _half_update(dx_for_g, dy_for_g, f + eps * log_mu, eps)
            col = np.exp(np.clip((g + eps * b) / eps, -745.0, 50.0)) * nu.weights
            err = float(np.max(np.abs(col - nu.weights)))
            objective = (
                float(np.sum(f * mu.weights))
                + float(np.sum(g * nu.weights))
                - eps * (float(col.sum()) - 1.0)
            )
            history.append((eps, it, err, objective))
            if err <= stage_tol:
                break
            g = -eps * b
        else:
            if last:
                raise ArithmeticError(
                    f"sinkhorn did not converge: marginal error {err:.3e} "
                    f"after {max_iter} iterations at eps={eps:.3e} "
                    f"(tolerance {tol:.1e})"
                )
    return EntropicPlan(
        source=mu,
        target=nu,
        f=f,
        g=g,
        eps=eps_schedule[-1],
        marginal_error=err,
        history=history,
    )


def _conditional_log_weights(plan, pts):
    """Unnormalized log weights of the plan's conditional at each point.

    Returns an (m, nx_t, ny_t) array over target nodes; the barycentric
    map is the softmax average of the node coordinates under it.
    """
    nu = plan.target
    base = plan.g / plan.eps + _log_weights(nu)
    ax = -0.5 * (pts[:, 0:1] - nu.xs[None, :]) ** 2 / plan.eps  # (m, nx_t)
    ay = -0.5 * (pts[:, 1:2] - nu.ys[None, :]) ** 2 / plan.eps  # (m, ny_t)
    return base[None, :, :] + ax[:, :, None] + ay[:, None, :]


def entropic_map(plan, x):
    """Barycentric projection of the plan's conditional at x.

    Accepts a single point (2,) or a batch (m, 2); refuses points
    outside the source box, where the conditional is pure extrapolation.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    (x0, x1), (y0, y1) = plan.source.box
    ok = (
        (pts[:, 0] >= x0) & (pts[:, 0] <= x1)
        & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)
    )
    if not np.all(ok):
        bad = pts[~ok][0]
        raise ValueError(f"point {bad} lies outside the source box")
    out = np.empty_like(pts)
    nu = plan.target
    for lo in range(0, pts.shape[0], 256):
        chunk = pts[lo : lo + 256]
        lw = _conditional_log_weights(plan, chunk)
        lw -= lw.max(axis=(1, 2), keepdims=True)
        w = np.exp(lw)
        w /= w.sum(axis=(1, 2), keepdims=True)
        out[lo : lo + 256, 0] = np.einsum("mpq,p->m", w, nu.xs)
        out[lo : lo + 256, 1] = np.einsum("mpq,q->m", w, nu.ys)
    return out[0] if single else out


def map_jacobian(plan, x, h=None):
    """Central-difference Jacobian of the barycentric map at x.

    J[i, j] = d T_i / d x_j.  The default step is twice the coarser grid
    spacing of the source; points closer than 2h to the box boundary are
    refused because the one-sided geometry would bias the stencil.
    """
    x = np.asarray(x, dtype=float).reshape(2)
    if h is None:
        h = 2.0 * max(plan.source.spacing)
    h = float(h)
    if h <= 0:
        raise ValueError("step must be positive")
    (x0, x1), (y0, y1) = plan.source.box
    margin = min(x[0] - x0, x1 - x[0], x[1] - y0, y1 - x[1])
    if margin < 2.0 * h:
        raise ValueError(
            f"point too close to the box boundary for step {h:g} "
            f"(margin {margin:g}, need {2*h:g})"
        )
    stencil = np.array(
        [[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]]
    )
    vals = entropic_map(plan, x[None, :] + stencil)
    jac = np.empty((2, 2))
    jac[:, 0] = (vals[0] - vals[1]) / (2.0 * h)
    jac[:, 1] = (vals[2] - vals[3]) / (2.0 * h)
    return jac


def hessian_fd(plan, x, h=None):
    """Symmetrized map Jacobian as the transport Hessian estimate.

    Raises rather than clamps when the symmetrized estimate is not
    positive definite, so degenerate samples are visible to callers, who
    count and exclude them.
    """
    jac = map_jacobian(plan, x, h=h)
    sym = 0.5 * (jac + jac.T)
    floor = float(np.linalg.eigvalsh(sym)[0])
    if floor <= 0.0:
        raise ArithmeticError(
            f"entropic Hessian estimate not positive definite at {x} "
            f"(smallest eigenvalue {floor:.3e})"
        )
    return SpdMatrix(sym)
