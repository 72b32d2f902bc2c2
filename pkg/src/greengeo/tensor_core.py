"""Chart-based Riemannian tensor calculus.

A manifold is represented by a single coordinate chart carrying a smooth
metric-matrix field. All derived objects (Christoffel symbols, curvature,
covariant derivatives of scalar/vector/tensor fields) are evaluated pointwise
from the metric 2-jet, which comes either from analytic callbacks supplied by
the chart or from central finite-difference stencils.

Conventions:
  * all tensors are stored covariant in chart coordinates; indices are raised
    through the inverse metric only where needed;
  * field evaluators are vectorized: a batch of points has shape (m, n) and
    evaluators return (m, ...) arrays;
  * finite-difference steps are scaled per coordinate by the chart's
    characteristic coordinate scales (default: max(1, |p|) for every
    coordinate, appropriate for Cartesian-type charts).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import (
    MetricNotPositiveDefinite,
    PointOutsideDomain,
    StepTooLargeForDomain,
)

Array = np.ndarray

GRADIENT_FLOOR = 1e-6

# 4th-order central first-derivative stencil (also used pairwise for mixed
# second derivatives of the metric).
_SHIFTS_O4 = np.array([-2.0, -1.0, 1.0, 2.0])
_WEIGHTS_O4 = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_SHIFTS_O2 = np.array([-1.0, 1.0])
_WEIGHTS_O2 = np.array([-0.5, 0.5])
# 4th-order pure second derivative, shifts -2..2.
_D2_SHIFTS_O4 = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
_D2_WEIGHTS_O4 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


# ---------------------------------------------------------------------------
# Charts and fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricChart:
    """A coordinate chart with a smooth metric field.

    metric maps (m, n) points to (m, n, n) symmetric positive-definite
    matrices. dmetric/d2metric, when given, return the coordinate derivatives
    d_l g_ab as (m, n, n, n) and d_l d_k g_ab as (m, n, n, n, n); without them
    the metric is differentiated by 5-point central stencils of step
    fd_step * coordinate scale.

    domain is a vectorized predicate (None means everywhere); bounds is an
    optional (lo, hi) sampling box used for positive-definiteness spot checks
    and samplers.
    """

    dim: int
    metric: Callable[[Array], Array]
    domain: Optional[Callable[[Array], Array]] = None
    bounds: Optional[tuple] = None
    dmetric: Optional[Callable[[Array], Array]] = None
    d2metric: Optional[Callable[[Array], Array]] = None
    coord_scales: Optional[Callable[[Array], Array]] = None
    fd_step: float = 1e-4
    structure_tag: str = "generic"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim <= 2:
            raise ValueError(f"chart dimension must be an integer > 2, got {self.dim}")

    @property
    def derivative_mode(self) -> str:
        return "analytic" if self.dmetric is not None and self.d2metric is not None else "fd"

    def contains(self, pts: Array) -> Array:
        pts = np.atleast_2d(pts)
        if self.domain is None:
            return np.ones(pts.shape[0], dtype=bool)
        return np.asarray(self.domain(pts), dtype=bool)

    def scales(self, pts: Array) -> Array:
        """Per-coordinate characteristic scales used for FD steps."""
        pts = np.atleast_2d(pts)
        if self.coord_scales is not None:
            return np.asarray(self.coord_scales(pts), dtype=float)
        s = np.maximum(1.0, np.linalg.norm(pts, axis=1))
        return np.repeat(s[:, None], self.dim, axis=1)


@dataclass(frozen=True)
class ScalarField:
    """A scalar function on a chart with an optional analytic gradient.

    fn maps (m, n) points to (m,) values; grad, when given, returns the
    coordinate partials d_i f as (m, n).
    """

    fn: Callable[[Array], Array]
    grad: Optional[Callable[[Array], Array]] = None
    name: str = "f"

    def __call__(self, pts: Array) -> Array:
        return np.asarray(self.fn(np.atleast_2d(pts)), dtype=float)


def as_scalar_field(f) -> ScalarField:
    return f if isinstance(f, ScalarField) else ScalarField(fn=f)


@dataclass(frozen=True)
class PointFrame:
    """Metric data at one point: g, its inverse and the Christoffel symbols."""

    point: Array
    metric: Array
    inverse_metric: Array
    christoffel: Array  # christoffel[k, i, j] = Gamma^k_ij


@dataclass(frozen=True)
class SymmetricTensor2:
    """Covariant symmetric 2-tensor stored as the packed upper triangle."""

    dim: int
    upper: Array  # row-major upper triangle, length n(n+1)/2

    @classmethod
    def from_matrix(cls, mat: Array) -> "SymmetricTensor2":
        mat = np.asarray(mat, dtype=float)
        n = mat.shape[0]
        sym = 0.5 * (mat + mat.T)
        iu = np.triu_indices(n)
        return cls(dim=n, upper=sym[iu])

    @property
    def matrix(self) -> Array:
        n = self.dim
        out = np.zeros((n, n))
        iu = np.triu_indices(n)
        out[iu] = self.upper
        out.T[iu] = self.upper
        return out


# ---------------------------------------------------------------------------
# Domain checks
# ---------------------------------------------------------------------------

def _require_inside(chart: MetricChart, pts: Array, stencil: bool = False) -> None:
    if chart.domain is None:
        return
    ok = chart.contains(pts)
    if not np.all(ok):
        bad = np.atleast_2d(pts)[~ok][0]
        if stencil:
            raise StepTooLargeForDomain(
                f"FD stencil point {bad} leaves the chart domain; reduce the step"
            )
        raise PointOutsideDomain(f"point {bad} is outside the chart domain")


def validate_positive_definite(chart: MetricChart, seed: int = 0, samples: int = 1000) -> None:
    """Cholesky spot check of the metric on points drawn from chart.bounds."""
    if chart.bounds is None:
        return
    lo, hi = (np.asarray(b, dtype=float) for b in chart.bounds)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(samples, chart.dim))
    pts = pts[chart.contains(pts)]
    if len(pts) == 0:
        return
    g = np.asarray(chart.metric(pts), dtype=float)
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise MetricNotPositiveDefinite(
            f"metric failed Cholesky factorization on the sample box {chart.bounds}"
        ) from None


# ---------------------------------------------------------------------------
# Finite-difference stencils (batched)
# ---------------------------------------------------------------------------

def _steps(chart: MetricChart, pts: Array, h: float) -> Array:
    return h * chart.scales(pts)


def fd_partials(fn, pts: Array, steps: Array, order: int = 2) -> Array:
    """Coordinate partials d_l fn, shape (m, n, *out).

    fn maps (k, n) points to (k, *out); steps has shape (m, n).
    """
    pts = np.atleast_2d(pts)
    m, n = pts.shape
    shifts, weights = (_SHIFTS_O4, _WEIGHTS_O4) if order == 4 else (_SHIFTS_O2, _WEIGHTS_O2)
    S = len(shifts)
    stencil = np.repeat(pts[:, None, None, :], n * S, axis=1).reshape(m, n, S, n)
    for l in range(n):
        stencil[:, l, :, l] += steps[:, l, None] * shifts[None, :]
    vals = np.asarray(fn(stencil.reshape(m * n * S, n)), dtype=float)
    out_shape = vals.shape[1:]
    vals = vals.reshape((m, n, S) + out_shape)
    d = np.tensordot(vals, weights, axes=([2], [0]))
    return d / steps.reshape((m, n) + (1,) * len(out_shape))


def fd_scalar_jet2(fn, pts: Array, steps: Array) -> tuple:
    """(f, df, d2f) of a scalar evaluator by 2nd-order central differences.

    The mixed partials use the 4-point cross stencil, so d2f is symmetric by
    construction.
    """
    pts = np.atleast_2d(pts)
    m, n = pts.shape
    f0 = np.asarray(fn(pts), dtype=float)

    # Axis shifts +-h for gradient and diagonal second derivatives.
    ax = np.repeat(pts[:, None, None, :], n * 2, axis=1).reshape(m, n, 2, n)
    for l in range(n):
        ax[:, l, :, l] += steps[:, l, None] * _SHIFTS_O2[None, :]
    fax = np.asarray(fn(ax.reshape(m * n * 2, n)), dtype=float).reshape(m, n, 2)
    df = (fax[:, :, 1] - fax[:, :, 0]) / (2.0 * steps)
    d2f = np.zeros((m, n, n))
    diag = (fax[:, :, 1] + fax[:, :, 0] - 2.0 * f0[:, None]) / steps**2
    for l in range(n):
        d2f[:, l, l] = diag[:, l]

    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if pairs:
        cross = np.repeat(pts[:, None, None, :], len(pairs) * 4, axis=1).reshape(
            m, len(pairs), 4, n
        )
        signs = np.array([(1, 1), (1, -1), (-1, 1), (-1, -1)], dtype=float)
        for k, (i, j) in enumerate(pairs):
            cross[:, k, :, i] += steps[:, i, None] * signs[None, :, 0]
            cross[:, k, :, j] += steps[:, j, None] * signs[None, :, 1]
        fc = np.asarray(fn(cross.reshape(m * len(pairs) * 4, n)), dtype=float)
        fc = fc.reshape(m, len(pairs), 4)
        for k, (i, j) in enumerate(pairs):
            val = (fc[:, k, 0] - fc[:, k, 1] - fc[:, k, 2] + fc[:, k, 3]) / (
                4.0 * steps[:, i] * steps[:, j]
            )
            d2f[:, i, j] = val
            d2f[:, j, i] = val
    return f0, df, d2f


def _fd_metric_second(chart: MetricChart, pts: Array, steps: Array) -> Array:
    """d_l d_k g_ab by 5-point stencils, shape (m, n, n, n, n)."""
    pts = np.atleast_2d(pts)
    m, n = pts.shape
    d2 = np.zeros((m, n, n, n, n))

    ax = np.repeat(pts[:, None, None, :], n * 5, axis=1).reshape(m, n, 5, n)
    for l in range(n):
        ax[:, l, :, l] += steps[:, l, None] * _D2_SHIFTS_O4[None, :]
    _require_inside(chart, ax.reshape(-1, n), stencil=True)
    gax = np.asarray(chart.metric(ax.reshape(-1, n)), dtype=float).reshape(m, n, 5, n, n)
    diag = np.tensordot(gax, _D2_WEIGHTS_O4, axes=([2], [0]))
    for l in range(n):
        d2[:, l, l] = diag[:, l] / steps[:, l, None, None] ** 2

    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if pairs:
        S = len(_SHIFTS_O4)
        cross = np.repeat(pts[:, None, None, :], len(pairs) * S * S, axis=1).reshape(
            m, len(pairs), S, S, n
        )
        for k, (i, j) in enumerate(pairs):
            cross[:, k, :, :, i] += steps[:, i, None, None] * _SHIFTS_O4[None, :, None]
            cross[:, k, :, :, j] += steps[:, j, None, None] * _SHIFTS_O4[None, None, :]
        _require_inside(chart, cross.reshape(-1, n), stencil=True)
        gc = np.asarray(chart.metric(cross.reshape(-1, n)), dtype=float)
        gc = gc.reshape(m, len(pairs), S, S, n, n)
        mixed = np.einsum("mpstab,s,t->mpab", gc, _WEIGHTS_O4, _WEIGHTS_O4)
        for k, (i, j) in enumerate(pairs):
            val = mixed[:, k] / (steps[:, i] * steps[:, j])[:, None, None]
            d2[:, i, j] = val
            d2[:, j, i] = val
    return d2


def metric_jet(chart: MetricChart, pts: Array, second: bool = False):
    """(g, g_inv, dg[, d2g]) at a batch of points."""
    pts = np.atleast_2d(pts)
    _require_inside(chart, pts)
    g = np.asarray(chart.metric(pts), dtype=float)
    try:
        g_inv = np.linalg.inv(g)
    except np.linalg.LinAlgError:
        raise MetricNotPositiveDefinite("metric is singular at an evaluation point") from None
    steps = _steps(chart, pts, chart.fd_step)
    if chart.dmetric is not None:
        dg = np.asarray(chart.dmetric(pts), dtype=float)
    else:
        stencil_fn = lambda q: np.asarray(chart.metric(q), dtype=float)
        dg = fd_partials(stencil_fn, pts, steps, order=4)
    if not second:
        return g, g_inv, dg
    if chart.d2metric is not None:
        d2g = np.asarray(chart.d2metric(pts), dtype=float)
    else:
        d2g = _fd_metric_second(chart, pts, steps)
    return g, g_inv, dg, d2g


# ---------------------------------------------------------------------------
# Frames and curvature
# ---------------------------------------------------------------------------

def frames(chart: MetricChart, pts: Array):
    """(g, g_inv, gamma) batched over points."""
    g, g_inv, dg = metric_jet(chart, pts)
    gamma = kernels.christoffel(g_inv, dg)
    return g, g_inv, gamma


def point_frame(chart: MetricChart, p: Array) -> PointFrame:
    p = np.asarray(p, dtype=float)
    g, g_inv, gamma = frames(chart, p[None, :])
    return PointFrame(point=p, metric=g[0], inverse_metric=g_inv[0], christoffel=gamma[0])


def ricci_batch(chart: MetricChart, pts: Array) -> Array:
    g, g_inv, dg, d2g = metric_jet(chart, pts, second=True)
    return kernels.ricci_from_jet(g_inv, dg, d2g)


def ricci(chart: MetricChart, p: Array) -> SymmetricTensor2:
    return SymmetricTensor2.from_matrix(ricci_batch(chart, np.asarray(p, dtype=float)[None, :])[0])


# ---------------------------------------------------------------------------
# Scalar-field calculus
# ---------------------------------------------------------------------------

def field_partials(chart: MetricChart, f: ScalarField, pts: Array, h: float, order: int = 2) -> Array:
    """d_i f at a batch of points, analytic when the field provides it."""
    pts = np.atleast_2d(pts)
    if f.grad is not None:
        return np.asarray(f.grad(pts), dtype=float)
    return fd_partials(f.fn, pts, _steps(chart, pts, h), order=order)


def gradient_batch(chart: MetricChart, f, pts: Array, h: float = 1e-4) -> Array:
    """Contravariant gradient grad(f)^i = g^{ij} d_j f."""
    f = as_scalar_field(f)
    pts = np.atleast_2d(pts)
    _require_inside(chart, pts)
    _, g_inv, _dg = metric_jet(chart, pts)
    df = field_partials(chart, f, pts, h)
    return kernels.raise_index(g_inv, df)


def gradient(chart: MetricChart, f, p: Array, h: float = 1e-4) -> Array:
    return gradient_batch(chart, f, np.asarray(p, dtype=float)[None, :], h)[0]


def hessian_batch(chart: MetricChart, f, pts: Array, h: float = 1e-4) -> Array:
    """Covariant Hessian Hess(f)_ij = d_i d_j f - Gamma^k_ij d_k f."""
    f = as_scalar_field(f)
    pts = np.atleast_2d(pts)
    _require_inside(chart, pts)
    _, _, gamma = frames(chart, pts)
    steps = _steps(chart, pts, h)
    if f.grad is not None:
        df = np.asarray(f.grad(pts), dtype=float)
        d2f = fd_partials(f.grad, pts, steps, order=2)
        d2f = 0.5 * (d2f + d2f.transpose(0, 2, 1))
    else:
        _, df, d2f = fd_scalar_jet2(f.fn, pts, steps)
    return kernels.covariant_hessian(df, d2f, gamma)


def hessian(chart: MetricChart, f, p: Array, h: float = 1e-4) -> SymmetricTensor2:
    return SymmetricTensor2.from_matrix(
        hessian_batch(chart, f, np.asarray(p, dtype=float)[None, :], h)[0]
    )


def laplacian_batch(chart: MetricChart, f, pts: Array, h: float = 1e-4) -> Array:
    """Laplace-Beltrami operator in divergence form.

    Computed as (det g)^{-1/2} d_i ( (det g)^{1/2} g^{ij} d_j f ), a code path
    independent of the Christoffel-based Hessian trace.
    """
    f = as_scalar_field(f)
    pts = np.atleast_2d(pts)
    _require_inside(chart, pts)

    def flux(q: Array) -> Array:
        g, g_inv, _ = metric_jet(chart, q)
        sqrtg = np.sqrt(np.linalg.det(g))
        df = field_partials(chart, f, q, h)
        return sqrtg[:, None] * kernels.raise_index(g_inv, df)

    steps = _steps(chart, pts, h)
    dW = fd_partials(flux, pts, steps, order=2)  # dW[m, i, a] = d_i W^a
    div = np.einsum("maa->m", dW)
    g = np.asarray(chart.metric(pts), dtype=float)
    return div / np.sqrt(np.linalg.det(g))


def laplacian(chart: MetricChart, f, p: Array, h: float = 1e-4) -> float:
    return float(laplacian_batch(chart, f, np.asarray(p, dtype=float)[None, :], h)[0])


# ---------------------------------------------------------------------------
# Divergences of vector and tensor fields
# ---------------------------------------------------------------------------

def divergence_vector_batch(chart: MetricChart, vfield, pts: Array, h: float = 1e-4) -> Array:
    """div V = trace of the covariant derivative of a contravariant field V."""
    pts = np.atleast_2d(pts)
    _require_inside(chart, pts)
    _, _, gamma = frames(chart, pts)
    v = np.asarray(vfield(pts), dtype=float)
    dv = fd_partials(vfield, pts, _steps(chart, pts, h), order=2)
    return kernels.vector_divergence(gamma, v, dv)


def divergence_vector(chart: MetricChart, vfield, p: Array, h: float = 1e-4) -> float:
    return float(divergence_vector_batch(chart, vfield, np.asarray(p, dtype=float)[None, :], h)[0])


def divergence_tensor_batch(chart: MetricChart, tfield, pts: Array, h: float = 1e-4) -> Array:
    """(delta T)_i = g^{jk} T_ij;k for a covariant symmetric 2-tensor field."""
    pts = np.atleast_2d(pts)
    _require_inside(chart, pts)
    g, g_inv, gamma = frames(chart, pts)
    t = np.asarray(tfield(pts), dtype=float)
    dt = fd_partials(tfield, pts, _steps(chart, pts, h), order=2)
    return kernels.tensor_divergence(g_inv, gamma, t, dt)


def divergence_tensor(chart: MetricChart, tfield, p: Array, h: float = 1e-4) -> Array:
    return divergence_tensor_batch(chart, tfield, np.asarray(p, dtype=float)[None, :], h)[0]
