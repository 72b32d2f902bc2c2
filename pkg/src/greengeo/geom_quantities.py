"""Pointwise geometric objects derived from u.

Central object: the trace-free Hessian of u^2,

    B = Hess_{u^2} - 2 |grad u|^2 g,

its slices against the unit normal n = grad u / |grad u|, and the second
fundamental form of the level set through the point. B is genuinely
trace-free only where u satisfies the standing equation
Delta u^2 = 2n |grad u|^2; the stored trace is a diagnostic.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import BetaBelowCritical, DegenerateGradient
from .tensor_core import (
    GRADIENT_FLOOR,
    MetricChart,
    ScalarField,
    as_scalar_field,
    fd_partials,
    field_partials,
    frames,
    hessian_batch,
    _steps,
)

Array = np.ndarray


# ---------------------------------------------------------------------------
# Gradient helpers
# ---------------------------------------------------------------------------

def _inv_only(chart: MetricChart, pts: Array):
    g = np.asarray(chart.metric(pts), dtype=float)
    return np.linalg.inv(g), g


def gradient_norm(chart: MetricChart, u, pts: Array, h: float = 1e-4) -> Array:
    """|grad u| = sqrt(g^{ij} d_i u d_j u) batched over points."""
    u = as_scalar_field(u)
    pts = np.atleast_2d(pts)
    g_inv, _ = _inv_only(chart, pts)
    du = field_partials(chart, u, pts, h)
    return np.sqrt(np.einsum("mij,mi,mj->m", g_inv, du, du))


def gradnorm_field(chart: MetricChart, u, h: float = 1e-4) -> ScalarField:
    """|grad u| as a chart scalar field (used inside nested stencils)."""
    u = as_scalar_field(u)

    def fn(pts):
        pts = np.atleast_2d(pts)
        g_inv, _ = _inv_only(chart, pts)
        du = field_partials(chart, u, pts, h)
        return np.sqrt(np.einsum("mij,mi,mj->m", g_inv, du, du))

    return ScalarField(fn=fn, name=f"|grad {u.name}|")


# ---------------------------------------------------------------------------
# Tangent frames
# ---------------------------------------------------------------------------

def tangent_basis(g: Array, normal: Array) -> Array:
    """Orthonormal tangent vectors (contravariant) against a unit normal.

    Gram-Schmidt over the coordinate frame; the coordinate most aligned with
    the normal is dropped. Deterministic and re-orthogonalized once.
    """
    m, n = normal.shape
    diag = np.sqrt(np.einsum("mii->mi", g))
    drop = np.argmax(np.abs(normal) * diag, axis=1)
    order = np.argsort(np.where(np.arange(n)[None, :] == drop[:, None], 1, 0), axis=1, kind="stable")
    keep = order[:, : n - 1]  # coordinate indices to keep, in order

    tangents = np.zeros((m, n - 1, n))
    basis = [normal]
    for a in range(n - 1):
        v = np.zeros((m, n))
        v[np.arange(m), keep[:, a]] = 1.0
        for _ in range(2):  # two Gram-Schmidt passes for 1e-12 orthogonality
            for b in basis:
                v = v - np.einsum("mij,mi,mj->m", g, v, b)[:, None] * b
        norm = np.sqrt(np.einsum("mij,mi,mj->m", g, v, v))
        v = v / norm[:, None]
        basis.append(v)
        tangents[:, a] = v
    return tangents


# ---------------------------------------------------------------------------
# B decomposition
# ---------------------------------------------------------------------------

@dataclass
class BDecomposition:
    """B and its normal decomposition at one point (plus batched internals)."""

    B: Array                 # covariant components
    B_of_n: Array            # contravariant vector B(n)
    B_of_n_tangent: Array    # tangential part of B(n)
    B_nn: float
    norm2_B: float
    norm2_Bn: float
    norm2_BnT: float
    norm2_B0: float
    trace: float             # g^{ij} B_ij, zero under the standing equation
    gradnorm: float
    u_value: float


@dataclass
class _BatchGeometry:
    """All pointwise quantities shared by the identity checks, batched."""

    pts: Array
    g: Array
    g_inv: Array
    gamma: Array
    u: Array
    du: Array                # coordinate partials d_i u
    gradnorm: Array
    normal_cov: Array        # nu_i = d_i u / |grad u|
    normal: Array            # n^i
    hess_u2: Array
    B: Array
    Bn_cov: Array
    Bnn: Array
    norm2_B: Array
    norm2_Bn: Array
    norm2_BnT: Array
    norm2_B0: Array
    traceB: Array
    tangents: Array          # (m, n-1, n) contravariant
    B0: Array                # (m, n-1, n-1) tangential restriction
    ricci: Optional[Array] = None


def batch_geometry(chart: MetricChart, u, pts: Array, h: float = 1e-4,
                   with_ricci: bool = False,
                   gradient_floor: float = GRADIENT_FLOOR) -> _BatchGeometry:
    """Evaluate u-jet, B decomposition and tangent frames at a batch of points."""
    u = as_scalar_field(u)
    pts = np.atleast_2d(pts)
    g, g_inv, gamma = frames(chart, pts)
    uval = np.asarray(u(pts), dtype=float)
    du = field_partials(chart, u, pts, h)
    gradnorm2 = np.einsum("mij,mi,mj->m", g_inv, du, du)
    gradnorm = np.sqrt(gradnorm2)
    if np.any(gradnorm <= gradient_floor):
        bad = pts[gradnorm <= gradient_floor][0]
        raise DegenerateGradient(f"|grad u| below floor {gradient_floor} at {bad}")

    if u.grad is not None:
        u2 = ScalarField(lambda q: u(q) ** 2, grad=lambda q: 2.0 * u(q)[:, None] * u.grad(q))
    else:
        u2 = ScalarField(lambda q: u(q) ** 2)
    hess_u2 = hessian_batch(chart, u2, pts, h)

    B = hess_u2 - 2.0 * gradnorm2[:, None, None] * g
    normal_cov = du / gradnorm[:, None]
    normal = kernels.raise_index(g_inv, normal_cov)
    Bn_cov = np.einsum("mij,mj->mi", B, normal)
    Bnn = np.einsum("mi,mi->m", Bn_cov, normal)
    norm2_Bn = np.einsum("mij,mi,mj->m", g_inv, Bn_cov, Bn_cov)
    norm2_BnT = np.maximum(norm2_Bn - Bnn**2, 0.0)
    norm2_B = kernels.sym2_norm2(g_inv, B)
    traceB = np.einsum("mij,mij->m", g_inv, B)

    tangents = tangent_basis(g, normal)
    B0 = np.einsum("mai,mbj,mij->mab", tangents, tangents, B)
    norm2_B0 = np.einsum("mab,mab->m", B0, B0)

    ric = None
    if with_ricci:
        from .tensor_core import ricci_batch

        ric = ricci_batch(chart, pts)
    return _BatchGeometry(
        pts=pts, g=g, g_inv=g_inv, gamma=gamma, u=uval, du=du,
        gradnorm=gradnorm, normal_cov=normal_cov, normal=normal,
        hess_u2=hess_u2, B=B, Bn_cov=Bn_cov, Bnn=Bnn, norm2_B=norm2_B,
        norm2_Bn=norm2_Bn, norm2_BnT=norm2_BnT, norm2_B0=norm2_B0,
        traceB=traceB, tangents=tangents, B0=B0, ricci=ric,
    )


def b_decomposition(chart: MetricChart, u, p: Array, h: float = 1e-4) -> BDecomposition:
    """B = Hess_{u^2} - 2|grad u|^2 g and its normal/tangential split at p."""
    geo = batch_geometry(chart, u, np.asarray(p, dtype=float)[None, :], h)
    Bn = kernels.raise_index(geo.g_inv, geo.Bn_cov)
    BnT = Bn - geo.Bnn[:, None] * geo.normal
    return BDecomposition(
        B=geo.B[0], B_of_n=Bn[0], B_of_n_tangent=BnT[0], B_nn=float(geo.Bnn[0]),
        norm2_B=float(geo.norm2_B[0]), norm2_Bn=float(geo.norm2_Bn[0]),
        norm2_BnT=float(geo.norm2_BnT[0]), norm2_B0=float(geo.norm2_B0[0]),
        trace=float(geo.traceB[0]), gradnorm=float(geo.gradnorm[0]),
        u_value=float(geo.u[0]),
    )


def hessian_u2_product_route(chart: MetricChart, u, pts: Array, h: float = 1e-4) -> Array:
    """Hess_{u^2} assembled as 2 u Hess_u + 2 du (x) du (cross-check route)."""
    u = as_scalar_field(u)
    pts = np.atleast_2d(pts)
    uval = np.asarray(u(pts), dtype=float)
    du = field_partials(chart, u, pts, h)
    hess_u = hessian_batch(chart, u, pts, h)
    return 2.0 * uval[:, None, None] * hess_u + 2.0 * np.einsum("mi,mj->mij", du, du)


# ---------------------------------------------------------------------------
# Level-set frame
# ---------------------------------------------------------------------------

@dataclass
class LevelSetFrame:
    """Second fundamental form data of the level set of u through a point."""

    normal: Array                 # contravariant unit normal
    tangent_basis: Array          # (n-1, n) contravariant, orthonormal
    II: Array                     # (n-1, n-1)
    H: float
    II0: Array
    norm2_II0: float
    II0_reconstructed: Array      # (B_0 + B(n,n)/(n-1) g_0) / (2 u |grad u|)


def level_set_frame_batch(chart: MetricChart, u, pts: Array, h: float = 1e-4,
                          geo: Optional[_BatchGeometry] = None):
    """II, H, II0 batched; returns (geo, II, H, II0, norm2_II0, II0_rec)."""
    u = as_scalar_field(u)
    pts = np.atleast_2d(pts)
    if geo is None:
        geo = batch_geometry(chart, u, pts, h)
    n = chart.dim

    def normal_cov_field(q):
        q = np.atleast_2d(q)
        g_inv, _ = _inv_only(chart, q)
        # wider stencil for the nested route keeps II's FD error second order
        dq = field_partials(chart, u, q, h, order=4)
        gn = np.sqrt(np.einsum("mij,mi,mj->m", g_inv, dq, dq))
        return dq / gn[:, None]

    dnu = fd_partials(normal_cov_field, pts, _steps(chart, pts, h), order=2)
    # covariant derivative of the covector: (grad nu)_ij = d_i nu_j - Gamma^k_ij nu_k
    grad_nu = dnu - np.einsum("mkij,mk->mij", geo.gamma, geo.normal_cov)
    II = np.einsum("mai,mbj,mij->mab", geo.tangents, geo.tangents, grad_nu)
    II = 0.5 * (II + II.transpose(0, 2, 1))
    H = np.einsum("maa->m", II)
    eye = np.eye(n - 1)[None, :, :]
    II0 = II - (H / (n - 1))[:, None, None] * eye
    norm2_II0 = np.einsum("mab,mab->m", II0, II0)
    II0_rec = (geo.B0 + (geo.Bnn / (n - 1))[:, None, None] * eye) / (
        2.0 * geo.u * geo.gradnorm
    )[:, None, None]
    return geo, II, H, II0, norm2_II0, II0_rec


def level_set_frame(chart: MetricChart, u, p: Array, h: float = 1e-4) -> LevelSetFrame:
    geo, II, H, II0, n2, rec = level_set_frame_batch(
        chart, u, np.asarray(p, dtype=float)[None, :], h
    )
    return LevelSetFrame(
        normal=geo.normal[0], tangent_basis=geo.tangents[0], II=II[0],
        H=float(H[0]), II0=II0[0], norm2_II0=float(n2[0]),
        II0_reconstructed=rec[0],
    )


# ---------------------------------------------------------------------------
# The exponent bookkeeping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaParams:
    n: int
    beta: float
    tilde_beta: float


def tilde_beta(n: int, beta: float) -> BetaParams:
    """tilde(beta) = 1 + (beta - 1)(n - 1), snapped to exactly 0 at the critical beta."""
    if n <= 2:
        raise BetaBelowCritical(f"dimension must exceed 2, got {n}")
    critical = (n - 2) / (n - 1)
    if beta < critical - 1e-12:
        raise BetaBelowCritical(f"beta = {beta} below the critical value {critical}")
    tb = 1.0 + (beta - 1.0) * (n - 1)
    if abs(tb) < 1e-12:
        tb = 0.0
    return BetaParams(n=n, beta=beta, tilde_beta=tb)
