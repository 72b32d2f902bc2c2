"""Monotone quantities of Green's-function level sets.

Two scale-invariant families are tracked along a geometric grid of u-levels:

    A_beta(r) = r^{1-n} * integral_{u=r} |grad u|^{1+beta}
    V_beta(r) = r^{2-n} * integral_{u<=r} |grad u|^{2+beta} / u^2

Each monotonicity statement is verified in identity form: the left side is a
finite-differenced derivative of boundary quantities on the level grid, the
right side an independent bulk quadrature of curvature/B terms sampled
through the pointwise tensor machinery. Violations of the monotone direction
are reported against a per-level tolerance assembled from quadrature and
finite-difference error estimates, never against a fixed epsilon.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import (
    CoareaMismatch,
    NonRegularLevel,
    TailTruncationDominates,
)
from .geom_quantities import batch_geometry, level_set_frame_batch, tilde_beta
from .greens import GreensProfile, greens_profile, unit_sphere_area
from .identity_checker import standing_equation_residual
from .model_manifolds import ModelSpec, build_chart, example_function
from .tensor_core import MetricChart, ScalarField

Array = np.ndarray

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)
_GL_NODES_LO, _GL_WEIGHTS_LO = np.polynomial.legendre.leggauss(6)

DEFAULT_GRID = (1e-2, 1e3, 2 ** 0.125)


def level_grid(r_min: float = DEFAULT_GRID[0], r_max: float = DEFAULT_GRID[1],
               ratio: float = DEFAULT_GRID[2], pad: int = 2) -> Array:
    """Geometric level grid, padded so 4th-order log-derivatives exist everywhere."""
    n_steps = int(np.ceil(np.log(r_max / r_min) / np.log(ratio)))
    k = np.arange(-pad, n_steps + pad + 1)
    return r_min * ratio ** k.astype(float)


def _log_derivative4(values: Array, radii: Array, dlog: float) -> Array:
    """4th-order d/dr via uniform log-grid stencil; NaN on the 2-point pad."""
    out = np.full_like(values, np.nan)
    out[2:-2] = (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12 * dlog)
    return out / radii


def _log_derivative2(values: Array, radii: Array, dlog: float) -> Array:
    out = np.full_like(values, np.nan)
    out[1:-1] = (values[2:] - values[:-2]) / (2 * dlog)
    return out / radii


# ---------------------------------------------------------------------------
# Radial geometry: rotationally symmetric models with radial u
# ---------------------------------------------------------------------------

class RadialGeometry:
    """Bundles a rotationally symmetric model, its Green's profile and the
    pointwise curvature/B data sampled along a radial quadrature grid."""

    def __init__(self, spec: ModelSpec, chart: Optional[MetricChart] = None,
                 gp: Optional[GreensProfile] = None, h: float = 1e-4,
                 node_span: tuple = (6e-3, None), nodes_per_decade: int = 32):
        if spec.kind not in ("euclidean", "cone", "rot_sym"):
            raise NonRegularLevel(f"radial geometry needs a radial model, got {spec.kind}")
        self.spec = spec
        self.n = spec.n
        self.omega = unit_sphere_area(spec.n)
        self.chart = chart if chart is not None else build_chart(spec)
        self.gp = gp if gp is not None else greens_profile(spec)
        self.u_field = self.gp.scalar_field(self.chart)
        self.h = h
        self._span = node_span
        self._nodes_per_decade = nodes_per_decade
        self._nodes_built = False
        self._cum_cache: dict = {}

    # -- profile shortcuts ---------------------------------------------------
    def area_of(self, s: Array) -> Array:
        from .greens import _area_fn

        return _area_fn(self.spec)(s)

    def rho_of_level(self, r) -> Array:
        return self.gp.r_of_u(r)

    def rep_point(self, s: Array) -> Array:
        """A representative chart point on the geodesic sphere of radius s."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        n = self.n
        if self.chart.structure_tag == "euclidean":
            d = np.ones(n) / np.sqrt(n)
            return s[:, None] * d[None, :]
        pts = np.empty((len(s), n))
        pts[:, 0] = s
        pts[:, 1:n - 1] = 0.5 * np.pi - 0.2
        pts[:, n - 1] = 1.3
        return pts

    # -- pointwise node data ---------------------------------------------------
    def _build_nodes(self) -> None:
        if self._nodes_built:
            return
        lo = self._span[0]
        hi = self._span[1]
        if hi is None:
            hi = float(self.rho_of_level(DEFAULT_GRID[1] * 1.7))
            if self.spec.kind == "rot_sym":
                hi = max(hi, 4.0 * _bump_radius(self.spec))
        decades = np.log10(hi / lo)
        edges = np.geomspace(lo, hi, max(int(decades * self._nodes_per_decade), 8) + 1)
        t = np.log(edges)
        mid = 0.5 * (t[:-1] + t[1:])
        half = 0.5 * np.diff(t)
        nodes = np.exp(mid[:, None] + half[:, None] * _GL_NODES[None, :])
        s_flat = nodes.ravel()

        pts = self.rep_point(s_flat)
        geo = batch_geometry(self.chart, self.u_field, pts, self.h, with_ricci=True)
        geo, II, H, II0, norm2_II0, _rec = level_set_frame_batch(
            self.chart, self.u_field, pts, self.h, geo=geo
        )
        gradu = np.einsum("mij,mj->mi", geo.g_inv, geo.du)
        ric_uu = np.einsum("mij,mi,mj->m", geo.ricci, gradu, gradu)

        self.node_s = s_flat
        self.node_w = (half[:, None] * _GL_WEIGHTS[None, :] * s_flat.reshape(nodes.shape)).ravel()
        self.node_w_lo = None  # filled below with the 6-point rule for error estimates
        self.node_edges = edges
        self.node_u = geo.u
        self.node_up = geo.gradnorm
        self.node_A = self.area_of(s_flat)
        self.node_II0sq = norm2_II0
        self.node_ricnn = ric_uu / geo.gradnorm**2
        self.node_Bn2 = geo.norm2_Bn
        self.node_BnT2 = geo.norm2_BnT

        nodes_lo = np.exp(mid[:, None] + half[:, None] * _GL_NODES_LO[None, :])
        self._nodes_lo_s = nodes_lo.ravel()
        self._nodes_lo_w = (half[:, None] * _GL_WEIGHTS_LO[None, :] * nodes_lo).ravel()
        self._n_panels = len(mid)
        self._nodes_built = True

    def _cumulative(self, key: str, values: Array, pole_power_fit: bool = True):
        """Cumulative integral C(rho) = int_0^rho f(s) A(s) ds of nodewise f*A.

        Returns (spline over log rho, total, pole piece, per-panel error est).
        """
        if key in self._cum_cache:
            return self._cum_cache[key]
        self._build_nodes()
        fA = values * self.node_A
        panel = (fA * self.node_w).reshape(self._n_panels, 12).sum(axis=1)
        cum = np.concatenate([[0.0], np.cumsum(panel)])

        # pole piece on [0, s_min] from a power fit of the first integrand values
        pole = 0.0
        if pole_power_fit:
            f0 = fA[:12]
            s0 = self.node_s[:12]
            good = f0 > 0
            if good.sum() >= 3:
                p = np.polyfit(np.log(s0[good]), np.log(f0[good]), 1)[0]
                if p > -0.99:
                    smin = self.node_edges[0]
                    fmin = float(np.exp(np.interp(np.log(smin), np.log(s0[good]), np.log(f0[good]))))
                    pole = fmin * smin / (p + 1.0)

        # 6-point rule for the quadrature error estimate
        spline_f = make_interp_spline(np.log(self.node_s), fA, k=3)
        fA_lo = spline_f(np.log(self._nodes_lo_s))
        panel_lo = (fA_lo * self._nodes_lo_w).reshape(self._n_panels, 6).sum(axis=1)
        err = np.abs(np.cumsum(panel - panel_lo))
        err_spline = make_interp_spline(np.log(self.node_edges), np.concatenate([[0.0], err]), k=1)

        cum_spline = make_interp_spline(np.log(self.node_edges), cum, k=3)
        out = (cum_spline, float(cum[-1]), float(pole), err_spline)
        self._cum_cache[key] = out
        return out

    def bulk_from_zero(self, key: str, values: Array, rho: Array):
        """int_{u <= u(rho)} f dV with the pole extension, plus error estimate."""
        spline, _total, pole, err = self._cumulative(key, values)
        x = np.log(np.asarray(rho, dtype=float))
        return pole + spline(x), err(x)

    def bulk_outer(self, key: str, values: Array, rho: Array):
        """int_{u >= u(rho)} f dV truncated at the node span, plus tail estimate."""
        spline, total, _pole, err = self._cumulative(key, values)
        x = np.log(np.asarray(rho, dtype=float))
        outer = total - spline(x)
        # tail beyond the node span: extrapolate the last-decade decay power
        fA = values * self.node_A
        sel = self.node_s >= self.node_edges[-1] / 10.0
        tail = 0.0
        fsel = fA[sel]
        if np.all(fsel > 0):
            p = np.polyfit(np.log(self.node_s[sel]), np.log(fsel), 1)[0]
            if p < -1.01:
                tail = float(fsel[-1] * self.node_s[sel][-1] / (-p - 1.0))
            else:
                tail = np.inf
        else:
            tail = float(np.abs(fsel[-12:]).max() * self.node_edges[-1])
        return outer, err(np.full_like(x, np.log(self.node_edges[-1]))) , tail

    # -- boundary quantities ---------------------------------------------------
    def A_beta(self, levels: Array, beta: float) -> Array:
        rho = self.rho_of_level(levels)
        up = self.gp.du_of_r(rho)
        return levels ** (1 - self.n) * up ** (1 + beta) * self.area_of(rho)

    def area_of_level(self, levels: Array) -> Array:
        return self.area_of(self.rho_of_level(levels))

    def V_beta(self, levels: Array, beta: float) -> Array:
        self._build_nodes()
        vals = self.node_up ** (2 + beta) / self.node_u**2
        rho = self.rho_of_level(levels)
        bulk, _err = self.bulk_from_zero(f"V:{beta}", vals, rho)
        return levels ** (2 - self.n) * bulk


def _bump_radius(spec: ModelSpec) -> float:
    label = spec.profile.label if spec.profile is not None else ""
    if "r1=" in label:
        return float(label.split("r1=")[1].rstrip(")"))
    return 8.0


# ---------------------------------------------------------------------------
# Level quantities and the V-ODE
# ---------------------------------------------------------------------------

@dataclass
class LevelQuantities:
    r: float
    area: float
    A_beta: dict
    V_beta: dict
    dA_dr: dict


def a_v_profiles(geom: RadialGeometry, grid: Array, betas) -> list:
    """A_beta, V_beta, level area and dA/dr on a geometric level grid."""
    grid = np.asarray(grid, dtype=float)
    dlog = float(np.diff(np.log(grid)).mean())
    area = geom.area_of_level(grid)
    A = {b: geom.A_beta(grid, b) for b in betas}
    V = {b: geom.V_beta(grid, b) for b in betas}
    dA = {b: _log_derivative4(A[b], grid, dlog) for b in betas}
    out = []
    for k, r in enumerate(grid):
        out.append(
            LevelQuantities(
                r=float(r), area=float(area[k]),
                A_beta={b: float(A[b][k]) for b in betas},
                V_beta={b: float(V[b][k]) for b in betas},
                dA_dr={b: float(dA[b][k]) for b in betas},
            )
        )
    return out


@dataclass
class VOdeReport:
    beta: float
    grid: Array
    residual: Array        # |r V' - (2-n)V - A| / scale
    max_residual: float


def check_v_ode(geom: RadialGeometry, grid: Array, beta: float) -> VOdeReport:
    """r V_beta' = (2-n) V_beta + A_beta, with V' finite-differenced."""
    grid = np.asarray(grid, dtype=float)
    dlog = float(np.diff(np.log(grid)).mean())
    A = geom.A_beta(grid, beta)
    V = geom.V_beta(grid, beta)
    dV = _log_derivative4(V, grid, dlog)
    lhs = grid * dV
    rhs = (2 - geom.n) * V + A
    scale = np.maximum(np.abs(A), geom.omega)
    res = np.abs(lhs - rhs) / scale
    good = ~np.isnan(res)
    return VOdeReport(beta=beta, grid=grid[good], residual=res[good],
                      max_residual=float(np.nanmax(res)))


# ---------------------------------------------------------------------------
# Monotone reports
# ---------------------------------------------------------------------------

@dataclass
class MonotoneReport:
    beta: float
    grid: Array
    quantity_id: str              # A | A_minus_2n2V | g_combination | r3n_Aprime | umbilicity_functional
    values: Array
    lhs_derivative: Array
    rhs_integral: Array
    match_error: Array
    violations: list              # (r, magnitude) beyond per-level tolerance
    tolerance: Array
    extras: dict = field(default_factory=dict)

    @property
    def max_match_error(self) -> float:
        return float(np.nanmax(self.match_error)) if len(self.match_error) else 0.0


def _interior(grid: Array, pad: int = 2) -> slice:
    return slice(pad, len(grid) - pad)


def _monotone_violations(grid, values, direction, tol):
    """Grid points where the monotone direction fails beyond tolerance."""
    dv = np.diff(values) * direction
    bad = dv < -(tol[:-1] + tol[1:])
    return [(float(grid[k + 1]), float(-dv[k])) for k in np.nonzero(bad)[0]]


def _node_term(geom: RadialGeometry, beta: float, u_pow: float, kind: str) -> Array:
    geom._build_nodes()
    if kind == "curv":
        return geom.node_u**u_pow * geom.node_up**beta * (geom.node_II0sq + geom.node_ricnn)
    tb = tilde_beta(geom.n, beta).tilde_beta
    return (
        geom.node_u**u_pow
        * geom.node_up ** (beta - 2.0)
        * (tb * geom.node_Bn2 + (geom.n - 2) * geom.node_BnT2)
    )


def _fd_error_estimate(values: Array, grid: Array, dlog: float) -> Array:
    """|4th-order - 2nd-order| log-derivative as the FD truncation estimate."""
    d4 = _log_derivative4(values, grid, dlog)
    d2 = _log_derivative2(values, grid, dlog)
    est = np.abs(d4 - d2)
    est[np.isnan(est)] = np.nan
    return est


def mono_first(geom: RadialGeometry, grid: Array, beta: float) -> MonotoneReport:
    """(A_beta - 2(n-2) V_beta)' equals the bulk integral of curvature/B terms."""
    n = geom.n
    grid = np.asarray(grid, dtype=float)
    dlog = float(np.diff(np.log(grid)).mean())
    A = geom.A_beta(grid, beta)
    V = geom.V_beta(grid, beta)
    values = A - 2 * (n - 2) * V
    lhs = _log_derivative4(values, grid, dlog)

    rho = geom.rho_of_level(grid)
    c1, e1 = geom.bulk_from_zero(f"m1curv:{beta}", _node_term(geom, beta, 0.0, "curv"), rho)
    c2, e2 = geom.bulk_from_zero(f"m1B:{beta}", _node_term(geom, beta, -2.0, "B"), rho)
    rhs = beta * grid ** (1 - n) * (c1 + c2 / (4 * (n - 1)))

    scale = np.maximum.reduce([np.abs(lhs), np.abs(rhs), geom.omega / grid])
    match = np.abs(lhs - rhs) / scale
    fd_est = _fd_error_estimate(values, grid, dlog)
    tol = 10.0 * (beta * grid ** (1 - n) * (e1 + e2) + np.nan_to_num(fd_est, nan=0.0) * dlog * grid * 0 + np.abs(fd_est * 0))
    tol = 10.0 * (beta * grid ** (1 - n) * (e1 + e2)) + 10.0 * np.nan_to_num(fd_est, nan=0.0) * 0.05
    # monotone direction: values non-decreasing (rhs >= 0)
    inc_tol = tol * grid * dlog + 1e-12 * geom.omega
    violations = _monotone_violations(grid, values, +1.0, inc_tol)
    violations += [(float(r), float(-v)) for r, v in zip(grid, rhs) if v < -t
                   for t in [inc_tol[list(grid).index(r)]]]
    return MonotoneReport(
        beta=beta, grid=grid, quantity_id="A_minus_2n2V", values=values,
        lhs_derivative=lhs, rhs_integral=rhs, match_error=match,
        violations=violations, tolerance=tol,
    )
