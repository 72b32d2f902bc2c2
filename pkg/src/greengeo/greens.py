"""Green's functions on rotationally symmetric models.

On a model dr^2 + phi(r)^2 g_sphere the positive Green's function with pole at
the center is the radial quadrature

    G(r) = (n-2) * omega_{n-1} * integral_r^inf ds / A(s),      A(s) = omega_{n-1} phi(s)^{n-1},

normalized so that Euclidean space gives G = r^{2-n} exactly. The derived
function u = G^{1/(2-n)} is increasing, proper and satisfies u/r -> 1 at a
smooth pole; its radial derivative obeys u' = omega_{n-1} u^{n-1} / A.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import InvalidProfile, ParabolicManifold, TailNotConical
from .model_manifolds import ModelSpec
from .tensor_core import MetricChart, ScalarField, laplacian_batch

Array = np.ndarray

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def unit_sphere_area(n: int) -> float:
    """Vol(S^{n-1}), the boundary area of the unit ball in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _panel_integrals(fn: Callable[[Array], Array], edges: Array) -> Array:
    """Integral of fn over each [edges_i, edges_{i+1}] cell, log-substituted."""
    t = np.log(edges)
    mid = 0.5 * (t[:-1] + t[1:])
    half = 0.5 * np.diff(t)
    tt = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    s = np.exp(tt)
    vals = fn(s.ravel()).reshape(s.shape) * s  # ds = s dt
    return (vals * _GL_WEIGHTS[None, :]).sum(axis=1) * half


def area_profile(spec: ModelSpec, grid: Array) -> Array:
    """Geodesic-sphere area A(r) on euclidean / cone / rot_sym models."""
    grid = np.asarray(grid, dtype=float)
    omega = unit_sphere_area(spec.n)
    if spec.kind == "euclidean":
        return omega * grid ** (spec.n - 1)
    if spec.kind == "cone":
        return omega * (spec.c * grid) ** (spec.n - 1)
    if spec.kind == "rot_sym":
        phi = spec.profile.phi(grid)
        if np.any(phi <= 0):
            raise InvalidProfile("phi must be positive on the grid")
        return omega * phi ** (spec.n - 1)
    raise InvalidProfile(f"no radial area profile for kind {spec.kind!r}")


def _area_fn(spec: ModelSpec) -> Callable[[Array], Array]:
    omega = unit_sphere_area(spec.n)
    if spec.kind == "euclidean":
        return lambda s: omega * np.asarray(s, dtype=float) ** (spec.n - 1)
    if spec.kind == "cone":
        return lambda s: omega * (spec.c * np.asarray(s, dtype=float)) ** (spec.n - 1)
    if spec.kind == "rot_sym":
        return lambda s: omega * spec.profile.phi(np.asarray(s, dtype=float)) ** (spec.n - 1)
    raise InvalidProfile(f"no radial area profile for kind {spec.kind!r}")


def _conical_tail_coefficient(radii: Array, area: Array, n: int, slope_tol: float = 1e-3):
    """Fit A ~ a * s^{n-1} on the last grid decade; reject unstable slopes."""
    top = radii[-1]
    sel = radii >= top / 10.0
    x = np.log(radii[sel])
    y = np.log(area[sel])
    slope, intercept = np.polyfit(x, y, 1)
    if abs(slope - (n - 1)) > slope_tol:
        raise TailNotConical(
            f"log-area slope {slope:.6f} on the last decade is not within "
            f"{slope_tol} of n-1 = {n - 1}"
        )
    return float(np.exp(intercept)), float(slope)


@dataclass
class GreensProfile:
    """Radial arrays (r, A, G, u, u') for one rotationally symmetric model."""

    n: int
    radii: Array
    area: Array
    G: Array
    u: Array
    du: Array
    tail_coefficient: float

    def __post_init__(self):
        t = np.log(self.radii)
        self._logu = make_interp_spline(t, np.log(self.u), k=5)
        self._dlogu = self._logu.derivative(1)
        self._r_of_u = make_interp_spline(np.log(self.u), t, k=5)

    # -- radial evaluators ---------------------------------------------------
    def u_of_r(self, r: Array) -> Array:
        return np.exp(self._logu(np.log(np.asarray(r, dtype=float))))

    def du_of_r(self, r: Array) -> Array:
        r = np.asarray(r, dtype=float)
        return self.u_of_r(r) * self._dlogu(np.log(r)) / r

    def r_of_u(self, u: Array) -> Array:
        return np.exp(self._r_of_u(np.log(np.asarray(u, dtype=float))))

    def g_of_r(self, r: Array) -> Array:
        return self.u_of_r(r) ** (2 - self.n)

    def scalar_field(self, chart: MetricChart) -> ScalarField:
        """u as a chart scalar field (radial coordinate or Cartesian radius)."""
        if chart.structure_tag in ("euclidean", "flat_product"):
            def fn(pts):
                return self.u_of_r(np.linalg.norm(np.atleast_2d(pts), axis=1))

            def grad(pts):
                pts = np.atleast_2d(pts)
                r = np.linalg.norm(pts, axis=1)
                return pts * (self.du_of_r(r) / r)[:, None]
        else:
            def fn(pts):
                return self.u_of_r(np.atleast_2d(pts)[:, 0])

            def grad(pts):
                pts = np.atleast_2d(pts)
                g = np.zeros_like(pts)
                g[:, 0] = self.du_of_r(pts[:, 0])
                return g

        return ScalarField(fn=fn, grad=grad, name="greens_u")

    def to_csv(self, path: str, header_lines: Optional[list] = None) -> None:
        with open(path, "w") as fh:
            for line in header_lines or []:
                fh.write(f"# {line}\n")
            fh.write("r,A,G,u,du\n")
            for row in zip(self.radii, self.area, self.G, self.u, self.du):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def greens_function(radii: Array, area: Array, n: int,
                    area_fn: Optional[Callable[[Array], Array]] = None) -> GreensProfile:
    """Build the Green's profile from an area profile by tail-corrected quadrature.

    When area_fn is omitted the profile is interpolated with a quintic
    log-log spline between grid points.
    """
    if n <= 2:
        raise InvalidProfile("Green's construction requires dimension n > 2")
    radii = np.asarray(radii, dtype=float)
    area = np.asarray(area, dtype=float)
    if np.any(np.diff(radii) <= 0) or np.any(area <= 0):
        raise InvalidProfile("need an increasing radius grid with positive areas")

    omega = unit_sphere_area(n)
    a_tail, _slope = _conical_tail_coefficient(radii, area, n)

    if area_fn is None:
        spl = make_interp_spline(np.log(radii), np.log(area), k=5)
        area_fn = lambda s: np.exp(spl(np.log(np.asarray(s, dtype=float))))

    inv_area = lambda s: 1.0 / area_fn(s)
    cells = _panel_integrals(inv_area, radii)
    tail = radii[-1] ** (2 - n) / (a_tail * (n - 2))
    if not np.isfinite(tail) or tail < 0:
        raise ParabolicManifold("tail integral of 1/A does not converge")
    cumulative = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]]) + tail
    G = (n - 2) * omega * cumulative
    u = G ** (1.0 / (2 - n))
    du = omega * u ** (n - 1) / area
    return GreensProfile(n=n, radii=radii, area=area, G=G, u=u, du=du,
                         tail_coefficient=a_tail)


def greens_profile(spec: ModelSpec, r_min: float = 1e-4, r_max: float = 1e6,
                   points: int = 8192) -> GreensProfile:
    """Green's profile of a model spec on a log grid with analytic area."""
    radii = np.geomspace(r_min, r_max, points)
    fn = _area_fn(spec)
    return greens_function(radii, fn(radii), spec.n, area_fn=fn)


# ---------------------------------------------------------------------------
# Nonparabolicity
# ---------------------------------------------------------------------------

@dataclass
class NonparabolicityReport:
    integral_estimate: Array   # estimates at the probe radii
    probe_radii: Array
    converged: bool
    tail_bound: float


def nonparabolic_check(spec: ModelSpec, r_max: float = 3e7, points: int = 4096) -> NonparabolicityReport:
    """Estimate integral_1^inf r / Vol(B_r) dr with a conical tail bound.

    The integral is accumulated numerically up to r_max; the remaining tail is
    bounded through the fitted conical behavior Vol(B_r) ~ a r^n / n. The
    check converges when that bound drops below 1e-6 of the estimate.
    """
    fn = _area_fn(spec)
    n = spec.n
    grid = np.geomspace(1e-4, r_max, points)
    vol_cells = _panel_integrals(fn, grid)
    vol = np.concatenate([[0.0], np.cumsum(vol_cells)])  # Vol(B_r) on the grid

    vol_spline = make_interp_spline(np.log(grid[1:]), np.log(vol[1:]), k=3)
    vol_fn = lambda s: np.exp(vol_spline(np.log(np.asarray(s, dtype=float))))

    probe = grid[grid >= 1.0]
    integrand = lambda s: np.asarray(s, dtype=float) / vol_fn(s)
    cells = _panel_integrals(integrand, probe)
    estimates = np.concatenate([[0.0], np.cumsum(cells)])

    a_tail, _ = _conical_tail_coefficient(grid, fn(grid), n)
    tail_bound = float(n * probe[-1] ** (2 - n) / (a_tail * (n - 2)))
    if not np.isfinite(tail_bound) or tail_bound < 0:
        raise ParabolicManifold("conical tail of r/Vol(B_r) does not converge")
    total = float(estimates[-1])
    return NonparabolicityReport(
        integral_estimate=estimates,
        probe_radii=probe,
        converged=tail_bound < 1e-6 * total,
        tail_bound=tail_bound,
    )


# ---------------------------------------------------------------------------
# Harmonicity residuals of the interpolated u
# ---------------------------------------------------------------------------

@dataclass
class HarmonicityResidual:
    """Relative residuals of the three equivalent forms of the standing equation."""

    power_form: float      # Delta u^2 = 2n |grad u|^2
    quotient_form: float   # Delta u = (n-1) |grad u|^2 / u
    harmonic_form: float   # Delta u^{2-n} = 0


def harmonicity_residual(chart: MetricChart, gp: GreensProfile, p: Array,
                         h: float = 1e-4) -> HarmonicityResidual:
    """Evaluate all three standing-equation forms at p through the chart machinery."""
    from .geom_quantities import gradient_norm

    n = gp.n
    u = gp.scalar_field(chart)
    pts = np.asarray(p, dtype=float)[None, :]
    uval = float(u(pts)[0])
    gn = float(gradient_norm(chart, u, pts, h=h)[0])

    u2 = ScalarField(lambda q: u(q) ** 2, grad=None if u.grad is None else
                     (lambda q: 2.0 * u(q)[:, None] * u.grad(q)), name="u^2")
    upow = ScalarField(lambda q: u(q) ** (2 - n), grad=None if u.grad is None else
                       (lambda q: (2 - n) * (u(q) ** (1 - n))[:, None] * u.grad(q)),
                       name="u^(2-n)")

    lap_u2 = float(laplacian_batch(chart, u2, pts, h=h)[0])
    lap_u = float(laplacian_batch(chart, u, pts, h=h)[0])
    lap_upow = float(laplacian_batch(chart, upow, pts, h=h)[0])

    rhs2 = 2 * n * gn**2
    rhs1 = (n - 1) * gn**2 / uval
    scale3 = abs((n - 2) * uval ** (1 - n)) * max(abs(lap_u), abs(rhs1))
    return HarmonicityResidual(
        power_form=abs(lap_u2 - rhs2) / max(abs(lap_u2), abs(rhs2), 1e-14),
        quotient_form=abs(lap_u - rhs1) / max(abs(lap_u), abs(rhs1), 1e-14),
        harmonic_form=abs(lap_upow) / max(scale3, 1e-14),
    )
