"""Model spaces and example functions.

Every model is realized as a single chart:

  * euclidean(n)      Cartesian coordinates, identity metric;
  * cone(n, c)        polar chart dr^2 + c^2 r^2 g_sphere, 0 < c <= 1;
  * rot_sym(n, phi)   polar chart dr^2 + phi(r)^2 g_sphere;
  * warped(n, f)      polar chart dr^2 + f(r, theta)^2 g_sphere (FD metric);
  * product_r3_s1(L)  flat chart (x1, x2, x3, theta); the circle identification
                      lives in the distance evaluator, not the chart.

Polar charts use coordinates (r, theta_1, ..., theta_{n-1}) where the last
angle is azimuthal; the coordinate axis (sin theta_j = 0) is excluded by the
domain predicate.
"""

import configparser
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline, make_interp_spline

from .errors import (
    ConfigError,
    CutLocusPoint,
    InvalidProfile,
    NoRegularPoints,
)
from .tensor_core import (
    GRADIENT_FLOOR,
    MetricChart,
    ScalarField,
    gradient_batch,
    metric_jet,
    validate_positive_definite,
)

Array = np.ndarray

APEX_EXCLUSION = 1e-3    # pole/apex exclusion radius for polar charts
POLE_MARGIN = 0.02       # polar-angle margin excluding the coordinate axis
CUT_LOCUS_TOL = 1e-9     # tie tolerance between competing distance lifts


# ---------------------------------------------------------------------------
# Radial profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """Warp profile phi(r) with first and second derivatives."""

    phi: Callable[[Array], Array]
    dphi: Callable[[Array], Array]
    d2phi: Callable[[Array], Array]
    label: str = "profile"

    @classmethod
    def from_table(cls, r: Array, phi: Array, label: str = "table") -> "RadialProfile":
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if r.ndim != 1 or r.shape != phi.shape or np.any(np.diff(r) <= 0):
            raise InvalidProfile("profile table needs strictly increasing radii")
        spl = CubicSpline(r, phi)
        return cls(phi=spl, dphi=spl.derivative(1), d2phi=spl.derivative(2), label=label)


def concave_profile(c: float = 0.85, r_bump: float = 4.0) -> RadialProfile:
    """Concave warp with phi(0)=0, phi'(0)=1, phi'' <= 0 and an exactly conical tail.

    phi'(r) = c + (1-c) * psi(r / r_bump) with the smooth bump
    psi(t) = exp(1 - 1/(1 - t^2)) on [0, 1), psi = 0 beyond. phi' decreases
    from 1 to c and is constant past r_bump, so the metric is an exact
    (shifted-apex) cone there.
    """
    if not 0.0 < c < 1.0:
        raise InvalidProfile(f"concave profile needs 0 < c < 1, got {c}")

    def psi(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        ti = t[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti**2))
        return out

    def dpsi(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        ti = t[inside]
        out[inside] = -2.0 * ti / (1.0 - ti**2) ** 2 * np.exp(1.0 - 1.0 / (1.0 - ti**2))
        return out

    # Cumulative integral of psi on [0, 1], tabulated once on a fine grid and
    # interpolated with a quintic spline; derivatives of phi use the exact
    # formulas, so only phi's value passes through the spline.
    tgrid = np.linspace(0.0, 1.0, 4001)
    nodes, weights = np.polynomial.legendre.leggauss(12)
    mid = 0.5 * (tgrid[:-1] + tgrid[1:])
    half = 0.5 * np.diff(tgrid)
    cell = (psi(mid[:, None] + half[:, None] * nodes[None, :]) * weights[None, :]).sum(axis=1)
    Psi = np.concatenate([[0.0], np.cumsum(cell * half)])
    psi_int = make_interp_spline(tgrid, Psi, k=5)
    Psi_total = float(Psi[-1])

    def phi(r):
        r = np.asarray(r, dtype=float)
        t = np.minimum(np.abs(r) / r_bump, 1.0)
        bump = np.where(t < 1.0, psi_int(t), Psi_total)
        return c * r + (1.0 - c) * r_bump * np.sign(r) * bump

    def dphi(r):
        r = np.asarray(r, dtype=float)
        return c + (1.0 - c) * psi(r / r_bump)

    def d2phi(r):
        r = np.asarray(r, dtype=float)
        return (1.0 - c) / r_bump * dpsi(r / r_bump)

    return RadialProfile(phi=phi, dphi=dphi, d2phi=d2phi, label=f"concave(c={c},r1={r_bump})")


def check_profile(profile: RadialProfile, r_max: float = 100.0, require_concave: bool = True) -> None:
    """Validate the pole conditions and (optionally) phi'' <= 0 on a sample grid."""
    eps = 1e-7
    r = np.geomspace(eps, r_max, 2000)
    phi = profile.phi(r)
    if abs(profile.phi(np.array([eps]))[0]) > 10 * eps:
        raise InvalidProfile("phi(0) != 0")
    if abs(profile.dphi(np.array([eps]))[0] - 1.0) > 1e-5:
        raise InvalidProfile("phi'(0) != 1")
    if np.any(phi <= 0):
        raise InvalidProfile("phi must be positive for r > 0")
    if require_concave and np.any(profile.d2phi(r) > 1e-12):
        raise InvalidProfile("phi'' > 0 somewhere: model would have negative radial Ricci")


# ---------------------------------------------------------------------------
# Model specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """Parameters of one model space."""

    kind: str                      # euclidean | cone | rot_sym | warped | product_r3_s1
    n: int
    c: Optional[float] = None
    L: Optional[float] = None
    profile: Optional[RadialProfile] = None
    warp: Optional[Callable] = None    # f(r, theta) for warped models
    r_min: float = APEX_EXCLUSION
    label: str = ""

    def __post_init__(self):
        if self.kind == "cone":
            if self.c is None or not 0.0 < self.c <= 1.0:
                raise InvalidProfile(f"cone parameter must satisfy 0 < c <= 1, got {self.c}")
        if self.kind == "product_r3_s1":
            if self.L is None or self.L <= 0:
                raise InvalidProfile("product_r3_s1 needs a positive circle length L")
            if self.n != 4:
                raise InvalidProfile("product_r3_s1 is 4-dimensional")
        if self.kind == "rot_sym" and self.profile is None:
            raise InvalidProfile("rot_sym spec needs a radial profile")
        if self.kind == "warped" and self.warp is None:
            raise InvalidProfile("warped spec needs a warp function f(r, theta)")

    def describe(self) -> str:
        if self.kind == "euclidean":
            return f"euclidean:{self.n}"
        if self.kind == "cone":
            return f"cone:{self.n}:{self.c}"
        if self.kind == "product_r3_s1":
            return f"product_r3_s1:{self.L}"
        if self.kind == "rot_sym":
            return f"rot_sym:{self.n}:{self.profile.label}"
        return f"{self.kind}:{self.n}:{self.label or 'custom'}"


def _sphere_factors(theta: Array, n_sphere: int) -> Array:
    """m_k = prod_{j<k} sin^2(theta_j) for k = 1..n_sphere, shape (m, n_sphere)."""
    m = theta.shape[0]
    out = np.ones((m, n_sphere))
    acc = np.ones(m)
    for k in range(1, n_sphere):
        acc = acc * np.sin(theta[:, k - 1]) ** 2
        out[:, k] = acc
    return out


def _polar_chart(spec: ModelSpec, phi, dphi, d2phi, tag: str) -> MetricChart:
    """Chart dr^2 + phi(r)^2 g_sphere with analytic metric derivatives."""
    n = spec.n
    ns = n - 1  # number of sphere coordinates

    def metric(pts):
        pts = np.atleast_2d(pts)
        r = pts[:, 0]
        mk = _sphere_factors(pts[:, 1:], ns)
        g = np.zeros((pts.shape[0], n, n))
        g[:, 0, 0] = 1.0
        p2 = phi(r) ** 2
        for k in range(1, n):
            g[:, k, k] = p2 * mk[:, k - 1]
        return g

    def dmetric(pts):
        pts = np.atleast_2d(pts)
        m = pts.shape[0]
        r = pts[:, 0]
        th = pts[:, 1:]
        mk = _sphere_factors(th, ns)
        p = phi(r)
        dp = dphi(r)
        dg = np.zeros((m, n, n, n))
        cot = 1.0 / np.tan(th[:, : ns - 1]) if ns > 1 else np.zeros((m, 0))
        for k in range(1, n):
            dg[:, 0, k, k] = 2.0 * p * dp * mk[:, k - 1]
            for j in range(1, k):  # theta_j with j < k carries sin^2 factors
                dg[:, j, k, k] = p**2 * 2.0 * cot[:, j - 1] * mk[:, k - 1]
        return dg

    def d2metric(pts):
        pts = np.atleast_2d(pts)
        m = pts.shape[0]
        r = pts[:, 0]
        th = pts[:, 1:]
        mk = _sphere_factors(th, ns)
        p = phi(r)
        dp = dphi(r)
        ddp = d2phi(r)
        d2 = np.zeros((m, n, n, n, n))
        if ns > 1:
            s2 = np.sin(th[:, : ns - 1]) ** 2
            cot = np.cos(th[:, : ns - 1]) / np.sin(th[:, : ns - 1])
        for k in range(1, n):
            d2[:, 0, 0, k, k] = 2.0 * (dp**2 + p * ddp) * mk[:, k - 1]
            for j in range(1, k):
                rth = 2.0 * p * dp * 2.0 * cot[:, j - 1] * mk[:, k - 1]
                d2[:, 0, j, k, k] = rth
                d2[:, j, 0, k, k] = rth
                for i in range(1, k):
                    if i == j:
                        d2[:, j, j, k, k] = p**2 * (4.0 * cot[:, j - 1] ** 2 - 2.0 / s2[:, j - 1]) * mk[:, k - 1]
                    else:
                        d2[:, i, j, k, k] = p**2 * 4.0 * cot[:, i - 1] * cot[:, j - 1] * mk[:, k - 1]
        return d2

    def domain(pts):
        pts = np.atleast_2d(pts)
        ok = pts[:, 0] > spec.r_min
        for j in range(1, n - 1):  # polar angles only; the azimuth is free
            ok &= (pts[:, j] > POLE_MARGIN) & (pts[:, j] < np.pi - POLE_MARGIN)
        return ok

    def coord_scales(pts):
        pts = np.atleast_2d(pts)
        s = np.ones_like(pts)
        s[:, 0] = np.maximum(1.0, np.abs(pts[:, 0]))
        return s

    lo = np.array([spec.r_min * 5] + [0.1] * (n - 2) + [0.0])
    hi = np.array([8.0] + [np.pi - 0.1] * (n - 2) + [2 * np.pi])
    return MetricChart(
        dim=n,
        metric=metric,
        dmetric=dmetric,
        d2metric=d2metric,
        domain=domain,
        bounds=(lo, hi),
        coord_scales=coord_scales,
        structure_tag=tag,
    )


def build_chart(spec: ModelSpec) -> MetricChart:
    """Realize a model spec as a chart (validating profile and metric)."""
    n = spec.n
    if spec.kind == "euclidean":
        def metric(pts):
            pts = np.atleast_2d(pts)
            return np.broadcast_to(np.eye(n), (pts.shape[0], n, n)).copy()

        zero3 = lambda pts: np.zeros((np.atleast_2d(pts).shape[0], n, n, n))
        zero4 = lambda pts: np.zeros((np.atleast_2d(pts).shape[0], n, n, n, n))
        return MetricChart(
            dim=n, metric=metric, dmetric=zero3, d2metric=zero4,
            bounds=(-6 * np.ones(n), 6 * np.ones(n)), structure_tag="euclidean",
        )

    if spec.kind == "cone":
        c = spec.c
        chart = _polar_chart(
            spec,
            phi=lambda r: c * r,
            dphi=lambda r: np.full_like(np.asarray(r, dtype=float), c),
            d2phi=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
            tag="rotationally_symmetric",
        )
        return chart

    if spec.kind == "rot_sym":
        check_profile(spec.profile)
        return _polar_chart(
            spec, spec.profile.phi, spec.profile.dphi, spec.profile.d2phi,
            tag="rotationally_symmetric",
        )

    if spec.kind == "warped":
        f = spec.warp
        ns = n - 1

        def metric(pts):
            pts = np.atleast_2d(pts)
            mk = _sphere_factors(pts[:, 1:], ns)
            g = np.zeros((pts.shape[0], n, n))
            g[:, 0, 0] = 1.0
            f2 = f(pts[:, 0], pts[:, 1]) ** 2
            for k in range(1, n):
                g[:, k, k] = f2 * mk[:, k - 1]
            return g

        def domain(pts):
            pts = np.atleast_2d(pts)
            ok = pts[:, 0] > spec.r_min
            for j in range(1, n - 1):
                ok &= (pts[:, j] > POLE_MARGIN) & (pts[:, j] < np.pi - POLE_MARGIN)
            return ok

        def coord_scales(pts):
            pts = np.atleast_2d(pts)
            s = np.ones_like(pts)
            s[:, 0] = np.maximum(1.0, np.abs(pts[:, 0]))
            return s

        lo = np.array([spec.r_min * 5] + [0.1] * (n - 2) + [0.0])
        hi = np.array([8.0] + [np.pi - 0.1] * (n - 2) + [2 * np.pi])
        chart = MetricChart(
            dim=n, metric=metric, domain=domain, bounds=(lo, hi),
            coord_scales=coord_scales, structure_tag="warped_product",
        )
        validate_positive_definite(chart)
        return chart

    if spec.kind == "product_r3_s1":
        def metric(pts):
            pts = np.atleast_2d(pts)
            return np.broadcast_to(np.eye(4), (pts.shape[0], 4, 4)).copy()

        zero3 = lambda pts: np.zeros((np.atleast_2d(pts).shape[0], 4, 4, 4))
        zero4 = lambda pts: np.zeros((np.atleast_2d(pts).shape[0], 4, 4, 4, 4))
        lo = np.array([-8.0, -8.0, -8.0, -spec.L / 2])
        hi = np.array([8.0, 8.0, 8.0, spec.L / 2])
        return MetricChart(
            dim=4, metric=metric, dmetric=zero3, d2metric=zero4,
            bounds=(lo, hi), structure_tag="flat_product",
        )

    raise ConfigError(f"unknown model kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Example functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExampleFunction:
    """A positive proper example function together with sampling metadata."""

    id: str
    field: ScalarField
    # level_map(r) is the u-level at scale parameter r used in the umbilicity
    # study (sqrt(r) for the quartic-root example, identity otherwise).
    level_map: Callable[[float], float] = lambda r: r

    def __call__(self, pts: Array) -> Array:
        return self.field(pts)


def _canonical_angle(theta: Array, L: float) -> Array:
    """Reduce the circle coordinate to the fundamental lift in (-L/2, L/2]."""
    t = theta - L * np.round(theta / L)
    # round() sends exactly L/2 to -L/2; fold back for determinism
    t = np.where(t <= -L / 2, t + L, t)
    return t


def distance_u2(spec: ModelSpec, p: Array) -> float:
    """Quotient distance from the origin on R^3 x S^1 (single point).

    Raises CutLocusPoint when the two nearest circle lifts tie within
    tolerance; callers must resample.
    """
    p = np.asarray(p, dtype=float)
    rho2 = float(np.dot(p[:3], p[:3]))
    ks = np.arange(-3, 4)
    lifts = np.sqrt(rho2 + (p[3] + ks * spec.L) ** 2)
    order = np.sort(lifts)
    if order[1] - order[0] < CUT_LOCUS_TOL:
        raise CutLocusPoint(f"two minimizing lifts at {p} differ by {order[1]-order[0]:.2e}")
    return float(order[0])


def example_function(example_id: str, spec: ModelSpec) -> ExampleFunction:
    if example_id == "ex1_shifted_sphere":
        if spec.kind != "euclidean":
            raise ConfigError("ex1_shifted_sphere lives on a euclidean chart")

        def fn(pts):
            pts = np.atleast_2d(pts)
            w = (pts**2).sum(axis=1) + pts[:, 0] ** 2
            return np.sqrt(w) - pts[:, 0]

        def grad(pts):
            pts = np.atleast_2d(pts)
            w = (pts**2).sum(axis=1) + pts[:, 0] ** 2
            g = pts / np.sqrt(w)[:, None]
            g[:, 0] += pts[:, 0] / np.sqrt(w) - 1.0
            return g

        return ExampleFunction(example_id, ScalarField(fn, grad, name="ex1"))

    if example_id == "ex2_u1":
        if spec.kind != "product_r3_s1":
            raise ConfigError("ex2_u1 lives on the R^3 x S^1 chart")

        def fn(pts):
            pts = np.atleast_2d(pts)
            return ((pts[:, :3] ** 2).sum(axis=1)) ** 0.25

        def grad(pts):
            pts = np.atleast_2d(pts)
            rho2 = (pts[:, :3] ** 2).sum(axis=1)
            g = np.zeros_like(pts)
            g[:, :3] = pts[:, :3] * (0.5 * rho2 ** (-0.75))[:, None]
            return g

        return ExampleFunction(example_id, ScalarField(fn, grad, name="u1"), level_map=np.sqrt)

    if example_id == "ex2_u2":
        if spec.kind != "product_r3_s1":
            raise ConfigError("ex2_u2 lives on the R^3 x S^1 chart")
        L = spec.L

        def fn(pts):
            pts = np.atleast_2d(pts)
            t = _canonical_angle(pts[:, 3], L)
            return np.sqrt((pts[:, :3] ** 2).sum(axis=1) + t**2)

        def grad(pts):
            pts = np.atleast_2d(pts)
            t = _canonical_angle(pts[:, 3], L)
            u = np.sqrt((pts[:, :3] ** 2).sum(axis=1) + t**2)
            g = np.zeros_like(pts)
            g[:, :3] = pts[:, :3] / u[:, None]
            g[:, 3] = t / u
            return g

        return ExampleFunction(example_id, ScalarField(fn, grad, name="u2"))

    if example_id == "radial_u":
        return ExampleFunction(example_id, radial_distance_field(spec))

    raise ConfigError(f"unknown example function {example_id!r}")


def radial_distance_field(spec: ModelSpec) -> ScalarField:
    """The analytic radial u with the Green's-function normalization.

    Euclidean: u = |x|. Cone: u = c^{(n-1)/(n-2)} r, the exact radial solution
    of the standing equation with u/r -> 1 at the apex... of the smooth model
    it approximates; its gradient is the constant c^{(n-1)/(n-2)}.
    """
    if spec.kind == "euclidean":
        def fn(pts):
            pts = np.atleast_2d(pts)
            return np.linalg.norm(pts, axis=1)

        def grad(pts):
            pts = np.atleast_2d(pts)
            return pts / np.linalg.norm(pts, axis=1)[:, None]

        return ScalarField(fn, grad, name="|x|")

    if spec.kind == "cone":
        kappa = spec.c ** ((spec.n - 1) / (spec.n - 2))

        def fn(pts):
            return kappa * np.atleast_2d(pts)[:, 0]

        def grad(pts):
            pts = np.atleast_2d(pts)
            g = np.zeros_like(pts)
            g[:, 0] = kappa
            return g

        return ScalarField(fn, grad, name="kappa*r")

    raise ConfigError(f"no closed-form radial u for kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Curvature sign and sampling utilities
# ---------------------------------------------------------------------------

@dataclass
class RicciReport:
    min_eigenvalue: float
    worst_point: Array
    passed: bool
    tol: float
    samples: int


def ricci_nonneg_check(chart: MetricChart, sample_count: int = 200, seed: int = 0,
                       tol: float = 1e-8) -> RicciReport:
    """Smallest g-eigenvalue of the Ricci tensor over sampled points."""
    from .tensor_core import ricci_batch  # local import to avoid cycle at module load

    rng = np.random.default_rng(seed)
    lo, hi = (np.asarray(b, dtype=float) for b in chart.bounds)
    pts = rng.uniform(lo, hi, size=(4 * sample_count, chart.dim))
    pts = pts[chart.contains(pts)][:sample_count]
    ric = ricci_batch(chart, pts)
    g = np.asarray(chart.metric(pts), dtype=float)
    chol = np.linalg.cholesky(g)
    inv_chol = np.linalg.inv(chol)
    sym = np.einsum("mia,mab,mjb->mij", inv_chol, ric, inv_chol)
    eig = np.linalg.eigvalsh(sym)
    idx = np.unravel_index(np.argmin(eig), eig.shape)
    lam = float(eig[idx])
    scale = max(1.0, float(np.abs(eig).max()))
    return RicciReport(
        min_eigenvalue=lam,
        worst_point=pts[idx[0]],
        passed=lam >= -tol * scale,
        tol=tol * scale,
        samples=len(pts),
    )


def _ray_through(chart: MetricChart, direction_seed: Array) -> Callable[[Array], Array]:
    """Parameterized ray t -> point used by the level-set sampler."""
    if chart.structure_tag in ("euclidean", "flat_product"):
        d = direction_seed / np.linalg.norm(direction_seed)
        return lambda t: np.outer(np.atleast_1d(t), d)
    # polar charts: walk in the radial coordinate at fixed angles
    lo, hi = (np.asarray(b, dtype=float) for b in chart.bounds)
    angles = lo[1:] + (hi[1:] - lo[1:]) * (0.5 + 0.49 * np.tanh(direction_seed[1:]))

    def ray(t):
        t = np.atleast_1d(t)
        pts = np.repeat(angles[None, :], len(t), axis=0)
        return np.concatenate([t[:, None], pts], axis=1)

    return ray


def regular_point_sampler(chart: MetricChart, u, level: float, count: int,
                          seed: int = 0, gradient_floor: float = GRADIENT_FLOOR,
                          max_tries: int = 200) -> Array:
    """Points p with |u(p) - level| < 1e-10 and |grad u|(p) above the floor.

    Root-finds u = level along random rays; samples that land on a cut locus
    or below the gradient floor are discarded and redrawn.
    """
    from scipy.optimize import brentq

    from .geom_quantities import gradient_norm  # local import to avoid cycle

    u = u.field if isinstance(u, ExampleFunction) else u
    rng = np.random.default_rng(seed)
    out = []
    tries = 0
    while len(out) < count and tries < max_tries * count:
        tries += 1
        ray = _ray_through(chart, rng.normal(size=chart.dim))
        f = lambda t: float(u(ray(np.array([t])))[0]) - level
        t_lo, t_hi = 1e-8, 1.0
        for _ in range(200):
            if f(t_hi) > 0:
                break
            t_hi *= 1.9
        else:
            continue
        if chart.structure_tag not in ("euclidean", "flat_product"):
            t_lo = max(t_lo, chart.bounds[0][0])
        if f(t_lo) >= 0:
            continue
        t_star = brentq(f, t_lo, t_hi, xtol=1e-15, rtol=8.9e-16)
        p = ray(np.array([t_star]))[0]
        if abs(float(u(p[None, :])[0]) - level) > 1e-10 * max(1.0, abs(level)):
            continue
        if not chart.contains(p[None, :])[0]:
            continue
        try:
            gn = float(gradient_norm(chart, u, p[None, :])[0])
        except CutLocusPoint:
            continue
        if gn <= gradient_floor:
            continue
        out.append(p)
    if len(out) < count:
        raise NoRegularPoints(
            f"found {len(out)}/{count} regular points at level {level}"
        )
    return np.array(out)


# ---------------------------------------------------------------------------
# Cone rigidity (warped-product) checks
# ---------------------------------------------------------------------------

@dataclass
class RigidityReport:
    max_log_derivative_residual: float   # max |r d_r log f - 1|
    max_profile_deviation: float         # max_r |f(r,.)/r - mean_r f/r| per ray
    rays: int


def cone_rigidity_check(chart: MetricChart, r_values: Array, thetas: Array,
                        h: float = 1e-5) -> RigidityReport:
    """Check the cone characterization on a warped chart.

    Extracts f = sqrt(g_{theta1 theta1}) from the metric, finite-differences
    log f in r, and reports (i) the worst residual of r * d_r log f = 1 and
    (ii) how far f(r)/r is from constant along each theta-ray.
    """
    r_values = np.asarray(r_values, dtype=float)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    n = chart.dim

    def f_of(r, th):
        pts = np.zeros((len(r), n))
        pts[:, 0] = r
        pts[:, 1] = th
        if n > 2:
            pts[:, 2:] = np.pi / 2  # away from the axis; g_{11} has no sin factor anyway
        g = np.asarray(chart.metric(pts), dtype=float)
        return np.sqrt(g[:, 1, 1])

    worst_res = 0.0
    worst_dev = 0.0
    for th in thetas:
        f0 = f_of(r_values, th)
        fp = f_of(r_values * (1 + h), th)
        fm = f_of(r_values * (1 - h), th)
        dlogf = (np.log(fp) - np.log(fm)) / (2 * h)  # = r d_r log f
        worst_res = max(worst_res, float(np.abs(dlogf - 1.0).max()))
        ratio = f0 / r_values
        worst_dev = max(worst_dev, float(np.abs(ratio - ratio.mean()).max()))
    return RigidityReport(worst_res, worst_dev, rays=len(thetas))


# ---------------------------------------------------------------------------
# Config-file loading
# ---------------------------------------------------------------------------

def parse_manifold(text: str) -> ModelSpec:
    """Parse a manifold descriptor like 'cone:3:0.9' or '@model.ini'."""
    if text.startswith("@"):
        return load_model_spec(text[1:])
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind == "euclidean":
            return ModelSpec(kind="euclidean", n=int(parts[1]))
        if kind == "cone":
            return ModelSpec(kind="cone", n=int(parts[1]), c=float(parts[2]))
        if kind == "product_r3_s1":
            return ModelSpec(kind="product_r3_s1", n=4, L=float(parts[1]))
        if kind == "rot_sym":
            n = int(parts[1])
            if len(parts) > 2 and parts[2] != "concave":
                raise ConfigError(f"unknown rot_sym family {parts[2]!r}")
            c = float(parts[3]) if len(parts) > 3 else 0.85
            r_bump = float(parts[4]) if len(parts) > 4 else 4.0
            return ModelSpec(kind="rot_sym", n=n, c=c, profile=concave_profile(c, r_bump))
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad manifold descriptor {text!r}: {exc}") from exc
    raise ConfigError(f"unknown manifold kind {kind!r}")


def load_model_spec(path: str) -> ModelSpec:
    """Read a model spec from an INI-style key-value document."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read model file {path!r}")
    if "manifold" not in cp:
        raise ConfigError(f"{path}: missing [manifold] section")
    sec = cp["manifold"]
    kind = sec.get("kind")
    try:
        n = sec.getint("n", fallback=4 if kind == "product_r3_s1" else None)
        if kind == "euclidean":
            return ModelSpec(kind=kind, n=n)
        if kind == "cone":
            return ModelSpec(kind=kind, n=n, c=sec.getfloat("c"))
        if kind == "product_r3_s1":
            return ModelSpec(kind=kind, n=4, L=sec.getfloat("L"))
        if kind == "rot_sym":
            if "profile" in cp:
                r = np.array([float(x) for x in cp["profile"]["r"].split(",")])
                phi = np.array([float(x) for x in cp["profile"]["phi"].split(",")])
                prof = RadialProfile.from_table(r, phi)
            else:
                prof = concave_profile(sec.getfloat("c", fallback=0.85),
                                       sec.getfloat("r_bump", fallback=4.0))
            return ModelSpec(kind=kind, n=n, profile=prof)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid model spec: {exc}") from exc
    raise ConfigError(f"{path}: unknown manifold kind {kind!r}")
