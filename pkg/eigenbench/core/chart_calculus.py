"""
Finite-difference Riemannian calculus on a single chart.

Metric families are callables (t, x, y) -> 2x2 SPD matrix; scalars are
callables (x, y) -> float, vector fields (x, y) -> contravariant components and
tensor fields (x, y) -> 2x2 symmetric matrix. Every derivative is a central
difference, so each check_* residual is O(h^2) in the steps used.
"""
import logging
from collections import namedtuple

import numpy as np

from eigenbench.core.mesh import generate_square
from eigenbench.core.metric import TrigSeries, inner02, inverse, trace, volume_density
from eigenbench.errors import DegenerateNormalError, DomainError, InputError

logger = logging.getLogger(__name__)

CalculusResiduals = namedtuple("CalculusResiduals", ["p1", "p2", "p3"])

DEFAULT_CHART = ((-1.0, 2.0), (-1.0, 2.0))
DEFAULT_POINTS = ((0.3, 0.4), (0.7, 0.2), (0.55, 0.8))
SUITES = ("lemma1", "lemma2", "props", "prop3", "htilde")


class AnalyticMetricFamily:
    """Smooth one-parameter family of metrics t -> g(t) on a rectangular chart."""

    def __init__(self, evaluator, hx=1e-4, ht=1e-4, chart=DEFAULT_CHART):
        if hx <= 0 or ht <= 0:
            raise InputError(f"finite-difference steps must be positive, got hx={hx!r}, ht={ht!r}",
                             module="chart_calculus")
        self.evaluator = evaluator
        self.hx = hx
        self.ht = ht
        self.chart = chart

    @classmethod
    def linear(cls, g0, T, **kwargs):
        """g(t) = g0 + t T for matrix-valued g0(x, y), T(x, y)."""
        return cls(lambda t, x, y: np.asarray(g0(x, y), float) + t * np.asarray(T(x, y), float), **kwargs)

    @classmethod
    def static(cls, g, **kwargs):
        return cls(lambda t, x, y: np.asarray(g(x, y), float), **kwargs)

    def with_steps(self, hx, ht):
        return AnalyticMetricFamily(self.evaluator, hx=hx, ht=ht, chart=self.chart)

    def __call__(self, t, x, y):
        return np.asarray(self.evaluator(t, x, y), dtype=float)

    def at(self, t):
        """The metric g(t) as a callable (x, y) -> 2x2."""
        return lambda x, y: self(t, x, y)

    def velocity(self, x, y):
        """H = d/dt g(t) at t = 0."""
        return (self(self.ht, x, y) - self(-self.ht, x, y)) / (2.0 * self.ht)

    def check_interior(self, point):
        (x0, x1), (y0, y1) = self.chart
        x, y = point
        margin = 2.0 * self.hx
        if not (x0 + margin <= x <= x1 - margin and y0 + margin <= y <= y1 - margin):
            raise DomainError(f"point {tuple(point)} is within {margin:g} of the chart boundary")


def _partial(fn, point, axis, h):
    x, y = point
    if axis == 0:
        return (np.asarray(fn(x + h, y), float) - np.asarray(fn(x - h, y), float)) / (2.0 * h)
    return (np.asarray(fn(x, y + h), float) - np.asarray(fn(x, y - h), float)) / (2.0 * h)


def _gradient(fn, point, h):
    """Stack of the two partials, index first: result[i] = d_i fn."""
    return np.stack([_partial(fn, point, 0, h), _partial(fn, point, 1, h)])


def _second_partials(f, point, h):
    x, y = point
    f0 = f(x, y)
    fxx = (f(x + h, y) - 2.0 * f0 + f(x - h, y)) / h**2
    fyy = (f(x, y + h) - 2.0 * f0 + f(x, y - h)) / h**2
    fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h**2)
    return np.array([[fxx, fxy], [fxy, fyy]])


def _ddt(fn, ht):
    return (np.asarray(fn(ht), float) - np.asarray(fn(-ht), float)) / (2.0 * ht)


def christoffel(family, point, t=0.0):
    """Gamma[k, i, j] = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)."""
    family.check_interior(point)
    ginv = inverse(family(t, *point))
    dg = _gradient(family.at(t), point, family.hx)  # dg[a, i, j] = d_a g_ij
    lowered = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", ginv, lowered)


def hessian(f, family, point, t=0.0):
    """(nabla^2 f)_ij = d_i d_j f - Gamma^k_ij d_k f."""
    gamma = christoffel(family, point, t)
    df = _gradient(f, point, family.hx)
    return _second_partials(f, point, family.hx) - np.einsum("kij,k->ij", gamma, df)


def laplacian(f, family, point, t=0.0):
    """Delta_g f = <nabla^2 f, g>."""
    g = family(t, *point)
    return float(inner02(hessian(f, family, point, t), g, g))


def laplacian_divergence_form(f, family, point, t=0.0):
    """Delta_g f = (1/sqrt det g) d_i (sqrt det g g^{ij} d_j f)."""
    family.check_interior(point)
    h = family.hx

    def flux(x, y):
        g = family(t, x, y)
        df = _gradient(f, (x, y), h)
        return volume_density(g) * inverse(g) @ df

    divergence = _partial(flux, point, 0, h)[0] + _partial(flux, point, 1, h)[1]
    return float(divergence / volume_density(family(t, *point)))


def div_tensor(T, family, point, t=0.0):
    """(div T)_j = g^{ik} (d_i T_kj - Gamma^l_ik T_lj - Gamma^l_ij T_kl)."""
    gamma = christoffel(family, point, t)
    ginv = inverse(family(t, *point))
    T0 = np.asarray(T(*point), float)
    dT = _gradient(T, point, family.hx)  # dT[i, k, j]
    covariant = dT - np.einsum("lik,lj->ikj", gamma, T0) - np.einsum("lij,kl->ikj", gamma, T0)
    return np.einsum("ik,ikj->j", ginv, covariant)


def divergence(Z, family, point, t=0.0):
    """div Z = (1/sqrt det g) d_i (sqrt det g Z^i) for a vector field Z."""
    family.check_interior(point)

    def weighted(x, y):
        return volume_density(family(t, x, y)) * np.asarray(Z(x, y), float)

    h = family.hx
    total = _partial(weighted, point, 0, h)[0] + _partial(weighted, point, 1, h)[1]
    return float(total / volume_density(family(t, *point)))


def covariant_derivative(Z, family, point, t=0.0):
    """A[i, j] = (nabla_j Z)^i = d_j Z^i + Gamma^i_jk Z^k."""
    gamma = christoffel(family, point, t)
    dZ = _gradient(Z, point, family.hx)  # dZ[j, i]
    return dZ.T + np.einsum("ijk,k->ij", gamma, np.asarray(Z(*point), float))


def check_lemma1(T, phi, Z, family, point):
    """
    Residual of div(T(phi Z)) = phi <div T, Z> + phi <nabla Z, T> + T(nabla phi, Z).

    T(V) is the (1,1) tensor g^{-1} T applied to V.
    """
    def transported(x, y):
        g = family(0.0, x, y)
        return phi(x, y) * inverse(g) @ np.asarray(T(x, y), float) @ np.asarray(Z(x, y), float)

    lhs = divergence(transported, family, point)

    g = family(0.0, *point)
    ginv = inverse(g)
    T0 = np.asarray(T(*point), float)
    Z0 = np.asarray(Z(*point), float)
    phi0 = phi(*point)
    dphi = _gradient(phi, point, family.hx)
    nabla_z = covariant_derivative(Z, family, point)
    rhs = (
        phi0 * div_tensor(T, family, point) @ Z0
        + phi0 * np.einsum("ia,aj,ji->", ginv, T0, nabla_z)
        + (ginv @ dphi) @ T0 @ Z0
    )
    return abs(lhs - rhs)


def _unit_normal(g, df):
    norm2 = df @ inverse(g) @ df
    if not norm2 > 1e-24:
        raise DegenerateNormalError("grad f vanishes, the normal nu = grad f / |grad f| is undefined")
    return inverse(g) @ df / np.sqrt(norm2)


def check_P1_P2_P3(family, X, Y, f, l, point, l_t=None):
    """
    Residuals of the three first-variation rules for metric pairings.

    Args:
        family: AnalyticMetricFamily
        X, Y: callables (t, x, y) -> covector components x_i(t), y_i(t)
        f: level function defining nu_t = grad_t f / |grad_t f|_t
        l: scalar (x, y) -> float
        point: evaluation point
        l_t: optional t-dependent l(t, x, y) with l_t(0, .) = l; enables the
            <nu, grad l'> term of the third rule

    Returns:
        CalculusResiduals(p1, p2, p3)
    """
    family.check_interior(point)
    x, y = point
    ht, hx = family.ht, family.hx
    g = family(0.0, x, y)
    ginv = inverse(g)
    H = family.velocity(x, y)

    def pairing(t):
        return np.asarray(X(t, x, y), float) @ inverse(family(t, x, y)) @ np.asarray(Y(t, x, y), float)

    x0, y0 = np.asarray(X(0.0, x, y), float), np.asarray(Y(0.0, x, y), float)
    x_dot = _ddt(lambda t: X(t, x, y), ht)
    y_dot = _ddt(lambda t: Y(t, x, y), ht)
    rhs1 = -(ginv @ x0) @ H @ (ginv @ y0) + x_dot @ ginv @ y0 + x0 @ ginv @ y_dot
    p1 = abs(_ddt(pairing, ht) - rhs1)

    df = _gradient(f, point, hx)
    dl = _gradient(l, point, hx)
    lhs2 = _ddt(lambda t: df @ inverse(family(t, x, y)) @ dl, ht)
    p2 = abs(lhs2 + (ginv @ df) @ H @ (ginv @ dl))

    if l_t is None:
        def l_t(t, px, py):
            return l(px, py)

    def dl_at(t):
        return _gradient(lambda px, py: l_t(t, px, py), point, hx)

    def normal_pairing(t):
        return _unit_normal(family(t, x, y), df) @ dl_at(t)

    nu = _unit_normal(g, df)
    dl0 = dl_at(0.0)
    dl_dot = _ddt(dl_at, ht)
    rhs3 = -nu @ H @ (ginv @ dl0) + 0.5 * (nu @ H @ nu) * (nu @ dl0) + nu @ dl_dot
    p3 = abs(_ddt(normal_pairing, ht) - rhs3)
    return CalculusResiduals(float(p1), float(p2), float(p3))


def check_lemma2(family, f, point):
    """|d/dt nu(t) - (-H(nu) + 1/2 H(nu, nu) nu)| with nu(t) = grad_t f / |grad_t f|_t."""
    family.check_interior(point)
    x, y = point
    df = _gradient(f, point, family.hx)
    g = family(0.0, x, y)
    H = family.velocity(x, y)
    nu = _unit_normal(g, df)
    lhs = _ddt(lambda t: _unit_normal(family(t, x, y), df), family.ht)
    rhs = -inverse(g) @ H @ nu + 0.5 * (nu @ H @ nu) * nu
    return float(np.linalg.norm(lhs - rhs))


def _laplacian_variation(df, d2f, family, point):
    """d/dt Delta_{g(t)} f at 0 from fixed coordinate derivatives of f."""
    def delta(t):
        gamma = christoffel(family, point, t)
        return np.einsum("ij,ij->", inverse(family(t, *point)), d2f - np.einsum("kij,k->ij", gamma, df))

    return float(_ddt(delta, family.ht))


def _quadrature(mesh, family):
    """Edge-midpoint rule: points and weights of dM for g(0)."""
    tri = mesh.triangles
    pts = mesh.vertices
    midpoints = np.concatenate([
        0.5 * (pts[tri[:, 0]] + pts[tri[:, 1]]),
        0.5 * (pts[tri[:, 1]] + pts[tri[:, 2]]),
        0.5 * (pts[tri[:, 2]] + pts[tri[:, 0]]),
    ])
    weights = np.tile(np.abs(mesh.signed_areas) / 3.0, 3)
    density = np.array([volume_density(family(0.0, px, py)) for px, py in midpoints])
    return midpoints, weights * density


def check_prop3(family, f, l, quadrature_mesh):
    """
    |int l Delta' f dM - int l (1/2 <dh, df> - <div H, df> - <H, nabla^2 f>) dM|

    Delta' f is the central t-difference of Delta_{g(t)} f; the integral uses
    the edge-midpoint rule on quadrature_mesh.
    """
    hx = family.hx

    def h_field(px, py):
        return trace(family.velocity(px, py), family(0.0, px, py))

    points, weights = _quadrature(quadrature_mesh, family)
    lhs = rhs = 0.0
    for point, weight in zip(points, weights):
        family.check_interior(point)
        g = family(0.0, *point)
        ginv = inverse(g)
        df = _gradient(f, point, hx)
        d2f = _second_partials(f, point, hx)
        hess = d2f - np.einsum("kij,k->ij", christoffel(family, point), df)
        H = family.velocity(*point)
        dh = _gradient(h_field, point, hx)
        div_h = div_tensor(family.velocity, family, point)
        integrand = 0.5 * dh @ ginv @ df - div_h @ ginv @ df - inner02(H, hess, g)
        lval = l(*point)
        lhs += weight * lval * _laplacian_variation(df, d2f, family, point)
        rhs += weight * lval * integrand
    return float(abs(lhs - rhs))


def tangential_trace(H, g, nu):
    """Trace of H restricted to the g-orthogonal complement of nu (a line in 2D)."""
    lowered = g @ nu
    tangent = np.array([-lowered[1], lowered[0]])
    tangent = tangent / np.sqrt(tangent @ g @ tangent)
    return float(tangent @ H @ tangent)


def check_htilde(family, boundary_point, f, H=None):
    """|h_tilde - h + H(nu, nu)| at a point where nu is defined through f."""
    x, y = boundary_point
    g = family(0.0, x, y)
    H = family.velocity(x, y) if H is None else np.asarray(H, float)
    nu = _unit_normal(g, _gradient(f, boundary_point, family.hx))
    h_tilde = tangential_trace(H, g, nu)
    return float(abs(h_tilde - trace(H, g) + nu @ H @ nu))


def fit_order(steps, residuals):
    """Least-squares slope of log(residual) against log(step); inf if all residuals vanish."""
    steps, residuals = np.asarray(steps, float), np.asarray(residuals, float)
    if np.all(residuals == 0.0):
        return float("inf")
    residuals = np.maximum(residuals, np.finfo(float).tiny)
    return float(np.polyfit(np.log(steps), np.log(residuals), 1)[0])


def standard_fixtures(seed=7):
    """
    Curved metric family, perturbation and test fields used by the verification suite.

    g0 = e^{rho} (I + B) with small smooth rho, B; g(t) = g0 + t T with T a seeded
    trigonometric series.
    """
    perturbation = TrigSeries.random(seed, amplitude=0.6, frequency_cap=1)

    def g0(x, y):
        rho = 0.3 * np.sin(np.pi * x) * np.cos(0.5 * np.pi * y)
        b12 = 0.15 * np.sin(x + 2.0 * y)
        return np.exp(rho) * np.array([[1.0 + 0.2 * x * x, b12], [b12, 1.0 + 0.1 * np.cos(y)]])

    return {
        "family": AnalyticMetricFamily.linear(g0, perturbation.matrix),
        "f": lambda x, y: np.sin(1.3 * x + 0.4) + np.cos(0.7 * y) + 0.5 * x * y,
        "l": lambda x, y: np.cos(1.1 * x) * np.exp(0.3 * y),
        "l_t": lambda t, x, y: np.cos(1.1 * x + 0.5 * t) * np.exp(0.3 * y + t * x),
        "phi": lambda x, y: 1.0 + 0.5 * np.sin(x + y),
        "Z": lambda x, y: np.array([np.cos(2.0 * y) + x, np.sin(1.5 * x) * y]),
        "T": lambda x, y: np.array([[np.cos(x * y), 0.3 * np.sin(x)], [0.3 * np.sin(x), 1.0 + y * y]]),
        "X": lambda t, x, y: np.array([np.cos(x + t), np.sin(y) + np.sin(2.0 * t) * x]),
        "Y": lambda t, x, y: np.array([x * y + np.sin(t), np.cos(t * y) + x]),
    }


def run_suite(suite, steps, points=DEFAULT_POINTS, seed=7):
    """
    Evaluate one identity suite over a list of finite-difference steps.

    Args:
        suite: One of SUITES
        steps: Steps used for both h_x and h_t (e.g. [1e-3, 5e-4, 2.5e-4])
        points: Chart points for the pointwise identities
        seed: Seed of the standard fixtures

    Returns:
        List of row dicts (identity, point, step, residual, order), one per
        identity, point and step; order is the fitted log-log slope over steps
    """
    if suite not in SUITES:
        raise InputError(f"unknown calculus suite {suite!r}", module="chart_calculus")
    fx = standard_fixtures(seed)
    base = fx["family"]
    residuals = {}

    for step in steps:
        family = base.with_steps(step, step)
        if suite == "prop3":
            key = ("prop3", "mesh")
            residuals.setdefault(key, []).append(check_prop3(family, fx["f"], fx["l"], generate_square(4)))
            continue
        for point in points:
            label = f"{point[0]:g},{point[1]:g}"
            if suite == "lemma1":
                values = {"lemma1": check_lemma1(fx["T"], fx["phi"], fx["Z"], family, point)}
            elif suite == "lemma2":
                values = {"lemma2": check_lemma2(family, fx["f"], point)}
            elif suite == "htilde":
                values = {"htilde": check_htilde(family, point, fx["f"])}
            else:
                static_l = check_P1_P2_P3(family, fx["X"], fx["Y"], fx["f"], fx["l"], point)
                moving_l = check_P1_P2_P3(family, fx["X"], fx["Y"], fx["f"], fx["l"], point, l_t=fx["l_t"])
                values = {"P1": static_l.p1, "P2": static_l.p2, "P3": static_l.p3, "P3_moving_l": moving_l.p3}
            for identity, value in values.items():
                residuals.setdefault((identity, label), []).append(value)

    rows = []
    for (identity, label), values in residuals.items():
        order = fit_order(steps, values) if identity != "htilde" else float("nan")
        logger.info("%s at %s: finest residual %.3e, fitted order %.2f", identity, label, values[-1], order)
        for step, value in zip(steps, values):
            rows.append({"identity": identity, "point": label, "step": step, "residual": value, "order": order})
    return rows
