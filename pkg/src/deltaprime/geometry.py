"""Differential geometry of parametrized surfaces and their tube layers.

A surface is given by a chart ``gamma(s1, s2) -> R^3``.  From the chart
we form, per point:

    g_{mn}  = gamma_,m . gamma_,n              (first fundamental form)
    n       = (gamma_,1 x gamma_,2) / |...|    (unit normal)
    h_m^n   = -n_,m . gamma_,s g^{sn}          (shape operator)
    K, M    = det h, tr h / 2                  (Gauss / mean curvature)
    k1 >= k2                                   (principal curvatures)

and, for the layer point ``gamma(s) + u n(s)`` with ``|u| < d``:

    xi        = (1 - u k1)(1 - u k2) = 1 - 2 M u + K u^2
    G_{mn}    = (I - u h) g (I - u h)^T        (in-layer metric block)
    det G     = g xi^2
    log_jac   = ln(xi) / 2
    pot_measure    = g^{-1/2} (g^{1/2} G^{mn} J_,m)_,n + J_,m G^{mn} J_,n
    pot_curvature  = (K - M^2) / xi^2
    robin_weight   = (M - K u) / xi

Built-in charts (plane, sphere, torus, Gaussian bump) carry closed-form
expressions; all derivatives up to total order four come from symbolic
differentiation, so the layer potentials above are analytic.  A purely
numerical chart backend with central-difference jets is provided as a
fallback and as an independent cross-check.

Orientation is fixed by the chart: the normal is the normalized cross
product of the tangents in chart order.  This makes the *sign* of M (and
of k1, k2) chart-dependent; the package only consumes K - M^2, |M|
sup-norms and orientation-free secular data downstream.  For the
built-ins:

    sphere(R):      n points outward,     M = -1/R
    torus(R, r):    n points to the tube axis,  M > 0 on the outer half
    bump(h, sigma): n has positive z component
    plane():        n = +z
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import sympy as sp

_EPS = np.finfo(float).eps
_STEP_ORDER1 = _EPS ** (1.0 / 3.0)   # central differences, first order
_STEP_ORDER2 = _EPS ** 0.25          # second order needs a larger step


class ChartError(ValueError):
    """Bad chart data or evaluation outside the regular region."""


class SingularChartError(ChartError):
    """Tangent vectors (numerically) linearly dependent."""


class LayerWidthError(ChartError):
    """Layer coordinate outside the injectivity regime (xi <= 0 etc.)."""


@dataclass(frozen=True)
class ChartDomain:
    """Rectangular parameter domain with per-direction closure.

    kind: "periodic" (torus-like box), "rectangle" (compact, possibly
    with singular edges held off by ``margins``), or "plane" (a
    truncated infinite chart; the ranges are the truncation).
    """

    kind: str
    s1_range: tuple[float, float]
    s2_range: tuple[float, float]
    periodic: tuple[bool, bool] = (False, False)
    margins: tuple[float, float] = (0.0, 0.0)

    def axis(self, i: int, n: int, interior: bool = True) -> np.ndarray:
        lo, hi = (self.s1_range, self.s2_range)[i]
        if self.periodic[i]:
            return lo + (hi - lo) * np.arange(n) / n
        m = self.margins[i]
        lo, hi = lo + m, hi - m
        if interior:
            # cell centers, so singular edges (sphere poles) are never hit
            h = (hi - lo) / n
            return lo + h * (np.arange(n) + 0.5)
        return np.linspace(lo, hi, n)

    def sample_grid(self, n1: int, n2: int | None = None):
        n2 = n1 if n2 is None else n2
        return self.axis(0, n1), self.axis(1, n2)


_FIELD_NAMES = (
    "x", "y", "z", "g11", "g12", "g22", "g", "sqrt_g",
    "n1", "n2", "n3", "K", "M", "k1", "k2", "pot",
)
_LAYER_FIELD_NAMES = ("xi", "log_jac", "pot_measure", "pot_curvature", "robin_weight")


class SurfaceChart:
    """Symbolically backed chart with analytic derivative oracles.

    Parameters
    ----------
    name : str
        Identifier used in reports ("sphere", "torus", ...).
    gamma : sequence of 3 sympy expressions
        The map (s1, s2) -> R^3 in the two symbols ``symbols``.
    symbols : (Symbol, Symbol)
        The chart coordinates.
    domain : ChartDomain
    params : dict
        Named parameters (numeric values already substituted in gamma).
    d0 : float or None
        Injectivity half-width of the normal layer map, if known
        analytically (sphere: R, torus: r).  None means user-supplied
        charts are guarded only by the xi > 0 check.
    """

    is_symbolic = True

    def __init__(self, name, gamma, symbols, domain, params=None, d0=None,
                 tidy=True):
        self.name = name
        self.params = dict(params or {})
        self.domain = domain
        self.d0 = d0
        self._s = tuple(symbols)
        self._gamma = sp.Matrix([sp.sympify(c) for c in gamma])
        self._tidy = tidy
        self._sym_cache: dict = {}
        self._fn_cache: dict = {}

    # -- symbolic pipeline -------------------------------------------------

    def _sym(self, key):
        cache = self._sym_cache
        if key in cache:
            return cache[key]
        s1, s2 = self._s
        tidy = sp.cancel if self._tidy else (lambda e: e)
        if key == "forms":
            # both fundamental forms, kept sqrt-free: the normal enters
            # only through c = t1 x t2 and |c| = sqrt(det g)
            t1, t2 = self._gamma.diff(s1), self._gamma.diff(s2)
            E, F, G2 = t1.dot(t1), t1.dot(t2), t2.dot(t2)
            detg = tidy(sp.expand(E * G2 - F**2))
            c = t1.cross(t2)
            e = c.dot(self._gamma.diff(s1, 2))
            f = c.dot(sp.diff(self._gamma, s1, s2))
            g2 = c.dot(self._gamma.diff(s2, 2))
            cache[key] = {"t": (t1, t2), "g": sp.Matrix([[E, F], [F, G2]]),
                          "detg": detg, "sq": sp.sqrt(detg), "c": c,
                          "II": (e, f, g2)}
        elif key in ("K", "M"):
            fo = self._sym("forms")
            E, F, G2 = fo["g"][0, 0], fo["g"][0, 1], fo["g"][1, 1]
            e, f, g2 = fo["II"]
            detg = fo["detg"]
            K = tidy((e * g2 - f**2) / detg**2)
            M = tidy((e * G2 - 2 * f * F + g2 * E) / (2 * detg)) / fo["sq"]
            cache["K"] = self._maybe_constant(K)
            cache["M"] = self._maybe_constant(M)
        elif key == "shape":
            # h = II g^{-1}; entries carry a single 1/sqrt(det g) factor
            fo = self._sym("forms")
            E, F, G2 = fo["g"][0, 0], fo["g"][0, 1], fo["g"][1, 1]
            e, f, g2 = fo["II"]
            adj = sp.Matrix([[G2, -F], [-F, E]])
            II = sp.Matrix([[e, f], [f, g2]])
            num = (II * adj).applyfunc(lambda x: tidy(sp.expand(x)))
            cache[key] = num / (fo["detg"] * fo["sq"])
        elif key == "layer":
            u = sp.Symbol("u", real=True)
            K, M = self._sym("K"), self._sym("M")
            fo = self._sym("forms")
            xi = 1 - 2 * M * u + K * u**2
            J = sp.log(xi) / 2
            A = sp.eye(2) - u * self._sym("shape")
            Gm = A * fo["g"] * A.T
            # det(G) = det(g) xi^2 exactly; no symbolic determinant needed
            Ginv = sp.Matrix([[Gm[1, 1], -Gm[0, 1]],
                              [-Gm[0, 1], Gm[0, 0]]]) / (fo["detg"] * xi**2)
            sq = fo["sq"]
            dJ = (J.diff(s1), J.diff(s2))
            div = sum((sq * sum(Ginv[m, n_] * dJ[m] for m in range(2))).diff(
                (s1, s2)[n_]) for n_ in range(2)) / sq
            grad = sum(dJ[m] * Ginv[m, n_] * dJ[n_]
                       for m in range(2) for n_ in range(2))
            cache[key] = {
                "u": u,
                "xi": xi,
                "log_jac": J,
                "G": Gm,
                "pot_measure": div + grad,
                "pot_curvature": (K - M**2) / xi**2,
                "robin_weight": (M - K * u) / xi,
            }
        else:
            raise KeyError(key)
        return cache[key]

    def _maybe_constant(self, expr):
        # Umbilic charts (plane, sphere) have constant K and M; pinning
        # the constant makes every s-derivative of the layer Jacobian
        # vanish identically instead of evaluating to rounding noise.
        if not expr.free_symbols:
            return expr
        fn = sp.lambdify(self._s, expr, "numpy")
        rng = np.random.default_rng(20240817)
        a1, a2 = self.domain.sample_grid(5)
        pts = [(x, y) for x in a1 for y in a2]
        pts += [(rng.uniform(*self.domain.s1_range),
                 rng.uniform(*self.domain.s2_range)) for _ in range(5)]
        vals = []
        for x, y in pts:
            try:
                v = float(fn(x, y))
            except (ZeroDivisionError, FloatingPointError, ValueError):
                continue
            if np.isfinite(v):
                vals.append(v)
        if len(vals) < 8:
            return expr
        vals = np.asarray(vals)
        mean = vals.mean()
        if np.ptp(vals) <= 1e-11 * max(1.0, abs(mean)):
            return sp.Float(mean)
        return expr

    def _surface_expr(self, name):
        if name in ("x", "y", "z"):
            return self._gamma["xyz".index(name)]
        if name in ("g11", "g12", "g22"):
            i, j = int(name[1]) - 1, int(name[2]) - 1
            return self._sym("forms")["g"][i, j]
        if name == "g":
            return self._sym("forms")["detg"]
        if name == "sqrt_g":
            return self._sym("forms")["sq"]
        if name in ("n1", "n2", "n3"):
            fo = self._sym("forms")
            return fo["c"][int(name[1]) - 1] / fo["sq"]
        if name == "K":
            return self._sym("K")
        if name == "M":
            return self._sym("M")
        if name == "pot":
            return self._sym("K") - self._sym("M") ** 2
        if name in ("k1", "k2"):
            K, M = self._sym("K"), self._sym("M")
            root = sp.sqrt(sp.Max(M**2 - K, 0))
            return M + root if name == "k1" else M - root
        raise KeyError(name)

    def field(self, name: str) -> Callable:
        """Vectorized numeric evaluator for a named geometric field.

        Surface fields take ``(s1, s2)``; layer fields (xi, log_jac,
        pot_measure, pot_curvature, robin_weight) take ``(s1, s2, u)``.
        """
        if name in self._fn_cache:
            return self._fn_cache[name]
        s1, s2 = self._s
        if name in _LAYER_FIELD_NAMES:
            lay = self._sym("layer")
            fn = sp.lambdify((s1, s2, lay["u"]), lay[name], "numpy",
                             cse=True)
        elif name in ("G11", "G12", "G22"):
            lay = self._sym("layer")
            i, j = int(name[1]) - 1, int(name[2]) - 1
            fn = sp.lambdify((s1, s2, lay["u"]), lay["G"][i, j], "numpy",
                             cse=True)
        else:
            fn = sp.lambdify((s1, s2), self._surface_expr(name), "numpy",
                             cse=True)
        wrapped = _broadcast(fn)
        self._fn_cache[name] = wrapped
        return wrapped

    # -- derivative oracle --------------------------------------------------

    def _partial_fn(self, a: int, b: int):
        key = ("partial", a, b)
        if key not in self._fn_cache:
            s1, s2 = self._s
            expr = self._gamma.diff(s1, a, s2, b)
            self._fn_cache[key] = sp.lambdify((s1, s2), list(expr), "numpy",
                                              cse=True)
        return self._fn_cache[key]

    def point(self, s1, s2) -> np.ndarray:
        return np.asarray(self._partial_fn(0, 0)(s1, s2), dtype=float)

    def partials_at(self, s, max_order: int = 2) -> dict:
        """Mixed partials of the map at ``s``: {(a, b): 3-vector}."""
        s1, s2 = float(s[0]), float(s[1])
        out = {}
        for a in range(max_order + 1):
            for b in range(max_order + 1 - a):
                out[(a, b)] = np.asarray(self._partial_fn(a, b)(s1, s2),
                                         dtype=float)
        return out


def _broadcast(fn):
    def wrapped(*args):
        args = [np.asarray(a, dtype=float) for a in args]
        out = fn(*args)
        return np.broadcast_to(np.asarray(out, dtype=float),
                               np.broadcast_shapes(*(a.shape for a in args))).copy()
    return wrapped


class NumericalChart:
    """Chart given only as a point callable; jets by central differences.

    Used as the fallback backend and, in tests, as the independent
    check that symbolic jets are right.  First-order steps scale like
    eps^(1/3), second-order like eps^(1/4).
    """

    is_symbolic = False

    def __init__(self, name, func, domain, params=None, d0=None, scale=1.0):
        self.name = name
        self.func = func
        self.domain = domain
        self.params = dict(params or {})
        self.d0 = d0
        self.scale = scale

    def point(self, s1, s2):
        return np.asarray(self.func(s1, s2), dtype=float)

    def partials_at(self, s, max_order: int = 2) -> dict:
        if max_order > 2:
            raise ChartError("numerical charts provide jets up to order 2")
        s1, s2 = float(s[0]), float(s[1])
        h1 = _STEP_ORDER1 * self.scale
        h2 = _STEP_ORDER2 * self.scale
        f = lambda a, b: np.asarray(self.func(a, b), dtype=float)
        out = {(0, 0): f(s1, s2)}
        out[(1, 0)] = (f(s1 + h1, s2) - f(s1 - h1, s2)) / (2 * h1)
        out[(0, 1)] = (f(s1, s2 + h1) - f(s1, s2 - h1)) / (2 * h1)
        if max_order >= 2:
            out[(2, 0)] = (f(s1 + h2, s2) - 2 * out[(0, 0)] + f(s1 - h2, s2)) / h2**2
            out[(0, 2)] = (f(s1, s2 + h2) - 2 * out[(0, 0)] + f(s1, s2 - h2)) / h2**2
            out[(1, 1)] = (f(s1 + h2, s2 + h2) - f(s1 + h2, s2 - h2)
                           - f(s1 - h2, s2 + h2) + f(s1 - h2, s2 - h2)) / (4 * h2**2)
        return out


# -- built-in charts ---------------------------------------------------------

def plane(half_width: float = 6.0) -> SurfaceChart:
    s1, s2 = sp.symbols("s1 s2", real=True)
    dom = ChartDomain("plane", (-half_width, half_width),
                      (-half_width, half_width))
    return SurfaceChart("plane", (s1, s2, sp.Integer(0)), (s1, s2), dom,
                        params={"half_width": half_width}, d0=math.inf)


def sphere(R: float = 1.0) -> SurfaceChart:
    if R <= 0:
        raise ChartError("sphere radius must be positive")
    s1, s2 = sp.symbols("s1 s2", real=True)
    gamma = (R * sp.sin(s1) * sp.cos(s2),
             R * sp.sin(s1) * sp.sin(s2),
             R * sp.cos(s1))
    dom = ChartDomain("rectangle", (0.0, math.pi), (0.0, 2 * math.pi),
                      periodic=(False, True), margins=(1e-3, 0.0))
    return SurfaceChart("sphere", gamma, (s1, s2), dom,
                        params={"R": R}, d0=R)


def torus(R: float = 3.0, r: float = 1.0) -> SurfaceChart:
    if not (R > r > 0):
        raise ChartError("torus needs R > r > 0")
    s1, s2 = sp.symbols("s1 s2", real=True)
    gamma = ((R + r * sp.cos(s1)) * sp.cos(s2),
             (R + r * sp.cos(s1)) * sp.sin(s2),
             r * sp.sin(s1))
    dom = ChartDomain("periodic", (0.0, 2 * math.pi), (0.0, 2 * math.pi),
                      periodic=(True, True))
    return SurfaceChart("torus", gamma, (s1, s2), dom,
                        params={"R": R, "r": r}, d0=r)


def bump(h: float = 1.0, sigma: float = 1.0, L: float = 12.0) -> SurfaceChart:
    """Graph surface z = h exp(-(s1^2+s2^2)/(2 sigma^2)), truncated at L.

    The truncation is realized as the square [-L, L]^2 (tensor meshes
    use Dirichlet closure on its boundary).
    """
    if sigma <= 0 or L <= 0:
        raise ChartError("bump needs sigma > 0 and L > 0")
    s1, s2 = sp.symbols("s1 s2", real=True)
    gamma = (s1, s2, h * sp.exp(-(s1**2 + s2**2) / (2 * sigma**2)))
    dom = ChartDomain("plane", (-L, L), (-L, L))
    return SurfaceChart("bump", gamma, (s1, s2), dom,
                        params={"h": h, "sigma": sigma, "L": L},
                        d0=None, tidy=False)


_BUILTINS = {"plane": plane, "sphere": sphere, "torus": torus, "bump": bump}


def builtin_chart(name: str, **params) -> SurfaceChart:
    """Construct a built-in chart by name with keyword parameters."""
    try:
        maker = _BUILTINS[name]
    except KeyError:
        raise ChartError(f"unknown surface {name!r}; "
                         f"choose from {sorted(_BUILTINS)}") from None
    return maker(**params)


def reparametrized(chart: SurfaceChart, linear, shift=(0.0, 0.0),
                   name=None) -> SurfaceChart:
    """Same surface through an affine change of chart coordinates.

    ``s_old = linear @ s_new + shift``.  Chart-invariant quantities
    (K, |M|, xi, spectra) must agree with the original at matching
    geometric points; the metric itself transforms.
    """
    if not chart.is_symbolic:
        raise ChartError("reparametrization needs a symbolic chart")
    A = sp.Matrix(linear)
    if A.det() == 0:
        raise ChartError("reparametrization must be invertible")
    s1, s2 = chart._s
    t1, t2 = sp.symbols("t1 t2", real=True)
    old = A * sp.Matrix([t1, t2]) + sp.Matrix(shift)
    gamma = chart._gamma.subs({s1: old[0], s2: old[1]}, simultaneous=True)
    dom = ChartDomain("plane", (-1.0, 1.0), (-1.0, 1.0))
    return SurfaceChart(name or f"{chart.name}-reparam", list(gamma),
                        (t1, t2), dom, params=chart.params, d0=chart.d0,
                        tidy=chart._tidy)


# -- per-point jets -----------------------------------------------------------

@dataclass
class GeometryJet:
    """Per-point geometric bundle of a chart."""

    s: tuple[float, float]
    gamma: np.ndarray
    tangents: np.ndarray          # shape (2, 3)
    normal: np.ndarray
    metric: np.ndarray            # 2x2
    metric_det: float
    metric_inv: np.ndarray
    weingarten: np.ndarray        # 2x2, mixed indices
    gauss: float
    mean: float
    k1: float
    k2: float


def geometry_jet(chart, s) -> GeometryJet:
    """Evaluate the full curvature jet of ``chart`` at ``s``.

    Works for symbolic and numerical charts alike: only the map's mixed
    partials up to order two enter.  Raises SingularChartError when the
    tangents degenerate.
    """
    p = chart.partials_at(s, max_order=2)
    t1, t2 = p[(1, 0)], p[(0, 1)]
    g = np.array([[t1 @ t1, t1 @ t2], [t1 @ t2, t2 @ t2]])
    cross = np.cross(t1, t2)
    area = np.linalg.norm(cross)
    if area < 1e-12:
        raise SingularChartError(
            f"degenerate tangents at s={tuple(s)} (|t1 x t2|={area:.3e})")
    nvec = cross / area
    det_g = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    ginv = np.array([[g[1, 1], -g[0, 1]], [-g[0, 1], g[0, 0]]]) / det_g

    # n_,m from the cross-product rule, then h_m^n = -n_,m . t_s g^{sn}
    dcross = (np.cross(p[(2, 0)], t2) + np.cross(t1, p[(1, 1)]),
              np.cross(p[(1, 1)], t2) + np.cross(t1, p[(0, 2)]))
    dn = [(dc - nvec * (nvec @ dc)) / area for dc in dcross]
    B = np.array([[dn[m] @ (t1, t2)[sig] for sig in range(2)]
                  for m in range(2)])
    h = -B @ ginv
    K = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    M = 0.5 * (h[0, 0] + h[1, 1])
    disc = math.sqrt(max(M * M - K, 0.0))
    return GeometryJet(
        s=(float(s[0]), float(s[1])), gamma=p[(0, 0)],
        tangents=np.vstack([t1, t2]), normal=nvec,
        metric=g, metric_det=det_g, metric_inv=ginv, weingarten=h,
        gauss=float(K), mean=float(M), k1=float(M + disc), k2=float(M - disc),
    )


@dataclass
class LayerJet:
    """Layer-point quantities at (s, u)."""

    s: tuple[float, float]
    u: float
    xi: float
    G: np.ndarray                 # 2x2 in-layer metric block
    G_det: float
    log_jac: float
    pot_measure: float
    pot_curvature: float
    robin_weight: float


def layer_jet(chart, s, u: float, d: float) -> LayerJet:
    """Quantities of the tube coordinate map at (s, u), |u| <= d.

    The measure potential uses analytic second chart derivatives when
    the chart is symbolic; otherwise central differences of the half
    log-Jacobian over s (step eps^(1/4)).
    """
    if abs(u) > d:
        raise LayerWidthError(f"|u|={abs(u)} exceeds the half-width d={d}")
    jet = geometry_jet(chart, s)
    xi = (1 - u * jet.k1) * (1 - u * jet.k2)
    if xi <= 0:
        raise LayerWidthError(
            f"layer self-intersects at s={tuple(s)}, u={u} (xi={xi:.3e})")
    A = np.eye(2) - u * jet.weingarten
    G = A @ jet.metric @ A.T
    G_det = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    if chart.is_symbolic:
        v1 = float(chart.field("pot_measure")(s[0], s[1], u))
    else:
        v1 = _pot_measure_fd(chart, s, u)
    return LayerJet(
        s=(float(s[0]), float(s[1])), u=float(u), xi=float(xi),
        G=G, G_det=float(G_det), log_jac=float(math.log(xi) / 2),
        pot_measure=v1,
        pot_curvature=float((jet.gauss - jet.mean**2) / xi**2),
        robin_weight=float((jet.mean - jet.gauss * u) / xi),
    )


def _pot_measure_fd(chart, s, u):
    # div term + grad term with all s-derivatives by central differences;
    # the step must stay well above the noise floor of the inner
    # finite-difference jets (~1e-9), hence much larger than eps^(1/4)
    h = 4e-3

    def at(s1, s2):
        jet = geometry_jet(chart, (s1, s2))
        xi = 1 - 2 * jet.mean * u + jet.gauss * u**2
        A = np.eye(2) - u * jet.weingarten
        G = A @ jet.metric @ A.T
        Ginv = np.linalg.inv(G)
        return math.log(xi) / 2, math.sqrt(jet.metric_det), Ginv

    def J(s1, s2):
        return at(s1, s2)[0]

    s1, s2 = float(s[0]), float(s[1])
    dJ = np.array([(J(s1 + h, s2) - J(s1 - h, s2)) / (2 * h),
                   (J(s1, s2 + h) - J(s1, s2 - h)) / (2 * h)])

    def flux(s1, s2):
        Jc, sq, Ginv = at(s1, s2)
        grad = np.array([(J(s1 + h, s2) - J(s1 - h, s2)) / (2 * h),
                         (J(s1, s2 + h) - J(s1, s2 - h)) / (2 * h)])
        return sq * (Ginv @ grad), sq, Ginv

    f_e, sq0, Ginv0 = flux(s1, s2)
    div = ((flux(s1 + h, s2)[0][0] - flux(s1 - h, s2)[0][0]) / (2 * h)
           + (flux(s1, s2 + h)[0][1] - flux(s1, s2 - h)[0][1]) / (2 * h)) / sq0
    return float(div + dJ @ Ginv0 @ dJ)


# -- sampled sup-norms and layer bounds ---------------------------------------

@dataclass
class SupNorms:
    """Sampled sup-norms of the curvatures, with a refinement diagnostic."""

    sup_k1: float
    sup_k2: float
    sup_M: float
    sup_K: float
    rho: float
    c_minus: float                # sampled ellipticity range of g_{mn}
    c_plus: float
    grid: int
    refinement_delta: float       # relative change on the last doubling
    stable: bool

    def C_pm(self, d: float) -> tuple[float, float]:
        x = d / self.rho
        return (1 - x) ** 2, (1 + x) ** 2

    def robin_theta(self, d: float) -> float:
        return (self.sup_M + d * self.sup_K) / self.C_pm(d)[0]


def sup_norms(chart, grid: int = 64) -> SupNorms:
    """Estimate curvature sup-norms by dense sampling with refinement.

    The estimate is recomputed on a doubled grid twice; a relative
    change above 5% after the second doubling flags the result as
    unstable (the value is still returned).
    """
    def measure(n):
        # inclusive odd-count axes so symmetric domains sample their
        # center, where bump-like charts attain the curvature sup
        def axis(i):
            if chart.domain.periodic[i]:
                return chart.domain.axis(i, n)
            return chart.domain.axis(i, n | 1, interior=False)
        a1, a2 = axis(0), axis(1)
        S1, S2 = np.meshgrid(a1, a2, indexing="ij")
        k1 = chart.field("k1")(S1, S2)
        k2 = chart.field("k2")(S1, S2)
        M = chart.field("M")(S1, S2)
        K = chart.field("K")(S1, S2)
        g11 = chart.field("g11")(S1, S2)
        g12 = chart.field("g12")(S1, S2)
        g22 = chart.field("g22")(S1, S2)
        tr = g11 + g22
        disc = np.sqrt(np.maximum((g11 - g22) ** 2 + 4 * g12**2, 0.0))
        return (np.abs(k1).max(), np.abs(k2).max(), np.abs(M).max(),
                np.abs(K).max(), ((tr - disc) / 2).min(), ((tr + disc) / 2).max())

    vals = [np.array(measure(grid * (2 ** i))) for i in range(3)]
    sup = vals[-1]
    # stability is judged on the curvature sup-norms only: the sampled
    # ellipticity range of g is grid-dependent near singular chart edges
    # (sphere poles) by construction and is reported as-is
    scale = np.maximum(np.abs(vals[-1][:4]), 1e-30)
    delta = float(np.max(np.abs(vals[-1][:4] - vals[-2][:4]) / scale))
    kmax = max(sup[0], sup[1])
    if kmax <= 0:
        rho = math.inf
    else:
        rho = 1.0 / kmax
    return SupNorms(sup_k1=float(sup[0]), sup_k2=float(sup[1]),
                    sup_M=float(sup[2]), sup_K=float(sup[3]),
                    rho=float(rho), c_minus=float(sup[4]), c_plus=float(sup[5]),
                    grid=grid * 4, refinement_delta=delta,
                    stable=bool(delta < 0.05))


@dataclass
class XiBoundsReport:
    d: float
    rho: float
    C_minus: float
    C_plus: float
    xi_min: float
    xi_max: float
    n_samples: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_xi_bounds(chart, d: float, n_samples: int = 4096,
                    norms: SupNorms | None = None) -> XiBoundsReport:
    """Sample xi over the closed layer and test C_-(d) <= xi <= C_+(d).

    A violation (reported with its location) signals either d >= rho or
    an underestimated rho.
    """
    norms = norms or sup_norms(chart)
    if not d < norms.rho:
        raise LayerWidthError(f"d={d} is not below rho={norms.rho}")
    C_lo, C_hi = norms.C_pm(d)
    n_s = max(8, int(math.sqrt(n_samples / 8)))
    n_u = max(8, n_samples // (n_s * n_s))
    a1, a2 = chart.domain.sample_grid(n_s)
    S1, S2 = np.meshgrid(a1, a2, indexing="ij")
    xi_fn = chart.field("xi")
    xi_min, xi_max = math.inf, -math.inf
    violations = []
    tol = 1e-12 * max(1.0, C_hi)
    for u in np.linspace(-d, d, n_u):
        xi = xi_fn(S1, S2, u)
        xi_min = min(xi_min, float(xi.min()))
        xi_max = max(xi_max, float(xi.max()))
        bad = (xi < C_lo - tol) | (xi > C_hi + tol)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            violations.append({"s": (float(S1[i, j]), float(S2[i, j])),
                               "u": float(u), "xi": float(xi[i, j])})
    return XiBoundsReport(d=d, rho=norms.rho, C_minus=C_lo, C_plus=C_hi,
                          xi_min=xi_min, xi_max=xi_max,
                          n_samples=n_s * n_s * n_u, violations=violations)


@dataclass
class PotentialRange:
    """Sampled bounds lo*d <= pot_measure <= hi*d over the layer."""

    lo: float
    hi: float
    d: float
    stable: bool
    refinement_delta: float


def measure_potential_range(chart, d: float, n_s: int = 48,
                            n_u: int = 9) -> PotentialRange:
    """Extrema of pot_measure / d over the layer, refinement-checked."""
    if not chart.is_symbolic:
        raise ChartError("measure_potential_range needs a symbolic chart")
    fn = chart.field("pot_measure")

    def extrema(ns, nu):
        a1, a2 = chart.domain.sample_grid(ns)
        S1, S2 = np.meshgrid(a1, a2, indexing="ij")
        lo, hi = math.inf, -math.inf
        for u in np.linspace(-d, d, nu):
            v = fn(S1, S2, u) / d
            lo = min(lo, float(v.min()))
            hi = max(hi, float(v.max()))
        return lo, hi

    lo1, hi1 = extrema(n_s, n_u)
    lo2, hi2 = extrema(2 * n_s, 2 * n_u + 1)
    scale = max(abs(lo2), abs(hi2), 1e-30)
    delta = max(abs(lo2 - lo1), abs(hi2 - hi1)) / scale
    return PotentialRange(lo=lo2, hi=hi2, d=d,
                          stable=bool(delta < 0.05),
                          refinement_delta=float(delta))
