"""One-dimensional interface operators on (-d, d) \\ {0}.

The operator acts as -f'' away from the origin.  At the origin the two
one-sided derivatives are continuous and tied to the values by

    f'(0-) = f'(0+) = -(1/beta) (f(0+) - f(0-)) + M (f(0+) + f(0-)),

which is the attractive delta-prime matching with an interface
curvature term M.  The outer ends carry either Dirichlet data
(``plus`` variant, f(+-d) = 0) or Robin data with a nonnegative
coefficient theta (``minus`` variant, -+ theta f(+-d) = f'(+-d)).

Derivative continuity forces the negative-energy eigenfunction into the
value-antisymmetric combination, so the M term drops out of the secular
equations (t = -kappa^2, kappa > 0):

    plus:   kappa cosh(kappa d) = (2/beta) sinh(kappa d)
    minus:  kappa (kappa sinh + theta cosh) = (2/beta)(kappa cosh + theta sinh)

both evaluated at kappa d.  On the whole line the same matching gives
the explicit value -4/beta^2 with eigenfunction sign(u) exp(-2|u|/beta).

The two-sided exponential bracket

    -4/b^2 - 16 e^{-4d/b}/b^2 <= t_minus <= -4/b^2 <= t_plus
                                          <= -4/b^2 + 16 e^{-4d/b}/b^2

is the advertised enclosure for d/beta > 2.  Numerically the upper leg
is slightly optimistic at small d/beta: the exact gap is
(4/b^2)(1 - tanh^2(kappa d)) = (16/b^2) e^{-4d/b} (1 + 8(d/b)e^{-4d/b} + ...),
so the constant 16 is overrun by a relative margin ~ 8(d/b)e^{-4d/b}
(about 8e-4 at d/b = 2.5).  ``verify_brackets`` reports the observed
sharp constant per grid point for exactly this reason.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as splinalg


class NoRootError(RuntimeError):
    """Secular function has no sign change in the searched range."""


class MultiplicityError(RuntimeError):
    """More than one negative eigenvalue found where one was expected."""


@dataclass(frozen=True)
class TransverseProblem:
    """Interface problem on (-d, d) with the variant's end condition.

    ``robin_theta`` only enters the minus variant; ``m_interface`` is
    the curvature value in the interface condition (the spectrum must
    not depend on it, which the finite-difference oracle confirms).
    """

    d: float
    beta: float
    variant: str = "plus"
    robin_theta: float = 0.0
    m_interface: float = 0.0

    def __post_init__(self):
        if self.d <= 0 or self.beta <= 0:
            raise ValueError("d and beta must be positive")
        if self.variant not in ("plus", "minus"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.robin_theta < 0:
            raise ValueError("robin_theta must be >= 0")

    @property
    def ratio(self) -> float:
        return self.d / self.beta

    def regime_flags(self, curvature_budget: float | None = None) -> dict:
        """Validity flags of the bracket regime: d/beta > 2 and, when a
        curvature budget ||M|| + d ||K|| is supplied, beta * budget < 1."""
        flags = {"ratio_ok": self.ratio > 2.0}
        if curvature_budget is not None:
            flags["budget_ok"] = self.beta * curvature_budget < 1.0
        flags["ok"] = all(flags.values())
        return flags


@dataclass
class TransverseResult:
    eigenvalue: float
    kappa: float
    bracket: tuple[float, float]
    n_negative: int
    residual: float
    problem: TransverseProblem


def line_eigenvalue(beta: float) -> float:
    """Bottom of the whole-line spectrum, -4/beta^2."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return -4.0 / beta**2


def lemma_bracket(beta: float, d: float, variant: str) -> tuple[float, float]:
    """Advertised enclosure of the negative eigenvalue for the variant."""
    base = -4.0 / beta**2
    width = 16.0 * math.exp(-4.0 * d / beta) / beta**2
    if variant == "plus":
        return base, base + width
    return base - width, base


def secular_function(problem: TransverseProblem) -> Callable[[float], float]:
    """tanh-scaled secular function of kappa; roots give t = -kappa^2."""
    d, beta = problem.d, problem.beta
    if problem.variant == "plus":
        def f(kappa):
            return kappa - (2.0 / beta) * math.tanh(kappa * d)
    else:
        theta = problem.robin_theta

        def f(kappa):
            th = math.tanh(kappa * d)
            return kappa * (kappa * th + theta) - (2.0 / beta) * (kappa + theta * th)
    return f


def _scan_roots(f, lo: float, hi: float, n: int) -> list[tuple[float, float]]:
    grid = np.geomspace(lo, hi, n)
    vals = np.array([f(k) for k in grid])
    cells = []
    for i in range(n - 1):
        if vals[i] == 0.0:
            cells.append((grid[i], grid[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            cells.append((grid[i], grid[i + 1]))
    if vals[-1] == 0.0:
        cells.append((grid[-1], grid[-1]))
    return cells


def _refine_root(f, lo: float, hi: float) -> tuple[float, float]:
    # bisection into a tight cell, then Newton polish on a numerical slope
    if lo == hi:
        return lo, abs(f(lo))
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid, 0.0
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    x = 0.5 * (lo + hi)
    for _ in range(8):
        h = max(abs(x), 1.0) * 1e-7
        slope = (f(x + h) - f(x - h)) / (2 * h)
        if slope == 0.0:
            break
        step = f(x) / slope
        if not math.isfinite(step) or abs(step) > (hi - lo):
            break
        x_new = x - step
        if x_new <= 0:
            break
        if abs(x_new - x) <= 4 * np.finfo(float).eps * abs(x):
            x = x_new
            break
        x = x_new
    return x, abs(f(x))


def solve_transverse(problem: TransverseProblem,
                     scan_points: int = 10_000) -> TransverseResult:
    """Negative eigenvalue of the interface problem via its secular root.

    The root count over kappa in (0, 4/beta] is established by a
    sign-change scan on a geometric grid; exactly one root is expected
    in the bracket regime.  The returned eigenvalue is the most
    negative one.
    """
    f = secular_function(problem)
    kappa_star = 2.0 / problem.beta
    cells = _scan_roots(f, kappa_star * 1e-4, 2.0 * kappa_star, scan_points)
    if not cells:
        raise NoRootError(
            f"no secular sign change for {problem}; regime violated?")
    roots = []
    for lo, hi in cells:
        k, resid = _refine_root(f, lo, hi)
        if not any(abs(k - r[0]) < 1e-9 * kappa_star for r in roots):
            roots.append((k, resid))
    kappa, resid = max(roots, key=lambda r: r[0])
    return TransverseResult(
        eigenvalue=-kappa * kappa, kappa=kappa,
        bracket=lemma_bracket(problem.beta, problem.d, problem.variant),
        n_negative=len(roots), residual=resid, problem=problem)


def eigenfunction(problem: TransverseProblem,
                  kappa: float) -> tuple[Callable, Callable]:
    """Value-antisymmetric eigenfunction and its derivative.

    Normalized so the u -> 0+ limit is 1; both callables are
    vectorized over u (x below is the distance to the nearer end).
    """
    d = problem.d
    if problem.variant == "plus":
        scale = math.sinh(kappa * d)

        def shape(x):
            return np.sinh(kappa * x) / scale

        def dshape(x):
            return kappa * np.cosh(kappa * x) / scale
    else:
        theta = problem.robin_theta
        scale = kappa * math.cosh(kappa * d) + theta * math.sinh(kappa * d)

        def shape(x):
            return (kappa * np.cosh(kappa * x)
                    + theta * np.sinh(kappa * x)) / scale

        def dshape(x):
            return kappa * (kappa * np.sinh(kappa * x)
                            + theta * np.cosh(kappa * x)) / scale

    def f(u):
        u = np.asarray(u, dtype=float)
        return np.where(u >= 0, shape(d - u), -shape(d + u))

    def fprime(u):
        u = np.asarray(u, dtype=float)
        return np.where(u >= 0, -dshape(d - u), -dshape(d + u))

    return f, fprime


# -- finite-difference oracle --------------------------------------------------

def fd_oracle(problem: TransverseProblem, n: int = 10_000) -> float:
    """Lowest eigenvalue of a second-order FD discretization.

    ``n`` counts the total interior unknowns (about n/2 per side).  The
    interface values f(0+-) are eliminated through one-sided O(h^2)
    stencils of the two matching conditions, including the interface M
    term exactly as stated; the bulk rows are the standard symmetric
    three-point scheme, so the eigenvalue converges at O(n^-2).
    """
    if n < 200:
        raise ValueError("mesh size n must be at least 200")
    d, beta, M = problem.d, problem.beta, problem.m_interface
    m = max(n // 2, 8)
    h = d / m
    dirichlet = problem.variant == "plus"
    k = m - 1 if dirichlet else m     # unknowns per side
    size = 2 * k
    # ordering: x = [q_1..q_k, p_1..p_k]; q_j = f(-j h), p_j = f(+j h)
    iq = lambda j: j - 1
    ip = lambda j: k + j - 1

    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r); cols.append(c); vals.append(v)

    inv_h2 = 1.0 / (h * h)
    for side, idx in ((-1, iq), (+1, ip)):
        for j in range(2, k):
            add(idx(j), idx(j - 1), -inv_h2)
            add(idx(j), idx(j), 2 * inv_h2)
            add(idx(j), idx(j + 1), -inv_h2)
        if dirichlet:
            add(idx(k), idx(k - 1), -inv_h2)
            add(idx(k), idx(k), 2 * inv_h2)
        else:
            # Robin end via the mirrored ghost node
            theta = problem.robin_theta
            add(idx(k), idx(k - 1), -2 * inv_h2)
            add(idx(k), idx(k), (2 + 2 * h * theta) * inv_h2)

    # interface closure: with S = f(0+)+f(0-), D = f(0+)-f(0-),
    #   S = (4 q1 - q2 + 4 p1 - p2) / 3                (deriv continuity)
    #   D = ((3/2 + 2 h M) S - (4 p1 - p2)) / (2 h / beta - 3/2)
    denom = 2 * h / beta - 1.5
    if abs(denom) < 1e-8:
        raise ValueError("mesh step resonates with beta; change n")
    cS = {iq(1): 4 / 3, iq(2): -1 / 3, ip(1): 4 / 3, ip(2): -1 / 3}
    cP = {ip(1): 4.0, ip(2): -1.0}
    cD = {c: ((1.5 + 2 * h * M) * cS.get(c, 0.0) - cP.get(c, 0.0)) / denom
          for c in set(cS) | set(cP)}
    # p0 = (S + D)/2 enters the p_1 row, q0 = (S - D)/2 the q_1 row
    for j1, j2, sgn in ((ip(1), ip(2), +1), (iq(1), iq(2), -1)):
        add(j1, j1, 2 * inv_h2)
        add(j1, j2, -inv_h2)
        for c in set(cS) | set(cD):
            coeff = 0.5 * (cS.get(c, 0.0) + sgn * cD.get(c, 0.0))
            add(j1, c, -coeff * inv_h2)

    A = sparse.csc_matrix((vals, (rows, cols)), shape=(size, size))
    sigma = -4.4 / beta**2
    w = splinalg.eigs(A, k=1, sigma=sigma, which="LM",
                      return_eigenvectors=False)
    lam = w[0]
    if abs(lam.imag) > 1e-8 * abs(lam.real):
        raise RuntimeError(f"oracle eigenvalue came out complex: {lam}")
    return float(lam.real)


def fd_oracle_refined(problem: TransverseProblem,
                      n: int = 10_000) -> tuple[float, float, float]:
    """(value at n, Richardson-extrapolated value, observed ratio).

    Solves at n/2, n, 2n; the ratio (l_{n/2}-l_n)/(l_n-l_{2n}) sits
    near 4 for a second-order scheme.
    """
    l1 = fd_oracle(problem, n // 2)
    l2 = fd_oracle(problem, n)
    l3 = fd_oracle(problem, 2 * n)
    ratio = (l1 - l2) / (l2 - l3) if l2 != l3 else math.inf
    return l2, l3 + (l3 - l2) / 3.0, ratio


# -- grid verification of the two-sided bracket ---------------------------------

@dataclass
class BracketRow:
    beta: float
    d: float
    ratio: float
    t_minus: float
    t_plus: float
    lower: float                 # -4/b^2 - 16 e^{-4d/b}/b^2
    center: float                # -4/b^2
    upper: float                 # -4/b^2 + 16 e^{-4d/b}/b^2
    slack: float                 # most negative of the four chain slacks
    n_negative_minus: int
    n_negative_plus: int
    observed_const_minus: float  # |t - center| * b^2 e^{4d/b}
    observed_const_plus: float
    in_regime: bool
    ok: bool


@dataclass
class BracketReport:
    rows: list[BracketRow] = field(default_factory=list)
    tol_scale: float = 1e-12

    @property
    def checked(self):
        return [r for r in self.rows if r.in_regime]

    @property
    def violations(self):
        return [r for r in self.checked if not r.ok]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_brackets(beta_grid, d_grid, theta: float = 0.0, *,
                    ratios: bool = False,
                    tol_scale: float = 1e-12) -> BracketReport:
    """Check the four-way chain over a (beta, d) product grid.

    ``d_grid`` holds absolute half-widths, or d/beta ratios when
    ``ratios`` is true.  Out-of-regime points (d/beta <= 2) are
    reported but not counted as violations.  Each row also carries the
    observed sharp constant  |t -+ 4/b^2| b^2 exp(4d/b)  whose excess
    over 16 is what breaks the advertised bound at small d/beta.
    """
    report = BracketReport(tol_scale=tol_scale)
    for beta in np.atleast_1d(beta_grid):
        for dv in np.atleast_1d(d_grid):
            d = float(dv * beta) if ratios else float(dv)
            center = -4.0 / beta**2
            lower, _ = lemma_bracket(beta, d, "minus")
            _, upper = lemma_bracket(beta, d, "plus")
            rm = solve_transverse(TransverseProblem(d, beta, "minus",
                                                    robin_theta=theta))
            rp = solve_transverse(TransverseProblem(d, beta, "plus"))
            slack = min(rm.eigenvalue - lower, center - rm.eigenvalue,
                        rp.eigenvalue - center, upper - rp.eigenvalue)
            in_regime = d / beta > 2.0
            scale = math.exp(4.0 * d / beta) * beta**2
            ok = (slack >= -tol_scale * abs(center)
                  and rm.n_negative == 1 and rp.n_negative == 1)
            report.rows.append(BracketRow(
                beta=float(beta), d=d, ratio=d / beta,
                t_minus=rm.eigenvalue, t_plus=rp.eigenvalue,
                lower=lower, center=center, upper=upper, slack=slack,
                n_negative_minus=rm.n_negative, n_negative_plus=rp.n_negative,
                observed_const_minus=abs(rm.eigenvalue - center) * scale,
                observed_const_plus=abs(rp.eigenvalue - center) * scale,
                in_regime=in_regime, ok=ok))
    return report


# -- quadratic-form inequality ---------------------------------------------------

@dataclass
class FormTrialReport:
    beta: float
    d: float
    bound: float
    n_trials: int
    min_margin: float            # min over trials of Q[f] - bound ||f||^2
    worst_quotient: float        # min over trials of Q[f]/||f||^2
    ground_quotient: float       # Rayleigh quotient of the Neumann ground state
    ground_eigenvalue: float
    ok: bool


def _gauss_legendre(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def check_form_inequality(beta: float, d: float, n_trials: int = 1000,
                          seed: int = 0, degree: int = 8) -> FormTrialReport:
    """Monte-Carlo check of  int |f'|^2 - (1/beta)|jump|^2 >= bound ||f||^2.

    Trials are random polynomials, independent on the two half
    intervals (so the jump at 0 is generic); integrals use Gauss
    quadrature that is exact for the trial degree.  The Neumann-end
    ground state is evaluated as well: it must saturate the quotient at
    its own eigenvalue, which sits just above the bound.
    """
    bound = -4.0 / beta**2 - 16.0 * math.exp(-4.0 * d / beta) / beta**2
    rng = np.random.default_rng(seed)
    xl, wl = _gauss_legendre(degree + 4, -d, 0.0)
    xr, wr = _gauss_legendre(degree + 4, 0.0, d)

    min_margin = math.inf
    worst_q = math.inf
    n_done = 0
    for trial in range(n_trials):
        cl = rng.standard_normal(degree + 1)
        cr = rng.standard_normal(degree + 1)
        if trial % 7 == 0:
            cr = cl.copy()       # occasionally continuous across 0
        pl, pr = np.polynomial.Polynomial(cl), np.polynomial.Polynomial(cr)
        dl, dr = pl.deriv(), pr.deriv()
        norm2 = wl @ pl(xl) ** 2 + wr @ pr(xr) ** 2
        if norm2 < 1e-12:
            continue
        energy = wl @ dl(xl) ** 2 + wr @ dr(xr) ** 2
        jump = pr(0.0) - pl(0.0)
        q_val = energy - jump**2 / beta
        min_margin = min(min_margin, q_val - bound * norm2)
        worst_q = min(worst_q, q_val / norm2)
        n_done += 1

    neumann = TransverseProblem(d, beta, "minus", robin_theta=0.0)
    res = solve_transverse(neumann)
    f = eigenfunction(neumann, res.kappa)
    xg_l, wg_l = _gauss_legendre(200, -d, 0.0)
    xg_r, wg_r = _gauss_legendre(200, 0.0, d)
    h = 1e-6 * d
    fpl = (f(xg_l + h) - f(xg_l - h)) / (2 * h)
    fpr = (f(xg_r + h) - f(xg_r - h)) / (2 * h)
    norm2 = wg_l @ f(xg_l) ** 2 + wg_r @ f(xg_r) ** 2
    jump = f(1e-300) - f(-1e-300)
    q_ground = (wg_l @ fpl**2 + wg_r @ fpr**2 - jump**2 / beta) / norm2

    ok = (min_margin >= -1e-10 * abs(bound)
          and q_ground >= bound
          and abs(q_ground - res.eigenvalue) <= 1e-6 * abs(res.eigenvalue))
    return FormTrialReport(beta=beta, d=d, bound=bound, n_trials=n_done,
                           min_margin=min_margin, worst_quotient=worst_q,
                           ground_quotient=q_ground,
                           ground_eigenvalue=res.eigenvalue, ok=ok)
