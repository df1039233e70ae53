"""Scalar analysis of nonlinearities, auxiliary functions and level sets.

Everything here operates on functions of one real variable: the
nonlinearity f with antiderivative F, the auxiliary function psi, and the
family g_lambda = lambda*psi - F whose global minima drive the level
parameter lambda_r.  All analytic verdicts (monotonicity, liminf,
coercivity, uniqueness of minima) are established on finite evidence
grids with extrapolation; they are numerical verdicts, not proofs.
"""

import ast
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, EvaluationError, HypothesisError, NumericError
from .quadrature import gauss01

GRID_PER_DECADE = 2048
INFINITY_FLAG = 1e12
_REFINE_REL = 1e-9


@dataclass(frozen=True)
class Verdict:
    passed: bool
    label: str
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed


# ---------------------------------------------------------------------------
# expression grammar for custom scalar functions

_ALLOWED_CALLS = {"ln": np.log, "exp": np.exp, "abs": np.abs}
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Load,
)


def parse_expression(expr: str):
    """Compile a scalar expression in the variable t to a NumPy function.

    Grammar: +, -, *, /, ^ (or **), ln, exp, abs, numeric literals, t.
    """
    src = expr.replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ConfigurationError(f"cannot parse expression {expr!r}: {exc}")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ConfigurationError(
                f"expression {expr!r} uses unsupported syntax {type(node).__name__}"
            )
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS:
                raise ConfigurationError(
                    f"expression {expr!r} calls an unsupported function"
                )
            if len(node.args) != 1 or node.keywords:
                raise ConfigurationError("functions take exactly one argument")
        if isinstance(node, ast.Name) and node.id not in ("t",) and node.id not in _ALLOWED_CALLS:
            raise ConfigurationError(f"unknown name {node.id!r} in expression {expr!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ConfigurationError("only numeric literals are allowed")
    code = compile(tree, "<expression>", "eval")
    env = dict(_ALLOWED_CALLS)

    def func(t):
        scope = dict(env)
        scope["t"] = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = eval(code, {"__builtins__": {}}, scope)
        return np.asarray(out, dtype=float) + np.zeros_like(scope["t"])

    return func


def _cumulative_integral(f, xs: np.ndarray) -> np.ndarray:
    """F(x) = integral of f from 0 to x, evaluated at the points xs.

    Composite Gauss between consecutive sorted abscissae (and 0); wide
    gaps are split into geometric panels graded toward the end nearer
    zero, which resolves power-like integrands at any magnitude.
    """
    xs = np.asarray(xs, dtype=float)
    flat = xs.ravel()
    order = np.argsort(flat)
    sorted_x = flat[order]
    anchors = np.concatenate([sorted_x, [0.0]])
    anchors = np.unique(anchors)
    tq, wq = gauss01(12)
    grading = np.concatenate([[0.0], 0.5 ** np.arange(31, -1, -1.0)])

    def segment(a, b):
        width = b - a
        if width <= max(1.0, 0.1 * max(abs(a), abs(b))):
            edges = np.array([a, b])
        elif a >= 0.0:
            edges = a + width * grading
        else:
            edges = b - width * grading[::-1]
        lo, hi = edges[:-1], edges[1:]
        t = lo[:, None] + (hi - lo)[:, None] * tq[None, :]
        return float(np.sum((hi - lo) * (np.asarray(f(t)) @ wq)))

    # cumulative values at the anchors, integrating outward from 0
    i0 = int(np.searchsorted(anchors, 0.0))
    cum = np.empty(anchors.size)
    cum[i0] = 0.0
    for i in range(i0 + 1, anchors.size):
        cum[i] = cum[i - 1] + segment(anchors[i - 1], anchors[i])
    for i in range(i0 - 1, -1, -1):
        cum[i] = cum[i + 1] - segment(anchors[i], anchors[i + 1])
    lookup = {x: v for x, v in zip(anchors, cum)}
    out = np.array([lookup[x] for x in sorted_x])
    result = np.empty_like(flat)
    result[order] = out
    return result.reshape(xs.shape)


# ---------------------------------------------------------------------------
# nonlinearities


@dataclass(frozen=True)
class Nonlinearity:
    """Continuous nonlinearity f with antiderivative F (F(0) = 0)."""

    f: callable
    F: callable
    gamma: float
    truncated: bool = False
    description: str = "custom"

    def __post_init__(self):
        if not 1.0 <= self.gamma:
            raise ConfigurationError("growth exponent gamma must be >= 1")


def saturating(alpha: float = 1.0) -> Nonlinearity:
    """f(t) = alpha*t/(1+t^2), F(t) = (alpha/2)*ln(1+t^2)."""

    def f(t):
        t = np.asarray(t, dtype=float)
        return alpha * t / (1.0 + t * t)

    def F(t):
        t = np.asarray(t, dtype=float)
        return 0.5 * alpha * np.log1p(t * t)

    return Nonlinearity(f=f, F=F, gamma=2.0, description=f"saturating(alpha={alpha:g})")


def power(p: float) -> Nonlinearity:
    """f(t) = t^(p-1) on t >= 0, extended oddly; F(t) = |t|^p / p."""
    if p < 1.0:
        raise ConfigurationError("power exponent must be >= 1")

    def f(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            return np.sign(t) * np.abs(t) ** (p - 1.0)

    def F(t):
        t = np.asarray(t, dtype=float)
        return np.abs(t) ** p / p

    return Nonlinearity(f=f, F=F, gamma=p, description=f"power(p={p:g})")


def linear(c: float = 1.0) -> Nonlinearity:
    """f(t) = c*t, F(t) = c*t^2/2."""

    def f(t):
        return c * np.asarray(t, dtype=float)

    def F(t):
        t = np.asarray(t, dtype=float)
        return 0.5 * c * t * t

    return Nonlinearity(f=f, F=F, gamma=2.0, description=f"linear(c={c:g})")


def custom(expr: str, gamma: float = 2.0) -> Nonlinearity:
    """Nonlinearity from an expression in t; F by adaptive quadrature from 0."""
    f = parse_expression(expr)

    def F(t):
        return _cumulative_integral(f, np.asarray(t, dtype=float))

    return Nonlinearity(f=f, F=F, gamma=gamma, description=f"expr({expr})")


def truncate_nonlinearity(nl: Nonlinearity) -> Nonlinearity:
    """Constant extension below zero: f~(t) = f(t) for t >= 0, f(0) below.

    Every weak solution of the truncated problem is nonnegative, which is
    how the positive-solution statement is realized.
    """
    f0 = float(np.asarray(nl.f(0.0)))

    def f(t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0.0, nl.f(np.maximum(t, 0.0)), f0)

    def F(t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0.0, nl.F(np.maximum(t, 0.0)), f0 * t)

    return Nonlinearity(
        f=f, F=F, gamma=nl.gamma, truncated=True,
        description=nl.description + " [truncated]",
    )


def check_class_a(nl: Nonlinearity, t_max: float = 1e8) -> Verdict:
    """Growth certificate: sup |f(t)|/(1+|t|^(gamma-1)) finite on a log grid.

    Finiteness at sampled points is not enough: a ratio still climbing in
    the outermost sampled decade indicates sup = +inf and fails too.
    """
    half = np.logspace(-8, np.log10(t_max), 2000)
    t = np.concatenate([-half[::-1], [0.0], half])
    with np.errstate(all="ignore"):
        vals = np.abs(np.asarray(nl.f(t))) / (1.0 + np.abs(t) ** (nl.gamma - 1.0))
    finite = bool(np.all(np.isfinite(vals)))
    bounded = finite
    if finite:
        per_decade = 2000 // 16
        for side in (vals[: half.size][::-1], vals[half.size + 1:]):
            edge, prev = side[-1], side[-per_decade - 1]
            if edge > 1.5 * max(prev, 1e-300):
                bounded = False
    bound = float(np.max(vals)) if bounded else np.inf
    return Verdict(
        passed=bounded,
        label="class_A",
        details={"sup_ratio": bound, "gamma": nl.gamma},
    )


# ---------------------------------------------------------------------------
# auxiliary functions


@dataclass(frozen=True)
class AuxFunction:
    """Auxiliary function psi with its homogeneity constant gamma_psi."""

    psi: callable
    q: float
    gamma_psi: float
    is_default: bool = False
    description: str = "custom"

    @classmethod
    def default(cls, q: float) -> "AuxFunction":
        """psi(t) = |t|^q, for which gamma_psi = 1 exactly."""
        if q < 1.0:
            raise ConfigurationError("q must be at least 1")

        def psi(t):
            return np.abs(np.asarray(t, dtype=float)) ** q

        return cls(psi=psi, q=q, gamma_psi=1.0, is_default=True,
                   description=f"|t|^{q:g}")

    @classmethod
    def from_expression(cls, expr: str, q: float) -> "AuxFunction":
        psi = parse_expression(expr)
        half = np.logspace(-8, 8, 4000)
        t = np.concatenate([-half[::-1], half])
        with np.errstate(all="ignore"):
            ratio = np.asarray(psi(t)) / np.abs(t) ** q
        gamma_psi = float(np.nanmax(ratio))
        per_decade = 4000 // 16
        edge_growth = max(
            ratio[-1] / max(ratio[-per_decade - 1], 1e-300),
            ratio[0] / max(ratio[per_decade], 1e-300),
        )
        if not np.isfinite(gamma_psi) or edge_growth > 1.5:
            raise ConfigurationError(
                "psi violates (i3): psi(t)/|t|^q is unbounded on the sample grid"
            )
        return cls(psi=psi, q=q, gamma_psi=gamma_psi, description=f"expr({expr})")


def check_aux_conditions(aux: AuxFunction) -> Verdict:
    """Conditions (i1) sup psi > 0, (i2) inf psi/(1+|t|^q) > -inf, (i3) gamma_psi < inf."""
    t = np.concatenate([-np.logspace(-8, 8, 4000)[::-1], [0.0], np.logspace(-8, 8, 4000)])
    with np.errstate(all="ignore"):
        vals = np.asarray(aux.psi(t))
    i1 = bool(np.nanmax(vals) > 0.0)
    low = vals / (1.0 + np.abs(t) ** aux.q)
    i2 = bool(np.isfinite(np.nanmin(low)))
    i3 = bool(np.isfinite(aux.gamma_psi))
    return Verdict(
        passed=i1 and i2 and i3,
        label="psi_family",
        details={"i1": i1, "i2": i2, "i3": i3, "gamma_psi": aux.gamma_psi},
    )


# ---------------------------------------------------------------------------
# hypothesis checks


def check_h1(nl: Nonlinearity, q: float, samples: int = 16 * GRID_PER_DECADE) -> Verdict:
    """(h1): t -> f(t)/t^(q-1) strictly decreasing on (0, inf) with limit 0.

    Verified on a log grid over (1e-8, 1e8); strictness is up to floating
    point plateaus (consecutive equal values within machine noise are
    tolerated, but any increase fails).
    """
    if samples < 1000:
        raise ConfigurationError("h1 check needs at least 1000 samples")
    t = np.logspace(-8, 8, samples)
    with np.errstate(all="ignore"):
        ratio = np.asarray(nl.f(t)) / t ** (q - 1.0)
    if not np.all(np.isfinite(ratio)):
        raise EvaluationError("f(t)/t^(q-1) is not finite on the evidence grid")
    noise = 4.0 * np.finfo(float).eps * np.maximum.reduce(
        [np.abs(ratio[1:]), np.abs(ratio[:-1]), np.full(samples - 1, 1e-300)]
    )
    decreasing = bool(np.all(np.diff(ratio) <= noise)) and ratio[-1] < ratio[0]
    first_decade = np.abs(ratio[t <= 1e-7])
    last_decade = np.abs(ratio[t >= 1e7])
    limit_ok = bool(np.max(last_decade) <= 1e-6 * max(np.min(first_decade), 1e-300))
    return Verdict(
        passed=decreasing and limit_ok,
        label="h1",
        details={
            "decreasing": decreasing,
            "limit_zero": limit_ok,
            "limit_estimate": float(ratio[-1]),
        },
    )


@dataclass(frozen=True)
class LiminfResult:
    value: float
    extrapolated: float
    infinite: bool


def liminf_F_over_xi2_at_zero(nl: Nonlinearity) -> LiminfResult:
    """liminf of F(xi)/xi^2 as xi -> 0+ on a log grid with Richardson step.

    The reported value is the minimum over the finest sampled decade;
    values above 1e12 are flagged as numerically infinite.
    """
    xi = np.logspace(-8, -1, 7 * GRID_PER_DECADE)
    with np.errstate(all="ignore"):
        g = np.asarray(nl.F(xi)) / xi**2
    finest = g[xi <= 1e-7]
    value = float(np.min(finest))
    # one Richardson step on a halving sequence assuming an O(xi) defect
    seq_xi = 1e-4 * 0.5 ** np.arange(10)
    seq = np.asarray(nl.F(seq_xi)) / seq_xi**2
    extrap = float(2.0 * seq[-1] - seq[-2])
    infinite = value > INFINITY_FLAG
    return LiminfResult(value=value, extrapolated=extrap, infinite=infinite)


def alpha_threshold(lambda1: float, liminf0) -> float:
    """Scaling threshold lambda1 / (2 liminf); 0 when the liminf is infinite."""
    if isinstance(liminf0, LiminfResult):
        if liminf0.infinite:
            return 0.0
        liminf0 = liminf0.extrapolated
    if liminf0 == np.inf:
        return 0.0
    if liminf0 <= 0.0:
        raise HypothesisError(
            "liminf of F(xi)/xi^2 at 0+ must be positive for the threshold statement"
        )
    return float(lambda1) / (2.0 * float(liminf0))


def check_h2(nl: Nonlinearity, lambda1: float, h_essinf: float) -> Verdict:
    """(h2): liminf_{xi->0+} F(xi)/xi^2 > lambda1 / (2 essinf h)."""
    if h_essinf <= 0.0:
        raise HypothesisError("(h2) requires essinf h > 0; the theorem is inapplicable")
    lim = liminf_F_over_xi2_at_zero(nl)
    threshold = lambda1 / (2.0 * h_essinf)
    val = np.inf if lim.infinite else lim.extrapolated
    return Verdict(
        passed=bool(val > threshold),
        label="h2",
        details={
            "liminf": val,
            "threshold": threshold,
            "liminf_finest_decade_min": lim.value,
        },
    )


@dataclass(frozen=True)
class HStats:
    """Summary statistics of the coefficient field h."""

    esssup: float
    essinf: float
    l1: float


def _h3_rhs(xi: np.ndarray, q: float, c_q: float, h: HStats) -> np.ndarray:
    return xi**2 / (2.0 * (c_q * h.esssup) ** (2.0 / q) * h.l1 ** ((q - 2.0) / q))


def check_h3(nl: Nonlinearity, q: float, c_q: float, h: HStats) -> Verdict:
    """(h3): exists xi0 > 0 with F(xi0) < xi0^2 / (2 (c_q esssup h)^{2/q} ||h||_1^{(q-2)/q})."""
    if c_q <= 0.0 or h.esssup <= 0.0 or h.l1 <= 0.0:
        raise ConfigurationError("(h3) needs positive c_q and h statistics")
    xi = np.logspace(-4, 6, 10 * GRID_PER_DECADE)
    with np.errstate(all="ignore"):
        lhs = np.asarray(nl.F(xi))
    rhs = _h3_rhs(xi, q, c_q, h)
    ok = lhs < rhs
    if not np.any(ok):
        return Verdict(passed=False, label="h3", details={"witness": None})
    k = int(np.argmax(ok))
    return Verdict(
        passed=True,
        label="h3",
        details={
            "witness": float(xi[k]),
            "lhs": float(lhs[k]),
            "rhs": float(rhs[k]),
            "margin": float(rhs[k] - lhs[k]),
        },
    )


# ---------------------------------------------------------------------------
# g_lambda machinery


def _scalar_grid(span: float = 1e6) -> np.ndarray:
    pos = np.logspace(-8, np.log10(span), 14 * GRID_PER_DECADE // 8)
    return np.concatenate([-pos[::-1], [0.0], pos])


def _refine_minimum(g, lo: float, hi: float):
    """Golden-section refinement of a bracketed minimum to relative width 1e-9."""
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    gc, gd = float(g(c)), float(g(d))
    while (b - a) > _REFINE_REL * max(1.0, abs(a), abs(b)):
        if gc <= gd:
            b, d, gd = d, c, gc
            c = b - phi * (b - a)
            gc = float(g(c))
        else:
            a, c, gc = c, d, gd
            d = a + phi * (b - a)
            gd = float(g(d))
    x = 0.5 * (a + b)
    return x, float(g(x))


def _global_minimizers(nl: Nonlinearity, aux: AuxFunction, lam: float,
                       grid: np.ndarray, Fg: np.ndarray, psig: np.ndarray):
    """All global minimizers of g_lambda on the grid, refined locally.

    Returns (list of minimizers, global value, coercive verdict).
    """
    with np.errstate(all="ignore"):
        g = lam * psig - Fg
    if not np.all(np.isfinite(g)):
        return [], np.nan, False
    # coercivity proxy: growth over the outermost decade on both sides
    n_edge = GRID_PER_DECADE // 8
    left_grows = g[0] > g[n_edge] and g[0] > np.min(g)
    right_grows = g[-1] > g[-n_edge - 1] and g[-1] > np.min(g)
    coercive = bool(left_grows and right_grows)

    def g_scalar(t):
        return lam * aux.psi(t) - nl.F(t)

    order = np.argsort(g)
    gmin_grid = g[order[0]]
    candidates = []
    span = np.max(g) - gmin_grid
    for idx in order[: 64]:
        if g[idx] > gmin_grid + 1e-6 * max(1.0, abs(gmin_grid)) + 1e-12 * span:
            break
        lo = grid[max(idx - 1, 0)]
        hi = grid[min(idx + 1, grid.size - 1)]
        x, val = _refine_minimum(g_scalar, lo, hi)
        candidates.append((x, val))
    if not candidates:
        return [], np.nan, coercive
    best = min(v for _, v in candidates)
    tol = 1e-9 * max(1.0, abs(best))
    minimizers = []
    for x, val in sorted(candidates):
        if val <= best + tol:
            if not minimizers or abs(x - minimizers[-1]) > 1e-7 * max(1.0, abs(x)):
                minimizers.append(x)
    return minimizers, best, coercive


@dataclass(frozen=True)
class GLambdaAnalysis:
    lambda_range: tuple
    coercive: bool
    minima: dict
    unique: bool
    alpha_val: float
    beta_val: float


def _psi_bounds(aux: AuxFunction, grid: np.ndarray, psig: np.ndarray):
    """(inf psi, sup psi) with grid-edge growth promoted to infinity."""
    inf_psi = float(np.min(psig))
    sup_psi = float(np.max(psig))
    n_edge = GRID_PER_DECADE // 8
    if psig[-1] >= 1.5 * psig[-n_edge - 1] or psig[0] >= 1.5 * psig[n_edge]:
        sup_psi = np.inf
    return inf_psi, sup_psi


def analyze_g_lambda(
    nl: Nonlinearity,
    aux: AuxFunction,
    a: float = 0.0,
    b: float = np.inf,
    lambda_samples: int = 16,
) -> GLambdaAnalysis:
    """Coercivity/uniqueness scan of g_lambda over sampled lambda in (a, b),
    plus the interval endpoints alpha(F, psi, b) and beta(F, psi, a).

    Conventions: sup of an empty minimizer set is -inf, inf is +inf; the
    minimizer set at lambda = +inf is empty.
    """
    if not 0.0 <= a < b:
        raise ConfigurationError("need 0 <= a < b")
    if lambda_samples < 8:
        raise ConfigurationError("need at least 8 lambda samples")
    grid = _scalar_grid()
    with np.errstate(all="ignore"):
        Fg = np.asarray(nl.F(grid))
        psig = np.asarray(aux.psi(grid))

    lo = max(a, 1e-3) if a == 0.0 else a
    hi = min(b, 1e3) if b == np.inf else b
    lams = np.logspace(np.log10(lo), np.log10(hi), lambda_samples)
    lams = lams[(lams > a) & (lams < b)]

    minima = {}
    coercive_all = True
    unique = True
    for lam in lams:
        mins, _, coer = _global_minimizers(nl, aux, float(lam), grid, Fg, psig)
        minima[float(lam)] = mins
        coercive_all = coercive_all and coer
        unique = unique and len(mins) == 1

    inf_psi, sup_psi = _psi_bounds(aux, grid, psig)

    # alpha(F, psi, b) = max(inf psi, sup over M(F, psi, b) of psi)
    if b == np.inf:
        sup_m = -np.inf  # M at +inf is empty
    else:
        mb, _, _ = _global_minimizers(nl, aux, b, grid, Fg, psig)
        sup_m = max((float(aux.psi(x)) for x in mb), default=-np.inf)
    alpha_val = max(inf_psi, sup_m)

    # beta(F, psi, a) = min(sup psi, inf over M(F, psi, a) of psi)
    ma, _, _ = _global_minimizers(nl, aux, a, grid, Fg, psig)
    inf_m = min((float(aux.psi(x)) for x in ma), default=np.inf)
    beta_val = min(sup_psi, inf_m)

    return GLambdaAnalysis(
        lambda_range=(a, b),
        coercive=coercive_all,
        minima=minima,
        unique=unique,
        alpha_val=float(alpha_val),
        beta_val=float(beta_val),
    )


@dataclass(frozen=True)
class LevelParameter:
    lambda_r: float
    xi_star: float
    psi_value: float


def _unique_minimizer(nl, aux, lam, grid, Fg, psig) -> float:
    mins, _, _ = _global_minimizers(nl, aux, lam, grid, Fg, psig)
    if len(mins) != 1:
        raise NumericError(
            f"g_lambda at lambda={lam:g} does not have a unique global minimum"
        )
    return mins[0]


def find_level_parameter(
    nl: Nonlinearity, aux: AuxFunction, r: float, analysis: GLambdaAnalysis
) -> LevelParameter:
    """Bisection on lambda -> psi(xi*_lambda) to hit the level r.

    Requires r inside (alpha, beta); the scalar map is monotone
    non-increasing in lambda for the coercive families treated here, with
    a dense-scan fallback when the bracket misbehaves.
    """
    if not analysis.alpha_val < r < analysis.beta_val:
        raise ConfigurationError(
            f"level r={r:g} outside the admissible interval "
            f"({analysis.alpha_val:g}, {analysis.beta_val:g})"
        )
    if not analysis.coercive:
        raise NumericError(
            "g_lambda is not coercive on the sampled lambda range; "
            "global minimizers (and hence the level map) are undefined"
        )
    a, b = analysis.lambda_range
    grid = _scalar_grid()
    with np.errstate(all="ignore"):
        Fg = np.asarray(nl.F(grid))
        psig = np.asarray(aux.psi(grid))

    def level(lam):
        xi = _unique_minimizer(nl, aux, lam, grid, Fg, psig)
        return float(aux.psi(xi)), xi

    tol = 1e-8 * max(1.0, r)

    # bracket: psi(xi*) decreases as lambda grows
    lo = max(a, 1e-8) if a == 0.0 else a * (1.0 + 1e-12)
    hi = min(b, 1e8)
    flo, _ = level(lo)
    fhi, _ = level(hi)
    expand = 0
    while flo < r and lo > 1e-14 and a == 0.0:
        lo *= 0.1
        flo, _ = level(lo)
        expand += 1
        if expand > 8:
            break
    expand = 0
    while fhi > r and (b == np.inf and hi < 1e14):
        hi *= 10.0
        fhi, _ = level(hi)
        expand += 1
        if expand > 8:
            break

    if flo >= r >= fhi:
        best = None
        for _ in range(200):
            mid = np.sqrt(lo * hi)
            fm, xm = level(mid)
            if best is None or abs(fm - r) < abs(best[1] - r):
                best = (mid, fm, xm)
            if abs(fm - r) <= tol:
                return LevelParameter(lambda_r=mid, xi_star=xm, psi_value=fm)
            if fm > r:
                lo = mid
            else:
                hi = mid
            # once the bracket has collapsed the level cannot improve; any
            # residual mismatch is refinement noise in the minimizer
            if hi - lo <= 1e-12 * hi:
                break
        if best is not None and abs(best[1] - r) <= 1e3 * tol:
            return LevelParameter(lambda_r=best[0], xi_star=best[2], psi_value=best[1])

    # dense fallback scan
    lams = np.logspace(np.log10(max(lo, 1e-14)), np.log10(hi), 4096)
    best = None
    for lam in lams:
        try:
            fm, xm = level(float(lam))
        except NumericError:
            continue
        if best is None or abs(fm - r) < abs(best[1] - r):
            best = (float(lam), fm, xm)
    if best is not None and abs(best[1] - r) <= tol:
        return LevelParameter(lambda_r=best[0], xi_star=best[2], psi_value=best[1])
    raise NumericError(
        f"could not locate lambda with psi(xi*) = {r:g}; "
        "the level map appears non-monotone or discontinuous"
    )


def check_condition_F(
    nl: Nonlinearity,
    aux: AuxFunction,
    r: float,
    c_q: float,
    h: HStats,
    level: LevelParameter,
) -> Verdict:
    """Inequality (F): sup over psi^{-1}(r) of F, which equals F(xi*_{lambda_r}),
    must be strictly below r^{2/q} / (2 (c_q gamma_psi esssup h)^{2/q} ||h||_1^{(q-2)/q})."""
    q = aux.q
    lhs = float(np.asarray(nl.F(level.xi_star)))
    rhs = float(
        r ** (2.0 / q)
        / (2.0 * (c_q * aux.gamma_psi * h.esssup) ** (2.0 / q) * h.l1 ** ((q - 2.0) / q))
    )
    return Verdict(
        passed=bool(lhs < rhs),
        label="condition_F",
        details={"lhs": lhs, "rhs": rhs, "margin": rhs - lhs, "r": r},
    )


def find_admissible_r(
    nl: Nonlinearity,
    aux: AuxFunction,
    analysis: GLambdaAnalysis,
    c_q: float,
    h: HStats,
    grid_size: int = 32,
):
    """Scan the interval (alpha, beta) for levels r satisfying (F).

    Returns (best_r, best_level, best_verdict, all_passing_r): the best r
    maximizes the margin in (F), which favors large levels and hence a
    roomy constraint ball for the solver.  The selection rule is a
    pragmatic choice; any admissible r certifies existence.
    """
    lo = analysis.alpha_val
    hi = analysis.beta_val
    if not lo < hi:
        raise HypothesisError("empty admissible interval: alpha >= beta")
    lo_eff = max(lo, 1e-8)
    hi_eff = min(hi, 1e8)
    rs = np.logspace(np.log10(lo_eff * (1 + 1e-9)), np.log10(hi_eff), grid_size)
    rs = rs[(rs > lo) & (rs < hi)]
    best = None
    passing = []
    for r in rs:
        try:
            level = find_level_parameter(nl, aux, float(r), analysis)
        except (NumericError, ConfigurationError):
            continue
        verdict = check_condition_F(nl, aux, float(r), c_q, h, level)
        if verdict.passed:
            passing.append(float(r))
            margin = verdict.details["margin"]
            if best is None or margin > best[3]:
                best = (float(r), level, verdict, margin)
    if best is None:
        return None, None, Verdict(False, "condition_F", {"witness": None}), []
    return best[0], best[1], best[2], passing
