"""
Spectrum statistics and repulsion estimators.

Goodness of fit (KS), tail indices, inverse-Gamma and HTMP fits, Weyl
log-weights for structured matrix classes, their closed-form repulsion
values, and the stochastic fixed-point estimator of kappa*.
"""
from dataclasses import dataclass, field
import enum
import math
import warnings

import numpy as np
from scipy import optimize, special

from ._io import dumps
from ._parallel import pmap
from .errors import (ConditioningError, ContractError, DomainError, EstimationError,
                     PrecisionError, UnreliableEstimateWarning)
from .rmt_densities import (_QUICK_ACCURACY, HTMPParams, InvGammaParams, MPParams, ScaledParams,
                            density_cdf, htmp_logpdf, mp_pdf, quick_cdf)
from .sampler import EigenSample, EnsembleSpec, RngStream, sample_laguerre_beta_eigs

__all__ = [
    "StructureKind",
    "StructureSpec",
    "KappaEstimate",
    "FitReport",
    "ks_statistic",
    "hill_estimator",
    "lower_slope",
    "invgamma_mle",
    "fit_htmp",
    "pair_log_sum",
    "log_weight",
    "closed_form_kappa",
    "regression_slope",
    "mean_update",
    "estimate_kappa_fixed_point",
    "candidate_form_fit",
]


# ----------------------------------------------------------------------------
# reports

@dataclass
class FitReport:
    """Result of a parametric fit to a spectrum.

    ``params`` holds ``gamma``, ``kappa`` and ``scale`` for the HTMP and MP
    families (``kappa`` is ``inf`` for MP) and ``alpha``, ``beta`` for the
    inverse-Gamma family.
    """

    law: str
    params: dict
    ks: float
    loglik: float
    n_points: int
    window: tuple
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {"law": self.law, "params": dict(self.params), "ks": self.ks,
                "loglik": self.loglik, "n_points": self.n_points,
                "window": list(self.window), "flags": list(self.flags)}

    def to_json(self):
        return dumps(self.to_dict())


@dataclass
class KappaEstimate:
    """Fixed-point estimate; ``stderr`` is on the kappa* scale."""

    kappa_star: float
    beta_star: float
    iterations: int
    stderr: float
    trace: np.ndarray
    slopes: np.ndarray = None
    converged: bool = True

    def to_dict(self):
        return {"kappa_star": self.kappa_star, "beta_star": self.beta_star,
                "iterations": self.iterations, "stderr": self.stderr}

    def to_json(self):
        return dumps(self.to_dict())


# ----------------------------------------------------------------------------
# goodness of fit and tails

def _values(values):
    if isinstance(values, EigenSample):
        values = values.values
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ContractError("empty input")
    if not np.all(np.isfinite(v)):
        raise ContractError("values must be finite")
    return v


def ks_statistic(values, cdf):
    """Kolmogorov-Smirnov distance between the ECDF of ``values`` and ``cdf``.

    Both one-sided gaps are taken at every sample point: F_n(x) - F(x) and
    F(x-) - F_n(x-).  Ties are handled through the step heights, and the
    left limit of ``cdf`` is read at the previous float.
    """
    v = np.sort(_values(values))
    n = v.size
    upper = np.searchsorted(v, v, side="right") / n
    lower = np.searchsorted(v, v, side="left") / n
    f = np.asarray(cdf(v), dtype=float)
    f_left = np.asarray(cdf(np.nextafter(v, -np.inf)), dtype=float)
    d = max(float(np.max(upper - f)), float(np.max(f_left - lower)), 0.0)
    return min(d, 1.0)


def hill_estimator(values, k):
    """Hill estimate of the upper tail index from the top ``k`` order statistics."""
    v = np.sort(_values(values))
    k = int(k)
    if not (1 <= k < v.size):
        raise ContractError(f"need 1 <= k < n, got k={k}, n={v.size}")
    top = v[-(k + 1):]
    if np.any(top <= 0):
        raise DomainError("Hill estimator needs positive values in the top-k window")
    logs = np.log(top)
    return float(k / np.sum(logs[1:] - logs[0]))


def lower_slope(values, fraction=0.1):
    """Log-log slope of the ECDF over the smallest ``fraction`` of the data.

    Plotting positions are (i - 1/2)/n.  A warning is issued when the slice
    spans less than one unit of ln x, where the slope is not a tail exponent.
    """
    v = np.sort(_values(values))
    if not (0.0 < fraction < 1.0):
        raise ContractError("fraction must lie in (0, 1)")
    n = v.size
    k = int(math.floor(fraction * n))
    if k < 3:
        raise ContractError("lower slice has fewer than 3 points")
    x = v[:k]
    if np.any(x <= 0):
        raise DomainError("lower_slope needs positive values")
    lx = np.log(x)
    if lx[-1] - lx[0] <= 0:
        raise ContractError("lower slice is degenerate (constant values)")
    ly = np.log((np.arange(1, k + 1) - 0.5) / n)
    if lx[-1] - lx[0] < 1.0:
        warnings.warn("lower slice spans less than one e-fold; slope unreliable",
                      UnreliableEstimateWarning, stacklevel=2)
    slope = np.polyfit(lx, ly, 1)[0]
    return float(slope)


# ----------------------------------------------------------------------------
# inverse-Gamma fits

def _gamma_shape_newton(s, max_steps=50, tol=1e-10):
    """Solve log k - digamma(k) = s for the Gamma shape (s > 0)."""
    k = (3.0 - s + math.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    trace = [k]
    for _ in range(max_steps):
        g = math.log(k) - special.digamma(k) - s
        if abs(g) < tol:
            return k, trace
        dg = 1.0 / k - special.polygamma(1, k)
        step = g / dg
        k_new = k - step
        if k_new <= 0:
            k_new = 0.5 * k
        k = k_new
        trace.append(k)
        if not math.isfinite(k):
            break
    raise EstimationError("Newton iteration for the Gamma shape did not converge", trace=trace)


def _invgamma_loglik(x, alpha, beta):
    shape = alpha - 1.0
    return float(np.sum(-alpha * np.log(x) - beta / x) + x.size * (shape * math.log(beta) - special.gammaln(shape)))


def invgamma_mle(values, window=None):
    """Maximum-likelihood fit of p(x) ~ x^{-alpha} exp(-beta/x).

    Without a window, 1/x is Gamma(alpha - 1, rate beta) and the shape solves
    the digamma equation by Newton's method.  With ``window=q`` only values
    up to the q-quantile are used and the likelihood is that of the law
    truncated at the cutoff; KS is then measured against the truncated CDF.
    """
    x = np.sort(_values(values))
    if np.any(x <= 0):
        raise DomainError("inverse-Gamma fit needs positive values")
    lo_cut, hi_cut = float(x[0]), float(x[-1])
    if window is not None:
        if not (0.0 < window <= 1.0):
            raise ContractError("window must lie in (0, 1]")
        hi_cut = float(np.quantile(x, window))
        x = x[x <= hi_cut]
    if x.size < 30:
        raise ContractError(f"need at least 30 points in the window, got {x.size}")
    y = 1.0 / x
    s = math.log(y.mean()) - float(np.mean(np.log(y)))
    if not s > 1e-12:
        raise EstimationError("degenerate data: zero spread in 1/x", trace=[s])
    shape, trace = _gamma_shape_newton(s)
    alpha, beta = shape + 1.0, shape / y.mean()

    truncated = window is not None and window < 1.0
    if truncated:
        c = hi_cut

        def nll(theta):
            a_, b_ = math.exp(theta[0]) + 1.0, math.exp(theta[1])
            tail = special.gammaincc(a_ - 1.0, b_ / c)
            if not tail > 0:
                return 1e300
            return -(_invgamma_loglik(x, a_, b_) - x.size * math.log(tail))

        start = np.array([math.log(alpha - 1.0), math.log(beta)])
        res = optimize.minimize(nll, start, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-10, "maxiter": 4000})
        if not np.all(np.isfinite(res.x)):
            raise EstimationError("truncated inverse-Gamma fit failed", trace=trace)
        alpha, beta = math.exp(res.x[0]) + 1.0, math.exp(res.x[1])
        norm = special.gammaincc(alpha - 1.0, beta / c)
        loglik = _invgamma_loglik(x, alpha, beta) - x.size * math.log(norm)

        def cdf(t):
            t = np.asarray(t, dtype=float)
            return np.clip(density_cdf(InvGammaParams(alpha, beta), t) / norm, 0.0, 1.0)
    else:
        loglik = _invgamma_loglik(x, alpha, beta)

        def cdf(t):
            return density_cdf(InvGammaParams(alpha, beta), t)

    ks = ks_statistic(x, cdf)
    return FitReport("invgamma", {"alpha": alpha, "beta": beta}, ks, loglik, int(x.size),
                     (lo_cut, hi_cut), extra={"newton_trace": trace})


# ----------------------------------------------------------------------------
# HTMP fits

GAMMA_GRID = np.round(np.arange(0.05, 0.951, 0.05), 10)
KAPPA_GRID = np.geomspace(0.1, 100.0, 13)
KAPPA_MAX = 300.0


def _htmp_ks_quick(xs, gamma, kappa, scale):
    if not (0.0 < gamma < 1.0 and 0.0 < kappa <= KAPPA_MAX and scale > 0):
        return 1.0
    try:
        p = HTMPParams(float(gamma), float(kappa))
        return ks_statistic(xs / scale, lambda t: quick_cdf(p, t))
    except (PrecisionError, ConditioningError, DomainError, ContractError):
        return 1.0


def _mp_ks(xs, gamma, scale):
    if not (0.0 < gamma < 1.0 and scale > 0):
        return 1.0
    p = MPParams(float(gamma))
    return ks_statistic(xs / scale, lambda t: density_cdf(p, t))


def _logit(g):
    return math.log(g / (1.0 - g))


def _expit(t):
    return 1.0 / (1.0 + math.exp(-t))


def _loglik_scaled(xs, logpdf, scale):
    with np.errstate(divide="ignore"):
        lp = logpdf(xs / scale)
    val = float(np.sum(lp) - xs.size * math.log(scale))
    return val if math.isfinite(val) else -math.inf


def _equal_count_bins(xs, n_bins):
    """Interior bin edges between order statistics, and the bin counts."""
    n = xs.size
    cuts = np.unique(np.round(np.linspace(0, n, n_bins + 1)).astype(int))[1:-1]
    edges = 0.5 * (xs[cuts - 1] + xs[cuts])
    counts = np.diff(np.concatenate([[0], np.searchsorted(xs, edges, side="right"), [n]]))
    return edges, counts


def _binned_loglik(edges, counts, cdf):
    with np.errstate(divide="ignore"):
        f = np.concatenate([[0.0], np.asarray(cdf(edges), dtype=float), [1.0]])
        prob = np.diff(f)
        if np.any(prob[counts > 0] <= 0):
            return -math.inf
        return float(np.sum(counts * np.log(np.where(counts > 0, prob, 1.0))))


def _htmp_binned(edges, counts, gamma, kappa, scale):
    if not (0.0 < gamma < 1.0 and 0.0 < kappa <= KAPPA_MAX and scale > 0):
        return -math.inf
    try:
        p = HTMPParams(float(gamma), float(kappa))
        return _binned_loglik(edges / scale, counts, lambda t: quick_cdf(p, t))
    except (PrecisionError, ConditioningError, DomainError, ContractError):
        return -math.inf


def _mp_binned(edges, counts, gamma, scale):
    if not (0.0 < gamma < 1.0 and scale > 0):
        return -math.inf
    p = MPParams(float(gamma))
    return _binned_loglik(edges / scale, counts, lambda t: density_cdf(p, t))


def _simplex(fun, start, steps, maxfev, xatol=1e-4, fatol=1e-6):
    start = np.asarray(start, dtype=float)
    init = np.vstack([start] + [start + np.eye(start.size)[i] * steps[i] for i in range(start.size)])
    with np.errstate(invalid="ignore"):
        return optimize.minimize(fun, start, method="Nelder-Mead",
                                 options={"initial_simplex": init, "maxfev": maxfev,
                                          "xatol": xatol, "fatol": fatol})


def fit_htmp(values, objective="likelihood", n_bins=200, maxfev=200, workers=None):
    """Fit HTMP(gamma, kappa) with a free scale, or the MP law if that is enough.

    A coarse (gamma, kappa) grid scored by the KS distance, with the scale
    set by mean matching (both families have unit mean), seeds a
    Nelder-Mead refinement over (logit gamma, log kappa, log scale).  The
    refinement maximizes a multinomial likelihood on equal-count bins (cheap
    on the fast CDF tables), which pins kappa down far better than the KS
    distance; ``objective="ks"`` refines the KS distance instead.

    The MP law is fitted the same way.  HTMP is reported only if its binned
    log-likelihood beats MP's by more than (1/2) ln n, the BIC price of the
    extra parameter, and its kappa stays below the search cap.  With the
    default ``objective="likelihood"`` a winning HTMP fit is then polished
    by maximizing the full likelihood; ``"binned-likelihood"`` stops before.
    """
    xs = np.sort(_values(values))
    n = xs.size
    if n < 100:
        raise ContractError(f"fit_htmp needs at least 100 points, got {n}")
    if np.any(xs <= 0):
        raise DomainError("fit_htmp needs positive values")
    if objective not in ("likelihood", "binned-likelihood", "ks"):
        raise ContractError("objective must be 'likelihood', 'binned-likelihood' or 'ks'")
    scale0 = float(xs.mean())
    edges, counts = _equal_count_bins(xs, min(n_bins, n // 10))
    flags = []

    cells = [(g, k) for k in KAPPA_GRID for g in GAMMA_GRID]
    grid_ks = pmap(lambda c: _htmp_ks_quick(xs, c[0], c[1], scale0), cells, workers)
    i0 = int(np.argmin(grid_ks))
    g0, k0 = cells[i0]

    if objective == "ks":
        def obj(t):
            return _htmp_ks_quick(xs, _expit(t[0]), math.exp(t[1]), math.exp(t[2]))
        start_val = grid_ks[i0]
    else:
        def obj(t):
            return -_htmp_binned(edges, counts, _expit(t[0]), math.exp(t[1]), math.exp(t[2]))
        start_val = obj([_logit(g0), math.log(k0), math.log(scale0)])
    res = _simplex(obj, [_logit(g0), math.log(k0), math.log(scale0)], [0.4, 0.4, 0.1], maxfev)
    if res.fun < start_val:
        gh, kh, sh = _expit(res.x[0]), math.exp(res.x[1]), math.exp(res.x[2])
    else:
        flags.append("optimizer-no-improvement")
        gh, kh, sh = g0, k0, scale0
    bl_h = _htmp_binned(edges, counts, gh, kh, sh)

    mp_ks = [_mp_ks(xs, g, scale0) for g in GAMMA_GRID]
    gm0 = float(GAMMA_GRID[int(np.argmin(mp_ks))])
    if objective == "ks":
        res_mp = _simplex(lambda t: _mp_ks(xs, _expit(t[0]), math.exp(t[1])),
                          [_logit(gm0), math.log(scale0)], [0.4, 0.1], maxfev)
    else:
        res_mp = _simplex(lambda t: -_mp_binned(edges, counts, _expit(t[0]), math.exp(t[1])),
                          [_logit(gm0), math.log(scale0)], [0.4, 0.1], maxfev)
    gm, sm = _expit(res_mp.x[0]), math.exp(res_mp.x[1])
    bl_m = _mp_binned(edges, counts, gm, sm)
    if not math.isfinite(bl_m):
        gm, sm = gm0, scale0
        bl_m = _mp_binned(edges, counts, gm, sm)

    window = (float(xs[0]), float(xs[-1]))
    htmp_wins = bl_h - bl_m > 0.5 * math.log(n) and kh < 0.99 * KAPPA_MAX
    extra = {"binned_loglik": {"htmp": bl_h, "mp": bl_m},
             "grid_optimum": {"gamma": float(g0), "kappa": float(k0), "ks": float(grid_ks[i0])}}
    if not htmp_wins:
        mp = MPParams(gm)
        ks = ks_statistic(xs, lambda t: density_cdf(ScaledParams(mp, sm), t))
        loglik = _loglik_scaled(xs, lambda t: np.log(mp_pdf(t, mp)), sm)
        extra["htmp_candidate"] = {"gamma": gh, "kappa": kh, "scale": sh}
        return FitReport("mp", {"gamma": gm, "kappa": math.inf, "scale": sm}, ks, loglik, n,
                         window, flags, extra)
    if objective == "likelihood":
        # polish with the full likelihood, which keeps the detail near the
        # origin that equal-count bins smear out
        def nll(t):
            g, k, sc = _expit(t[0]), math.exp(t[1]), math.exp(t[2])
            if not (0.0 < g < 1.0 and 0.0 < k <= KAPPA_MAX):
                return math.inf
            try:
                return -_loglik_scaled(xs, lambda u: htmp_logpdf(u, HTMPParams(g, k), _QUICK_ACCURACY), sc)
            except (PrecisionError, ConditioningError, DomainError):
                return math.inf

        start = [_logit(gh), math.log(kh), math.log(sh)]
        base = nll(start)
        res = _simplex(nll, start, [0.1, 0.1, 0.02], maxfev, xatol=1e-5, fatol=1e-4)
        if res.fun < base:
            gh, kh, sh = _expit(res.x[0]), math.exp(res.x[1]), math.exp(res.x[2])
        extra["binned_estimate"] = {"gamma": _expit(start[0]), "kappa": math.exp(start[1]),
                                    "scale": math.exp(start[2])}
    p = HTMPParams(gh, kh)
    # the reported KS uses the accurate quadrature table
    ks = ks_statistic(xs, lambda t: density_cdf(ScaledParams(p, sh), t))
    loglik = _loglik_scaled(xs, lambda t: htmp_logpdf(t, p), sh)
    extra["mp_candidate"] = {"gamma": gm, "scale": sm}
    return FitReport("htmp", {"gamma": gh, "kappa": kh, "scale": sh}, ks, loglik, n, window,
                     flags, extra)


# ----------------------------------------------------------------------------
# Weyl weights

class StructureKind(enum.Enum):
    Diagonal = "diag"
    CommutingBlockDiagonal = "comblock"
    SymmetricBlockDiagonal = "symblock"
    KroneckerLike = "kron"
    FullSymmetric = "full"
    FreeEigenvectors = "free"


@dataclass(frozen=True)
class StructureSpec:
    """Matrix structure class of size N = m n.

    Block kinds use n blocks of size m; eigenvalues are arranged on an
    n x m grid whose row i holds block i.  ``d_free`` is only used by
    ``FreeEigenvectors``.
    """

    kind: StructureKind
    m: int
    n: int = 1
    d_free: int = 0

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, StructureKind) else StructureKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if int(self.m) != self.m or int(self.n) != self.n or self.m < 1 or self.n < 1:
            raise ContractError("m and n must be positive integers")
        if self.N < 2:
            raise ContractError("structures need N >= 2")
        if kind is StructureKind.FreeEigenvectors and not (0 <= self.d_free <= self.N):
            raise ContractError(f"d_free must lie in [0, N], got {self.d_free}")

    @property
    def N(self):
        return int(self.m) * int(self.n)

    @classmethod
    def of_size(cls, kind, N, d_free=0):
        return cls(kind, int(N), 1, d_free)


def _untie(lam):
    """Separate coincident values by 1e-12 of the range, in index order."""
    order = np.argsort(lam, kind="stable")
    srt = lam[order]
    if srt.size < 2 or np.all(np.diff(srt) > 0):
        return lam
    span = srt[-1] - srt[0]
    if not span > 0:
        raise ConditioningError("all eigenvalues coincide; log-weight undefined")
    bumped = srt + 1e-12 * span * np.arange(srt.size)
    if not np.all(np.diff(bumped) > 0):
        raise ConditioningError("ties could not be separated at the 1e-12 tolerance")
    out = np.empty_like(lam)
    out[order] = bumped
    return out


def pair_log_sum(lam):
    """Sum over i < j of ln|lam_i - lam_j| (the Vandermonde log)."""
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.size < 2:
        return 0.0
    lam = _untie(lam)
    srt = np.sort(lam)
    total = 0.0
    for i in range(srt.size - 1):
        total += float(np.sum(np.log(srt[i + 1:] - srt[i])))
    return total


def _cross_sq(a, b):
    # sum_{k,l} (a_k - b_l)^2
    return b.size * float(np.dot(a, a)) + a.size * float(np.dot(b, b)) - 2.0 * float(a.sum() * b.sum())


def _block_vandermonde(grid):
    total = 0.0
    for row in grid:
        srt = np.sort(row)
        diff = srt[None, :] - srt[:, None]
        total += float(np.sum(np.log(diff[np.triu_indices(srt.size, 1)])))
    return total


def log_weight(s, eigs):
    """ln w(lambda) of the structure's Weyl factor.

    Eigenvalues are used in the order given (an :class:`EigenSample` is
    sorted, so pass a permuted array to randomize the block assignment);
    block kinds reshape them row-major onto an n x m grid.
    """
    lam = _values(eigs)
    if lam.size != s.N:
        raise ContractError(f"structure has N={s.N} but got {lam.size} eigenvalues")
    kind = s.kind
    if kind is StructureKind.Diagonal:
        return 0.0
    lam = _untie(lam)
    if kind is StructureKind.FullSymmetric:
        return pair_log_sum(lam)
    if kind is StructureKind.FreeEigenvectors:
        return pair_log_sum(lam[:s.d_free])
    grid = lam.reshape(s.n, s.m)
    if kind is StructureKind.SymmetricBlockDiagonal:
        return _block_vandermonde(grid)
    if kind is StructureKind.CommutingBlockDiagonal:
        total = 0.0
        for i in range(s.m):
            for j in range(i + 1, s.m):
                total += math.log(float(np.linalg.norm(grid[:, j] - grid[:, i])))
        return total
    if kind is StructureKind.KroneckerLike:
        total = 0.0
        for i in range(s.n):
            for j in range(i + 1, s.n):
                total += 0.5 * math.log(_cross_sq(grid[j], grid[i]))
        for i in range(s.m):
            for j in range(i + 1, s.m):
                total += 0.5 * math.log(_cross_sq(grid[:, j], grid[:, i]))
        return total
    raise ContractError(f"unknown structure {kind}")


def closed_form_kappa(s):
    """Closed-form kappa* and whether it is exact.

    Returns ``(value, exact)``; the commuting-block and Kronecker forms are
    empirical approximations.
    """
    m, n, N = s.m, s.n, s.N
    kind = s.kind
    if kind is StructureKind.Diagonal:
        return 0.0, True
    if kind is StructureKind.SymmetricBlockDiagonal:
        return (m - 1) * N / (N - 1), True
    if kind is StructureKind.FullSymmetric:
        return float(N), True
    if kind is StructureKind.FreeEigenvectors:
        return s.d_free * (s.d_free - 1) / (N - 1), True
    if kind is StructureKind.CommutingBlockDiagonal:
        return m / n - 1.0 / (2 * n), False
    if kind is StructureKind.KroneckerLike:
        return n / m + m / n, False
    raise ContractError(f"unknown structure {kind}")


# ----------------------------------------------------------------------------
# stochastic fixed-point estimator

def regression_slope(x, y):
    """Least-squares slope S_xy / S_xx."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - x.mean()
    sxx = float(np.dot(dx, dx))
    if not sxx > 0:
        raise EstimationError("zero spread in the Vandermonde statistic", trace=[])
    return float(np.dot(dx, y - y.mean()) / sxx)


def _replicate(s, beta, shape_alpha, stream, assignment):
    spec = EnsembleSpec(s.N, beta, shape_alpha)
    lam = np.asarray(sample_laguerre_beta_eigs(spec, stream).values)
    # solver output is sorted; a random permutation restores exchangeability
    perm = stream.child(1).generator().permutation(lam.size)
    lam = lam[perm]
    if assignment == "column" and s.n > 1:
        lam = lam.reshape(s.m, s.n).T.ravel()
    return pair_log_sum(lam), log_weight(s, lam)


def _statistics(s, beta, shape_alpha, p, stream, assignment, workers):
    pairs = pmap(lambda k: _replicate(s, beta, shape_alpha, stream.child(k), assignment),
                 range(p), workers)
    x, y = np.array(pairs).T
    return x, y


def mean_update(s, beta, shape_alpha, p, rng, assignment="row", workers=None):
    """Regression slope of log w on the Vandermonde log at a fixed beta.

    The fixed-point map moves beta towards this value, so its sign relative
    to beta gives the direction of the mean update.
    """
    x, y = _statistics(s, beta, shape_alpha, p, rng, assignment, workers)
    return regression_slope(x, y)


def _bootstrap_stderr(slopes, r, stream, block=20, reps=200):
    tail = np.asarray(slopes[-block:], dtype=float)
    if tail.size < 2 or r < 1:
        return 0.0
    gen = stream.generator()
    idx = gen.integers(0, tail.size, size=(reps, tail.size))
    means = tail[idx].mean(axis=1)
    return float(np.std(means, ddof=1) * math.sqrt(tail.size / r))


def estimate_kappa_fixed_point(s, shape_alpha=2.0, p=50, step=1.0, tol=None, rng=None,
                               beta0=None, max_iter=2000, fixed_iterations=None,
                               assignment="row", workers=None):
    """Stochastic fixed-point estimate of kappa* = N beta*.

    Each iteration draws ``p`` beta-Laguerre spectra at the current beta,
    regresses y = log w on x = sum ln|lambda_i - lambda_j| and applies
    beta <- (1 - step/(r+1)) beta + step/(r+1) * slope, clamped at 0.

    Parameters
    ----------
    tol : float, optional
        Stop when successive iterates differ by less than this; default 1e-3/N.
    beta0 : float, optional
        Starting value; default 5/N.
    fixed_iterations : int, optional
        Run exactly this many iterations and ignore ``tol``.
    assignment : {"row", "column"}
        How the permuted eigenvalues fill the n x m grid.
    """
    N = s.N
    if p < 2:
        raise ContractError("p must be at least 2")
    if not 0 < step <= 1:
        raise ContractError("step must lie in (0, 1]")
    tol = 1e-3 / N if tol is None else float(tol)
    if not tol > 0:
        raise ContractError("tol must be positive")
    if assignment not in ("row", "column"):
        raise ContractError("assignment must be 'row' or 'column'")
    rng = RngStream(42) if rng is None else rng
    beta = 5.0 / N if beta0 is None else float(beta0)
    trace = [beta]
    slopes = []
    limit = int(fixed_iterations) if fixed_iterations is not None else int(max_iter)
    converged = False
    for r in range(limit):
        x, y = _statistics(s, beta, shape_alpha, p, rng.child(0, r), assignment, workers)
        slope = regression_slope(x, y)
        slopes.append(slope)
        new = max(0.0, (1.0 - step / (r + 1)) * beta + step / (r + 1) * slope)
        trace.append(new)
        delta = abs(new - beta)
        beta = new
        if fixed_iterations is None and delta < tol:
            converged = True
            break
    if fixed_iterations is None and not converged:
        raise EstimationError(f"fixed-point iteration did not converge in {max_iter} steps",
                              trace=trace)
    iterations = len(trace) - 1
    # standard error of kappa* (N times that of beta)
    stderr = N * step * _bootstrap_stderr(slopes, iterations, rng.child(1))
    return KappaEstimate(N * beta, beta, iterations, stderr, np.asarray(trace),
                         np.asarray(slopes), converged or fixed_iterations is not None)


# ----------------------------------------------------------------------------
# candidate closed forms

_CANDIDATES = ("c1*(m-c2)", "(m-c2)/n", "c*(n/m+m/n)", "c*N")


def candidate_form_fit(points):
    """Least-squares fit of a small dictionary of kappa* forms.

    ``points`` is an array of rows (m, n, kappa).  Returns a dict with the
    best candidate, its coefficients and the residual sums of squares of
    all candidates.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ContractError("points must be rows of (m, n, kappa)")
    if pts.shape[0] < 6:
        raise ContractError(f"need at least 6 points, got {pts.shape[0]}")
    m, n, k = pts.T
    fits = {}
    # c1 m - c1 c2
    A = np.column_stack([m, np.ones_like(m)])
    (c1, c0), *_ = np.linalg.lstsq(A, k, rcond=None)
    c2 = -c0 / c1 if c1 != 0 else math.nan
    fits["c1*(m-c2)"] = ({"c1": float(c1), "c2": float(c2)}, A @ [c1, c0])
    # k = m/n - c2/n
    w = 1.0 / n
    c2b = float(-np.dot(k - m * w, w) / np.dot(w, w))
    fits["(m-c2)/n"] = ({"c2": c2b}, (m - c2b) * w)
    for name, basis in (("c*(n/m+m/n)", n / m + m / n), ("c*N", m * n)):
        c = float(np.dot(basis, k) / np.dot(basis, basis))
        fits[name] = ({"c": c}, c * basis)
    rss = {name: float(np.sum((k - pred) ** 2)) for name, (_, pred) in fits.items()}
    best = min(_CANDIDATES, key=lambda nm: rss[nm])
    return {"best": best, "coefficients": fits[best][0], "rss": rss,
            "all_coefficients": {nm: fits[nm][0] for nm in _CANDIDATES}}
