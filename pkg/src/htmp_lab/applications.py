"""
Downstream uses of the HTMP family.

Master-model parameter maps, the ridge-error scaling curve, tail checks for
stochastic-gradient norms and for covariance propagation, and a phase
classifier for empirical weight-matrix spectra.
"""
from dataclasses import dataclass, field
import enum
import math

import numpy as np

from .errors import ContractError, DomainError, EstimationError, PrecisionError
from .estimators import fit_htmp, hill_estimator, ks_statistic, lower_slope
from .rmt_densities import HTMPParams, stieltjes_deriv
from .sampler import (EigenSample, RngStream, conjugate_with_covariance, sample_htmp_esd,
                      wishart_quadratic_form)
from .specfun import reg_inc_beta

__all__ = [
    "MasterParams",
    "master_to_ensemble",
    "gamma_from_master",
    "ScalingReport",
    "scaling_error_curve",
    "f_cdf",
    "gradient_norm_tail_check",
    "pareto_covariance",
    "pipo_tail_check",
    "PhaseLabel",
    "PhaseConfig",
    "PhaseResult",
    "classify_phase",
]


# ----------------------------------------------------------------------------
# master model

@dataclass(frozen=True)
class MasterParams:
    """Inverse-Wishart-type feature-matrix model.

    ``rho`` is the temperature ratio, ``m_out`` the output dimension and
    ``sigma2`` the prior variance; ``alpha_master`` and ``beta_master`` are
    the determinant exponent and trace coefficient they induce.
    """

    rho: float
    m_out: int
    sigma2: float
    alpha_master: float
    beta_master: float

    def __post_init__(self):
        for name in ("rho", "sigma2", "alpha_master", "beta_master"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ContractError(f"{name} must be positive and finite, got {v}")
        if int(self.m_out) != self.m_out or self.m_out < 1:
            raise ContractError(f"m_out must be a positive integer, got {self.m_out}")


def master_to_ensemble(kind, rho, m_out=1, sigma2=1.0):
    """Determinant exponent and trace coefficient for a feature model.

    ``kind="activation"`` gives alpha = rho m / 2, ``kind="ntk"`` gives
    alpha = rho / 2; both use beta = rho sigma^2 / 2.
    """
    if kind == "activation":
        alpha = rho * m_out / 2.0
    elif kind == "ntk":
        alpha = rho / 2.0
    else:
        raise ContractError(f"kind must be 'activation' or 'ntk', got {kind!r}")
    return MasterParams(float(rho), int(m_out), float(sigma2), alpha, rho * sigma2 / 2.0)


def gamma_from_master(alpha_master, kappa, require_subunit=True):
    """Aspect ratio gamma = (kappa/2) / (alpha - kappa/2 - 1).

    By default gamma < 1 is required, i.e. alpha > kappa + 1.
    """
    if not (kappa > 0 and alpha_master > 0):
        raise ContractError("alpha_master and kappa must be positive")
    if not alpha_master > kappa / 2.0 + 1.0:
        raise ContractError(f"alpha_master={alpha_master} must exceed kappa/2 + 1 = {kappa / 2 + 1} "
                            "for a positive gamma")
    if require_subunit and not alpha_master > kappa + 1.0:
        raise ContractError(f"alpha_master={alpha_master} must exceed kappa + 1 = {kappa + 1} "
                            "for gamma < 1")
    return (kappa / 2.0) / (alpha_master - kappa / 2.0 - 1.0)


# ----------------------------------------------------------------------------
# scaling curve

@dataclass
class ScalingReport:
    lambda_grid: np.ndarray
    error_values: np.ndarray
    fitted_slope: float
    candidate_a: float
    candidate_b: float
    matched: str

    def to_dict(self):
        return {"lambda_grid": self.lambda_grid, "error_values": self.error_values,
                "fitted_slope": self.fitted_slope, "candidate_a": self.candidate_a,
                "candidate_b": self.candidate_b, "matched": self.matched}


def scaling_error_curve(gamma, kappa, lambda_grid, rel_tol=0.05):
    """f(lambda) = lambda^2 S'(-lambda) and its log-log slope.

    The slope is compared with 2 + kappa/2gamma - kappa/2 (``"a"``) and
    2 + kappa/2 - kappa/2gamma (``"b"``); ``matched`` names the candidate
    within ``rel_tol`` relative error, ``"both"`` or ``"neither"``.
    """
    if not math.isfinite(kappa):
        raise ContractError("scaling curve needs finite kappa")
    lam = np.sort(np.asarray(lambda_grid, dtype=float).ravel())[::-1]
    if lam.size < 2:
        raise ContractError("need at least two ridge values")
    if np.any(lam <= 0) or np.any(lam > 0.5):
        raise DomainError("ridge values must lie in (0, 0.5]")
    p = HTMPParams(float(gamma), float(kappa))
    f = lam ** 2 * stieltjes_deriv(-lam, p)
    if not np.all(np.isfinite(f)) or np.any(f <= 0):
        raise PrecisionError("non-positive or non-finite error values")
    slope = float(np.polyfit(np.log(lam), np.log(f), 1)[0])
    ca = 2.0 + kappa / (2 * gamma) - kappa / 2.0
    cb = 2.0 + kappa / 2.0 - kappa / (2 * gamma)
    hit_a = abs(slope - ca) <= rel_tol * abs(ca)
    hit_b = abs(slope - cb) <= rel_tol * abs(cb)
    matched = "both" if hit_a and hit_b else "a" if hit_a else "b" if hit_b else "neither"
    return ScalingReport(lam, f, slope, ca, cb, matched)


# ----------------------------------------------------------------------------
# gradient-norm tails

def f_cdf(x, d1, d2):
    """CDF of the F(d1, d2) law via the regularized incomplete Beta function."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, 0.0, None)
    out = reg_inc_beta(d1 / 2.0, d2 / 2.0, d1 * xc / (d1 * xc + d2))
    return np.where(x > 0, out, 0.0)


def gradient_norm_tail_check(N, d, n_samples, rng, lower_fraction=0.01, hill_fraction=0.02):
    """Compare scaled quadratic forms Z^T W^{-1} Z with their F law.

    Returns KS against F(N, d - N + 1), the lower ECDF log-slope over the
    smallest ``lower_fraction`` of samples and the Hill index of the largest
    ``hill_fraction``, next to their limiting values N/2 and (d - N + 1)/2.
    """
    vals = np.sort(wishart_quadratic_form(N, d, n_samples, rng))
    d2 = d - N + 1
    ks = ks_statistic(vals, lambda t: f_cdf(t, N, d2))
    lo = lower_slope(vals, lower_fraction)
    k = max(2, int(hill_fraction * vals.size))
    up = hill_estimator(vals, k)
    return {"ks": ks, "lower_slope": lo, "upper_index": up,
            "expected_lower": N / 2.0, "expected_upper": d2 / 2.0,
            "n_samples": int(n_samples), "dof": [int(N), int(d2)]}


# ----------------------------------------------------------------------------
# power law in, power law out

def pareto_covariance(N, alpha, rng):
    """N covariance eigenvalues drawn from Pareto(alpha) with minimum 1."""
    u = rng.generator().random(N)
    return (1.0 - u) ** (-1.0 / alpha)


def pipo_tail_check(N=2000, gamma=0.5, pareto_alpha=2.5, k=200, rng=None):
    """Hill index of an MP sample conjugated with a Pareto covariance."""
    rng = RngStream(42) if rng is None else rng
    base = sample_htmp_esd(N, gamma, math.inf, rng.child(0))
    sig = pareto_covariance(N, pareto_alpha, rng.child(1))
    mixed = conjugate_with_covariance(base, sig, rng.child(2))
    return {"hill": hill_estimator(mixed.values, k), "hill_covariance": hill_estimator(sig, k),
            "target": float(pareto_alpha), "k": int(k), "N": int(N)}


# ----------------------------------------------------------------------------
# phases

class PhaseLabel(enum.Enum):
    RandomLike = "RandomLike"
    BleedingOut = "BleedingOut"
    BulkSpikes = "BulkSpikes"
    BulkDecay = "BulkDecay"
    HeavyTailed = "HeavyTailed"
    RankCollapse = "RankCollapse"


@dataclass(frozen=True)
class PhaseConfig:
    """Thresholds of the phase classifier."""

    spike_factor: float = 1.05
    bleed_window: float = 1.25
    kappa_mp: float = 20.0
    kappa_heavy: float = 3.0
    collapse_fraction: float = 0.10
    collapse_rel: float = 1e-8
    outlier_factor: float = 3.0


@dataclass
class PhaseResult:
    label: PhaseLabel
    fit: object
    spikes: int
    edge: float = math.nan
    notes: list = field(default_factory=list)

    def to_dict(self):
        params = self.fit.params if self.fit is not None else {}
        return {"label": self.label.value, "kappa": params.get("kappa"), "gamma": params.get("gamma"),
                "scale": params.get("scale"), "ks": None if self.fit is None else self.fit.ks,
                "spikes": int(self.spikes)}


def _bulk(v, cfg):
    # values far above the upper bulk are set aside before fitting
    q50, q99 = np.quantile(v, [0.5, 0.99])
    cut = q99 + cfg.outlier_factor * (q99 - q50)
    return v[v <= cut]


def classify_phase(values, config=None, workers=None):
    """Assign one of the six spectral phases; returns a :class:`PhaseResult`.

    Rank collapse is declared when more than 10% of the eigenvalues are
    below 1e-8 of the largest.  Otherwise HTMP (or MP) is fitted to the
    bulk.  MP-like fits (MP or kappa >= 20) are split by the number of
    eigenvalues above 1.05 times the fitted edge: none is random-like,
    spikes within 1.25 times the edge are bleeding out, farther spikes give
    bulk+spikes.  Finite kappa gives bulk-decay (kappa >= 3) or heavy-tailed.
    """
    cfg = PhaseConfig() if config is None else config
    v = np.sort(np.asarray(values.values if isinstance(values, EigenSample) else values, dtype=float))
    if v.size < 100:
        raise ContractError(f"classify_phase needs at least 100 values, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ContractError("values must be finite")
    top = float(v[-1])
    if not top > 0:
        return PhaseResult(PhaseLabel.RankCollapse, None, 0)
    tiny = np.abs(v) < cfg.collapse_rel * top
    if tiny.mean() > cfg.collapse_fraction:
        return PhaseResult(PhaseLabel.RankCollapse, None, 0,
                           notes=[f"{int(tiny.sum())} of {v.size} eigenvalues below {cfg.collapse_rel} x max"])
    pos = v[v > 0]
    bulk = _bulk(pos, cfg)
    try:
        fit = fit_htmp(bulk, workers=workers)
    except (EstimationError, PrecisionError) as exc:
        raise EstimationError(f"Unclassified: fit failed ({exc})") from exc
    kappa = fit.params["kappa"]
    if fit.law == "mp" or kappa >= cfg.kappa_mp:
        g, sc = fit.params["gamma"], fit.params["scale"]
        edge = sc * (1.0 + math.sqrt(g)) ** 2
        above = pos[pos > cfg.spike_factor * edge]
        if above.size == 0:
            label = PhaseLabel.RandomLike
        elif np.all(above <= cfg.bleed_window * edge):
            label = PhaseLabel.BleedingOut
        else:
            label = PhaseLabel.BulkSpikes
        return PhaseResult(label, fit, int(above.size), edge)
    label = PhaseLabel.BulkDecay if kappa >= cfg.kappa_heavy else PhaseLabel.HeavyTailed
    return PhaseResult(label, fit, int(pos.size - bulk.size))
