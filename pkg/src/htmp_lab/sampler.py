"""
Eigenvalue samplers.

Beta-Laguerre ensembles are drawn through a random bidiagonal matrix B with
chi-distributed entries; the eigenvalues of the tridiagonal Gram matrix
B B^T have joint density proportional to

    prod_i lambda_i^{alpha/2} e^{-lambda_i/2} prod_{i<j} |lambda_i - lambda_j|^beta.

With beta = kappa/N, alpha = kappa (1/gamma - 1) - 2 and a final scale
gamma/kappa the empirical spectral distribution approaches HTMP(gamma, kappa).
"""
from dataclasses import dataclass, field
import json
import math
import os

import numpy as np
from scipy import linalg

from ._io import atomic_write_text, dumps, read_values_csv, values_to_csv
from .errors import ContractError, DomainError

__all__ = [
    "RngStream",
    "EnsembleSpec",
    "Tridiag",
    "EigenSample",
    "htmp_ensemble_spec",
    "sample_laguerre_beta_eigs",
    "sample_htmp_esd",
    "sample_inverse_esd",
    "reciprocal_rescale",
    "tridiag_eigenvalues",
    "haar_orthogonal",
    "conjugate_with_covariance",
    "wishart_quadratic_form",
]


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream identified by ``(seed, stream_id)``.

    ``stream_id`` is an integer or a tuple of integers; substreams from
    :meth:`child` never overlap with their parent or siblings.
    """

    seed: int
    stream_id: tuple = ()

    def __post_init__(self):
        seed = int(self.seed)
        if not (0 <= seed < 2 ** 64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        sid = self.stream_id
        if isinstance(sid, (int, np.integer)):
            sid = (int(sid),)
        sid = tuple(int(v) for v in sid)
        if any(v < 0 for v in sid):
            raise DomainError("stream ids must be nonnegative")
        object.__setattr__(self, "seed", seed)
        object.__setattr__(self, "stream_id", sid)

    def child(self, *ids):
        return RngStream(self.seed, self.stream_id + tuple(ids))

    def generator(self):
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream_id)
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class EnsembleSpec:
    """Beta-Laguerre ensemble: size, repulsion, weight exponent and scale."""

    N: int
    beta_ens: float
    shape_alpha: float
    scale: float = 1.0

    def __post_init__(self):
        N = int(self.N)
        if N != self.N or N < 2:
            raise ContractError(f"N must be an integer >= 2, got {self.N}")
        # beta = 0 is allowed: independent Gamma eigenvalues, no repulsion
        if not (self.beta_ens >= 0 and math.isfinite(self.beta_ens)):
            raise ContractError(f"beta_ens must be nonnegative, got {self.beta_ens}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ContractError(f"scale must be positive, got {self.scale}")
        # smallest d degree of freedom is a - beta (N - 1) = alpha + 2
        if not (self.shape_alpha + 2 > 0 and math.isfinite(self.shape_alpha)):
            raise ContractError(f"shape_alpha must exceed -2, got {self.shape_alpha}")
        object.__setattr__(self, "N", N)

    @property
    def a(self):
        return self.shape_alpha + 2.0 + self.beta_ens * (self.N - 1)

    def chi_dofs(self):
        i = np.arange(1, self.N + 1)
        d_dof = self.a - self.beta_ens * (i - 1)
        t_dof = self.beta_ens * (self.N - i[:-1])
        return d_dof, t_dof


@dataclass(frozen=True)
class Tridiag:
    """Symmetric tridiagonal matrix by its diagonal and off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float).ravel()
        e = np.asarray(self.offdiag, dtype=float).ravel()
        if e.size != max(d.size - 1, 0):
            raise ContractError("offdiag must have length len(diag) - 1")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise ContractError("tridiagonal entries must be finite")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    def dense(self):
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass(frozen=True)
class EigenSample:
    """Sorted finite eigenvalues with a provenance record."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise ContractError("an eigenvalue sample needs at least one value")
        if not np.all(np.isfinite(v)):
            raise ContractError("eigenvalues must be finite")
        v = np.sort(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self):
        return self.values.size

    @property
    def N(self):
        return self.values.size

    def to_csv(self, path, sidecar=True):
        atomic_write_text(path, values_to_csv(self.values))
        if sidecar:
            meta = {"seed": self.meta.get("seed"), "N": self.N,
                    "params": self.meta.get("params", {})}
            for k, v in self.meta.items():
                meta.setdefault(k, v)
            atomic_write_text(sidecar_path(path), dumps(meta))

    @classmethod
    def from_csv(cls, path):
        values = read_values_csv(path)
        meta = {"source": os.path.basename(os.fspath(path))}
        side = sidecar_path(path)
        if os.path.exists(side):
            with open(side) as fh:
                meta.update(json.load(fh))
        return cls(values, meta)


def sidecar_path(path):
    return os.fspath(path) + ".meta.json"


def htmp_ensemble_spec(N, gamma, kappa):
    """Ensemble parameters whose spectrum approaches HTMP(gamma, kappa).

    ``kappa=inf`` gives the MP limit through beta = 1 (kappa_eff = N).
    """
    if not (0 < gamma < 1) and not (math.isinf(kappa) and gamma == 1):
        raise ContractError(f"gamma must lie in (0, 1), got {gamma}")
    if not kappa > 0:
        raise ContractError(f"kappa must be positive, got {kappa}")
    k_eff = float(N) if math.isinf(kappa) else float(kappa)
    alpha = k_eff * (1.0 / gamma - 1.0) - 2.0
    return EnsembleSpec(int(N), k_eff / N, alpha, gamma / k_eff)


def _chi(gen, dof):
    # chi draws as square roots of Gamma(k/2, 2) variates
    return np.sqrt(gen.gamma(np.asarray(dof) / 2.0, 2.0))


def sample_laguerre_beta_eigs(spec, rng, method="lapack"):
    """Eigenvalues of a beta-Laguerre ensemble via its tridiagonal model.

    d_i ~ chi_{a - beta(i-1)}, t_i ~ chi_{beta(N-i)} with
    a = alpha + 2 + beta (N - 1).  The tridiagonal matrix is B B^T for the
    upper bidiagonal B = bidiag(d; t):
    D_i = d_i^2 + t_i^2, D_N = d_N^2, E_i = t_i d_{i+1}.
    """
    d_dof, t_dof = spec.chi_dofs()
    if np.any(d_dof <= 0) or np.any(t_dof < 0):
        raise ContractError("chi degrees of freedom must be positive")
    gen = rng.generator()
    d = _chi(gen, d_dof)
    t = _chi(gen, t_dof)
    diag = d * d
    diag[:-1] += t * t
    off = t * d[1:]
    vals = tridiag_eigenvalues(Tridiag(diag, off), method=method) * spec.scale
    meta = {"seed": rng.seed, "stream_id": list(rng.stream_id), "ensemble": "laguerre-beta",
            "params": {"N": spec.N, "beta_ens": spec.beta_ens,
                       "shape_alpha": spec.shape_alpha, "scale": spec.scale}}
    return EigenSample(vals, meta)


def sample_htmp_esd(N, gamma, kappa, rng, method="lapack"):
    """Eigenvalues whose ESD approximates HTMP(gamma, kappa) (kappa may be inf)."""
    spec = htmp_ensemble_spec(N, gamma, kappa)
    out = sample_laguerre_beta_eigs(spec, rng, method=method)
    meta = dict(out.meta)
    meta["params"] = dict(meta["params"], law="htmp", gamma=float(gamma),
                          kappa=None if math.isinf(kappa) else float(kappa))
    return EigenSample(out.values, meta)


def reciprocal_rescale(sample, c):
    """Map eigenvalues lambda -> c / lambda; an involution for fixed c."""
    v = np.asarray(sample.values if isinstance(sample, EigenSample) else sample, dtype=float)
    if np.any(v <= 0):
        raise DomainError("reciprocal requires positive eigenvalues")
    meta = dict(sample.meta) if isinstance(sample, EigenSample) else {}
    return EigenSample(c / v, meta)


def sample_inverse_esd(N, gamma, kappa, alpha_master, beta_master, rng, method="lapack"):
    """Feature-matrix eigenvalues under the inverse-Wishart-type model.

    Requires alpha_master > kappa + 1 so that
    gamma = (kappa/2) / (alpha_master - kappa/2 - 1) lies in (0, 1).
    Pass ``gamma=None`` to use that value; an explicit gamma must agree.
    Returns (2 gamma beta_master / kappa) / lambda for an HTMP sample lambda.
    """
    if not (alpha_master > kappa + 1):
        raise ContractError(f"need alpha_master > kappa + 1, got {alpha_master} and {kappa}")
    if not beta_master > 0:
        raise ContractError("beta_master must be positive")
    implied = (kappa / 2.0) / (alpha_master - kappa / 2.0 - 1.0)
    if gamma is None:
        gamma = implied
    elif abs(gamma - implied) > 1e-6 * implied:
        raise ContractError(f"gamma={gamma} inconsistent with master parameters (implies {implied})")
    base = sample_htmp_esd(N, gamma, kappa, rng, method=method)
    c = 2.0 * gamma * beta_master / kappa
    out = reciprocal_rescale(base, c)
    meta = dict(out.meta)
    meta["params"] = dict(meta["params"], law="inverse-htmp", alpha_master=float(alpha_master),
                          beta_master=float(beta_master), rescale=c)
    return EigenSample(out.values, meta)


def _sturm_count(d, e2, x):
    """Number of eigenvalues below each shift in ``x`` (vectorized)."""
    eps = np.finfo(float).tiny ** 0.5
    # a zero pivot is replaced by -eps before it is counted
    q = d[0] - x
    q = np.where(np.abs(q) < eps, -eps, q)
    count = (q < 0).astype(np.int64)
    for i in range(1, d.size):
        q = d[i] - x - e2[i - 1] / q
        q = np.where(np.abs(q) < eps, -eps, q)
        count += q < 0
    return count


def _bisection_eigs(d, e):
    n = d.size
    if n == 1:
        return d.copy()
    ae = np.abs(e)
    r = np.zeros(n)
    r[:-1] += ae
    r[1:] += ae
    lo = float(np.min(d - r))
    hi = float(np.max(d + r))
    scale = max(abs(lo), abs(hi), 1e-300)
    tol = 1e-10 * scale
    e2 = e * e
    k = np.arange(n)
    left = np.full(n, lo)
    right = np.full(n, hi)
    # each lane brackets eigenvalue k: count(left) <= k < count(right)
    while np.max(right - left) > tol:
        mid = 0.5 * (left + right)
        c = _sturm_count(d, e2, mid)
        below = c <= k
        left = np.where(below, mid, left)
        right = np.where(below, right, mid)
        if np.all(right - left <= tol):
            break
    return 0.5 * (left + right)


def tridiag_eigenvalues(t, method="lapack"):
    """All eigenvalues of a symmetric tridiagonal matrix, ascending.

    ``method="lapack"`` calls the LAPACK bisection driver (stebz);
    ``method="bisection"`` runs a vectorized Sturm-sequence bisection inside
    the Gershgorin interval to absolute tolerance 1e-10 * max|bound|.
    """
    if not isinstance(t, Tridiag):
        t = Tridiag(*t)
    if method == "lapack":
        if t.diag.size == 1:
            return t.diag.copy()
        vals = linalg.eigvalsh_tridiagonal(t.diag, t.offdiag, lapack_driver="stebz")
    elif method == "bisection":
        vals = _bisection_eigs(t.diag, t.offdiag)
    else:
        raise ContractError(f"unknown tridiagonal method {method!r}")
    return np.sort(vals)


def haar_orthogonal(n, rng):
    """Haar-distributed orthogonal matrix (QR of a Gaussian, signs fixed by R)."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    g = gen.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    sgn = np.sign(np.diag(r))
    sgn[sgn == 0] = 1.0
    return q * sgn[None, :]


def conjugate_with_covariance(eigs, sigma_eigs, rng):
    """Eigenvalues of Sigma^{1/2} Q Lambda Q^T Sigma^{1/2} with Haar Q.

    Monte-Carlo stand-in for the free multiplicative convolution of the
    two spectra.
    """
    lam = np.asarray(eigs.values if isinstance(eigs, EigenSample) else eigs, dtype=float)
    sig = np.asarray(sigma_eigs, dtype=float).ravel()
    if lam.size != sig.size:
        raise ContractError(f"length mismatch: {lam.size} eigenvalues vs {sig.size} covariance values")
    if np.any(sig <= 0) or not np.all(np.isfinite(sig)):
        raise ContractError("covariance eigenvalues must be positive and finite")
    q = haar_orthogonal(lam.size, rng)
    a = np.sqrt(sig)[:, None] * q
    m = (a * lam[None, :]) @ a.T
    m = 0.5 * (m + m.T)
    vals = linalg.eigvalsh(m)
    meta = dict(eigs.meta) if isinstance(eigs, EigenSample) else {}
    meta["conjugated"] = {"seed": rng.seed, "stream_id": list(rng.stream_id)}
    return EigenSample(vals, meta)


def wishart_quadratic_form(N, d, n_samples, rng):
    """Samples of ((d - N + 1)/N) Z^T W^{-1} Z, W = X X^T, X ~ N x d Gaussian.

    Each value follows F(N, d - N + 1).
    """
    N, d, n_samples = int(N), int(d), int(n_samples)
    if N < 1 or n_samples < 1:
        raise ContractError("N and n_samples must be positive")
    if d < N + 2:
        raise ContractError(f"need d >= N + 2, got N={N}, d={d}")
    gen = rng.generator()
    out = np.empty(n_samples)
    batch = max(1, 2_000_000 // (N * d))
    for start in range(0, n_samples, batch):
        m = min(batch, n_samples - start)
        x = gen.standard_normal((m, N, d))
        z = gen.standard_normal((m, N))
        w = x @ np.swapaxes(x, 1, 2)
        y = np.linalg.solve(w, z[..., None])[..., 0]
        out[start:start + m] = np.einsum("ij,ij->i", z, y)
    return (d - N + 1) / N * out
