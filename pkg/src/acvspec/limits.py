"""Limit objects for the largest eigenvalues: Poisson arrivals, Frechet law, ratios, trace."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filter_spectrum import KSpectrum

N_TRUNC = 10_000


def _check_alpha(alpha: float) -> float:
    if not 0 < alpha < 4:
        raise ValueError(f"tail index must lie in (0, 4), got {alpha}")
    return float(alpha)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


@dataclass(frozen=True)
class GammaSequence:
    """Arrival times Gamma_1 < Gamma_2 < ... of a unit-rate Poisson process."""

    values: np.ndarray
    seed: int

    def __len__(self) -> int:
        return self.values.shape[-1]


def sample_gamma_sequence(N: int, seed: int) -> GammaSequence:
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    return GammaSequence(np.cumsum(_rng(seed).standard_exponential(N)), seed)


def sample_gamma_matrix(N: int, reps: int, seed: int) -> np.ndarray:
    """``reps`` independent rows of Gamma_1..Gamma_N."""
    if N < 1 or reps < 1:
        raise ValueError("N and reps must be positive")
    return np.cumsum(_rng(seed).standard_exponential((reps, N)), axis=1)


def limit_eigen_points(kspec: KSpectrum | np.ndarray, gammas, alpha: float, top: int) -> np.ndarray:
    """The ``top`` largest points Gamma_i^(-4/alpha) v_j^2, descending."""
    alpha = _check_alpha(alpha)
    v = kspec.nonzero_values if isinstance(kspec, KSpectrum) else np.asarray(kspec, float)
    g = gammas.values if isinstance(gammas, GammaSequence) else np.asarray(gammas, float)
    pts = np.multiply.outer(g ** (-4.0 / alpha), v).ravel()
    return -np.sort(-pts)[:top]


def frechet_cdf(x, alpha: float, v1_sq: float):
    """P(Gamma_1^(-4/alpha) v_1^2 <= x) = exp(-x^(-alpha/4) (v_1^2)^(alpha/4))."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("Frechet cdf is evaluated at positive arguments only")
    out = np.exp(-((x / v1_sq) ** (-alpha / 4.0)))
    return out if out.ndim else float(out)


def ratio_statistics(lam, kmax: int) -> tuple[np.ndarray, int]:
    """Successive ratios lambda_{i+1}/lambda_i for i = 1..kmax and their argmin.

    The argmin is returned 1-based (it estimates a number of spikes); ties
    go to the smallest index.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape[0] < kmax + 1:
        raise ValueError(f"need {kmax + 1} eigenvalues, got {lam.shape[0]}")
    head = lam[: kmax + 1]
    if np.any(head <= 0):
        raise ValueError("ratio statistics need positive eigenvalues")
    ratios = head[1:] / head[:-1]
    return ratios, int(np.argmin(ratios)) + 1


def limit_ratio_sample(
    kmax: int,
    alpha: float,
    seed: int,
    reps: int,
    kspec: KSpectrum | None = None,
) -> np.ndarray:
    """``reps x kmax`` draws of the limiting ratio vector (q_{i+1}/q_i).

    Without ``kspec`` this is the rank-one law ((Gamma_i/Gamma_{i+1})^(4/alpha)).
    """
    alpha = _check_alpha(alpha)
    if kspec is None or kspec.rank == 1:
        G = sample_gamma_matrix(kmax + 1, reps, seed)
        return (G[:, :-1] / G[:, 1:]) ** (4.0 / alpha)
    # kmax + 1 arrivals always cover the top kmax + 1 points of the product set
    G = sample_gamma_matrix(kmax + 1, reps, seed)
    q = np.stack([limit_eigen_points(kspec, g, alpha, kmax + 1) for g in G])
    return q[:, 1:] / q[:, :-1]


@dataclass(frozen=True)
class TraceLimitSample:
    """Truncated series draws of sum_j v_j^2 sum_i Gamma_i^(-4/alpha).

    ``self_normalized`` is the first term over the series; ``tail_bound``
    estimates the omitted tail sum_{i > N} i^(-4/alpha) times sum_j v_j^2.
    """

    series: np.ndarray
    self_normalized: np.ndarray
    tail_bound: float


def trace_limit_sample(
    kspec: KSpectrum | np.ndarray,
    alpha: float,
    N_trunc: int = N_TRUNC,
    seed: int = 0,
    reps: int = 1,
    chunk: int = 256,
) -> TraceLimitSample:
    alpha = _check_alpha(alpha)
    if N_trunc < 1:
        raise ValueError(f"N_trunc must be positive, got {N_trunc}")
    v = kspec.nonzero_values if isinstance(kspec, KSpectrum) else np.asarray(kspec, float)
    total_v = float(v.sum())
    rng = _rng(seed)
    series = np.empty(reps)
    first = np.empty(reps)
    e = 4.0 / alpha
    for start in range(0, reps, chunk):
        stop = min(start + chunk, reps)
        G = np.cumsum(rng.standard_exponential((stop - start, N_trunc)), axis=1)
        terms = G ** (-e)
        series[start:stop] = total_v * terms.sum(axis=1)
        first[start:stop] = v[0] * terms[:, 0]
    tail = total_v * N_trunc ** (1.0 - e) / (e - 1.0) if e > 1 else np.inf
    return TraceLimitSample(series, first / series, float(tail))


def ks_distance(sample, cdf) -> float:
    """sup_x |F_n(x) - F(x)| for a vectorized ``cdf``.

    Left limits of F are taken at the float just below each sample point,
    so step cdfs are handled.
    """
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty sample")
    ux, first = np.unique(x, return_index=True)
    last = np.append(first[1:], n)
    F = np.asarray(cdf(ux), dtype=float)
    F_left = np.asarray(cdf(np.nextafter(ux, -np.inf)), dtype=float)
    d_plus = np.max(last / n - F)
    d_minus = np.max(F_left - first / n)
    return float(max(d_plus, d_minus, 0.0))
