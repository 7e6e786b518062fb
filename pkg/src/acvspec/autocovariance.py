"""Sample autocovariance matrices C_n(s), their sums P and A, and row sums D_i."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .filter_spectrum import build_M, normalize_signs
from .linear_process import DataMatrix, FilterCoefficients, lagged_view
from .noise import NoiseField, TailDistribution

EIGEN_TOL = 1e-9


class CenteringError(ValueError):
    pass


@dataclass(frozen=True)
class CenteringPolicy:
    """Whether to subtract E[X_n(0) X_n(s)'].

    ``auto`` centers iff alpha > 2(1 + beta), with beta = log p / log n
    unless ``beta_hint`` is given.  At the boundary it does not center and
    warns.
    """

    mode: str = "auto"
    beta_hint: float | None = None

    def __post_init__(self):
        if self.mode not in ("auto", "on", "off"):
            raise ValueError(f"centering mode must be auto/on/off, got {self.mode!r}")
        if self.beta_hint is not None and not 0 <= self.beta_hint <= 1:
            raise ValueError(f"beta_hint must lie in [0, 1], got {self.beta_hint}")

    def beta(self, p: int, n: int) -> float:
        if self.beta_hint is not None:
            return self.beta_hint
        if p <= 1 or n <= 1:
            return 0.0
        return math.log(p) / math.log(n)

    def resolve(self, dist: TailDistribution | None, p: int, n: int) -> bool:
        if self.mode != "auto":
            return self.mode == "on"
        if dist is None:
            return False
        if dist.kind == "gaussian":
            return True
        threshold = 2.0 * (1.0 + self.beta(p, n))
        if math.isclose(dist.alpha, threshold, rel_tol=1e-12):
            warnings.warn(
                f"alpha = {dist.alpha} sits on the boundary 2(1+beta); centering left off",
                RuntimeWarning,
                stacklevel=3,
            )
            return False
        return dist.alpha > threshold


def _require_second_moment(dist: TailDistribution | None) -> TailDistribution:
    if dist is None:
        raise CenteringError("centering needs the noise distribution")
    if not math.isfinite(dist.second_moment()):
        raise CenteringError(
            f"centering requires E[Z^2] < infinity, but alpha = {dist.alpha} <= 2"
        )
    return dist


def expected_autocov(filt: FilterCoefficients, dist: TailDistribution, p: int, n: int, s: int) -> np.ndarray:
    """E[X_n(0) X_n(s)'] computed from the filter.

    Entry (i, j) equals n * (Var Z * sum_k M(s)_{k, k+j-i} + (E Z)^2 (sum h)^2).
    """
    dist = _require_second_moment(dist)
    mu = dist.mean()
    var = dist.second_moment() - mu**2
    M = build_M(filt, s)
    size = M.shape[0]
    E = np.zeros((p, p))
    for delta in range(-(size - 1), size):
        if abs(delta) >= p:
            continue
        band = np.trace(M, offset=delta)
        if band != 0.0:
            E += var * band * np.eye(p, k=delta)
    if mu != 0.0:
        E += mu**2 * filt.coeffs.sum() ** 2
    return n * E


def _resolve(X: DataMatrix, centering: CenteringPolicy, dist):
    dist = dist if dist is not None else X.dist
    return centering.resolve(dist, X.p, X.n), dist


def sample_autocov(
    X: DataMatrix,
    s: int,
    centering: CenteringPolicy = CenteringPolicy(),
    dist: TailDistribution | None = None,
) -> np.ndarray:
    """C_n(s) = X_n(0) X_n(s)', centered according to ``centering``."""
    on, dist = _resolve(X, centering, dist)
    C = lagged_view(X, 0) @ lagged_view(X, s).T
    if on:
        if X.filter is None:
            raise CenteringError("centering needs the filter that generated X")
        C -= expected_autocov(X.filter, _require_second_moment(dist), X.p, X.n, s)
    return C


def _autocovs(X, s1, s2, centering, dist, autocovs):
    if not 0 <= s1 <= s2:
        raise ValueError(f"lags must satisfy 0 <= s1 <= s2, got ({s1}, {s2})")
    if autocovs is None:
        autocovs = {}
    for s in range(s1, s2 + 1):
        if s not in autocovs:
            autocovs[s] = sample_autocov(X, s, centering, dist)
        yield autocovs[s]


def power_sum(
    X: DataMatrix,
    s1: int,
    s2: int,
    centering: CenteringPolicy = CenteringPolicy(),
    dist: TailDistribution | None = None,
    autocovs: dict | None = None,
) -> np.ndarray:
    """P(s1,s2) = sum_{s=s1}^{s2} C_n(s) C_n(s)'.

    ``autocovs`` is an optional lag -> C_n(s) cache, filled in place.
    """
    P = None
    for C in _autocovs(X, s1, s2, centering, dist, autocovs):
        G = C @ C.T
        P = G if P is None else P + G
    # C C' is symmetric in exact arithmetic; BLAS may not return it bitwise so
    return np.triu(P) + np.triu(P, 1).T


def symmetrized_sum(
    X: DataMatrix,
    s1: int,
    s2: int,
    centering: CenteringPolicy = CenteringPolicy(),
    dist: TailDistribution | None = None,
    autocovs: dict | None = None,
) -> np.ndarray:
    """A(s1,s2) = sum_s (C_n(s) + C_n(s)')/2."""
    A = None
    for C in _autocovs(X, s1, s2, centering, dist, autocovs):
        S = 0.5 * (C + C.T)
        A = S if A is None else A + S
    return A


@dataclass(frozen=True)
class SpectralResult:
    """Eigenvalues in descending order with matching unit eigenvector columns.

    With ``singular=True`` ``values`` are absolute eigenvalues (singular
    values of a symmetric matrix) and ``signs`` keeps the original signs.
    """

    values: np.ndarray
    vectors: np.ndarray
    singular: bool = False
    signs: np.ndarray | None = None

    def __post_init__(self):
        self.values.setflags(write=False)
        self.vectors.setflags(write=False)


def symmetric_eigen(A: np.ndarray, singular: bool = False, tol: float = EIGEN_TOL) -> SpectralResult:
    """Full eigendecomposition of a symmetric matrix, largest first."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = np.abs(A).max() if A.size else 0.0
    if np.abs(A - A.T).max(initial=0.0) > tol * max(scale, 1e-300):
        raise ValueError("matrix is not symmetric within tolerance")
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    key = np.abs(w) if singular else w
    order = np.argsort(-key, kind="stable")
    w, V = w[order], V[:, order]
    V = normalize_signs(V)
    if singular:
        return SpectralResult(np.abs(w), V, True, np.sign(w))
    return SpectralResult(w, V)


@dataclass(frozen=True)
class RowSums:
    """Row sums D_i, the order statistics of D_i^2 and their locations L.

    ``order[i]`` is D_(i+1)^2 and ``L[i]`` the (0-based) row achieving it.
    """

    D: np.ndarray
    order: np.ndarray
    L: np.ndarray
    tie_seed: int = 0

    @property
    def p(self) -> int:
        return self.D.shape[0]


def order_rows(D: np.ndarray, tie_seed: int = 0) -> RowSums:
    """Sort D^2 descending; tied rows are ordered by a random key from ``tie_seed``."""
    D = np.asarray(D, dtype=float)
    sq = D**2
    rng = np.random.default_rng(tie_seed)
    tiebreak = rng.permutation(D.shape[0])
    L = np.lexsort((tiebreak, -sq))
    return RowSums(D, sq[L], L, tie_seed)


def row_sum_squares(
    Z: NoiseField | np.ndarray,
    centered: bool = False,
    second_moment: float | None = None,
    p: int | None = None,
    n: int | None = None,
    tie_seed: int = 0,
) -> RowSums:
    """D_i = sum_t Z_it^2 over i < p, t < n (minus n E[Z^2] when centered)."""
    if isinstance(Z, NoiseField):
        if p is None or n is None:
            raise ValueError("p and n are required to cut the window from a NoiseField")
        if second_moment is None:
            second_moment = Z.dist.second_moment()
        Z = Z.window(p, n)
    Z = np.asarray(Z, dtype=float)
    D = np.einsum("ij,ij->i", Z, Z)
    if centered:
        if second_moment is None or not math.isfinite(second_moment):
            raise CenteringError("centering requires E[Z^2] < infinity")
        D = D - Z.shape[1] * second_moment
    return order_rows(D, tie_seed)


def process_row_sums(
    X: DataMatrix,
    centering: CenteringPolicy = CenteringPolicy(),
    tie_seed: int = 0,
) -> RowSums:
    """Row sums of the noise underlying ``X`` with the same centering rule as C_n(s)."""
    if X.noise is None:
        raise ValueError("data matrix carries no noise field")
    on = centering.resolve(X.dist, X.p, X.n)
    return row_sum_squares(X.noise, centered=on, p=X.p, n=X.n, tie_seed=tie_seed)


def empirical_stieltjes(eigs, z: complex) -> complex:
    """(1/p) sum_i 1/(lambda_i - z) for Im z > 0."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"Stieltjes transform needs Im z > 0, got {z}")
    eigs = np.asarray(eigs, dtype=float)
    return complex(np.mean(1.0 / (eigs - z)))
