"""Deterministic matrices derived from the filter: M(s), K(s1,s2), K~(s1,s2).

All matrices live on the filter's row-offset support ``k_min..k_max``;
coordinate ``j`` of a block corresponds to row offset ``k_min + j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linear_process import FilterCoefficients

RANK_TOL = 1e-12
SIGN_TOL = 1e-12


class NullKMatrixError(ValueError):
    """K(s1, s2) (or its symmetrized version) vanishes identically."""


class ConditionHError(ValueError):
    """Nonzero K-eigenvalues are tied, so predicted eigenvectors are not identifiable."""


def normalize_signs(vectors: np.ndarray, tol: float = SIGN_TOL) -> np.ndarray:
    """Flip columns so that the first entry with |x| > tol is positive."""
    V = np.array(vectors, dtype=float, copy=True)
    for j in range(V.shape[1]):
        big = np.flatnonzero(np.abs(V[:, j]) > tol)
        if big.size and V[big[0], j] < 0:
            V[:, j] = -V[:, j]
    return V


def _shift_time(coeffs: np.ndarray, s: int) -> np.ndarray:
    """Columns of H(s): entry [k, l] is h_{k, l+s}."""
    out = np.zeros_like(coeffs)
    if s < coeffs.shape[1]:
        out[:, : coeffs.shape[1] - s] = coeffs[:, s:]
    return out


def build_M(filt: FilterCoefficients, s: int) -> np.ndarray:
    """M(s)_ij = sum_l h_{i,l} h_{j,l+s} on the row-offset block."""
    if s < 0:
        raise ValueError(f"lag must be nonnegative, got {s}")
    H = filt.coeffs
    return H @ _shift_time(H, s).T


@dataclass
class KSpectrum:
    """Spectral data of K(s1,s2) or of its symmetrized counterpart.

    For ``symmetrized=False`` ``values`` are the eigenvalues v_j^2 of K; for
    ``symmetrized=True`` they are the singular values v~_j of K~ and
    ``signs`` records the sign of the matching eigenvalue.  ``vectors``
    columns are unit eigenvectors in the same order.  ``origin`` is the row
    offset of coordinate 0.
    """

    lags: tuple[int, int]
    matrix: np.ndarray
    values: np.ndarray
    vectors: np.ndarray
    rank: int
    origin: int = 0
    symmetrized: bool = False
    signs: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def nonzero_values(self) -> np.ndarray:
        return self.values[: self.rank]

    def check_no_ties(self, rtol: float = 1e-10) -> None:
        v = self.nonzero_values
        gaps = v[:-1] - v[1:]
        if np.any(gaps <= rtol * v[0]):
            j = int(np.argmax(gaps <= rtol * v[0]))
            raise ConditionHError(
                f"K-eigenvalues {j + 1} and {j + 2} at lags {self.lags} are tied "
                f"({v[j]:.6g} vs {v[j + 1]:.6g}); eigenvectors are not identifiable"
            )

    def to_dict(self) -> dict:
        return {
            "lags": list(self.lags),
            "symmetrized": self.symmetrized,
            "origin": self.origin,
            "eigenvalues": self.values.tolist(),
            "eigenvectors": self.vectors.T.tolist(),
            "rank": self.rank,
        }


def _spectrum(matrix, lags, rank_tol, origin, by_abs) -> KSpectrum:
    w, V = np.linalg.eigh(matrix)
    key = np.abs(w) if by_abs else w
    order = np.argsort(-key, kind="stable")
    w, V = w[order], V[:, order]
    values = np.abs(w) if by_abs else np.clip(w, 0.0, None)
    top = values[0] if values.size else 0.0
    if not top > 0:
        kind = "symmetrized K-matrix" if by_abs else "K-matrix"
        raise NullKMatrixError(f"null {kind} at lags ({lags[0]}, {lags[1]})")
    rank = int(np.sum(values > rank_tol * top))
    V = normalize_signs(V)
    signs = np.sign(w) if by_abs else None
    return KSpectrum(tuple(lags), matrix, values, V, rank, origin, by_abs, signs)


def _check_lags(s1, s2):
    if not 0 <= s1 <= s2:
        raise ValueError(f"lags must satisfy 0 <= s1 <= s2, got ({s1}, {s2})")


def build_K(filt: FilterCoefficients, s1: int, s2: int, rank_tol: float = RANK_TOL) -> KSpectrum:
    """K(s1,s2) = sum_{s=s1}^{s2} M(s) M(s)' and its ordered eigenpairs."""
    _check_lags(s1, s2)
    K = sum(build_M(filt, s) @ build_M(filt, s).T for s in range(s1, s2 + 1))
    K = 0.5 * (K + K.T)
    if not np.any(K != 0):
        raise NullKMatrixError(f"null K-matrix at lags ({s1}, {s2})")
    return _spectrum(K, (s1, s2), rank_tol, filt.k_min, by_abs=False)


def build_K_sym(filt: FilterCoefficients, s1: int, s2: int, rank_tol: float = RANK_TOL) -> KSpectrum:
    """K~(s1,s2) = sum_s (M(s) + M(s)')/2, ordered by absolute eigenvalue."""
    _check_lags(s1, s2)
    Kt = sum(0.5 * (build_M(filt, s) + build_M(filt, s).T) for s in range(s1, s2 + 1))
    if not np.any(Kt != 0):
        raise NullKMatrixError(f"null symmetrized K-matrix at lags ({s1}, {s2})")
    return _spectrum(Kt, (s1, s2), rank_tol, filt.k_min, by_abs=True)


def _window(size: int, a: int, p: int, origin: int | None):
    if origin is None:
        origin = -(size // 2)
    start = a + origin
    lo, hi = max(start, 0), min(start + size, p)
    return start, lo, hi


def embed_vector(u, a: int, p: int, origin: int | None = None) -> np.ndarray:
    """Place ``u`` in a p-vector with coordinate j at position ``a + origin + j``.

    ``origin`` defaults to ``-(len(u) // 2)``, i.e. the centre of ``u`` lands
    on ``a``.  Coordinates falling outside ``0..p-1`` are dropped and the
    result is not renormalized.
    """
    u = np.asarray(u, dtype=float)
    out = np.zeros(p)
    start, lo, hi = _window(u.shape[0], a, p, origin)
    if lo < hi:
        out[lo:hi] = u[lo - start : hi - start]
    return out


def embed_matrix(block, a: int, p: int, origin: int | None = None) -> np.ndarray:
    """p x p matrix holding ``block`` on the diagonal window of :func:`embed_vector`."""
    block = np.asarray(block, dtype=float)
    out = np.zeros((p, p))
    start, lo, hi = _window(block.shape[0], a, p, origin)
    if lo < hi:
        out[lo:hi, lo:hi] = block[lo - start : hi - start, lo - start : hi - start]
    return out
