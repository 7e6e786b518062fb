"""Order-statistic approximations of the top eigenvalues and eigenvectors of P and A."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autocovariance import RowSums
from .filter_spectrum import KSpectrum, embed_matrix, embed_vector


@dataclass(frozen=True)
class ApproxSpectrum:
    """Ordered predictions with their labels.

    ``values[i] = weight[rows[i]] * kvalues[components[i]]`` where the weight
    is D^2 (or Z^4) for P and |D| (or Z^2) for the symmetrized A.  Row and
    component labels are 0-based.
    """

    values: np.ndarray
    rows: np.ndarray
    components: np.ndarray
    kind: str = "gamma"
    symmetrized: bool = False


def _kvalues(kspec: KSpectrum) -> np.ndarray:
    v = np.array(kspec.values, dtype=float)
    v[kspec.rank :] = 0.0
    return v


def merge_products(weights: np.ndarray, kvalues: np.ndarray, top: int):
    """Largest ``top`` products weights[a] * kvalues[b] with labels (a, b).

    Ties go to the larger weight, then to the smaller b.
    """
    weights = np.asarray(weights, dtype=float)
    kvalues = np.asarray(kvalues, dtype=float)
    prod = np.multiply.outer(weights, kvalues)
    a = np.repeat(np.arange(weights.shape[0]), kvalues.shape[0])
    b = np.tile(np.arange(kvalues.shape[0]), weights.shape[0])
    flat = prod.ravel()
    # lexsort: last key is primary
    idx = np.lexsort((b, -weights[a], -flat))[:top]
    return flat[idx], a[idx], b[idx]


def gamma_values(rowsums: RowSums, kspec: KSpectrum, p: int | None = None) -> ApproxSpectrum:
    """gamma_1 >= ... >= gamma_p from {D_i^2 v_j^2} (or {|D_i| v~_j} for K~)."""
    top = rowsums.p if p is None else p
    weights = np.abs(rowsums.D) if kspec.symmetrized else rowsums.D**2
    vals, a, b = merge_products(weights, _kvalues(kspec), top)
    return ApproxSpectrum(vals, a, b, "gamma", kspec.symmetrized)


def delta_values(Z: np.ndarray, kspec: KSpectrum, p: int | None = None) -> ApproxSpectrum:
    """delta_i from {Z_(i)^4 v_j^2 : i <= p} over the whole p x n field.

    Row labels give the field row of the order statistic.  The symmetrized
    variant uses Z^2 and v~_j.
    """
    Z = np.asarray(Z, dtype=float)
    top = Z.shape[0] if p is None else p
    power = 2 if kspec.symmetrized else 4
    flat = np.abs(Z).ravel() ** power
    k = min(top, flat.size)
    part = np.argpartition(-flat, k - 1)[:k]
    part = part[np.argsort(-flat[part], kind="stable")]
    vals, i, b = merge_products(flat[part], _kvalues(kspec), top)
    rows = part[i] // Z.shape[1]
    return ApproxSpectrum(vals, rows, b, "delta", kspec.symmetrized)


def predicted_eigenvectors(approx: ApproxSpectrum, kspec: KSpectrum, p: int, k: int) -> list[np.ndarray]:
    """u_{b(i)} embedded at row a(i) for i < k.

    Requires distinct nonzero K-eigenvalues; ties raise ConditionHError.
    """
    kspec.check_no_ties()
    out = []
    for i in range(min(k, approx.values.shape[0])):
        u = kspec.vectors[:, approx.components[i]]
        out.append(embed_vector(u, int(approx.rows[i]), p, origin=kspec.origin))
    return out


def default_block_count(p: int) -> int:
    """floor(p^(1/4)): grows with p while k^2 = o(p)."""
    return max(1, int(np.floor(p**0.25 + 1e-12)))


def block_approximation(rowsums: RowSums, kspec: KSpectrum | np.ndarray, p: int, k: int, origin: int = 0) -> np.ndarray:
    """sum_{i<k} D_(i)^2 K_{L_i}: the K-block embedded at each of the k largest rows.

    Overlapping blocks add.  For a symmetrized spectrum the weight is D itself
    (K~ enters linearly).
    """
    if k > rowsums.p:
        raise ValueError(f"k = {k} exceeds the number of rows {rowsums.p}")
    if isinstance(kspec, KSpectrum):
        block, origin = kspec.matrix, kspec.origin
        symmetrized = kspec.symmetrized
    else:
        block, symmetrized = np.asarray(kspec, float), False
    out = np.zeros((p, p))
    for i in range(k):
        L = int(rowsums.L[i])
        w = rowsums.D[L] if symmetrized else rowsums.order[i]
        out += w * embed_matrix(block, L, p, origin=origin)
    return out


def blocks_separated(rowsums: RowSums, k: int, width: int) -> bool:
    """True when the k leading rows are pairwise more than ``2 * width`` apart."""
    L = np.sort(np.asarray(rowsums.L[:k]))
    return bool(np.all(np.diff(L) > 2 * width))


def approximation_error(lam, approx: ApproxSpectrum | np.ndarray, a_np: float, top: int | None = None) -> float:
    """a_np^-4 max_i |lambda_i - gamma_i| (a_np^-2 for symmetrized spectra)."""
    lam = np.asarray(lam, dtype=float)
    if isinstance(approx, ApproxSpectrum):
        power = 2 if approx.symmetrized else 4
        g = approx.values
    else:
        power, g = 4, np.asarray(approx, dtype=float)
    if top is not None:
        lam, g = lam[:top], g[:top]
    if lam.shape != g.shape:
        raise ValueError(f"length mismatch: {lam.shape[0]} eigenvalues vs {g.shape[0]} approximations")
    return float(np.max(np.abs(lam - g)) / a_np**power)


def alignment(y, u, tol: float = 1e-8) -> float:
    """|<y, u>| for unit vectors."""
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    for name, v in (("y", y), ("u", u)):
        if abs(np.linalg.norm(v) - 1.0) > tol:
            raise ValueError(f"{name} is not a unit vector (norm {np.linalg.norm(v):.12g})")
    return float(min(1.0, abs(y @ u)))


def spike_alignment(y, u_pred) -> float:
    """Alignment with a possibly boundary-clipped prediction, rescaled to unit norm.

    Returns 0 when the prediction was clipped away entirely.
    """
    u_pred = np.asarray(u_pred, dtype=float)
    norm = np.linalg.norm(u_pred)
    if norm == 0:
        return 0.0
    y = np.asarray(y, dtype=float)
    return alignment(y / np.linalg.norm(y), u_pred / norm)
