"""Two-dimensional linear process X_it = sum_{k,l} h_kl Z_{i-k, t-l}."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import NoiseField, TailDistribution, sample_noise


@dataclass(frozen=True, eq=False)
class FilterCoefficients:
    """Finite coefficient array (h_kl).

    ``coeffs[a, b]`` holds h_{k_min + a, l_min + b}; everything outside the
    block is zero.  ``k`` indexes rows (cross-section), ``l`` indexes time.
    """

    coeffs: np.ndarray
    k_min: int = 0
    l_min: int = 0

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 2 or c.size == 0:
            raise ValueError("filter coefficients must be a nonempty 2-d block")
        if not np.all(np.isfinite(c)):
            raise ValueError("filter coefficients must be finite")
        if not np.any(c != 0):
            raise ValueError("filter has no nonzero coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "k_min", int(self.k_min))
        object.__setattr__(self, "l_min", int(self.l_min))

    @classmethod
    def identity(cls) -> "FilterCoefficients":
        return cls(np.ones((1, 1)))

    @classmethod
    def separable(cls, d, c) -> "FilterCoefficients":
        """h_kl = d_k c_l for k, l >= 0."""
        return cls(np.outer(np.asarray(d, float), np.asarray(c, float)))

    @property
    def k_max(self) -> int:
        return self.k_min + self.coeffs.shape[0] - 1

    @property
    def l_max(self) -> int:
        return self.l_min + self.coeffs.shape[1] - 1

    @property
    def row_offsets(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    @property
    def m(self) -> int:
        """Smallest m with h_kl = 0 whenever max(|k|, |l|) > m."""
        ks, ls = np.nonzero(self.coeffs)
        return int(max(np.abs(ks + self.k_min).max(), np.abs(ls + self.l_min).max()))

    def get(self, k: int, l: int) -> float:
        a, b = k - self.k_min, l - self.l_min
        if 0 <= a < self.coeffs.shape[0] and 0 <= b < self.coeffs.shape[1]:
            return float(self.coeffs[a, b])
        return 0.0

    def nonzero(self):
        """Iterate over (k, l, h_kl) for the nonzero coefficients."""
        for a, b in zip(*np.nonzero(self.coeffs)):
            yield int(a) + self.k_min, int(b) + self.l_min, float(self.coeffs[a, b])

    def padded(self, k_min: int, k_max: int, l_min: int, l_max: int) -> "FilterCoefficients":
        """Same filter on a larger support box."""
        if k_min > self.k_min or k_max < self.k_max or l_min > self.l_min or l_max < self.l_max:
            raise ValueError("padding box must contain the current support")
        block = np.zeros((k_max - k_min + 1, l_max - l_min + 1))
        a, b = self.k_min - k_min, self.l_min - l_min
        block[a : a + self.coeffs.shape[0], b : b + self.coeffs.shape[1]] = self.coeffs
        return FilterCoefficients(block, k_min, l_min)

    def to_dict(self) -> dict:
        return {"coeffs": self.coeffs.tolist(), "k_min": self.k_min, "l_min": self.l_min}

    @classmethod
    def from_dict(cls, d: dict) -> "FilterCoefficients":
        unknown = set(d) - {"coeffs", "k_min", "l_min", "d", "c"}
        if unknown:
            raise ValueError(f"unknown filter key(s): {sorted(unknown)}")
        if "coeffs" in d:
            if "d" in d or "c" in d:
                raise ValueError("filter: give either 'coeffs' or the separable pair 'd'/'c', not both")
            return cls(np.asarray(d["coeffs"], float), d.get("k_min", 0), d.get("l_min", 0))
        if "d" in d and "c" in d:
            f = cls.separable(d["d"], d["c"])
            return cls(f.coeffs, d.get("k_min", 0), d.get("l_min", 0))
        raise ValueError("filter: expected 'coeffs' or both 'd' and 'c'")

    def __eq__(self, other):
        if not isinstance(other, FilterCoefficients):
            return NotImplemented
        return (
            self.k_min == other.k_min
            and self.l_min == other.l_min
            and self.coeffs.shape == other.coeffs.shape
            and bool(np.array_equal(self.coeffs, other.coeffs))
        )

    __hash__ = None


@dataclass
class DataMatrix:
    """p x (n + s_max) observations with the noise field that produced them."""

    values: np.ndarray
    n: int
    s_max: int
    filter: FilterCoefficients | None = None
    noise: NoiseField | None = None

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def dist(self) -> TailDistribution | None:
        return self.noise.dist if self.noise is not None else None


def noise_box(filt: FilterCoefficients, p: int, n_total: int) -> tuple[int, int, int, int]:
    """Index box (row_lo, row_hi, col_lo, col_hi), inclusive, of the noise needed.

    Covers every Z_{i-k, t-l} reached by the convolution plus the window
    i < p, t < n_total itself (needed for row sums).
    """
    row_lo = min(0, -filt.k_max)
    row_hi = max(p - 1, p - 1 - filt.k_min)
    col_lo = min(0, -filt.l_max)
    col_hi = max(n_total - 1, n_total - 1 - filt.l_min)
    return row_lo, row_hi, col_lo, col_hi


def convolve_field(filt: FilterCoefficients, noise: NoiseField, p: int, n_total: int) -> np.ndarray:
    """Direct evaluation of X_it = sum h_kl Z_{i-k,t-l} on 0 <= i < p, 0 <= t < n_total."""
    Z = noise.values
    r0, c0 = noise.row_origin, noise.col_origin
    X = np.zeros((p, n_total))
    for k, l, h in filt.nonzero():
        # rows i-k for i in [0, p) sit at array rows i - k - r0
        a = -k - r0
        b = -l - c0
        if a < 0 or b < 0 or a + p > Z.shape[0] or b + n_total > Z.shape[1]:
            raise ValueError("noise field does not cover the filter support")
        X += h * Z[a : a + p, b : b + n_total]
    return X


def generate_process(
    filt: FilterCoefficients,
    dist: TailDistribution,
    p: int,
    n: int,
    s_max: int,
    seed: int,
    workers: int = 1,
) -> DataMatrix:
    """Simulate the process on i < p, t < n + s_max with no boundary truncation.

    The noise is drawn on the extended box returned by :func:`noise_box`,
    so every entry of X is an exact finite sum.
    """
    if p < 1 or n < 1:
        raise ValueError(f"dimensions must be positive, got p={p}, n={n}")
    if s_max < 0:
        raise ValueError(f"s_max must be nonnegative, got {s_max}")
    n_total = n + s_max
    row_lo, row_hi, col_lo, col_hi = noise_box(filt, p, n_total)
    noise = sample_noise(dist, row_hi - row_lo + 1, col_hi - col_lo + 1, seed, workers=workers)
    noise.row_origin = row_lo
    noise.col_origin = col_lo
    X = convolve_field(filt, noise, p, n_total)
    return DataMatrix(X, n, s_max, filt, noise)


def lagged_view(X: DataMatrix | np.ndarray, s: int, n: int | None = None) -> np.ndarray:
    """X_n(s): columns s .. s+n-1 of the data matrix."""
    if isinstance(X, DataMatrix):
        values, n, s_max = X.values, X.n, X.s_max
    else:
        values = np.asarray(X)
        if n is None:
            raise ValueError("n is required for a raw array")
        s_max = values.shape[1] - n
    if s < 0 or s > s_max:
        raise ValueError(f"lag {s} outside 0..{s_max}")
    return values[:, s : s + n]
