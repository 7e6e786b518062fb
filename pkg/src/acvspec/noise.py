"""Regularly varying iid noise fields and the normalizing sequence a_k.

Every row of a field is drawn from its own Philox stream keyed by
``(seed, row)``, so row blocks can be generated independently (and in
parallel) while the field stays a pure function of
``(dist, shape, seed)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats

KINDS = ("pareto", "symmetric_pareto", "student_t", "gaussian")

_MAX_SEED = 2**64


class NotRegularlyVaryingError(ValueError):
    pass


@dataclass(frozen=True)
class TailDistribution:
    """Law of the generic noise variable Z.

    ``alpha`` is the tail index (degrees of freedom for ``student_t``) and
    is unused for ``gaussian``.  ``p_plus``/``p_minus`` are the tail balance
    weights of ``symmetric_pareto``; the other kinds fix them by symmetry
    (``pareto`` is one-sided, p_plus = 1).
    """

    kind: str
    alpha: float | None = None
    p_plus: float = 0.5
    p_minus: float = 0.5
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "gaussian":
            if self.alpha is not None:
                raise ValueError("gaussian noise takes no tail index alpha")
        else:
            if self.alpha is None or not self.alpha > 0 or not math.isfinite(self.alpha):
                raise ValueError(f"tail index alpha must be positive, got {self.alpha!r}")
        if not self.scale > 0 or not math.isfinite(self.scale):
            raise ValueError(f"scale must be positive, got {self.scale!r}")
        if self.p_plus < 0 or self.p_minus < 0:
            raise ValueError("tail balance weights must be nonnegative")
        if not math.isclose(self.p_plus + self.p_minus, 1.0, abs_tol=1e-12):
            raise ValueError(
                f"tail balance weights must sum to 1, got {self.p_plus} + {self.p_minus}"
            )

    @classmethod
    def pareto(cls, alpha: float, scale: float = 1.0) -> "TailDistribution":
        return cls("pareto", alpha, 1.0, 0.0, scale)

    @classmethod
    def symmetric_pareto(cls, alpha: float, p_plus: float = 0.5, scale: float = 1.0):
        return cls("symmetric_pareto", alpha, p_plus, 1.0 - p_plus, scale)

    @classmethod
    def student_t(cls, nu: float, scale: float = 1.0) -> "TailDistribution":
        return cls("student_t", nu, 0.5, 0.5, scale)

    @classmethod
    def gaussian(cls, scale: float = 1.0) -> "TailDistribution":
        return cls("gaussian", None, 0.5, 0.5, scale)

    @property
    def regularly_varying(self) -> bool:
        return self.kind != "gaussian"

    @property
    def tail_balance(self) -> tuple[float, float]:
        if self.kind == "pareto":
            return 1.0, 0.0
        return self.p_plus, self.p_minus

    def abs_survival(self, x):
        """P(|Z| > x)."""
        x = np.asarray(x, dtype=float)
        if self.kind in ("pareto", "symmetric_pareto"):
            return np.where(x < self.scale, 1.0, (np.maximum(x, self.scale) / self.scale) ** -self.alpha)
        if self.kind == "student_t":
            return 2.0 * stats.t.sf(x / self.scale, self.alpha)
        return 2.0 * stats.norm.sf(x / self.scale)

    def mean(self) -> float:
        if self.kind in ("student_t", "gaussian"):
            if self.kind == "student_t" and self.alpha <= 1:
                return math.nan
            return 0.0
        if self.alpha <= 1:
            return math.nan
        m = self.scale * self.alpha / (self.alpha - 1.0)
        p_plus, p_minus = self.tail_balance
        return (p_plus - p_minus) * m

    def second_moment(self) -> float:
        """E[Z^2]; infinite when alpha <= 2."""
        if self.kind == "gaussian":
            return self.scale**2
        if self.alpha <= 2:
            return math.inf
        if self.kind == "student_t":
            return self.scale**2 * self.alpha / (self.alpha - 2.0)
        return self.scale**2 * self.alpha / (self.alpha - 2.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["alpha"] is None:
            del d["alpha"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TailDistribution":
        allowed = {"kind", "alpha", "p_plus", "p_minus", "scale"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown distribution key(s): {sorted(unknown)}")
        if "kind" not in d:
            raise ValueError("distribution spec is missing 'kind'")
        kind = d["kind"]
        alpha = d.get("alpha")
        scale = float(d.get("scale", 1.0))
        if kind == "pareto":
            return cls.pareto(float(alpha) if alpha is not None else None, scale)
        if kind == "symmetric_pareto":
            p_plus = float(d.get("p_plus", 0.5))
            p_minus = float(d.get("p_minus", 1.0 - p_plus))
            return cls(kind, float(alpha) if alpha is not None else None, p_plus, p_minus, scale)
        if kind == "student_t":
            return cls.student_t(float(alpha) if alpha is not None else None, scale)
        if kind == "gaussian":
            return cls.gaussian(scale)
        raise ValueError(f"unknown distribution kind {kind!r}; expected one of {KINDS}")


@dataclass
class NoiseField:
    """A ``rows x cols`` block of the iid field (Z_it).

    ``row_origin``/``col_origin`` give the process coordinates (i, t) of
    ``values[0, 0]``; a plain sample has both at 0.
    """

    values: np.ndarray
    dist: TailDistribution
    seed: int
    row_origin: int = 0
    col_origin: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def window(self, p: int, n: int) -> np.ndarray:
        """Z_it for i = 0..p-1, t = 0..n-1 (process coordinates)."""
        r0 = -self.row_origin
        c0 = -self.col_origin
        if r0 < 0 or c0 < 0 or r0 + p > self.rows or c0 + n > self.cols:
            raise ValueError(f"window {p}x{n} at the origin is not covered by this field")
        return self.values[r0 : r0 + p, c0 : c0 + n]


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def row_generator(seed: int, row: int) -> np.random.Generator:
    """The Philox stream that produces row ``row`` of a field seeded by ``seed``."""
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=(int(row),))
    return np.random.Generator(np.random.Philox(ss))


def _draw_row(dist: TailDistribution, rng: np.random.Generator, cols: int) -> np.ndarray:
    if dist.kind == "gaussian":
        return dist.scale * rng.standard_normal(cols)
    if dist.kind == "student_t":
        return dist.scale * rng.standard_t(dist.alpha, cols)
    # inverse CDF of P(|Z| > x) = (x/scale)^-alpha; 1 - U lies in (0, 1]
    u = 1.0 - rng.random(cols)
    mag = dist.scale * u ** (-1.0 / dist.alpha)
    if dist.kind == "pareto":
        return mag
    p_plus, _ = dist.tail_balance
    sign = np.where(rng.random(cols) < p_plus, 1.0, -1.0)
    return sign * mag


def sample_noise(
    dist: TailDistribution,
    rows: int,
    cols: int,
    seed: int,
    workers: int = 1,
) -> NoiseField:
    """Draw a ``rows x cols`` iid field from ``dist``.

    No centering is applied.  ``workers > 1`` fills rows on a thread pool;
    the result does not depend on ``workers``.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"field shape must be positive, got {rows}x{cols}")
    seed = _check_seed(seed)
    out = np.empty((rows, cols))

    def fill(r):
        out[r] = _draw_row(dist, row_generator(seed, r), cols)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(rows)))
    else:
        for r in range(rows):
            fill(r)
    return NoiseField(out, dist, seed)


def normalizing_constant(dist: TailDistribution, k: float) -> float:
    """a_k, the exact (1 - 1/k)-quantile of |Z|, so that P(|Z| > a_k) = 1/k."""
    if not dist.regularly_varying:
        raise NotRegularlyVaryingError("gaussian noise is not regularly varying; a_k is undefined")
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if dist.kind in ("pareto", "symmetric_pareto"):
        return dist.scale * float(k) ** (1.0 / dist.alpha)
    # two-sided tail of a symmetric law: P(|T| > x) = 2 P(T > x)
    return dist.scale * float(stats.t.isf(0.5 / k, dist.alpha))
