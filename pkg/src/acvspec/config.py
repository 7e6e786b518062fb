"""Experiment configuration: TOML in, TOML out.

A config is a flat table of scalars plus ``[filter]``, ``[dist]`` and an
optional ``[thresholds]`` section::

    kind = "compare"
    p = 500
    n = 5000
    lags = [[0, 0], [1, 1], [2, 2], [0, 1]]
    seeds = [1, 2, 3]
    out = "runs/separable"

    [filter]
    d = [2.0, 1.0, -1.0]
    c = [1.0, 1.0, 1.0]

    [dist]
    kind = "student_t"
    alpha = 1.5
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields

import tomli
import tomli_w

from .linear_process import FilterCoefficients
from .noise import TailDistribution

KINDS = ("spectrum", "predict", "compare", "limits", "lsd")

DEFAULT_THRESHOLDS = {
    "alignment_min": 0.99,
    "alignment_fraction": 0.9,
    "ratio_tol": 0.05,
    "ratio_fraction": 0.8,
    "ks_max": 0.15,
    "lsd_sup_error": 0.01,
    "lsd_mass_tol": 0.01,
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass
class ExperimentConfig:
    kind: str
    filter: FilterCoefficients
    dist: TailDistribution
    p: int
    n: int
    lags: list[tuple[int, int]] = field(default_factory=lambda: [(0, 0)])
    s_max: int | None = None
    centering: str = "auto"
    beta_hint: float | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    k: int | None = None
    out: str = "out"
    symmetrized: bool = False
    data: str | None = None
    dump_matrix: bool = False
    kmax: int = 3
    limit_reps: int = 10_000
    lsd_eps: float = 1e-3
    lsd_grid: int = 64
    lsd_points: int = 400
    lsd_x_max: float | None = None
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    def __post_init__(self):
        self.thresholds = {**DEFAULT_THRESHOLDS, **self.thresholds}
        self.validate()

    @property
    def max_lag(self) -> int:
        return max(s2 for _, s2 in self.lags)

    @property
    def lag_span(self) -> int:
        return self.max_lag if self.s_max is None else self.s_max

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {KINDS}, got {self.kind!r}")
        for key in ("p", "n"):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(key, f"must be a positive integer, got {v!r}")
        if not self.lags:
            raise ConfigError("lags", "needs at least one (s1, s2) pair")
        for pair in self.lags:
            if len(pair) != 2 or not all(isinstance(s, int) for s in pair) or not 0 <= pair[0] <= pair[1]:
                raise ConfigError("lags", f"each entry must be [s1, s2] with 0 <= s1 <= s2, got {list(pair)}")
        if self.s_max is not None and self.s_max < self.max_lag:
            raise ConfigError("s_max", f"must be at least the largest lag {self.max_lag}")
        if self.centering not in ("auto", "on", "off"):
            raise ConfigError("centering", f"must be auto/on/off, got {self.centering!r}")
        if self.beta_hint is not None and not 0 <= self.beta_hint <= 1:
            raise ConfigError("beta_hint", "must lie in [0, 1]")
        if not isinstance(self.seeds, list) or not all(isinstance(s, int) and s >= 0 for s in self.seeds):
            raise ConfigError("seeds", "must be a list of nonnegative integers")
        if self.k is not None and not 1 <= self.k <= self.p:
            raise ConfigError("k", f"must lie in 1..p, got {self.k}")
        if self.kind in ("predict", "compare", "limits"):
            if not self.dist.regularly_varying or not 0 < self.dist.alpha < 4:
                raise ConfigError("dist.alpha", "tail index must lie in (0, 4) for this experiment")
        if self.kind == "limits" and self.kmax >= self.p:
            raise ConfigError("kmax", "must be smaller than p")
        if self.kind == "lsd" and self.dist.second_moment() == float("inf"):
            raise ConfigError("dist", "the LSD needs noise with finite variance")
        for key in ("limit_reps", "lsd_grid", "lsd_points", "kmax"):
            if getattr(self, key) < 1:
                raise ConfigError(key, "must be positive")
        if not self.lsd_eps > 0:
            raise ConfigError("lsd_eps", "must be positive")
        unknown = set(self.thresholds) - set(DEFAULT_THRESHOLDS)
        if unknown:
            raise ConfigError(f"thresholds.{sorted(unknown)[0]}", "unknown threshold")

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "filter":
                v = v.to_dict()
            elif f.name == "dist":
                v = v.to_dict()
            elif f.name == "lags":
                v = [list(pair) for pair in v]
            elif f.name == "thresholds":
                v = dict(v)
            d[f.name] = v
        return d

    @classmethod
    def from_dict(cls, d: dict, kind: str | None = None) -> "ExperimentConfig":
        d = dict(d)
        if kind is not None:
            d["kind"] = kind
        names = {f.name for f in fields(cls)}
        for key in d:
            if key not in names:
                raise ConfigError(key, "unknown key")
        for key in ("kind", "filter", "dist", "p", "n"):
            if key not in d:
                raise ConfigError(key, "missing required key")
        try:
            d["filter"] = FilterCoefficients.from_dict(d["filter"])
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError("filter", str(exc)) from None
        try:
            d["dist"] = TailDistribution.from_dict(d["dist"])
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError("dist", str(exc)) from None
        if "lags" in d:
            try:
                d["lags"] = [tuple(pair) for pair in d["lags"]]
            except TypeError:
                raise ConfigError("lags", "must be a list of [s1, s2] pairs") from None
        if "thresholds" in d:
            d["thresholds"] = {**DEFAULT_THRESHOLDS, **d["thresholds"]}
        return cls(**d)

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str, kind: str | None = None) -> "ExperimentConfig":
        try:
            raw = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(_offending_key(text, exc), f"parse error: {exc}") from None
        return cls.from_dict(raw, kind)

    @classmethod
    def load(cls, path, kind: str | None = None) -> "ExperimentConfig":
        """Read a TOML config; ``kind`` (the CLI subcommand) overrides the file."""
        with open(path) as fh:
            return cls.loads(fh.read(), kind)


_KEY_RE = re.compile(r"^\s*([A-Za-z0-9_.\-\"]+)\s*=")


def _offending_key(text: str, exc) -> str:
    lineno = getattr(exc, "lineno", None)
    if lineno is None:
        m = re.search(r"line (\d+)", str(exc))
        lineno = int(m.group(1)) if m else None
    if lineno is None:
        return "<unknown>"
    lines = text.splitlines()
    if 1 <= lineno <= len(lines):
        m = _KEY_RE.match(lines[lineno - 1])
        if m:
            return m.group(1).strip('"')
    return f"<line {lineno}>"


def parse_seed_range(text: str) -> list[int]:
    """``"3..7"`` -> [3, 4, 5, 6, 7]; a comma list or a single integer also works."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    return [int(s) for s in text.split(",") if s.strip()]
