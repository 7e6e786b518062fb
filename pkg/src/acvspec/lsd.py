"""Limiting spectral distribution of n^-1 X X' for proportional p/n -> gamma.

The transform s(z) = int_0^1 h(x, z) dx is found by damped fixed-point
iteration on an equispaced periodic grid.  The Marcenko-Pastur closed forms
serve as the identity-filter reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .linear_process import FilterCoefficients


class StieltjesConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class CoefficientAutocovariance:
    """gamma_kl = sum_{u,v} h_uv h_{u-k, v-l}; ``values[a, b]`` is gamma at (k_min + a, l_min + b)."""

    values: np.ndarray
    k_min: int
    l_min: int

    def get(self, k: int, l: int) -> float:
        a, b = k - self.k_min, l - self.l_min
        if 0 <= a < self.values.shape[0] and 0 <= b < self.values.shape[1]:
            return float(self.values[a, b])
        return 0.0

    @property
    def ks(self) -> np.ndarray:
        return self.k_min + np.arange(self.values.shape[0])

    @property
    def ls(self) -> np.ndarray:
        return self.l_min + np.arange(self.values.shape[1])


def coeff_autocovariance(filt: FilterCoefficients) -> CoefficientAutocovariance:
    H = filt.coeffs
    K, W = H.shape
    out = np.zeros((2 * K - 1, 2 * W - 1))
    # lag (k, l) = (a - c, b - d) for index pairs (a, b), (c, d) of the block
    for a in range(K):
        for b in range(W):
            if H[a, b] == 0:
                continue
            out[a : a + K, b : b + W] += H[a, b] * H[::-1, ::-1]
    return CoefficientAutocovariance(out, -(K - 1), -(W - 1))


def spectral_density(gammas: CoefficientAutocovariance, x, y):
    """f(x, y) = sum_{k,l} gamma_kl exp(-2 pi i (k x + l y)), real and clipped at 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ex = np.exp(-2j * np.pi * np.multiply.outer(x, gammas.ks))
    ey = np.exp(-2j * np.pi * np.multiply.outer(y, gammas.ls))
    f = np.einsum("...k,kl,...l->...", ex, gammas.values, ey).real
    f = np.maximum(f, 0.0)
    return f if f.ndim else float(f)


def density_grid(filt: FilterCoefficients, G: int) -> np.ndarray:
    """F[a, b] = f(a/G, b/G) on the periodic grid."""
    g = np.arange(G) / G
    gam = coeff_autocovariance(filt)
    ex = np.exp(-2j * np.pi * np.multiply.outer(g, gam.ks))
    ey = np.exp(-2j * np.pi * np.multiply.outer(g, gam.ls))
    return np.maximum((ex @ gam.values @ ey.T).real, 0.0)


@dataclass(frozen=True)
class StieltjesSolution:
    gamma: float
    z: complex
    grid: np.ndarray
    h: np.ndarray
    s: complex
    iterations: int
    residual: float


def _fixed_point_map(h, F, gamma, z):
    G = F.shape[0]
    w = 1.0 + gamma * (F.T @ h) / G
    return 1.0 / (-z + (F @ (1.0 / w)) / G)


def solve_stieltjes(
    filt: FilterCoefficients,
    gamma: float,
    z: complex,
    G: int = 64,
    tol: float = 1e-10,
    max_iter: int = 200_000,
    damping: float = 0.5,
    h0: np.ndarray | None = None,
    F: np.ndarray | None = None,
) -> StieltjesSolution:
    """Solve h(x,z) = (-z + int f(x,t) / (1 + gamma int f(u,t) h(u,z) du) dt)^-1.

    Integrals use the G-point periodic trapezoid rule.  ``damping`` is the
    weight kept on the previous iterate.  ``h0`` warm-starts the iteration
    (default -1/z); ``F`` may pass a precomputed :func:`density_grid`.
    """
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"solve_stieltjes needs Im z > 0, got {z}")
    if not gamma > 0:
        raise ValueError(f"aspect ratio gamma must be positive, got {gamma}")
    if not 0 <= damping < 1:
        raise ValueError(f"damping must lie in [0, 1), got {damping}")
    if F is None:
        F = density_grid(filt, G)
    G = F.shape[0]
    h = np.full(G, -1.0 / z, dtype=complex) if h0 is None else np.array(h0, dtype=complex)
    residual = np.inf
    for it in range(1, max_iter + 1):
        Th = _fixed_point_map(h, F, gamma, z)
        residual = float(np.max(np.abs(Th - h)))
        if residual <= tol:
            h = Th
            break
        h = damping * h + (1.0 - damping) * Th
    else:
        raise StieltjesConvergenceError(f"fixed point at z = {z} did not converge", residual, max_iter)
    return StieltjesSolution(gamma, z, np.arange(G) / G, h, complex(h.mean()), it, residual)


def fixed_point_residual(sol: StieltjesSolution, filt: FilterCoefficients) -> float:
    F = density_grid(filt, sol.h.shape[0])
    return float(np.max(np.abs(_fixed_point_map(sol.h, F, sol.gamma, sol.z) - sol.h)))


def mp_edges(gamma: float) -> tuple[float, float]:
    r = np.sqrt(gamma)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def mp_stieltjes(gamma: float, z: complex) -> complex:
    """(1 - gamma - z + sqrt((1+gamma-z)^2 - 4 gamma)) / (2 gamma z), branch with Im > 0."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"Stieltjes transform needs Im z > 0, got {z}")
    root = np.sqrt(complex((1.0 + gamma - z) ** 2 - 4.0 * gamma))
    cands = [(1.0 - gamma - z + sgn * root) / (2.0 * gamma * z) for sgn in (1.0, -1.0)]
    return max(cands, key=lambda c: c.imag)


def mp_density(gamma: float, x):
    """Absolutely continuous part of the Marcenko-Pastur law F_gamma."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("Marcenko-Pastur density is defined for x >= 0")
    a, b = mp_edges(gamma)
    inside = (x >= a) & (x <= b) & (x > 0)
    xs = np.where(inside, x, 1.0)
    out = np.where(inside, np.sqrt(np.clip((b - xs) * (xs - a), 0, None)) / (2 * np.pi * gamma * xs), 0.0)
    return out if out.ndim else float(out)


def mp_point_mass(gamma: float) -> float:
    """Mass 1 - 1/gamma at zero when gamma > 1."""
    return max(0.0, 1.0 - 1.0 / gamma)


def mp_cdf(gamma: float, x):
    """F_gamma(x) by quadrature of the density plus the atom at 0."""
    a, b = mp_edges(gamma)
    atom = mp_point_mass(gamma)

    def one(t):
        if t < 0:
            return 0.0
        if t <= a:
            return atom
        if t >= b:
            return 1.0
        val, _ = integrate.quad(lambda u: mp_density(gamma, u), a, t, limit=200)
        return atom + val

    x = np.asarray(x, dtype=float)
    out = np.vectorize(one, otypes=[float])(x)
    return out if out.ndim else float(out)


def density_from_stieltjes(s_values, eps: float):
    """Stieltjes inversion f(x) ~ Im s(x + i eps) / pi."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return np.imag(np.asarray(s_values, dtype=complex)) / np.pi


def lsd_density(
    filt: FilterCoefficients,
    gamma: float,
    x,
    eps: float = 1e-3,
    G: int = 64,
    tol: float = 1e-10,
    max_iter: int = 200_000,
    damping: float = 0.5,
):
    """Density estimate on ``x`` via s(x + i eps), warm-starting along the grid.

    Returns ``(density, solutions)``.
    """
    F = density_grid(filt, G)
    h = None
    sols = []
    for xi in np.asarray(x, dtype=float):
        sol = solve_stieltjes(filt, gamma, complex(xi, eps), tol=tol, max_iter=max_iter,
                              damping=damping, h0=h, F=F)
        h = sol.h
        sols.append(sol)
    return density_from_stieltjes([s.s for s in sols], eps), sols


def esd(X: np.ndarray, n: int | None = None) -> np.ndarray:
    """Eigenvalues of n^-1 X X' for a p x n array, ascending."""
    X = np.asarray(X, dtype=float)
    n = X.shape[1] if n is None else n
    return np.linalg.eigvalsh(X[:, :n] @ X[:, :n].T / n)
