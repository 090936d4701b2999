"""Gamma-function plumbing and the normalization constants of the
fractional Laplacian, its Caffarelli-Silvestre extension and the
fractional Poisson kernel.

All functions are pure and cheap; ``constants`` caches per ``(n, sigma)``
and refuses to hand out a Poisson normalizer that fails its unit-integral
self-test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy import integrate

__all__ = [
    "PoleError",
    "FracParams",
    "Constants",
    "gamma",
    "normalization_c",
    "extension_normalizer",
    "poisson_beta",
    "poisson_unit_integral",
    "gamma_ratio_condition",
    "sphere_area",
    "constants",
]


class PoleError(ValueError):
    """Gamma evaluated at a non-positive integer."""


@dataclass(frozen=True)
class FracParams:
    """Dimension ``n``, order ``sigma`` and optional singular-set dimension ``k``."""

    n: int
    sigma: float
    k: int | None = None

    def __post_init__(self):
        problems = validate_params(self.n, self.sigma, self.k)
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def crit_exp(self) -> float:
        return (self.n + 2 * self.sigma) / (self.n - 2 * self.sigma)

    @property
    def decay(self) -> float:
        """Exponent ``n - 2 sigma``: capacity homogeneity and bubble decay."""
        return self.n - 2 * self.sigma

    @property
    def blowup_rate(self) -> float:
        """The critical blow-up exponent ``(n - 2 sigma) / 2``."""
        return 0.5 * (self.n - 2 * self.sigma)


def validate_params(n, sigma, k=None) -> list[str]:
    out = []
    if not isinstance(n, int) or isinstance(n, bool):
        out.append("n must be an integer")
    elif n < 2:
        out.append("n must be >= 2")
    if not (0.0 < sigma < 1.0):
        out.append("sigma out of (0,1)")
    if k is not None:
        if not isinstance(k, int) or isinstance(k, bool) or k < 0:
            out.append("k must be a nonnegative integer")
        elif isinstance(n, int) and k > n - 1:
            out.append("k must be ≤ n−1")
    return out


@dataclass(frozen=True)
class Constants:
    c_frac: float
    N_sigma: float
    beta_poisson: float
    crit_exp: float


def _is_pole(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def gamma(x: float) -> float:
    """Euler Gamma on the real line.

    Backed by :func:`math.gamma`, which already uses the reflection formula
    for negative arguments; only the pole handling is ours.
    """
    x = float(x)
    if _is_pole(x):
        raise PoleError(f"Gamma has a pole at {x:g}")
    return math.gamma(x)


def normalization_c(n: int, sigma: float) -> float:
    """Hypersingular-integral constant ``c_{n,sigma}`` of the fractional Laplacian."""
    return (
        2 ** (2 * sigma) * sigma * gamma((n + 2 * sigma) / 2)
        / (math.pi ** (n / 2) * gamma(1 - sigma))
    )


def extension_normalizer(sigma: float) -> float:
    """``N(sigma) = 2^{1-2 sigma} Gamma(1-sigma) / Gamma(sigma)``."""
    return 2 ** (1 - 2 * sigma) * gamma(1 - sigma) / gamma(sigma)


def poisson_beta(n: int, sigma: float) -> float:
    """Normalizer of the extension Poisson kernel (closed form).

    Derived from the Euler integral
    ``int (1+|x|^2)^{-(n+2 sigma)/2} dx = pi^{n/2} Gamma(sigma) / Gamma((n+2 sigma)/2)``.
    """
    return gamma((n + 2 * sigma) / 2) / (math.pi ** (n / 2) * gamma(sigma))


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (n=1 gives 2)."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def poisson_unit_integral(n: int, sigma: float, beta: float | None = None) -> float:
    """Radial quadrature of the Poisson kernel at height ``t = 1``."""
    if beta is None:
        beta = poisson_beta(n, sigma)
    a = (n + 2 * sigma) / 2
    f = lambda r: r ** (n - 1) * (1 + r * r) ** (-a)
    head, _ = integrate.quad(f, 0, 1, epsabs=1e-14, epsrel=1e-13)
    # tail in s = 1/r: r^{n-1}(1+r^2)^{-a} dr = s^{2a-n-1}(1+s^2)^{-a} ds
    tail, _ = integrate.quad(
        lambda s: (1 + s * s) ** (-a), 0, 1,
        weight="alg", wvar=(2 * a - n - 1, 0.0),
        epsabs=1e-14, epsrel=1e-13,
    )
    return beta * sphere_area(n) * (head + tail)


def gamma_ratio_condition(n: int, k: int, sigma: float) -> tuple[float, bool]:
    """Return ``Gamma(n/4-k/2+sigma/2) / Gamma(n/4-k/2-sigma/2)`` and its sign test."""
    a = n / 4 - k / 2 + sigma / 2
    b = n / 4 - k / 2 - sigma / 2
    value = gamma(a) / gamma(b)
    return value, value > 0


@lru_cache(maxsize=None)
def constants(n: int, sigma: float) -> Constants:
    if n < 1 or not (0.0 < sigma < 1.0):
        raise ValueError(f"need n >= 1 and 0 < sigma < 1, got n={n}, sigma={sigma}")
    beta = poisson_beta(n, sigma)
    mass = poisson_unit_integral(n, sigma, beta)
    if abs(mass - 1.0) > 1e-8:
        raise RuntimeError(
            f"Poisson kernel normalization failed self-test: mass {mass!r}"
        )
    return Constants(
        c_frac=normalization_c(n, sigma),
        N_sigma=extension_normalizer(sigma),
        beta_poisson=beta,
        crit_exp=(n + 2 * sigma) / (n - 2 * sigma) if n > 2 * sigma else math.inf,
    )
