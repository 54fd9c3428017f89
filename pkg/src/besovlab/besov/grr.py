"""Numerical check of the Garsia-Rodemich-Rumsey inequality with power weights.

With ``Psi(u) = |u|^p`` and ``p(u) = |u|^(nu + beta/p)``,

    |g(z) - g(y)| <= 8 (4B)^(1/p) (nu + beta/p) / (nu + (beta-2)/p) |z - y|^(nu + (beta-2)/p)

where ``B = int int |g(v) - g(w)|^p / |v - w|^(nu p + beta) dv dw``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

SLACK = 1.05


@dataclass(frozen=True)
class GrrCase:
    p_exp: float
    nu: float
    beta: float
    B: float
    violations: int
    max_ratio: float
    n_pairs: int


def grr_rhs(B: float, p_exp: float, nu: float, beta: float, dist):
    expo = nu + (beta - 2.0) / p_exp
    const = 8.0 * (4.0 * B) ** (1.0 / p_exp) * (nu + beta / p_exp) / expo
    return const * np.asarray(dist, dtype=float) ** expo


def grr_integral(g: np.ndarray, p_exp: float, nu: float, beta: float) -> float:
    """Trapezoid double integral of ``|g(v)-g(w)|^p / |v-w|^(nu p + beta)`` on ``[0,1]^2``.

    The diagonal contributes zero (the integrand's limit there when it is finite).
    """
    n = g.size
    x = np.linspace(0.0, 1.0, n)
    w = np.full(n, 1.0 / (n - 1))
    w[0] = w[-1] = 0.5 / (n - 1)
    total = 0.0
    for i in range(n):
        dist = np.abs(x[i] - x)
        dist[i] = 1.0
        row = np.abs(g[i] - g) ** p_exp / dist ** (nu * p_exp + beta)
        row[i] = 0.0
        total += w[i] * float(np.dot(w, row))
    return total


def grr_check(g_samples, p_exp: float, nu: float, beta: float) -> GrrCase:
    """Count grid pairs where ``|g(z) - g(y)| > 1.05 * RHS``.

    ``g_samples`` are values on a uniform grid of ``[0, 1]``.
    """
    g = np.asarray(g_samples, dtype=float).ravel()
    if g.size < 2 or not np.all(np.isfinite(g)):
        raise ValidationError("need at least two finite samples")
    if p_exp < 1:
        raise ValidationError(f"Psi exponent must be >= 1, got {p_exp}")
    if nu + beta / p_exp <= 0:
        raise ValidationError("p(u) = |u|^(nu + beta/p) must vanish at 0 (nu + beta/p > 0)")
    expo = nu + (beta - 2.0) / p_exp
    if expo <= 0:
        raise ValidationError(f"RHS exponent nu + (beta-2)/p = {expo:g} must be positive")
    B = grr_integral(g, p_exp, nu, beta)
    x = np.linspace(0.0, 1.0, g.size)
    iu = np.triu_indices(g.size, k=1)
    lhs = np.abs(g[iu[0]] - g[iu[1]])
    rhs = grr_rhs(B, p_exp, nu, beta, x[iu[1]] - x[iu[0]])
    violations = int(np.count_nonzero(lhs > SLACK * rhs))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > 0, np.inf, 0.0))
    return GrrCase(float(p_exp), float(nu), float(beta), B, violations, float(ratio.max()), int(lhs.size))


def random_piecewise_linear(rng: np.random.Generator, n_points: int = 257, n_knots: int | None = None) -> np.ndarray:
    """Continuous piecewise-linear function with random knots, sampled on a uniform grid."""
    k = int(n_knots if n_knots is not None else rng.integers(2, 30))
    knots = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, k)]))
    heights = rng.normal(0.0, 1.0, knots.size) * rng.uniform(0.1, 10.0)
    return np.interp(np.linspace(0, 1, n_points), knots, heights)


def random_admissible_exponents(rng: np.random.Generator) -> tuple[float, float, float]:
    """Draw ``(p, nu, beta)`` with ``p >= 2``, ``nu`` in (0,1), ``beta`` in [0,1) and a positive RHS exponent."""
    while True:
        p = rng.uniform(2.0, 10.0)
        nu = rng.uniform(0.01, 0.99)
        beta = rng.uniform(0.0, 1.0)
        if nu + (beta - 2.0) / p > 0.01:
            return p, nu, beta
