"""Reference implementations that share no code with the package."""
import math

import numpy as np
from scipy import integrate


def qgaussian_density(q, beta):
    """Normalized closed-form density, normalization found by quadrature."""
    def unnorm(x):
        return (1.0 + (q - 1.0) * beta * x * x) ** (-1.0 / (q - 1.0))
    z, _ = integrate.quad(unnorm, -np.inf, np.inf)
    return lambda x: unnorm(np.asarray(x, dtype=float)) / z


def sample_qgaussian(q, beta, n, rng):
    """Accept-reject against a Cauchy envelope (valid for 1 < q < 3)."""
    f = qgaussian_density(q, beta)
    scale = 1.0 / math.sqrt(beta)

    def g(x):
        return 1.0 / (math.pi * scale * (1.0 + (x / scale) ** 2))

    grid = np.linspace(-60 * scale, 60 * scale, 200001)
    bound = 1.05 * float(np.max(f(grid) / g(grid)))
    out = []
    while sum(len(c) for c in out) < n:
        x = scale * rng.standard_cauchy(2 * n)
        keep = rng.random(2 * n) * bound * g(x) < f(x)
        out.append(x[keep])
    return np.concatenate(out)[:n]


def brute_kurtosis(x):
    x = [float(v) for v in x]
    mean = sum(x) / len(x)
    m2 = sum((v - mean) ** 2 for v in x) / len(x)
    m4 = sum((v - mean) ** 4 for v in x) / len(x)
    return m4 / m2 ** 2 - 3.0
