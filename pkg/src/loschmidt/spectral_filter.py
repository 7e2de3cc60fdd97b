"""Truncated cosine-power expansion of the Gaussian energy filter.

With ``alpha = 2 sqrt(n_qubits)`` the Gaussian ``exp(-(H-E)^2 / 2 delta^2)``
is approximated by ``cos^M((H-E)/alpha)`` with ``M`` the even floor of
``alpha^2/delta^2``. Expanding the cosine power binomially gives a sum over
``exp(-i(H-E) t_m)`` with ``t_m = 2m/alpha`` and weights
``c_m = binom(M, M/2 - m) / 2^M``; the sum is cut at ``|m| <= R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ContractError
from .interferometry import TimeSeries


@dataclass(frozen=True)
class FilterSpec:
    delta: float
    x: float
    alpha: float
    M: int
    R: int
    coefficients: np.ndarray  # c_0 .. c_R

    @property
    def times(self) -> np.ndarray:
        return 2.0 * np.arange(self.R + 1) / self.alpha

    @property
    def retained_mass(self) -> float:
        c = self.coefficients
        return float(c[0] + 2 * c[1:].sum())

    @property
    def truncation_bound(self) -> float:
        """Binomial mass dropped with ``|m| > R``."""
        return max(0.0, 1.0 - self.retained_mass)


@dataclass(frozen=True)
class FdosEstimate:
    E: float
    value: float
    truncation_bound: float
    variance: float = 0.0


def binomial_weights(M: int, R: int) -> np.ndarray:
    """``binom(M, M/2 - m) / 2^M`` for ``m = 0..R`` (zero beyond ``M/2``), in log space."""
    m = np.arange(R + 1)
    half = M // 2
    out = np.zeros(R + 1)
    ok = m <= half
    mm = m[ok]
    out[ok] = np.exp(gammaln(M + 1) - gammaln(half - mm + 1) - gammaln(half + mm + 1) - M * math.log(2))
    return out


def make_filter(n_qubits: int, delta: float = 1.0, x: float = 1.0, M: int | None = None) -> FilterSpec:
    """Filter for an ``n_qubits`` register; ``M`` may be forced for testing."""
    if n_qubits < 1 or not delta > 0 or not x > 0:
        raise ContractError(f"need n_qubits >= 1, delta > 0, x > 0; got {n_qubits}, {delta}, {x}")
    alpha = 2 * math.sqrt(n_qubits)
    if M is None:
        # alpha^2 = 4 n_qubits exactly; avoid the float round trip through sqrt
        M = int(math.floor(4 * n_qubits / delta**2))
        M -= M % 2
    if M < 0 or M % 2:
        raise ContractError(f"M must be a non-negative even integer, got {M}")
    R = math.ceil(x * alpha / delta - 1e-12)
    return FilterSpec(float(delta), float(x), alpha, M, R, binomial_weights(M, R))


def _series_values(series, spec: FilterSpec) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(series, TimeSeries):
        if len(series.t) != spec.R + 1 or not np.allclose(series.t, spec.times, rtol=0, atol=1e-12):
            raise ContractError("time series does not lie on the filter grid")
        return series.re_g, series.variance
    vals = np.asarray(series, dtype=float)
    if vals.shape != (spec.R + 1,):
        raise ContractError(f"expected {spec.R + 1} series values, got shape {vals.shape}")
    return vals, np.zeros_like(vals)


def fdos_from_series(series, spec: FilterSpec, E: float | None = None) -> FdosEstimate:
    """``D = c_0 s_0 + 2 sum_{m>=1} c_m s_m`` with propagated variance."""
    vals, var = _series_values(series, spec)
    w = 2 * spec.coefficients
    w[0] = spec.coefficients[0]
    value = float(w @ vals)
    variance = float((w**2) @ var)
    if E is None:
        E = series.E if isinstance(series, TimeSeries) else float("nan")
    return FdosEstimate(float(E), value, spec.truncation_bound, variance)


def fdos_from_amplitudes(G: np.ndarray, spec: FilterSpec, E_list) -> np.ndarray:
    """Vectorised reconstruction from complex ``G(t_m)`` for many energies."""
    G = np.asarray(G, dtype=complex)
    t = spec.times
    w = 2 * spec.coefficients
    w[0] = spec.coefficients[0]
    E = np.atleast_1d(np.asarray(E_list, dtype=float))
    re = (G[None, :] * np.exp(1j * np.outer(E, t))).real
    return re @ w


def fdos_batch(psi, E_list, spec: FilterSpec, evaluator, rng=None) -> list[FdosEstimate]:
    """One estimate per energy.

    Noiseless evaluators exposing ``amplitudes(psi, times)`` share one
    complex series across all energies. Otherwise ``series(psi, times, E, rng)``
    is called per E, as a circuit run with ``xi = E t`` would be.
    """
    E_list = [float(e) for e in E_list]
    if getattr(evaluator, "noiseless", True) and hasattr(evaluator, "amplitudes"):
        G = evaluator.amplitudes(psi, spec.times)
        vals = fdos_from_amplitudes(G, spec, E_list)
        return [FdosEstimate(E, float(v), spec.truncation_bound) for E, v in zip(E_list, vals)]
    return [fdos_from_series(evaluator.series(psi, spec.times, E, rng), spec, E) for E in E_list]
