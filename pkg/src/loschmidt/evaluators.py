"""Sources of Loschmidt time series and filtered-DOS weights.

``source`` selects where ``G(t)`` comes from: ``exact`` (spectral
decomposition) or ``trotter`` (compiled Trotter circuit, direct overlap).
Optional shot and Gaussian noise are applied on top through
:func:`perturb_series`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .interferometry import TimeSeries, steps_for_point, trotter_overlap
from .model import HubbardParams, LatticeSpec, ProductState
from .noise import perturb_series, series_from_amplitudes
from .sim import hubbard_spectrum
from .spectral_filter import FilterSpec, fdos_from_series

EXACT = "exact"
SERIES = "series"
TROTTER_EXACT = "trotter-exact"
TROTTER_SAMPLED = "trotter-sampled"
NOISY = "noisy"
MODES = (EXACT, SERIES, TROTTER_EXACT, TROTTER_SAMPLED, NOISY)


@dataclass
class SeriesEvaluator:
    lattice: LatticeSpec
    params: HubbardParams
    source: str = "exact"
    steps_policy: object = 2
    shots: int | None = None
    sigma: float = 0.0

    def __post_init__(self):
        if self.source not in ("exact", "trotter"):
            raise ContractError(f"unknown series source {self.source!r}")

    @property
    def noiseless(self) -> bool:
        return self.shots is None and not self.sigma

    def amplitudes(self, psi: ProductState, times) -> np.ndarray:
        """Noiseless complex ``G(t_m)``."""
        times = np.asarray(times, dtype=float)
        if self.source == "exact":
            return hubbard_spectrum(self.lattice, self.params).loschmidt(psi, times)
        return np.array(
            [trotter_overlap(psi, self.lattice, self.params, float(t), steps_for_point(m, self.steps_policy)) for m, t in enumerate(times)]
        )

    def series(self, psi: ProductState, times, E: float, rng: np.random.Generator | None = None) -> TimeSeries:
        s = series_from_amplitudes(self.amplitudes(psi, times), times, E)
        return perturb_series(s, self.sigma, self.shots, rng)


def make_series_evaluator(mode: str, lattice: LatticeSpec, params: HubbardParams, shots=None, sigma=0.0, steps_policy=2):
    if mode == SERIES:
        return SeriesEvaluator(lattice, params, "exact")
    if mode == TROTTER_EXACT:
        return SeriesEvaluator(lattice, params, "trotter", steps_policy)
    if mode == TROTTER_SAMPLED:
        if not shots:
            raise ContractError("trotter-sampled mode needs a shot count")
        return SeriesEvaluator(lattice, params, "trotter", steps_policy, shots=shots)
    if mode == NOISY:
        return SeriesEvaluator(lattice, params, "exact", steps_policy, shots=shots, sigma=sigma)
    raise ContractError(f"mode {mode!r} has no series evaluator")


class WeightFunction:
    """``psi -> D_psi(E)`` for one energy under a chosen evaluation mode.

    Stochastic modes draw their noise from ``rng`` on each call; callers
    that need a frozen realisation should memoise.
    """

    def __init__(
        self,
        mode: str,
        lattice: LatticeSpec,
        params: HubbardParams,
        spec: FilterSpec,
        E: float,
        shots: int | None = None,
        sigma: float = 0.0,
        steps_policy=2,
    ):
        if mode not in MODES:
            raise ContractError(f"unknown evaluator mode {mode!r}; choose from {MODES}")
        self.mode = mode
        self.lattice, self.params, self.spec, self.E = lattice, params, spec, float(E)
        self._spectrum = hubbard_spectrum(lattice, params)
        self._series = None if mode == EXACT else make_series_evaluator(mode, lattice, params, shots, sigma, steps_policy)

    def __call__(self, psi: ProductState, rng: np.random.Generator | None = None) -> float:
        if self._series is None:
            return float(self._spectrum.fdos(psi, self.E, self.spec.delta))
        s = self._series.series(psi, self.spec.times, self.E, rng)
        return fdos_from_series(s, self.spec, self.E).value
