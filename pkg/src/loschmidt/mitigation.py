"""Error mitigation: rescaling by ``q``, particle-number post-selection and
ZNE folding to extract the channel parameters ``(q, gamma)``."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .circuit import LoschmidtCircuit
from .errors import ContractError
from .model import ProductState
from .noise import ChannelParams

RESCALE = "rescale"
SYMMETRY = "symmetry"
ZNE_RESCALE = "zne-rescale"


@dataclass(frozen=True)
class MitigatedOutcome:
    re_g_mitigated: float
    sigma: float
    method: str
    q_used: float = 1.0
    gamma_used: float = 0.0
    kept_fraction: float = 1.0
    re_g_raw: float = float("nan")


def _diff_sigma(p0: float, p_pi: float, shots: int | None) -> float:
    if not shots:
        return 0.0
    return math.sqrt(max(p0 + p_pi - (p0 - p_pi) ** 2, 0.0) / shots)


def rescale(p0_star: float, p_pi_star: float, q: float, shots: int | None = None) -> MitigatedOutcome:
    """``(p0* - p_pi*)/q``; the 1-sigma multinomial error scales by ``1/q``."""
    if not q > 0:
        raise ContractError(f"q must be positive, got {q}")
    raw = p0_star - p_pi_star
    return MitigatedOutcome(raw / q, _diff_sigma(p0_star, p_pi_star, shots) / q, RESCALE, q, re_g_raw=raw)


def invert_channel(p0_star: float, p_pi_star: float, params: ChannelParams) -> tuple[float, float]:
    """Recover ``(p0, p_pi)`` from the analytic channel's outputs."""
    if not params.q > 0:
        raise ContractError("channel with q = 0 is not invertible")
    diff = (p0_star - p_pi_star) / params.q
    total = (p0_star + p_pi_star - 2 * params.kappa) / (params.q + 2 * params.gamma)
    return (total + diff) / 2, (total - diff) / 2


def _decode_pullbacks(bits: int, psi0: ProductState, pilot: int) -> tuple[int, int]:
    """Pre-decode strings for the two pilot values (the decode is H after a CNOT fan)."""
    n = psi0.n_qubits
    pmask = 1 << (n - 1 - pilot)
    fan = 0
    for q in psi0.occupied():
        if q != pilot:
            fan |= 1 << (n - 1 - q)
    zero_branch = bits & ~pmask
    one_branch = (bits | pmask) ^ fan
    return zero_branch, one_branch


def _sector(bits: int, n: int) -> tuple[int, int]:
    ns = n // 2
    up = bin(bits >> ns).count("1")
    down = bin(bits & ((1 << ns) - 1)).count("1")
    return up, down


def keeps_shot(bits: int, psi0: ProductState, pilot: int) -> bool:
    target = (psi0.n_up, psi0.n_down)
    for pre in _decode_pullbacks(bits, psi0, pilot):
        if pre == 0 or _sector(pre, psi0.n_qubits) == target:
            return True
    return False


def symmetry_filter(raw_counts: dict[int, int], psi0: ProductState, circuit: LoschmidtCircuit) -> tuple[float, float, float]:
    """Post-select shots compatible with the vacuum or ``psi0``'s particle sector.

    Returns ``(p0, p_pi, kept_fraction)`` with probabilities renormalised over
    the kept shots.
    """
    total = sum(raw_counts.values())
    if total == 0:
        raise ContractError("no shots to filter")
    kept = {k: v for k, v in raw_counts.items() if keeps_shot(k, psi0, circuit.pilot)}
    n_kept = sum(kept.values())
    if n_kept == 0:
        raise ContractError("symmetry filter discarded every shot")
    return kept.get(circuit.zero_string, 0) / n_kept, kept.get(circuit.pi_string, 0) / n_kept, n_kept / total


def symmetry_mitigate(raw_counts: dict[int, int], psi0: ProductState, circuit: LoschmidtCircuit) -> MitigatedOutcome:
    p0, pp, frac = symmetry_filter(raw_counts, psi0, circuit)
    total = sum(raw_counts.values())
    raw = (raw_counts.get(circuit.zero_string, 0) - raw_counts.get(circuit.pi_string, 0)) / total
    n_kept = round(frac * total)
    return MitigatedOutcome(p0 - pp, _diff_sigma(p0, pp, n_kept), SYMMETRY, kept_fraction=frac, re_g_raw=raw)


def zne_fold(circuit: LoschmidtCircuit) -> LoschmidtCircuit:
    """Circuit followed by its exact inverse; ideally returns to ``|0..0>``."""
    inv = tuple(g.inverse() for g in reversed(circuit.gates))
    pi = 1 << (circuit.n_qubits - 1 - circuit.pilot)
    return replace(
        circuit, gates=circuit.gates + inv, relabel=(), zero_string=0, pi_string=pi, sign=1, meta={**circuit.meta, "folded": True}
    )


def double_channel(params: ChannelParams) -> tuple[float, float]:
    """``(p0, p_pi)`` of a folded circuit when each half suffers the channel."""
    q, g, k = params.q, params.gamma, params.kappa
    return (q + g) ** 2 + g**2 + 2 * k, 2 * g * (q + g) + 2 * k


def zne_extract(p0_zne: float, p_pi_zne: float, n_qubits: int) -> ChannelParams:
    """Invert :func:`double_channel`.

    ``q = sqrt(p0 - p_pi)``; ``gamma`` is the non-negative root of
    ``2 g^2 + (2q - 4/d) g + 2(1-q)/d - p_pi = 0`` with ``d = 2^n``, which is
    the exact solution including ``gamma``'s appearance inside ``K``.
    """
    if p0_zne < p_pi_zne:
        raise ContractError(f"p0_zne={p0_zne} < p_pi_zne={p_pi_zne}: unphysical, likely under-sampled")
    q = min(math.sqrt(p0_zne - p_pi_zne), 1.0)
    d = 2.0**n_qubits
    a, b, c = 2.0, 2 * q - 4 / d, 2 * (1 - q) / d - p_pi_zne
    disc = max(b * b - 4 * a * c, 0.0)
    gamma = (-b + math.sqrt(disc)) / (2 * a)
    gamma = min(max(gamma, 0.0), (1 - q) / 2)
    return ChannelParams(q, gamma, n_qubits)


def zne_rescale(p0_star: float, p_pi_star: float, params: ChannelParams, shots: int | None = None) -> MitigatedOutcome:
    out = rescale(p0_star, p_pi_star, params.q, shots)
    return replace(out, method=ZNE_RESCALE, gamma_used=params.gamma)
