"""Two-state neutral kaon system: K_L/K_S superpositions over the
strangeness basis, exponential decay evolution, strangeness oscillation,
and decay sampling.

K_L and K_S components decay independently with their own widths; their
|a|^2, |b|^2 weights are treated as classical probabilities when sampling
which component decays (the inference chain only uses per-component decay
statistics).  Strangeness content stays fully coherent.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import constants as const
from .constants import MEV_M_S, PhysicalConstants


class BasisInversionError(ValueError):
    """The (K0, K0bar) <-> (K_L, K_S) change of basis is singular."""


#: Decay channels that yield a two-pion final state.
TWO_PION_CHANNELS = frozenset({"two_pi", "pi_plus_pi_minus", "two_pi0"})

#: Channels with two charged daughters (reconstructable tracks).
CHARGED_TWO_PION_CHANNELS = frozenset({"two_pi", "pi_plus_pi_minus"})


def is_two_pion(channel: str) -> bool:
    return channel in TWO_PION_CHANNELS


@dataclass(frozen=True)
class MixingParams:
    """Coefficients p, q of the K_L/K_S superpositions over (K0, K0bar)."""

    p: complex
    q: complex

    def __post_init__(self):
        if abs(self.p) ** 2 + abs(self.q) ** 2 == 0:
            raise ValueError("p and q cannot both vanish")


def _default_branching_l():
    return {"pi_e_nu": 0.39, "pi_mu_nu": 0.27, "three_pi": 0.339, "two_pi": 0.001}


def _default_branching_s():
    return {"pi_plus_pi_minus": 0.69, "two_pi0": 0.31}


@dataclass(frozen=True)
class KaonParams:
    """Masses (MeV), widths (1/s), and branching maps for K_L and K_S.

    Defaults beyond the K_S lifetime and the K_L branching pattern are
    external physical constants; every value is overridable.
    """

    m_l: float = const.M_KAON_MEV + 0.5 * const.DELTA_M_MEV
    m_s: float = const.M_KAON_MEV - 0.5 * const.DELTA_M_MEV
    gamma_l: float = 1.0 / const.TAU_L_SEC
    gamma_s: float = 1.0 / const.TAU_S_SEC
    branching_l: dict = field(default_factory=_default_branching_l)
    branching_s: dict = field(default_factory=_default_branching_s)
    m_k: float = const.M_KAON_MEV
    m_pi_charged: float = const.M_PI_CHARGED_MEV
    m_pi_neutral: float = const.M_PI_NEUTRAL_MEV

    def __post_init__(self):
        if not (self.gamma_s > self.gamma_l > 0):
            raise ValueError("widths must satisfy gamma_s > gamma_l > 0")
        for name in ("m_l", "m_s", "m_k", "m_pi_charged", "m_pi_neutral"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for label, branching in (("K_L", self.branching_l), ("K_S", self.branching_s)):
            total = sum(branching.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"{label} branching fractions sum to {total}, not 1")
            if any(v < 0 for v in branching.values()):
                raise ValueError(f"{label} branching fractions must be nonnegative")

    @property
    def tau_l(self) -> float:
        return 1.0 / self.gamma_l

    @property
    def tau_s(self) -> float:
        return 1.0 / self.gamma_s

    @property
    def delta_m(self) -> float:
        return self.m_l - self.m_s

    def two_pion_fraction(self, component: str) -> float:
        branching = self.branching_l if component == "K_L" else self.branching_s
        return sum(v for k, v in branching.items() if is_two_pion(k))


@dataclass(frozen=True)
class KaonState:
    """Coherent superposition a |K_L> + b |K_S> at time t.

    States are deliberately left unnormalized: the decaying norm carries the
    survival probability.
    """

    a: complex
    b: complex
    t: float = 0.0

    def __post_init__(self):
        if self.t == 0.0 and self.a == 0 and self.b == 0:
            raise ValueError("initial state cannot be identically zero")
        for coeff in (self.a, self.b):
            if not cmath.isfinite(complex(coeff)):
                raise ValueError("coefficients must be finite")


def overlap(mixing: MixingParams) -> float:
    """<K_L|K_S> = (|p|^2 - |q|^2)/(|p|^2 + |q|^2); nonzero signals CP violation."""
    p2 = abs(mixing.p) ** 2
    q2 = abs(mixing.q) ** 2
    return (p2 - q2) / (p2 + q2)


def evolve_kaon(
    state: KaonState,
    params: KaonParams,
    dt: float,
    constants: PhysicalConstants = MEV_M_S,
) -> KaonState:
    """Apply the exponential decay law to each mass eigenstate for time dt."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    a = (
        state.a
        * math.exp(-0.5 * params.gamma_l * dt)
        * cmath.exp(-1j * params.m_l * dt / constants.hbar)
    )
    b = (
        state.b
        * math.exp(-0.5 * params.gamma_s * dt)
        * cmath.exp(-1j * params.m_s * dt / constants.hbar)
    )
    return KaonState(a, b, state.t + dt)


def survival_intensities(
    state0: KaonState, params: KaonParams, t: float
) -> tuple[float, float]:
    """(|a|^2 e^{-Gamma_L t}, |b|^2 e^{-Gamma_S t}) at time t after state0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return (
        abs(state0.a) ** 2 * math.exp(-params.gamma_l * t),
        abs(state0.b) ** 2 * math.exp(-params.gamma_s * t),
    )


def strangeness_content(
    state: KaonState,
    mixing: MixingParams,
    params: KaonParams,
    t: float,
    constants: PhysicalConstants = MEV_M_S,
) -> tuple[float, float]:
    """Unnormalized (K0, K0bar) intensities of the evolved state at time t.

    The overall e^{-i m_S t/hbar} phase is factored out before taking moduli,
    so only the mass splitting enters the interference term (numerically
    stable at laboratory phase counts).
    """
    if abs(mixing.p) == 0 or abs(mixing.q) == 0:
        raise BasisInversionError("p = 0 or q = 0 makes the basis change singular")
    a_t = (
        state.a
        * math.exp(-0.5 * params.gamma_l * t)
        * cmath.exp(-1j * params.delta_m * t / constants.hbar)
    )
    b_t = state.b * math.exp(-0.5 * params.gamma_s * t)
    norm = math.sqrt(abs(mixing.p) ** 2 + abs(mixing.q) ** 2)
    c_k0 = mixing.p * (a_t + b_t) / norm
    c_k0bar = mixing.q * (b_t - a_t) / norm
    return abs(c_k0) ** 2, abs(c_k0bar) ** 2


def component_weights(state0: KaonState) -> tuple[float, float]:
    """Classical (K_L, K_S) decay weights from the initial intensities."""
    wa = abs(state0.a) ** 2
    wb = abs(state0.b) ** 2
    total = wa + wb
    if total == 0:
        raise ValueError("state has zero intensity")
    return wa / total, wb / total


def sample_decays(
    state0: KaonState,
    params: KaonParams,
    n: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized decay sampling: (proper_times, components, channels).

    Components are drawn with probability proportional to |a|^2, |b|^2;
    proper times are exponential with the component's width; channels follow
    the component's branching map.  Draw order is fixed, so results are
    reproducible for a given generator state.
    """
    w_l, _ = component_weights(state0)
    is_l = rng.random(n) < w_l
    u_time = rng.random(n)
    u_channel = rng.random(n)

    tau = np.where(is_l, params.tau_l, params.tau_s)
    t_decay = -tau * np.log1p(-u_time)

    components = np.where(is_l, "K_L", "K_S").astype("<U3")
    channels = np.empty(n, dtype="<U16")
    for mask, branching in (
        (is_l, params.branching_l),
        (~is_l, params.branching_s),
    ):
        if not np.any(mask):
            continue
        names = sorted(branching)
        edges = np.cumsum([branching[k] for k in names])
        idx = np.searchsorted(edges, u_channel[mask], side="right")
        idx = np.minimum(idx, len(names) - 1)
        channels[mask] = np.array(names, dtype="<U16")[idx]
    return t_decay, components, channels


def sample_decay(
    state0: KaonState, params: KaonParams, rng_seed: int
) -> tuple[float, str, str]:
    """Draw one decay: (proper time, component, channel)."""
    rng = np.random.default_rng(rng_seed)
    t, comp, chan = sample_decays(state0, params, 1, rng)
    return float(t[0]), str(comp[0]), str(chan[0])
