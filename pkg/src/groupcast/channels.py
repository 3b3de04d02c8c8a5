"""Downlink and sidelink channel models.

Every broadcast slot each user's downlink is ON (the user decodes the
packet) or OFF.  Two per-user models are supported:

* ``IidChannel`` -- the slot is OFF with a fixed probability, independent
  across slots and users.
* ``MarkovChannel`` -- a two-state chain with OFF->ON probability
  ``zeta_01`` and ON->OFF probability ``zeta_10``; captures channel memory.

Device-to-device transmissions use a single ``D2dChannel`` whose error
probability applies to the whole local broadcast (0 = noiseless).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ON = 1
OFF = 0

#: One slot's ON/OFF flags, one entry per user.
ChannelStateVector = tuple[int, ...]


def _check_prob(value, name):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")


@dataclass(frozen=True)
class IidChannel:
    """Memoryless ON/OFF downlink; OFF with probability `error_prob` each slot."""

    error_prob: float

    def __post_init__(self):
        _check_prob(self.error_prob, "error_prob")


@dataclass
class MarkovChannel:
    """Two-state downlink with memory.

    `zeta_01` is P(next ON | now OFF), `zeta_10` is P(next OFF | now ON).
    `current_state` is sampled from the steady state when left unset,
    which is how the long-run analysis treats the chain.
    """

    zeta_01: float
    zeta_10: float
    current_state: int | None = field(default=None)

    def __post_init__(self):
        _check_prob(self.zeta_01, "zeta_01")
        _check_prob(self.zeta_10, "zeta_10")
        if self.current_state not in (None, ON, OFF):
            raise ValueError(f"current_state must be 0, 1 or None, got {self.current_state!r}")

    def steady_state(self) -> tuple[float, float]:
        """Return (pi_0, pi_1), the stationary OFF/ON probabilities."""
        return markov_steady_state(self)


@dataclass(frozen=True)
class D2dChannel:
    """Local broadcast link between users; fails wholesale with probability `error_prob`."""

    error_prob: float = 0.0

    def __post_init__(self):
        _check_prob(self.error_prob, "error_prob")


NOISELESS_D2D = D2dChannel(0.0)


def markov_steady_state(ch: MarkovChannel) -> tuple[float, float]:
    """Stationary distribution (pi_0, pi_1) of a two-state chain.

    Undefined when both transition probabilities are zero (the chain never
    leaves its initial state).
    """
    denom = ch.zeta_01 + ch.zeta_10
    if denom == 0.0:
        raise ValueError("degenerate chain: zeta_01 = zeta_10 = 0 has no unique steady state")
    pi_0 = ch.zeta_10 / denom
    return pi_0, 1.0 - pi_0


def sample_state(models, rng: np.random.Generator) -> ChannelStateVector:
    """Draw one slot's channel state vector and advance any Markov chains.

    `models` is one channel model per user; i.i.d. and Markov models may be
    mixed.  A Markov model with `current_state=None` is first initialised
    from its steady state.
    """
    states = []
    for m in models:
        if isinstance(m, IidChannel):
            states.append(ON if rng.random() >= m.error_prob else OFF)
        elif isinstance(m, MarkovChannel):
            if m.current_state is None:
                pi_0, _ = markov_steady_state(m)
                m.current_state = OFF if rng.random() < pi_0 else ON
            if m.current_state == OFF:
                m.current_state = ON if rng.random() < m.zeta_01 else OFF
            else:
                m.current_state = OFF if rng.random() < m.zeta_10 else ON
            states.append(m.current_state)
        else:
            raise TypeError(f"unsupported channel model: {m!r}")
    return tuple(states)


def state_probability(models, state: ChannelStateVector) -> float:
    """Probability of observing `state` in one slot under i.i.d. models.

    Only defined for i.i.d. channels; for chains with memory the slot
    probability depends on the previous state.
    """
    if len(models) != len(state):
        raise ValueError(f"state length {len(state)} != model count {len(models)}")
    prob = 1.0
    for m, s in zip(models, state):
        if not isinstance(m, IidChannel):
            raise TypeError("state_probability is only defined for i.i.d. channels")
        if s not in (ON, OFF):
            raise ValueError(f"channel state must be 0 or 1, got {s!r}")
        prob *= (1.0 - m.error_prob) if s == ON else m.error_prob
    return prob
