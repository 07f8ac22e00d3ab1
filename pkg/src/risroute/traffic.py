"""ON/OFF activity of intermediate users and the estimates derived from it.

State 0 is OFF (the user is idle and may relay), state 1 is ON (busy with its
own traffic).  Sojourn times are exponential in continuous time, which a
slotted chain approximates with geometric sojourns.
"""
import bisect
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

OFF, ON = 0, 1
ETA_FORMS = ("literal", "corrected")


@dataclass(frozen=True)
class TrafficParams:
    mean_off: float  # seconds
    mean_on: float  # seconds
    slot: float  # seconds

    def __post_init__(self):
        if not (self.mean_off > 0 and self.mean_on > 0 and self.slot > 0):
            raise ParameterError("traffic durations must be positive")
        if self.slot > min(self.mean_off, self.mean_on) / 10.0:
            raise ParameterError(
                f"slot {self.slot} s is not small against mean sojourns "
                f"({self.mean_off} s OFF, {self.mean_on} s ON)")

    @property
    def on_fraction(self):
        return self.mean_on / (self.mean_on + self.mean_off)


@dataclass(frozen=True)
class ActivityState:
    current: int = OFF
    slots_in_state: int = 0


def switch_probs(mean_off, mean_on, slot):
    """(p01, p10): chance per slot of leaving OFF and leaving ON."""
    p01 = -np.expm1(-slot / mean_off) if np.isfinite(mean_off) else 0.0
    p10 = -np.expm1(-slot / mean_on) if np.isfinite(mean_on) else 0.0
    return float(p01), float(p10)


def transition_matrix(params):
    p01, p10 = switch_probs(params.mean_off, params.mean_on, params.slot)
    return np.array([[1.0 - p01, p01], [p10, 1.0 - p10]])


def step_activity(state, matrix, rng):
    """Advance one slot using exactly one uniform draw."""
    u = rng.random()
    leave = matrix[state.current, 1 - state.current]
    if u < leave:
        return ActivityState(1 - state.current, 0)
    return ActivityState(state.current, state.slots_in_state + 1)


def stationary_on(matrix):
    p01, p10 = matrix[0, 1], matrix[1, 0]
    return p01 / (p01 + p10)


def estimate_idle_time(mean_off, idle_confidence):
    """Window over which an idle user stays idle with probability 1 - idle_confidence."""
    if not 0.0 < idle_confidence < 1.0:
        raise ParameterError("idle confidence must lie in (0, 1)")
    if mean_off <= 0:
        raise ParameterError("mean OFF duration must be positive")
    return mean_off * np.log(1.0 / (1.0 - idle_confidence))


def estimate_wait_time(mean_on, p_th, form="literal"):
    """Slots a busy user is expected to stay busy, floored at one.

    ``literal`` keeps ``1 - exp(+1/mean_on)``, which is negative and so always
    yields 1; ``corrected`` uses ``1 - exp(-1/mean_on)``.
    """
    if not 0.0 < p_th < 1.0:
        raise ParameterError("threshold probability must lie in (0, 1)")
    if mean_on <= 0:
        raise ParameterError("mean ON duration must be positive")
    if form == "literal":
        head = 1.0 - np.exp(1.0 / mean_on)
    elif form == "corrected":
        head = -np.expm1(-1.0 / mean_on)
    else:
        raise ParameterError(f"unknown wait-time form {form!r}")
    return float(mean_on * np.log(max(head / p_th, 1.0)) + 1.0)


class ActivityTimeline:
    """Lazily generated ON/OFF history of one user.

    Sojourns are geometric with the per-slot switch probabilities, the same law
    as stepping the chain one slot at a time, but generated a sojourn at a time
    so long idle stretches cost nothing.  The initial state follows the
    stationary distribution.
    """

    def __init__(self, params, rng):
        self.p01, self.p10 = switch_probs(params.mean_off, params.mean_on, params.slot)
        self._rng = rng
        pi_on = self.p01 / (self.p01 + self.p10) if self.p01 + self.p10 > 0 else 0.0
        self._first = ON if rng.random() < pi_on else OFF
        self._starts = [0]  # slot index at which each sojourn begins

    def _sojourn(self, state):
        p = self.p01 if state == OFF else self.p10
        if p <= 0:
            return np.iinfo(np.int64).max // 4
        return int(self._rng.geometric(p))

    def _extend(self, slot):
        while self._starts[-1] <= slot:
            state = self._first if len(self._starts) % 2 else 1 - self._first
            self._starts.append(self._starts[-1] + self._sojourn(state))

    def _index(self, slot):
        self._extend(slot)
        return bisect.bisect_right(self._starts, slot) - 1

    def state(self, slot):
        i = self._index(slot)
        return self._first if i % 2 == 0 else 1 - self._first

    def next_change(self, slot):
        """First slot after ``slot`` where the state differs."""
        return self._starts[self._index(slot) + 1]

    def next_off(self, slot):
        """First slot at or after ``slot`` where the user is OFF."""
        return slot if self.state(slot) == OFF else self.next_change(slot)
