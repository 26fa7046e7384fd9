"""Sensed force frames and their delta / ternary representations.

Every frame stacks both agents: values have shape (2, 4), with the four
channels ordered (upper x, upper z, lower x, lower z).
"""
from dataclasses import dataclass

import numpy as np

CHANNELS = 4


@dataclass(frozen=True)
class ForceFrame:
    values: np.ndarray
    t: int

    def agent(self, i: int) -> np.ndarray:
        return self.values[i]


@dataclass(frozen=True)
class DeltaForce:
    values: np.ndarray
    t: int

    def agent(self, i: int) -> np.ndarray:
        return self.values[i]


@dataclass(frozen=True)
class TernaryFrame:
    values: np.ndarray  # int8 in {-1, 0, 1}
    t: int

    def agent(self, i: int) -> np.ndarray:
        return self.values[i]
