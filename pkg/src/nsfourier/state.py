"""Solution state containers shared by the coupler and the diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import StreamBasis, reconstruct_velocity
from .config import Laws
from .grid import Grid, ScalarField, VectorField


@dataclass
class FluidState:
    rho: ScalarField
    coeffs: np.ndarray
    theta: ScalarField
    t: float

    def velocity(self, basis: StreamBasis) -> VectorField:
        return reconstruct_velocity(basis, self.coeffs)


@dataclass
class Trajectory:
    grid: Grid
    basis: StreamBasis
    laws: Laws
    eps: float
    delta: float
    states: list = field(default_factory=list)
    records: list = field(default_factory=list)

    def append(self, state: FluidState, record=None) -> None:
        if self.states and state.t <= self.states[-1].t:
            raise ValueError("time stamps must be strictly increasing")
        self.states.append(state)
        if record is not None:
            self.records.append(record)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def initial(self) -> FluidState:
        return self.states[0]

    @property
    def final(self) -> FluidState:
        return self.states[-1]

    def velocity(self, i: int) -> VectorField:
        return self.states[i].velocity(self.basis)

    def min_theta(self) -> float:
        return min(s.theta.min() for s in self.states)
