"""Online algorithms over general convex compact sets.

SP-FTL plays the saddle point of the running payoff sum; SP-RFTL does the
same after adding strongly convex regularizers to each observed payoff;
OGDA is the decoupled baseline where each player runs projected online
gradient descent/ascent against the other's last action.

All three are deterministic: identical configuration and observation
sequence reproduce the iterate trace bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import FeasibleSet
from .payoffs import PayoffFunction, Regularizer, SumPayoff, regularize
from .saddle_solver import SaddleSolution, SolverConfig, solve_saddle


@dataclass
class SPFTLConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    # Algorithm 1 premise: the running sum must have a unique saddle point.
    # Theorem-6 style runs on bilinear games opt out explicitly.
    require_strong_convexity: bool = True


class SPFTL:
    """Saddle-point follow-the-leader: after observing round t, move to the
    saddle of the cumulative payoff, warm-started at the current action."""

    algorithm_id = "spftl"

    def __init__(self, X: FeasibleSet, Y: FeasibleSet, config: SPFTLConfig | None = None):
        self.X = X
        self.Y = Y
        self.config = config or SPFTLConfig()
        self.payoff_sum = SumPayoff()
        self.round = 0
        self.current_action: tuple[np.ndarray, np.ndarray] = (
            X.origin_projection(),
            Y.origin_projection(),
        )
        self.last_solution: SaddleSolution | None = None
        self.last_gap = 0.0
        self.budget_exceeded_rounds = 0

    def _solve_target(self) -> PayoffFunction:
        return self.payoff_sum

    def _record(self, observed: PayoffFunction) -> None:
        self.payoff_sum.add(observed)

    def step(self, observed: PayoffFunction) -> tuple[np.ndarray, np.ndarray]:
        if self.config.require_strong_convexity and observed.strong_H <= 0:
            raise ValueError(
                "SP-FTL requires strongly convex-concave payoffs; use SP-RFTL"
            )
        self._record(observed)
        cfg = replace(self.config.solver, warm_start=self.current_action)
        sol = solve_saddle(self._solve_target(), self.X, self.Y, cfg)
        if sol.budget_exhausted(cfg):
            self.budget_exceeded_rounds += 1
        self.last_solution = sol
        self.last_gap = sol.gap
        self.current_action = (sol.x_star, sol.y_star)
        self.round += 1
        return self.current_action


@dataclass
class SPRFTLConfig:
    eta: float
    reg_x: Regularizer
    reg_y: Regularizer
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")


def corollary1_eta(D: float, G: float, T: int) -> float:
    """Default SP-RFTL learning rate: D*sqrt(T) / (G*sqrt(ln T))."""
    if T < 2:
        raise ValueError("needs T >= 2 for a positive ln(T)")
    return D * np.sqrt(T) / (G * np.sqrt(np.log(T)))


class SPRFTL(SPFTL):
    """SP-FTL on payoffs regularized by (1/eta)(R_X(x) - R_Y(y)).

    The regularized sequence drives the iterates; regret bookkeeping stays
    with the raw observed payoffs (the harness records those).
    """

    algorithm_id = "sprftl"

    def __init__(self, X: FeasibleSet, Y: FeasibleSet, config: SPRFTLConfig):
        super().__init__(X, Y, SPFTLConfig(solver=config.solver, require_strong_convexity=False))
        self.rftl_config = config

    def step(self, observed: PayoffFunction) -> tuple[np.ndarray, np.ndarray]:
        wrapped = regularize(
            observed,
            self.rftl_config.reg_x,
            self.rftl_config.reg_y,
            1.0 / self.rftl_config.eta,
        )
        return super().step(wrapped)


@dataclass
class OGDAConfig:
    schedule: str = "diminishing"  # or "constant"
    constant: float = 1.0  # c in eta_t = c/t, or the constant step itself

    def __post_init__(self):
        if self.schedule not in ("diminishing", "constant"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.constant <= 0:
            raise ValueError("step constant must be positive")


class OGDA:
    """Projected online gradient descent (x) + ascent (y) at the realized pair."""

    algorithm_id = "ogda"

    def __init__(self, X: FeasibleSet, Y: FeasibleSet, config: OGDAConfig | None = None):
        self.X = X
        self.Y = Y
        self.config = config or OGDAConfig()
        self.round = 0
        self.current_action: tuple[np.ndarray, np.ndarray] = (
            X.origin_projection(),
            Y.origin_projection(),
        )
        self.last_gap = 0.0
        self.budget_exceeded_rounds = 0

    def step_size(self, t: int) -> float:
        if self.config.schedule == "constant":
            return self.config.constant
        return self.config.constant / t

    def step(self, observed: PayoffFunction) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.current_action
        t = self.round + 1
        eta = self.step_size(t)
        x_next = self.X.project(x - eta * observed.grad_x(x, y))
        y_next = self.Y.project(y + eta * observed.grad_y(x, y))
        self.current_action = (x_next, y_next)
        self.round += 1
        return self.current_action
