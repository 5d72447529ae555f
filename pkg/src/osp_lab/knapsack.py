"""Online convex optimization with knapsacks: environment, agents, benchmark.

The environment draws i.i.d. (reward, consumption) pairs, credits reward
only while cumulative consumption stays within budget (including the
current round), and reveals the full pair after each action.  Agents reduce
the problem to an online saddle-point game on the per-round Lagrangian
L(x, y) = -r(x) - y . (b/T - c(x)) over X x prod_i [0, y_max_i].

Reward and consumption functions are scalar quadratics in the action, which
keeps every running sum a fixed-size coefficient vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Box, FeasibleSet, IntervalProduct
from .payoffs import PayoffFunction, SeparableQuadratic
from .saddle_solver import SolverConfig, solve_saddle


@dataclass
class QuadraticFn:
    """q(x) = a2*x^2 + a1*x + a0 on scalar x."""

    a2: float
    a1: float
    a0: float = 0.0

    def __call__(self, x: float) -> float:
        return self.a2 * x * x + self.a1 * x + self.a0

    def deriv(self, x: float) -> float:
        return 2.0 * self.a2 * x + self.a1

    def coefficients(self) -> np.ndarray:
        return np.array([self.a2, self.a1, self.a0])


class Sec82Sampler:
    """Reward -x^2 + b*x with b ~ U[0, 20]; consumptions (a*x)^2 + 50x with
    a ~ U[0, 3], and x itself."""

    m = 2

    def __init__(self, b_high: float = 20.0, a_high: float = 3.0):
        self.b_high = b_high
        self.a_high = a_high

    def draw(self, rng: np.random.Generator) -> tuple[QuadraticFn, list[QuadraticFn]]:
        b = rng.uniform(0.0, self.b_high)
        a = rng.uniform(0.0, self.a_high)
        return (
            QuadraticFn(-1.0, b, 0.0),
            [QuadraticFn(a * a, 50.0, 0.0), QuadraticFn(0.0, 1.0, 0.0)],
        )

    def expectation(self) -> tuple[QuadraticFn, list[QuadraticFn]]:
        eb = self.b_high / 2.0
        ea2 = self.a_high ** 2 / 3.0  # E[a^2] for a ~ U[0, a_high]
        return (
            QuadraticFn(-1.0, eb, 0.0),
            [QuadraticFn(ea2, 50.0, 0.0), QuadraticFn(0.0, 1.0, 0.0)],
        )

    def lipschitz_bound(self, x_max: float) -> float:
        g_r = max(2.0 * x_max, self.b_high)
        g_c1 = 2.0 * self.a_high ** 2 * x_max + 50.0
        return float(max(g_r, g_c1, 1.0))

    def max_reward(self, x_max: float) -> float:
        # max over x in [0, x_max] and b in [0, b_high] of -x^2 + b*x
        x_star = min(self.b_high / 2.0, x_max)
        return float(-x_star * x_star + self.b_high * x_star)


def monte_carlo_expectation(sampler, n: int = 10**6, seed: int = 0):
    """Coefficient-averaged expectation oracle for quadratic-family samplers."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 982451653))))
    r0, c0 = sampler.draw(rng)
    r_acc = r0.coefficients()
    c_acc = [ci.coefficients() for ci in c0]
    for _ in range(n - 1):
        r, c = sampler.draw(rng)
        r_acc += r.coefficients()
        for acc, ci in zip(c_acc, c):
            acc += ci.coefficients()
    r_mean = QuadraticFn(*(r_acc / n))
    c_mean = [QuadraticFn(*(acc / n)) for acc in c_acc]
    return r_mean, c_mean


@dataclass
class KnapsackInstance:
    """Problem data: action interval, budgets over the whole horizon, the
    i.i.d. sampler, the null action, and dual bounds y_max.

    y_max defaults to (max per-round reward) / (b_i / T), the reward gained
    per unit of budget; override when sharper bounds are known.
    """

    X: Box
    b: np.ndarray
    T: int
    sampler: object
    null_action: np.ndarray = field(default_factory=lambda: np.zeros(1))
    y_max: np.ndarray | None = None

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if np.any(self.b < 0):
            raise ValueError("budgets must be nonnegative")
        if self.T < 1:
            raise ValueError("horizon must be at least 1")
        if not self.X.contains(self.null_action):
            raise ValueError("null action must be feasible")
        if self.y_max is None:
            x_max = float(self.X.upper[0])
            r_max = self.sampler.max_reward(x_max)
            with np.errstate(divide="ignore"):
                self.y_max = np.where(self.b > 0, r_max / (self.b / self.T), 0.0)
        self.y_max = np.asarray(self.y_max, dtype=float)
        self._verify_null_action()

    def _verify_null_action(self, n_probes: int = 8):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(1234567)))
        x0 = float(self.null_action[0])
        for _ in range(n_probes):
            r, c = self.sampler.draw(rng)
            if abs(r(x0)) > 1e-12 or any(abs(ci(x0)) > 1e-12 for ci in c):
                raise ValueError("null action must have zero reward and consumption")
            probe = rng.uniform(float(self.X.lower[0]), float(self.X.upper[0]))
            if any(ci(probe) < -1e-9 for ci in c):
                raise ValueError("consumption functions must be nonnegative on X")

    @property
    def m(self) -> int:
        return self.b.shape[0]

    def dual_set(self) -> IntervalProduct:
        return IntervalProduct(self.y_max)

    def lagrangian(self, r: QuadraticFn, c: list[QuadraticFn]) -> "KnapsackLagrangian":
        return KnapsackLagrangian(r, c, self.b / self.T)

    def lipschitz_G(self) -> float:
        return self.sampler.lipschitz_bound(float(self.X.upper[0]))


def sec82_instance(
    T: int, budgets_per_round: tuple[float, ...] = (200.0, 4.0)
) -> KnapsackInstance:
    return KnapsackInstance(
        X=Box(np.array([0.0]), np.array([20.0])),
        b=np.asarray(budgets_per_round, dtype=float) * T,
        T=T,
        sampler=Sec82Sampler(),
    )


# ---------------------------------------------------------------------------
# Lagrangian payoffs and their running sums
# ---------------------------------------------------------------------------


@dataclass
class KnapsackLagrangian(PayoffFunction):
    """L(x, y) = -r(x) - y . (b/T - c(x)); convex in x, linear in y."""

    r: QuadraticFn
    c: list[QuadraticFn]
    b_over_T: np.ndarray

    def __post_init__(self):
        if len(self.c) != self.b_over_T.shape[0]:
            raise ValueError("consumption dimension must match budget dimension")
        self.strong_H = 0.0
        self.linear_in_y = True
        self.norm_tag = "l2"

    def _cons(self, xv: float) -> np.ndarray:
        return np.array([ci(xv) for ci in self.c])

    def value(self, x, y):
        xv = float(x[0])
        return -self.r(xv) - float(y @ (self.b_over_T - self._cons(xv)))

    def grad_x(self, x, y):
        xv = float(x[0])
        g = -self.r.deriv(xv) + sum(
            float(y[i]) * self.c[i].deriv(xv) for i in range(len(self.c))
        )
        return np.array([g])

    def grad_y(self, x, y):
        return self._cons(float(x[0])) - self.b_over_T

    def restrict_x(self, y):
        quad = -self.r.a2 + sum(float(y[i]) * self.c[i].a2 for i in range(len(self.c)))
        lin = -self.r.a1 + sum(float(y[i]) * self.c[i].a1 for i in range(len(self.c)))
        const = (
            -self.r.a0
            + sum(float(y[i]) * self.c[i].a0 for i in range(len(self.c)))
            - float(y @ self.b_over_T)
        )
        return SeparableQuadratic(np.array([quad]), np.array([lin]), const)

    def restrict_y(self, x):
        xv = float(x[0])
        return SeparableQuadratic(
            np.zeros(self.b_over_T.shape[0]),
            self._cons(xv) - self.b_over_T,
            -self.r(xv),
        )


class KnapsackAggregate(PayoffFunction):
    """Sum over observed rounds of L_t(x,y) + H*x^2 - H*||y||^2, held as
    coefficient accumulators; O(1) state regardless of the horizon."""

    def __init__(self, m: int, b_over_T: np.ndarray, H: float = 0.0):
        self.m = m
        self.b_over_T = np.asarray(b_over_T, dtype=float)
        self.H = H
        self.t = 0
        self.r_coef = np.zeros(3)
        self.c_coef = np.zeros((m, 3))
        self.norm_tag = "l2"

    def add(self, r: QuadraticFn, c: list[QuadraticFn]) -> None:
        self.t += 1
        self.r_coef += r.coefficients()
        for i, ci in enumerate(c):
            self.c_coef[i] += ci.coefficients()

    @property
    def strong_H(self) -> float:
        return 2.0 * self.H * self.t

    @strong_H.setter
    def strong_H(self, _):  # fixed by construction
        pass

    def _cons_sum(self, xv: float) -> np.ndarray:
        return self.c_coef @ np.array([xv * xv, xv, 1.0])

    def value(self, x, y):
        xv = float(x[0])
        rsum = float(self.r_coef @ np.array([xv * xv, xv, 1.0]))
        dual = float(y @ (self.t * self.b_over_T - self._cons_sum(xv)))
        reg = self.H * self.t * (xv * xv - float(y @ y))
        return -rsum - dual + reg

    def grad_x(self, x, y):
        xv = float(x[0])
        g = (
            -(2.0 * self.r_coef[0] * xv + self.r_coef[1])
            + float(y @ (2.0 * self.c_coef[:, 0] * xv + self.c_coef[:, 1]))
            + 2.0 * self.H * self.t * xv
        )
        return np.array([g])

    def grad_y(self, x, y):
        xv = float(x[0])
        return self._cons_sum(xv) - self.t * self.b_over_T - 2.0 * self.H * self.t * np.asarray(y)

    def restrict_x(self, y):
        yv = np.asarray(y, dtype=float)
        quad = -self.r_coef[0] + float(yv @ self.c_coef[:, 0]) + self.H * self.t
        lin = -self.r_coef[1] + float(yv @ self.c_coef[:, 1])
        const = (
            -self.r_coef[2]
            + float(yv @ self.c_coef[:, 2])
            - float(yv @ (self.t * self.b_over_T))
            - self.H * self.t * float(yv @ yv)
        )
        return SeparableQuadratic(np.array([quad]), np.array([lin]), const)

    def restrict_y(self, x):
        xv = float(x[0])
        rsum = float(self.r_coef @ np.array([xv * xv, xv, 1.0]))
        return SeparableQuadratic(
            np.full(self.m, -self.H * self.t),
            self._cons_sum(xv) - self.t * self.b_over_T,
            -rsum + self.H * self.t * xv * xv,
        )

    def envelope_argmin(self, X, Y) -> float:
        """Exact minimizer of phi(x) = max_y of this aggregate over [0, ymax].

        phi is convex with derivative -Rsum'(x) + 2*H*t*x + sum_i y_i*(x) *
        Csum_i'(x), where y_i*(x) is the per-coordinate inner argmax
        (clipped g_i/(2Ht), or bang-bang when H = 0); bisection on the
        monotone derivative pins x* to machine precision."""
        lo, hi = float(X.lower[0]), float(X.upper[0])
        ymax = Y.upper
        ra2, ra1 = self.r_coef[0], self.r_coef[1]
        ca2, ca1, _ = self.c_coef[:, 0], self.c_coef[:, 1], self.c_coef[:, 2]
        tb = self.t * self.b_over_T
        Ht2 = 2.0 * self.H * self.t

        def dphi(xv: float) -> float:
            g = self.c_coef @ np.array([xv * xv, xv, 1.0]) - tb
            if Ht2 > 0.0:
                y = np.clip(g / Ht2, 0.0, ymax)
            else:
                y = np.where(g > 0.0, ymax, 0.0)
            cons_slope = 2.0 * ca2 * xv + ca1
            return -(2.0 * ra2 * xv + ra1) + Ht2 * xv + float(y @ cons_slope)

        if dphi(lo) >= 0.0:
            return lo
        if dphi(hi) <= 0.0:
            return hi
        a, b = lo, hi
        for _ in range(100):
            mid = 0.5 * (a + b)
            if dphi(mid) > 0.0:
                b = mid
            else:
                a = mid
        return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------


@dataclass
class KnapsackState:
    cumulative_consumption: np.ndarray
    cumulative_reward: float = 0.0
    violated: bool = False
    round: int = 0


@dataclass
class StepOutcome:
    reward_fn: QuadraticFn
    consumption_fns: list[QuadraticFn]
    reward_value: float
    reward_collected: float
    consumption: np.ndarray


class KnapsackEnvironment:
    """Draws i.i.d. (r_t, c_t), applies the budget indicator, reveals the
    full pair after the action (full-information setting)."""

    def __init__(self, instance: KnapsackInstance, seed: int):
        self.instance = instance
        self.rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((seed, 77770001)))
        )
        self.state = KnapsackState(np.zeros(instance.m))

    def step(self, x_t: np.ndarray) -> StepOutcome:
        if not self.instance.X.contains(x_t, 1e-9):
            raise ValueError("infeasible action")
        xv = float(x_t[0])
        r, c = self.instance.sampler.draw(self.rng)
        cons = np.array([ci(xv) for ci in c])
        st = self.state
        st.cumulative_consumption = st.cumulative_consumption + cons
        within = bool(np.all(st.cumulative_consumption <= self.instance.b + 1e-12))
        if not within:
            st.violated = True
        collected = r(xv) if not st.violated else 0.0
        st.cumulative_reward += collected
        st.round += 1
        return StepOutcome(r, c, r(xv), collected, cons)


# ---------------------------------------------------------------------------
# Agents
# ---------------------------------------------------------------------------


@dataclass
class PDRFTLConfig:
    eta1: float
    eta2: float

    def __post_init__(self):
        if self.eta1 <= 0 or self.eta2 <= 0:
            raise ValueError("step parameters must be positive")


def theorem8_steps(instance: KnapsackInstance) -> PDRFTLConfig:
    """eta1 = D_X / (G (1 + ||y_max||_2) sqrt(T)),
    eta2 = ||y_max||_2 / ((||b||_2 / T + sqrt(m G D_X)) sqrt(T))."""
    G = instance.lipschitz_G()
    D_X = instance.X.diameter()
    T = instance.T
    ymax2 = float(np.linalg.norm(instance.y_max))
    eta1 = D_X / (G * (1.0 + ymax2) * np.sqrt(T))
    denom = float(np.linalg.norm(instance.b)) / T + np.sqrt(instance.m * G * D_X)
    eta2 = ymax2 / (denom * np.sqrt(T))
    return PDRFTLConfig(eta1=eta1, eta2=eta2)


class PDRFTL:
    """Primal-dual regularized follow-the-leader: both blocks run lazy
    projected gradient steps on their linearized one-sided losses.

    The quadratic-regularized argmin/argmax over the running gradient sums
    reduce exactly to projections of -eta1 * sum grad_f and +eta2 * sum grad_g.
    """

    algorithm_id = "pd_rftl"

    def __init__(self, X: FeasibleSet, Y: FeasibleSet, config: PDRFTLConfig):
        self.X = X
        self.Y = Y
        self.config = config
        self.grad_sum_x = np.zeros(X.dimension)
        self.grad_sum_y = np.zeros(Y.dimension)
        self.current_action: tuple[np.ndarray, np.ndarray] = (
            X.origin_projection(),
            Y.origin_projection(),
        )
        self.round = 0
        self.budget_exceeded_rounds = 0
        self.last_gap = 0.0

    def step(self, revealed: PayoffFunction) -> tuple[np.ndarray, np.ndarray]:
        x_t, y_t = self.current_action
        self.grad_sum_x = self.grad_sum_x + revealed.grad_x(x_t, y_t)
        self.grad_sum_y = self.grad_sum_y + revealed.grad_y(x_t, y_t)
        x_next = self.X.project(-self.config.eta1 * self.grad_sum_x)
        y_next = self.Y.project(self.config.eta2 * self.grad_sum_y)
        self.current_action = (x_next, y_next)
        self.round += 1
        return self.current_action


class SPFTLKnapsackAgent:
    """SP-FTL on the H-regularized Lagrangians, H = T^(-1/6) by default.

    The saddle-point machinery sees the regularized sequence; reward and
    regret accounting stay with the raw Lagrangians.
    """

    algorithm_id = "spftl_knapsack"

    def __init__(
        self,
        instance: KnapsackInstance,
        H: float | None = None,
        solver: SolverConfig | None = None,
    ):
        if H is None:
            H = float(instance.T ** (-1.0 / 6.0))
        if H <= 0:
            raise ValueError("H must be positive: the regularized payoff must be strongly convex-concave")
        self.instance = instance
        self.H = H
        self.X = instance.X
        self.Y = instance.dual_set()
        self.solver = solver or SolverConfig()
        self.aggregate = KnapsackAggregate(instance.m, instance.b / instance.T, H)
        self.current_action: tuple[np.ndarray, np.ndarray] = (
            self.X.origin_projection(),
            self.Y.origin_projection(),
        )
        self.round = 0
        self.budget_exceeded_rounds = 0
        self.last_gap = 0.0

    def step(self, r: QuadraticFn, c: list[QuadraticFn]) -> tuple[np.ndarray, np.ndarray]:
        self.aggregate.add(r, c)
        cfg = replace(self.solver, warm_start=self.current_action)
        sol = solve_saddle(self.aggregate, self.X, self.Y, cfg)
        if sol.budget_exhausted(cfg):
            self.budget_exceeded_rounds += 1
        self.last_gap = sol.gap
        self.current_action = (sol.x_star, sol.y_star)
        self.round += 1
        return self.current_action


class OGDAKnapsack:
    """Gradient descent/ascent on the revealed Lagrangian at the played pair."""

    algorithm_id = "ogda_knapsack"

    def __init__(self, X: FeasibleSet, Y: FeasibleSet, eta1: float, eta2: float):
        self.X = X
        self.Y = Y
        self.eta1 = eta1
        self.eta2 = eta2
        self.current_action = (X.origin_projection(), Y.origin_projection())
        self.round = 0
        self.budget_exceeded_rounds = 0
        self.last_gap = 0.0

    def step(self, revealed: PayoffFunction) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.current_action
        x_next = self.X.project(x - self.eta1 * revealed.grad_x(x, y))
        y_next = self.Y.project(y + self.eta2 * revealed.grad_y(x, y))
        self.current_action = (x_next, y_next)
        self.round += 1
        return self.current_action


# ---------------------------------------------------------------------------
# Benchmark and regret
# ---------------------------------------------------------------------------


def benchmark_r_star(
    instance: KnapsackInstance,
    expectation_oracle=None,
    cfg: SolverConfig | None = None,
) -> float:
    """Value of max_x T*E[r(x)] s.t. T*E[c(x)] <= b, via strong duality on
    the expected Lagrangian saddle over X x prod [0, y_max_i].

    The null action gives Slater's condition; y_max bounds the optimal duals,
    so the boxed saddle value equals the constrained optimum.
    """
    if expectation_oracle is None:
        e_r, e_c = instance.sampler.expectation()
    else:
        e_r, e_c = expectation_oracle
    payoff = instance.lagrangian(e_r, e_c)
    cfg = cfg or SolverConfig(tol_gap=1e-10, max_iters=200_000)
    sol = solve_saddle(payoff, instance.X, instance.dual_set(), cfg)
    return -instance.T * sol.value


def knapsack_regret(state_or_reward, r_star: float) -> float:
    reward = (
        state_or_reward.cumulative_reward
        if hasattr(state_or_reward, "cumulative_reward")
        else float(state_or_reward)
    )
    return r_star - reward


def reward_lower_bound(
    rewards: np.ndarray, consumptions: np.ndarray, instance: KnapsackInstance
) -> float:
    """Right-hand side of the pay-per-overage bound: sum r_t(x_t) +
    min_{y in Y} y . sum(b/T - c_t(x_t)); realized reward always dominates it."""
    slack = instance.b / instance.T * consumptions.shape[0] - consumptions.sum(axis=0)
    penal = float(np.minimum(slack * instance.y_max, 0.0).sum())
    return float(rewards.sum()) + penal
