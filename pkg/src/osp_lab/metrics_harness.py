"""Regret metrics, experiment instance generators, and the seeded runner.

Metrics follow the three regret notions: the absolute gap between realized
cumulative payoff and the hindsight min-max value, and the two one-sided
individual regrets against the best fixed action versus the opponent's
realized sequence.  Sequences are generated lazily from seeds and folded
into coefficient accumulators round by round, so horizons of 10^4+ never
materialize payoff lists.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import Box, FeasibleSet, IntervalProduct, Simplex
from .knapsack import (
    KnapsackAggregate,
    KnapsackEnvironment,
    KnapsackInstance,
    OGDAKnapsack,
    PDRFTL,
    PDRFTLConfig,
    SPFTLKnapsackAgent,
    benchmark_r_star,
    reward_lower_bound,
    sec82_instance,
    theorem8_steps,
)
from .matrix_games import (
    BanditConfig,
    BanditOMGRFTL,
    OMGConfig,
    OMGRFTL,
    bandit_defaults,
    omg_defaults,
)
from .osp_algorithms import (
    OGDA,
    OGDAConfig,
    SPFTL,
    SPFTLConfig,
    SPRFTL,
    SPRFTLConfig,
    corollary1_eta,
)
from .payoffs import (
    BilinearPayoff,
    GenericOneVar,
    LinearPlusEntropy,
    PayoffFunction,
    SeparableQuadratic,
    SquaredNormRegularizer,
    SumPayoff,
    make_bilinear,
    make_quadratic_bilinear,
    make_scalar_convex_concave,
)
from .saddle_solver import SolverConfig, assemble_sum, solve_saddle


# ---------------------------------------------------------------------------
# Traces and reports
# ---------------------------------------------------------------------------


@dataclass
class RoundTrace:
    xs: np.ndarray
    ys: np.ndarray
    payoff_values: np.ndarray
    solver_gaps: np.ndarray | None = None
    # bandit runs
    sampled_i: np.ndarray | None = None
    sampled_j: np.ndarray | None = None
    observed_entries: np.ndarray | None = None
    # knapsack runs
    rewards_collected: np.ndarray | None = None
    reward_values: np.ndarray | None = None
    consumptions: np.ndarray | None = None
    violated_flags: np.ndarray | None = None
    # the post-update action (x_{T+1}, y_{T+1}), never played
    final_x: np.ndarray | None = None
    final_y: np.ndarray | None = None

    def __len__(self) -> int:
        return self.payoff_values.shape[0]


@dataclass
class RegretReport:
    sp_regret: float
    ind_regret_x: float
    ind_regret_y: float
    hindsight_value: float
    per_round_series: dict | None = None
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Best-response accumulation
# ---------------------------------------------------------------------------


class RestrictionAccumulator:
    """Sum of one-variable restrictions across rounds; typed closed forms
    merge in O(1), anything else degrades to a closure list."""

    def __init__(self):
        self._typed = None
        self._generic: list = []

    def add(self, restriction) -> None:
        if restriction is None:
            raise ValueError("restriction unavailable")
        if isinstance(restriction, SeparableQuadratic) and not self._generic:
            if self._typed is None:
                self._typed = SeparableQuadratic(
                    restriction.quad.copy(), restriction.lin.copy(), restriction.const
                )
                return
            if isinstance(self._typed, SeparableQuadratic):
                self._typed.quad += restriction.quad
                self._typed.lin += restriction.lin
                self._typed.const += restriction.const
                return
        if isinstance(restriction, LinearPlusEntropy) and not self._generic:
            if self._typed is None:
                self._typed = LinearPlusEntropy(
                    restriction.lin.copy(), restriction.ent_weight, restriction.const
                )
                return
            if isinstance(self._typed, LinearPlusEntropy):
                self._typed.lin += restriction.lin
                self._typed.ent_weight += restriction.ent_weight
                self._typed.const += restriction.const
                return
        self._demote()
        self._generic.append(restriction)

    def _demote(self) -> None:
        if self._typed is not None:
            self._generic.append(self._typed)
            self._typed = None

    def _as_onevar(self):
        if not self._generic:
            return self._typed
        parts = list(self._generic)
        if self._typed is not None:
            parts.append(self._typed)

        def val(z):
            return sum(p.value(z) for p in parts)

        def grad(z):
            return sum(np.asarray(p.grad(z)) for p in parts)

        return GenericOneVar(val, grad)

    def minimize(self, dset: FeasibleSet) -> float:
        return float(self._as_onevar().minimize_over(dset)[0])

    def maximize(self, dset: FeasibleSet) -> float:
        return float(self._as_onevar().maximize_over(dset)[0])


def compute_sp_regret(
    trace: RoundTrace,
    history,
    X: FeasibleSet,
    Y: FeasibleSet,
    cfg: SolverConfig | None = None,
) -> float:
    """|sum of realized payoffs - min_x max_y of the summed history|."""
    total = assemble_sum(history)
    hv = solve_saddle(total, X, Y, cfg).value
    return abs(float(trace.payoff_values.sum()) - hv)


def compute_individual_regrets(
    trace: RoundTrace,
    history,
    X: FeasibleSet,
    Y: FeasibleSet,
    cfg: SolverConfig | None = None,
) -> tuple[float, float]:
    """(realized - best fixed x vs the y_t sequence,
        best fixed y vs the x_t sequence - realized); either may be negative."""
    acc_x = RestrictionAccumulator()
    acc_y = RestrictionAccumulator()
    for t, payoff in enumerate(history):
        acc_x.add(_restrict_or_closure(payoff, "x", trace.ys[t]))
        acc_y.add(_restrict_or_closure(payoff, "y", trace.xs[t]))
    realized = float(trace.payoff_values.sum())
    ind_x = realized - acc_x.minimize(X)
    ind_y = acc_y.maximize(Y) - realized
    return ind_x, ind_y


def _restrict_or_closure(payoff: PayoffFunction, axis: str, other: np.ndarray):
    r = payoff.restrict_x(other) if axis == "x" else payoff.restrict_y(other)
    if r is not None:
        return r
    o = np.array(other, dtype=float)
    if axis == "x":
        return GenericOneVar(lambda x: payoff.value(x, o), lambda x: payoff.grad_x(x, o))
    return GenericOneVar(lambda y: payoff.value(o, y), lambda y: payoff.grad_y(o, y))


# ---------------------------------------------------------------------------
# Scenario generators
# ---------------------------------------------------------------------------

MATCHING_PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])
INDIFFERENT_ROWS = np.array([[1.0, -1.0], [1.0, -1.0]])

GENERATOR_IDS = (
    "theorem6_scenario1",
    "theorem6_scenario2",
    "sec8_instance1",
    "sec8_instance2",
    "iid_quadratic",
    "adversarial_quadratic",
    "random_bilinear",
    "ocowk_sec8",
)


@dataclass
class ScenarioSpec:
    generator_id: str
    T: int
    seed: int = 0
    params: dict = field(default_factory=dict)


@dataclass
class Scenario:
    spec: ScenarioSpec
    kind: str  # "osp" | "omg" | "bandit_capable_omg" is folded into "omg"
    X: FeasibleSet | None
    Y: FeasibleSet | None
    metadata: dict

    def payoffs(self, run_seed: int):
        raise NotImplementedError

    def matrices(self, run_seed: int):
        raise NotImplementedError


class _OSPScenario(Scenario):
    def __init__(self, spec, X, Y, metadata, stream_fn):
        super().__init__(spec, "osp", X, Y, metadata)
        self._stream_fn = stream_fn

    def payoffs(self, run_seed: int):
        return self._stream_fn(run_seed)


class _OMGScenario(Scenario):
    def __init__(self, spec, d1, d2, metadata, matrix_fn):
        super().__init__(spec, "omg", Simplex(d1), Simplex(d2), metadata)
        self._matrix_fn = matrix_fn

    def matrices(self, run_seed: int):
        return self._matrix_fn(run_seed)

    def payoffs(self, run_seed: int):
        return (make_bilinear(A) for A in self.matrices(run_seed))


class _OCOwKScenario(Scenario):
    def __init__(self, spec, instance: KnapsackInstance, metadata):
        super().__init__(spec, "ocowk", instance.X, instance.dual_set(), metadata)
        self.instance = instance


def _stream_rng(spec_seed: int, run_seed: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((spec_seed, run_seed, 5550001)))
    )


_ADVERSARIAL_CENTERS = 0.9


def _adversarial_pairs(T: int, variant: int):
    """Five deterministic center schedules on [-0.9, 0.9]."""
    c = _ADVERSARIAL_CENTERS
    if variant == 0:  # single switch at T/2
        for t in range(T):
            yield (c, -c) if t < T // 2 else (-c, c)
    elif variant == 1:  # alternate every round
        for t in range(T):
            yield (c, -c) if t % 2 == 0 else (-c, c)
    elif variant == 2:  # three phases
        for t in range(T):
            if t < T // 3:
                yield (c / 2, c / 2)
            elif t < 2 * T // 3:
                yield (-c, c)
            else:
                yield (c, -c)
    elif variant == 3:  # slow sinusoidal drift
        for t in range(T):
            ang = 2.0 * np.pi * t / max(T, 1)
            yield (c * np.cos(ang), c * np.sin(ang))
    else:  # sign-flip against the running mean of past p's
        mean_p = 0.0
        for t in range(T):
            p = -c if mean_p > 0 else c
            yield (p, -p)
            mean_p += (p - mean_p) / (t + 1)


def _quadratic_suite_G(H: float, hw: float) -> float:
    return max(
        make_quadratic_bilinear(1.0, H, sp * hw, sq * hw, hw, hw).lipschitz_G
        for sp in (-1.0, 1.0)
        for sq in (-1.0, 1.0)
    )


def generate_scenario(spec: ScenarioSpec) -> Scenario:
    gid, T = spec.generator_id, spec.T
    if T < 1:
        raise ValueError("horizon must be at least 1")
    p = spec.params

    if gid in ("theorem6_scenario1", "theorem6_scenario2"):
        if T % 2 != 0:
            raise ValueError("theorem6 scenarios need T divisible by 2")
        second = np.zeros((2, 2)) if gid.endswith("1") else INDIFFERENT_ROWS

        def matrices(_run_seed):
            for t in range(T):
                yield MATCHING_PENNIES if t < T // 2 else second

        meta = {"G": 1.0, "G_l2": 2.0 * np.sqrt(2.0), "H": 0.0, "d1": 2, "d2": 2}
        return _OMGScenario(spec, 2, 2, meta, matrices)

    if gid in ("sec8_instance1", "sec8_instance2"):
        switch = T // 3
        post = (-1.0, -2.0) if gid.endswith("1") else (-1.0, 3.0)

        def payoffs(_run_seed):
            for t in range(T):
                pp, qq = (2.0, -1.0) if t < switch else post
                yield make_quadratic_bilinear(1.0, 1.0, pp, qq, 10.0, 10.0)

        X = Box(np.array([-10.0]), np.array([10.0]))
        Y = Box(np.array([-10.0]), np.array([10.0]))
        G = make_quadratic_bilinear(1.0, 1.0, 2.0, -1.0, 10.0, 10.0).lipschitz_G
        meta = {"G": G, "H": 1.0, "switch_round": switch}
        return _OSPScenario(spec, X, Y, meta, payoffs)

    if gid == "iid_quadratic":
        H = float(p.get("H", 1.0))
        hw = float(p.get("halfwidth", 1.0))

        def payoffs(run_seed):
            rng = _stream_rng(spec.seed, run_seed)
            for _ in range(T):
                pp = rng.uniform(-hw, hw)
                qq = rng.uniform(-hw, hw)
                yield make_quadratic_bilinear(1.0, H, pp, qq, hw, hw)

        X = Box(np.array([-hw]), np.array([hw]))
        Y = Box(np.array([-hw]), np.array([hw]))
        meta = {"G": _quadratic_suite_G(H, hw), "H": H}
        return _OSPScenario(spec, X, Y, meta, payoffs)

    if gid == "adversarial_quadratic":
        H = float(p.get("H", 1.0))
        hw = float(p.get("halfwidth", 1.0))
        variant = spec.seed % 5

        def payoffs(_run_seed):
            for pp, qq in _adversarial_pairs(T, variant):
                yield make_quadratic_bilinear(1.0, H, pp, qq, hw, hw)

        X = Box(np.array([-hw]), np.array([hw]))
        Y = Box(np.array([-hw]), np.array([hw]))
        meta = {"G": _quadratic_suite_G(H, hw), "H": H, "variant": variant}
        return _OSPScenario(spec, X, Y, meta, payoffs)

    if gid == "random_bilinear":
        d1 = int(p.get("d1", 2))
        d2 = int(p.get("d2", 2))

        def matrices(run_seed):
            rng = _stream_rng(spec.seed, run_seed)
            for _ in range(T):
                yield rng.integers(0, 2, size=(d1, d2)).astype(float) * 2.0 - 1.0

        meta = {
            "G": 1.0,
            "G_l2": float(np.sqrt(d1) + np.sqrt(d2)),
            "H": 0.0,
            "d1": d1,
            "d2": d2,
        }
        return _OMGScenario(spec, d1, d2, meta, matrices)

    if gid == "ocowk_sec8":
        budgets = tuple(p.get("budgets_per_round", (200.0, 4.0)))
        instance = sec82_instance(T, budgets)
        meta = {
            "G": instance.lipschitz_G(),
            "m": instance.m,
            "y_max": tuple(float(v) for v in instance.y_max),
            "budgets_per_round": budgets,
        }
        return _OCOwKScenario(spec, instance, meta)

    raise ValueError(f"unknown generator {gid!r}")


# ---------------------------------------------------------------------------
# Algorithm construction and default parameters
# ---------------------------------------------------------------------------


class IncompatiblePairingError(ValueError):
    pass


ALGORITHM_IDS = (
    "spftl",
    "sprftl",
    "ogda",
    "omg_rftl",
    "bandit_omg_rftl",
    "pd_rftl",
    "spftl_knapsack",
    "ogda_knapsack",
)

_ALLOWED = {
    "osp": {"spftl", "sprftl", "ogda"},
    "omg": {"omg_rftl", "spftl", "sprftl", "ogda", "bandit_omg_rftl"},
    "ocowk": {"pd_rftl", "spftl_knapsack", "ogda_knapsack"},
}


@dataclass
class AlgorithmSpec:
    name: str
    params: dict = field(default_factory=dict)


def _radius_bound(dset: FeasibleSet) -> float:
    if isinstance(dset, Box):
        return float(np.linalg.norm(np.maximum(np.abs(dset.lower), np.abs(dset.upper))))
    if isinstance(dset, IntervalProduct):
        return float(np.linalg.norm(dset.upper))
    return 1.0  # simplex family


def resolve_parameters(scenario: Scenario, algo: AlgorithmSpec) -> dict:
    """Fill in every theorem-default parameter; each entry carries the value
    and a formula tag (or 'override') for the output metadata."""
    name = algo.name
    if name not in ALGORITHM_IDS:
        raise ValueError(f"unknown algorithm {name!r}")
    if name == "bandit_omg_rftl":
        if scenario.kind != "omg":
            raise IncompatiblePairingError("bandit runs need a matrix-game scenario")
    elif name not in _ALLOWED.get(scenario.kind, set()):
        raise IncompatiblePairingError(
            f"algorithm {name!r} cannot run on scenario kind {scenario.kind!r}"
        )
    p = dict(algo.params)
    T = scenario.spec.T
    meta = scenario.metadata
    out: dict[str, tuple[float | str, str]] = {}

    def put(key, default, tag):
        if key in p:
            out[key] = (p[key], "override")
        else:
            out[key] = (default, tag)

    put("tol_gap", 1e-6, "default per-round duality-gap tolerance")
    put("max_iters", 50_000, "default per-round iteration budget")
    put("hindsight_tol", min(1e-6, float(out["tol_gap"][0])), "default hindsight tolerance")

    if name == "sprftl":
        D = max(_radius_bound(scenario.X), _radius_bound(scenario.Y))
        G = meta.get("G_l2", meta.get("G", 1.0))
        put("eta", corollary1_eta(D, G, T), "D*sqrt(T)/(G*sqrt(ln(T)))")
        put("radius_x", _radius_bound(scenario.X), "norm bound of X")
        put("radius_y", _radius_bound(scenario.Y), "norm bound of Y")
    elif name == "ogda":
        if scenario.kind == "osp" and meta.get("H", 0.0) > 0:
            put("schedule", "diminishing", "1/(H*t) for strongly convex-concave payoffs")
            put("step_constant", 1.0 / meta["H"], "1/H")
        else:
            put("schedule", "constant", "constant step on bilinear scenarios")
            put("step_constant", 0.5, "default bilinear step")
    elif name == "omg_rftl":
        G = meta.get("G", 1.0)
        defaults = omg_defaults(T, G, meta["d1"], meta["d2"])
        put("eta", defaults.eta, "sqrt(T)/G")
        put(
            "theta",
            defaults.theta,
            "exp(-eta*G)" + (" [clamped]" if defaults.theta_clamped else ""),
        )
    elif name == "bandit_omg_rftl":
        defaults = bandit_defaults(T, meta["d1"], meta["d2"], 0)
        put("eta", defaults.eta, "T^(1/6)")
        put(
            "delta",
            defaults.delta,
            "T^(-1/6)" + (" [clamped]" if defaults.delta_clamped else ""),
        )
    elif name in ("pd_rftl", "ogda_knapsack"):
        steps = theorem8_steps(scenario.instance)
        put("eta1", steps.eta1, "D_X/(G*(1+||y_max||_2)*sqrt(T))")
        put("eta2", steps.eta2, "||y_max||_2/((||b||_2/T+sqrt(m*G*D_X))*sqrt(T))")
    elif name == "spftl_knapsack":
        put("H", float(T ** (-1.0 / 6.0)), "T^(-1/6)")

    if scenario.kind == "ocowk":
        out["r_star"] = (
            benchmark_r_star(scenario.instance),
            "max T*E[r] s.t. T*E[c] <= b",
        )
    return out


def _solver_config(resolved) -> SolverConfig:
    return SolverConfig(
        tol_gap=float(resolved["tol_gap"][0]),
        max_iters=int(resolved["max_iters"][0]),
    )


def _build_algorithm(scenario: Scenario, name: str, resolved: dict, run_seed: int):
    solver = _solver_config(resolved)
    if name == "spftl":
        strict = scenario.kind == "osp"
        return SPFTL(
            scenario.X,
            scenario.Y,
            SPFTLConfig(solver=solver, require_strong_convexity=strict),
        )
    if name == "sprftl":
        return SPRFTL(
            scenario.X,
            scenario.Y,
            SPRFTLConfig(
                eta=float(resolved["eta"][0]),
                reg_x=SquaredNormRegularizer(float(resolved["radius_x"][0])),
                reg_y=SquaredNormRegularizer(float(resolved["radius_y"][0])),
                solver=solver,
            ),
        )
    if name == "ogda":
        return OGDA(
            scenario.X,
            scenario.Y,
            OGDAConfig(
                schedule=str(resolved["schedule"][0]),
                constant=float(resolved["step_constant"][0]),
            ),
        )
    if name == "omg_rftl":
        meta = scenario.metadata
        return OMGRFTL(
            meta["d1"],
            meta["d2"],
            OMGConfig(
                eta=float(resolved["eta"][0]),
                theta=float(resolved["theta"][0]),
                solver=solver,
            ),
        )
    if name == "bandit_omg_rftl":
        meta = scenario.metadata
        return BanditOMGRFTL(
            meta["d1"],
            meta["d2"],
            BanditConfig(
                eta=float(resolved["eta"][0]),
                delta=float(resolved["delta"][0]),
                rng_seed=run_seed,
                solver=solver,
            ),
        )
    inst = scenario.instance
    if name == "pd_rftl":
        return PDRFTL(
            inst.X,
            inst.dual_set(),
            PDRFTLConfig(float(resolved["eta1"][0]), float(resolved["eta2"][0])),
        )
    if name == "ogda_knapsack":
        return OGDAKnapsack(
            inst.X,
            inst.dual_set(),
            float(resolved["eta1"][0]),
            float(resolved["eta2"][0]),
        )
    if name == "spftl_knapsack":
        return SPFTLKnapsackAgent(inst, H=float(resolved["H"][0]), solver=solver)
    raise ValueError(name)


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    seed: int
    trace: RoundTrace
    report: RegretReport
    wall_ms: float
    budget_exceeded_rounds: int


def _hindsight_cfg(resolved, warm) -> SolverConfig:
    return SolverConfig(
        tol_gap=float(resolved["hindsight_tol"][0]),
        max_iters=max(int(resolved["max_iters"][0]) * 4, 200_000),
        warm_start=warm,
    )


def _series_store(emit: bool):
    return {
        "t": [],
        "cum_payoff": [],
        "cum_sp_regret": [],
        "cum_ind_x": [],
        "cum_ind_y": [],
    } if emit else None


def _run_osp_like(scenario: Scenario, name: str, resolved: dict, seed: int, emit_series: bool) -> RunResult:
    start = time.perf_counter()
    algo = _build_algorithm(scenario, name, resolved, seed)
    X, Y = scenario.X, scenario.Y
    msum = SumPayoff()
    acc_x = RestrictionAccumulator()
    acc_y = RestrictionAccumulator()
    xs, ys, vals, gaps = [], [], [], []
    series = _series_store(emit_series)
    hind_track = None
    for payoff in scenario.payoffs(seed):
        x, y = algo.current_action
        v = payoff.value(x, y)
        xs.append(x)
        ys.append(y)
        vals.append(v)
        msum.add(payoff)
        acc_x.add(_restrict_or_closure(payoff, "x", y))
        acc_y.add(_restrict_or_closure(payoff, "y", x))
        algo.step(payoff)
        gaps.append(getattr(algo, "last_gap", 0.0))
        if series is not None:
            cfg = SolverConfig(
                tol_gap=float(resolved["tol_gap"][0]),
                max_iters=int(resolved["max_iters"][0]),
                warm_start=hind_track,
            )
            sol = solve_saddle(msum, X, Y, cfg)
            hind_track = (sol.x_star, sol.y_star)
            cum = float(np.sum(vals))
            series["t"].append(len(vals))
            series["cum_payoff"].append(cum)
            series["cum_sp_regret"].append(abs(cum - sol.value))
            series["cum_ind_x"].append(cum - acc_x.minimize(X))
            series["cum_ind_y"].append(acc_y.maximize(Y) - cum)
    warm = algo.current_action
    hv = solve_saddle(msum, X, Y, _hindsight_cfg(resolved, warm)).value
    realized = float(np.sum(vals))
    report = RegretReport(
        sp_regret=abs(realized - hv),
        ind_regret_x=realized - acc_x.minimize(X),
        ind_regret_y=acc_y.maximize(Y) - realized,
        hindsight_value=hv,
        per_round_series={k: np.asarray(v) for k, v in series.items()} if series else None,
    )
    trace = RoundTrace(
        xs=np.asarray(xs),
        ys=np.asarray(ys),
        payoff_values=np.asarray(vals),
        solver_gaps=np.asarray(gaps),
        final_x=warm[0].copy(),
        final_y=warm[1].copy(),
    )
    wall = (time.perf_counter() - start) * 1e3
    return RunResult(seed, trace, report, wall, getattr(algo, "budget_exceeded_rounds", 0))


def _run_bandit(scenario: Scenario, resolved: dict, seed: int, emit_series: bool) -> RunResult:
    start = time.perf_counter()
    algo = _build_algorithm(scenario, "bandit_omg_rftl", resolved, seed)
    d1 = scenario.metadata["d1"]
    d2 = scenario.metadata["d2"]
    X_full, Y_full = Simplex(d1), Simplex(d2)
    msum = SumPayoff()
    acc_x = RestrictionAccumulator()
    acc_y = RestrictionAccumulator()
    xs, ys, vals, gaps, iis, jjs, obs = [], [], [], [], [], [], []
    series = _series_store(emit_series)
    for A in scenario.matrices(seed):
        x_t, y_t = algo.current_action
        i, j, est = algo.step(lambda ii, jj: A[ii, jj])
        xs.append(x_t)
        ys.append(y_t)
        iis.append(i)
        jjs.append(j)
        obs.append(est.observed_entry)
        vals.append(float(A[i, j]))
        gaps.append(algo.last_gap)
        msum.add(BilinearPayoff(A))
        acc_x.add(SeparableQuadratic(np.zeros(d1), A[:, j].copy(), 0.0))
        acc_y.add(SeparableQuadratic(np.zeros(d2), A[i, :].copy(), 0.0))
        if series is not None:
            cum = float(np.sum(vals))
            sol = solve_saddle(msum, X_full, Y_full, _solver_config(resolved))
            series["t"].append(len(vals))
            series["cum_payoff"].append(cum)
            series["cum_sp_regret"].append(abs(cum - sol.value))
            series["cum_ind_x"].append(cum - acc_x.minimize(X_full))
            series["cum_ind_y"].append(acc_y.maximize(Y_full) - cum)
    hv = solve_saddle(msum, X_full, Y_full, _hindsight_cfg(resolved, None)).value
    realized = float(np.sum(vals))
    report = RegretReport(
        sp_regret=abs(realized - hv),
        ind_regret_x=realized - acc_x.minimize(X_full),
        ind_regret_y=acc_y.maximize(Y_full) - realized,
        hindsight_value=hv,
        per_round_series={k: np.asarray(v) for k, v in series.items()} if series else None,
        extras={"delta": float(resolved["delta"][0])},
    )
    trace = RoundTrace(
        xs=np.asarray(xs),
        ys=np.asarray(ys),
        payoff_values=np.asarray(vals),
        solver_gaps=np.asarray(gaps),
        sampled_i=np.asarray(iis),
        sampled_j=np.asarray(jjs),
        observed_entries=np.asarray(obs),
    )
    wall = (time.perf_counter() - start) * 1e3
    return RunResult(seed, trace, report, wall, algo.budget_exceeded_rounds)


def _run_ocowk(scenario: Scenario, name: str, resolved: dict, seed: int, emit_series: bool) -> RunResult:
    start = time.perf_counter()
    inst = scenario.instance
    env = KnapsackEnvironment(inst, seed)
    algo = _build_algorithm(scenario, name, resolved, seed)
    X, Y = inst.X, inst.dual_set()
    raw_sum = KnapsackAggregate(inst.m, inst.b / inst.T, H=0.0)
    acc_x = RestrictionAccumulator()
    acc_y = RestrictionAccumulator()
    xs, ys, vals, gaps = [], [], [], []
    rewards, collected, cons, violated = [], [], [], []
    series = _series_store(emit_series)
    if series is not None:
        series["cum_reward"] = []
        series["violated"] = []
        for i in range(inst.m):
            series[f"budget_frac_{i + 1}"] = []
    for _ in range(inst.T):
        x_t, y_t = algo.current_action
        outcome = env.step(x_t)
        payoff = inst.lagrangian(outcome.reward_fn, outcome.consumption_fns)
        v = payoff.value(x_t, y_t)
        xs.append(x_t)
        ys.append(y_t)
        vals.append(v)
        rewards.append(outcome.reward_value)
        collected.append(outcome.reward_collected)
        cons.append(outcome.consumption)
        violated.append(env.state.violated)
        raw_sum.add(outcome.reward_fn, outcome.consumption_fns)
        acc_x.add(payoff.restrict_x(y_t))
        acc_y.add(payoff.restrict_y(x_t))
        if name == "spftl_knapsack":
            algo.step(outcome.reward_fn, outcome.consumption_fns)
        else:
            algo.step(payoff)
        gaps.append(getattr(algo, "last_gap", 0.0))
        if series is not None:
            cum = float(np.sum(vals))
            series["t"].append(len(vals))
            series["cum_payoff"].append(cum)
            sol = solve_saddle(raw_sum, X, Y, _solver_config(resolved))
            series["cum_sp_regret"].append(abs(cum - sol.value))
            series["cum_ind_x"].append(cum - acc_x.minimize(X))
            series["cum_ind_y"].append(acc_y.maximize(Y) - cum)
            series["cum_reward"].append(env.state.cumulative_reward)
            series["violated"].append(float(env.state.violated))
            used = env.state.cumulative_consumption
            for i in range(inst.m):
                series[f"budget_frac_{i + 1}"].append(float(used[i] / inst.b[i]))
    realized = float(np.sum(vals))
    hv = solve_saddle(raw_sum, X, Y, _hindsight_cfg(resolved, algo.current_action)).value
    r_star = float(resolved["r_star"][0])
    dagger = acc_y.maximize(Y) - realized
    ddagger = realized + r_star  # realized Lagrangian sum minus (-r*)
    total_reward = env.state.cumulative_reward
    report = RegretReport(
        sp_regret=abs(realized - hv),
        ind_regret_x=realized - acc_x.minimize(X),
        ind_regret_y=dagger,
        hindsight_value=hv,
        per_round_series={k: np.asarray(v) for k, v in series.items()} if series else None,
        extras={
            "r_star": r_star,
            "cumulative_reward": total_reward,
            "knapsack_regret": r_star - total_reward,
            "reward_ratio": total_reward / r_star if r_star != 0 else np.nan,
            "dagger": dagger,
            "ddagger": ddagger,
            "violated": bool(env.state.violated),
            "reward_lower_bound": reward_lower_bound(
                np.asarray(rewards), np.asarray(cons), inst
            ),
        },
    )
    trace = RoundTrace(
        xs=np.asarray(xs),
        ys=np.asarray(ys),
        payoff_values=np.asarray(vals),
        solver_gaps=np.asarray(gaps),
        rewards_collected=np.asarray(collected),
        reward_values=np.asarray(rewards),
        consumptions=np.asarray(cons),
        violated_flags=np.asarray(violated),
    )
    wall = (time.perf_counter() - start) * 1e3
    return RunResult(seed, trace, report, wall, getattr(algo, "budget_exceeded_rounds", 0))


def run_single(
    spec: ScenarioSpec,
    algo: AlgorithmSpec,
    seed: int,
    emit_series: bool = False,
    resolved: dict | None = None,
) -> RunResult:
    scenario = generate_scenario(spec)
    if resolved is None:
        resolved = resolve_parameters(scenario, algo)
    if scenario.kind == "ocowk":
        return _run_ocowk(scenario, algo.name, resolved, seed, emit_series)
    if algo.name == "bandit_omg_rftl":
        return _run_bandit(scenario, resolved, seed, emit_series)
    return _run_osp_like(scenario, algo.name, resolved, seed, emit_series)


# ---------------------------------------------------------------------------
# Experiment fan-out
# ---------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    spec: ScenarioSpec
    algorithm: AlgorithmSpec
    resolved: dict
    runs: list
    summary: dict


def _worker(args):
    spec, algo, seed, emit_series, resolved = args
    return run_single(spec, algo, seed, emit_series, resolved)


def default_workers() -> int:
    env = os.environ.get("OSP_LAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _mean_stderr(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / np.sqrt(arr.size))


def run_experiment(
    spec: ScenarioSpec,
    algo: AlgorithmSpec,
    seeds,
    emit_series: bool = False,
    workers: int | None = None,
) -> ExperimentResult:
    """One independent run per seed; aggregation is a deterministic fold in
    seed order regardless of worker scheduling."""
    seeds = list(seeds)
    scenario = generate_scenario(spec)
    resolved = resolve_parameters(scenario, algo)
    workers = default_workers() if workers is None else max(1, workers)
    if workers > 1 and len(seeds) > 1:
        import concurrent.futures as cf

        jobs = [(spec, algo, s, emit_series, resolved) for s in seeds]
        with cf.ProcessPoolExecutor(max_workers=min(workers, len(seeds))) as pool:
            runs = list(pool.map(_worker, jobs))
    else:
        runs = [run_single(spec, algo, s, emit_series, resolved) for s in seeds]

    sp_mean, sp_se = _mean_stderr([r.report.sp_regret for r in runs])
    ix_mean, _ = _mean_stderr([r.report.ind_regret_x for r in runs])
    iy_mean, _ = _mean_stderr([r.report.ind_regret_y for r in runs])
    hv_mean, _ = _mean_stderr([r.report.hindsight_value for r in runs])
    summary = {
        "scenario": spec.generator_id,
        "algorithm": algo.name,
        "T": spec.T,
        "seed_count": len(seeds),
        "sp_regret_mean": sp_mean,
        "sp_regret_stderr": sp_se,
        "ind_x_mean": ix_mean,
        "ind_y_mean": iy_mean,
        "hindsight_value": hv_mean,
        "wall_ms": float(sum(r.wall_ms for r in runs)),
    }
    if scenario.kind == "ocowk":
        kr_mean, kr_se = _mean_stderr([r.report.extras["knapsack_regret"] for r in runs])
        rr_mean, _ = _mean_stderr([r.report.extras["reward_ratio"] for r in runs])
        summary.update(
            {
                "knap_regret_mean": kr_mean,
                "knap_regret_stderr": kr_se,
                "reward_ratio_mean": rr_mean,
                "r_star": float(resolved["r_star"][0]),
            }
        )
    return ExperimentResult(spec, algo, resolved, runs, summary)
