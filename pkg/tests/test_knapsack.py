import numpy as np
import pytest

from osp_lab.geometry import Box
from osp_lab.knapsack import (
    KnapsackEnvironment,
    KnapsackInstance,
    OGDAKnapsack,
    PDRFTL,
    PDRFTLConfig,
    QuadraticFn,
    SPFTLKnapsackAgent,
    Sec82Sampler,
    benchmark_r_star,
    knapsack_regret,
    monte_carlo_expectation,
    reward_lower_bound,
    sec82_instance,
    theorem8_steps,
)
from osp_lab.oracles import grid_knapsack_benchmark
from osp_lab.payoffs import SeparableQuadratic
from osp_lab.saddle_solver import SolverConfig


def test_lagrangian_values():
    inst = sec82_instance(100)
    r = QuadraticFn(-1.0, 10.0, 0.0)
    c = [QuadraticFn(1.0, 50.0, 0.0), QuadraticFn(0.0, 1.0, 0.0)]
    L = inst.lagrangian(r, c)
    # dual term vanishes at y = 0
    x1, y0 = np.array([1.0]), np.array([0.0, 0.0])
    assert abs(L.value(x1, y0) - (-r(1.0))) < 1e-12
    assert abs(L.value(x1, y0) - (-9.0)) < 1e-12  # a_t=1, b_t=10, x=1
    # null action: value reduces to -y . b/T
    y = np.array([0.3, 0.7])
    assert abs(L.value(np.array([0.0]), y) - (-(y @ (inst.b / inst.T)))) < 1e-12


def test_lagrangian_gradients_and_restrictions():
    inst = sec82_instance(50)
    r = QuadraticFn(-1.0, 7.0, 0.0)
    c = [QuadraticFn(4.0, 50.0, 0.0), QuadraticFn(0.0, 1.0, 0.0)]
    L = inst.lagrangian(r, c)
    x, y = np.array([2.0]), np.array([0.2, 1.5])
    gx = L.grad_x(x, y)
    assert abs(gx[0] - (-(-4.0 + 7.0) + 0.2 * (16.0 + 50.0) + 1.5 * 1.0)) < 1e-12
    gy = L.grad_y(x, y)
    assert np.allclose(gy, [16.0 + 100.0 - 200.0, 2.0 - 4.0])
    rx = L.restrict_x(y)
    assert abs(rx.value(x) - L.value(x, y)) < 1e-12
    ry = L.restrict_y(x)
    assert abs(ry.value(y) - L.value(x, y)) < 1e-12


def test_env_null_action_neutral():
    inst = sec82_instance(20)
    env = KnapsackEnvironment(inst, seed=1)
    for _ in range(20):
        out = env.step(np.array([0.0]))
        assert out.reward_collected == 0.0
        assert np.all(out.consumption == 0.0)
    assert env.state.cumulative_reward == 0.0
    assert np.all(env.state.cumulative_consumption == 0.0)
    assert not env.state.violated


def test_env_infinite_budget_reduces_to_unconstrained():
    inst = KnapsackInstance(
        X=Box(np.array([0.0]), np.array([20.0])),
        b=np.array([np.inf, np.inf]),
        T=30,
        sampler=Sec82Sampler(),
        y_max=np.array([0.0, 0.0]),
    )
    env = KnapsackEnvironment(inst, seed=2)
    total = 0.0
    for _ in range(30):
        out = env.step(np.array([3.0]))
        total += out.reward_value
        assert out.reward_collected == out.reward_value
    assert abs(env.state.cumulative_reward - total) < 1e-9
    assert not env.state.violated


def test_env_violation_example_and_monotonicity():
    # remaining budget (10, 10): consuming (104, 2) overruns resource 1
    inst = KnapsackInstance(
        X=Box(np.array([0.0]), np.array([20.0])),
        b=np.array([10.0, 10.0]),
        T=5,
        sampler=Sec82Sampler(),
        y_max=np.array([1.0, 1.0]),
    )
    env = KnapsackEnvironment(inst, seed=3)
    saw_violation = False
    for _ in range(5):
        out = env.step(np.array([2.0]))
        if env.state.violated:
            saw_violation = True
            assert out.reward_collected == 0.0
        if saw_violation:
            assert env.state.violated  # once true, stays true
    assert saw_violation
    # direct consumption check: c1(2) = (a*2)^2 + 50*2 >= 100 > 10
    assert env.state.cumulative_consumption[0] > 10.0


def test_env_rejects_infeasible_action():
    inst = sec82_instance(5)
    env = KnapsackEnvironment(inst, seed=4)
    with pytest.raises(ValueError):
        env.step(np.array([25.0]))


def test_instance_verifies_null_action():
    class ShiftedSampler(Sec82Sampler):
        def draw(self, rng):
            r, c = super().draw(rng)
            return QuadraticFn(r.a2, r.a1, 1.0), c  # r(0) = 1 != 0

    with pytest.raises(ValueError):
        KnapsackInstance(
            X=Box(np.array([0.0]), np.array([20.0])),
            b=np.array([100.0, 100.0]),
            T=10,
            sampler=ShiftedSampler(),
            y_max=np.array([1.0, 1.0]),
        )


def test_default_y_max_is_reward_per_unit_budget():
    inst = sec82_instance(1000)
    # max per-round reward 100 = max_x max_b (-x^2 + b x); budgets/round (200, 4)
    assert np.allclose(inst.y_max, [0.5, 25.0])


def test_pd_rftl_initialization_and_steps():
    inst = sec82_instance(10)
    agent = PDRFTL(inst.X, inst.dual_set(), PDRFTLConfig(0.5, 0.5))
    x1, y1 = agent.current_action
    assert x1[0] == 0.0 and np.all(y1 == 0.0)  # projections of the origin

    # zero gradients freeze the iterates
    zero = inst.lagrangian(
        QuadraticFn(0.0, 0.0, 0.0), [QuadraticFn(0.0, 0.0, 0.0)] * 2
    )
    frozen = PDRFTL(inst.X, inst.dual_set(), PDRFTLConfig(0.5, 0.5))
    frozen.grad_sum_y = frozen.grad_sum_y + inst.b / inst.T  # cancel the -b/T term
    # single hand-computed step: grad f = [1] on X = [0, 20], eta1 = 0.5
    hand = PDRFTL(Box(np.array([0.0]), np.array([20.0])), inst.dual_set(), PDRFTLConfig(0.5, 0.5))

    class OnePayoff:
        def grad_x(self, x, y):
            return np.array([1.0])

        def grad_y(self, x, y):
            return np.zeros(2)

    x2, _ = hand.step(OnePayoff())
    assert x2[0] == 0.0  # project([-0.5]) onto [0, 20]


def test_theorem8_steps_formulas():
    inst = sec82_instance(10_000)
    steps = theorem8_steps(inst)
    G, D_X, T = 410.0, 20.0, 10_000
    ym2 = float(np.linalg.norm(inst.y_max))
    assert abs(steps.eta1 - D_X / (G * (1 + ym2) * np.sqrt(T))) < 1e-15
    denom = float(np.linalg.norm(inst.b)) / T + np.sqrt(2 * G * D_X)
    assert abs(steps.eta2 - ym2 / (denom * np.sqrt(T))) < 1e-15


def test_spftl_knapsack_agent_defaults():
    inst = sec82_instance(64)
    agent = SPFTLKnapsackAgent(inst)
    assert abs(agent.H - 0.5) < 1e-12  # 64^(-1/6)
    with pytest.raises(ValueError):
        SPFTLKnapsackAgent(inst, H=0.0)
    # first action: saddle of the first regularized Lagrangian alone
    r = QuadraticFn(-1.0, 10.0, 0.0)
    c = [QuadraticFn(3.0, 50.0, 0.0), QuadraticFn(0.0, 1.0, 0.0)]
    x, y = agent.step(r, c)
    agg = agent.aggregate
    from osp_lab.saddle_solver import gap_estimate

    assert gap_estimate(agg, inst.X, inst.dual_set(), x, y) <= 1e-6


def test_benchmark_r_star_examples():
    inst = sec82_instance(200)
    e_r, e_c = inst.sampler.expectation()
    # analytic expectations
    assert (e_r.a2, e_r.a1) == (-1.0, 10.0)
    assert (e_c[0].a2, e_c[0].a1) == (3.0, 50.0)
    assert (e_c[1].a2, e_c[1].a1) == (0.0, 1.0)
    # unconstrained optimum of E[r]: x = 5, value 25 per round
    unconstrained = KnapsackInstance(
        X=inst.X, b=np.array([1e9, 1e9]), T=200, sampler=inst.sampler,
        y_max=np.array([1.0, 1.0]),
    )
    r_unc = benchmark_r_star(unconstrained)
    assert abs(r_unc - 25.0 * 200) < 1e-5
    # binding first constraint: x* = 10/3, r* = 200T/9
    r_star = benchmark_r_star(inst)
    assert abs(r_star - 200.0 * 200 / 9.0) / (200.0 * 200 / 9.0) < 1e-9
    per_round, x_star = grid_knapsack_benchmark(e_r, e_c, inst.b / inst.T, (0.0, 20.0))
    assert abs(r_star - 200 * per_round) / abs(200 * per_round) < 1e-5
    assert abs(x_star - 10.0 / 3.0) < 1e-5


def test_monte_carlo_expectation_close_to_analytic():
    e_r, e_c = monte_carlo_expectation(Sec82Sampler(), n=200_000, seed=5)
    assert abs(e_r.a1 - 10.0) < 0.05
    assert abs(e_c[0].a2 - 3.0) < 0.05


def test_knapsack_regret_definitional():
    inst = sec82_instance(50)
    r_star = benchmark_r_star(inst)
    env = KnapsackEnvironment(inst, seed=9)
    for _ in range(50):
        env.step(np.array([0.0]))  # always the null action
    assert abs(knapsack_regret(env.state, r_star) - r_star) < 1e-12


def test_reward_lower_bound_holds_on_traces():
    inst = sec82_instance(120)
    for seed in range(4):
        env = KnapsackEnvironment(inst, seed=seed)
        rng = np.random.default_rng(seed)
        rewards, cons = [], []
        for _ in range(120):
            x = np.array([rng.uniform(0.0, 6.0)])
            out = env.step(x)
            rewards.append(out.reward_value)
            cons.append(out.consumption)
        lb = reward_lower_bound(np.asarray(rewards), np.asarray(cons), inst)
        assert env.state.cumulative_reward >= lb - 1e-9


def test_rftl_component_regret_bound():
    # each embedded no-regret update obeys 2*eta*G^2*T + D^2/eta
    inst = sec82_instance(300)
    steps = theorem8_steps(inst)
    env = KnapsackEnvironment(inst, seed=11)
    agent = PDRFTL(inst.X, inst.dual_set(), steps)
    fs, gs, xs, ys = [], [], [], []
    for _ in range(300):
        x_t, y_t = agent.current_action
        out = env.step(x_t)
        L = inst.lagrangian(out.reward_fn, out.consumption_fns)
        xs.append(x_t)
        ys.append(y_t)
        fs.append(L.restrict_x(y_t))
        gs.append(L.restrict_y(x_t))
        agent.step(L)
    # realized linearized losses vs best fixed points
    f_acc = SeparableQuadratic(np.zeros(1), np.zeros(1), 0.0)
    g_acc = SeparableQuadratic(np.zeros(2), np.zeros(2), 0.0)
    f_realized = 0.0
    g_realized = 0.0
    for x_t, y_t, fr, gr in zip(xs, ys, fs, gs):
        f_realized += fr.value(x_t)
        g_realized += gr.value(y_t)
        f_acc = SeparableQuadratic(f_acc.quad + fr.quad, f_acc.lin + fr.lin, f_acc.const + fr.const)
        g_acc = SeparableQuadratic(g_acc.quad + gr.quad, g_acc.lin + gr.lin, g_acc.const + gr.const)
    T = 300
    G = inst.lipschitz_G()
    G_f = G * (1.0 + float(np.abs(inst.y_max).sum()))
    G_g = float(np.linalg.norm(inst.b)) / inst.T + np.sqrt(inst.m * G * inst.X.diameter())
    bound_f = 2 * steps.eta1 * G_f**2 * T + inst.X.diameter() ** 2 / steps.eta1
    bound_g = 2 * steps.eta2 * G_g**2 * T + inst.dual_set().diameter() ** 2 / steps.eta2
    assert f_realized - f_acc.minimize_over(inst.X)[0] <= bound_f
    assert g_acc.maximize_over(inst.dual_set())[0] - g_realized <= bound_g
