"""Independent brute-force oracles.

Everything in this module avoids the production solver paths on purpose:
grid searches, closed-form enumeration, and plain Monte-Carlo averages used
to cross-check solver outputs and frozen test expectations.
"""

from __future__ import annotations

import numpy as np


def _scalar_value_grid(payoff, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized payoff values on a grid; exact for the scalar quadratic
    family, elementwise loop otherwise (keep grids modest in that case)."""
    coeffs = getattr(payoff, "scalar_coefficients", None)
    if coeffs is None and hasattr(payoff, "cxy"):
        coeffs = np.array(
            [payoff.cxy, payoff.cx2, payoff.cx1, payoff.cy2, payoff.cy1, payoff.c0]
        )
    Xg = xs[:, None]
    Yg = ys[None, :]
    if coeffs is not None:
        cxy, cx2, cx1, cy2, cy1, c0 = coeffs
        V = cxy * Xg * Yg + cx2 * Xg**2 + cx1 * Xg + cy2 * Yg**2 + cy1 * Yg + c0
        if hasattr(payoff, "reg_weight"):
            V = V + payoff.reg_weight("x", "sqnorm") * Xg**2
            V = V - payoff.reg_weight("y", "sqnorm") * Yg**2
        return V
    if xs.size * ys.size > 500_000:
        raise ValueError("grid too large for a non-vectorizable payoff")
    V = np.empty((xs.size, ys.size))
    for i, xv in enumerate(xs):
        for j, yv in enumerate(ys):
            V[i, j] = payoff.value(np.array([xv]), np.array([yv]))
    return V


def grid_saddle_1d(
    payoff,
    x_bounds: tuple[float, float],
    y_bounds: tuple[float, float],
    resolutions: tuple[float, ...] = (1e-2, 1e-4, 1e-6),
) -> tuple[float, float, float]:
    """Three-phase grid refinement of min_x max_y on 1-D boxes.

    Phase k restricts to a window of +-3 previous-resolution cells around
    the incumbent; valid because the envelope max_y is convex in x and the
    inner problem concave in y.  Returns (value, x*, y*).
    """
    xlo, xhi = x_bounds
    ylo, yhi = y_bounds
    x_star = y_star = value = None
    for k, res in enumerate(resolutions):
        if k == 0:
            xw = (xlo, xhi)
            yw = (ylo, yhi)
        else:
            pad = 3.0 * resolutions[k - 1]
            xw = (max(xlo, x_star - pad), min(xhi, x_star + pad))
            yw = (max(ylo, y_star - pad), min(yhi, y_star + pad))
        xs = np.arange(xw[0], xw[1] + res / 2, res)
        ys = np.arange(yw[0], yw[1] + res / 2, res)
        V = _scalar_value_grid(payoff, xs, ys)
        inner_max = V.max(axis=1)
        ix = int(np.argmin(inner_max))
        iy = int(np.argmax(V[ix]))
        x_star, y_star, value = float(xs[ix]), float(ys[iy]), float(inner_max[ix])
    return value, x_star, y_star


def grid_matrix_game_2x2(A: np.ndarray, resolution: float = 1e-3):
    """Brute-force min over alpha of max over beta for x=[a,1-a], y=[b,1-b]."""
    A = np.asarray(A, dtype=float)
    grid = np.arange(0.0, 1.0 + resolution / 2, resolution)
    a = grid[:, None]
    b = grid[None, :]
    V = (
        a * b * (A[0, 0] - A[0, 1] - A[1, 0] + A[1, 1])
        + a * (A[0, 1] - A[1, 1])
        + b * (A[1, 0] - A[1, 1])
        + A[1, 1]
    )
    inner = V.max(axis=1)
    ia = int(np.argmin(inner))
    return float(inner[ia]), float(grid[ia])


def grid_entropic_game_2x2(
    A: np.ndarray,
    weight_x: float,
    weight_y: float,
    theta: float,
    resolution: float = 1e-3,
):
    """min-max of x^T A y + weight_x*R(x) - weight_y*R(y) over the floored
    2-simplexes, brute forced on the (alpha, beta) parameterization.

    R is the shifted negative entropy z1 ln z1 + z2 ln z2 + ln 2.
    Returns (value, alpha*, beta*)."""
    A = np.asarray(A, dtype=float)
    grid = np.arange(theta, 1.0 - theta + resolution / 2, resolution)

    def R(p):
        q = 1.0 - p
        return p * np.log(p) + q * np.log(q) + np.log(2.0)

    a = grid[:, None]
    b = grid[None, :]
    V = (
        a * b * (A[0, 0] - A[0, 1] - A[1, 0] + A[1, 1])
        + a * (A[0, 1] - A[1, 1])
        + b * (A[1, 0] - A[1, 1])
        + A[1, 1]
        + weight_x * R(a)
        - weight_y * R(b)
    )
    inner = V.max(axis=1)
    ia = int(np.argmin(inner))
    ib = int(np.argmax(V[ia]))
    return float(inner[ia]), float(grid[ia]), float(grid[ib])


def grid_simplex_projection_3d(
    z: np.ndarray, coarse: float = 1e-2, fine: float = 1e-4
) -> np.ndarray:
    """Two-phase grid search for the Euclidean projection onto the 3-simplex."""
    z = np.asarray(z, dtype=float)

    def best_on(p1s, p2s):
        P1, P2 = np.meshgrid(p1s, p2s, indexing="ij")
        P3 = 1.0 - P1 - P2
        ok = P3 >= -1e-12
        d2 = (P1 - z[0]) ** 2 + (P2 - z[1]) ** 2 + (P3 - z[2]) ** 2
        d2 = np.where(ok, d2, np.inf)
        i, j = np.unravel_index(int(np.argmin(d2)), d2.shape)
        return np.array([P1[i, j], P2[i, j], P3[i, j]])

    g = np.arange(0.0, 1.0 + coarse / 2, coarse)
    p = best_on(g, g)
    lo1, hi1 = max(0.0, p[0] - 2 * coarse), min(1.0, p[0] + 2 * coarse)
    lo2, hi2 = max(0.0, p[1] - 2 * coarse), min(1.0, p[1] + 2 * coarse)
    p = best_on(
        np.arange(lo1, hi1 + fine / 2, fine), np.arange(lo2, hi2 + fine / 2, fine)
    )
    return p


def enumerate_estimator_expectation(A: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """sum_{i,j} x_i y_j Ahat(i,j) built literally through the estimator."""
    from .matrix_games import one_point_estimate

    A = np.asarray(A, dtype=float)
    d1, d2 = A.shape
    out = np.zeros((d1, d2))
    for i in range(d1):
        for j in range(d2):
            est = one_point_estimate(A[i, j], i, j, x, y)
            out += x[i] * y[j] * est.to_matrix()
    return out


def sec82_expectation_check(
    x_values=(1.0, 10.0 / 3.0, 5.0), n: int = 10**6, seed: int = 20240817
):
    """Monte-Carlo means of the sec-8.2 reward/consumption at given actions
    versus the analytic E[r](x) = -x^2+10x, E[c1](x) = 3x^2+50x, E[c2](x) = x.

    Returns a list of (label, analytic, mc_mean, sigma) rows; a row passes
    when |analytic - mc| <= 3 sigma."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    b = rng.uniform(0.0, 20.0, size=n)
    a = rng.uniform(0.0, 3.0, size=n)
    rows = []
    for xv in x_values:
        r_samples = -xv * xv + b * xv
        c1_samples = (a * xv) ** 2 + 50.0 * xv
        for label, samples, analytic in (
            (f"E[r]({xv:g})", r_samples, -xv * xv + 10.0 * xv),
            (f"E[c1]({xv:g})", c1_samples, 3.0 * xv * xv + 50.0 * xv),
            (f"E[c2]({xv:g})", np.full(n, xv), xv),
        ):
            mc = float(samples.mean())
            sigma = float(samples.std(ddof=1) / np.sqrt(n))
            rows.append((label, analytic, mc, sigma))
    return rows


def grid_knapsack_benchmark(
    e_r,
    e_c,
    b_per_round: np.ndarray,
    x_bounds: tuple[float, float],
    resolutions: tuple[float, ...] = (1e-2, 1e-4, 1e-6),
) -> tuple[float, float]:
    """Grid maximization of E[r](x) under E[c](x) <= b/T on an interval;
    returns (per-round value, x*)."""
    xlo, xhi = x_bounds
    x_star = None
    best = -np.inf
    for k, res in enumerate(resolutions):
        if k == 0:
            w = (xlo, xhi)
        else:
            pad = 3.0 * resolutions[k - 1]
            w = (max(xlo, x_star - pad), min(xhi, x_star + pad))
        xs = np.arange(w[0], w[1] + res / 2, res)
        vals = np.array([e_r(x) for x in xs])
        feas = np.ones(xs.shape, dtype=bool)
        for ci, bi in zip(e_c, b_per_round):
            feas &= np.array([ci(x) for x in xs]) <= bi + 1e-12
        vals = np.where(feas, vals, -np.inf)
        ix = int(np.argmax(vals))
        x_star, best = float(xs[ix]), float(vals[ix])
    return best, x_star


def exhaustive_entropy_grad_bound(d: int, theta: float, n: int, seed: int = 7) -> float:
    """Largest sampled sup-norm of the entropy gradient over the floored simplex."""
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for _ in range(n):
        w = rng.dirichlet(np.ones(d))
        z = theta + (1.0 - d * theta) * w
        worst = max(worst, float(np.abs(1.0 + np.log(z)).max()))
    return worst


def random_feasible_point(dset, rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish sample used by property checks; exactness is irrelevant,
    feasibility is."""
    from .geometry import Box, IntervalProduct, RestrictedSimplex, Simplex

    if isinstance(dset, Box):
        return rng.uniform(dset.lower, dset.upper)
    if isinstance(dset, IntervalProduct):
        return rng.uniform(np.zeros(dset.dimension), dset.upper)
    if isinstance(dset, RestrictedSimplex):
        w = rng.dirichlet(np.ones(dset.d))
        return dset.embed(w)
    if isinstance(dset, Simplex):
        return rng.dirichlet(np.ones(dset.d))
    raise TypeError(type(dset))


def finite_difference_grads(payoff, x, y, step: float = 1e-6):
    """Central finite differences of a payoff at (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gx = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        gx[i] = (payoff.value(x + e, y) - payoff.value(x - e, y)) / (2 * step)
    gy = np.zeros_like(y)
    for j in range(y.shape[0]):
        e = np.zeros_like(y)
        e[j] = step
        gy[j] = (payoff.value(x, y + e) - payoff.value(x, y - e)) / (2 * step)
    return gx, gy
