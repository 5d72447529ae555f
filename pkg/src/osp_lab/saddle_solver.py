"""Approximate and exact saddle-point solvers.

The per-round subproblems of follow-the-leader style algorithms are
min-max problems over products of compact convex sets.  The default method
is extragradient with a fixed step 1/(2*L), where L is a deterministic
power-iteration estimate of the gradient-map Lipschitz constant; sums that
are bilinear-plus-entropy over simplexes instead run mirror-prox with exact
KL prox steps (closed-form water-filling handles both the entropy payoff
term and the coordinate floor).  Strongly convex-concave sums return the
last iterate, merely convex-concave sums the ergodic average.

Every returned solution carries a certified duality gap obtained from two
one-sided inner optimizations, which are exact for the structured payoff
families and projected-gradient otherwise.  Three closed forms bypass the
iterative path entirely: 2x2 matrix games, interior scalar quadratics, and
already-converged warm starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import FeasibleSet, RestrictedSimplex, Simplex
from .payoffs import (
    GenericOneVar,
    PayoffFunction,
    SumPayoff,
)


class NonFiniteGradientError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    tol_gap: float = 1e-8
    max_iters: int = 100_000
    step_rule: str = "extragradient_fixed"  # or "gda_diminishing"
    warm_start: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.tol_gap <= 0:
            raise ValueError("tol_gap must be positive")
        if self.max_iters <= 0:
            raise ValueError("max_iters must be positive")
        if self.step_rule not in ("extragradient_fixed", "gda_diminishing"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")


@dataclass
class SaddleSolution:
    x_star: np.ndarray
    y_star: np.ndarray
    value: float
    gap: float
    iterations: int

    def budget_exhausted(self, cfg: SolverConfig) -> bool:
        return self.iterations >= cfg.max_iters and self.gap > cfg.tol_gap


def _as_sum(f: PayoffFunction) -> SumPayoff:
    if isinstance(f, SumPayoff):
        return f
    s = SumPayoff()
    s.add(f)
    return s


def assemble_sum(history) -> SumPayoff:
    s = SumPayoff()
    for p in history:
        s.add(p)
    return s


# ---------------------------------------------------------------------------
# Duality gap certification
# ---------------------------------------------------------------------------


def gap_estimate(
    f: PayoffFunction,
    X: FeasibleSet,
    Y: FeasibleSet,
    x: np.ndarray,
    y: np.ndarray,
    inner_cfg: SolverConfig | None = None,
) -> float:
    """max_{y' in Y} f(x, y') - min_{x' in X} f(x', y), clamped at zero.

    Each side is a single-variable convex problem; structured payoffs yield
    exact closed forms, the rest run projected gradient.
    """
    if not X.contains(x, 1e-9) or not Y.contains(y, 1e-9):
        raise ValueError("gap_estimate requires a feasible (x, y)")
    ry = f.restrict_y(x)
    if ry is None:
        xs = np.array(x, dtype=float)
        ry = GenericOneVar(lambda yy: f.value(xs, yy), lambda yy: f.grad_y(xs, yy))
    upper, _ = ry.maximize_over(Y)
    rx = f.restrict_x(y)
    if rx is None:
        ys = np.array(y, dtype=float)
        rx = GenericOneVar(lambda xx: f.value(xx, ys), lambda xx: f.grad_x(xx, ys))
    lower, _ = rx.minimize_over(X)
    return max(float(upper - lower), 0.0)


# ---------------------------------------------------------------------------
# Exact 2x2 matrix games
# ---------------------------------------------------------------------------


def solve_matrix_game_2x2(A: np.ndarray) -> SaddleSolution:
    """Closed-form solution of min_{x in D2} max_{y in D2} x^T A y.

    Scans the four pure saddle candidates first (a_ij maximal in its row and
    minimal in its column); only when no pure saddle exists is the mixed
    formula valid, and its denominator is then nonzero.  Fully degenerate
    (constant) matrices return uniform strategies.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if np.ptp(A) == 0.0:
        u = np.array([0.5, 0.5])
        return SaddleSolution(u, u.copy(), float(A[0, 0]), 0.0, 0)
    for i in range(2):
        for j in range(2):
            if A[i, j] >= A[i, 1 - j] and A[i, j] <= A[1 - i, j]:
                x = np.zeros(2)
                y = np.zeros(2)
                x[i] = 1.0
                y[j] = 1.0
                return SaddleSolution(x, y, float(A[i, j]), 0.0, 0)
    denom = A[0, 0] - A[0, 1] - A[1, 0] + A[1, 1]
    x1 = (A[1, 1] - A[1, 0]) / denom
    y1 = (A[1, 1] - A[0, 1]) / denom
    value = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]) / denom
    x = np.array([x1, 1.0 - x1])
    y = np.array([y1, 1.0 - y1])
    return SaddleSolution(x, y, float(value), 0.0, 0)


# ---------------------------------------------------------------------------
# Iterative solvers
# ---------------------------------------------------------------------------


def _operator(f, x, y):
    gx = f.grad_x(x, y)
    gy = f.grad_y(x, y)
    if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))):
        raise NonFiniteGradientError("non-finite gradient encountered")
    return gx, gy


def _estimate_lipschitz(f, X, Y, x, y) -> float:
    """Deterministic power-iteration estimate of the gradient-map Lipschitz
    constant near (x, y); probes are projected back into the sets."""
    nx, ny = x.shape[0], y.shape[0]
    u = np.ones(nx + ny)
    u[1::2] = -1.0
    u /= np.linalg.norm(u)
    eps = 1e-6 * (1.0 + float(np.linalg.norm(x)) + float(np.linalg.norm(y)))
    gx0, gy0 = _operator(f, x, y)
    L = 1e-12
    for _ in range(6):
        x2 = X.project(x + eps * u[:nx])
        y2 = Y.project(y + eps * u[nx:])
        dz = np.concatenate([x2 - x, y2 - y])
        nd = float(np.linalg.norm(dz))
        if nd < 1e-14:
            u = np.roll(u, 1)
            continue
        gx2, gy2 = _operator(f, x2, y2)
        dF = np.concatenate([gx2 - gx0, -(gy2 - gy0)])
        nF = float(np.linalg.norm(dF))
        L = max(L, nF / nd)
        if nF < 1e-300:
            break
        u = dF / nF
    return L


def _certify(f, X, Y, x, y):
    return gap_estimate(f, X, Y, x, y)


def _extragradient(f, X, Y, x, y, cfg: SolverConfig) -> SaddleSolution:
    strongly = f.strong_H > 0
    L = _estimate_lipschitz(f, X, Y, x, y)
    gamma = 1.0 / (2.0 * L)
    diminishing = cfg.step_rule == "gda_diminishing"
    scale = X.diameter() + Y.diameter() + 1.0
    sum_x = np.zeros_like(x)
    sum_y = np.zeros_like(y)
    navg = 0
    best: SaddleSolution | None = None
    check_at = 4
    it = 0
    while it < cfg.max_iters:
        it += 1
        step = gamma / it if diminishing else gamma
        gx, gy = _operator(f, x, y)
        xh = X.project(x - step * gx)
        yh = Y.project(y + step * gy)
        if diminishing:
            xn, yn = xh, yh
        else:
            gxh, gyh = _operator(f, xh, yh)
            xn = X.project(x - step * gxh)
            yn = Y.project(y + step * gyh)
        residual = (
            float(np.linalg.norm(x - xh)) + float(np.linalg.norm(y - yh))
        ) / step
        sum_x += xh
        sum_y += yh
        navg += 1
        x, y = xn, yn
        if it >= check_at or residual * scale <= 0.5 * cfg.tol_gap:
            if strongly:
                cx, cy = x, y
            else:
                cx, cy = sum_x / navg, sum_y / navg
            g = _certify(f, X, Y, cx, cy)
            cand = SaddleSolution(cx.copy(), cy.copy(), f.value(cx, cy), g, it)
            if best is None or g < best.gap:
                best = cand
            if g <= cfg.tol_gap:
                return cand
            check_at = max(check_at * 2, it + 1)
    if best is None:
        cx, cy = (x, y) if strongly else (sum_x / max(navg, 1), sum_y / max(navg, 1))
        best = SaddleSolution(cx.copy(), cy.copy(), f.value(cx, cy), _certify(f, X, Y, cx, cy), it)
    best.iterations = cfg.max_iters
    return best


def _kl_prox(p, step_lin, step_ent, dset):
    """argmin over the (floored) simplex of step_lin . z + step_ent * sum z ln z
    + KL(z || p); closed form via water-filling over exponential weights."""
    theta = dset.theta if isinstance(dset, RestrictedSimplex) else 0.0
    a = 1.0 / (1.0 + step_ent)
    logits = a * (np.log(np.maximum(p, 1e-300)) - step_lin)
    b = np.exp(logits - logits.max())
    return _waterfill(b, theta)


def _waterfill(b: np.ndarray, theta: float) -> np.ndarray:
    """Allocate unit mass proportionally to b with per-coordinate floor theta."""
    d = b.shape[0]
    if d == 2:
        b0, b1 = float(b[0]), float(b[1])
        tot = b0 + b1
        if tot <= 0.0:
            return np.array([0.5, 0.5])
        s0 = b0 / tot
        if s0 < theta:
            return np.array([theta, 1.0 - theta])
        if 1.0 - s0 < theta:
            return np.array([1.0 - theta, theta])
        return np.array([s0, 1.0 - s0])
    free = np.ones(d, dtype=bool)
    for _ in range(d):
        mass = 1.0 - theta * float(np.sum(~free))
        denom = float(b[free].sum())
        if denom <= 0.0:
            idx = np.flatnonzero(free)
            out = np.full(d, theta)
            out[idx[0]] += mass - theta * len(idx)
            return out
        share = b * (mass / denom)
        newly = free & (share < theta)
        if not newly.any():
            return np.where(free, share, theta)
        free &= ~newly
        if not free.any():
            return np.full(d, 1.0 / d if theta == 0.0 else theta)
    return np.where(free, share, theta)


def _mirror_prox_entropic(f: SumPayoff, X, Y, x, y, cfg: SolverConfig) -> SaddleSolution:
    S = f.matrix
    bx = f.entropy_weight_x
    by = f.entropy_weight_y
    strongly = bx > 0 or by > 0  # entropy terms make the sum strongly convex-concave
    L = max(float(np.abs(S).max()), 1e-12)
    gamma = 1.0 / (2.0 * L)
    sum_x = np.zeros_like(x)
    sum_y = np.zeros_like(y)
    navg = 0
    best: SaddleSolution | None = None
    check_at = 4
    it = 0
    scale = 2.0 + 1.0
    while it < cfg.max_iters:
        it += 1
        gx = S @ y
        gy = S.T @ x
        xh = _kl_prox(x, gamma * gx, gamma * bx, X)
        yh = _kl_prox(y, -gamma * gy, gamma * by, Y)
        gxh = S @ yh
        gyh = S.T @ xh
        xn = _kl_prox(x, gamma * gxh, gamma * bx, X)
        yn = _kl_prox(y, -gamma * gyh, gamma * by, Y)
        residual = (
            float(np.abs(x - xh).sum()) + float(np.abs(y - yh).sum())
        ) / gamma
        sum_x += xh
        sum_y += yh
        navg += 1
        x, y = xn, yn
        if it >= check_at or residual * scale <= 0.5 * cfg.tol_gap:
            if strongly:
                cx, cy = x, y
            else:
                cx, cy = sum_x / navg, sum_y / navg
            g = _certify(f, X, Y, cx, cy)
            cand = SaddleSolution(cx.copy(), cy.copy(), f.value(cx, cy), g, it)
            if best is None or g < best.gap:
                best = cand
            if g <= cfg.tol_gap:
                return cand
            check_at = max(check_at * 2, it + 1)
    if best is None:
        best = SaddleSolution(x.copy(), y.copy(), f.value(x, y), _certify(f, X, Y, x, y), it)
    best.iterations = cfg.max_iters
    return best


def _scalar_interior_fast_path(f: SumPayoff, X, Y, cfg) -> SaddleSolution | None:
    """Interior stationary point of a scalar convex-concave quadratic sum.

    Valid only when the unconstrained stationary point lies strictly inside
    both boxes; otherwise the iterative path handles the active constraints.
    """
    coeffs = f.scalar_coefficients
    if coeffs is None or f.matrix is not None or f.has_generic_parts():
        return None
    if f.reg_tags("x") - {"sqnorm"} or f.reg_tags("y") - {"sqnorm"}:
        return None
    wx = f.reg_weight("x", "sqnorm")
    wy = f.reg_weight("y", "sqnorm")
    cxy, cx2, cx1, cy2, cy1, _ = coeffs
    ax = 2.0 * (cx2 + wx)
    ay = 2.0 * (cy2 - wy)
    if ax <= 0.0 or ay >= 0.0:
        return None
    J = np.array([[ax, cxy], [cxy, ay]])
    try:
        sol = np.linalg.solve(J, np.array([-cx1, -cy1]))
    except np.linalg.LinAlgError:
        return None
    xs = np.array([sol[0]])
    ys = np.array([sol[1]])
    if not (X.contains(xs, -1e-12) and Y.contains(ys, -1e-12)):
        # negative tolerance = strict interiority check
        return None
    g = _certify(f, X, Y, xs, ys)
    if g > cfg.tol_gap:
        return None
    return SaddleSolution(xs, ys, f.value(xs, ys), g, 0)


def _exact_max_restriction(f, x, Y):
    """restrict_y(x) when it admits exact maximization over Y, else None."""
    from .payoffs import LinearPlusEntropy, SeparableQuadratic

    ry = f.restrict_y(x)
    if isinstance(ry, SeparableQuadratic) and np.all(ry.quad <= 0.0):
        return ry
    if isinstance(ry, LinearPlusEntropy) and ry.ent_weight <= 0.0:
        return ry
    return None


def _scalar_envelope_path(f, X, Y, cfg) -> SaddleSolution | None:
    """For 1-D x: minimize the convex envelope phi(x) = max_y f(x, y) by
    golden-section search; each envelope evaluation is an exact closed-form
    inner maximization.  The returned pair is trusted only through its
    certified gap; failure to certify falls back to the iterative path."""
    if X.dimension != 1 or not hasattr(X, "lower"):
        return None
    lo, hi = float(X.lower[0]), float(X.upper[0])
    if _exact_max_restriction(f, np.array([lo]), Y) is None:
        return None

    sole = f._sole_generic_part() if isinstance(f, SumPayoff) else None
    if sole is not None and hasattr(sole, "envelope_argmin"):
        x_star = np.array([sole.envelope_argmin(X, Y)])
    else:
        def phi(xv: float) -> float:
            ry = _exact_max_restriction(f, np.array([xv]), Y)
            val, _ = ry.maximize_over(Y)
            return val

        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = phi(c), phi(d)
        for _ in range(200):
            if b - a < 1e-13 * (1.0 + abs(a) + abs(b)):
                break
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = phi(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = phi(d)
        x_star = np.array([0.5 * (a + b)])
    ry = _exact_max_restriction(f, x_star, Y)
    _, y_hat = ry.maximize_over(Y)
    best = None
    for y_cand in _stationary_y_candidates(f, X, Y, x_star, y_hat):
        g = _certify(f, X, Y, x_star, y_cand)
        cand = SaddleSolution(x_star.copy(), y_cand, f.value(x_star, y_cand), g, 0)
        if best is None or g < best.gap:
            best = cand
        if g <= cfg.tol_gap:
            return cand
    return None


def _stationary_y_candidates(f, X, Y, x_star, y_hat):
    """Candidate duals paired with the envelope minimizer.

    The inner argmax y_hat is exact in value but, when f is linear in y,
    sits on a vertex of the optimal face; sliding the free coordinates to
    zero the x-gradient recovers an interior saddle dual when one exists.
    """
    yield np.asarray(y_hat, dtype=float)
    if not hasattr(Y, "upper") or Y.dimension > 8:
        return
    gy = f.grad_y(x_star, y_hat)
    upper = Y.upper
    lower = Y.lower if hasattr(Y, "lower") else np.zeros(Y.dimension)
    free = np.abs(gy) <= 1e-9 * (1.0 + np.abs(gy).max())
    if not free.any():
        return
    base = float(f.grad_x(x_star, np.where(free, lower, np.asarray(y_hat)))[0])
    y0 = np.where(free, lower, np.asarray(y_hat, dtype=float))
    # fill free coordinates one at a time to drive grad_x toward zero
    y_fill = y0.copy()
    resid = base
    for i in np.flatnonzero(free):
        probe = y_fill.copy()
        probe[i] = upper[i]
        k = (float(f.grad_x(x_star, probe)[0]) - resid) / max(upper[i] - lower[i], 1e-300)
        if abs(k) < 1e-300:
            continue
        target = np.clip(lower[i] - resid / k, lower[i], upper[i])
        y_fill[i] = target
        resid += k * (target - lower[i])
        if abs(resid) < 1e-12:
            break
    yield y_fill


def solve_saddle(
    f: PayoffFunction,
    X: FeasibleSet,
    Y: FeasibleSet,
    cfg: SolverConfig | None = None,
) -> SaddleSolution:
    """min_x max_y f over X x Y with a certified duality gap.

    Strongly convex-concave f: last extragradient iterate, gap <= tol_gap
    unless the iteration budget runs out (then the best measured candidate
    is returned with iterations = max_iters).  Merely convex-concave f: the
    ergodic average, best-effort gap.  Tie-breaking among non-unique saddles
    is deterministic: fixed warm start, fixed probe sequence, fixed
    averaging, so reruns reproduce bitwise.
    """
    cfg = cfg or SolverConfig()
    f = _as_sum(f)
    if cfg.warm_start is not None:
        x0, y0 = cfg.warm_start
        x0 = np.array(x0, dtype=float)
        y0 = np.array(y0, dtype=float)
        if not (X.contains(x0, 1e-9) and Y.contains(y0, 1e-9)):
            raise ValueError("infeasible warm start rejected")
    else:
        x0 = X.origin_projection()
        y0 = Y.origin_projection()

    if (
        f.is_pure_bilinear()
        and isinstance(X, Simplex)
        and isinstance(Y, Simplex)
        and f.matrix.shape == (2, 2)
    ):
        sol = solve_matrix_game_2x2(f.matrix)
        sol.gap = _certify(f, X, Y, sol.x_star, sol.y_star)
        return sol

    fast = _scalar_interior_fast_path(f, X, Y, cfg)
    if fast is not None:
        return fast

    if cfg.warm_start is not None:
        g0 = _certify(f, X, Y, x0, y0)
        if g0 <= cfg.tol_gap:
            return SaddleSolution(x0, y0, f.value(x0, y0), g0, 0)

    envelope = _scalar_envelope_path(f, X, Y, cfg)
    if envelope is not None:
        return envelope

    if (
        f.is_entropic_bilinear()
        and isinstance(X, (Simplex, RestrictedSimplex))
        and isinstance(Y, (Simplex, RestrictedSimplex))
        and cfg.step_rule == "extragradient_fixed"
    ):
        x0 = np.maximum(x0, 1e-300)
        x0 = x0 / x0.sum()
        y0 = np.maximum(y0, 1e-300)
        y0 = y0 / y0.sum()
        return _mirror_prox_entropic(f, X, Y, x0, y0, cfg)

    return _extragradient(f, X, Y, x0, y0, cfg)


def hindsight_value(
    history,
    X: FeasibleSet,
    Y: FeasibleSet,
    cfg: SolverConfig | None = None,
) -> float:
    """Value of min_x max_y of the summed history."""
    total = assemble_sum(history)
    if total.count == 0:
        raise ValueError("hindsight_value needs a nonempty history")
    return solve_saddle(total, X, Y, cfg).value
