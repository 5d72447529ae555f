"""Convex-concave payoff functions with values, subgradients, and metadata.

A payoff knows its Lipschitz constant (w.r.t. a declared norm), its joint
strong convexity-concavity modulus, and how to restrict itself to one
argument.  Restrictions return small closed-form objects (separable
quadratics, linear-plus-entropy forms) that the solver exploits for exact
inner optimizations when certifying duality gaps and computing best
responses; anything unstructured falls back to projected gradient.

Running sums of payoffs are held in `SumPayoff`, which folds the structured
families into O(1)-size accumulators so follow-the-leader style algorithms
stay cheap over long horizons.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Box, FeasibleSet, IntervalProduct, RestrictedSimplex, Simplex


def negentropy(z: np.ndarray) -> float:
    """sum z_i ln z_i with the 0 ln 0 = 0 convention."""
    z = np.asarray(z, dtype=float)
    pos = z > 0
    return float(np.sum(z[pos] * np.log(z[pos])))


# ---------------------------------------------------------------------------
# One-variable restrictions
# ---------------------------------------------------------------------------


@dataclass
class SeparableQuadratic:
    """q(z) = sum_i quad_i z_i^2 + lin . z + const."""

    quad: np.ndarray
    lin: np.ndarray
    const: float = 0.0

    def value(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        return float(self.quad @ (z * z) + self.lin @ z + self.const)

    def grad(self, z: np.ndarray) -> np.ndarray:
        return 2.0 * self.quad * np.asarray(z, dtype=float) + self.lin

    def minimize_over(self, dset: FeasibleSet) -> tuple[float, np.ndarray]:
        if np.all(self.quad == 0.0):
            val, arg = dset.minimize_linear(self.lin)
            return val + self.const, arg
        if np.any(self.quad < 0.0):
            raise ValueError("minimize requires a convex (quad >= 0) restriction")
        if isinstance(dset, (Box, IntervalProduct)):
            lo = dset.lower if isinstance(dset, Box) else np.zeros(dset.dimension)
            hi = dset.upper
            with np.errstate(divide="ignore", invalid="ignore"):
                vertex = np.where(self.quad > 0, -self.lin / (2.0 * self.quad), 0.0)
            arg = np.clip(vertex, lo, hi)
            zero = self.quad == 0.0
            if np.any(zero):
                arg = np.where(zero, np.where(self.lin >= 0, lo, hi), arg)
            return self.value(arg), arg
        if isinstance(dset, (Simplex, RestrictedSimplex)) and np.all(
            np.isclose(self.quad, self.quad[0])
        ):
            c = float(self.quad[0])
            if c > 0:
                arg = dset.project(-self.lin / (2.0 * c))
                return self.value(arg), arg
        return _pg_minimize(self.value, self.grad, dset)

    def maximize_over(self, dset: FeasibleSet) -> tuple[float, np.ndarray]:
        neg = SeparableQuadratic(-self.quad, -self.lin, -self.const)
        val, arg = neg.minimize_over(dset)
        return -val, arg


@dataclass
class LinearPlusEntropy:
    """q(z) = lin . z + ent_weight * sum z_i ln z_i + const on a simplex.

    Convex for ent_weight >= 0; the concave (maximization) direction flips
    the sign.  Exact optimization over a floored simplex is a water-filling
    over exponential weights: free coordinates share the leftover mass in
    proportion to exp(of the right tilt), coordinates whose share would dip
    below the floor are pinned there.
    """

    lin: np.ndarray
    ent_weight: float
    const: float = 0.0

    def value(self, z: np.ndarray) -> float:
        return float(self.lin @ z) + self.ent_weight * negentropy(z) + self.const

    def minimize_over(self, dset: FeasibleSet) -> tuple[float, np.ndarray]:
        if self.ent_weight < 0:
            raise ValueError("minimize requires ent_weight >= 0")
        arg = entropy_tilted_argopt(-self.lin, self.ent_weight, dset)
        return self.value(arg), arg

    def maximize_over(self, dset: FeasibleSet) -> tuple[float, np.ndarray]:
        if self.ent_weight > 0:
            raise ValueError("maximize requires ent_weight <= 0")
        arg = entropy_tilted_argopt(self.lin, -self.ent_weight, dset)
        return self.value(arg), arg


@dataclass
class GenericOneVar:
    """Closure-backed restriction; optimized by projected gradient."""

    value_fn: object
    grad_fn: object

    def value(self, z):
        return float(self.value_fn(z))

    def grad(self, z):
        return np.asarray(self.grad_fn(z), dtype=float)

    def minimize_over(self, dset: FeasibleSet) -> tuple[float, np.ndarray]:
        return _pg_minimize(self.value, self.grad, dset)

    def maximize_over(self, dset: FeasibleSet) -> tuple[float, np.ndarray]:
        val, arg = _pg_minimize(
            lambda z: -self.value(z), lambda z: -self.grad(z), dset
        )
        return -val, arg


def entropy_tilted_argopt(g: np.ndarray, beta: float, dset: FeasibleSet) -> np.ndarray:
    """argmax over the (floored) simplex of g . z - beta * sum z ln z, beta >= 0.

    beta = 0 degenerates to linear optimization.  Otherwise the KKT system
    pins coordinates at the floor theta whenever their exponential-weight
    share of the free mass falls below it.
    """
    if isinstance(dset, Simplex):
        d, theta = dset.d, 0.0
    elif isinstance(dset, RestrictedSimplex):
        d, theta = dset.d, dset.theta
    else:
        raise TypeError("entropy-tilted optimization needs a simplex-family set")
    g = np.asarray(g, dtype=float)
    if beta <= 0.0:
        _, arg = dset.maximize_linear(g)
        return arg
    b = np.exp((g - g.max()) / beta)
    free = np.ones(d, dtype=bool)
    z = np.full(d, theta)
    for _ in range(d):
        mass = 1.0 - theta * float(np.sum(~free))
        denom = float(b[free].sum())
        if denom <= 0.0:
            # all free weights underflowed: put mass on the best coordinate
            idx = np.flatnonzero(free)
            k = idx[int(np.argmax(g[idx]))]
            share = np.zeros(d)
            share[k] = mass - theta * (len(idx) - 1)
            share[idx] = np.maximum(share[idx], theta)
            z[free] = share[free]
            return z
        share = np.where(free, b * (mass / denom), theta)
        newly = free & (share < theta)
        if not newly.any():
            z = np.where(free, share, theta)
            return z
        free &= ~newly
        if not free.any():
            return np.full(d, 1.0 / d) if theta == 0 else np.full(d, theta)
    return np.where(free, share, theta)


def _pg_minimize(
    value_fn,
    grad_fn,
    dset: FeasibleSet,
    z0: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iters: int = 5000,
) -> tuple[float, np.ndarray]:
    """Projected gradient with Barzilai-Borwein steps; deterministic."""
    z = dset.origin_projection() if z0 is None else np.asarray(z0, dtype=float)
    g = grad_fn(z)
    step = 1.0 / (1.0 + float(np.linalg.norm(g)))
    best_z, best_v = z, value_fn(z)
    for _ in range(max_iters):
        z_new = dset.project(z - step * g)
        if float(np.linalg.norm(z_new - z)) <= tol * (1.0 + float(np.linalg.norm(z))):
            z = z_new
            break
        g_new = grad_fn(z_new)
        dz = z_new - z
        dg = g_new - g
        denom = float(dz @ dg)
        step = float(dz @ dz) / denom if denom > 1e-18 else step * 1.5
        step = min(max(step, 1e-12), 1e6)
        z, g = z_new, g_new
        v = value_fn(z)
        if v < best_v:
            best_v, best_z = v, z
    v = value_fn(z)
    if v < best_v:
        best_v, best_z = v, z
    return best_v, best_z


# ---------------------------------------------------------------------------
# Payoff functions
# ---------------------------------------------------------------------------


class PayoffFunction:
    """Convex in x (for each y), concave in y (for each x)."""

    lipschitz_G: float = 0.0
    strong_H: float = 0.0
    norm_tag: str = "l2"
    linear_in_x: bool = False
    linear_in_y: bool = False

    def value(self, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def restrict_x(self, y: np.ndarray):
        """Closed-form view of x -> value(x, y), or None if unstructured."""
        return None

    def restrict_y(self, x: np.ndarray):
        return None


@dataclass
class ScalarQuadraticBilinear(PayoffFunction):
    """cxy*x*y + cx2*x^2 + cx1*x + cy2*y^2 + cy1*y + c0 on scalar x, y.

    Convex-concave iff cx2 >= 0 >= cy2.  Scalars are carried as 1-vectors;
    there is no separate scalar code path.
    """

    cxy: float
    cx2: float
    cx1: float
    cy2: float
    cy1: float
    c0: float = 0.0
    lipschitz_G: float = 0.0
    norm_tag: str = "l2"

    def __post_init__(self):
        if self.cx2 < 0 or self.cy2 > 0:
            raise ValueError("requires cx2 >= 0 (convex in x) and cy2 <= 0 (concave in y)")
        self.strong_H = float(min(2.0 * self.cx2, -2.0 * self.cy2))
        self.linear_in_x = self.cx2 == 0.0
        self.linear_in_y = self.cy2 == 0.0

    def value(self, x, y):
        xv, yv = float(x[0]), float(y[0])
        return (
            self.cxy * xv * yv
            + self.cx2 * xv * xv
            + self.cx1 * xv
            + self.cy2 * yv * yv
            + self.cy1 * yv
            + self.c0
        )

    def grad_x(self, x, y):
        return np.array([self.cxy * float(y[0]) + 2.0 * self.cx2 * float(x[0]) + self.cx1])

    def grad_y(self, x, y):
        return np.array([self.cxy * float(x[0]) + 2.0 * self.cy2 * float(y[0]) + self.cy1])

    def restrict_x(self, y):
        yv = float(y[0])
        return SeparableQuadratic(
            quad=np.array([self.cx2]),
            lin=np.array([self.cxy * yv + self.cx1]),
            const=self.cy2 * yv * yv + self.cy1 * yv + self.c0,
        )

    def restrict_y(self, x):
        xv = float(x[0])
        return SeparableQuadratic(
            quad=np.array([self.cy2]),
            lin=np.array([self.cxy * xv + self.cy1]),
            const=self.cx2 * xv * xv + self.cx1 * xv + self.c0,
        )


def _corner_gradient_sup(payoff: ScalarQuadraticBilinear, xw: float, yw: float) -> float:
    """Max Euclidean gradient norm over the box [-xw,xw] x [-yw,yw].

    Both gradient components are affine in (x, y), so the squared norm is
    convex and attains its max at a corner.
    """
    best = 0.0
    for sx in (-xw, xw):
        for sy in (-yw, yw):
            g1 = payoff.cxy * sy + 2.0 * payoff.cx2 * sx + payoff.cx1
            g2 = payoff.cxy * sx + 2.0 * payoff.cy2 * sy + payoff.cy1
            best = max(best, g1 * g1 + g2 * g2)
    return float(np.sqrt(best))


def make_quadratic_bilinear(
    a: float,
    h: float,
    p: float,
    q: float,
    x_halfwidth: float = 10.0,
    y_halfwidth: float = 10.0,
) -> ScalarQuadraticBilinear:
    """a*x*y + (h/2)(x - p)^2 - (h/2)(y - q)^2 with G taken over the stated box."""
    if h < 0:
        raise ValueError("curvature h must be nonnegative")
    payoff = ScalarQuadraticBilinear(
        cxy=a,
        cx2=h / 2.0,
        cx1=-h * p,
        cy2=-h / 2.0,
        cy1=h * q,
        c0=h * p * p / 2.0 - h * q * q / 2.0,
    )
    payoff.lipschitz_G = _corner_gradient_sup(payoff, x_halfwidth, y_halfwidth)
    return payoff


def make_scalar_convex_concave(
    cxy: float,
    cx2: float,
    cx1: float,
    cy2: float,
    cy1: float,
    c0: float = 0.0,
    x_halfwidth: float = 1.0,
    y_halfwidth: float = 1.0,
) -> ScalarQuadraticBilinear:
    payoff = ScalarQuadraticBilinear(cxy, cx2, cx1, cy2, cy1, c0)
    payoff.lipschitz_G = _corner_gradient_sup(payoff, x_halfwidth, y_halfwidth)
    return payoff


@dataclass
class BilinearPayoff(PayoffFunction):
    """x^T A y; game payoff matrices carry entries in [-1, 1].

    entry_bound=None lifts the range check (needed for one-point importance
    weighted estimates, whose entries scale with 1/delta^2).
    """

    A: np.ndarray
    norm_tag: str = "l1"
    entry_bound: float | None = 1.0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2:
            raise ValueError("A must be a matrix")
        c = float(np.abs(A).max()) if A.size else 0.0
        if self.entry_bound is not None and c > self.entry_bound + 1e-12:
            raise ValueError(f"matrix entries must lie in [-{self.entry_bound}, {self.entry_bound}]")
        self.A = A
        self.strong_H = 0.0
        self.linear_in_x = True
        self.linear_in_y = True
        self.lipschitz_G = bilinear_lipschitz(A, self.norm_tag)

    def value(self, x, y):
        return float(x @ self.A @ y)

    def grad_x(self, x, y):
        return self.A @ y

    def grad_y(self, x, y):
        return self.A.T @ x

    def restrict_x(self, y):
        return SeparableQuadratic(
            quad=np.zeros(self.A.shape[0]), lin=self.A @ y, const=0.0
        )

    def restrict_y(self, x):
        return SeparableQuadratic(
            quad=np.zeros(self.A.shape[1]), lin=self.A.T @ x, const=0.0
        )


def bilinear_lipschitz(A: np.ndarray, norm_tag: str = "l1") -> float:
    """Lipschitz constant of x^T A y over simplexes, per entry bound c = max|A_ij|.

    c for the l1 norm; sqrt(c)(sqrt(d1) + sqrt(d2)) for the l2 norm.
    """
    A = np.asarray(A, dtype=float)
    c = float(np.abs(A).max()) if A.size else 0.0
    if norm_tag == "l1":
        return c
    if norm_tag == "l2":
        d1, d2 = A.shape
        return float(np.sqrt(c) * (np.sqrt(d1) + np.sqrt(d2)))
    raise ValueError(f"unknown norm tag {norm_tag!r}")


def make_bilinear(A: np.ndarray, norm_tag: str = "l1") -> BilinearPayoff:
    return BilinearPayoff(np.asarray(A, dtype=float), norm_tag=norm_tag)


@dataclass
class GenericPayoff(PayoffFunction):
    """Payoff from raw callables; restrictions fall back to projected gradient."""

    value_fn: object
    grad_x_fn: object
    grad_y_fn: object
    lipschitz_G: float = 0.0
    strong_H: float = 0.0
    norm_tag: str = "l2"

    def value(self, x, y):
        return float(self.value_fn(x, y))

    def grad_x(self, x, y):
        return np.asarray(self.grad_x_fn(x, y), dtype=float)

    def grad_y(self, x, y):
        return np.asarray(self.grad_y_fn(x, y), dtype=float)

    def restrict_x(self, y):
        y = np.array(y, dtype=float)
        return GenericOneVar(
            lambda x: self.value(x, y), lambda x: self.grad_x(x, y)
        )

    def restrict_y(self, x):
        x = np.array(x, dtype=float)
        return GenericOneVar(
            lambda y: self.value(x, y), lambda y: self.grad_y(x, y)
        )


# ---------------------------------------------------------------------------
# Regularizers
# ---------------------------------------------------------------------------


class Regularizer:
    """Nonnegative strongly convex function of a single block variable."""

    tag = "generic"
    strong_modulus: float = 0.0
    lipschitz_G: float = 0.0

    def value(self, z: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def merge_key(self):
        return (self.tag, id(self))


@dataclass
class SquaredNormRegularizer(Regularizer):
    """R(z) = ||z||_2^2; 2-strongly convex, gradient norm 2*radius on the set."""

    radius_bound: float

    tag = "sqnorm"

    def __post_init__(self):
        self.strong_modulus = 2.0
        self.lipschitz_G = 2.0 * float(self.radius_bound)

    def value(self, z):
        z = np.asarray(z, dtype=float)
        return float(z @ z)

    def grad(self, z):
        return 2.0 * np.asarray(z, dtype=float)

    def merge_key(self):
        return ("sqnorm",)


@dataclass
class RegularizedPayoff(PayoffFunction):
    """base + weight * reg_x(x) - weight * reg_y(y).

    The stored Lipschitz constant is the conservative sum form
    G_base + weight*(G_reg_x + G_reg_y).
    """

    base: PayoffFunction
    reg_x: Regularizer
    reg_y: Regularizer
    weight: float

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("weight must be positive")
        self.strong_H = self.base.strong_H + self.weight * min(
            self.reg_x.strong_modulus, self.reg_y.strong_modulus
        )
        self.lipschitz_G = self.base.lipschitz_G + self.weight * (
            self.reg_x.lipschitz_G + self.reg_y.lipschitz_G
        )
        self.norm_tag = self.base.norm_tag

    def value(self, x, y):
        return (
            self.base.value(x, y)
            + self.weight * self.reg_x.value(x)
            - self.weight * self.reg_y.value(y)
        )

    def grad_x(self, x, y):
        return self.base.grad_x(x, y) + self.weight * self.reg_x.grad(x)

    def grad_y(self, x, y):
        return self.base.grad_y(x, y) - self.weight * self.reg_y.grad(y)

    def restrict_x(self, y):
        inner = self.base.restrict_x(y)
        offset = -self.weight * self.reg_y.value(y)
        return _attach_regularizer(inner, self.reg_x, self.weight, offset)

    def restrict_y(self, x):
        inner = self.base.restrict_y(x)
        offset = self.weight * self.reg_x.value(x)
        return _attach_regularizer(inner, self.reg_y, -self.weight, offset)


def _attach_regularizer(inner, reg: Regularizer, signed_weight: float, offset: float):
    """Fold weight*reg into a one-variable restriction, or bail to None."""
    if inner is None:
        return None
    if reg.tag == "sqnorm" and isinstance(inner, SeparableQuadratic):
        return SeparableQuadratic(
            quad=inner.quad + signed_weight,
            lin=inner.lin,
            const=inner.const + offset,
        )
    if reg.tag == "entropy" and isinstance(inner, SeparableQuadratic) and np.all(
        inner.quad == 0.0
    ):
        return LinearPlusEntropy(
            lin=inner.lin,
            ent_weight=signed_weight,
            const=inner.const + offset + signed_weight * np.log(inner.lin.shape[0]),
        )
    return None


def regularize(
    base: PayoffFunction,
    reg_x: Regularizer,
    reg_y: Regularizer,
    weight: float,
) -> RegularizedPayoff:
    return RegularizedPayoff(base, reg_x, reg_y, weight)


# ---------------------------------------------------------------------------
# Running sums
# ---------------------------------------------------------------------------


@dataclass
class _RegBucket:
    reg: Regularizer
    weight: float = 0.0


class SumPayoff(PayoffFunction):
    """Incremental sum of observed payoffs with O(1) state for the
    scalar-quadratic and bilinear families; unstructured payoffs fall back
    to a list (O(t) evaluation, fine for short tests only)."""

    def __init__(self):
        self.count = 0
        self.strong_H = 0.0
        self.lipschitz_G = 0.0
        self.norm_tag = "l2"
        self._scalar: np.ndarray | None = None  # [cxy cx2 cx1 cy2 cy1 c0]
        self._matrix: np.ndarray | None = None
        self._generic: list[PayoffFunction] = []
        self._regs_x: dict = {}
        self._regs_y: dict = {}

    def add(self, payoff: PayoffFunction) -> None:
        self.count += 1
        self.strong_H += payoff.strong_H
        self.lipschitz_G += payoff.lipschitz_G
        self.norm_tag = payoff.norm_tag
        self._add_part(payoff)

    def _add_part(self, payoff: PayoffFunction) -> None:
        if isinstance(payoff, RegularizedPayoff):
            self._add_part(payoff.base)
            self._bump_reg(self._regs_x, payoff.reg_x, payoff.weight)
            self._bump_reg(self._regs_y, payoff.reg_y, payoff.weight)
        elif isinstance(payoff, ScalarQuadraticBilinear):
            row = np.array(
                [payoff.cxy, payoff.cx2, payoff.cx1, payoff.cy2, payoff.cy1, payoff.c0]
            )
            self._scalar = row if self._scalar is None else self._scalar + row
        elif isinstance(payoff, BilinearPayoff):
            if self._matrix is None:
                self._matrix = payoff.A.copy()
            else:
                self._matrix += payoff.A
        else:
            self._generic.append(payoff)

    @staticmethod
    def _bump_reg(bucket: dict, reg: Regularizer, weight: float) -> None:
        key = reg.merge_key()
        if key not in bucket:
            bucket[key] = _RegBucket(reg)
        bucket[key].weight += weight

    # -- evaluation ---------------------------------------------------------

    def value(self, x, y):
        total = 0.0
        if self._scalar is not None:
            cxy, cx2, cx1, cy2, cy1, c0 = self._scalar
            xv, yv = float(x[0]), float(y[0])
            total += cxy * xv * yv + cx2 * xv * xv + cx1 * xv + cy2 * yv * yv + cy1 * yv + c0
        if self._matrix is not None:
            total += float(x @ self._matrix @ y)
        for p in self._generic:
            total += p.value(x, y)
        for b in self._regs_x.values():
            total += b.weight * b.reg.value(x)
        for b in self._regs_y.values():
            total -= b.weight * b.reg.value(y)
        return total

    def grad_x(self, x, y):
        g = np.zeros_like(np.asarray(x, dtype=float))
        if self._scalar is not None:
            cxy, cx2, cx1 = self._scalar[0], self._scalar[1], self._scalar[2]
            g = g + np.array([cxy * float(y[0]) + 2.0 * cx2 * float(x[0]) + cx1])
        if self._matrix is not None:
            g = g + self._matrix @ y
        for p in self._generic:
            g = g + p.grad_x(x, y)
        for b in self._regs_x.values():
            g = g + b.weight * b.reg.grad(x)
        return g

    def grad_y(self, x, y):
        g = np.zeros_like(np.asarray(y, dtype=float))
        if self._scalar is not None:
            cxy, cy2, cy1 = self._scalar[0], self._scalar[3], self._scalar[4]
            g = g + np.array([cxy * float(x[0]) + 2.0 * cy2 * float(y[0]) + cy1])
        if self._matrix is not None:
            g = g + self._matrix.T @ x
        for p in self._generic:
            g = g + p.grad_y(x, y)
        for b in self._regs_y.values():
            g = g - b.weight * b.reg.grad(y)
        return g

    # -- structure hints for the solver --------------------------------------

    def reg_weight(self, axis: str, tag: str) -> float:
        bucket = self._regs_x if axis == "x" else self._regs_y
        return sum(b.weight for b in bucket.values() if b.reg.tag == tag)

    def reg_tags(self, axis: str) -> set:
        bucket = self._regs_x if axis == "x" else self._regs_y
        return {b.reg.tag for b in bucket.values()}

    @property
    def entropy_weight_x(self) -> float:
        return self.reg_weight("x", "entropy")

    @property
    def entropy_weight_y(self) -> float:
        return self.reg_weight("y", "entropy")

    def is_pure_bilinear(self) -> bool:
        return (
            self._matrix is not None
            and self._scalar is None
            and not self._generic
            and not self._regs_x
            and not self._regs_y
        )

    def is_entropic_bilinear(self) -> bool:
        """Bilinear smooth part + entropy regularization only."""
        return (
            self._matrix is not None
            and self._scalar is None
            and not self._generic
            and all(b.reg.tag == "entropy" for b in self._regs_x.values())
            and all(b.reg.tag == "entropy" for b in self._regs_y.values())
        )

    @property
    def matrix(self) -> np.ndarray | None:
        return self._matrix

    @property
    def scalar_coefficients(self) -> np.ndarray | None:
        return self._scalar

    def has_generic_parts(self) -> bool:
        return bool(self._generic)

    # -- restrictions ---------------------------------------------------------

    def _sole_generic_part(self):
        if (
            len(self._generic) == 1
            and self._scalar is None
            and self._matrix is None
            and not self._regs_x
            and not self._regs_y
        ):
            return self._generic[0]
        return None

    def restrict_x(self, y):
        if self._generic:
            sole = self._sole_generic_part()
            if sole is not None:
                return sole.restrict_x(y)
            y = np.array(y, dtype=float)
            return GenericOneVar(
                lambda x: self.value(x, y), lambda x: self.grad_x(x, y)
            )
        parts = []
        if self._scalar is not None:
            cxy, cx2, cx1, cy2, cy1, c0 = self._scalar
            yv = float(y[0])
            parts.append(
                SeparableQuadratic(
                    np.array([cx2]),
                    np.array([cxy * yv + cx1]),
                    cy2 * yv * yv + cy1 * yv + c0,
                )
            )
        if self._matrix is not None:
            parts.append(
                SeparableQuadratic(
                    np.zeros(self._matrix.shape[0]), self._matrix @ y, 0.0
                )
            )
        out = _merge_quadratics(parts)
        offset = -sum(b.weight * b.reg.value(y) for b in self._regs_y.values())
        for b in self._regs_x.values():
            out = _attach_regularizer(out, b.reg, b.weight, 0.0)
            if out is None:
                return None
        if out is None:
            return None
        _shift_const(out, offset)
        return out

    def restrict_y(self, x):
        if self._generic:
            sole = self._sole_generic_part()
            if sole is not None:
                return sole.restrict_y(x)
            x = np.array(x, dtype=float)
            return GenericOneVar(
                lambda y: self.value(x, y), lambda y: self.grad_y(x, y)
            )
        parts = []
        if self._scalar is not None:
            cxy, cx2, cx1, cy2, cy1, c0 = self._scalar
            xv = float(x[0])
            parts.append(
                SeparableQuadratic(
                    np.array([cy2]),
                    np.array([cxy * xv + cy1]),
                    cx2 * xv * xv + cx1 * xv + c0,
                )
            )
        if self._matrix is not None:
            parts.append(
                SeparableQuadratic(
                    np.zeros(self._matrix.shape[1]), self._matrix.T @ x, 0.0
                )
            )
        out = _merge_quadratics(parts)
        offset = sum(b.weight * b.reg.value(x) for b in self._regs_x.values())
        for b in self._regs_y.values():
            out = _attach_regularizer(out, b.reg, -b.weight, 0.0)
            if out is None:
                return None
        if out is None:
            return None
        _shift_const(out, offset)
        return out


def _merge_quadratics(parts: list[SeparableQuadratic]) -> SeparableQuadratic | None:
    if not parts:
        return None
    out = parts[0]
    for p in parts[1:]:
        out = SeparableQuadratic(out.quad + p.quad, out.lin + p.lin, out.const + p.const)
    return out


def _shift_const(restriction, offset: float) -> None:
    restriction.const += offset
