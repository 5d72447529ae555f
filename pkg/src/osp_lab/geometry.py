"""Convex compact feasible sets: membership, Euclidean projection, diameter.

Four set kinds cover every domain used in the library: boxes, probability
simplexes, simplexes with a per-coordinate floor (all entries >= theta), and
axis-aligned products of intervals [0, u_i].  Projection onto the floored
simplex reuses the sorted-threshold simplex projection through the affine
bijection w -> theta*1 + (1 - d*theta)*w; Euclidean projection commutes with
that similarity, so one routine serves both sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MEMBERSHIP_TOL = 1e-9


def project_simplex(z: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w : w >= 0, sum w = 1} by sorted thresholding.

    O(d log d); the classic algorithm of Held/Wolfe/Crowder, see also
    Duchi et al. (2008).
    """
    z = np.asarray(z, dtype=float)
    d = z.shape[0]
    if d == 1:
        return np.ones(1)
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, d + 1)
    cond = u - css / ks > 0
    rho = np.nonzero(cond)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(z - tau, 0.0)


class FeasibleSet:
    """Base class; subclasses implement contains/project/diameter."""

    dimension: int

    def contains(self, z: np.ndarray, tol: float = DEFAULT_MEMBERSHIP_TOL) -> bool:
        raise NotImplementedError

    def project(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def origin_projection(self) -> np.ndarray:
        return self.project(np.zeros(self.dimension))

    def _check_dim(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dimension,):
            raise ValueError(
                f"dimension mismatch: expected ({self.dimension},), got {z.shape}"
            )
        return z

    # Linear optimization in closed form, used for duality-gap certificates
    # on payoffs that are linear in one argument.
    def minimize_linear(self, g: np.ndarray) -> tuple[float, np.ndarray]:
        raise NotImplementedError

    def maximize_linear(self, g: np.ndarray) -> tuple[float, np.ndarray]:
        val, arg = self.minimize_linear(-np.asarray(g, dtype=float))
        return -val, arg


@dataclass(frozen=True)
class Box(FeasibleSet):
    """{z : lower <= z <= upper} componentwise."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("lower/upper shape mismatch")
        if np.any(lo > hi):
            raise ValueError("Box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "dimension", lo.shape[0])

    def contains(self, z, tol=DEFAULT_MEMBERSHIP_TOL):
        z = self._check_dim(z)
        return bool(np.all(z >= self.lower - tol) and np.all(z <= self.upper + tol))

    def project(self, z):
        z = self._check_dim(z)
        return np.clip(z, self.lower, self.upper)

    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def minimize_linear(self, g):
        g = np.asarray(g, dtype=float)
        arg = np.where(g >= 0, self.lower, self.upper)
        return float(g @ arg), arg


@dataclass(frozen=True)
class Simplex(FeasibleSet):
    """Probability simplex over d coordinates."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("Simplex dimension must be positive")
        object.__setattr__(self, "dimension", self.d)

    def contains(self, z, tol=DEFAULT_MEMBERSHIP_TOL):
        z = self._check_dim(z)
        return bool(np.all(z >= -tol) and abs(float(z.sum()) - 1.0) <= tol)

    def project(self, z):
        return project_simplex(self._check_dim(z))

    def diameter(self):
        # distance between two vertices; a 1-point simplex has diameter 0
        return 0.0 if self.d == 1 else float(np.sqrt(2.0))

    def uniform(self) -> np.ndarray:
        return np.full(self.d, 1.0 / self.d)

    def minimize_linear(self, g):
        g = np.asarray(g, dtype=float)
        i = int(np.argmin(g))
        arg = np.zeros(self.d)
        arg[i] = 1.0
        return float(g[i]), arg


@dataclass(frozen=True)
class RestrictedSimplex(FeasibleSet):
    """Simplex with floor theta on every coordinate: {z in Delta : z_i >= theta}.

    Nonempty iff 0 <= theta <= 1/d; theta = 1/d degenerates to the single
    point (1/d, ..., 1/d).
    """

    d: int
    theta: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("RestrictedSimplex dimension must be positive")
        if not (0.0 <= self.theta <= 1.0 / self.d + 1e-15):
            raise ValueError("theta must lie in [0, 1/d]")
        object.__setattr__(self, "dimension", self.d)

    @property
    def scale(self) -> float:
        """Contraction factor of the affine embedding of the standard simplex."""
        return 1.0 - self.d * self.theta

    def embed(self, w: np.ndarray) -> np.ndarray:
        """Map the standard simplex onto this set: w -> theta*1 + scale*w."""
        return self.theta + self.scale * np.asarray(w, dtype=float)

    def unembed(self, z: np.ndarray) -> np.ndarray:
        s = self.scale
        if s <= 0.0:
            return np.full(self.d, 1.0 / self.d)
        return (np.asarray(z, dtype=float) - self.theta) / s

    def contains(self, z, tol=DEFAULT_MEMBERSHIP_TOL):
        z = self._check_dim(z)
        return bool(np.all(z >= self.theta - tol) and abs(float(z.sum()) - 1.0) <= tol)

    def project(self, z):
        z = self._check_dim(z)
        s = self.scale
        if s <= 1e-15:
            return np.full(self.d, 1.0 / self.d)
        return self.embed(project_simplex((z - self.theta) / s))

    def diameter(self):
        return 0.0 if self.d == 1 else float(np.sqrt(2.0) * self.scale)

    def uniform(self) -> np.ndarray:
        return np.full(self.d, 1.0 / self.d)

    def minimize_linear(self, g):
        # floor mass theta everywhere, free mass scale on the best coordinate
        g = np.asarray(g, dtype=float)
        i = int(np.argmin(g))
        arg = np.full(self.d, self.theta)
        arg[i] += self.scale
        return float(g @ arg), arg


@dataclass(frozen=True)
class IntervalProduct(FeasibleSet):
    """Product of intervals [0, upper_i]; identical to Box(0, upper).

    Kept as its own kind because the dual domain of the knapsack Lagrangian
    is exactly such a product.
    """

    upper: np.ndarray

    def __post_init__(self):
        up = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if np.any(up < 0):
            raise ValueError("IntervalProduct requires nonnegative upper bounds")
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "dimension", up.shape[0])

    def contains(self, z, tol=DEFAULT_MEMBERSHIP_TOL):
        z = self._check_dim(z)
        return bool(np.all(z >= -tol) and np.all(z <= self.upper + tol))

    def project(self, z):
        z = self._check_dim(z)
        return np.clip(z, 0.0, self.upper)

    def diameter(self):
        return float(np.linalg.norm(self.upper))

    def minimize_linear(self, g):
        g = np.asarray(g, dtype=float)
        arg = np.where(g >= 0, 0.0, self.upper)
        return float(g @ arg), arg


def interval(lo: float, hi: float) -> Box:
    """One-dimensional box, the workhorse of the scalar experiments."""
    return Box(np.array([lo]), np.array([hi]))
