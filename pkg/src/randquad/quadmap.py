"""Deterministic quadratic-map core.

Everything here concerns the one-parameter family F_theta(x) = theta*x*(1-x)
on the open interval (0, 1): evaluation and composition, orbits, fixed and
periodic points with their multipliers, the largest-orbit-point function
q(theta), the common invariant interval for a parameter band, and Lyapunov
exponents.  All functions are pure; no randomness enters this module.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "PeriodicOrbit",
    "InvariantInterval",
    "QTable",
    "apply",
    "compose_apply",
    "iterate",
    "fixed_point",
    "find_periodic_orbit",
    "check_transversality",
    "q_of_theta",
    "invariant_interval",
    "lyapunov_deterministic",
]

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100
MIN_PERIOD_TOL = 1e-9
WARMUP_STEPS = 10_000
DEFAULT_SEED_COUNT = 16


class DomainError(ValueError):
    """Argument outside the admissible domain of the map family."""


def _check_theta(theta: float, allow_four: bool = True) -> float:
    theta = float(theta)
    hi_ok = theta <= 4.0 if allow_four else theta < 4.0
    if not (0.0 < theta and hi_ok):
        bound = "(0, 4]" if allow_four else "(0, 4)"
        raise DomainError(f"map parameter {theta!r} outside {bound}")
    return theta


def _check_state(x: float) -> float:
    x = float(x)
    if not (0.0 < x < 1.0):
        raise DomainError(f"state {x!r} outside the state space (0, 1)")
    return x


def apply(theta: float, x: float) -> float:
    """Evaluate F_theta(x) = theta*x*(1-x).

    theta = 4 is admitted for deterministic analysis; there the vertex x = 0.5
    maps to 1, which is the single point where the image touches the boundary.
    """
    theta = _check_theta(theta)
    x = _check_state(x)
    return theta * x * (1.0 - x)


def compose_apply(thetas, x: float) -> float:
    """Apply F_{theta_n} ... F_{theta_1} to x, first parameter applied first.

    Domain errors from individual applications propagate (at theta = 4 an
    intermediate vertex image lands on 1, outside the state space).
    """
    thetas = list(thetas)
    if not thetas:
        raise ValueError("compose_apply requires a nonempty parameter sequence")
    for theta in thetas:
        x = apply(theta, x)
    return x


def iterate(theta: float, x0: float, n: int) -> np.ndarray:
    """Return the orbit [x0, F x0, ..., F^n x0] of F_theta, length n + 1.

    Raises DomainError if an iterate leaves (0, 1), which can only happen at
    theta = 4 when the orbit lands on the vertex.
    """
    theta = _check_theta(theta)
    x0 = _check_state(x0)
    if n < 0:
        raise ValueError("n must be nonnegative")
    orbit = np.empty(n + 1)
    orbit[0] = x = x0
    for k in range(1, n + 1):
        x = theta * x * (1.0 - x)
        if not (0.0 < x < 1.0):
            raise DomainError(
                f"orbit left (0, 1) at step {k} (theta = {theta}); "
                "the critical orbit of theta = 4 is absorbing"
            )
        orbit[k] = x
    return orbit


def fixed_point(theta: float) -> float | None:
    """The unique fixed point 1 - 1/theta in (0, 1), or None for theta <= 1."""
    theta = _check_theta(theta)
    if theta <= 1.0:
        return None
    return 1.0 - 1.0 / theta


@dataclass(frozen=True)
class PeriodicOrbit:
    """An attractive cycle of F_theta.

    points are sorted ascending; the cycle order is recoverable by applying
    the map.  multiplier is the derivative of F_theta^m along the cycle,
    Lambda = prod theta*(1 - 2*x_i); the orbit is attractive iff |Lambda| < 1.
    """

    theta: float
    period: int
    points: tuple[float, ...]
    multiplier: float

    def __post_init__(self):
        if self.period < 1 or len(self.points) != self.period:
            raise ValueError("period must match the number of orbit points")
        if any(not (0.0 < p < 1.0) for p in self.points):
            raise ValueError("orbit points must lie in (0, 1)")
        if list(self.points) != sorted(self.points):
            raise ValueError("orbit points must be sorted ascending")

    @property
    def attractive(self) -> bool:
        return abs(self.multiplier) < 1.0

    @property
    def largest_point(self) -> float:
        """q(theta), the largest point of the cycle."""
        return self.points[-1]

    def cycle_order(self) -> tuple[float, ...]:
        """Points in dynamical order starting from the smallest one."""
        out = [self.points[0]]
        x = self.points[0]
        for _ in range(self.period - 1):
            x = self.theta * x * (1.0 - x)
            out.append(x)
        return tuple(out)


def _orbit_multiplier(theta: float, x: float, m: int) -> tuple[float, float]:
    """Return (F_theta^m(x), d/dx F_theta^m(x)) by the chain rule."""
    deriv = 1.0
    for _ in range(m):
        deriv *= theta * (1.0 - 2.0 * x)
        x = theta * x * (1.0 - x)
    return x, deriv


def _newton_refine(theta: float, x: float, m: int) -> float | None:
    """Newton iteration on F_theta^m(x) - x; None on failure."""
    for _ in range(NEWTON_MAX_ITER):
        fx, dfx = _orbit_multiplier(theta, x, m)
        g = fx - x
        dg = dfx - 1.0
        if abs(g) < NEWTON_TOL:
            return x
        if dg == 0.0:
            return None
        step = g / dg
        x_new = x - step
        if not (0.0 < x_new < 1.0):
            return None
        x = x_new
    fx, _ = _orbit_multiplier(theta, x, m)
    return x if abs(fx - x) < NEWTON_TOL else None


def _minimal_period_ok(theta: float, x: float, m: int) -> bool:
    # reject candidates whose minimal period properly divides m
    for d in range(1, m):
        if m % d == 0:
            fd, _ = _orbit_multiplier(theta, x, d)
            if abs(fd - x) < MIN_PERIOD_TOL:
                return False
    return True


def find_periodic_orbit(
    theta: float,
    m: int,
    seeds=None,
    warmup: int = WARMUP_STEPS,
) -> PeriodicOrbit | None:
    """Locate an attractive period-m orbit of F_theta, or return None.

    Long-run iteration from several seeds produces candidate cycle points;
    Newton refinement on x -> F_theta^m(x) - x polishes them to 1e-12.
    Candidates whose minimal period properly divides m, or whose multiplier
    is not strictly inside the unit interval, are rejected.  None therefore
    means "no attractive orbit of minimal period m found within the search
    budget", not a proof of absence.
    """
    theta = _check_theta(theta)
    if m < 1:
        raise ValueError("period must be >= 1")
    if seeds is None:
        seeds = np.linspace(0.05, 0.95, DEFAULT_SEED_COUNT)
    for seed in seeds:
        x = float(seed)
        ok = True
        for _ in range(warmup):
            x = theta * x * (1.0 - x)
            if not (0.0 < x < 1.0):
                ok = False
                break
        if not ok:
            continue
        root = _newton_refine(theta, x, m)
        if root is None:
            continue
        if not _minimal_period_ok(theta, root, m):
            continue
        _, multiplier = _orbit_multiplier(theta, root, m)
        if not abs(multiplier) < 1.0:
            continue
        points = [root]
        y = root
        for _ in range(m - 1):
            y = theta * y * (1.0 - y)
            points.append(y)
        if len(set(np.round(points, 9))) != m:
            continue
        if any(not (0.0 < p < 1.0) for p in points):
            continue
        return PeriodicOrbit(
            theta=theta,
            period=m,
            points=tuple(sorted(points)),
            multiplier=multiplier,
        )
    return None


def check_transversality(orbit: PeriodicOrbit) -> float:
    """Derivative of F_theta^m(x) - x at the largest orbit point.

    Equals Lambda - 1 and must be strictly negative for an attractive orbit;
    this is the inverse-function-theorem hypothesis behind the local
    diffeomorphism theta -> q(theta).
    """
    if not orbit.attractive:
        raise ValueError("transversality check requires an attractive orbit")
    _, deriv = _orbit_multiplier(orbit.theta, orbit.largest_point, orbit.period)
    return deriv - 1.0


@dataclass
class QTable:
    """Sampled q(theta) over one hyperbolic window, with derivative estimates.

    dq holds centered finite differences (one-sided at the ends); entries are
    NaN at holes, i.e. samples where no attractive period-m orbit was found.
    """

    m: int
    thetas: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    holes: list[float] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        """Strict monotonicity of q and constant sign of dq on non-hole samples."""
        q = self.q[~np.isnan(self.q)]
        if len(q) < 2:
            return False
        diffs = np.diff(q)
        dq = self.dq[~np.isnan(self.dq)]
        return bool(
            (np.all(diffs > 0.0) or np.all(diffs < 0.0))
            and (np.all(dq > 0.0) or np.all(dq < 0.0))
        )


def q_of_theta(theta_range, m: int, n_samples: int) -> QTable:
    """Tabulate q(theta) = largest point of the attractive m-cycle.

    Parameters
    ----------
    theta_range : (lo, hi) pair inside one hyperbolic window
    m : cycle period
    n_samples : number of evenly spaced samples (>= 3 for derivatives)
    """
    lo, hi = float(theta_range[0]), float(theta_range[1])
    if not lo < hi:
        raise ValueError("theta_range must satisfy lo < hi")
    if n_samples < 3:
        raise ValueError("need at least 3 samples for centered differences")
    thetas = np.linspace(lo, hi, n_samples)
    q = np.full(n_samples, np.nan)
    holes: list[float] = []
    for i, th in enumerate(thetas):
        orbit = find_periodic_orbit(th, m)
        if orbit is None:
            holes.append(float(th))
        else:
            q[i] = orbit.largest_point
    dq = np.full(n_samples, np.nan)
    h = thetas[1] - thetas[0]
    for i in range(n_samples):
        if np.isnan(q[i]):
            continue
        left = q[i - 1] if i > 0 else np.nan
        right = q[i + 1] if i < n_samples - 1 else np.nan
        if not np.isnan(left) and not np.isnan(right):
            dq[i] = (right - left) / (2.0 * h)
        elif not np.isnan(right):
            dq[i] = (right - q[i]) / h
        elif not np.isnan(left):
            dq[i] = (q[i] - left) / h
    return QTable(m=m, thetas=thetas, q=q, dq=dq, holes=holes)


@dataclass(frozen=True)
class InvariantInterval:
    """[a, b] with F_theta([a, b]) contained in [a, b] for all theta in [mu, nu].

    Degenerates to a single point when mu = nu = 2 (the band collapses onto
    the fixed point 1/2).
    """

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.a <= self.b < 1.0):
            raise ValueError("invariant interval requires 0 < a <= b < 1")

    def contains(self, x) -> np.ndarray | bool:
        return (self.a <= np.asarray(x)) & (np.asarray(x) <= self.b)


def invariant_interval(mu: float, nu: float) -> InvariantInterval:
    """Invariant interval [min(1 - 1/mu, F_mu(nu/4)), nu/4] for support [mu, nu].

    Requires 1 < mu <= nu < 4.
    """
    mu, nu = float(mu), float(nu)
    if not (1.0 < mu <= nu < 4.0):
        raise DomainError("invariant interval needs 1 < mu <= nu < 4")
    b = nu / 4.0
    a = min(1.0 - 1.0 / mu, mu * b * (1.0 - b))
    return InvariantInterval(a=a, b=b)


def lyapunov_deterministic(
    theta: float, x0: float, n: int, burn_in: int = 0
) -> float:
    """Time-averaged log-derivative (1/(n - burn_in)) sum log|theta*(1 - 2*x_k)|.

    Terms where the orbit sits exactly on the vertex (zero derivative) are
    skipped and the average renormalized; if the orbit escapes (0, 1), which
    only theta = 4 permits, the sum stops early.  Both events trigger a
    RuntimeWarning since they indicate a nongeneric start.
    """
    theta = _check_theta(theta)
    x = _check_state(x0)
    if not n > burn_in:
        raise ValueError("need n > burn_in")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    total = 0.0
    count = 0
    skipped = 0
    for k in range(n):
        if k >= burn_in:
            deriv = abs(theta * (1.0 - 2.0 * x))
            if deriv == 0.0:
                skipped += 1
            else:
                total += math.log(deriv)
                count += 1
        x = theta * x * (1.0 - x)
        if not (0.0 < x < 1.0):
            warnings.warn(
                f"orbit escaped (0, 1) at step {k + 1}; Lyapunov average "
                f"truncated to {count} terms",
                RuntimeWarning,
                stacklevel=2,
            )
            break
    if skipped:
        warnings.warn(
            f"skipped {skipped} vertex terms with zero derivative",
            RuntimeWarning,
            stacklevel=2,
        )
    if count == 0:
        raise ValueError("no usable terms in the Lyapunov average")
    return total / count
