"""Newton's method, parameter continuation, and real roots of cubics.

The Newton driver works on scalars, flat numpy arrays, and ScalarField
values alike.  Linear subproblems use a banded solve when the Jacobian is
tridiagonal (1D steppers) and a sparse LU factorization otherwise, with one
round of iterative refinement so the linear residual stays below 1e-12
relative to the right-hand side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError
from .fields import ScalarField

__all__ = [
    "NewtonConfig",
    "NewtonReport",
    "HomotopyConfig",
    "CubicRoots",
    "newton_solve",
    "fd_jacobian",
    "homotopy_path",
    "delta_schedule",
    "real_cubic_roots",
]

_BACKTRACK_LIMIT = 40
_HALVING_LIMIT = 20


@dataclass(frozen=True)
class NewtonConfig:
    """Newton iteration controls.

    damping is an optional backtracking factor in (0, 1]; 1 means every
    full step is accepted as-is.
    """

    tol: float = 1e-10
    max_iter: int = 50
    damping: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.damping <= 1.0):
            raise ConfigurationError("damping must lie in (0, 1]")
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigurationError("tol must be > 0 and max_iter >= 1")


@dataclass(frozen=True)
class NewtonReport:
    """Outcome of one Newton solve (or of the last solve on a continuation path).

    history holds the residual inf-norm before each accepted step and after
    the last one.  delta is continuation metadata: the parameter value the
    returned iterate belongs to, when the solve was driven by homotopy_path.
    """

    iterations: int
    residual: float
    converged: bool
    history: tuple[float, ...]
    message: str = ""
    delta: float | None = None


def _linf(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def _solve_linear(jac, rhs: np.ndarray) -> np.ndarray:
    """Solve jac @ x = rhs with refinement to relative residual <= 1e-12."""
    if sp.issparse(jac):
        coo = jac.tocoo()
        bandwidth = int(np.max(np.abs(coo.row - coo.col))) if coo.nnz else 0
        if bandwidth <= 1:
            n = jac.shape[0]
            ab = np.zeros((3, n))
            dia = jac.todia()
            for off, data in zip(dia.offsets, dia.data):
                if off == 0:
                    ab[1] = data
                elif off == 1:
                    ab[0] = data
                elif off == -1:
                    ab[2] = data
            solve = lambda b: scipy.linalg.solve_banded((1, 1), ab, b)
        else:
            lu = spla.splu(jac.tocsc())
            solve = lu.solve
        apply = lambda x: jac @ x
    else:
        dense = np.atleast_2d(np.asarray(jac, dtype=float))
        lu_piv = scipy.linalg.lu_factor(dense)
        solve = lambda b: scipy.linalg.lu_solve(lu_piv, b)
        apply = lambda x: dense @ x
    x = solve(rhs)
    if not np.all(np.isfinite(x)):
        raise np.linalg.LinAlgError("singular or ill-conditioned Jacobian")
    scale = max(_linf(rhs), 1e-300)
    resid = rhs - apply(x)
    if _linf(resid) > 1e-12 * scale:
        x = x + solve(resid)
    return x


def _newton_core(residual, jacobian, x0: np.ndarray, cfg: NewtonConfig):
    x = np.array(x0, dtype=float)
    r = np.asarray(residual(x), dtype=float)
    rnorm = _linf(r)
    history = [rnorm]
    if not math.isfinite(rnorm):
        return x0, NewtonReport(0, rnorm, False, tuple(history), "residual not finite at guess")
    if rnorm <= cfg.tol:
        return x, NewtonReport(0, rnorm, True, tuple(history))
    for it in range(1, cfg.max_iter + 1):
        try:
            step = _solve_linear(jacobian(x), -r)
        except (np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
            return x, NewtonReport(it - 1, rnorm, False, tuple(history), f"linear solve failed: {exc}")
        x_new = x + step
        r_new = np.asarray(residual(x_new), dtype=float)
        rn_new = _linf(r_new)
        if cfg.damping < 1.0:
            lam, tries = 1.0, 0
            while (not math.isfinite(rn_new) or rn_new >= rnorm) and tries < _BACKTRACK_LIMIT:
                lam *= cfg.damping
                x_new = x + lam * step
                r_new = np.asarray(residual(x_new), dtype=float)
                rn_new = _linf(r_new)
                tries += 1
        if not (math.isfinite(rn_new) and np.all(np.isfinite(x_new))):
            return x, NewtonReport(it - 1, rnorm, False, tuple(history), "iterate diverged")
        x, r, rnorm = x_new, r_new, rn_new
        history.append(rnorm)
        if rnorm <= cfg.tol:
            return x, NewtonReport(it, rnorm, True, tuple(history))
    return x, NewtonReport(cfg.max_iter, rnorm, False, tuple(history), "max iterations reached")


def newton_solve(residual, jacobian, guess, cfg: NewtonConfig | None = None):
    """Solve residual(x) = 0 by Newton's method from the given guess.

    Parameters
    ----------
    residual, jacobian:
        Functions of the unknown.  For array/field unknowns the Jacobian
        must return a square matrix (sparse or dense); for scalar unknowns
        it returns the derivative.
    guess:
        float, flat ndarray, or ScalarField; the solution has the same type.
    cfg:
        NewtonConfig; defaults to tol=1e-10, max_iter=50, undamped.

    Returns
    -------
    (solution, NewtonReport).  Non-convergence is reported, not raised; the
    returned iterate is the last finite one.
    """
    cfg = cfg or NewtonConfig()
    if isinstance(guess, ScalarField):
        grid = guess.grid

        def res(v):
            out = residual(ScalarField(grid, v))
            return out.values if isinstance(out, ScalarField) else out

        x, rep = _newton_core(res, lambda v: jacobian(ScalarField(grid, v)), guess.values, cfg)
        return ScalarField(grid, x), rep
    if np.isscalar(guess):
        def res(v):
            return np.atleast_1d(float(residual(float(v[0]))))

        def jac(v):
            return np.asarray(jacobian(float(v[0])), dtype=float).reshape(1, 1)

        x, rep = _newton_core(res, jac, np.array([float(guess)]), cfg)
        return float(x[0]), rep
    x, rep = _newton_core(residual, jacobian, np.asarray(guess, dtype=float), cfg)
    return x, rep


def fd_jacobian(residual, u, h_fd: float | None = None) -> np.ndarray:
    """Dense central-difference Jacobian of residual at u (testing utility)."""
    if isinstance(u, ScalarField):
        grid = u.grid
        base = u.values

        def f(v):
            out = residual(ScalarField(grid, v))
            return out.values if isinstance(out, ScalarField) else np.asarray(out, float)
    else:
        base = np.asarray(u, dtype=float)
        f = lambda v: np.asarray(residual(v), dtype=float)
    m = base.size
    h = h_fd if h_fd is not None else 1e-6 * (1.0 + _linf(base))
    # snap to a power of two so u +- h and the difference quotient carry no
    # representation error of their own
    h = 2.0 ** round(math.log2(h))
    jac = np.empty((m, m))
    for j in range(m):
        up = base.copy()
        dn = base.copy()
        up[j] += h
        dn[j] -= h
        jac[:, j] = (f(up) - f(dn)) / (2.0 * h)
    return jac


@dataclass(frozen=True)
class HomotopyConfig:
    """Continuation schedule from delta_start to delta_end.

    steps counts schedule increments (geometric when the endpoints share a
    sign, linear otherwise).  With adaptive=True a failed Newton solve
    retries on geometrically bisected sub-increments, up to 20 insertions.
    """

    delta_end: float
    delta_start: float = 1e-3
    steps: int = 32
    adaptive: bool = True

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ConfigurationError("steps must be >= 1")
        if not (math.isfinite(self.delta_start) and math.isfinite(self.delta_end)):
            raise ConfigurationError("delta_start and delta_end must be finite")


def delta_schedule(cfg: HomotopyConfig) -> list[float]:
    """Schedule values from delta_start to delta_end inclusive (deduplicated)."""
    a, b, m = cfg.delta_start, cfg.delta_end, cfg.steps
    if a == b:
        return [b]
    if a != 0.0 and b != 0.0 and (a > 0) == (b > 0):
        ratio = b / a
        pts = [a * ratio ** (i / m) for i in range(m + 1)]
    else:
        pts = [a + (b - a) * i / m for i in range(m + 1)]
    pts[0], pts[-1] = a, b
    return pts


def _geometric_mid(a: float, b: float) -> float:
    if a != 0.0 and b != 0.0 and (a > 0) == (b > 0):
        return math.copysign(math.sqrt(a * b), a)
    return 0.5 * (a + b)


def march_deltas(solve_at: Callable, schedule: Sequence[float], adaptive: bool):
    """Drive solve_at(delta, state) -> (state, NewtonReport) along a schedule.

    Warm-starts each solve from the previous state.  On failure, inserts
    geometric midpoints between the last good delta and the failed target
    (at most 20 insertions overall) before giving up.  Returns the final
    state and the last report, with report.delta set to the delta of the
    state actually returned.
    """
    state = None
    last_good: float | None = None
    report = NewtonReport(0, 0.0, True, (0.0,))
    budget = _HALVING_LIMIT
    for target in schedule:
        pending = [target]
        while pending:
            t = pending[-1]
            new_state, report = solve_at(t, state)
            if report.converged:
                state, last_good = new_state, t
                pending.pop()
                continue
            if not adaptive or budget == 0 or last_good is None:
                return state, replace(report, delta=last_good)
            budget -= 1
            pending.append(_geometric_mid(last_good, t))
    return state, replace(report, delta=last_good)


def homotopy_path(problem, seed, cfg: HomotopyConfig, newton_cfg: NewtonConfig | None = None):
    """March a Newton solve along the delta schedule, warm-starting each solve.

    problem(delta) must return a (residual, jacobian) pair for that delta.
    With steps=1 and delta_start == delta_end this reduces to a single
    newton_solve from the seed, bitwise identical to calling it directly.

    Returns the solution at delta_end and the last NewtonReport; on failure
    the report carries converged=False and delta = last good value, and the
    returned solution is the last good iterate (the seed if none).
    """
    ncfg = newton_cfg or NewtonConfig()

    def solve_at(delta, state):
        residual, jacobian = problem(delta)
        start = seed if state is None else state
        return newton_solve(residual, jacobian, start, ncfg)

    state, report = march_deltas(solve_at, delta_schedule(cfg), cfg.adaptive)
    if state is None:
        state = seed
    return state, report


@dataclass(frozen=True)
class CubicRoots:
    """Real roots of a real cubic, ascending, with multiplicity preserved.

    discriminant_sign is +1 (three distinct real roots), 0 (repeated root),
    or -1 (one real root); the sign is zeroed when the discriminant is
    below 1e-12 relative to its own terms.
    """

    real_roots: tuple[float, ...]
    discriminant_sign: int
    discriminant: float


def real_cubic_roots(a3: float, a2: float, a1: float, a0: float) -> CubicRoots:
    """All real roots of a3 x^3 + a2 x^2 + a1 x + a0.

    Closed-form: trigonometric branch when all roots are real, Cardano
    otherwise, each root polished by one safeguarded Newton step.  Raises
    ConfigurationError when a3 == 0.
    """
    if a3 == 0.0:
        raise ConfigurationError("leading coefficient must be nonzero")
    terms = (
        18.0 * a3 * a2 * a1 * a0,
        -4.0 * a2 ** 3 * a0,
        a2 ** 2 * a1 ** 2,
        -4.0 * a3 * a1 ** 3,
        -27.0 * a3 ** 2 * a0 ** 2,
    )
    disc = math.fsum(terms)
    scale = sum(abs(t) for t in terms)
    if abs(disc) <= 1e-12 * scale:
        sign = 0
    else:
        sign = 1 if disc > 0 else -1

    b, c, d = a2 / a3, a1 / a3, a0 / a3
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    shift = -b / 3.0

    if sign > 0:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = min(1.0, max(-1.0, 3.0 * q / (p * m)))
        theta = math.acos(arg)
        ts = [m * math.cos((theta - 2.0 * math.pi * k) / 3.0) for k in range(3)]
    elif sign == 0:
        # Discriminant zero: either a triple root (p = q = 0) or a double
        # plus a simple root; p <= 0 always holds here.
        p_scale = max(1.0, abs(c), b * b / 3.0)
        if abs(p) <= 1e-9 * p_scale:
            ts = [0.0, 0.0, 0.0]
        else:
            ts = [3.0 * q / p, -1.5 * q / p, -1.5 * q / p]
    else:
        if q == 0.0:
            ts = [0.0]  # p > 0 here, so t (t^2 + p) = 0 has one real root
        else:
            big = math.sqrt(q * q / 4.0 + p ** 3 / 27.0)
            u = np.cbrt(-q / 2.0 - math.copysign(big, q))
            ts = [u - p / (3.0 * u)]

    def poly(x: float) -> float:
        return ((a3 * x + a2) * x + a1) * x + a0

    def polish(x: float) -> float:
        fp = (3.0 * a3 * x + 2.0 * a2) * x + a1
        if fp == 0.0:
            return x
        x2 = x - poly(x) / fp
        return x2 if math.isfinite(x2) and abs(poly(x2)) <= abs(poly(x)) else x

    roots = sorted(polish(t + shift) for t in ts)
    return CubicRoots(tuple(roots), sign, disc)
