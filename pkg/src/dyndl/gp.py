"""Geometric program solver.

A posynomial f(x) = sum_k c_k * prod_i x_i^a_ik with positive
coefficients and real exponents becomes, after the substitution
y = log x, a log-sum-exp of affine functions

    F(y) = log sum_k exp(b_k + a_k . y),      b_k = log c_k,

which is smooth and convex. Problems minimize a posynomial subject to
posynomial constraints f_j(x) <= 1, i.e. F_j(y) <= 0, inside a positive
box. They are solved to global optimality with a log-barrier interior
scheme: damped Newton with backtracking line search on

    t * F_0(y) - sum_j log(-F_j(y)) - box barriers,

multiplying the barrier weight t by 10 per outer stage until the
duality-gap estimate m/t drops below the requested tolerance. Because
F_0 is the log of the true objective, a gap of rel_tolerance in F_0
bounds the *relative* objective error directly.

A phase-1 slack minimization finds a strictly feasible start (or
certifies infeasibility). Everything is deterministic: fixed iteration
order, no randomized components.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import PointOutOfDomain

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class Monomial:
    """c * prod x_i^a_i with c > 0; exponents sparse over variable index."""

    coefficient: float
    exponents: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if self.coefficient <= 0:
            raise ValueError(f"monomial coefficient must be > 0, got {self.coefficient}")

    @classmethod
    def make(cls, coefficient: float, exponents: Mapping[int, float]) -> "Monomial":
        items = tuple(sorted((int(i), float(a)) for i, a in exponents.items() if a != 0.0))
        return cls(float(coefficient), items)

    def evaluate(self, x: Sequence[float]) -> float:
        v = self.coefficient
        for i, a in self.exponents:
            v *= x[i] ** a
        return v


@dataclass(frozen=True)
class Posynomial:
    terms: tuple[Monomial, ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("posynomial needs at least one term")

    @classmethod
    def make(cls, terms: Sequence[tuple[float, Mapping[int, float]]]) -> "Posynomial":
        return cls(tuple(Monomial.make(c, e) for c, e in terms))

    def evaluate(self, x: Sequence[float]) -> float:
        return sum(t.evaluate(x) for t in self.terms)

    def variables(self) -> list[int]:
        return sorted({i for t in self.terms for i, _ in t.exponents})


def monomial(coefficient: float, exponents: Mapping[int, float]) -> Posynomial:
    return Posynomial((Monomial.make(coefficient, exponents),))


@dataclass(frozen=True)
class GPProblem:
    n_vars: int
    objective: Posynomial
    constraints: tuple[Posynomial, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != self.n_vars or len(self.upper) != self.n_vars:
            raise ValueError("bounds must cover every variable")
        for lo, hi in zip(self.lower, self.upper):
            if lo <= 0 or hi <= 0 or lo > hi:
                raise ValueError(f"bounds must satisfy 0 < lower <= upper, got [{lo}, {hi}]")


@dataclass(frozen=True)
class GPOptions:
    rel_tolerance: float = 1e-6
    feas_tolerance: float = 1e-8
    max_iterations: int = 500  # outer barrier stages


@dataclass
class GPSolution:
    values: np.ndarray
    objective_value: float
    status: str
    iterations: int
    trace: list = field(default_factory=list)


class _Compiled:
    """One posynomial as arrays over its own (local) variable support."""

    __slots__ = ("vars", "A", "b")

    def __init__(self, posy: Posynomial):
        self.vars = np.array(posy.variables(), dtype=int)
        pos = {v: k for k, v in enumerate(self.vars)}
        self.A = np.zeros((len(posy.terms), len(self.vars)))
        self.b = np.empty(len(posy.terms))
        for r, term in enumerate(posy.terms):
            self.b[r] = np.log(term.coefficient)
            for i, a in term.exponents:
                self.A[r, pos[i]] = a

    def value(self, y: np.ndarray) -> float:
        z = self.b + self.A @ y[self.vars]
        zmax = z.max()
        return float(zmax + np.log(np.exp(z - zmax).sum()))

    def value_grad(self, y: np.ndarray):
        z = self.b + self.A @ y[self.vars]
        zmax = z.max()
        w = np.exp(z - zmax)
        total = w.sum()
        w /= total
        return float(zmax + np.log(total)), self.A.T @ w

    def value_grad_hess(self, y: np.ndarray):
        z = self.b + self.A @ y[self.vars]
        zmax = z.max()
        w = np.exp(z - zmax)
        total = w.sum()
        w /= total
        g = self.A.T @ w
        h = (self.A * w[:, None]).T @ self.A - np.outer(g, g)
        return float(zmax + np.log(total)), g, h


class _Stack:
    """All constraint posynomials stacked for vectorized value evaluation."""

    __slots__ = ("T", "b", "starts", "count")

    def __init__(self, compiled: list[_Compiled], n_vars: int):
        self.count = len(compiled)
        rows = sum(len(c.b) for c in compiled)
        self.T = np.zeros((rows, n_vars))
        self.b = np.empty(rows)
        starts = []
        r = 0
        for c in compiled:
            starts.append(r)
            k = len(c.b)
            self.T[r:r + k, c.vars] = c.A
            self.b[r:r + k] = c.b
            r += k
        self.starts = np.array(starts, dtype=int)

    def values(self, y: np.ndarray) -> np.ndarray:
        """F_j(y) for every constraint, one pass."""
        if self.count == 0:
            return np.empty(0)
        z = self.b + self.T @ y
        zmax = np.maximum.reduceat(z, self.starts)
        rep = np.repeat(zmax, np.diff(np.append(self.starts, len(z))))
        sums = np.add.reduceat(np.exp(z - rep), self.starts)
        return zmax + np.log(sums)


class _LogDomain:
    def __init__(self, problem: GPProblem):
        lo = np.log(np.asarray(problem.lower, dtype=float))
        hi = np.log(np.asarray(problem.upper, dtype=float))
        pinch = hi - lo < 1e-12
        # equal bounds pin a variable; widen a hair so the barrier stays finite
        lo[pinch] -= 5e-13
        hi[pinch] += 5e-13
        self.lo = lo
        self.hi = hi
        self.center = 0.5 * (lo + hi)

    def strictly_inside(self, y: np.ndarray) -> bool:
        return bool(np.all(y > self.lo) and np.all(y < self.hi))

    def barrier(self, y: np.ndarray) -> float:
        return float(-np.log(y - self.lo).sum() - np.log(self.hi - y).sum())

    def barrier_grad_hess(self, y: np.ndarray):
        a = y - self.lo
        b = self.hi - y
        grad = -1.0 / a + 1.0 / b
        hess = 1.0 / a**2 + 1.0 / b**2
        return grad, hess


def _newton_solve(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    reg = 0.0
    for _ in range(8):
        try:
            h = hess if reg == 0.0 else hess + reg * np.eye(len(grad))
            step = np.linalg.solve(h, -grad)
            if np.all(np.isfinite(step)):
                return step
        except np.linalg.LinAlgError:
            pass
        reg = max(reg * 10.0, 1e-10 * max(1.0, float(np.abs(np.diag(hess)).max())))
    return -grad  # fall back to plain gradient descent


def _minimize_barrier(value_fn, grad_hess_fn, y0, max_inner=200, tol=1e-11, stop_fn=None):
    """Damped Newton with backtracking.

    value_fn returns +inf outside the domain. Returns (y, converged,
    inner_count); stop_fn short-circuits as soon as it accepts a point.
    """
    y = y0.copy()
    f = value_fn(y)
    for it in range(max_inner):
        if stop_fn is not None and stop_fn(y):
            return y, True, it
        grad, hess = grad_hess_fn(y)
        step = _newton_solve(hess, grad)
        decrement = float(-grad @ step)
        if decrement <= 2.0 * tol:
            return y, True, it
        t_step = 1.0
        accepted = False
        while t_step >= 1e-14:
            cand = y + t_step * step
            f_cand = value_fn(cand)
            if f_cand <= f - 0.25 * t_step * decrement + 1e-14 * abs(f):
                y = cand
                f = f_cand
                accepted = True
                break
            t_step *= 0.5
        if not accepted:
            # stalled by rounding; certified if the decrement is already tiny
            return y, decrement <= max(1e-6, 2.0 * tol), it
    return y, False, max_inner


def _phase1(cons: list[_Compiled], stack: _Stack, dom: _LogDomain, options: GPOptions):
    """Minimize slack s with F_j(y) <= s; strictly feasible y or None."""
    n = len(dom.lo)
    y = dom.center.copy()
    s0 = float(stack.values(y).max()) + 1.0
    s_hi = s0 + 1.0
    z = np.concatenate([y, [s0]])
    target = -10.0 * options.feas_tolerance

    def value(zv):
        yv, sv = zv[:n], float(zv[n])
        if not (dom.strictly_inside(yv) and sv < s_hi):
            return np.inf
        r = sv - stack.values(yv)
        if np.any(r <= 0.0):
            return np.inf
        return float(t * sv + dom.barrier(yv) - np.log(s_hi - sv) - np.log(r).sum())

    def grad_hess(zv):
        yv, sv = zv[:n], float(zv[n])
        grad = np.zeros(n + 1)
        hess = np.zeros((n + 1, n + 1))
        grad[n] += t + 1.0 / (s_hi - sv)
        hess[n, n] += 1.0 / (s_hi - sv) ** 2
        bg, bh = dom.barrier_grad_hess(yv)
        grad[:n] += bg
        hess[:n, :n] += np.diag(bh)
        for c in cons:
            fj, gj, hj = c.value_grad_hess(yv)
            r = sv - fj
            gfull = np.zeros(n + 1)
            gfull[c.vars] = -gj
            gfull[n] = 1.0
            grad += -gfull / r
            hess += np.outer(gfull, gfull) / r**2
            hess[np.ix_(c.vars, c.vars)] += hj / r
        return grad, hess

    def feasible_enough(zv):
        return float(zv[n]) < target

    t = 1.0
    m = stack.count + 2 * n + 1
    for _ in range(options.max_iterations):
        z, _, _ = _minimize_barrier(value, grad_hess, z, stop_fn=feasible_enough)
        yv, sv = z[:n], float(z[n])
        if sv < target:
            return yv
        if m / t < 0.1 * options.feas_tolerance:
            break
        t *= 10.0
    yv, sv = z[:n], float(z[n])
    if sv < -options.feas_tolerance and float(stack.values(yv).max()) < -options.feas_tolerance:
        return yv
    return None


def solve_gp(problem: GPProblem, options: GPOptions | None = None,
             collect_trace: bool = False) -> GPSolution:
    """Solve a GP to global optimality.

    Returns status "optimal" with the certified point, "infeasible" when
    phase 1 proves the feasible set empty within tolerance, or
    "max_iterations" when convergence was not certified (the point is
    still reported but never labeled optimal).
    """
    options = options or GPOptions()
    dom = _LogDomain(problem)
    objective = _Compiled(problem.objective)
    cons = [_Compiled(c) for c in problem.constraints]
    stack = _Stack(cons, problem.n_vars)
    trace: list = []

    y = dom.center.copy()
    if cons and float(stack.values(y).max()) >= -options.feas_tolerance:
        feasible = _phase1(cons, stack, dom, options)
        if feasible is None:
            return GPSolution(np.exp(y), float("nan"), INFEASIBLE, 0, trace)
        y = feasible

    def value(yv):
        if not dom.strictly_inside(yv):
            return np.inf
        fv = stack.values(yv)
        if fv.size and fv.max() >= 0.0:
            return np.inf
        total = t * objective.value(yv) + dom.barrier(yv)
        if fv.size:
            total -= np.log(-fv).sum()
        return float(total)

    def grad_hess(yv):
        _, g0, h0 = objective.value_grad_hess(yv)
        grad = np.zeros(len(yv))
        hess = np.zeros((len(yv), len(yv)))
        grad[objective.vars] += t * g0
        hess[np.ix_(objective.vars, objective.vars)] += t * h0
        bg, bh = dom.barrier_grad_hess(yv)
        grad += bg
        hess += np.diag(bh)
        for c in cons:
            fj, gj, hj = c.value_grad_hess(yv)
            r = -fj
            grad[c.vars] += gj / r
            hess[np.ix_(c.vars, c.vars)] += np.outer(gj, gj) / r**2 + hj / r
        return grad, hess

    m = stack.count + 2 * problem.n_vars
    t = 1.0
    status = MAX_ITERATIONS
    outer = 0
    for outer in range(1, options.max_iterations + 1):
        # a Newton decrement of sqrt(2 eps) leaves ~eps barrier suboptimality,
        # which is eps/t in log-objective units; scale the threshold with t
        inner_tol = max(1e-12, 0.02 * options.rel_tolerance * t)
        y, converged_inner, inner_count = _minimize_barrier(value, grad_hess, y,
                                                            tol=inner_tol)
        gap = m / t
        if collect_trace:
            trace.append({
                "stage": outer,
                "barrier_weight": t,
                "gap_estimate": gap,
                "objective": float(np.exp(objective.value(y))),
                "newton_iterations": inner_count,
            })
        if gap <= options.rel_tolerance:
            status = OPTIMAL if converged_inner else MAX_ITERATIONS
            break
        t *= 10.0

    x = np.exp(y)
    return GPSolution(
        values=x,
        objective_value=problem.objective.evaluate(x),
        status=status,
        iterations=outer,
        trace=trace,
    )


def gradient_check(problem: GPProblem, point: Sequence[float], step: float = 1e-6) -> float:
    """Worst relative gap between analytic and central-FD log-space gradients.

    Covers the objective and every constraint at the given (strictly
    interior) point; raises PointOutOfDomain otherwise.
    """
    x = np.asarray(point, dtype=float)
    if len(x) != problem.n_vars:
        raise PointOutOfDomain("point has wrong dimension")
    if not (np.all(x > problem.lower) and np.all(x < problem.upper)):
        raise PointOutOfDomain("point must lie strictly inside the bounds")
    y = np.log(x)
    worst = 0.0
    for posy in (problem.objective, *problem.constraints):
        comp = _Compiled(posy)
        _, g_local = comp.value_grad(y)
        grad = np.zeros(problem.n_vars)
        grad[comp.vars] = g_local
        for i in range(problem.n_vars):
            yp = y.copy()
            yp[i] += step
            ym = y.copy()
            ym[i] -= step
            fd = (comp.value(yp) - comp.value(ym)) / (2.0 * step)
            err = abs(grad[i] - fd) / max(1.0, abs(grad[i]), abs(fd))
            worst = max(worst, err)
    return worst
