"""Minimal nonnegative solutions of monotone fixed point equations.

The equations all have the shape ``g = T g + h`` with ``T`` entrywise
nonnegative and ``h >= 0``. Iterating from ``g = 0`` produces an exactly
monotone sequence (increments are products of nonnegative arrays) whose
limit is the smallest nonnegative solution; hitting-time transforms of a
kernel are instances with ``T`` a weighted restriction of the kernel to
the complement of the target set.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .kernel import StateSet, TruncatedKernel

#: Default sup-norm increment tolerance.
TOL = 1e-10

#: Default iteration cap.
MAX_ITER = 1_000_000

#: Iterates above this are reported as divergent.
CEILING = 1e12


@dataclass(frozen=True)
class MonotoneFixedPointProblem:
    """Data of one equation ``g = T g + h``.

    ``T`` must be entrywise nonnegative and ``h`` nonnegative; both are
    validated at construction.
    """

    T: np.ndarray
    h: np.ndarray
    tol: float = TOL
    max_iter: int = MAX_ITER
    ceiling: float = CEILING

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1] or h.shape != (T.shape[0],):
            raise ValueError("T must be square and h a matching vector")
        if (T < 0).any() or (h < 0).any():
            raise ValueError("T and h must be nonnegative")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "h", h)


@dataclass(frozen=True)
class MinimalSolution:
    """Solver result. ``g`` is a certified lower approximation.

    ``converged`` means the sup-norm increment fell below the tolerance;
    ``diverged`` that an iterate crossed the ceiling, which certifies that
    no finite nonnegative solution exists below the ceiling. The final
    increment bounds the residual ``|T g + h - g|``.
    """

    g: np.ndarray
    iterations: int
    final_increment: float
    converged: bool
    diverged: bool


def solve_minimal(problem: MonotoneFixedPointProblem) -> MinimalSolution:
    """Iterate ``g <- T g + h`` from 0 in increment form.

    Increments satisfy ``delta_{k+1} = T delta_k`` so each iterate is the
    partial sum of a nonnegative series: monotonicity is exact in floating
    point, and the returned iterate's residual is below the stopping
    increment.
    """
    T, h = problem.T, problem.h
    g = np.zeros_like(h)
    delta = h.copy()
    g = g + delta
    inc = float(delta.max(initial=0.0))
    it = 1
    while it < problem.max_iter:
        if g.max(initial=0.0) > problem.ceiling:
            return MinimalSolution(g=g, iterations=it, final_increment=inc,
                                   converged=False, diverged=True)
        if inc < problem.tol:
            return MinimalSolution(g=g, iterations=it, final_increment=inc,
                                   converged=True, diverged=False)
        delta = T @ delta
        g = g + delta
        inc = float(delta.max(initial=0.0))
        it += 1
    diverged = bool(g.max(initial=0.0) > problem.ceiling)
    return MinimalSolution(g=g, iterations=it, final_increment=inc,
                           converged=False, diverged=diverged)


@dataclass(frozen=True)
class HittingTransform:
    """Weighted hitting transforms ``E_x[kappa^sigma]`` and ``E_x[kappa^tau]``.

    ``sigma`` is the first hitting time (zero when starting inside the
    target), ``tau`` the first return time (always at least one); off the
    target set the two coincide. Expectations are restricted to the event
    of ever hitting. ``converged``/``diverged`` report the solver outcome;
    a divergent solve certifies that the weighted expectation is infinite
    on the truncation.
    """

    sigma: np.ndarray
    tau: np.ndarray
    kappa: float
    A: StateSet
    iterations: int
    converged: bool
    diverged: bool


def _restriction(kernel: TruncatedKernel, A: StateSet):
    n = kernel.n_states
    in_mask = A.mask(n)
    idx_off = np.nonzero(~in_mask)[0]
    T = kernel.submatrix(idx_off, idx_off)
    enter = kernel.apply(in_mask.astype(float))   # P(x, A), all x
    return in_mask, idx_off, T, enter


def hitting_exponential(kernel: TruncatedKernel, A, kappa: float,
                        tol: float = TOL, max_iter: int = MAX_ITER) -> HittingTransform:
    """Solve for ``E_x[kappa^{sigma_A}; sigma_A < inf]`` on the truncation.

    The equation lives on the complement of ``A``; inside ``A`` the sigma
    transform is 1. The tau transform follows by one kernel application
    and agrees with the sigma transform off ``A`` (a consistency check
    used in the test-suite). ``kappa`` may be below 1.
    """
    A = StateSet.of(A)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    in_mask, idx_off, T, enter = _restriction(kernel, A)
    n = kernel.n_states
    if len(idx_off) == 0:
        sigma = np.ones(n)
        tau = kappa * enter
        return HittingTransform(sigma=sigma, tau=tau, kappa=float(kappa),
                                A=A, iterations=0, converged=True, diverged=False)
    prob = MonotoneFixedPointProblem(T=kappa * T, h=kappa * enter[idx_off],
                                     tol=tol, max_iter=max_iter)
    sol = solve_minimal(prob)
    sigma = np.where(in_mask, 1.0, 0.0)
    sigma[idx_off] = sol.g
    off_vals = np.where(in_mask, 0.0, sigma)
    tau = kappa * (kernel.apply(off_vals) + enter)
    if sol.diverged:
        sigma[idx_off] = np.inf
        tau = np.full(n, np.inf)
    return HittingTransform(sigma=sigma, tau=tau, kappa=float(kappa), A=A,
                            iterations=sol.iterations,
                            converged=sol.converged, diverged=sol.diverged)


@dataclass(frozen=True)
class PolynomialHitting:
    """Polynomial hitting moments up to order ``ell``.

    ``sigma_levels[k]`` holds ``E_x[(sigma + 1)^k; sigma < inf]`` (level 0
    is the hitting probability, 1 inside the target), ``tau_levels[k]``
    the same for the return time, and ``tau_moments[k]`` the plain moments
    ``E_x[tau^k; tau < inf]`` obtained by binomial inversion.
    """

    sigma_levels: np.ndarray
    tau_levels: np.ndarray
    tau_moments: np.ndarray
    A: StateSet
    converged: bool


def hitting_poly(kernel: TruncatedKernel, A, ell: int,
                 tol: float = TOL, max_iter: int = MAX_ITER) -> PolynomialHitting:
    """Solve the triangular system of polynomial hitting moments.

    Level ``k`` solves ``g = T g + h_k`` where the inhomogeneity collects
    binomially weighted lower-order return moments; levels are solved in
    increasing order, so the system is triangular. Level 0 reproduces the
    return/hitting probabilities.
    """
    A = StateSet.of(A)
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    in_mask, idx_off, T, enter = _restriction(kernel, A)
    n = kernel.n_states
    sigma_levels = np.zeros((ell + 1, n))
    tau_levels = np.zeros((ell + 1, n))
    tau_moments = np.zeros((ell + 1, n))
    ok = True
    for k in range(ell + 1):
        h = enter.copy()
        for j in range(k):
            # E_x[tau^j; tau < inf] restricted off A equals the sigma moment.
            h += comb(k, j) * tau_moments[j]
        if len(idx_off) > 0:
            prob = MonotoneFixedPointProblem(T=T, h=h[idx_off], tol=tol,
                                             max_iter=max_iter)
            sol = solve_minimal(prob)
            ok = ok and sol.converged
            if sol.diverged:
                sigma_levels[k:, :] = np.inf
                tau_levels[k:, :] = np.inf
                tau_moments[k:, :] = np.inf
                return PolynomialHitting(sigma_levels=sigma_levels,
                                         tau_levels=tau_levels,
                                         tau_moments=tau_moments, A=A,
                                         converged=False)
        lvl = np.where(in_mask, 1.0, 0.0)
        if len(idx_off) > 0:
            lvl[idx_off] = sol.g
        sigma_levels[k] = lvl
        off_vals = np.where(in_mask, 0.0, lvl)
        # Return-time level: first-step decomposition with the same
        # inhomogeneity, valid at every start state.
        tau_levels[k] = kernel.apply(off_vals) + h
        # Plain moments by binomial inversion of the (tau + 1) levels.
        m = np.zeros(n)
        for j in range(k + 1):
            m += comb(k, j) * ((-1.0) ** (k - j)) * tau_levels[j]
        tau_moments[k] = m
    return PolynomialHitting(sigma_levels=sigma_levels, tau_levels=tau_levels,
                             tau_moments=tau_moments, A=A, converged=ok)


def hitting_probability(kernel: TruncatedKernel, A,
                        tol: float = TOL) -> np.ndarray:
    """Return probabilities ``L(x, A)`` via the kappa = 1 transform."""
    return hitting_exponential(kernel, A, 1.0, tol=tol).tau
