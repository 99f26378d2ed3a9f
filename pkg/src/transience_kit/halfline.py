"""Lyapunov certificate searches for random walks on the half line.

The walk adds an integer increment each step and reflects at 0 from
below; mass at or above the truncation level is killed. Two searches are
provided. The exponential one scans a rate grid for a negative value of
``xi(s) = sum_y (exp(-s y) - 1) Gamma(y)`` and turns the minimizer into a
geometric drift weight ``exp(-s0 x)`` whose closed-form tail makes the
boundary rows exact, so the resulting certificate is not confined to the
window. The polynomial one searches the family ``(c x + a)^{-ell} + 1``
together with a hyperbolic companion weight and hands the first passing
pair to the algebraic-system generator; its inequalities are checked on
truncated states only and the certificate is tagged accordingly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import drift
from .kernel import IncrementDistribution, StateSet, truncate

#: Overflow guard: the rate grid keeps exp(s * max negative offset) below this.
EXP_CAP = 1e15


def default_rate_grid(walk: IncrementDistribution, points: int = 64) -> np.ndarray:
    """Log-spaced rates from 1e-3 up to the overflow-safe maximum."""
    neg = [-o for o in walk.offsets if o < 0]
    cap = np.log(EXP_CAP) / max(neg) if neg else 50.0
    return np.geomspace(1e-3, cap, points)


def xi_curve(walk: IncrementDistribution, s_values: np.ndarray) -> np.ndarray:
    """``xi(s)`` for each rate; ``xi(0) = 0`` identically."""
    s = np.asarray(s_values, dtype=float)
    y = np.asarray(walk.offsets, dtype=float)
    return (np.expm1(-np.outer(s, y)) * np.asarray(walk.pmf)).sum(axis=1)


@dataclass(frozen=True)
class ExponentialSearch:
    """Outcome of the exponential-weight rate scan."""

    s_values: np.ndarray
    xi_values: np.ndarray
    drift_mean: float
    ok: bool
    reason: str | None = None
    s0: float | None = None
    xi0: float | None = None
    rate: float | None = None
    certificate: drift.DriftCertificate | None = None

    def to_json(self) -> dict:
        out = {"ok": self.ok, "drift_mean": float(self.drift_mean),
               "grid_points": int(len(self.s_values))}
        if self.ok:
            out.update({"s0": float(self.s0), "xi": float(self.xi0),
                        "rate": float(self.rate)})
        else:
            out["reason"] = self.reason
        return out


def exp_certificate(walk: IncrementDistribution, n_states: int,
                    s_grid: np.ndarray | None = None) -> ExponentialSearch:
    """Scan rates for a contracted exponential weight and check it.

    Picks the grid minimizer of ``xi`` among points with ``xi < 0`` (ties
    resolved toward the smaller rate), then checks ``P W <= (xi + 1) W``
    off ``{0}`` and ``P W(0) <= xi + 1`` on the truncated kernel, with
    boundary rows completed by the closed-form tail. When no grid point
    goes negative the search reports failure instead of raising; a
    nonpositive mean increment guarantees that outcome.
    """
    if s_grid is None:
        s_grid = default_rate_grid(walk)
    s_grid = np.asarray(s_grid, dtype=float)
    xi = xi_curve(walk, s_grid)
    beta = walk.mean
    neg = xi < 0.0
    if not neg.any():
        reason = ("mean increment is not positive" if beta <= 0
                  else "no negative xi on the rate grid")
        return ExponentialSearch(s_grid, xi, beta, ok=False, reason=reason)
    best = int(np.argmin(np.where(neg, xi, np.inf)))
    ties = np.nonzero(np.abs(xi - xi[best]) <= 0.0)[0]
    best = int(ties.min())
    s0 = float(s_grid[best])
    lam = float(xi[best] + 1.0)
    ker = truncate(walk, n_states)
    x = np.arange(n_states)
    W = np.exp(-s0 * x)
    cert = drift.check_geometric(ker, [0], W, lam, lam, row_source=walk,
                                 w_fn=lambda j: float(np.exp(-s0 * j)),
                                 tail_name=f"exp(-{s0:.6g} x)")
    return ExponentialSearch(s_grid, xi, beta, ok=True, s0=s0,
                             xi0=float(xi[best]), rate=lam, certificate=cert)


@dataclass(frozen=True)
class PolynomialSearch:
    """Outcome of the polynomial-weight parameter search."""

    ell: int
    ok: bool
    reason: str | None = None
    x0: int | None = None
    c: float | None = None
    a: float | None = None
    s: float | None = None
    certificate: drift.DriftCertificate | None = None
    best: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"ok": self.ok, "ell": int(self.ell)}
        if self.ok:
            out.update({"x0": int(self.x0), "c": float(self.c),
                        "a": float(self.a), "s": float(self.s),
                        "d": float(self.certificate.d),
                        "b": float(self.certificate.bound)})
        else:
            out["reason"] = self.reason
            out["best_margins"] = {k: float(v) for k, v in sorted(self.best.items())}
        return out


def reflection_level(walk: IncrementDistribution) -> int:
    """Smallest level whose visible increments have positive mean."""
    y = np.asarray(walk.offsets, dtype=float)
    p = np.asarray(walk.pmf)
    for x0 in range(0, int(-min(min(walk.offsets), 0)) + 1):
        if float((y * p)[y >= -x0].sum()) > 0:
            return x0
    return -1


def poly_certificate(walk: IncrementDistribution, ell: int, n_states: int,
                     c_grid: np.ndarray | None = None,
                     a_grid: np.ndarray | None = None,
                     s_grid: np.ndarray | None = None) -> PolynomialSearch:
    """Search ``(c, a)`` and a companion rate for the order-``ell`` system.

    The weight ``V(x) = (c x + a)^{-ell} + 1`` must satisfy the descent
    premise above the reflection level ``x0``, and the companion
    ``W(x) = (s x0 + 1)/(s x + 1)`` (1 on the target block) must be
    superharmonic there with ``max_A P W < 1``. Both are evaluated on the
    truncated kernel and the first passing combination is expanded by the
    algebraic-system generator. Grids descend, so the reported parameters
    are the largest that pass; failures carry the best margins seen.
    """
    if ell < 2:
        return PolynomialSearch(ell, ok=False,
                                reason="polynomial route needs ell >= 2")
    beta = walk.mean
    if beta <= 0:
        return PolynomialSearch(ell, ok=False,
                                reason="mean increment is not positive")
    x0 = reflection_level(walk)
    if x0 < 0 or x0 >= n_states - 1:
        return PolynomialSearch(ell, ok=False,
                                reason="no level with positive visible drift")
    if c_grid is None:
        c_grid = np.geomspace(1e-2, 1e-8, 13)
    if a_grid is None:
        a_grid = np.geomspace(1e-1, 1e-9, 17)
    if s_grid is None:
        s_grid = np.geomspace(1e-3, 10.0, 25)
    ker = truncate(walk, n_states)
    A = StateSet.of(range(x0 + 1))
    off = ~A.mask(n_states)
    x = np.arange(n_states, dtype=float)
    best: dict[str, float] = {"descent": -np.inf, "companion": -np.inf}
    s_pass = None
    for s in s_grid:
        W = np.where(off, (s * x0 + 1.0) / (s * x + 1.0), 1.0)
        pw = ker.apply(W)
        m1 = float((W - pw)[off].min())
        m2 = 1.0 - float(pw[A.mask(n_states)].max())
        margin = min(m1, m2)
        if margin > best["companion"]:
            best["companion"] = margin
        if m1 >= -drift.MARGIN_TOL and m2 > 0:
            s_pass = float(s)
            W_pass = W
            break
    if s_pass is None:
        return PolynomialSearch(ell, ok=False, x0=x0, best=best,
                                reason="no companion rate passed")
    for c in c_grid:
        for a in a_grid:
            V = (c * x + a) ** (-float(ell)) + 1.0
            pv = ker.apply(V)
            m = float((V - ell * V ** (1.0 - 1.0 / ell) - pv)[off].min())
            if m > best["descent"]:
                best["descent"] = m
            if m < -drift.MARGIN_TOL:
                continue
            cert = drift.generate_algebraic(ker, A, V, W_pass, ell)
            if cert.verdict == "holds":
                return PolynomialSearch(ell, ok=True, x0=x0, c=float(c),
                                        a=float(a), s=s_pass,
                                        certificate=cert, best=best)
    return PolynomialSearch(ell, ok=False, x0=x0, s=s_pass, best=best,
                            reason="no (c, a) pair passed the descent premise")
