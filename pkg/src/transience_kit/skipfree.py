"""Explicit transience criteria for skip-free chains.

A chain that climbs at most one level per step admits a passage recursion
whose values drive closed-form criteria: a weighted sum deciding
geometric transience together with an explicit drift weight built from
it, ratio quantities giving return probabilities and polynomial return
moments on stochastic chains, and a pair of sums deciding the strong and
uniform flavours on chains with killing.

Every infinite sum or supremum is evaluated as a monotone partial over
the computed depth, so each reported value is a certified lower bound of
the untruncated quantity. Verdicts follow a three-way vocabulary:
``sup-stabilized`` when the running supremum stopped moving,
``divergence-suspected`` when it still grows strongly, and
``finite-certified-lower-bound`` otherwise. Geometric tail estimates may
sharpen a reported supremum but are always labeled as estimates.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import drift
from .kernel import SkipFreeSpec, truncate

#: Full triangular passage tables are refused above this depth.
MAX_FULL_TABLE = 4096
#: Relative growth of the running sup that keeps a verdict undecided.
STABLE_REL = 1e-6
#: Running-sup growth ratio over the last quarter that suggests divergence.
GROWTH_RATIO = 1.25


@dataclass(frozen=True)
class FTable:
    """Passage recursion values ``F(n, i)`` for ``0 <= i <= n <= depth``.

    The recursion fixes ``F(n, n) = 1`` and, writing ``head(n, k)`` for the
    partial row sums ``sum_{j<=k} p(n, j)`` and ``up(n)`` for ``p(n, n+1)``,

        ``F(n, i) = sum_{k=i}^{n-1} head(n, k) F(k, i) / up(n)``.

    ``F0`` is the ``i = 0`` column, always present. ``full`` holds the
    whole lower triangle when requested. For banded chains (support only
    on the three neighbouring levels) the recursion collapses to the
    one-term product ``F(n, i) = (down(n)/up(n)) F(n-1, i)``.
    """

    depth: int
    F0: np.ndarray
    up: np.ndarray
    banded: bool
    full: np.ndarray | None = None

    def value(self, n: int, i: int) -> float:
        if not (0 <= i <= n <= self.depth):
            raise IndexError(f"need 0 <= i <= n <= {self.depth}")
        if i == 0:
            return float(self.F0[n])
        if self.full is None:
            raise ValueError("table was built without the full triangle")
        return float(self.full[n, i])


def _recursion(rows: list[np.ndarray], need_full: bool) -> FTable:
    depth = len(rows) - 1
    up = np.array([r[i + 1] if len(r) > i + 1 else 0.0
                   for i, r in enumerate(rows)])
    if depth >= 1 and (up[1:] <= 0.0).any():
        bad = 1 + int(np.argmax(up[1:] <= 0.0))
        raise ValueError(f"level {bad} has zero up probability")
    banded = all(
        (rows[n][: max(0, n - 1)] == 0.0).all() for n in range(1, depth + 1)
    )
    F0 = np.ones(depth + 1)
    full = None
    if banded:
        down = np.array([rows[n][n - 1] if n >= 1 else 0.0
                         for n in range(depth + 1)])
        for n in range(1, depth + 1):
            F0[n] = (down[n] / up[n]) * F0[n - 1]
        if need_full:
            full = np.zeros((depth + 1, depth + 1))
            full[0, 0] = 1.0
            for n in range(1, depth + 1):
                full[n, :n] = (down[n] / up[n]) * full[n - 1, :n]
                full[n, n] = 1.0
    elif need_full:
        full = np.zeros((depth + 1, depth + 1))
        full[0, 0] = 1.0
        for n in range(1, depth + 1):
            heads = np.cumsum(rows[n])[:n]
            full[n, :n] = heads @ full[:n, :n] / up[n]
            full[n, n] = 1.0
        F0 = full[:, 0].copy()
    else:
        for n in range(1, depth + 1):
            heads = np.cumsum(rows[n])[:n]
            F0[n] = heads @ F0[:n] / up[n]
    return FTable(depth=depth, F0=F0, up=up, banded=banded, full=full)


def f_table(spec: SkipFreeSpec, depth: int, full: bool = False) -> FTable:
    """Evaluate the passage recursion for ``spec`` down to level 0."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if full and depth > MAX_FULL_TABLE:
        raise ValueError(f"full table refused above depth {MAX_FULL_TABLE}")
    rows = [spec.row(i) for i in range(depth + 1)]
    return _recursion(rows, full)


@dataclass(frozen=True)
class CriterionDiagnostics:
    """Monotone partial evaluation of one criterion quantity.

    ``partials[j]`` is the value at depth ``depths[j]``; ``sup`` is their
    maximum, attained at depth ``argmax``. ``tail_ratio`` and
    ``sup_estimate`` are present when the summand showed measured
    geometric decay; they are estimates, never certifications.
    """

    name: str
    partials: np.ndarray
    depths: np.ndarray
    sup: float
    argmax: int
    monotone: bool
    verdict: str
    tail_ratio: float | None = None
    sup_estimate: float | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "sup": float(self.sup),
            "argmax_depth": int(self.argmax),
            "monotone": bool(self.monotone),
            "verdict": self.verdict,
            "depth": int(self.depths[-1]) if len(self.depths) else None,
        }
        if self.tail_ratio is not None:
            out["tail_ratio_estimate"] = float(self.tail_ratio)
        if self.sup_estimate is not None:
            out["sup_estimate"] = float(self.sup_estimate)
        for k, v in sorted(self.details.items()):
            out[k] = v
        return out


def _make_diag(name: str, partials: np.ndarray, depths: np.ndarray,
               tail_ratio=None, sup_estimate=None, details=None,
               refined_sup: float | None = None) -> CriterionDiagnostics:
    """Assemble diagnostics and derive the three-way verdict.

    The growth probe compares the supremum against ``refined_sup``, the
    same criterion re-evaluated at three-quarter depth, when the caller
    supplies it (criteria whose divergence lives in the depth direction,
    because the inner tails grow with the window). Otherwise it compares
    the running supremum along the partial curve itself.
    """
    partials = np.asarray(partials, dtype=float)
    depths = np.asarray(depths, dtype=int)
    if len(partials) == 0:
        return CriterionDiagnostics(name, partials, depths, 0.0, 0, True,
                                    "sup-stabilized", details=details or {})
    running = np.maximum.accumulate(partials)
    sup = float(running[-1])
    argmax = int(depths[int(np.argmax(partials))])
    monotone = bool((np.diff(partials) >= -1e-12).all())
    if refined_sup is None:
        q = (3 * len(partials)) // 4
        q = min(max(q, 0), len(partials) - 1)
        ref = float(running[q])
    else:
        ref = float(refined_sup)
    if np.isinf(sup) or (sup > 0 and sup / max(ref, 1e-300) > GROWTH_RATIO):
        verdict = "divergence-suspected"
    elif sup <= 0 or (sup - ref) <= STABLE_REL * max(sup, 1e-300):
        verdict = "sup-stabilized"
    else:
        verdict = "finite-certified-lower-bound"
    return CriterionDiagnostics(name, partials, depths, sup, argmax, monotone,
                                verdict, tail_ratio, sup_estimate,
                                details or {})


def _decay_ratio(values: np.ndarray) -> float | None:
    """Median step ratio over the last quarter, when clearly geometric."""
    m = len(values)
    k = max(4, m // 4)
    tail = values[m - k - 1:]
    if len(tail) < 3 or (tail <= 0).any() or not np.isfinite(tail).all():
        return None
    ratios = tail[1:] / tail[:-1]
    rho = float(np.median(ratios))
    if not (0.0 < rho < 0.999):
        return None
    if (np.abs(ratios - rho) > 0.1 * rho).any():
        return None
    return rho


def geometric_criterion(spec: SkipFreeSpec, depth: int) -> CriterionDiagnostics:
    """Partial evaluation of the geometric-transience sum.

    The quantity is ``sup_n [sum_{k<=n} 1/(up(k) F(k,0))] [sum_{j>=n} F(j,0)]``;
    finiteness is the sufficient criterion for geometric transience. The
    inner tail is truncated at ``depth``, so each partial is a certified
    lower bound. A geometric tail estimate for ``sum_j F(j, 0)`` is added
    when the passage values decay at a measured stable ratio.
    """
    ft = f_table(spec, depth)
    F = ft.F0
    with np.errstate(divide="ignore", over="ignore"):
        invw = 1.0 / (ft.up * F)
    pre = np.cumsum(invw)
    tails = np.cumsum(F[::-1])[::-1]
    partials = pre * tails
    depths = np.arange(depth + 1)
    qd = max(1, (3 * depth) // 4)
    cut = tails[qd + 1] if qd + 1 <= depth else 0.0
    refined = float(np.max(pre[:qd + 1] * (tails[:qd + 1] - cut)))
    rho = _decay_ratio(F)
    sup_est = None
    if rho is not None:
        t_est = float(F[-1]) * rho / (1.0 - rho)
        sup_est = float(np.max(pre * (tails + t_est)))
    details = {"passage_sum": float(F.sum())}
    return _make_diag("geometric", partials, depths, rho, sup_est, details,
                      refined_sup=refined)


def geometric_certificate(spec: SkipFreeSpec, depth: int) -> drift.DriftCertificate:
    """Drift certificate built from the geometric-criterion weight.

    With tails ``T(i) = sum_{j>=i} F(j,0)``, the weight comes from
    ``f(i) = sqrt(T(i)/up(0))`` and the prefix-weighted sums
    ``g(i) = sum_{j>=i} F(j,0) sum_{k<=j} f(k)/(up(k) F(k,0))``, normalized
    to 1 at level 0. Rate and bound are both ``1 - 1/(4 s)`` where ``s``
    is the certified criterion lower bound. The inequality is checked on
    every truncated row; the verdict is taken over the interior rows,
    with the boundary band reported separately (its failures are the
    expected artifact of truncating the tails in ``g``).

    Raises ``ValueError`` when the criterion diagnostics suspect
    divergence, since the construction is then meaningless.
    """
    diag = geometric_criterion(spec, depth)
    if diag.verdict == "divergence-suspected":
        raise ValueError("geometric criterion suspects divergence; "
                         "no certificate constructed")
    ft = f_table(spec, depth)
    F = ft.F0
    tails = np.cumsum(F[::-1])[::-1]
    p01 = float(spec.row(0)[1])
    f = np.sqrt(tails / p01)
    C = np.cumsum(f / (ft.up * F))
    g = np.cumsum((F * C)[::-1])[::-1]
    gt = g / g[0]
    lam = 1.0 - 1.0 / (4.0 * diag.sup)
    ker = truncate(spec, depth + 1)
    cert = drift.check_geometric(ker, [0], gt, lam, lam)
    if cert.margins is None:
        return cert
    band = max(1, (depth + 1) // 8)
    interior = cert.margins[: depth + 1 - band]
    boundary = cert.margins[depth + 1 - band:]
    im = float(np.nanmin(interior))
    bm = float(np.nanmin(boundary))
    if im >= -drift.MARGIN_TOL:
        verdict, witness = "holds", None
    else:
        verdict, witness = "fails", int(np.nanargmin(interior))
    info = dict(cert.info)
    info.update({
        "criterion_sup": float(diag.sup),
        "interior_margin": im,
        "boundary_margin": bm,
        "interior_rows": int(depth + 1 - band),
        "f_decreasing": bool((np.diff(f) <= 1e-12).all()),
        "g_decreasing": bool((np.diff(g) <= 1e-12).all()),
    })
    return dataclasses.replace(cert, verdict=verdict, witness=witness,
                               margin=im, info=info)


@dataclass(frozen=True)
class LevelMoments:
    """Order-``ell`` layer of the return-moment recursion."""

    ell: int
    d_values: np.ndarray
    d_sup: CriterionDiagnostics
    moment_sum: float
    m: np.ndarray


@dataclass(frozen=True)
class MomentReport:
    """Transience ratio, return probabilities and polynomial moments.

    ``m0[i]`` is the probability of ever reaching level 0 from level
    ``i`` (at ``i = 0``, of returning). ``levels[l-1].m[i]`` carries the
    order-``l`` rising return-moment values; ``moment_sum`` is the
    criterion whose finiteness, together with a transience ratio below
    one, characterizes ``l``-transience.
    """

    xi: CriterionDiagnostics
    m0: np.ndarray
    levels: tuple[LevelMoments, ...]


def return_moments(spec: SkipFreeSpec, ell_max: int, depth: int) -> MomentReport:
    """Evaluate the ratio criterion and closed-form return moments.

    Valid only for chains whose rows are stochastic on the evaluated
    window; the closed-form identities are provably false in the presence
    of killing, so sub-stochastic rows are rejected.
    """
    if ell_max < 0:
        raise ValueError("ell_max must be nonnegative")
    rows = [spec.row(i) for i in range(depth + 1)]
    sums = np.array([r.sum() for r in rows])
    if (np.abs(sums - 1.0) > 1e-10).any():
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise ValueError(
            f"return moments need stochastic rows; row {bad} sums to {sums[bad]!r}")
    ft = _recursion(rows, need_full=ell_max >= 1)
    if ell_max >= 1 and depth > MAX_FULL_TABLE:
        raise ValueError(f"full table refused above depth {MAX_FULL_TABLE}")
    F = ft.F0
    cumF = np.cumsum(F)
    ratios = []
    for i in range(2, depth + 1):
        den = cumF[i - 1]
        num = den - F[0]
        ratios.append(num / den)
    xi_diag = _make_diag("transience-ratio", np.asarray(ratios),
                         np.arange(2, depth + 1),
                         details={"passage_sum": float(F.sum())})
    xi = xi_diag.sup if len(ratios) else 0.0
    p00, p01 = float(rows[0][0]), float(rows[0][1])
    m0 = np.empty(depth + 1)
    m0[0] = p01 * xi + p00
    for i in range(1, depth + 1):
        den = cumF[i - 1]
        m0[i] = den * xi - (den - F[0])
    levels = []
    mprev = m0
    for ell in range(1, ell_max + 1):
        d_vals = np.zeros(depth + 1)
        for i in range(1, depth + 1):
            d_vals[i] = float((ft.full[i, 1:i + 1] * mprev[1:i + 1] / ft.up[1:i + 1]).sum())
        cumd = np.cumsum(d_vals)
        rat = cumd[:depth] / cumF[:depth]
        d_diag = _make_diag(f"moment-ratio-{ell}", rat, np.arange(1, depth + 1))
        d = d_diag.sup
        sigma = ell * d
        m = np.empty(depth + 1)
        m[0] = p01 * sigma + ell * mprev[0]
        pref = np.cumsum(F * d - d_vals)
        for i in range(1, depth + 1):
            m[i] = ell * pref[i - 1]
        levels.append(LevelMoments(ell=ell, d_values=d_vals, d_sup=d_diag,
                                   moment_sum=sigma, m=m))
        mprev = m
    return MomentReport(xi=xi_diag, m0=m0, levels=tuple(levels))


@dataclass(frozen=True)
class KilledReport:
    """Criteria for chains with killing, via the cemetery augmentation."""

    strong: CriterionDiagnostics
    uniform: CriterionDiagnostics
    normalizer: CriterionDiagnostics
    d_values: np.ndarray


def _augmented_rows(spec: SkipFreeSpec, depth: int) -> list[np.ndarray]:
    """Adjoin an absorbing cemetery at index 0; levels shift up by one."""
    rows = [np.array([1.0, 0.0])]
    for k in range(1, depth + 1):
        r = spec.row(k - 1)
        v = np.zeros(k + 2)
        v[1:] = r
        v[0] = max(0.0, 1.0 - float(r.sum()))
        rows.append(v)
    return rows


def killed_criteria(spec: SkipFreeSpec, depth: int) -> KilledReport:
    """Strong- and uniform-geometric criteria for a chain with killing.

    The chain is augmented with an absorbing cemetery below the bottom
    level, turning the killed mass of each row into a transition to the
    cemetery; the passage recursion then runs on the augmented chain.
    The strong criterion is
    ``sup_{n>=1} [sum_{k<n} F(k,0)] [sum_{j>=n} 1/(up(j) F(j,0))]`` and
    the uniform one is ``sup_n sum_{k<=n} (F(k,0) d - d(k))`` with
    ``d(i) = sum_{k=1}^{i} F(i,k)/up(k)`` and ``d`` the supremum of the
    partial-sum ratios of ``d(.)`` against ``F(., 0)``.

    Stochastic input is rejected: without killing the augmented chain
    never reaches the cemetery and the criteria are meaningless.
    """
    rows = [spec.row(i) for i in range(depth)]
    if all(abs(float(r.sum()) - 1.0) <= 1e-10 for r in rows):
        raise ValueError("killed-chain criteria need sub-stochastic rows; "
                         "every row on the window is stochastic")
    if depth > MAX_FULL_TABLE:
        raise ValueError(f"full table refused above depth {MAX_FULL_TABLE}")
    hat = _recursion(_augmented_rows(spec, depth), need_full=True)
    F = hat.F0
    cumF = np.cumsum(F)
    with np.errstate(divide="ignore", over="ignore"):
        invw = np.zeros(depth + 1)
        invw[1:] = 1.0 / (hat.up[1:] * F[1:])
    inv_tails = np.cumsum(invw[::-1])[::-1]
    strong_partials = cumF[:depth] * inv_tails[1:]
    qd = max(1, (3 * depth) // 4)
    cut = inv_tails[qd + 1] if qd + 1 <= depth else 0.0
    refined = float(np.max(cumF[:qd] * (inv_tails[1:qd + 1] - cut)))
    rho = _decay_ratio(invw[1:])
    sup_est = None
    if rho is not None:
        t_est = float(invw[-1]) * rho / (1.0 - rho)
        sup_est = float(np.max(cumF[:depth] * (inv_tails[1:] + t_est)))
    strong = _make_diag("strong-geometric", strong_partials,
                        np.arange(1, depth + 1), rho, sup_est,
                        refined_sup=refined)
    d_vals = np.zeros(depth + 1)
    for i in range(1, depth + 1):
        d_vals[i] = float((hat.full[i, 1:i + 1] / hat.up[1:i + 1]).sum())
    cumd = np.cumsum(d_vals)
    ratios = cumd / cumF
    norm = _make_diag("uniform-normalizer", ratios, np.arange(1, depth + 2))
    d = norm.sup
    uni_partials = d * cumF - cumd
    # The partials subtract two sums that grow with the passage values, so
    # they are only meaningful while the normalizer's remaining drift
    # (measured against its three-quarter-depth value) and plain rounding
    # stay small next to the partial itself. The curve is cut there.
    delta_d = d - float(np.max(ratios[:qd + 1]))
    noise = (delta_d + 16 * np.finfo(float).eps * d) * cumF
    trusted = noise <= 0.05 * np.maximum(uni_partials, 1.0)
    m_tr = int(np.nonzero(trusted)[0][-1]) if trusted.any() else 0
    m_tr = max(m_tr, min(depth, 8))
    uniform = _make_diag("uniform-geometric", uni_partials[:m_tr + 1],
                         np.arange(m_tr + 1),
                         details={"normalizer": float(d),
                                  "trusted_depth": m_tr})
    return KilledReport(strong=strong, uniform=uniform, normalizer=norm,
                        d_values=d_vals)


def write_criterion_csv(diag: CriterionDiagnostics, path: str | Path) -> None:
    """Partial-value curve as CSV with a one-line comment header."""
    lines = [f"# criterion={diag.name} verdict={diag.verdict} sup={diag.sup!r}",
             "n,partial"]
    for n, v in zip(diag.depths, diag.partials):
        lines.append(f"{int(n)},{float(v)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_passage_csv(ft: FTable, path: str | Path) -> None:
    """Base-level passage column as CSV."""
    lines = ["# passage-values column i=0", "n,F"]
    for n, v in enumerate(ft.F0):
        lines.append(f"{n},{float(v)!r}")
    Path(path).write_text("\n".join(lines) + "\n")
