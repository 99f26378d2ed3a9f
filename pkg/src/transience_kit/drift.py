"""Drift certificates for transience and their checkers.

A certificate packages a weight vector (or a family of them), a rate and a
bound together with the outcome of checking the corresponding inequalities
pointwise on a truncation. Checking is the ground truth here; constructors
only propose certificates and then run the matching checker.

Margins are absolute: ``margin = min(required - achieved)`` over the
checked states, and a certificate holds when ``margin >= -1e-10``. A
violated precondition (wrong weight shape, rate outside its range) yields
the verdict ``"invalid"`` rather than ``"fails"`` so that shape errors are
never confused with drift failures.

Certificates computed from a window are marked ``truncation_local``:
boundary rows see killed mass and the inequalities say nothing about the
chain beyond the window. When the weight has a declared closed-form tail
the boundary rows are instead checked against the true rows, using the
tail values for out-of-window targets.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .kernel import (IncrementDistribution, SkipFreeSpec, StateSet,
                     TruncatedKernel)
from . import minsolve

#: Checker verdict threshold on the margin.
MARGIN_TOL = 1e-10

KINDS = ("geometric", "barrier", "global", "algebraic", "v-uniform")


@dataclass(frozen=True)
class DriftCertificate:
    """Outcome of checking one drift inequality system.

    Attributes
    ----------
    kind : str
        One of :data:`KINDS`.
    A : StateSet or None
        Target set; None for whole-space kinds.
    weights : tuple of numpy.ndarray
        The weight vector(s) over the truncation window.
    rate : float
        Contraction rate (lambda).
    bound : float or None
        Bound on the target set (b), when the kind has one.
    d : float or None
        Level-0 bound of the algebraic system.
    margin : float
        Minimum slack over all checked inequalities.
    margins : numpy.ndarray or None
        Pointwise slack per state (NaN where not checked).
    verdict : str
        ``"holds"``, ``"fails"`` or ``"invalid"``.
    witness : int or None
        State attaining the violated inequality when the verdict is not
        ``"holds"``.
    truncation_local : bool
        Whether the statement is confined to the window.
    tail : str or None
        Descriptor of a closed-form tail used at boundary rows.
    info : dict
        Diagnostics (construction data, secondary checks).
    """

    kind: str
    A: StateSet | None
    weights: tuple[np.ndarray, ...]
    rate: float
    bound: float | None
    margin: float
    verdict: str
    witness: int | None = None
    margins: np.ndarray | None = None
    d: float | None = None
    truncation_local: bool = True
    tail: str | None = None
    info: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"


def _invalid(kind, A, weights, rate, bound, reason, d=None) -> DriftCertificate:
    return DriftCertificate(kind=kind, A=A, weights=weights, rate=rate,
                            bound=bound, d=d, margin=float("-inf"),
                            verdict="invalid", info={"reason": reason})


def apply_with_tail(kernel: TruncatedKernel, w: np.ndarray, row_source=None,
                    w_fn: Callable[[int], float] | None = None) -> np.ndarray:
    """``P W`` on the window, optionally completing boundary rows.

    Without a tail, killed mass contributes zero (the conservative side
    for upper drift inequalities). With ``row_source`` and ``w_fn`` the
    out-of-window part of each row is evaluated on the closed-form tail,
    which turns boundary rows into exact rows of the untruncated chain.
    """
    pw = kernel.apply(w)
    if row_source is None or w_fn is None:
        return pw
    n = kernel.n_states
    if isinstance(row_source, SkipFreeSpec):
        if n >= 1:
            r = row_source.row(n - 1)
            if len(r) > n:
                pw[n - 1] += float(r[n]) * float(w_fn(n))
        return pw
    if isinstance(row_source, IncrementDistribution):
        max_off = max(row_source.offsets)
        for i in range(max(0, n - max_off), n):
            for off, p in zip(row_source.offsets, row_source.pmf):
                j = max(i + off, 0)
                if j >= n and p > 0:
                    pw[i] += p * float(w_fn(j))
        return pw
    raise TypeError(f"no tail completion for {type(row_source).__name__}")


def _finish(kind, A, weights, rate, bound, margins, checked_mask,
            truncation_local, tail, info, d=None) -> DriftCertificate:
    vals = margins[checked_mask]
    margin = float(vals.min()) if len(vals) else float("inf")
    if margin >= -MARGIN_TOL:
        verdict, witness = "holds", None
    else:
        verdict = "fails"
        bad = np.where(checked_mask, margins, np.inf)
        witness = int(np.argmin(bad))
    shown = np.where(checked_mask, margins, np.nan)
    return DriftCertificate(kind=kind, A=A, weights=weights, rate=rate,
                            bound=bound, d=d, margin=margin, margins=shown,
                            verdict=verdict, witness=witness,
                            truncation_local=truncation_local, tail=tail,
                            info=info)


def check_geometric(kernel: TruncatedKernel, A, W, lam: float, b: float,
                    row_source=None, w_fn=None, tail_name: str | None = None,
                    ) -> DriftCertificate:
    """Check ``P W <= lam W`` off ``A`` and ``P W <= b`` on ``A``.

    Preconditions: ``W >= 1`` on ``A``, ``W >= 0``, ``0 < lam < 1`` and
    ``0 <= b < 1``. The set where ``W < 1`` off ``A`` is reported in
    ``info`` for interest; it does not affect validity.
    """
    A = StateSet.of(A)
    W = np.asarray(W, dtype=float)
    n = kernel.n_states
    weights = (W,)
    if W.shape != (n,):
        return _invalid("geometric", A, weights, lam, b, "weight shape mismatch")
    if not (0.0 < lam < 1.0):
        return _invalid("geometric", A, weights, lam, b, "rate outside (0, 1)")
    if not (0.0 <= b < 1.0):
        return _invalid("geometric", A, weights, lam, b, "bound outside [0, 1)")
    in_mask = A.mask(n)
    if (W < 0).any():
        return _invalid("geometric", A, weights, lam, b, "negative weight")
    if (W[in_mask] < 1.0 - 1e-12).any():
        return _invalid("geometric", A, weights, lam, b, "weight below 1 on target set")
    pw = apply_with_tail(kernel, W, row_source, w_fn)
    required = np.where(in_mask, b, lam * W)
    margins = required - pw
    info = {
        "below_one_off_target": int(((W < 1.0) & ~in_mask).sum()),
        "sup_PW_on_target": float(pw[in_mask].max()),
    }
    return _finish("geometric", A, weights, lam, b, margins,
                   np.ones(n, dtype=bool), row_source is None or w_fn is None,
                   tail_name, info)


def check_barrier(kernel: TruncatedKernel, A, W, lam: float,
                  row_source=None, w_fn=None, tail_name=None) -> DriftCertificate:
    """Check the barrier shape: ``W < 1`` strictly off ``A``, ``W >= 1``
    on ``A`` and ``P W <= lam W`` off ``A``.

    Only the off-target rows carry the drift inequality; the on-target
    value ``sup_A P W`` is reported as information.
    """
    A = StateSet.of(A)
    W = np.asarray(W, dtype=float)
    n = kernel.n_states
    weights = (W,)
    if W.shape != (n,):
        return _invalid("barrier", A, weights, lam, None, "weight shape mismatch")
    if not (0.0 < lam < 1.0):
        return _invalid("barrier", A, weights, lam, None, "rate outside (0, 1)")
    in_mask = A.mask(n)
    if (W < 0).any() or not np.isfinite(W).all():
        return _invalid("barrier", A, weights, lam, None, "weight not finite nonnegative")
    if (W[in_mask] < 1.0 - 1e-12).any():
        return _invalid("barrier", A, weights, lam, None, "weight below 1 on target set")
    if (W[~in_mask] >= 1.0).any():
        return _invalid("barrier", A, weights, lam, None,
                        "weight not strictly below 1 off target set")
    pw = apply_with_tail(kernel, W, row_source, w_fn)
    margins = lam * W - pw
    info = {"sup_PW_on_target": float(pw[in_mask].max())}
    return _finish("barrier", A, weights, lam, None, margins, ~in_mask,
                   row_source is None or w_fn is None, tail_name, info)


def construct_geometric(kernel: TruncatedKernel, A, kappa: float,
                        tol: float = 1e-11) -> DriftCertificate:
    """Build the canonical geometric certificate from the kappa transform.

    ``W(x) = E_x[kappa^{sigma_A}; sigma_A < inf]``, ``lam = 1/kappa`` and
    ``b = sup_{x in A} E_x[kappa^{tau_A}] / kappa``. When the target is
    the whole window the weight degenerates to 1 and the bound is
    ``kappa`` times the largest row sum. Construction fails (with a
    diagnostic) when the weighted return transform reaches 1 on the
    target, or diverges.
    """
    A = StateSet.of(A)
    if kappa <= 1.0:
        return _invalid("geometric", A, (), 1.0 / kappa, None,
                        "kappa must exceed 1")
    n = kernel.n_states
    lam = 1.0 / kappa
    if len(A.within(n)) == n:
        W = np.ones(n)
        b = kappa * float(kernel.row_sums().max())
        if b >= 1.0:
            cert = _invalid("geometric", A, (W,), lam, b,
                            "kappa times the largest row sum reaches 1")
            return dataclasses.replace(cert, verdict="fails",
                                       info={**cert.info, "sup_weighted_return": b})
        cert = check_geometric(kernel, A, W, lam, b)
        cert.info["construction"] = {"kappa": kappa, "whole_window": True}
        return cert
    ht = minsolve.hitting_exponential(kernel, A, kappa, tol=tol)
    in_mask = A.mask(n)
    if ht.diverged:
        return dataclasses.replace(
            _invalid("geometric", A, (), lam, None,
                     "kappa transform diverges on the truncation"),
            verdict="fails",
            info={"reason": "kappa transform diverges on the truncation",
                  "kappa": kappa})
    sup_tau = float(ht.tau[in_mask].max())
    b = sup_tau / kappa
    if sup_tau >= 1.0:
        return dataclasses.replace(
            _invalid("geometric", A, (ht.sigma,), lam, b,
                     "weighted return transform reaches 1 on the target"),
            verdict="fails",
            info={"reason": "weighted return transform reaches 1 on the target",
                  "sup_weighted_return": sup_tau, "kappa": kappa})
    cert = check_geometric(kernel, A, ht.sigma, lam, b)
    cert.info["construction"] = {"kappa": kappa,
                                 "sup_weighted_return": sup_tau,
                                 "solver_iterations": ht.iterations}
    return cert


def check_global_contraction(kernel: TruncatedKernel, W, lam: float,
                             row_source=None, w_fn=None, tail_name=None,
                             survival_steps: int = 20) -> DriftCertificate:
    """Check ``P W <= lam W`` at every state with ``W >= 1``.

    Also spot-verifies the implied survival bound
    ``P^n(x, window) <= lam^n W(x)`` for ``n`` up to ``survival_steps``;
    the worst violation is reported in ``info``.
    """
    W = np.asarray(W, dtype=float)
    n = kernel.n_states
    if W.shape != (n,):
        return _invalid("global", None, (W,), lam, None, "weight shape mismatch")
    if not (0.0 < lam < 1.0):
        return _invalid("global", None, (W,), lam, None, "rate outside (0, 1)")
    if (W < 1.0 - 1e-12).any():
        return _invalid("global", None, (W,), lam, None, "weight below 1 somewhere")
    pw = apply_with_tail(kernel, W, row_source, w_fn)
    margins = lam * W - pw
    surv = np.ones(n)
    worst = 0.0
    factor = 1.0
    for _ in range(survival_steps):
        surv = kernel.apply(surv)
        factor *= lam
        worst = max(worst, float((surv - factor * W).max()))
    info = {"survival_bound_violation": worst,
            "survival_steps": survival_steps}
    return _finish("global", None, (W,), lam, None, margins,
                   np.ones(n, dtype=bool), row_source is None or w_fn is None,
                   tail_name, info)


def construct_v_uniform(kernel: TruncatedKernel, V, n0: int, beta: float,
                        ) -> DriftCertificate:
    """Average the first ``n0`` powers of ``V`` into a contracted weight.

    ``W = sum_{i<n0} beta^{i/n0} P^i V`` satisfies ``V <= W <= c V`` with
    the measured equivalence constant ``c`` reported in ``info``, and is
    checked for ``P W <= beta^{-1/n0} W``. The measured weighted operator
    norms ``max_x (P^i V)(x) / V(x)`` are reported as well.
    """
    V = np.asarray(V, dtype=float)
    n = kernel.n_states
    if V.shape != (n,):
        return _invalid("v-uniform", None, (V,), 0.0, None, "weight shape mismatch")
    if (V < 1.0 - 1e-12).any():
        return _invalid("v-uniform", None, (V,), 0.0, None, "V below 1 somewhere")
    if n0 < 1 or beta <= 1.0:
        return _invalid("v-uniform", None, (V,), 0.0, None,
                        "need n0 >= 1 and beta > 1")
    lam = beta ** (-1.0 / n0)
    powers = [V]
    for _ in range(n0 - 1):
        powers.append(kernel.apply(powers[-1]))
    W = np.zeros(n)
    norms = []
    for i, piv in enumerate(powers):
        W += (beta ** (i / n0)) * piv
        norms.append(float((piv / V).max()))
    pw = kernel.apply(W)
    margins = lam * W - pw
    ratio = W / V
    info = {"equivalence_constant": float(ratio.max()),
            "sandwich_lower_ok": bool((W >= V - 1e-12).all()),
            "weighted_norms": norms, "n0": int(n0), "beta": float(beta)}
    cert = _finish("v-uniform", None, (W,), lam, None, margins,
                   np.ones(n, dtype=bool), True, None, info)
    return dataclasses.replace(cert, weights=(W, V))


def check_algebraic_system(kernel: TruncatedKernel, A, Ws: Sequence[np.ndarray],
                           d: float, b: float, row_sources=None,
                           tails: Sequence | None = None) -> DriftCertificate:
    """Check the coupled polynomial drift system of order ``ell``.

    ``Ws`` lists ``W_0, ..., W_ell``; with ``W_{ell+1} = 0`` the system is

    - ``P W_i <= W_i - (ell - i) W_{i+1}`` off ``A`` for every ``i``,
    - ``W_i >= 1`` on ``A``,
    - ``P W_0 <= d`` on ``A``,
    - ``P W_ell <= b`` on ``A``.

    Per-family minimum margins are reported in ``info``; the certificate
    margin is their overall minimum.
    """
    A = StateSet.of(A)
    Ws = tuple(np.asarray(w, dtype=float) for w in Ws)
    ell = len(Ws) - 1
    n = kernel.n_states
    if ell < 0 or any(w.shape != (n,) for w in Ws):
        return _invalid("algebraic", A, Ws, 1.0, b, "weight shape mismatch", d=d)
    if not (0.0 <= b < 1.0):
        return _invalid("algebraic", A, Ws, 1.0, b, "bound outside [0, 1)", d=d)
    if not (0.0 < d < float("inf")):
        return _invalid("algebraic", A, Ws, 1.0, b, "d outside (0, inf)", d=d)
    if any((w < 0).any() or not np.isfinite(w).all() for w in Ws):
        return _invalid("algebraic", A, Ws, 1.0, b, "weight not finite nonnegative", d=d)
    in_mask = A.mask(n)
    for i, w in enumerate(Ws):
        if (w[in_mask] < 1.0 - 1e-12).any():
            return _invalid("algebraic", A, Ws, 1.0, b,
                            f"W_{i} below 1 on target set", d=d)
    pws = []
    for i, w in enumerate(Ws):
        src = None if row_sources is None else row_sources
        fn = None if tails is None else tails[i]
        pws.append(apply_with_tail(kernel, w, src, fn))
    margins = np.full(n, np.inf)
    fam = {}
    for i in range(ell + 1):
        nxt = Ws[i + 1] if i + 1 <= ell else np.zeros(n)
        m = (Ws[i] - (ell - i) * nxt) - pws[i]
        m = np.where(in_mask, np.inf, m)
        fam[f"descent_{i}"] = float(m[~in_mask].min()) if (~in_mask).any() else float("inf")
        margins = np.minimum(margins, m)
    m_d = np.where(in_mask, d - pws[0], np.inf)
    m_b = np.where(in_mask, b - pws[ell], np.inf)
    fam["base_d"] = float(m_d[in_mask].min())
    fam["base_b"] = float(m_b[in_mask].min())
    margins = np.minimum(margins, np.minimum(m_d, m_b))
    info = {"family_margins": fam, "ell": ell}
    return _finish("algebraic", A, Ws, 1.0, b, margins, np.ones(n, dtype=bool),
                   row_sources is None, None, info, d=d)


def generate_algebraic(kernel: TruncatedKernel, A, V, W, ell: int,
                       row_source=None, v_fn=None, w_fn=None) -> DriftCertificate:
    """Expand a two-premise generator into the full polynomial system.

    Requires ``V >= 1`` on the window, ``W >= 1`` on ``A`` and ``W <= 1``
    off ``A``, plus the premises ``P V <= V - ell V^{1 - 1/ell}`` off
    ``A`` and ``P W <= W`` off ``A`` with ``b = sup_A P W < 1``. The
    intermediate weights are the fractional powers ``V^{1 - i/ell}``; the
    fractional-power descent inequalities implied by the premise are
    verified pointwise and their minimum margin reported.
    """
    A = StateSet.of(A)
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    n = kernel.n_states
    if ell < 1:
        return _invalid("algebraic", A, (V, W), 1.0, None, "ell must be >= 1")
    if V.shape != (n,) or W.shape != (n,):
        return _invalid("algebraic", A, (V, W), 1.0, None, "weight shape mismatch")
    in_mask = A.mask(n)
    if (V < 1.0 - 1e-12).any():
        return _invalid("algebraic", A, (V, W), 1.0, None, "V below 1 somewhere")
    if (W[in_mask] < 1.0 - 1e-12).any() or (W[~in_mask] > 1.0 + 1e-12).any():
        return _invalid("algebraic", A, (V, W), 1.0, None,
                        "companion weight not >=1 on A and <=1 off A")
    pv = apply_with_tail(kernel, V, row_source, v_fn)
    pw = apply_with_tail(kernel, W, row_source, w_fn)
    prem1 = (V - ell * V ** (1.0 - 1.0 / ell)) - pv
    bad1 = np.where(~in_mask, prem1, np.inf)
    if float(bad1.min()) < -MARGIN_TOL:
        wit = int(np.argmin(bad1))
        return dataclasses.replace(
            _invalid("algebraic", A, (V, W), 1.0, None,
                     "generator inequality fails off the target set"),
            verdict="invalid", witness=wit,
            info={"failed_premise": "generator", "witness": wit,
                  "margin": float(bad1.min())})
    prem2 = W - pw
    bad2 = np.where(~in_mask, prem2, np.inf)
    if float(bad2.min()) < -MARGIN_TOL:
        wit = int(np.argmin(bad2))
        return dataclasses.replace(
            _invalid("algebraic", A, (V, W), 1.0, None,
                     "companion superharmonicity fails off the target set"),
            verdict="invalid", witness=wit,
            info={"failed_premise": "companion", "witness": wit,
                  "margin": float(bad2.min())})
    b = float(pw[in_mask].max())
    if b >= 1.0:
        return dataclasses.replace(
            _invalid("algebraic", A, (V, W), 1.0, b,
                     "companion bound on the target reaches 1"),
            info={"failed_premise": "companion-bound", "b": b})
    d = float(pv[in_mask].max())
    Ws = [V ** (1.0 - i / ell) for i in range(ell)] + [W]
    tails = None
    if row_source is not None and v_fn is not None and w_fn is not None:
        tails = [
            (lambda j, e=(1.0 - i / ell): float(v_fn(j)) ** e)
            for i in range(ell)
        ] + [w_fn]
    alpha = 1.0 - 1.0 / ell
    lemma_margins = []
    for i in range(1, ell):
        eta = 1.0 - i / ell
        lhs = apply_with_tail(kernel, V ** eta, row_source,
                              None if tails is None else tails[i])
        rhs = V ** eta - eta * ell * V ** (alpha + eta - 1.0)
        lm = np.where(~in_mask, rhs - lhs, np.inf)
        lemma_margins.append(float(lm.min()))
    cert = check_algebraic_system(kernel, A, Ws, d=d, b=b,
                                  row_sources=row_source, tails=tails)
    cert.info["power_lemma_margins"] = lemma_margins
    cert.info["generator_margin"] = float(bad1[~in_mask].min()) if (~in_mask).any() else float("inf")
    return cert


def implied_return_bound(kernel: TruncatedKernel, cert: DriftCertificate,
                         tol: float = 1e-12) -> dict:
    """Audit the return-time bound a holding certificate implies.

    For a ``"geometric"`` certificate with rate ``lam`` and bound ``b``
    the implied statement is ``sup_{x in A} E_x[kappa^{tau_A}] <= kappa b``
    with ``kappa = 1/lam`` when ``b < lam``, else ``kappa = 1/(b + eps)``,
    ``eps = (1 - b)/2``. For a ``"barrier"`` certificate it is the
    pointwise bound ``E_x[kappa^{tau_A}] <= W(x)`` off ``A`` plus
    ``sup_A <= 1/lam``. Returns the audit numbers; raises on other kinds.
    """
    if cert.kind == "geometric":
        lam, b = cert.rate, cert.bound
        if b < lam:
            kappa = 1.0 / lam
        else:
            kappa = 1.0 / (b + (1.0 - b) / 2.0)
        ht = minsolve.hitting_exponential(kernel, cert.A, kappa, tol=tol)
        mask = cert.A.mask(kernel.n_states)
        sup_A = float(ht.tau[mask].max()) if not ht.diverged else float("inf")
        bound = kappa * b
        return {"kappa": kappa, "bound": bound, "sup_A": sup_A,
                "ok": bool(sup_A <= bound + 1e-6), "diverged": ht.diverged}
    if cert.kind == "barrier":
        lam = cert.rate
        kappa = 1.0 / lam
        ht = minsolve.hitting_exponential(kernel, cert.A, kappa, tol=tol)
        mask = cert.A.mask(kernel.n_states)
        W = cert.weights[0]
        if ht.diverged:
            return {"kappa": kappa, "ok": False, "diverged": True}
        off = ~mask
        viol = float((ht.tau[off] - W[off]).max()) if off.any() else float("-inf")
        sup_A = float(ht.tau[mask].max())
        return {"kappa": kappa, "pointwise_violation": viol, "sup_A": sup_A,
                "sup_A_bound": kappa, "diverged": False,
                "ok": bool(viol <= 1e-8 and sup_A <= kappa + 1e-8)}
    raise ValueError(f"no implied return bound for kind {cert.kind!r}")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def certificate_to_json(cert: DriftCertificate) -> dict:
    """JSON-able summary of a certificate (weights included)."""
    def clean(v):
        if isinstance(v, float) and not np.isfinite(v):
            return repr(v)
        if isinstance(v, np.ndarray):
            return [float(x) for x in v]
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, dict):
            return {k: clean(x) for k, x in sorted(v.items())}
        if isinstance(v, (np.floating, np.integer)):
            return v.item()
        return v

    return {
        "kind": cert.kind,
        "A": list(cert.A.indices) if cert.A is not None else None,
        "weights": [[float(x) for x in w] for w in cert.weights],
        "rate": clean(float(cert.rate)),
        "bound": None if cert.bound is None else clean(float(cert.bound)),
        "d": None if cert.d is None else clean(float(cert.d)),
        "margin": clean(float(cert.margin)),
        "verdict": cert.verdict,
        "witness": cert.witness,
        "truncation_local": cert.truncation_local,
        "tail": cert.tail,
        "info": clean(cert.info),
    }


def check_from_json(kernel: TruncatedKernel, obj: dict) -> DriftCertificate:
    """Run the checker named by a user-supplied certificate object.

    Expected fields: ``kind``; ``A`` (list of states, where the kind needs
    one); ``W`` one weight vector, or a list of vectors for the algebraic
    kind, or ``V`` for the v-uniform kind; plus the kind's scalars
    (``lambda``/``b``/``d``/``n0``/``beta``).
    """
    kind = obj.get("kind")
    if kind == "geometric":
        return check_geometric(kernel, obj["A"], np.asarray(obj["W"], float),
                               float(obj["lambda"]), float(obj["b"]))
    if kind == "barrier":
        return check_barrier(kernel, obj["A"], np.asarray(obj["W"], float),
                             float(obj["lambda"]))
    if kind == "global":
        return check_global_contraction(kernel, np.asarray(obj["W"], float),
                                        float(obj["lambda"]))
    if kind == "algebraic":
        Ws = [np.asarray(w, float) for w in obj["W"]]
        return check_algebraic_system(kernel, obj["A"], Ws,
                                      d=float(obj["d"]), b=float(obj["b"]))
    if kind == "v-uniform":
        return construct_v_uniform(kernel, np.asarray(obj["V"], float),
                                   int(obj["n0"]), float(obj["beta"]))
    raise ValueError(f"unknown certificate kind {kind!r}")
