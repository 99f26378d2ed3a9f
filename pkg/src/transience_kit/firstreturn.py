"""First-return time distributions on truncated kernels.

For a target set ``A`` the first return time is the first step ``n >= 1``
at which the chain sits in ``A``; the start state may itself belong to
``A`` without shortcutting this. Everything is computed by dynamic
programming under taboo of ``A``: per horizon step, mass splits exactly
into "entered A", "killed" and "still alive off A", so the table rows sum
to one up to float roundoff and every partial sum is a certified lower
bound of the corresponding untruncated quantity.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernel import (SkipFreeSpec, StateSet, TruncatedKernel, truncate)

#: Environment variable capping worker threads for Monte Carlo runs.
THREADS_ENV = "TRANSIENCE_KIT_THREADS"

#: Paths per Monte Carlo block; fixed so that results depend only on
#: (seed, path index) and not on how blocks are scheduled.
MC_BLOCK = 16384


@dataclass(frozen=True)
class ReturnTimeTable:
    """Distribution table ``F[n, x] = P_x(first return to A at step n)``.

    Attributes
    ----------
    F : numpy.ndarray
        Shape ``(H + 1, N)``; row 0 is zero, row ``n`` holds step ``n``.
    A : StateSet
        Target set (restricted to the window when summarized).
    horizon : int
        Largest step resolved.
    alive : numpy.ndarray
        Mass still off ``A`` and unkilled at the horizon, per start state.
    killed : numpy.ndarray
        Mass killed before returning, per start state.
    kernel_digest : str
        Hash of the kernel the table was computed from.
    """

    F: np.ndarray
    A: StateSet
    horizon: int
    alive: np.ndarray
    killed: np.ndarray
    kernel_digest: str

    @property
    def n_states(self) -> int:
        return self.F.shape[1]

    def cumulative(self) -> np.ndarray:
        """Cumulative return mass by step, shape ``(H + 1, N)``."""
        return np.cumsum(self.F, axis=0)


@dataclass(frozen=True)
class ReturnProbabilityBounds:
    """Certified bracket for the return probability ``L(x, A)``.

    ``lower`` collects the resolved return mass; on the truncation the true
    value lies in ``[lower, lower + alive]``. For the untruncated chain
    only the lower end is certified.
    """

    lower: np.ndarray
    alive: np.ndarray

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.alive


@dataclass(frozen=True)
class WeightedReturnSum:
    """Partial sums ``sum_n w(n) F[n, x]`` with horizon bookkeeping.

    ``tail_weight`` is the weight the unresolved mass would carry at the
    horizon (``kappa**H * alive`` for geometric weights); a large value
    flags that the partial sum has not stabilized.
    """

    values: np.ndarray
    tail_weight: np.ndarray
    horizon: int


@dataclass(frozen=True)
class OccupationSum:
    """Weighted occupation partial sums ``sum_{n<=H} kappa^n P^n(x, A)``.

    ``curve[h]`` is the partial sum at horizon ``h``; ``per_step[n]`` the
    summand at step ``n``. ``diverging`` flags a summand sequence whose
    measured step ratio stays at or above one, so the series cannot
    converge.
    """

    values: np.ndarray
    curve: np.ndarray
    per_step: np.ndarray
    kappa: float
    diverging: bool


@dataclass(frozen=True)
class DecompositionResidual:
    """Max absolute residuals of the two renewal decompositions."""

    last_exit: float
    first_entrance: float
    horizon: int

    @property
    def max(self) -> float:
        return max(self.last_exit, self.first_entrance)


def _taboo_step(kernel: TruncatedKernel, v: np.ndarray, off_mask: np.ndarray) -> np.ndarray:
    # One backward taboo step: (P restricted to columns off A) applied to v.
    return kernel.apply(np.where(off_mask, v, 0.0))


def return_table(kernel: TruncatedKernel, A, horizon: int) -> ReturnTimeTable:
    """Compute the first-return distribution to ``A`` up to ``horizon``.

    Parameters
    ----------
    kernel : TruncatedKernel
    A : StateSet or iterable of int
        Target set; must intersect the window.
    horizon : int
        Number of steps to resolve, at least 1.

    Returns
    -------
    ReturnTimeTable
        For every start state simultaneously. ``O(horizon)`` kernel
        applications in total.
    """
    A = StateSet.of(A)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    n = kernel.n_states
    in_mask = A.mask(n)
    off_mask = ~in_mask
    F = np.zeros((horizon + 1, n))
    enter = kernel.apply(in_mask.astype(float))     # P(x, A)
    alive = kernel.apply(off_mask.astype(float))    # P(x, A^c)
    F[1] = enter
    killed = kernel.row_defect.copy()
    f_vec = enter
    k_vec = kernel.row_defect
    for step in range(2, horizon + 1):
        f_vec = _taboo_step(kernel, f_vec, off_mask)
        k_vec = _taboo_step(kernel, k_vec, off_mask)
        F[step] = f_vec
        killed += k_vec
        alive = _taboo_step(kernel, alive, off_mask)
    return ReturnTimeTable(F=F, A=A, horizon=horizon, alive=alive,
                           killed=killed, kernel_digest=kernel.digest())


def return_probability(table: ReturnTimeTable) -> ReturnProbabilityBounds:
    """Certified lower/upper bracket of ``L(x, A)`` from a table."""
    return ReturnProbabilityBounds(lower=table.F.sum(axis=0), alive=table.alive.copy())


def weighted_return_sum(table: ReturnTimeTable, kappa: float) -> WeightedReturnSum:
    """Partial sums ``sum_n kappa^n F[n, x]``; lower bounds for kappa >= 1."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    H = table.horizon
    w = kappa ** np.arange(H + 1, dtype=float)
    vals = w @ table.F
    return WeightedReturnSum(values=vals, tail_weight=(kappa ** H) * table.alive,
                             horizon=H)


def moment_return_sum(table: ReturnTimeTable, ell: int) -> WeightedReturnSum:
    """Partial sums ``sum_n n^ell F[n, x]``."""
    if ell < 0:
        raise ValueError("moment order must be nonnegative")
    H = table.horizon
    w = np.arange(H + 1, dtype=float) ** ell
    vals = w @ table.F
    return WeightedReturnSum(values=vals, tail_weight=(float(H) ** ell) * table.alive,
                             horizon=H)


def occupation_sum(kernel: TruncatedKernel, A, kappa: float, horizon: int) -> OccupationSum:
    """Partial sums of ``kappa^n P^n(x, A)`` over ``1 <= n <= horizon``."""
    A = StateSet.of(A)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    n = kernel.n_states
    ind = A.mask(n).astype(float)
    curve = np.zeros((horizon + 1, n))
    per_step = np.zeros((horizon + 1, n))
    u = ind
    weight = 1.0
    for step in range(1, horizon + 1):
        u = kernel.apply(u)          # P^step (x, A)
        weight *= kappa
        per_step[step] = weight * u
        curve[step] = curve[step - 1] + per_step[step]
    q = max(2, (3 * horizon) // 4)
    tail = per_step[q:horizon + 1].max(axis=1)
    prev = per_step[q - 1:horizon].max(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(prev > 0, tail / np.where(prev > 0, prev, 1.0), 0.0)
    diverging = bool(len(ratios) > 0 and np.median(ratios) >= 1.0 - 1e-6
                     and tail[-1] > 1e-300)
    return OccupationSum(values=curve[horizon], curve=curve, per_step=per_step,
                         kappa=float(kappa), diverging=diverging)


def decomposition_check(kernel: TruncatedKernel, A, horizon: int,
                        table: ReturnTimeTable | None = None) -> DecompositionResidual:
    """Verify the last-exit and first-entrance renewal decompositions.

    Both identities express ``P^n(x, A)`` through first-passage quantities
    and hold exactly on any finite sub-stochastic kernel, so the residual
    is a pure consistency detector: pass a deliberately perturbed ``table``
    and the residual reports the perturbation.
    """
    A = StateSet.of(A)
    n = kernel.n_states
    in_mask = A.mask(n)
    idxA = np.nonzero(in_mask)[0]
    off_mask = ~in_mask
    if table is None:
        table = return_table(kernel, A, horizon)
    H = min(horizon, table.horizon)
    F = table.F

    # Powers restricted to target columns: M[m] = P^m(x, y) for y in A.
    colA = np.zeros((n, len(idxA)))
    colA[idxA, np.arange(len(idxA))] = 1.0
    M = np.zeros((H + 1, n, len(idxA)))
    cur = colA
    for m in range(1, H + 1):
        cur = np.stack([kernel.apply(cur[:, j]) for j in range(cur.shape[1])], axis=1)
        M[m] = cur
    PnA = M.sum(axis=2)  # P^n(x, A)

    # Entry-point resolved first passage: G[m][x, j] = P_x(tau = m, enter at A_j).
    G = np.zeros((H + 1, n, len(idxA)))
    cur = np.zeros((n, len(idxA)))
    for j, a in enumerate(idxA):
        cur[:, j] = kernel.apply(colA[:, j])
    G[1] = cur
    for m in range(2, H + 1):
        cur = np.stack([_taboo_step(kernel, cur[:, j], off_mask)
                        for j in range(cur.shape[1])], axis=1)
        G[m] = cur

    FA = F[:, idxA]                 # F(j, y) for y in A
    PA = PnA[:, idxA]               # P^j(y, A) for y in A
    res_last = 0.0
    res_first = 0.0
    for step in range(1, H + 1):
        conv_last = F[step] + sum(M[m] @ FA[step - m] for m in range(1, step))
        res_last = max(res_last, float(np.abs(PnA[step] - conv_last).max()))
        conv_first = G[step].sum(axis=1) + sum(
            G[m] @ PA[step - m] for m in range(1, step))
        res_first = max(res_first, float(np.abs(PnA[step] - conv_first).max()))
    return DecompositionResidual(last_exit=res_last, first_entrance=res_first,
                                 horizon=H)


def write_return_table_csv(table: ReturnTimeTable, path: str | Path) -> None:
    """Write a table as CSV with columns ``n, x, F, cumulative``.

    The first line is a comment header recording the kernel hash, the
    target set and the horizon, so tables can be matched to their kernels.
    """
    cum = table.cumulative()
    with open(path, "w", newline="") as fh:
        fh.write(f"# kernel={table.kernel_digest} "
                 f"A={','.join(str(i) for i in table.A.indices)} "
                 f"H={table.horizon}\n")
        w = csv.writer(fh)
        w.writerow(["n", "x", "F", "cumulative"])
        for n in range(1, table.horizon + 1):
            for x in range(table.n_states):
                w.writerow([n, x, repr(float(table.F[n, x])),
                            repr(float(cum[n, x]))])


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloEstimate:
    """Empirical first-return summary from simulated paths.

    ``estimate`` is the fraction of paths that hit the target within the
    horizon with ``stderr`` its binomial standard error; ``histogram[n]``
    counts first hits at step ``n``. ``mean_return_time`` averages the hit
    step over hitting paths. Unreturned paths are split into ``killed``
    and (horizon-censored) ``alive`` fractions.
    """

    estimate: float
    stderr: float
    histogram: np.ndarray
    paths: int
    horizon: int
    seed: int
    alive_fraction: float
    killed_fraction: float
    mean_return_time: float
    mean_return_time_stderr: float

    def describe(self) -> dict:
        return {
            "estimate": self.estimate, "stderr": self.stderr,
            "paths": self.paths, "horizon": self.horizon, "seed": self.seed,
            "alive_fraction": self.alive_fraction,
            "killed_fraction": self.killed_fraction,
            "mean_return_time": self.mean_return_time,
            "mean_return_time_stderr": self.mean_return_time_stderr,
        }


class _RowSampler:
    """Lazy per-state cumulative rows for path simulation.

    Works for finite kernels and for unbounded skip-free chains alike; a
    kill outcome is encoded as target ``-1``.
    """

    def __init__(self, source):
        self._cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        if isinstance(source, TruncatedKernel):
            self._kind = "kernel"
            self._kernel = source
        elif isinstance(source, SkipFreeSpec):
            self._kind = "spec"
            self._spec = source
        else:
            raise TypeError(f"cannot simulate from {type(source).__name__}")

    def row(self, state: int) -> tuple[np.ndarray, np.ndarray]:
        hit = self._cache.get(state)
        if hit is not None:
            return hit
        if self._kind == "kernel":
            r = self._kernel.row(state)
            targets = np.nonzero(r > 0)[0]
            probs = r[targets]
        else:
            r = self._spec.row(state)
            targets = np.nonzero(r > 0)[0]
            probs = r[targets]
        defect = 1.0 - probs.sum()
        if defect > 1e-15:
            targets = np.append(targets, -1)
            probs = np.append(probs, defect)
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        entry = (cum, targets.astype(np.int64))
        self._cache[state] = entry
        return entry


def _simulate_block(sampler: _RowSampler, x: int, targets: np.ndarray | None,
                    n_paths: int, horizon: int, rng: np.random.Generator):
    """Simulate one block of paths; returns (hit_steps, kill_steps, alive)."""
    state = np.full(n_paths, x, dtype=np.int64)
    active = np.ones(n_paths, dtype=bool)
    hit_steps = np.zeros(n_paths, dtype=np.int64)   # 0 = never hit
    kill_steps = np.zeros(n_paths, dtype=np.int64)
    for step in range(1, horizon + 1):
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        # Draw for every path slot so that path p's stream does not depend
        # on the fates of other paths in the block.
        u = rng.random(n_paths)[idx]
        cur = state[idx]
        nxt = np.empty(len(idx), dtype=np.int64)
        for s in np.unique(cur):
            cum, targ = sampler.row(int(s))
            sel = cur == s
            nxt[sel] = targ[np.searchsorted(cum, u[sel], side="right").clip(0, len(targ) - 1)]
        state[idx] = nxt
        killed_now = nxt == -1
        if targets is None:
            hit_now = killed_now
        else:
            hit_now = np.isin(nxt, targets)
        hit_steps[idx[hit_now]] = step
        kill_steps[idx[killed_now & ~hit_now]] = step
        active[idx[hit_now | killed_now]] = False
    return hit_steps, kill_steps, int(active.sum())


def simulate_return(source, x: int, A, paths: int, horizon: int, seed: int,
                    threads: int | None = None) -> MonteCarloEstimate:
    """Estimate first-return statistics by simulating paths.

    Parameters
    ----------
    source : TruncatedKernel or SkipFreeSpec
        Simulating a spec follows the untruncated chain, so the estimate is
        unbiased for the infinite-state chain up to the horizon.
    x : int
        Start state.
    A : StateSet, iterable of int, or the string ``"killed"``
        Target set. The token ``"killed"`` targets the kill event itself,
        so the "return time" is the lifetime of a sub-stochastic chain.
    paths, horizon, seed : int
        Simulation size and PRNG seed. Paths are simulated in fixed-size
        blocks with per-block child streams of ``seed``, so the result is
        deterministic in (seed, path index) and independent of threading.
    threads : int, optional
        Worker threads; default from the TRANSIENCE_KIT_THREADS environment
        variable, capped at the number of blocks.
    """
    if paths < 1 or horizon < 1:
        raise ValueError("paths and horizon must be positive")
    sampler = _RowSampler(source)
    if isinstance(A, str):
        if A != "killed":
            raise ValueError("string target must be 'killed'")
        targets = None
    else:
        targets = np.asarray(StateSet.of(A).indices, dtype=np.int64)
    if threads is None:
        try:
            threads = max(1, int(os.environ.get(THREADS_ENV, "1")))
        except ValueError:
            threads = 1
    blocks = [(b, min(MC_BLOCK, paths - b * MC_BLOCK))
              for b in range((paths + MC_BLOCK - 1) // MC_BLOCK)]
    children = np.random.SeedSequence(seed).spawn(len(blocks))

    def run(block) -> tuple[np.ndarray, np.ndarray, int]:
        b, size = block
        rng = np.random.Generator(np.random.Philox(children[b]))
        return _simulate_block(sampler, x, targets, size, horizon, rng)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(blocks))) as ex:
            results = list(ex.map(run, blocks))
    else:
        results = [run(b) for b in blocks]

    hit = np.concatenate([r[0] for r in results])
    kill = np.concatenate([r[1] for r in results])
    alive = sum(r[2] for r in results)
    hits = hit[hit > 0]
    histogram = np.bincount(hit, minlength=horizon + 1)
    histogram[0] = 0
    p_hat = len(hits) / paths
    stderr = float(np.sqrt(p_hat * (1.0 - p_hat) / paths))
    if len(hits) > 0:
        mean_rt = float(hits.mean())
        mean_rt_se = float(hits.std(ddof=1) / np.sqrt(len(hits))) if len(hits) > 1 else 0.0
    else:
        mean_rt = float("nan")
        mean_rt_se = float("nan")
    return MonteCarloEstimate(
        estimate=float(p_hat), stderr=stderr, histogram=histogram,
        paths=paths, horizon=horizon, seed=int(seed),
        alive_fraction=alive / paths,
        killed_fraction=float((kill > 0).sum()) / paths,
        mean_return_time=mean_rt, mean_return_time_stderr=mean_rt_se,
    )
