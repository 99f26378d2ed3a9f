"""Finite truncations of countable-state Markov kernels.

A chain on a countable state space is handled through finite windows
``{0, ..., N-1}``. Mass that a transition would send outside the window is
*killed*, never reflected, so every quantity computed downstream is a lower
bound for the corresponding quantity of the untruncated chain. Kernels may
also be intrinsically sub-stochastic (killed chains); the per-row defect
``1 - sum_j P(i, j)`` is stored explicitly together with a tag recording
where the defect came from.

Storage is a dense ``numpy`` array below :data:`DENSE_LIMIT` states and a
``scipy.sparse.csr_array`` above it. All kernels are immutable after
construction.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

#: Default absolute tolerance for probability validation.
PROB_ATOL = 1e-12

#: Kernels with at least this many states use sparse per-row storage.
DENSE_LIMIT = 2048

#: Values the ``origin`` tag of a kernel can take. ``"none"`` means the
#: kernel is stochastic, ``"intrinsic"`` that the defect was present in the
#: chain itself, ``"truncation"`` that it was created by windowing, and
#: ``"mixed"`` that both sources contribute.
ORIGINS = ("none", "intrinsic", "truncation", "mixed")


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateSet:
    """Finite set of state indices, kept sorted and duplicate free.

    Parameters
    ----------
    indices : tuple of int
        Nonempty, strictly increasing state indices.
    """

    indices: tuple[int, ...]

    def __post_init__(self):
        if len(self.indices) == 0:
            raise ValueError("state set must be nonempty")
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise ValueError("state indices must be nonnegative")
        if tuple(sorted(set(idx))) != idx:
            raise ValueError("state indices must be sorted and unique")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, xs: "int | Iterable[int] | StateSet") -> "StateSet":
        """Coerce an int, an iterable of ints or a StateSet into a StateSet."""
        if isinstance(xs, StateSet):
            return xs
        if isinstance(xs, (int, np.integer)):
            return cls((int(xs),))
        return cls(tuple(sorted({int(i) for i in xs})))

    def mask(self, n: int) -> np.ndarray:
        """Boolean membership mask of length ``n``.

        Indices at or beyond ``n`` are ignored, which is how a set defined on
        the full chain is restricted to a truncation window.
        """
        m = np.zeros(n, dtype=bool)
        for i in self.indices:
            if i < n:
                m[i] = True
        if not m.any():
            raise ValueError("state set does not intersect the truncation window")
        return m

    def within(self, n: int) -> tuple[int, ...]:
        """Indices of the set that fall inside a window of size ``n``."""
        return tuple(i for i in self.indices if i < n)

    def __contains__(self, i: int) -> bool:
        return int(i) in self.indices

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class ValidationReport:
    """Result of :func:`validate`.

    Attributes
    ----------
    ok : bool
        True when no violation was found.
    row_sums : numpy.ndarray
        Row sums of the kernel.
    defects : numpy.ndarray
        Stored per-row defects.
    violations : tuple of str
        Human-readable descriptions of each violation, empty when ``ok``.
    """

    ok: bool
    row_sums: np.ndarray
    defects: np.ndarray
    violations: tuple[str, ...]


class TruncatedKernel:
    """Immutable sub-stochastic kernel on ``{0, ..., N-1}``.

    Parameters
    ----------
    matrix : array_like or scipy sparse
        Nonnegative matrix with row sums at most 1 (within ``atol``).
    origin : str
        One of :data:`ORIGINS`; records where the row defect comes from.
        When omitted it is inferred as ``"none"`` (no defect) or
        ``"intrinsic"``.
    atol : float
        Validation tolerance.
    """

    def __init__(self, matrix, origin: str | None = None, atol: float = PROB_ATOL):
        if sp.issparse(matrix):
            m = sp.csr_array(matrix, dtype=float)
            if m.shape[0] != m.shape[1]:
                raise ValueError("kernel matrix must be square")
            n = m.shape[0]
            if n < DENSE_LIMIT:
                m = m.toarray()
        else:
            m = np.asarray(matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("kernel matrix must be square")
            n = m.shape[0]
            if n >= DENSE_LIMIT:
                m = sp.csr_array(m)
            else:
                m = m.copy()
        if n == 0:
            raise ValueError("kernel must have at least one state")
        self.n_states: int = n
        if sp.issparse(m):
            if (m.data < -atol).any():
                raise ValueError("kernel has negative entries")
            m.data[m.data < 0] = 0.0
            sums = np.asarray(m.sum(axis=1)).reshape(-1)
        else:
            if (m < -atol).any():
                raise ValueError("kernel has negative entries")
            np.clip(m, 0.0, None, out=m)
            sums = m.sum(axis=1)
            _freeze(m)
        if (sums > 1.0 + atol).any():
            bad = int(np.argmax(sums))
            raise ValueError(f"row {bad} sums to {sums[bad]!r} > 1")
        self.matrix = m
        self.row_defect: np.ndarray = _freeze(np.maximum(1.0 - sums, 0.0))
        if origin is None:
            origin = "intrinsic" if (self.row_defect > atol).any() else "none"
        if origin not in ORIGINS:
            raise ValueError(f"unknown origin tag {origin!r}")
        self.origin: str = origin
        self._digest: str | None = None

    # -- linear algebra helpers -------------------------------------------

    def apply(self, w: np.ndarray) -> np.ndarray:
        """Return ``P w`` (action on functions). Killed mass contributes 0."""
        w = np.asarray(w, dtype=float)
        out = self.matrix @ w
        return np.asarray(out).reshape(-1)

    def propagate(self, v: np.ndarray) -> np.ndarray:
        """Return ``v P`` (action on measures)."""
        v = np.asarray(v, dtype=float)
        out = v @ self.matrix
        return np.asarray(out).reshape(-1)

    def row(self, i: int) -> np.ndarray:
        """Dense copy of row ``i``."""
        if sp.issparse(self.matrix):
            return np.asarray(self.matrix[[i], :].todense()).reshape(-1)
        return np.array(self.matrix[i])

    def row_sums(self) -> np.ndarray:
        return 1.0 - self.row_defect

    def submatrix(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Dense restriction ``P[rows][:, cols]`` (index arrays)."""
        if sp.issparse(self.matrix):
            return np.asarray(self.matrix[np.ix_(rows, cols)].todense())
        return np.asarray(self.matrix[np.ix_(rows, cols)])

    def dense(self) -> np.ndarray:
        if sp.issparse(self.matrix):
            return self.matrix.toarray()
        return np.array(self.matrix)

    def digest(self) -> str:
        """Short stable hash of the kernel, used in file headers."""
        if self._digest is None:
            h = hashlib.sha256()
            h.update(str(self.n_states).encode())
            if sp.issparse(self.matrix):
                coo = self.matrix.tocoo()
                h.update(np.ascontiguousarray(coo.row).tobytes())
                h.update(np.ascontiguousarray(coo.col).tobytes())
                h.update(np.ascontiguousarray(coo.data).tobytes())
            else:
                h.update(np.ascontiguousarray(self.matrix).tobytes())
            self._digest = h.hexdigest()[:12]
        return self._digest

    def __repr__(self):
        return f"TruncatedKernel(n={self.n_states}, origin={self.origin!r})"


@dataclass(frozen=True)
class SkipFreeSpec:
    """Countable-state chain that never jumps up by more than one.

    ``row(i)`` must return a nonnegative vector of length ``i + 2`` holding
    the transition probabilities from ``i`` to ``0, ..., i + 1``. The up
    probability ``row(i)[i + 1]`` must be positive at every level. Rows may
    be sub-stochastic when ``substochastic_allowed`` is set; the missing
    mass is interpreted as killing.

    Attributes
    ----------
    row_fn : callable
        Level to probability-vector map.
    substochastic_allowed : bool
        Whether rows may sum to less than one.
    name : str
        Short label used in reports.
    meta : tuple
        Key/value pairs describing the parameterization, e.g. the family
        name. ``label_offset`` records a shift between internal 0-based
        indices and a conventional 1-based labelling of the same chain.
    """

    row_fn: Callable[[int], Sequence[float]]
    substochastic_allowed: bool = False
    name: str = "skipfree"
    meta: tuple[tuple[str, object], ...] = ()
    label_offset: int = 0

    def row(self, i: int) -> np.ndarray:
        r = np.asarray(self.row_fn(int(i)), dtype=float)
        if r.ndim != 1 or len(r) != i + 2:
            raise ValueError(f"row({i}) must have length {i + 2}, got {r.shape}")
        if (r < -PROB_ATOL).any():
            raise ValueError(f"row({i}) has negative entries")
        r = np.clip(r, 0.0, None)
        s = r.sum()
        if s > 1.0 + 1e-10:
            raise ValueError(f"row({i}) sums to {s!r} > 1")
        if not self.substochastic_allowed and abs(s - 1.0) > 1e-10:
            raise ValueError(f"row({i}) sums to {s!r}, expected 1")
        if r[i + 1] <= 0.0:
            raise ValueError(f"row({i}) has zero up probability")
        return r

    def up_probability(self, i: int) -> float:
        return float(self.row(i)[i + 1])

    def describe(self) -> dict:
        d = {"type": "skipfree", "name": self.name,
             "substochastic": self.substochastic_allowed}
        d.update({k: v for k, v in self.meta})
        if self.label_offset:
            d["label_offset"] = self.label_offset
        return d


@dataclass(frozen=True)
class IncrementDistribution:
    """Finitely supported integer increment law for a reflected walk.

    The walk moves ``x -> max(x + U, 0)``: increments below zero are folded
    onto state 0 by reflection, which is part of the model, not a truncation
    artifact. Truncation at the upper window edge still kills.
    """

    offsets: tuple[int, ...]
    pmf: tuple[float, ...]

    def __post_init__(self):
        offs = tuple(int(o) for o in self.offsets)
        probs = tuple(float(p) for p in self.pmf)
        if len(offs) != len(probs) or len(offs) == 0:
            raise ValueError("offsets and pmf must be nonempty and aligned")
        if len(set(offs)) != len(offs) or tuple(sorted(offs)) != offs:
            raise ValueError("offsets must be sorted and unique")
        if any(p < -PROB_ATOL for p in probs):
            raise ValueError("pmf has negative entries")
        if abs(sum(probs) - 1.0) > PROB_ATOL:
            raise ValueError(f"pmf sums to {sum(probs)!r}, expected 1")
        object.__setattr__(self, "offsets", offs)
        object.__setattr__(self, "pmf", tuple(max(p, 0.0) for p in probs))

    @property
    def mean(self) -> float:
        """Mean increment, the drift of the unreflected walk."""
        return float(sum(o * p for o, p in zip(self.offsets, self.pmf)))

    @classmethod
    def two_point(cls, p_up: float) -> "IncrementDistribution":
        """Increments ``+1`` with probability ``p_up`` and ``-1`` otherwise."""
        return cls((-1, 1), (1.0 - p_up, p_up))

    def describe(self) -> dict:
        return {"type": "rwhl", "offsets": list(self.offsets),
                "pmf": list(self.pmf), "mean": self.mean}


def validate(kernel: TruncatedKernel, atol: float = PROB_ATOL) -> ValidationReport:
    """Check nonnegativity, row sums and defect bookkeeping of a kernel.

    Returns a :class:`ValidationReport`; it never raises, so it can be used
    on kernels built from untrusted input to collect all problems at once.
    """
    violations: list[str] = []
    if sp.issparse(kernel.matrix):
        mn = kernel.matrix.data.min() if kernel.matrix.nnz else 0.0
        sums = np.asarray(kernel.matrix.sum(axis=1)).reshape(-1)
    else:
        mn = float(kernel.matrix.min()) if kernel.n_states else 0.0
        sums = kernel.matrix.sum(axis=1)
    if mn < -atol:
        violations.append(f"negative entry {mn!r}")
    over = np.nonzero(sums > 1.0 + atol)[0]
    for i in over[:5]:
        violations.append(f"row {int(i)} sums to {sums[i]!r} > 1")
    mism = np.nonzero(np.abs(sums + kernel.row_defect - 1.0) > max(atol, 1e-12))[0]
    for i in mism[:5]:
        violations.append(
            f"row {int(i)}: defect {kernel.row_defect[i]!r} inconsistent with sum {sums[i]!r}"
        )
    if kernel.origin not in ORIGINS:
        violations.append(f"unknown origin {kernel.origin!r}")
    if kernel.origin == "none" and (kernel.row_defect > max(atol, 1e-10)).any():
        violations.append("origin 'none' but defect present")
    return ValidationReport(ok=not violations, row_sums=_freeze(sums),
                            defects=kernel.row_defect, violations=tuple(violations))


def truncate(spec, n: int) -> TruncatedKernel:
    """Window a chain description to ``{0, ..., n-1}`` with killing.

    Parameters
    ----------
    spec : SkipFreeSpec or IncrementDistribution
        Chain description. Skip-free rows beyond the window edge are killed;
        reflected-walk mass below zero is folded to 0 (model semantics) and
        mass at or above ``n`` is killed (truncation semantics).
    n : int
        Window size, at least 1. ``n = 1`` yields the degenerate single
        killed/absorbing row.
    """
    if n < 1:
        raise ValueError("window size must be at least 1")
    if isinstance(spec, SkipFreeSpec):
        return _truncate_skipfree(spec, n)
    if isinstance(spec, IncrementDistribution):
        return _truncate_walk(spec, n)
    raise TypeError(f"cannot truncate object of type {type(spec).__name__}")


def _truncate_skipfree(spec: SkipFreeSpec, n: int) -> TruncatedKernel:
    dense = n < DENSE_LIMIT
    if dense:
        mat = np.zeros((n, n))
    else:
        mat = sp.lil_array((n, n))
    intrinsic = False
    truncated = False
    for i in range(n):
        r = spec.row(i)  # length i + 2, validated
        keep = min(len(r), n)
        if dense:
            mat[i, :keep] = r[:keep]
        else:
            mat[i, :keep] = r[:keep]
        if r[keep:].sum() > 0:
            truncated = True
        if 1.0 - r.sum() > 1e-10:
            intrinsic = True
    if intrinsic and truncated:
        origin = "mixed"
    elif intrinsic:
        origin = "intrinsic"
    elif truncated:
        origin = "truncation"
    else:
        origin = "none"
    if not dense:
        mat = sp.csr_array(mat)
    return TruncatedKernel(mat, origin=origin)


def _truncate_walk(inc: IncrementDistribution, n: int) -> TruncatedKernel:
    dense = n < DENSE_LIMIT
    mat = np.zeros((n, n)) if dense else sp.lil_array((n, n))
    truncated = False
    for i in range(n):
        for off, p in zip(inc.offsets, inc.pmf):
            if p == 0.0:
                continue
            j = max(i + off, 0)
            if j >= n:
                truncated = True
                continue
            mat[i, j] += p
    origin = "truncation" if truncated else "none"
    if not dense:
        mat = sp.csr_array(mat)
    return TruncatedKernel(mat, origin=origin)


def n_step(kernel: TruncatedKernel, x: int, n: int) -> np.ndarray:
    """Distribution of the chain after ``n`` steps started at ``x``.

    The returned vector sums to the survival probability
    ``P^n(x, window)``; the missing mass has been killed.
    """
    if not 0 <= x < kernel.n_states:
        raise ValueError(f"state {x} outside window of size {kernel.n_states}")
    if n < 0:
        raise ValueError("step count must be nonnegative")
    v = np.zeros(kernel.n_states)
    v[x] = 1.0
    for _ in range(n):
        v = kernel.propagate(v)
    return v


def augment_with_cemetery(kernel: TruncatedKernel) -> TruncatedKernel:
    """Adjoin an absorbing cemetery state collecting all killed mass.

    The cemetery gets index ``kernel.n_states``. The result is stochastic;
    hitting times of the cemetery are the lifetime of the original chain,
    counting the killing step itself.
    """
    n = kernel.n_states
    if sp.issparse(kernel.matrix) or n + 1 >= DENSE_LIMIT:
        m = sp.lil_array((n + 1, n + 1))
        m[:n, :n] = kernel.matrix
        for i in range(n):
            if kernel.row_defect[i] > 0:
                m[i, n] = kernel.row_defect[i]
        m[n, n] = 1.0
        m = sp.csr_array(m)
    else:
        m = np.zeros((n + 1, n + 1))
        m[:n, :n] = kernel.dense()
        m[:n, n] = kernel.row_defect
        m[n, n] = 1.0
    return TruncatedKernel(m, origin="none")
