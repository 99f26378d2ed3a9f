"""JSON chain descriptions and the parametric families they can name.

Three top-level types are understood::

    {"type": "matrix",   "rows": [[...], ...]}
    {"type": "skipfree", "family": "birth-death" | "up-reset", ...}
    {"type": "rwhl",     "offsets": [...], "pmf": [...]}

Probabilities may be JSON numbers or fraction strings like ``"2/3"`` so
that fixtures can be exact. Formula-valued parameters of the ``up-reset``
family come from a fixed menu, each evaluated at the 1-based level ``k``
(internal state ``i`` corresponds to ``k = i + 1``; reports carry the
offset)::

    {"kind": "constant",       "value": c}        -> c
    {"kind": "harmonic-power", "zeta": z}         -> (k - 1) / k**z
    {"kind": "geometric",      "base": c}         -> c**k
    {"kind": "power-decay",    "zeta": z}         -> k**(-z)
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .kernel import (IncrementDistribution, SkipFreeSpec, TruncatedKernel,
                     truncate)


class ChainSpecError(ValueError):
    """Raised on malformed chain descriptions; message names the bad field."""


def _number(v, field: str) -> float:
    if isinstance(v, bool) or v is None:
        raise ChainSpecError(f"field {field!r}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return float(Fraction(v))
        except (ValueError, ZeroDivisionError) as e:
            raise ChainSpecError(f"field {field!r}: bad fraction {v!r}") from e
    raise ChainSpecError(f"field {field!r}: expected a number, got {type(v).__name__}")


@dataclass(frozen=True)
class MatrixChain:
    """Finite chain given directly by a (sub-)stochastic matrix."""

    matrix: np.ndarray
    name: str = "matrix"

    def kernel(self, n: int | None = None) -> TruncatedKernel:
        """Leading ``n`` by ``n`` corner; mass outside the corner is killed."""
        m = self.matrix
        if n is not None and n < m.shape[0]:
            intrinsic = (m.sum(axis=1) < 1.0 - 1e-10).any()
            corner = m[:n, :n]
            cut = (m[:n, n:].sum() > 0)
            origin = ("mixed" if intrinsic else "truncation") if cut else None
            return TruncatedKernel(corner, origin=origin)
        return TruncatedKernel(m)

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]

    def describe(self) -> dict:
        return {"type": "matrix", "n_states": self.n_states, "name": self.name}


def formula(spec: dict, field: str) -> Callable[[int], float]:
    """Compile one entry of the formula menu into ``k -> value``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ChainSpecError(f"field {field!r}: expected a formula object with 'kind'")
    kind = spec["kind"]
    if kind == "constant":
        c = _number(spec.get("value"), f"{field}.value")
        return lambda k: c
    if kind == "harmonic-power":
        z = _number(spec.get("zeta", 1), f"{field}.zeta")
        return lambda k: (k - 1) / float(k) ** z
    if kind == "geometric":
        c = _number(spec.get("base"), f"{field}.base")
        return lambda k: c ** k
    if kind == "power-decay":
        z = _number(spec.get("zeta"), f"{field}.zeta")
        return lambda k: float(k) ** (-z)
    raise ChainSpecError(f"field {field!r}: unknown formula kind {kind!r}")


def birth_death(p, q=None, r=0.0, reflect: bool = True) -> SkipFreeSpec:
    """Nearest-neighbour chain: up ``p``, down ``q``, hold ``r``.

    With ``reflect`` the down mass at level 0 stays at 0 (stochastic
    reflected walk); without it that mass kills, giving the killed walk
    whose lifetime is the time to step below 0.
    """
    p = _number(p, "p")
    r = _number(r, "r")
    q = (1.0 - p - r) if q is None else _number(q, "q")
    if min(p, q, r) < 0 or abs(p + q + r - 1.0) > 1e-12:
        raise ChainSpecError("birth-death needs p + q + r = 1 with p, q, r >= 0")
    if p <= 0:
        raise ChainSpecError("birth-death needs p > 0")

    def row(i: int):
        v = np.zeros(i + 2)
        v[i + 1] = p
        if i > 0:
            v[i - 1] = q
            v[i] = r
        else:
            v[0] = (q + r) if reflect else r
        return v

    return SkipFreeSpec(
        row_fn=row,
        substochastic_allowed=not reflect,
        name="birth-death" if reflect else "killed-walk",
        meta=(("family", "birth-death"), ("p", p), ("q", q), ("r", r),
              ("reflect", reflect)),
    )


def up_reset(gamma: Callable[[int], float], beta: Callable[[int], float],
             name: str = "up-reset") -> SkipFreeSpec:
    """Chain that climbs one level or resets to the base state.

    In the conventional 1-based labelling, level ``k >= 2`` moves up with
    probability ``gamma(k)`` and back to the base level with probability
    ``beta(k)``; any remaining mass kills. The base level always climbs
    (its up probability is one by the family's definition, whatever the
    gamma formula evaluates to at ``k = 1``). Internally states are
    0-based, so internal state ``i`` is level ``k = i + 1`` and the base
    is internal state 0.
    """

    def row(i: int):
        k = i + 1
        v = np.zeros(i + 2)
        if i == 0:
            v[1] = 1.0
            return v
        g, b = float(gamma(k)), float(beta(k))
        if g < 0 or b < 0 or g + b > 1.0 + 1e-12:
            raise ChainSpecError(f"up-reset row {i}: gamma + beta = {g + b!r} invalid")
        if g <= 0:
            raise ChainSpecError(f"up-reset row {i}: gamma must be positive")
        v[i + 1] = g
        v[0] = b
        return v

    return SkipFreeSpec(row_fn=row, substochastic_allowed=True, name=name,
                        meta=(("family", "up-reset"),), label_offset=1)


def parse_chain(obj: dict):
    """Turn a decoded JSON object into a chain description.

    Returns a :class:`MatrixChain`, :class:`SkipFreeSpec` or
    :class:`IncrementDistribution` and raises :class:`ChainSpecError` with
    the offending field named otherwise.
    """
    if not isinstance(obj, dict):
        raise ChainSpecError("chain description must be a JSON object")
    typ = obj.get("type")
    if typ == "matrix":
        rows = obj.get("rows")
        if not isinstance(rows, list) or not rows:
            raise ChainSpecError("field 'rows': expected a nonempty list of rows")
        parsed = []
        width = len(rows)
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != width:
                raise ChainSpecError(f"field 'rows[{i}]': expected {width} entries")
            parsed.append([_number(v, f"rows[{i}][{j}]") for j, v in enumerate(row)])
        m = np.asarray(parsed)
        if (m < 0).any():
            raise ChainSpecError("field 'rows': negative probability")
        if (m.sum(axis=1) > 1.0 + 1e-10).any():
            bad = int(np.argmax(m.sum(axis=1)))
            raise ChainSpecError(f"field 'rows[{bad}]': row sums to more than 1")
        return MatrixChain(m, name=str(obj.get("name", "matrix")))
    if typ == "skipfree":
        family = obj.get("family")
        if family == "birth-death":
            p = _number(obj.get("p"), "p")
            q = _number(obj["q"], "q") if "q" in obj else None
            r = _number(obj.get("r", 0.0), "r")
            reflect = obj.get("reflect", True)
            if not isinstance(reflect, bool):
                raise ChainSpecError("field 'reflect': expected true or false")
            return birth_death(p, q, r, reflect)
        if family == "up-reset":
            return up_reset(formula(obj.get("gamma"), "gamma"),
                            formula(obj.get("beta"), "beta"),
                            name=str(obj.get("name", "up-reset")))
        raise ChainSpecError(f"field 'family': unknown skip-free family {family!r}")
    if typ == "rwhl":
        offs = obj.get("offsets")
        pmf = obj.get("pmf")
        if not isinstance(offs, list) or not isinstance(pmf, list):
            raise ChainSpecError("fields 'offsets'/'pmf': expected lists")
        if len(offs) != len(pmf):
            raise ChainSpecError("fields 'offsets'/'pmf': lengths differ")
        try:
            offsets = tuple(int(o) for o in offs)
        except (TypeError, ValueError) as e:
            raise ChainSpecError("field 'offsets': expected integers") from e
        probs = tuple(_number(v, f"pmf[{j}]") for j, v in enumerate(pmf))
        order = np.argsort(offsets)
        try:
            return IncrementDistribution(tuple(offsets[i] for i in order),
                                         tuple(probs[i] for i in order))
        except ValueError as e:
            raise ChainSpecError(str(e)) from e
    raise ChainSpecError(f"field 'type': expected matrix/skipfree/rwhl, got {typ!r}")


def load_chain(path: str | Path):
    """Read and parse a chain description file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ChainSpecError(f"cannot read chain file {p}: {e}") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ChainSpecError(f"{p}: invalid JSON at line {e.lineno}: {e.msg}") from e
    return parse_chain(obj)


def build_kernel(chain, n: int) -> TruncatedKernel:
    """Truncate any parsed chain description to an ``n``-state kernel."""
    if isinstance(chain, MatrixChain):
        return chain.kernel(n)
    if isinstance(chain, TruncatedKernel):
        return chain
    return truncate(chain, n)


def describe(chain) -> dict:
    if isinstance(chain, (MatrixChain, SkipFreeSpec, IncrementDistribution)):
        return chain.describe()
    if isinstance(chain, TruncatedKernel):
        return {"type": "kernel", "n_states": chain.n_states, "origin": chain.origin}
    raise TypeError(type(chain).__name__)
