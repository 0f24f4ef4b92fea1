"""Binary-tree expansion of a normal form into trigonometric leaf terms.

Conjugating ``O`` by the last rotation gives ``O`` when ``[P, O] = 0`` and
``cos(phi) O + sin(phi) iPO`` otherwise. Unrolling this from the last
generator to the first yields a sum over leaves of
``k * prod sin^s cos^c (x) * prod sin^s' cos^c' (theta)`` where ``k`` is the
leaf observable's ``|0...0>`` expectation.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circuit import FEATURE, Circuit, NormalForm, Observable, to_normal_forms
from .exact import GaussianRational
from .pauli import commutes, multiply

__all__ = [
    "DEFAULT_LEAF_CAP",
    "LeafCapExceeded",
    "LeafTerm",
    "build_leaves",
    "merge_leaves",
    "circuit_leaves",
    "evaluate_reconstruction",
    "dumps_leaves",
    "loads_leaves",
]

DEFAULT_LEAF_CAP = 2**22


class LeafCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class LeafTerm:
    s: tuple
    c: tuple
    s_prime: tuple
    c_prime: tuple
    k: GaussianRational

    @property
    def signature(self):
        return (self.s, self.c, self.s_prime, self.c_prime)


def _split(sig, d, w, k):
    return LeafTerm(
        tuple(sig[:d]), tuple(sig[d : 2 * d]), tuple(sig[2 * d : 2 * d + w]), tuple(sig[2 * d + w :]), k
    )


def build_leaves(nf: NormalForm, *, leaf_cap: int = DEFAULT_LEAF_CAP, merge: bool = True) -> list[LeafTerm]:
    """Expand ``nf`` depth first and return its nonzero leaves.

    With ``merge`` the leaves sharing a signature are summed and exact
    cancellations dropped; without it every surviving path is returned.
    Raises :class:`LeafCapExceeded` once more than ``leaf_cap`` leaves have
    been reached (discarded leaves count too).
    """
    d, w = nf.d, nf.w
    gens = nf.generators
    # Counter layout: [s (d) | c (d) | s' (w) | c' (w)].
    sin_slot, cos_slot = [], []
    for _, ref in gens:
        base = 0 if ref.kind == FEATURE else 2 * d
        width = d if ref.kind == FEATURE else w
        sin_slot.append(base + ref.index)
        cos_slot.append(base + width + ref.index)

    counts = [0] * (2 * d + 2 * w)
    found: list = []
    reached = 0

    def visit(depth, obs):
        nonlocal reached
        # Only prune at the leaves: later branches still change the observable.
        while depth and commutes(gens[depth - 1][0], obs):
            depth -= 1
        if depth == 0:
            reached += 1
            if reached > leaf_cap:
                raise LeafCapExceeded(f"tree expansion exceeded the leaf cap of {leaf_cap}")
            if not obs.x:
                found.append((tuple(counts), GaussianRational.i_power(obs.phase)))
            return
        p = gens[depth - 1][0]
        slot = cos_slot[depth - 1]
        counts[slot] += 1
        visit(depth - 1, obs)
        counts[slot] -= 1
        sin_obs = multiply(p, obs)
        slot = sin_slot[depth - 1]
        counts[slot] += 1
        visit(depth - 1, sin_obs.with_phase(sin_obs.phase + 1))
        counts[slot] -= 1

    limit = sys.getrecursionlimit()
    if len(gens) + 100 > limit:
        sys.setrecursionlimit(len(gens) + 200)
    visit(len(gens), nf.observable)

    if not merge:
        return [_split(sig, d, w, k) for sig, k in found]
    merged: dict = {}
    for sig, k in found:
        merged[sig] = merged.get(sig, GaussianRational(0)) + k
    return [_split(sig, d, w, k) for sig, k in merged.items() if k]


def merge_leaves(leaves) -> list[LeafTerm]:
    """Sum the constants of leaves with identical signatures, dropping zeros."""
    merged: dict = {}
    for leaf in leaves:
        sig = leaf.signature
        merged[sig] = merged.get(sig, GaussianRational(0)) + leaf.k
    return [LeafTerm(*sig, k) for sig, k in merged.items() if k]


def circuit_leaves(
    circuit: Circuit, observable: Observable, *, leaf_cap: int = DEFAULT_LEAF_CAP
) -> list[LeafTerm]:
    """Leaves for a weighted observable: per-term expansion, k scaled by weight."""
    out = []
    for weight, nf in to_normal_forms(circuit, observable):
        for leaf in build_leaves(nf, leaf_cap=leaf_cap):
            out.append(LeafTerm(leaf.s, leaf.c, leaf.s_prime, leaf.c_prime, leaf.k * weight))
    return merge_leaves(out)


def _trig_product(angles, s_pow, c_pow):
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    out = np.ones(angles.shape[0])
    for j, (a, b) in enumerate(zip(s_pow, c_pow)):
        if a:
            out = out * np.sin(angles[:, j]) ** a
        if b:
            out = out * np.cos(angles[:, j]) ** b
    return out


def evaluate_reconstruction(leaves, x, theta, d: int | None = None, w: int | None = None):
    """Evaluate the leaf decomposition at one or many points.

    ``x`` has shape ``(d,)`` or ``(B, d)``; ``theta`` likewise with ``w``.
    Returns a float for single points and an array for batches.
    """
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    single = x.ndim <= 1 and theta.ndim <= 1
    xs = np.atleast_2d(x) if x.size else np.zeros((1, 0))
    ts = np.atleast_2d(theta) if theta.size else np.zeros((1, 0))
    if leaves:
        d = len(leaves[0].s) if d is None else d
        w = len(leaves[0].s_prime) if w is None else w
    if d is not None and xs.shape[1] != d:
        raise ValueError(f"x has dimension {xs.shape[1]}, expected {d}")
    if w is not None and ts.shape[1] != w:
        raise ValueError(f"theta has dimension {ts.shape[1]}, expected {w}")
    n = max(xs.shape[0], ts.shape[0])
    total = np.zeros(n, dtype=complex)
    for leaf in leaves:
        total = total + complex(leaf.k) * _trig_product(xs, leaf.s, leaf.c) * _trig_product(
            ts, leaf.s_prime, leaf.c_prime
        )
    if np.any(np.abs(total.imag) > 1e-9 * (1 + np.abs(total.real))):
        raise ValueError("reconstruction is not real; leaves do not come from a Hermitian observable")
    result = total.real
    return float(result[0]) if single else result


def _frac_str(v: Fraction) -> str:
    return str(v)


def dumps_leaves(leaves) -> str:
    """Leaf dump: list of {s, c, s_prime, c_prime, k_re, k_im} (exact rationals as strings)."""
    rows = [
        {
            "s": list(leaf.s),
            "c": list(leaf.c),
            "s_prime": list(leaf.s_prime),
            "c_prime": list(leaf.c_prime),
            "k_re": _frac_str(leaf.k.re),
            "k_im": _frac_str(leaf.k.im),
        }
        for leaf in sorted(leaves, key=lambda t: t.signature)
    ]
    return json.dumps(rows, indent=1)


def loads_leaves(text: str) -> list[LeafTerm]:
    rows = json.loads(text)
    return [
        LeafTerm(
            tuple(r["s"]),
            tuple(r["c"]),
            tuple(r["s_prime"]),
            tuple(r["c_prime"]),
            GaussianRational(Fraction(r["k_re"]), Fraction(r["k_im"])),
        )
        for r in rows
    ]
