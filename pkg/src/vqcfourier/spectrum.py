"""Exact Fourier spectrum and coefficient polynomials from tree leaves.

Each leaf contributes ``k 2^-|s+c| (-i)^|s| p(s, c, w) prod sin^s' cos^c'(theta)``
to the coefficient of frequency ``w``; ``p`` is the integer weight obtained
by expanding ``(e^{ix} - e^{-ix})^s (e^{ix} + e^{-ix})^c``. All membership
decisions are made in exact Gaussian-rational arithmetic.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .exact import GaussianRational
from .tree import DEFAULT_LEAF_CAP, circuit_leaves

__all__ = [
    "naive_spectrum",
    "combinatorial_weight",
    "combinatorial_weight_closed_form",
    "hyp2f1_terminating",
    "node_spectrum",
    "CoefficientPolynomial",
    "SpectrumReport",
    "exact_spectrum",
    "evaluate_coefficient",
    "trig_moment",
    "trig_integral_over_pi",
    "coefficient_mean",
    "coefficient_covariance",
    "moment_matrices",
    "circuit_spectrum",
    "evaluate_fourier_sum",
    "dumps_report",
]


def naive_spectrum(encoding_counts) -> list[tuple[int, ...]]:
    """The full hypergrid ``{w : |w_j| <= N_j}`` in lexicographic order."""
    counts = [int(n) for n in encoding_counts]
    if any(n < 0 for n in counts):
        raise ValueError("encoding counts must be non-negative")
    return list(itertools.product(*(range(-n, n + 1) for n in counts)))


@lru_cache(maxsize=None)
def _weight_1d(s: int, c: int, omega: int) -> int:
    if abs(omega) > s + c or (s + c + omega) % 2:
        return 0
    total = 0
    for a in range(s + 1):
        for b in range(c + 1):
            if 2 * a + 2 * b - s - c == omega:
                total += comb(s, a) * comb(c, b) * (-1) ** (s - a)
    return total


def combinatorial_weight(s, c, omega) -> int:
    """p(s, c, w): product over dimensions of the binomial double sums."""
    out = 1
    for sj, cj, wj in zip(s, c, omega, strict=True):
        if sj < 0 or cj < 0:
            raise ValueError("sine/cosine powers must be non-negative")
        out *= _weight_1d(int(sj), int(cj), int(wj))
        if out == 0:
            return 0
    return out


def hyp2f1_terminating(a: int, b: int, c, z) -> Fraction:
    """Gauss 2F1(a, b; c; z) for a non-positive integer ``a`` (finite series).

    ``c`` must not be a non-positive integer reachable before termination.
    """
    if a > 0:
        raise ValueError("series terminates only for non-positive integer a")
    z = Fraction(z)
    c = Fraction(c)
    total = Fraction(0)
    term = Fraction(1)
    for n in range(-a + 1):
        total += term
        denom = (c + n) * (n + 1)
        if denom == 0:
            raise ZeroDivisionError("2F1 lower parameter hits zero")
        term = term * (a + n) * (b + n) * z / denom
    return total


def _closed_form_1d(s: int, c: int, omega: int) -> GaussianRational:
    if (s + c + omega) % 2:
        return GaussianRational(0)
    if -c - s <= omega <= c - s:
        m = (s + c + omega) // 2
        value = (-1) ** s * comb(c, m) * hyp2f1_terminating(-s, -m, Fraction(2 - omega - s + c, 2), -1)
        return GaussianRational(value)
    if c - s < omega <= c + s:
        m = (omega + s - c) // 2
        value = comb(s, m) * hyp2f1_terminating((omega - s - c) // 2, -c, Fraction(2 + omega + s - c, 2), -1)
        return GaussianRational.i_power(s + c - omega) * value
    return GaussianRational(0)


def combinatorial_weight_closed_form(s, c, omega) -> GaussianRational:
    """Same quantity as :func:`combinatorial_weight` via terminating 2F1 series."""
    out = GaussianRational(1)
    for sj, cj, wj in zip(s, c, omega, strict=True):
        out = out * _closed_form_1d(int(sj), int(cj), int(wj))
        if not out:
            return GaussianRational(0)
    return out


def _candidate_axes(s, c):
    return [range(-(sj + cj), sj + cj + 1, 2) for sj, cj in zip(s, c)]


def node_spectrum(s, c) -> list[tuple[int, ...]]:
    return [w for w in itertools.product(*_candidate_axes(s, c)) if combinatorial_weight(s, c, w)]


@dataclass
class CoefficientPolynomial:
    """c_w(theta) = sum amplitude * prod sin(theta_k)^s'_k cos(theta_k)^c'_k."""

    frequency: tuple
    terms: dict  # (s', c') -> GaussianRational, nonzero
    w: int = 0

    def is_zero(self) -> bool:
        return not self.terms

    def conjugate(self) -> CoefficientPolynomial:
        return CoefficientPolynomial(
            tuple(-f for f in self.frequency), {k: a.conjugate() for k, a in self.terms.items()}, self.w
        )


@dataclass
class SpectrumReport:
    circuit_id: str
    encoding_counts: tuple
    d: int
    w: int
    spectrum: list  # sorted frequency tuples
    coefficients: dict  # frequency -> CoefficientPolynomial
    leaf_count: int
    timing: dict = field(default_factory=dict)

    @property
    def naive_grid(self) -> list[tuple[int, ...]]:
        return naive_spectrum(self.encoding_counts)

    def to_dict(self, include_timing: bool = False) -> dict:
        coeffs = []
        for freq in self.spectrum:
            poly = self.coefficients[freq]
            coeffs.append(
                {
                    "frequency": list(freq),
                    "terms": [
                        {"s_prime": list(sp), "c_prime": list(cp), "re": str(a.re), "im": str(a.im)}
                        for (sp, cp), a in sorted(poly.terms.items())
                    ],
                }
            )
        naive_size = int(np.prod([2 * n + 1 for n in self.encoding_counts])) if self.encoding_counts else 1
        out = {
            "circuit_id": self.circuit_id,
            "d": self.d,
            "w": self.w,
            "encoding_counts": list(self.encoding_counts),
            "naive_grid": {"counts": list(self.encoding_counts), "size": naive_size},
            "spectrum_size": len(self.spectrum),
            "spectrum": [list(f) for f in self.spectrum],
            "coefficients": coeffs,
            "leaf_count": self.leaf_count,
        }
        if include_timing:
            out["timing"] = self.timing
        return out

    @classmethod
    def from_dict(cls, data: dict) -> SpectrumReport:
        coeffs = {}
        for entry in data["coefficients"]:
            freq = tuple(entry["frequency"])
            terms = {
                (tuple(t["s_prime"]), tuple(t["c_prime"])): GaussianRational(Fraction(t["re"]), Fraction(t["im"]))
                for t in entry["terms"]
            }
            coeffs[freq] = CoefficientPolynomial(freq, terms, data["w"])
        return cls(
            data["circuit_id"],
            tuple(data["encoding_counts"]),
            data["d"],
            data["w"],
            [tuple(f) for f in data["spectrum"]],
            coeffs,
            data["leaf_count"],
            data.get("timing", {}),
        )


def exact_spectrum(
    leaves, encoding_counts=None, *, d: int | None = None, w: int | None = None, circuit_id: str = ""
) -> SpectrumReport:
    """Group leaf contributions by frequency and (s', c'); keep exact nonzeros."""
    start = time.perf_counter()
    if leaves:
        d = len(leaves[0].s)
        w = len(leaves[0].s_prime)
    d = d or 0
    w = w or 0
    if encoding_counts is None:
        encoding_counts = tuple(max((leaf.s[j] + leaf.c[j] for leaf in leaves), default=0) for j in range(d))
    amps: dict = {}
    for leaf in leaves:
        order = sum(leaf.s) + sum(leaf.c)
        pref = leaf.k * Fraction(1, 2**order) * GaussianRational.i_power(-sum(leaf.s))
        group = (leaf.s_prime, leaf.c_prime)
        for omega in itertools.product(*_candidate_axes(leaf.s, leaf.c)):
            p = combinatorial_weight(leaf.s, leaf.c, omega)
            if not p:
                continue
            slot = amps.setdefault(omega, {})
            slot[group] = slot.get(group, GaussianRational(0)) + pref * p
    coefficients = {}
    for omega, groups in amps.items():
        terms = {g: a for g, a in groups.items() if a}
        if terms:
            coefficients[omega] = CoefficientPolynomial(omega, terms, w)
    spectrum = sorted(coefficients)
    elapsed = time.perf_counter() - start
    return SpectrumReport(
        circuit_id, tuple(encoding_counts), d, w, spectrum, coefficients, len(leaves), {"spectrum_seconds": elapsed}
    )


def evaluate_coefficient(poly: CoefficientPolynomial, theta):
    """Numeric value of the polynomial at ``theta`` (shape ``(w,)`` or ``(B, w)``)."""
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim <= 1
    ts = theta.reshape(1, -1) if single else theta
    if poly.w and ts.shape[1] != poly.w:
        raise ValueError(f"theta has dimension {ts.shape[1]}, expected {poly.w}")
    total = np.zeros(ts.shape[0], dtype=complex)
    if poly.terms:
        sin, cos = np.sin(ts), np.cos(ts)
        for (sp, cp), amp in poly.terms.items():
            if len(sp) != ts.shape[1]:
                raise ValueError(f"theta has dimension {ts.shape[1]}, expected {len(sp)}")
            term = np.full(ts.shape[0], complex(amp))
            for k, (a, b) in enumerate(zip(sp, cp)):
                if a:
                    term = term * sin[:, k] ** a
                if b:
                    term = term * cos[:, k] ** b
            total += term
    return complex(total[0]) if single else total


@lru_cache(maxsize=None)
def trig_moment(s: int, c: int) -> Fraction:
    """E[sin^s cos^c] for theta uniform on [-pi, pi] (exact rational).

    The integral itself is ``2 pi`` times this value.
    """
    if s % 2 or c % 2:
        return Fraction(0)
    return Fraction(factorial(s) * factorial(c), 2 ** (s + c) * factorial(s // 2) * factorial(c // 2) * factorial((s + c) // 2))


def trig_integral_over_pi(s: int, c: int) -> Fraction:
    """``int_{-pi}^{pi} sin^s cos^c dtheta / pi`` (exact)."""
    return 2 * trig_moment(s, c)


def _monomial_mean(sp, cp) -> Fraction:
    out = Fraction(1)
    for a, b in zip(sp, cp):
        out *= trig_moment(a, b)
        if not out:
            break
    return out


def coefficient_mean(poly: CoefficientPolynomial, exact: bool = False):
    total = GaussianRational(0)
    for (sp, cp), amp in poly.terms.items():
        m = _monomial_mean(sp, cp)
        if m:
            total = total + amp * m
    return total if exact else complex(total)


def coefficient_covariance(a: CoefficientPolynomial, b: CoefficientPolynomial, exact: bool = False):
    """Cov(a, b) = E[a b*] - E[a] E[b]* under uniform theta."""
    cross = GaussianRational(0)
    for (sa, ca), amp_a in a.terms.items():
        for (sb, cb), amp_b in b.terms.items():
            m = _monomial_mean(tuple(x + y for x, y in zip(sa, sb)), tuple(x + y for x, y in zip(ca, cb)))
            if m:
                cross = cross + amp_a * amp_b.conjugate() * m
    value = cross - coefficient_mean(a, exact=True) * coefficient_mean(b, exact=True).conjugate()
    return value if exact else complex(value)


def moment_matrices(polys) -> tuple[np.ndarray, np.ndarray]:
    """Float means and covariance matrix for many polynomials at once.

    Expands every polynomial over a shared monomial basis ``T`` so that
    ``E[c c^H] = T G T^H`` with ``G`` the Gram matrix of monomial moments.
    """
    polys = list(polys)
    basis = sorted({key for p in polys for key in p.terms})
    if not basis:
        n = len(polys)
        return np.zeros(n, dtype=complex), np.zeros((n, n), dtype=complex)
    index = {key: i for i, key in enumerate(basis)}
    T = np.zeros((len(polys), len(basis)), dtype=complex)
    for r, p in enumerate(polys):
        for key, amp in p.terms.items():
            T[r, index[key]] = complex(amp)
    s_pows = np.array([sp for sp, _ in basis], dtype=int)
    c_pows = np.array([cp for _, cp in basis], dtype=int)
    g = np.array([float(_monomial_mean(sp, cp)) for sp, cp in basis])
    S = s_pows[:, None, :] + s_pows[None, :, :]
    C = c_pows[:, None, :] + c_pows[None, :, :]
    gram = np.ones((len(basis), len(basis)))
    max_pow = int(max(S.max(initial=0), C.max(initial=0)))
    table = np.array([[float(trig_moment(a, b)) for b in range(max_pow + 1)] for a in range(max_pow + 1)])
    for k in range(S.shape[2]):
        gram *= table[S[:, :, k], C[:, :, k]]
    mean = T @ g
    second = T @ gram @ T.conj().T
    cov = second - np.outer(mean, mean.conj())
    return mean, cov


def dumps_report(report: SpectrumReport, meta: dict | None = None, include_timing: bool = False) -> str:
    data = report.to_dict(include_timing=include_timing)
    if meta is not None:
        data = {"meta": meta, **data}
    return json.dumps(data, indent=1)


def circuit_spectrum(circuit, observable, *, leaf_cap: int = DEFAULT_LEAF_CAP) -> SpectrumReport:
    """Leaves plus exact spectrum for a circuit, with per-stage timings."""
    from .circuit import encoding_counts

    start = time.perf_counter()
    leaves = circuit_leaves(circuit, observable, leaf_cap=leaf_cap)
    tree_seconds = time.perf_counter() - start
    report = exact_spectrum(
        leaves, encoding_counts(circuit), d=circuit.d, w=circuit.w, circuit_id=circuit.name
    )
    report.timing["tree_seconds"] = tree_seconds
    return report


def _rows(v, dim):
    v = np.asarray(v, dtype=float)
    if dim == 0:
        return np.zeros((v.shape[0] if v.ndim == 2 else 1, 0))
    return v.reshape(-1, dim)


def evaluate_fourier_sum(report: SpectrumReport, x, theta) -> np.ndarray:
    """``sum_w c_w(theta) exp(i w.x)`` over the report's spectrum (real part)."""
    xs, ts = _rows(x, report.d), _rows(theta, report.w)
    n = max(len(xs), len(ts))
    total = np.zeros(n, dtype=complex)
    for w in report.spectrum:
        total += evaluate_coefficient(report.coefficients[w], ts) * np.exp(1j * (xs @ np.array(w, dtype=float)))
    return total.real
