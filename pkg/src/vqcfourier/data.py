"""Gridded Fourier representation of scattered data.

Samples ``u_j`` live on the torus ``[-1/2, 1/2)^d`` and the model is
``f(u) = sum_w f_w exp(2 pi i w.u)`` over the lattice ``prod {-N_i/2 .. N_i/2 - 1}``.
The coefficients come from a damped minimum-norm solve of ``A f = y``.
"""

from __future__ import annotations

import csv
import itertools
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .simulator import Dataset

__all__ = [
    "ConditioningError",
    "FrequencyGrid",
    "DataSpectrum",
    "FeatureMap",
    "build_grid",
    "damping_factors",
    "nfft_matrix",
    "inverse_nfft",
    "r_nfft",
    "load_dataset",
    "save_dataset",
]

DAMPING_IN = 1e3
DAMPING_OUT = 1e-3
LAMBDA_SCALE = 1e-12


class ConditioningError(RuntimeError):
    """The damped system could not be solved stably."""


@dataclass(frozen=True)
class FrequencyGrid:
    sizes: tuple

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        for n in self.sizes:
            if n < 2 or n % 2:
                raise ValueError(f"grid sizes must be even and >= 2, got {self.sizes}")

    @property
    def d(self) -> int:
        return len(self.sizes)

    @property
    def size(self) -> int:
        return int(np.prod(self.sizes)) if self.sizes else 1

    def axes(self) -> list[np.ndarray]:
        return [np.arange(-n // 2, n // 2) for n in self.sizes]

    def points(self) -> np.ndarray:
        """All lattice frequencies, shape ``(size, d)``, lexicographic order."""
        return np.array(list(itertools.product(*self.axes())), dtype=int).reshape(self.size, self.d)

    def index(self) -> dict:
        return {tuple(int(v) for v in p): i for i, p in enumerate(self.points())}

    def contains(self, omega) -> bool:
        return len(omega) == self.d and all(-n // 2 <= w < n // 2 for w, n in zip(omega, self.sizes))


@dataclass
class DataSpectrum:
    grid: FrequencyGrid
    coefficients: np.ndarray
    residual: float
    damping: np.ndarray
    regime: str = ""
    lam: float = 0.0

    def __post_init__(self):
        if self.coefficients.shape != (self.grid.size,):
            raise ValueError("coefficient count must equal grid size")

    def as_dict(self) -> dict:
        return {tuple(int(v) for v in p): complex(c) for p, c in zip(self.grid.points(), self.coefficients)}

    def to_json(self, meta: dict | None = None) -> str:
        data = {
            "grid": {"sizes": list(self.grid.sizes)},
            "regime": self.regime,
            "lambda": self.lam,
            "residual": self.residual,
            "coefficients": [
                {"frequency": [int(v) for v in p], "re": float(c.real), "im": float(c.imag)}
                for p, c in zip(self.grid.points(), self.coefficients)
            ],
        }
        if meta is not None:
            data = {"meta": meta, **data}
        return json.dumps(data, indent=1)


def build_grid(encoding_counts) -> FrequencyGrid:
    """``N_i = 2 N(x_i) + 2`` so the asymmetric lattice covers ``|w_i| <= N(x_i)``."""
    counts = [int(n) for n in encoding_counts]
    if any(n < 1 for n in counts):
        raise ValueError("encoding counts must be >= 1 to build an inversion grid")
    return FrequencyGrid(tuple(2 * n + 2 for n in counts))


def damping_factors(grid: FrequencyGrid, omega, inside: float = DAMPING_IN, outside: float = DAMPING_OUT) -> np.ndarray:
    """Per-frequency weights: ``inside`` on the target set, ``outside`` elsewhere."""
    weights = np.full(grid.size, float(outside))
    index = grid.index()
    missing = 0
    for w in omega:
        i = index.get(tuple(int(v) for v in w))
        if i is None:
            missing += 1
        else:
            weights[i] = float(inside)
    if missing:
        warnings.warn(f"{missing} frequencies lie outside the grid and were ignored", stacklevel=2)
    return weights


def nfft_matrix(u, grid: FrequencyGrid) -> np.ndarray:
    """``A[j, w] = exp(2 pi i w . u_j)`` built as a product of per-axis factors."""
    u = np.asarray(u, dtype=float).reshape(-1, grid.d)
    A = np.ones((u.shape[0], 1), dtype=complex)
    for dim, freqs in enumerate(grid.axes()):
        factor = np.exp(2j * np.pi * np.outer(u[:, dim], freqs))
        A = (A[:, :, None] * factor[:, None, :]).reshape(u.shape[0], -1)
    return A


def _check_domain(u):
    if np.any(u < -0.5) or np.any(u >= 0.5):
        raise ValueError("sample coordinates must lie in [-1/2, 1/2)")


def inverse_nfft(u, y, grid: FrequencyGrid, damping=None, *, lam_scale: float = LAMBDA_SCALE) -> DataSpectrum:
    """Damped minimum-norm solution of ``A f = y``.

    Underdetermined (grid size >= M): ``f = W A^H (A W A^H + lam I)^-1 y`` with
    ``lam = lam_scale * trace(A W A^H) / M``. Overdetermined: the damped
    normal equations ``(A^H A + lam W^-1) f = A^H y`` with
    ``lam = lam_scale * trace(A^H A) / size``.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    y = np.asarray(y)
    if u.shape[1] != grid.d:
        raise ValueError(f"data dimension {u.shape[1]} does not match grid dimension {grid.d}")
    if len(y) != len(u) or len(y) < 1:
        raise ValueError("need at least one sample and matching label count")
    _check_domain(u)
    weights = np.ones(grid.size) if damping is None else np.asarray(damping, dtype=float)
    if weights.shape != (grid.size,) or np.any(weights <= 0):
        raise ValueError("damping must be positive with one entry per grid frequency")
    A = nfft_matrix(u, grid)
    M = len(y)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            if grid.size >= M:
                K = (A * weights) @ A.conj().T
                lam = lam_scale * float(np.trace(K).real) / M
                K[np.diag_indices(M)] += lam
                alpha = scipy.linalg.solve(K, y.astype(complex), assume_a="pos", check_finite=False)
                f = weights * (A.conj().T @ alpha)
                regime = "underdetermined"
            else:
                K = A.conj().T @ A
                lam = lam_scale * float(np.trace(K).real) / grid.size
                K[np.diag_indices(grid.size)] += lam / weights
                f = scipy.linalg.solve(K, A.conj().T @ y.astype(complex), assume_a="pos", check_finite=False)
                regime = "overdetermined"
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise ConditioningError(f"damped system is singular beyond the regularisation floor: {exc}") from None
    if not np.all(np.isfinite(f)):
        raise ConditioningError("solve produced non-finite coefficients")
    residual = float(np.sum(np.abs(y - A @ f) ** 2))
    return DataSpectrum(grid, f, residual, weights, regime, lam)


def r_nfft(spectrum: DataSpectrum, u, y) -> float:
    """Squared residual of the Fourier fit at the samples."""
    A = nfft_matrix(u, spectrum.grid)
    return float(np.sum(np.abs(np.asarray(y) - A @ spectrum.coefficients) ** 2))


@dataclass
class FeatureMap:
    """Affine map of raw features onto the torus ``[-1/2, 1/2)``.

    The same map times ``2 pi`` gives circuit angles in ``[-pi, pi)``, so
    ``exp(2 pi i w u) = exp(i w x)``. The upper bound wraps onto the lower.
    """

    lo: tuple
    hi: tuple

    @classmethod
    def fit(cls, x) -> FeatureMap:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo, hi = x.min(axis=0), x.max(axis=0)
        hi = np.where(hi > lo, hi, lo + 1.0)
        return cls(tuple(float(v) for v in lo), tuple(float(v) for v in hi))

    def to_torus(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        u = (x - lo) / (hi - lo) - 0.5
        return np.mod(u + 0.5, 1.0) - 0.5

    def to_angles(self, x) -> np.ndarray:
        return 2 * np.pi * self.to_torus(x)

    def as_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "torus": "[-1/2,1/2)", "angles": "[-pi,pi)"}


def load_dataset(path, *, delimiter: str = ",", header: bool = False) -> Dataset:
    """Delimited text: feature columns followed by a label column.

    Lines starting with ``#`` are comments; ``header`` skips the first
    non-comment line.
    """
    rows = []
    with open(path, newline="") as fh:
        lines = [(n, line) for n, line in enumerate(fh) if not line.lstrip().startswith("#")]
        if header:
            lines = lines[1:]
        numbers = [n for n, _ in lines]
        reader = csv.reader([line for _, line in lines], delimiter=delimiter)
        for lineno, row in zip(numbers, reader):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise ValueError(f"{path}:{lineno + 1}: non-numeric value") from None
    if not rows:
        raise ValueError(f"{path}: no samples")
    width = len(rows[0])
    if width < 2 or any(len(r) != width for r in rows):
        raise ValueError(f"{path}: rows must all have the same number (>= 2) of columns")
    arr = np.array(rows)
    return Dataset(arr[:, :-1], arr[:, -1], {"source": str(path)})


def save_dataset(dataset: Dataset, target, *, delimiter: str = ",", header: bool = True, comment: str | None = None) -> None:
    """Write ``dataset`` to a path or text stream; ``comment`` becomes a leading ``#`` line."""
    if hasattr(target, "write"):
        _write_rows(dataset, target, delimiter, header, comment)
        return
    with open(target, "w", newline="") as fh:
        _write_rows(dataset, fh, delimiter, header, comment)


def _write_rows(dataset, fh, delimiter, header, comment):
    if comment is not None:
        fh.write("# " + comment + "\n")
    writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    if header:
        writer.writerow([f"x{j}" for j in range(dataset.d)] + ["y"])
    for xi, yi in zip(dataset.x, dataset.y):
        writer.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])
