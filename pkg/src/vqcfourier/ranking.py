"""Score circuit architectures against a dataset's Fourier representation.

Three terms per architecture with spectrum ``Omega`` on a shared lattice:

* ``R_Omega``  - data energy on lattice frequencies outside ``Omega``;
* ``R_corr``   - Mahalanobis distance of the data coefficients on a random
  subset of ``Omega`` from the coefficient distribution under uniform theta;
* ``R_punish`` - ``|Omega| / |lattice|``.

``R_Omega`` and ``R_corr`` are normalised across the candidate set and added
to ``R_punish``; lower scores rank first.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import DAMPING_IN, DAMPING_OUT, DataSpectrum, FrequencyGrid, build_grid, damping_factors, inverse_nfft
from .spectrum import SpectrumReport, moment_matrices

__all__ = [
    "NULL_PENALTY",
    "EIG_CUTOFF",
    "ArchitectureScore",
    "RankReport",
    "r_omega",
    "r_punish",
    "r_corr",
    "select_subset",
    "shared_grid",
    "normalise",
    "score_and_rank",
]

NULL_PENALTY = 1e6
EIG_CUTOFF = 1e-10


def _index_of(grid: FrequencyGrid) -> dict:
    return grid.index()


def r_omega(data: DataSpectrum, omega) -> float:
    """Sum of ``|f_w|^2`` over lattice frequencies not in ``omega``."""
    index = _index_of(data.grid)
    inside = np.zeros(data.grid.size, dtype=bool)
    for w in omega:
        w = tuple(int(v) for v in w)
        if len(w) != data.grid.d:
            raise ValueError(f"frequency {w} does not match grid dimension {data.grid.d}")
        i = index.get(w)
        if i is not None:
            inside[i] = True
    return float(np.sum(np.abs(data.coefficients[~inside]) ** 2))


def r_punish(omega, grid: FrequencyGrid) -> float:
    return len(list(omega)) / grid.size


def r_corr(f, mean, cov, *, null_penalty: float = NULL_PENALTY, cutoff: float = EIG_CUTOFF) -> float:
    """Mahalanobis distance with a Hermitian pseudo-inverse.

    Eigenvalues below ``cutoff * max eigenvalue`` span the null space; any
    component of ``f - mean`` there costs ``null_penalty`` per unit ``|.|^2``.
    """
    f = np.atleast_1d(np.asarray(f, dtype=complex))
    mean = np.atleast_1d(np.asarray(mean, dtype=complex))
    cov = np.atleast_2d(np.asarray(cov, dtype=complex))
    if not (f.shape == mean.shape and cov.shape == (f.size, f.size)):
        raise ValueError("dimension mismatch between coefficients, means and covariance")
    if f.size == 0:
        return 0.0
    diff = f - mean
    evals, evecs = np.linalg.eigh((cov + cov.conj().T) / 2)
    top = max(float(evals.max()), 0.0)
    keep = evals > cutoff * top if top > 0 else np.zeros_like(evals, dtype=bool)
    coords = evecs.conj().T @ diff
    power = np.abs(coords) ** 2
    value = float(np.sum(power[keep] / evals[keep])) + null_penalty * float(np.sum(power[~keep]))
    return float(np.sqrt(value))


def select_subset(omega, size: int, rng: np.random.Generator) -> list[tuple]:
    """Random subset (sorted) of at most ``size`` frequencies."""
    omega = sorted(tuple(w) for w in omega)
    if size >= len(omega):
        return omega
    picks = rng.choice(len(omega), size=size, replace=False)
    return sorted(omega[i] for i in picks)


def shared_grid(reports) -> FrequencyGrid:
    """Lattice covering every candidate's naive spectrum."""
    counts = np.max([r.encoding_counts for r in reports], axis=0)
    return build_grid([max(int(n), 1) for n in counts])


def normalise(values, method: str = "max") -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if method == "none" or values.size == 0:
        return values.copy()
    top = values.max()
    if method == "max":
        return values / top if top > 0 else np.zeros_like(values)
    if method == "minmax":
        low = values.min()
        return (values - low) / (top - low) if top > low else np.zeros_like(values)
    raise ValueError(f"unknown normalisation {method!r}")


@dataclass
class ArchitectureScore:
    name: str
    spectrum_size: int
    r_omega: float
    r_corr: float
    r_punish: float
    r_nfft: float
    subset_size: int
    subset: list = field(default_factory=list)
    r_omega_norm: float = 0.0
    r_corr_norm: float = 0.0
    score: float = 0.0
    rank: int = 0


@dataclass
class RankReport:
    scores: list  # in input order
    provenance: dict = field(default_factory=dict)

    def ranked(self) -> list[ArchitectureScore]:
        return sorted(self.scores, key=lambda s: s.rank)

    def to_json(self, meta: dict | None = None) -> str:
        data = {"provenance": self.provenance, "architectures": [asdict(s) for s in self.ranked()]}
        if meta is not None:
            data = {"meta": meta, **data}
        return json.dumps(data, indent=1)

    def to_table(self, delimiter: str = "\t", meta: dict | None = None) -> str:
        buf = io.StringIO()
        if meta is not None:
            buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        cols = ["rank", "name", "score", "r_omega_norm", "r_corr_norm", "r_punish", "r_omega", "r_corr", "spectrum_size"]
        writer.writerow(cols)
        for s in self.ranked():
            writer.writerow([repr(getattr(s, c)) if isinstance(getattr(s, c), float) else getattr(s, c) for c in cols])
        return buf.getvalue()

    def plot(self, path) -> None:
        """Stacked bars of the three score terms in ranked order."""
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        ranked = self.ranked()
        pos = np.arange(1, len(ranked) + 1)
        a = np.array([s.r_omega_norm for s in ranked])
        b = np.array([s.r_punish for s in ranked])
        c = np.array([s.r_corr_norm for s in ranked])
        fig, ax = plt.subplots(figsize=(max(4, 0.8 * len(ranked) + 2), 3.5))
        ax.bar(pos, a, label="R_Omega")
        ax.bar(pos, b, bottom=a, label="R_punish")
        ax.bar(pos, c, bottom=a + b, label="R_corr")
        for x, s in zip(pos, ranked):
            ax.text(x, s.score, s.name, ha="center", va="bottom", fontsize=7)
        ax.set_xlabel("rank")
        ax.set_ylabel("score")
        ax.set_xticks(pos)
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
        plt.close(fig)


def _score_one(report, u, y, grid, subset_size, seed, idx, damping_in, damping_out, null_penalty):
    omega = [w for w in report.spectrum if grid.contains(w)]
    weights = damping_factors(grid, omega, damping_in, damping_out)
    data = inverse_nfft(u, y, grid, weights)
    rng = np.random.default_rng([seed, idx])
    subset = select_subset(omega, subset_size, rng)
    index = grid.index()
    f = np.array([data.coefficients[index[w]] for w in subset], dtype=complex)
    mean, cov = moment_matrices([report.coefficients[w] for w in subset])
    return ArchitectureScore(
        name=report.circuit_id or f"arch{idx}",
        spectrum_size=len(omega),
        r_omega=r_omega(data, omega),
        r_corr=r_corr(f, mean, cov, null_penalty=null_penalty),
        r_punish=r_punish(omega, grid),
        r_nfft=data.residual,
        subset_size=len(subset),
        subset=[list(w) for w in subset],
    )


def score_and_rank(
    architectures,
    u,
    y,
    *,
    grid: FrequencyGrid | None = None,
    subset_size: int = 100,
    seed: int = 0,
    damping_in: float = DAMPING_IN,
    damping_out: float = DAMPING_OUT,
    normalization: str = "max",
    null_penalty: float = NULL_PENALTY,
    workers: int = 1,
) -> RankReport:
    """Score every architecture (each with its own damping) and rank them.

    ``u`` are sample coordinates on ``[-1/2, 1/2)^d``. Ties keep input order.
    """
    architectures = list(architectures)
    if not architectures:
        raise ValueError("no candidate architectures given")
    dims = {r.d for r in architectures}
    u = np.asarray(u, dtype=float)
    u = u[:, None] if u.ndim == 1 else u
    if len(dims) != 1 or u.shape[1] not in dims:
        raise ValueError(f"inconsistent feature dimensions: architectures {sorted(dims)}, data {u.shape[1]}")
    grid = grid or shared_grid(architectures)
    args = [
        (r, u, y, grid, subset_size, seed, i, damping_in, damping_out, null_penalty) for i, r in enumerate(architectures)
    ]
    if workers > 1 and len(architectures) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(_score_one, *zip(*args)))
    else:
        scores = [_score_one(*a) for a in args]

    omega_norm = normalise([s.r_omega for s in scores], normalization)
    corr_norm = normalise([s.r_corr for s in scores], normalization)
    for s, a, c in zip(scores, omega_norm, corr_norm):
        s.r_omega_norm = float(a)
        s.r_corr_norm = float(c)
        s.score = float(a + c + s.r_punish)
    order = sorted(range(len(scores)), key=lambda i: (scores[i].score, i))
    for rank, i in enumerate(order, start=1):
        scores[i].rank = rank
    provenance = {
        "grid": list(grid.sizes),
        "damping_in": damping_in,
        "damping_out": damping_out,
        "subset_size": subset_size,
        "seed": seed,
        "normalization": normalization,
        "null_penalty": null_penalty,
    }
    return RankReport(scores, provenance)
