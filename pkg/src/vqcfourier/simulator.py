"""Dense statevector simulation used as ground truth.

States are batched: an array of shape ``(B, 2, ..., 2)`` where axis ``1 + q``
is qubit ``q``. Everything here is deliberately independent of the tree and
spectrum code so it can serve as their oracle.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from .circuit import FEATURE, Circuit, NormalForm, Observable, PauliRotation, encoding_counts
from .pauli import CliffordGate, SignedPauli

__all__ = [
    "DEFAULT_QUBIT_CAP",
    "SimulationError",
    "zero_state",
    "apply_circuit",
    "expectation",
    "pauli_expectation",
    "normal_form_expectation",
    "grid_dft_coefficients",
    "parameter_shift_gradient",
    "finite_difference_gradient",
    "TrainConfig",
    "TrainResult",
    "train",
    "Dataset",
    "friedman_dataset",
]

DEFAULT_QUBIT_CAP = 12
MAX_DFT_POINTS = 10**6

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.array([[1, 0], [0, 1j]], dtype=complex)
_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class SimulationError(RuntimeError):
    pass


def zero_state(n_qubits: int, batch: int = 1) -> np.ndarray:
    psi = np.zeros((batch,) + (2,) * n_qubits, dtype=complex)
    psi[(slice(None),) + (0,) * n_qubits] = 1.0
    return psi


def _apply_1q(psi, mat, q):
    """Apply a 2x2 matrix (shared, or one per batch row with shape (B, 2, 2))."""
    axis = 1 + q
    psi = np.moveaxis(psi, axis, 1)
    shape = psi.shape
    flat = psi.reshape(shape[0], 2, -1)
    if mat.ndim == 2:
        out = np.einsum("ij,bjk->bik", mat, flat)
    else:
        out = np.einsum("bij,bjk->bik", mat, flat)
    return np.moveaxis(out.reshape(shape), 1, axis)


def _apply_clifford(psi, gate: CliffordGate):
    if gate.kind == "H":
        return _apply_1q(psi, _H, gate.qubits[0])
    if gate.kind == "S":
        return _apply_1q(psi, _S, gate.qubits[0])
    a, b = gate.qubits
    psi = psi.copy()
    idx = [slice(None)] * psi.ndim
    idx[1 + a] = 1
    if gate.kind == "CNOT":
        sub = psi[tuple(idx)]
        # Within the control=1 slice the target axis shifts left by one.
        t_axis = 1 + b - (1 if b > a else 0)
        psi[tuple(idx)] = np.flip(sub, axis=t_axis)
        return psi
    idx[1 + b] = 1
    psi[tuple(idx)] *= -1
    return psi


def _rotation_matrices(axis: str, angles: np.ndarray) -> np.ndarray:
    half = np.asarray(angles, dtype=float) / 2
    c = np.cos(half)[:, None, None]
    s = np.sin(half)[:, None, None]
    return c * np.eye(2) - 1j * s * _PAULI[axis]


def _angles(ref, xs, ts):
    return xs[:, ref.index] if ref.kind == FEATURE else ts[:, ref.index]


def _as_rows(v, dim):
    if v.ndim > 1:
        return v
    if dim == 0:
        if v.size:
            raise ValueError(f"got {v.size} values for a zero-dimensional parameter block")
        return v.reshape(1, 0)
    return v.reshape(-1, dim)


def _broadcast(circuit, x, theta):
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    single = x.ndim <= 1 and theta.ndim <= 1
    xs = _as_rows(x, circuit.d)
    ts = _as_rows(theta, circuit.w)
    if xs.shape[1] != circuit.d:
        raise ValueError(f"x has dimension {xs.shape[1]}, expected d={circuit.d}")
    if ts.shape[1] != circuit.w:
        raise ValueError(f"theta has dimension {ts.shape[1]}, expected w={circuit.w}")
    n = max(xs.shape[0], ts.shape[0])
    if xs.shape[0] not in (1, n) or ts.shape[0] not in (1, n):
        raise ValueError("x and theta batch sizes disagree")
    return np.broadcast_to(xs, (n, circuit.d)), np.broadcast_to(ts, (n, circuit.w)), single


def apply_circuit(circuit: Circuit, x, theta, *, qubit_cap: int = DEFAULT_QUBIT_CAP, shifts=None):
    """Final batched state ``U(x, theta)|0>``.

    ``shifts`` optionally maps a gate position to an extra angle added to that
    rotation only (used by the parameter-shift rule).
    """
    if circuit.n_qubits > qubit_cap:
        raise SimulationError(f"{circuit.n_qubits} qubits exceeds the simulator cap of {qubit_cap}")
    xs, ts, _ = _broadcast(circuit, x, theta)
    psi = zero_state(circuit.n_qubits, xs.shape[0])
    for pos, g in enumerate(circuit.gates):
        if isinstance(g, CliffordGate):
            psi = _apply_clifford(psi, g)
        else:
            angles = _angles(g.param, xs, ts)
            if shifts and pos in shifts:
                angles = angles + shifts[pos]
            psi = _apply_1q(psi, _rotation_matrices(g.axis, angles), g.qubit)
    return psi


def _apply_pauli(psi, p: SignedPauli):
    out = psi
    for q, ch in enumerate(p.letters):
        if ch != "I":
            out = _apply_1q(out, _PAULI[ch], q)
    return out * p.phase_value


def pauli_expectation(psi, p: SignedPauli) -> np.ndarray:
    b = psi.shape[0]
    return np.einsum("bi,bi->b", psi.reshape(b, -1).conj(), _apply_pauli(psi, p).reshape(b, -1))


def _observable_expectation(psi, observable: Observable):
    total = np.zeros(psi.shape[0], dtype=complex)
    for weight, p in observable.terms:
        total += float(weight) * pauli_expectation(psi, p)
    if np.max(np.abs(total.imag), initial=0.0) > 1e-10:
        raise SimulationError("expectation has a non-negligible imaginary part")
    return total.real


def expectation(circuit: Circuit, observable: Observable, x, theta, *, qubit_cap: int = DEFAULT_QUBIT_CAP):
    """<0| U^dag O U |0> for one point (float) or a batch (array)."""
    _, _, single = _broadcast(circuit, x, theta)
    psi = apply_circuit(circuit, x, theta, qubit_cap=qubit_cap)
    vals = _observable_expectation(psi, observable)
    return float(vals[0]) if single else vals


def normal_form_expectation(nf: NormalForm, n_qubits: int, x, theta) -> np.ndarray:
    """Simulate the rotations ``exp(-i phi P_j / 2)`` of a normal form directly."""
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    ts = np.atleast_2d(np.asarray(theta, dtype=float))
    n = max(xs.shape[0], ts.shape[0])
    xs = np.broadcast_to(xs, (n, xs.shape[1]))
    ts = np.broadcast_to(ts, (n, ts.shape[1]))
    psi = zero_state(n_qubits, n)
    for p, ref in nf.generators:
        half = _angles(ref, xs, ts) / 2
        shape = (n,) + (1,) * n_qubits
        psi = np.cos(half).reshape(shape) * psi - 1j * np.sin(half).reshape(shape) * _apply_pauli(psi, p)
    return pauli_expectation(psi, nf.observable).real


def grid_dft_coefficients(circuit: Circuit, observable: Observable, theta, counts=None, *, chunk: int = 65536):
    """Fourier coefficients from samples of f on the uniform grid.

    With ``K_j = 2 N_j + 1`` points per feature the DFT of a model whose
    frequencies satisfy ``|w_j| <= N_j`` is exact (no aliasing). Returns a dict
    over the naive grid.
    """
    counts = tuple(encoding_counts(circuit) if counts is None else counts)
    sizes = [2 * n + 1 for n in counts]
    total = int(np.prod(sizes)) if sizes else 1
    if total > MAX_DFT_POINTS:
        raise SimulationError(f"DFT grid of {total} points exceeds {MAX_DFT_POINTS}")
    axes = [2 * np.pi * np.arange(k) / k for k in sizes]
    if sizes:
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(sizes))
    else:
        mesh = np.zeros((1, 0))
    theta = np.asarray(theta, dtype=float).reshape(1, -1)
    values = np.empty(mesh.shape[0])
    for start in range(0, mesh.shape[0], chunk):
        block = mesh[start : start + chunk]
        values[start : start + chunk] = expectation(circuit, observable, block, np.repeat(theta, len(block), 0))
    if not sizes:
        return {(): complex(values[0])}
    spec = np.fft.fftn(values.reshape(sizes)) / total
    out = {}
    for omega in itertools.product(*(range(-n, n + 1) for n in counts)):
        out[omega] = complex(spec[tuple(o % k for o, k in zip(omega, sizes))])
    return out


def parameter_shift_gradient(circuit: Circuit, observable: Observable, x, theta):
    """d f / d theta via +-pi/2 shifts of each variational gate.

    A parameter shared by several gates gets the sum of its per-gate shift
    terms (product rule). Returns shape ``(w,)`` or ``(B, w)``.
    """
    xs, ts, single = _broadcast(circuit, x, theta)
    grad = np.zeros((xs.shape[0], circuit.w))
    for pos, g in enumerate(circuit.gates):
        if isinstance(g, PauliRotation) and g.param.kind != FEATURE:
            plus = _observable_expectation(apply_circuit(circuit, xs, ts, shifts={pos: np.pi / 2}), observable)
            minus = _observable_expectation(apply_circuit(circuit, xs, ts, shifts={pos: -np.pi / 2}), observable)
            grad[:, g.param.index] += (plus - minus) / 2
    return grad[0] if single else grad


def finite_difference_gradient(circuit: Circuit, observable: Observable, x, theta, h: float = 1e-5):
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros(circuit.w)
    for k in range(circuit.w):
        e = np.zeros(circuit.w)
        e[k] = h
        grad[k] = (expectation(circuit, observable, x, theta + e) - expectation(circuit, observable, x, theta - e)) / (2 * h)
    return grad


# --- training ---------------------------------------------------------------


@dataclass
class TrainConfig:
    lr: float = 0.005
    batch: int = 128
    epochs: int = 100
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class TrainResult:
    theta: np.ndarray
    initial_theta: np.ndarray
    train_loss: list = field(default_factory=list)
    test_loss: list = field(default_factory=list)

    @property
    def min_test_loss(self) -> float | None:
        return min(self.test_loss) if self.test_loss else None

    def loss_table(self, delimiter: str = "\t") -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["epoch", "train_mse", "test_mse"])
        for e, tr in enumerate(self.train_loss):
            te = self.test_loss[e] if e < len(self.test_loss) else ""
            writer.writerow([e, repr(tr), repr(te) if te != "" else ""])
        return buf.getvalue()


def _mse(circuit, observable, x, y, theta):
    pred = expectation(circuit, observable, x, np.broadcast_to(theta, (len(x), circuit.w)))
    return float(np.mean((pred - y) ** 2))


def train(
    circuit: Circuit,
    observable: Observable,
    x_train,
    y_train,
    config: TrainConfig | None = None,
    x_test=None,
    y_test=None,
    theta0=None,
) -> TrainResult:
    """Adam on the MSE loss with parameter-shift gradients.

    Features must already be angles (mapped to [-pi, pi)). Initial parameters
    are uniform on [-pi, pi) from ``config.seed`` unless ``theta0`` is given.
    Loss entry 0 is the loss before any update; entry ``e`` after epoch ``e``.
    """
    config = config or TrainConfig()
    rng = np.random.default_rng(config.seed)
    x_train = np.asarray(x_train, dtype=float).reshape(-1, circuit.d)
    y_train = np.asarray(y_train, dtype=float)
    theta = rng.uniform(-np.pi, np.pi, circuit.w) if theta0 is None else np.array(theta0, dtype=float)
    result = TrainResult(theta=theta.copy(), initial_theta=theta.copy())
    has_test = x_test is not None and y_test is not None
    if has_test:
        x_test = np.asarray(x_test, dtype=float).reshape(-1, circuit.d)
        y_test = np.asarray(y_test, dtype=float)

    def record():
        result.train_loss.append(_mse(circuit, observable, x_train, y_train, theta))
        if has_test:
            result.test_loss.append(_mse(circuit, observable, x_test, y_test, theta))

    record()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(x_train))
        for start in range(0, len(order), config.batch):
            idx = order[start : start + config.batch]
            xb, yb = x_train[idx], y_train[idx]
            tb = np.broadcast_to(theta, (len(idx), circuit.w))
            pred = expectation(circuit, observable, xb, tb)
            dpred = parameter_shift_gradient(circuit, observable, xb, tb)
            grad = 2 * np.mean((pred - yb)[:, None] * dpred, axis=0)
            step += 1
            m = config.beta1 * m + (1 - config.beta1) * grad
            v = config.beta2 * v + (1 - config.beta2) * grad**2
            m_hat = m / (1 - config.beta1**step)
            v_hat = v / (1 - config.beta2**step)
            theta = theta - config.lr * m_hat / (np.sqrt(v_hat) + config.eps)
        record()
    result.theta = theta
    return result


# --- datasets ---------------------------------------------------------------


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim == 1:
            self.x = self.x[:, None]
        self.y = np.asarray(self.y, dtype=float)
        if len(self.x) != len(self.y):
            raise ValueError("feature and label counts differ")
        if len(self.y) < 1:
            raise ValueError("dataset must contain at least one sample")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset contains non-finite values")

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def M(self) -> int:
        return len(self.y)


def friedman_function(x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return 10 * np.sin(np.pi * x[:, 0] * x[:, 1]) + 20 * (x[:, 2] - 0.5) ** 2 + 10 * x[:, 3] + 5 * x[:, 4]


def friedman_dataset(M: int, seed: int = 0, noise: float = 0.0, standardize: bool = False) -> Dataset:
    """Friedman #1 regression data on [0, 1]^5 with optional Gaussian noise."""
    if M < 1:
        raise ValueError("M must be at least 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, (M, 5))
    y = friedman_function(x)
    if noise:
        y = y + rng.normal(0.0, noise, M)
    meta = {"generator": "friedman1", "seed": seed, "noise": noise}
    if standardize:
        mu, sd = float(y.mean()), float(y.std())
        sd = sd if sd > 0 else 1.0
        y = (y - mu) / sd
        meta["label_map"] = {"shift": mu, "scale": sd}
    return Dataset(x, y, meta)
