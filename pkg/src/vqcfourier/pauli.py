"""Phased Pauli strings and the Clifford gates that permute them.

A string on ``n`` qubits is stored as two bitmasks (bit ``q`` of ``x`` / ``z``
marks an X / Z component on qubit ``q``; both set means Y) plus a phase
exponent ``k`` so that the operator is ``i**k`` times the tensor product of
letters. Qubit ``q`` is character ``q`` of the textual form, and the leftmost
Kronecker factor of the dense matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "SignedPauli",
    "CliffordGate",
    "CLIFFORD_KINDS",
    "multiply",
    "commutes",
    "clifford_conjugate",
    "zero_state_expectation",
    "PUSH_RIGHT",
    "ABSORB",
]

PUSH_RIGHT = "push-right"
ABSORB = "absorb"

_PHASE_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_PHASE_VALUE = (1 + 0j, 1j, -1 + 0j, -1j)


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class SignedPauli:
    n_qubits: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("bitmask exceeds string width")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str) -> SignedPauli:
        """Parse labels such as ``"XZ"``, ``"-iYI"`` or ``"+ZZ"``."""
        text = label.strip()
        phase = 0
        if text.startswith(("+", "-")):
            phase = 0 if text[0] == "+" else 2
            text = text[1:]
        if text.startswith("i"):
            phase += 1
            text = text[1:]
        if not text:
            raise ValueError(f"empty Pauli label {label!r}")
        x = z = 0
        for q, ch in enumerate(text.upper()):
            if ch == "X":
                x |= 1 << q
            elif ch == "Z":
                z |= 1 << q
            elif ch == "Y":
                x |= 1 << q
                z |= 1 << q
            elif ch != "I":
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}")
        return cls(len(text), x, z, phase)

    @classmethod
    def identity(cls, n_qubits: int) -> SignedPauli:
        return cls(n_qubits)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> SignedPauli:
        if not 0 <= qubit < n_qubits:
            raise ValueError(f"qubit {qubit} outside width {n_qubits}")
        letter = letter.upper()
        bit = 1 << qubit
        x = bit if letter in "XY" else 0
        z = bit if letter in "ZY" else 0
        if letter not in "IXYZ" or len(letter) != 1:
            raise ValueError(f"invalid Pauli letter {letter!r}")
        return cls(n_qubits, x, z, 0)

    @property
    def letters(self) -> str:
        out = []
        for q in range(self.n_qubits):
            xb = (self.x >> q) & 1
            zb = (self.z >> q) & 1
            out.append("IXZY"[xb + 2 * zb])
        return "".join(out)

    @property
    def support(self) -> int:
        return self.x | self.z

    @property
    def phase_value(self) -> complex:
        return _PHASE_VALUE[self.phase]

    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    def with_phase(self, phase: int) -> SignedPauli:
        return SignedPauli(self.n_qubits, self.x, self.z, phase)

    def __mul__(self, other: SignedPauli) -> SignedPauli:
        return multiply(self, other)

    def __neg__(self) -> SignedPauli:
        return self.with_phase(self.phase + 2)

    def __str__(self) -> str:
        return _PHASE_PREFIX[self.phase] + self.letters

    def to_matrix(self):
        import numpy as np

        mats = {
            "I": np.eye(2, dtype=complex),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        }
        out = np.array([[self.phase_value]], dtype=complex)
        for ch in self.letters:
            out = np.kron(out, mats[ch])
        return out


def _check_width(a: SignedPauli, b: SignedPauli) -> None:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"width mismatch: {a.n_qubits} vs {b.n_qubits}")


def multiply(a: SignedPauli, b: SignedPauli) -> SignedPauli:
    """Operator product ``a @ b`` with exact phase."""
    _check_width(a, b)
    # Each letter is i**(x&z) X**x Z**z; moving Z^z1 past X^x2 costs (-1)^(z1&x2).
    x = a.x ^ b.x
    z = a.z ^ b.z
    phase = (
        a.phase
        + b.phase
        + _popcount(a.x & a.z)
        + _popcount(b.x & b.z)
        + 2 * _popcount(a.z & b.x)
        - _popcount(x & z)
    )
    return SignedPauli(a.n_qubits, x, z, phase)


def commutes(a: SignedPauli, b: SignedPauli) -> bool:
    _check_width(a, b)
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


CLIFFORD_KINDS = ("H", "S", "CNOT", "CZ")
_ARITY = {"H": 1, "S": 1, "CNOT": 2, "CZ": 2}


@dataclass(frozen=True)
class CliffordGate:
    kind: str
    qubits: tuple

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if kind not in _ARITY:
            raise ValueError(f"unsupported Clifford gate {self.kind!r}")

    def problems(self, n_qubits: int) -> list[str]:
        errs = []
        if len(self.qubits) != _ARITY[self.kind]:
            errs.append(f"{self.kind} expects {_ARITY[self.kind]} qubit(s), got {len(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits):
            errs.append("duplicate qubit")
        for q in self.qubits:
            if not 0 <= q < n_qubits:
                errs.append(f"qubit {q} out of range for width {n_qubits}")
        return errs


def _images(gate: CliffordGate, n: int) -> dict[tuple[int, str], SignedPauli]:
    """Images g X_q g^dag and g Z_q g^dag for the qubits the gate touches."""
    one = lambda q, letter: SignedPauli.single(n, q, letter)  # noqa: E731
    if gate.kind == "H":
        (q,) = gate.qubits
        return {(q, "X"): one(q, "Z"), (q, "Z"): one(q, "X")}
    if gate.kind == "S":
        (q,) = gate.qubits
        return {(q, "X"): one(q, "Y"), (q, "Z"): one(q, "Z")}
    if gate.kind == "CNOT":
        c, t = gate.qubits
        return {
            (c, "X"): one(c, "X") * one(t, "X"),
            (c, "Z"): one(c, "Z"),
            (t, "X"): one(t, "X"),
            (t, "Z"): one(c, "Z") * one(t, "Z"),
        }
    a, b = gate.qubits
    return {
        (a, "X"): one(a, "X") * one(b, "Z"),
        (a, "Z"): one(a, "Z"),
        (b, "X"): one(a, "Z") * one(b, "X"),
        (b, "Z"): one(b, "Z"),
    }


def _push_right(gate: CliffordGate, p: SignedPauli) -> SignedPauli:
    n = p.n_qubits
    touched = 0
    for q in gate.qubits:
        if not 0 <= q < n:
            raise ValueError(f"gate qubit {q} outside width {n}")
        touched |= 1 << q
    if not (p.support & touched):
        return p
    images = _images(gate, n)
    # Untouched part passes through; touched letters expand as i^(x&z) X^x Z^z.
    rest = SignedPauli(n, p.x & ~touched, p.z & ~touched, p.phase)
    out = rest
    extra = 0
    for q in gate.qubits:
        xb = (p.x >> q) & 1
        zb = (p.z >> q) & 1
        extra += xb & zb
        if xb:
            out = out * images[(q, "X")]
        if zb:
            out = out * images[(q, "Z")]
    # rest acts on other qubits, so it commutes with every image factor.
    return out.with_phase(out.phase + extra)


def clifford_conjugate(gate: CliffordGate, p: SignedPauli, direction: str = PUSH_RIGHT) -> SignedPauli:
    """``g p g^dag`` for ``push-right``, ``g^dag p g`` for ``absorb``."""
    if direction == PUSH_RIGHT:
        return _push_right(gate, p)
    if direction == ABSORB:
        if gate.kind == "S":
            # S^dag = S^3
            return _push_right(gate, _push_right(gate, _push_right(gate, p)))
        return _push_right(gate, p)
    raise ValueError(f"unknown direction {direction!r}")


def zero_state_expectation(p: SignedPauli) -> complex:
    """<0...0| p |0...0>: the phase when only I/Z letters occur, else 0."""
    if p.x:
        return 0j
    return p.phase_value
