"""Circuit IR, validation, file format and transpilation to normal form.

Rotations use ``R_P(phi) = exp(-i phi P / 2)`` with the raw referenced
parameter as ``phi``. A circuit's model function is
``f(x, theta) = <0| U^dag O U |0>`` with gates applied in list order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .pauli import ABSORB, CliffordGate, SignedPauli, clifford_conjugate

__all__ = [
    "FEATURE",
    "VARIATIONAL",
    "ParamRef",
    "PauliRotation",
    "Circuit",
    "Observable",
    "NormalForm",
    "CircuitError",
    "validate",
    "to_normal_forms",
    "encoding_counts",
    "load_circuit",
    "loads_circuit",
    "dumps_circuit",
    "random_circuit",
]

FEATURE = "feature"
VARIATIONAL = "variational"


class CircuitError(ValueError):
    """Structural problem in a circuit or circuit file."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class ParamRef:
    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in (FEATURE, VARIATIONAL):
            raise ValueError(f"unknown parameter kind {self.kind!r}")
        if self.index < 0:
            raise ValueError("parameter index must be non-negative")

    def __str__(self):
        return f"x{self.index}" if self.kind == FEATURE else f"theta{self.index}"


@dataclass(frozen=True)
class PauliRotation:
    axis: str
    qubit: int
    param: ParamRef

    def __post_init__(self):
        object.__setattr__(self, "axis", self.axis.upper())
        if self.axis not in ("X", "Y", "Z"):
            raise ValueError(f"rotation axis must be X, Y or Z, got {self.axis!r}")


@dataclass(frozen=True)
class Observable:
    """Real-weighted sum of Hermitian Pauli strings."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((Fraction(w), p) for w, p in self.terms)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def single(cls, label: str, weight=1) -> Observable:
        return cls(((weight, SignedPauli.from_label(label)),))

    @property
    def n_qubits(self) -> int:
        return self.terms[0][1].n_qubits

    def to_matrix(self):
        return sum(float(w) * p.to_matrix() for w, p in self.terms)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple
    d: int
    w: int
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))

    @property
    def rotations(self) -> list[PauliRotation]:
        return [g for g in self.gates if isinstance(g, PauliRotation)]


@dataclass(frozen=True)
class NormalForm:
    """``(P_1, ..., P_L | O)``: generators in circuit order plus the observable."""

    generators: tuple  # of (SignedPauli, ParamRef)
    observable: SignedPauli
    d: int = 0
    w: int = 0

    def __str__(self):
        gens = ", ".join(f"{p}[{ref}]" for p, ref in self.generators)
        return f"({gens} | {self.observable})"


def encoding_counts(circuit: Circuit) -> tuple[int, ...]:
    """How often each feature is encoded (N(x_j))."""
    counts = [0] * circuit.d
    for g in circuit.rotations:
        if g.param.kind == FEATURE and g.param.index < circuit.d:
            counts[g.param.index] += 1
    return tuple(counts)


def validate(circuit: Circuit, observable: Observable | None = None) -> list[str]:
    """Return a list of problems (empty when the circuit is valid)."""
    errs = []
    if circuit.n_qubits < 1:
        errs.append("n_qubits must be positive")
    if circuit.d < 0 or circuit.w < 0:
        errs.append("d and w must be non-negative")
    used = {FEATURE: set(), VARIATIONAL: set()}
    for i, g in enumerate(circuit.gates):
        if isinstance(g, CliffordGate):
            errs.extend(f"gate {i}: {msg}" for msg in g.problems(circuit.n_qubits))
        elif isinstance(g, PauliRotation):
            if not 0 <= g.qubit < circuit.n_qubits:
                errs.append(f"gate {i}: qubit {g.qubit} out of range for width {circuit.n_qubits}")
            limit = circuit.d if g.param.kind == FEATURE else circuit.w
            if g.param.index >= limit:
                errs.append(
                    f"gate {i}: {g.param.kind} index {g.param.index} exceeds "
                    f"{'d' if g.param.kind == FEATURE else 'w'}={limit}"
                )
            used[g.param.kind].add(g.param.index)
        else:
            errs.append(f"gate {i}: unknown gate object {g!r}")
    for kind, idx in used.items():
        if idx:
            missing = sorted(set(range(max(idx) + 1)) - idx)
            if missing:
                errs.append(f"{kind} indices not contiguous: missing {missing}")
    if observable is not None:
        if not observable.terms:
            errs.append("observable has no terms")
        for j, (_, p) in enumerate(observable.terms):
            if p.n_qubits != circuit.n_qubits:
                errs.append(f"observable term {j}: width {p.n_qubits} != {circuit.n_qubits}")
            if not p.is_hermitian():
                errs.append(f"observable term {j}: imaginary phase makes it non-Hermitian")
    return errs


def to_normal_forms(circuit: Circuit, observable: Observable) -> list[tuple[Fraction, NormalForm]]:
    """Absorb every Clifford gate into the observable.

    With ``W`` the Clifford word applied before a rotation, ``R_P W = W R_{W^dag P W}``,
    so each generator becomes ``W^dag P W`` and the observable ``W_total^dag O W_total``.
    """
    errs = validate(circuit, observable)
    if errs:
        raise CircuitError(errs)
    n = circuit.n_qubits
    cliffords: list[CliffordGate] = []
    generators = []
    for g in circuit.gates:
        if isinstance(g, CliffordGate):
            cliffords.append(g)
            continue
        p = SignedPauli.single(n, g.qubit, g.axis)
        for c in reversed(cliffords):
            p = clifford_conjugate(c, p, ABSORB)
        generators.append((p, g.param))
    out = []
    for weight, term in observable.terms:
        o = term
        for c in reversed(cliffords):
            o = clifford_conjugate(c, o, ABSORB)
        out.append((weight, NormalForm(tuple(generators), o, circuit.d, circuit.w)))
    return out


# --- file format -----------------------------------------------------------

_TOP_KEYS = {"n_qubits", "d", "w", "gates", "observable", "name"}
_ROT_KEYS = {"type", "qubit", "param"}
_CLIFF_KEYS = {"type", "qubits"}
_PARAM_KINDS = {"feature": FEATURE, "theta": VARIATIONAL, "variational": VARIATIONAL}


def _require(cond, msg):
    if not cond:
        raise CircuitError(msg)


def _check_keys(obj, allowed, where):
    _require(isinstance(obj, dict), f"{where}: expected an object")
    unknown = sorted(set(obj) - allowed)
    _require(not unknown, f"{where}: unknown keys {unknown}")


def _int(v, where):
    _require(isinstance(v, int) and not isinstance(v, bool), f"{where}: expected integer, got {v!r}")
    return v


def circuit_from_dict(data: dict) -> tuple[Circuit, Observable]:
    _check_keys(data, _TOP_KEYS, "circuit")
    for key in ("n_qubits", "d", "w", "gates", "observable"):
        _require(key in data, f"circuit: missing key {key!r}")
    n = _int(data["n_qubits"], "n_qubits")
    _require(isinstance(data["gates"], list), "gates: expected a list")
    gates = []
    for i, g in enumerate(data["gates"]):
        where = f"gates[{i}]"
        _require(isinstance(g, dict) and "type" in g, f"{where}: missing 'type'")
        kind = str(g["type"]).lower()
        if kind in ("rx", "ry", "rz"):
            _check_keys(g, _ROT_KEYS, where)
            _require("qubit" in g and "param" in g, f"{where}: rotation needs 'qubit' and 'param'")
            param = g["param"]
            _check_keys(param, {"kind", "index"}, f"{where}.param")
            _require(param.get("kind") in _PARAM_KINDS, f"{where}.param: kind must be feature or theta")
            ref = ParamRef(_PARAM_KINDS[param["kind"]], _int(param.get("index"), f"{where}.param.index"))
            gates.append(PauliRotation(kind[1].upper(), _int(g["qubit"], f"{where}.qubit"), ref))
        elif kind in ("h", "s", "cnot", "cz"):
            _check_keys(g, _CLIFF_KEYS, where)
            _require(isinstance(g.get("qubits"), list), f"{where}: 'qubits' must be a list")
            gates.append(CliffordGate(kind.upper(), tuple(_int(q, f"{where}.qubits") for q in g["qubits"])))
        else:
            raise CircuitError(f"{where}: unknown gate type {g['type']!r}")
    obs_terms = []
    _require(isinstance(data["observable"], list) and data["observable"], "observable: expected a non-empty list")
    for j, t in enumerate(data["observable"]):
        _check_keys(t, {"weight", "pauli"}, f"observable[{j}]")
        _require("pauli" in t, f"observable[{j}]: missing 'pauli'")
        try:
            weight = Fraction(str(t.get("weight", 1)))
            pauli = SignedPauli.from_label(str(t["pauli"]))
        except (ValueError, ZeroDivisionError) as exc:
            raise CircuitError(f"observable[{j}]: {exc}") from None
        obs_terms.append((weight, pauli))
    circuit = Circuit(n, tuple(gates), _int(data["d"], "d"), _int(data["w"], "w"), str(data.get("name", "")))
    observable = Observable(tuple(obs_terms))
    errs = validate(circuit, observable)
    if errs:
        raise CircuitError(errs)
    return circuit, observable


def circuit_to_dict(circuit: Circuit, observable: Observable) -> dict:
    gates = []
    for g in circuit.gates:
        if isinstance(g, PauliRotation):
            kind = "feature" if g.param.kind == FEATURE else "theta"
            gates.append({"type": "r" + g.axis.lower(), "qubit": g.qubit, "param": {"kind": kind, "index": g.param.index}})
        else:
            gates.append({"type": g.kind.lower(), "qubits": list(g.qubits)})
    out = {"n_qubits": circuit.n_qubits, "d": circuit.d, "w": circuit.w, "gates": gates}
    if circuit.name:
        out["name"] = circuit.name
    out["observable"] = [
        {"weight": str(w) if w.denominator != 1 else int(w), "pauli": p.letters if p.phase == 0 else str(p)}
        for w, p in observable.terms
    ]
    return out


def loads_circuit(text: str) -> tuple[Circuit, Observable]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitError(f"not valid JSON: {exc}") from None
    return circuit_from_dict(data)


def load_circuit(path) -> tuple[Circuit, Observable]:
    path = Path(path)
    circuit, observable = loads_circuit(path.read_text())
    if not circuit.name:
        circuit = Circuit(circuit.n_qubits, circuit.gates, circuit.d, circuit.w, path.stem)
    return circuit, observable


def dumps_circuit(circuit: Circuit, observable: Observable) -> str:
    return json.dumps(circuit_to_dict(circuit, observable), indent=2)


def random_circuit(
    rng: np.random.Generator,
    n_qubits: int = 3,
    n_gates: int = 8,
    max_rotations: int | None = None,
    d: int = 2,
    w: int = 2,
    p_clifford: float = 0.4,
) -> tuple[Circuit, Observable]:
    """Random Clifford+Pauli circuit with a random Pauli-string observable.

    Parameter indices are relabelled afterwards so they are contiguous; the
    returned ``d``/``w`` are the numbers actually used.
    """
    gates = []
    n_rot = 0
    for _ in range(n_gates):
        rot_ok = max_rotations is None or n_rot < max_rotations
        if rot_ok and (rng.random() >= p_clifford or n_qubits == 1 and rng.random() < 0.5):
            kind = FEATURE if rng.random() < 0.5 else VARIATIONAL
            index = int(rng.integers(d if kind == FEATURE else w))
            gates.append(PauliRotation("XYZ"[rng.integers(3)], int(rng.integers(n_qubits)), ParamRef(kind, index)))
            n_rot += 1
        else:
            kinds = ["H", "S"] + (["CNOT", "CZ"] if n_qubits > 1 else [])
            kind = kinds[rng.integers(len(kinds))]
            if kind in ("H", "S"):
                gates.append(CliffordGate(kind, (int(rng.integers(n_qubits)),)))
            else:
                a, b = rng.choice(n_qubits, size=2, replace=False)
                gates.append(CliffordGate(kind, (int(a), int(b))))
    remap = {FEATURE: {}, VARIATIONAL: {}}
    relabelled = []
    for g in gates:
        if isinstance(g, PauliRotation):
            table = remap[g.param.kind]
            idx = table.setdefault(g.param.index, len(table))
            g = PauliRotation(g.axis, g.qubit, ParamRef(g.param.kind, idx))
        relabelled.append(g)
    while True:
        letters = "".join("IXYZ"[rng.integers(4)] for _ in range(n_qubits))
        if set(letters) != {"I"}:
            break
    circuit = Circuit(n_qubits, tuple(relabelled), len(remap[FEATURE]), len(remap[VARIATIONAL]))
    return circuit, Observable.single(letters)
