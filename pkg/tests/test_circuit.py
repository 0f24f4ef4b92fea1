import json

import numpy as np
import pytest
from helpers import feat, doubled, rot, rx_theta, var

from vqcfourier.circuit import (
    Circuit,
    CircuitError,
    Observable,
    dumps_circuit,
    encoding_counts,
    load_circuit,
    loads_circuit,
    random_circuit,
    to_normal_forms,
    validate,
)
from vqcfourier.pauli import CliffordGate, SignedPauli
from vqcfourier.simulator import expectation, normal_form_expectation

P = SignedPauli.from_label


def test_validate_examples():
    assert validate(Circuit(1, [], 0, 0)) == []
    errs = validate(Circuit(2, [CliffordGate("CNOT", (0, 0))], 0, 0))
    assert any("duplicate qubit" in e for e in errs)
    errs = validate(Circuit(1, [rot("X", 0, feat(3))], 2, 0))
    assert errs and "gate 0" in errs[0]


def test_validate_contiguity_and_observable():
    assert validate(Circuit(1, [rot("X", 0, feat(1))], 2, 0))
    assert validate(Circuit(1, [], 0, 0), Observable.single("ZZ"))
    assert validate(Circuit(1, [], 0, 0), Observable(((1, P("iZ")),)))


def test_clifford_only_circuit():
    circuit = Circuit(2, [CliffordGate("H", (0,)), CliffordGate("CNOT", (0, 1))], 0, 0)
    [(weight, nf)] = to_normal_forms(circuit, Observable.single("ZZ"))
    assert weight == 1
    assert nf.generators == ()
    assert nf.observable == P("IZ")


def test_doubled_normal_form():
    circuit, obs = doubled()
    [(_, nf)] = to_normal_forms(circuit, obs)
    assert [str(p) for p, _ in nf.generators] == ["+XI", "+XI", "+IX"]
    assert [ref.index for _, ref in nf.generators] == [0, 0, 1]
    assert nf.observable == P("ZI")


def test_trailing_hadamard_absorbed():
    circuit = Circuit(1, [rot("X", 0, var(0)), CliffordGate("H", (0,))], 0, 1)
    obs = Observable.single("Z")
    [(_, nf)] = to_normal_forms(circuit, obs)
    assert nf.generators[0][0] == P("X")
    assert nf.observable == P("X")
    for theta in (0.0, 0.4, 2.0):
        assert normal_form_expectation(nf, 1, np.zeros(0), [theta])[0] == pytest.approx(
            expectation(circuit, obs, np.zeros(0), [theta]), abs=1e-12
        )


def test_normal_form_matches_statevector():
    rng = np.random.default_rng(4)
    for _ in range(50):
        circuit, obs = random_circuit(rng, n_qubits=3, n_gates=10)
        x = rng.uniform(-np.pi, np.pi, (5, circuit.d))
        theta = rng.uniform(-np.pi, np.pi, (5, circuit.w))
        [(_, nf)] = to_normal_forms(circuit, obs)
        got = normal_form_expectation(nf, 3, x, theta)
        assert np.allclose(got, expectation(circuit, obs, x, theta), atol=1e-12)


def test_encoding_counts():
    assert encoding_counts(doubled()[0]) == (2, 1)
    assert encoding_counts(rx_theta()[0]) == ()


def test_file_roundtrip(tmp_path):
    circuit, obs = doubled()
    path = tmp_path / "doubled.json"
    path.write_text(dumps_circuit(circuit, obs))
    loaded, lobs = load_circuit(path)
    assert loaded == circuit
    assert lobs == obs


def test_file_name_defaults_to_stem(tmp_path):
    data = json.loads(dumps_circuit(*rx_theta()))
    del data["name"]
    path = tmp_path / "model.json"
    path.write_text(json.dumps(data))
    assert load_circuit(path)[0].name == "model"


@pytest.mark.parametrize(
    "text",
    [
        "{",
        '{"n_qubits": 1, "d": 0, "w": 0, "gates": [], "observable": [], "extra": 1}',
        '{"n_qubits": 1, "d": 0, "w": 0, "gates": [{"type": "rq", "qubit": 0}], "observable": [{"pauli": "Z"}]}',
        '{"n_qubits": 1, "d": 0, "w": 0, "gates": [], "observable": [{"pauli": "ZZ"}]}',
        '{"n_qubits": 1, "d": 1, "w": 0, "gates": [{"type": "rx", "qubit": 0, "param": {"kind": "feature", "index": 1}}],'
        ' "observable": [{"pauli": "Z"}]}',
    ],
)
def test_malformed_files_rejected(text):
    with pytest.raises(CircuitError):
        loads_circuit(text)


def test_weighted_observable_terms():
    text = '{"n_qubits": 1, "d": 0, "w": 0, "gates": [], "observable": [{"weight": "1/2", "pauli": "Z"}, {"weight": -2, "pauli": "X"}]}'
    _, obs = loads_circuit(text)
    assert [str(w) for w, _ in obs.terms] == ["1/2", "-2"]
