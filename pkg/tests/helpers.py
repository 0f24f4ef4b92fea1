"""Small circuits shared by the test modules."""

from vqcfourier.circuit import FEATURE, VARIATIONAL, Circuit, Observable, ParamRef, PauliRotation
from vqcfourier.pauli import CliffordGate


def feat(i):
    return ParamRef(FEATURE, i)


def var(i):
    return ParamRef(VARIATIONAL, i)


def rot(axis, qubit, ref):
    return PauliRotation(axis, qubit, ref)


def doubled():
    """x1 encoded twice on qubit 0, x2 once on qubit 1, measured on qubit 0."""
    gates = [rot("X", 0, feat(0)), rot("X", 0, feat(0)), rot("X", 1, feat(1))]
    return Circuit(2, gates, 2, 0, "doubled"), Observable.single("ZI")


def rx_theta():
    return Circuit(1, [rot("X", 0, var(0))], 0, 1, "rx"), Observable.single("Z")


def two_layer(entangler=("CZ", (0, 1)), first="Z", observable="ZI", name="target"):
    """Two re-uploading layers with an entangler in between (four parameters)."""
    gates = [
        rot("X", 0, feat(0)),
        rot(first, 0, var(0)),
        rot("X", 1, feat(1)),
        rot(first, 1, var(1)),
        CliffordGate(*entangler),
        rot("X", 0, feat(0)),
        rot("X", 1, feat(1)),
        rot("Y", 0, var(2)),
        rot("Y", 1, var(3)),
    ]
    return Circuit(2, gates, 2, 4, name), Observable.single(observable)
