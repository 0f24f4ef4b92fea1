"""Exit criteria. Each test records one PASS/FAIL line shown after the run.

Tolerances and sample sizes are fixed here and are not to be loosened.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from helpers import feat, doubled, rot, two_layer, var
from scipy import integrate

from vqcfourier.circuit import Circuit, Observable, PauliRotation, random_circuit
from vqcfourier.data import FrequencyGrid, inverse_nfft, nfft_matrix, r_nfft
from vqcfourier.pauli import CliffordGate, SignedPauli
from vqcfourier.ranking import score_and_rank
from vqcfourier.simulator import (
    TrainConfig,
    expectation,
    finite_difference_gradient,
    grid_dft_coefficients,
    parameter_shift_gradient,
    train,
)
from vqcfourier.spectrum import (
    circuit_spectrum,
    coefficient_covariance,
    coefficient_mean,
    combinatorial_weight,
    combinatorial_weight_closed_form,
    evaluate_coefficient,
    evaluate_fourier_sum,
    naive_spectrum,
    trig_integral_over_pi,
)
from vqcfourier.exact import GaussianRational
from vqcfourier.tree import circuit_leaves, evaluate_reconstruction

pytestmark = pytest.mark.acceptance


def mixed_circuit(rng, max_qubits=3, max_rotations=8):
    """Random circuit using both feature and variational parameters."""
    while True:
        n = int(rng.integers(1, max_qubits + 1))
        circuit, obs = random_circuit(rng, n_qubits=n, n_gates=12, max_rotations=max_rotations, d=2, w=3)
        if circuit.d and circuit.w:
            return circuit, obs


# 1 ---------------------------------------------------------------------------


def test_oracle_equivalence(criterion):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    n_circuits = 120
    for _ in range(n_circuits):
        circuit, obs = mixed_circuit(rng)
        assert len(circuit.rotations) <= 8
        x = rng.uniform(-np.pi, np.pi, (20, circuit.d))
        theta = rng.uniform(-np.pi, np.pi, (20, circuit.w))
        truth = expectation(circuit, obs, x, theta)
        report = circuit_spectrum(circuit, obs)
        leaves = circuit_leaves(circuit, obs)
        worst = max(
            worst,
            float(np.max(np.abs(evaluate_fourier_sum(report, x, theta) - truth))),
            float(np.max(np.abs(evaluate_reconstruction(leaves, x, theta, circuit.d, circuit.w) - truth))),
        )
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and elapsed < 120
    criterion(1, "oracle equivalence", ok, f"{n_circuits} circuits x 20 points, max |delta| {worst:.2e}, {elapsed:.1f}s")
    assert ok


# 2 ---------------------------------------------------------------------------


def test_exact_zero_certification(criterion):
    rng = np.random.default_rng(7)
    cases = [doubled()] + [mixed_circuit(rng) for _ in range(30)]
    worst_excluded = 0.0
    weakest_included = math.inf
    n_excluded = 0
    for circuit, obs in cases:
        report = circuit_spectrum(circuit, obs)
        omega = set(report.spectrum)
        peaks = {w: 0.0 for w in naive_spectrum(report.encoding_counts)}
        for _ in range(50):
            theta = rng.uniform(-np.pi, np.pi, circuit.w)
            for w, value in grid_dft_coefficients(circuit, obs, theta).items():
                peaks[w] = max(peaks[w], abs(value))
        for w, peak in peaks.items():
            if w in omega:
                weakest_included = min(weakest_included, peak)
            else:
                n_excluded += 1
                worst_excluded = max(worst_excluded, peak)
    f2 = circuit_spectrum(*doubled())
    doubled_ok = f2.spectrum == [(-2, 0), (2, 0)] and all(
        f2.coefficients[w].terms == {((), ()): GaussianRational(Fraction(1, 2))} for w in f2.spectrum
    )
    ok = worst_excluded < 1e-12 and weakest_included > 1e-12 and doubled_ok
    criterion(
        2,
        "exact-zero certification",
        ok,
        f"{n_excluded} excluded frequencies, max DFT |c| {worst_excluded:.1e}; "
        f"min peak |c| in spectrum {weakest_included:.2e}; doubled-x0 spectrum {f2.spectrum} with c = 1/2",
    )
    assert ok


# 3 ---------------------------------------------------------------------------


def test_closed_form_equals_double_sum(criterion):
    checked = 0
    mismatches = []
    for s, c in itertools.product(range(9), repeat=2):
        for omega in range(-(s + c), s + c + 1):
            checked += 1
            exact = combinatorial_weight([s], [c], [omega])
            if combinatorial_weight_closed_form([s], [c], [omega]) != GaussianRational(exact):
                mismatches.append((s, c, omega))
    ok = not mismatches
    criterion(3, "closed form vs double sum", ok, f"{checked} (s, c, w) triples with s, c <= 8, {len(mismatches)} mismatches")
    assert ok


# 4 ---------------------------------------------------------------------------


def _compile(poly):
    amps = np.array([complex(a) for a in poly.terms.values()])
    s = np.array([sp for sp, _ in poly.terms], dtype=int).reshape(len(amps), -1)
    c = np.array([cp for _, cp in poly.terms], dtype=int).reshape(len(amps), -1)

    def f(*theta):
        t = np.asarray(theta)
        return complex(np.sum(amps * np.prod(np.sin(t) ** s * np.cos(t) ** c, axis=1)))

    return f


def _quad_mean(fun, w):
    opts = {"epsabs": 1e-13, "epsrel": 1e-13, "limit": 200}
    ranges = [(-np.pi, np.pi)] * w
    re, _ = integrate.nquad(lambda *t: fun(*t).real, ranges, opts=opts)
    im, _ = integrate.nquad(lambda *t: fun(*t).imag, ranges, opts=opts)
    return complex(re, im) / (2 * np.pi) ** w


def _moment_cases(rng):
    cases = []
    for w in (1, 2, 3):
        while True:
            circuit, obs = random_circuit(rng, n_qubits=2, n_gates=9, d=1, w=w)
            if circuit.w != w:
                continue
            report = circuit_spectrum(circuit, obs)
            polys = [p for p in report.coefficients.values() if len(p.terms) > 1]
            if len(polys) >= 2:
                cases.append((w, polys[:3]))
                break
    return cases


def test_moment_formulas(criterion):
    rng = np.random.default_rng(11)
    cases = _moment_cases(rng)
    quad_err = 0.0
    for w, polys in cases:
        funs = [_compile(p) for p in polys]
        means = [_quad_mean(f, w) for f in funs]
        for i, (p, mu) in enumerate(zip(polys, means)):
            quad_err = max(quad_err, abs(coefficient_mean(p) - mu))
            for j in range(i, len(polys)):
                second = _quad_mean(lambda *t, a=funs[i], b=funs[j]: a(*t) * b(*t).conjugate(), w)
                quad_err = max(quad_err, abs(coefficient_covariance(p, polys[j]) - (second - mu * means[j].conjugate())))

    n = 10**6
    worst_sigma = 0.0
    mc_rng = np.random.default_rng(12)
    for w, polys in cases:
        theta = mc_rng.uniform(-np.pi, np.pi, (n, w))
        vals = [evaluate_coefficient(p, theta) for p in polys]
        centred = [v - v.mean() for v in vals]
        checks = []
        for p, v in zip(polys, vals):
            checks.append((coefficient_mean(p), v))
        for i, j in itertools.combinations_with_replacement(range(len(polys)), 2):
            checks.append((coefficient_covariance(polys[i], polys[j]), centred[i] * centred[j].conjugate()))
        for exact, samples in checks:
            for part in (np.real, np.imag):
                se = float(np.std(part(samples))) / math.sqrt(n)
                diff = abs(part(exact) - float(np.mean(part(samples))))
                worst_sigma = max(worst_sigma, diff / se if se > 1e-15 else (0.0 if diff < 1e-12 else math.inf))

    unit = trig_integral_over_pi(0, 0) * Fraction(1, 2) == 1 and trig_integral_over_pi(0, 0) == 2
    ok = quad_err < 1e-9 and worst_sigma < 3 and unit
    criterion(
        4,
        "moment formulas",
        ok,
        f"w = 1..3, max quadrature error {quad_err:.1e}; Monte Carlo (1e6) worst deviation {worst_sigma:.2f} sigma; "
        f"integral of sin^0 cos^0 = {trig_integral_over_pi(0, 0)} pi",
    )
    assert ok


# 5 ---------------------------------------------------------------------------


def test_inverse_nfft(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    # scattered 1-d cosine
    u = rng.uniform(-0.5, 0.5, 64)
    y = np.exp(2j * np.pi * 2 * u) + np.exp(-2j * np.pi * 2 * u)
    grid = FrequencyGrid((8,))
    spec = inverse_nfft(u, y, grid)
    index = grid.index()
    err_1d = max(abs(spec.coefficients[index[(2,)]] - 1), abs(spec.coefficients[index[(-2,)]] - 1))
    res_1d = r_nfft(spec, u, y)
    # scattered 2-d random on-grid signal
    grid2 = FrequencyGrid((8, 8))
    truth = rng.normal(size=grid2.size) + 1j * rng.normal(size=grid2.size)
    u2 = rng.uniform(-0.5, 0.5, (400, 2))
    y2 = nfft_matrix(u2, grid2) @ truth
    spec2 = inverse_nfft(u2, y2, grid2)
    err_2d = float(np.max(np.abs(spec2.coefficients - truth)))
    res_2d = r_nfft(spec2, u2, y2)
    # uniform 64 x 64 samples against the FFT
    n = 64
    axis = -0.5 + np.arange(n) / n
    grid3 = FrequencyGrid((n, n))
    u3 = np.stack(np.meshgrid(axis, axis, indexing="ij"), -1).reshape(-1, 2)
    y3 = rng.normal(size=n * n)
    spec3 = inverse_nfft(u3, y3, grid3)
    k = np.arange(-n // 2, n // 2)
    direct = np.fft.fftshift(np.fft.fft2(y3.reshape(n, n))) / n**2 * np.exp(1j * np.pi * (k[:, None] + k[None, :]))
    err_dft = float(np.max(np.abs(spec3.coefficients - direct.reshape(-1))))
    elapsed = time.perf_counter() - start
    ok = max(err_1d, err_2d) < 1e-6 and max(res_1d, res_2d) < 1e-10 and err_dft < 1e-8 and elapsed < 30
    criterion(
        5,
        "inverse NFFT",
        ok,
        f"recovery error {max(err_1d, err_2d):.1e}, R_NFFT {max(res_1d, res_2d):.1e}; "
        f"4096-point uniform grid vs DFT {err_dft:.1e}; {elapsed:.1f}s",
    )
    assert ok


# 6 ---------------------------------------------------------------------------


def test_parameter_shift(criterion):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(50):
        circuit, obs = mixed_circuit(rng)
        for _ in range(3):
            x = rng.uniform(-np.pi, np.pi, circuit.d)
            theta = rng.uniform(-np.pi, np.pi, circuit.w)
            shift = parameter_shift_gradient(circuit, obs, x, theta)
            fd = finite_difference_gradient(circuit, obs, x, theta)
            worst = max(worst, float(np.max(np.abs(shift - fd))))
    ok = worst < 1e-6
    criterion(6, "parameter shift vs finite differences", ok, f"50 circuits x 3 points, max deviation {worst:.1e}")
    assert ok


# 7 ---------------------------------------------------------------------------


def _insert_disconnected(rng, circuit, obs, extra=2, count=6):
    n = circuit.n_qubits
    gates = list(circuit.gates)
    for _ in range(count):
        kind = rng.integers(4)
        if kind == 0 and circuit.d:
            g = PauliRotation("XYZ"[rng.integers(3)], n + int(rng.integers(extra)), feat(int(rng.integers(circuit.d))))
        elif kind == 1 and circuit.w:
            g = PauliRotation("XYZ"[rng.integers(3)], n + int(rng.integers(extra)), var(int(rng.integers(circuit.w))))
        elif kind == 2:
            g = CliffordGate(["H", "S"][rng.integers(2)], (n + int(rng.integers(extra)),))
        else:
            g = CliffordGate(["CNOT", "CZ"][rng.integers(2)], (n, n + 1) if rng.random() < 0.5 else (n + 1, n))
        gates.insert(int(rng.integers(len(gates) + 1)), g)
    wide = Circuit(n + extra, gates, circuit.d, circuit.w)
    terms = tuple((w, SignedPauli.from_label(p.letters + "I" * extra).with_phase(p.phase)) for w, p in obs.terms)
    return wide, Observable(terms)


def test_light_cone(criterion):
    rng = np.random.default_rng(17)
    worst = 0.0
    same = 0
    n_cases = 40
    for _ in range(n_cases):
        circuit, obs = mixed_circuit(rng, max_qubits=2)
        wide, wide_obs = _insert_disconnected(rng, circuit, obs)
        x = rng.uniform(-np.pi, np.pi, (20, circuit.d))
        theta = rng.uniform(-np.pi, np.pi, (20, circuit.w))
        worst = max(worst, float(np.max(np.abs(expectation(circuit, obs, x, theta) - expectation(wide, wide_obs, x, theta)))))
        same += circuit_spectrum(circuit, obs).spectrum == circuit_spectrum(wide, wide_obs).spectrum
    ok = worst < 1e-12 and same == n_cases
    criterion(7, "light cone", ok, f"{n_cases} circuits with 6 gates on two disconnected qubits, max |delta| {worst:.1e}, "
              f"identical spectra {same}/{n_cases}")
    assert ok


# 8 ---------------------------------------------------------------------------


def _seven_frequency():
    gates = [
        rot("X", 0, feat(0)),
        rot("Y", 0, var(0)),
        rot("X", 1, feat(1)),
        rot("Y", 1, var(1)),
        rot("X", 0, feat(0)),
        rot("Y", 0, var(2)),
    ]
    half = Fraction(1, 2)
    obs = Observable(((half, SignedPauli.from_label("ZI")), (half, SignedPauli.from_label("IZ"))))
    return Circuit(2, gates, 2, 3, "minimal"), obs


def _corner_only():
    gates = [rot("X", 0, feat(0)), rot("X", 0, feat(0)), rot("X", 1, feat(1)), rot("X", 1, feat(1))]
    return Circuit(2, gates, 2, 0, "disjoint"), Observable.single("ZZ")


def _dominant(report, theta, share=0.05):
    """Non-constant frequencies carrying at least ``share`` of the non-constant energy."""
    energy = {w: abs(evaluate_coefficient(p, theta)) ** 2 for w, p in report.coefficients.items() if any(w)}
    total = sum(energy.values())
    return {w for w, e in energy.items() if e >= share * total}


def test_ranking_self_consistency(criterion):
    start = time.perf_counter()
    target, target_obs = two_layer(name="target")
    candidates = [
        (target, target_obs),
        two_layer(observable="ZZ", name="superset"),
        _seven_frequency(),
        _corner_only(),
        two_layer(("CNOT", (1, 0)), name="cnot"),
    ]
    reports = [circuit_spectrum(c, o) for c, o in candidates]
    omega = set(reports[0].spectrum)
    assert set(reports[1].spectrum) >= omega
    assert len(reports[2].spectrum) == 7
    assert not set(reports[3].spectrum) & omega
    peers = {"target", "superset"}
    wins = 0
    seeds = range(10)
    firsts = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        # redraw theta* until every non-peer candidate misses a dominant data frequency
        while True:
            theta = rng.uniform(-np.pi, np.pi, target.w)
            dominant = _dominant(reports[0], theta)
            if all(not dominant <= set(r.spectrum) for r in reports if r.circuit_id not in peers):
                break
        m = 300
        u = rng.uniform(-0.5, 0.5, (m, 2))
        y = expectation(target, target_obs, 2 * np.pi * u, np.broadcast_to(theta, (m, target.w)))
        y = y + 0.01 * np.std(y) * rng.standard_normal(m)
        first = score_and_rank(reports, u, y, seed=seed).ranked()[0].name
        firsts.append(first)
        wins += first in peers
    elapsed = time.perf_counter() - start
    ok = wins >= 9 and elapsed < 300
    criterion(8, "ranking self-consistency", ok, f"{wins}/{len(seeds)} seeds rank target or superset first "
              f"among {len(candidates)} candidates (first: {','.join(firsts)}); {elapsed:.1f}s")
    assert ok


# 9 ---------------------------------------------------------------------------


def test_training_sanity(criterion):
    gates = [
        rot("X", 0, feat(0)),
        rot("X", 1, feat(1)),
        rot("Y", 0, var(0)),
        rot("Y", 1, var(1)),
        CliffordGate("CNOT", (0, 1)),
        rot("Y", 1, var(2)),
    ]
    circuit, obs = Circuit(2, gates, 2, 3), Observable.single("IZ")
    rng = np.random.default_rng(9)
    theta_star = rng.uniform(-np.pi, np.pi, 3)
    x = rng.uniform(-np.pi, np.pi, (200, 2))
    y = expectation(circuit, obs, x, np.broadcast_to(theta_star, (200, 3)))
    config = TrainConfig(lr=0.005, batch=16, epochs=200, seed=0)
    first = train(circuit, obs, x, y, config)
    second = train(circuit, obs, x, y, config)
    deterministic = first.loss_table() == second.loss_table() and np.array_equal(first.theta, second.theta)
    final = first.train_loss[-1]
    ok = final < 1e-3 and deterministic
    criterion(9, "training sanity", ok, f"2 qubits, 200 samples, 200 epochs, lr 0.005, batch 16: train MSE "
              f"{first.train_loss[0]:.2e} -> {final:.2e}, deterministic={deterministic}")
    assert ok
