"""End-to-end acceptance criteria 1-8; each test prints one PASS/FAIL line."""

from functools import lru_cache
from itertools import combinations

import numpy as np
import pytest

from oracles import assert_cptp, central_difference, random_density
from qaeqec.codes import analytic_3qc, four_qubit_erasure_code, paulis_by_weight, three_qubit_code
from qaeqec.dqnn import Architecture, EncodingFinder, InternalNoise, NetworkParams, QAECollection, channel_of, erasure_patterns
from qaeqec.experiments import (
    NoiseSpec,
    analytic_boundaries,
    analytic_memory,
    correlated_noise_study,
    critical_eta,
    discovery_pairs,
    empirical_boundaries,
    encoding_discovery,
    erasure_collection,
    make_pairs,
    memory_point,
    pattern_fidelity,
    phase_diagram,
    reference_codes_for,
    strategy_fidelities,
    train_qae,
    validate_qae,
)
from qaeqec.linalg import projector
from qaeqec.noise import dephasing_quadrature
from qaeqec.presets import build_code, build_noise, build_training_config, resolve_config
from qaeqec.tomography import channel_distance, chi_matrix, kraus_channel, random_kraus, reference_recovery_chi
from qaeqec.training import TrainingConfig, TrainingPair, cost, cost_derivative, perturb, train

pytestmark = pytest.mark.slow


@lru_cache(maxsize=None)
def trained(preset: str, p: float | None = None):
    overrides = {"noise": {"p": p}} if p is not None else None
    cfg = resolve_config(preset, overrides)
    code, noise = build_code(cfg), build_noise(cfg)
    refs = reference_codes_for(cfg["code"], noise.kind) or [code]
    res = train_qae(code, noise, build_training_config(cfg), cfg["states"], refs, cfg["training"]["margin"])
    return cfg, code, noise, res


# --- criterion 1 ---------------------------------------------------------------------


def test_criterion_1_three_qubit_reproduction(report_criterion):
    details, ok = [], True
    for k, p in enumerate([0.05, 0.1, 0.2, 0.3]):
        _, code, noise, res = trained("fig3", p)
        rep = validate_qae(res.model, code, noise, 10_000, np.random.default_rng([7, k]))
        p_l, expect = analytic_3qc(p)
        dev = abs(rep.mean_fidelity - expect)
        single = rep.class_mean("single X")
        good = dev <= 3 * rep.stderr and single >= 0.9999
        ok &= good
        details.append(f"p={p}: F={rep.mean_fidelity:.5f} vs {expect:.5f} ({dev / rep.stderr:.2f} SE), single X={single:.6f}")
    report_criterion(1, ok, "; ".join(details))
    assert ok


# --- criterion 2 ---------------------------------------------------------------------


def test_criterion_2_tomography_convergence(report_criterion):
    _, _, _, res = trained("fig3", 0.1)
    dist = channel_distance(chi_matrix(channel_of(res.model), 3, 3), reference_recovery_chi())
    ok = dist < 1e-3
    report_criterion(2, ok, f"chi distance {dist:.2e} after {len(res.history) - 1} epochs, {res.restarts} restarts")
    assert ok


# --- criterion 3 ---------------------------------------------------------------------


def test_criterion_3_five_qubit_code(report_criterion):
    _, code_a, _, res_a = trained("fig5a")
    singles = [lab for lab in paulis_by_weight(5, 1) if lab != "IIIII"]
    fid_a = {lab: pattern_fidelity(res_a.model, code_a, lab) for lab in singles}
    _, code_b, _, res_b = trained("fig5b")
    xs = [lab for lab in paulis_by_weight(5, 2, "X") if lab != "IIIII"]
    fid_b = {lab: pattern_fidelity(res_b.model, code_b, lab) for lab in xs}
    ok = len(fid_a) == 15 and len(fid_b) == 15 and min(fid_a.values()) >= 0.999 and min(fid_b.values()) >= 0.999
    report_criterion(
        3,
        ok,
        f"depolarizing training: min over 15 single Paulis {min(fid_a.values()):.6f}; "
        f"bit-flip training: min over 5 single + 10 double X {min(fid_b.values()):.6f}",
    )
    assert ok


# --- criterion 4 ---------------------------------------------------------------------


def test_criterion_4_correlated_noise(report_criterion):
    cfg = resolve_config("fig6")
    p = cfg["noise"]["p"]
    results = correlated_noise_study(
        p, cfg["study"]["eta_grid"], build_training_config(cfg), 1000, cfg["seed"], cfg["training"]["margin"], cfg["states"]
    )
    labels = {r.eta: r.strategy for r in results}
    expect = {1.0: "standard", 2.0: "standard", 8.0: "alternative", 16.0: "alternative"}
    eta_c = critical_eta(p)
    f_std, f_alt = strategy_fidelities(p, eta_c)
    below, above = strategy_fidelities(p, eta_c - 1e-6), strategy_fidelities(p, eta_c + 1e-6)
    crossover = eta_c == pytest.approx(4.0, abs=1e-12) and abs(f_std - f_alt) < 1e-12 and below[0] > below[1] and above[1] > above[0]
    ok = labels == expect and crossover
    report_criterion(4, ok, f"strategies {labels}; eta_c={eta_c:.12g}, |F_std - F_alt| at eta_c = {abs(f_std - f_alt):.1e}")
    assert ok


# --- criterion 5 ---------------------------------------------------------------------


def test_criterion_5_erasures(report_criterion):
    cfg = resolve_config("fig8")
    tc = build_training_config(cfg)
    code4 = four_qubit_erasure_code()
    c4 = erasure_collection(code4, 0.2, 0.0, tc, 2)
    singles4 = [pattern_fidelity(c4.collection, code4, "IIII", r) for r in combinations(range(4), 1)]
    doubles4 = [pattern_fidelity(c4.collection, code4, "IIII", r) for r in combinations(range(4), 2)]
    ok4 = min(singles4) >= 0.999 and max(doubles4) < 0.999

    code5, noise = build_code(cfg), build_noise(cfg)
    c5 = erasure_collection(code5, noise.p_loss, noise.p_comp, tc, cfg["collection"]["max_erasures"], margin=cfg["training"]["margin"])
    single_paulis = [pattern_fidelity(c5.collection, code5, lab) for lab in paulis_by_weight(5, 1) if lab != "IIIII"]
    losses = [pattern_fidelity(c5.collection, code5, "IIIII", r) for r in erasure_patterns(5, 2) if r]
    rep = validate_qae(c5.collection, code5, noise, 10_000, np.random.default_rng(8))
    classes = ["no loss, no Pauli", "no loss, single Pauli", "one erasure, no Pauli", "two erasures, no Pauli"]
    class_fids = {c: rep.class_mean(c) for c in classes}
    ok5 = min(single_paulis) >= 0.99 and min(losses) >= 0.99 and min(class_fids.values()) >= 0.99
    ok = ok4 and ok5
    report_criterion(
        5,
        ok,
        f"x-1-4: min single erasure {min(singles4):.6f}, max double erasure {max(doubles4):.4f}; "
        f"x-1-5: min single Pauli {min(single_paulis):.6f}, min 1-2 erasures {min(losses):.6f}, "
        + ", ".join(f"{c}={v:.5f}" for c, v in class_fids.items()),
    )
    assert ok


# --- criterion 6 ---------------------------------------------------------------------


def test_criterion_6_encoding_discovery(report_criterion):
    cfg = resolve_config("appendixD")
    d = cfg["discovery"]
    res = encoding_discovery(build_training_config(cfg), d["n"], d["sigma"], d["copies"], d["n_validation"], d["n_nodes"], d["n_points"])
    loss = min(res.loss_fidelities.values())
    marg = min(res.marginal_fidelities)
    ok = res.training.restarts <= 10 and loss >= 0.99 and res.dfs_deviation < 1e-3 and marg >= 0.99
    report_criterion(
        6,
        ok,
        f"{res.training.restarts} restarts; min per-loss fidelity {loss:.6f}; DFS deviation {res.dfs_deviation:.1e}; min marginal fidelity {marg:.6f}",
    )
    assert ok


# --- criterion 7 ---------------------------------------------------------------------


def test_criterion_7_memory_analytics(report_criterion):
    failures, notes = [], []
    for k, p_i in enumerate([0.1, 0.25, 0.5]):
        pt = memory_point(p_i, 0.0, n_samples=100_000, rng=np.random.default_rng([70, k]))
        a = analytic_memory(p_i, 0.0)
        for name, val, se, ref in (("P_single", pt.P_single, pt.se_single, a.P_single), ("P_uncorr", pt.P_uncorr, pt.se_uncorr, a.P_uncorr)):
            if abs(val - ref) > 3 * se:
                failures.append(f"{name}@p_i={p_i}")
        for j, p_n in enumerate([0.005, 0.01, 0.02]):
            pt = memory_point(p_i, p_n, n_samples=100_000, rng=np.random.default_rng([71, k, j]))
            ref = analytic_memory(p_i, p_n).P_corr
            tol = max(3 * pt.se_corr, 2 * p_n**2)
            dev = abs(pt.P_corr - ref)
            if dev > tol:
                failures.append(f"P_corr@(p_i={p_i}, p_n={p_n}): |dev| {dev:.2e} > {tol:.2e}")

    step = 0.005
    p_i_grid = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]
    p_n_grid = [round(step * k, 12) for k in range(21)]
    points = phase_diagram(p_i_grid, p_n_grid, n_samples=10_000, seed=72)
    emp = empirical_boundaries(points)
    checked = 0
    for p_i, crit_s, crit_l in analytic_boundaries(p_i_grid):
        for name, crit, found in (("single", crit_s, emp[p_i][0]), ("logical", crit_l, emp[p_i][1])):
            if crit > p_n_grid[-1]:
                continue
            checked += 1
            if found is None or not (found - 2 * step <= crit <= found + step):
                failures.append(f"{name} boundary@p_i={p_i}: analytic {crit:.4f} vs grid {found}")
    notes.append(f"{checked} boundary crossings checked on a {step} p_n grid")
    ok = not failures
    report_criterion(7, ok, "; ".join(notes + (["failures: " + ", ".join(failures)] if failures else ["all cells within tolerance"])))
    assert ok


# --- criterion 8 ---------------------------------------------------------------------


def _gradient_ok(model, pairs, rng, noise=None) -> bool:
    ks = [(lambda g: (g + g.conj().T) / 2)(rng.normal(size=u.shape) + 1j * rng.normal(size=u.shape)) for u in model.flat_unitaries()]
    analytic = cost_derivative(model, pairs, ks, noise)
    numeric = central_difference(lambda s: cost(perturb(model, ks, s), pairs, noise))
    return abs(analytic - numeric) < 1e-4 * max(abs(numeric), 1e-3)


def test_criterion_8_property_suites(report_criterion):
    rng = np.random.default_rng(80)
    three = make_pairs(three_qubit_code(), NoiseSpec("bitflip", p=0.1), "three")
    grads = {
        "3-1-3": _gradient_ok(NetworkParams.random(Architecture((3, 1, 3)), rng), three, rng),
        "3-1-3 self-inverse": _gradient_ok(NetworkParams.random(Architecture((3, 1, 3), True), rng), three, rng),
        "3-1-3 noisy": _gradient_ok(NetworkParams.random(Architecture((3, 1, 3)), rng), three, rng, InternalNoise(0.05)),
        "5-1-5 self-inverse": _gradient_ok(
            NetworkParams.random(Architecture((5, 1, 5), True), rng),
            make_pairs(build_code(resolve_config("fig5a")), NoiseSpec("depolarizing", p=0.1))[:2],
            rng,
        ),
        "1-4-1 finder": _gradient_ok(EncodingFinder.random(4, 1, rng, dephasing_quadrature(1.0, 9)), discovery_pairs(4, 1, rng), rng),
    }
    code4 = four_qubit_erasure_code()
    col = QAECollection.random(4, erasure_patterns(4, 1), rng)
    spec = NoiseSpec("erasure", p_loss=0.3, p_comp=0.05)
    grads["x-1-4 collection"] = _gradient_ok(col, [TrainingPair(spec.apply(projector(code4.basis0), r), code4.basis0, r) for r in col.patterns], rng)

    cptp = True
    try:
        assert_cptp(channel_of(NetworkParams.random(Architecture((3, 1, 3), True), rng), InternalNoise(0.1)), 3)
        assert_cptp(channel_of(col, None, (2,)), 3)
        assert_cptp(lambda r: spec.apply(r, (1,)), 4)
        assert_cptp(lambda r: NoiseSpec("correlated", p=0.2, eta=8.0).apply(r), 3)
    except AssertionError:
        cptp = False

    ks = random_kraus(3, 1, 4, rng)
    pm = chi_matrix(kraus_channel(ks), 3, 1)
    rho = random_density(3, rng)
    round_trip = float(np.abs(pm.apply(rho) - kraus_channel(ks)(rho)).max())

    model = NetworkParams.random(Architecture((3, 1, 3), True), np.random.default_rng(81))
    a, b = (train(model, three, TrainingConfig(epochs=20, seed=5)) for _ in range(2))
    deterministic = a.history == b.history and all(np.array_equal(x, y) for x, y in zip(a.model.flat_unitaries(), b.model.flat_unitaries()))

    ok = all(grads.values()) and cptp and round_trip < 1e-8 and deterministic
    report_criterion(
        8,
        ok,
        f"gradients {sum(grads.values())}/{len(grads)} architectures; CPTP {cptp}; chi round trip {round_trip:.1e}; deterministic {deterministic}",
    )
    assert ok
