"""End-to-end pipelines: validation of trained QAEs, noise studies, erasure
collections, encoding discovery and the noisy-memory comparison.

Every pipeline here is linear in the logical input, so fidelities of many
sampled logical states are evaluated through a *logical transfer tensor*
``G[a, b, c, d] = <c_out| P(|a_in><b_in|) |d_out>``: for amplitudes ``x``
the fidelity is ``sum x_a x_b* x_c* x_d G[a, b, c, d]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .codes import (
    StabilizerCode,
    apply_pauli,
    cardinal_logical_states,
    cardinal_qubit_states,
    five_qubit_code,
    pauli_weight,
    perfect_recovery,
    sample_bloch_amplitudes,
    three_qubit_code,
)
from .dqnn import (
    Architecture,
    EncodingFinder,
    InternalNoise,
    NetworkParams,
    QAECollection,
    channel_of,
    erasure_patterns,
    handbuilt_three_qubit_qae,
    rearrange_to_qae,
    run_ops,
)
from .linalg import fidelity, haar_random_unitary, ket, partial_trace, projector
from .noise import (
    DephasingQuadrature,
    bit_flip,
    collective_dephasing,
    correlated_bit_flip,
    correlated_flip_distribution,
    dephasing_quadrature,
    depolarizing_single,
)
from .tomography import channel_distance, chi_matrix
from .training import TrainingConfig, TrainingPair, TrainingResult, cost, train

log = logging.getLogger(__name__)

_COUNT = ["no", "single", "two", "three", "four", "five", "six"]
_ERASURES = ["no loss", "one erasure", "two erasures", "three erasures", "four erasures", "five erasures"]


# ---------------------------------------------------------------------------
# noise specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """Incoming noise on logical states.

    ``kind`` is one of ``none``, ``bitflip``, ``depolarizing``, ``correlated``
    (3 qubits, parameters ``p`` and ``eta``) or ``erasure`` (independent
    losses with ``p_loss`` followed by depolarizing noise ``p_comp`` on the
    surviving qubits).
    """

    kind: str = "bitflip"
    p: float = 0.0
    eta: float = 1.0
    p_loss: float = 0.0
    p_comp: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "bitflip", "depolarizing", "correlated", "erasure"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        for name in ("p", "p_loss", "p_comp"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.kind == "correlated":
            correlated_flip_distribution(self.p, self.eta)

    def apply(self, rho: np.ndarray, erased: Sequence[int] = ()) -> np.ndarray:
        """Deterministic noise channel; for erasures, ``erased`` fixes the lost qubits."""
        n = int(np.log2(rho.shape[-1]))
        if self.kind == "bitflip":
            return bit_flip(rho, self.p, range(n))
        if self.kind == "depolarizing":
            return depolarizing_single(rho, self.p, range(n))
        if self.kind == "correlated":
            return correlated_bit_flip(rho, correlated_flip_distribution(self.p, self.eta))
        if self.kind == "erasure":
            rho = partial_trace(rho, erased)
            return depolarizing_single(rho, self.p_comp, range(n - len(erased)))
        return rho

    def sample(self, rng: np.random.Generator, n: int) -> tuple[str, tuple[int, ...]]:
        """Draw one explicit error event: a Pauli label and the erased positions."""
        label = ["I"] * n
        erased: tuple[int, ...] = ()
        if self.kind == "bitflip":
            for q in np.flatnonzero(rng.random(n) < self.p):
                label[q] = "X"
        elif self.kind == "depolarizing":
            hit = rng.random(n) < self.p
            which = rng.integers(0, 3, n)
            for q in np.flatnonzero(hit):
                label[q] = "XYZ"[which[q]]
        elif self.kind == "correlated":
            dist = correlated_flip_distribution(self.p, self.eta)
            pats, probs = zip(*dist.patterns())
            pat = pats[rng.choice(len(pats), p=np.array(probs) / sum(probs))]
            label = ["X" if b else "I" for b in pat]
        elif self.kind == "erasure":
            erased = tuple(int(q) for q in np.flatnonzero(rng.random(n) < self.p_loss))
            hit = rng.random(n) < self.p_comp
            which = rng.integers(0, 3, n)
            for q in np.flatnonzero(hit):
                if q not in erased:
                    label[q] = "XYZ"[which[q]]
        return "".join(label), erased

    def class_label(self, label: str, erased: Sequence[int]) -> str:
        w = pauli_weight(label)
        if self.kind == "erasure":
            loss = _ERASURES[len(erased)]
            if self.p_comp == 0.0:
                return loss
            return f"{loss}, {_COUNT[w]} Pauli"
        if w == 0:
            return "no error"
        letter = "Pauli" if self.kind == "depolarizing" else "X"
        return f"{_COUNT[w]} {letter}"


# ---------------------------------------------------------------------------
# logical transfer tensors
# ---------------------------------------------------------------------------


def logical_transfer(pipeline: Callable[[np.ndarray], np.ndarray], basis_in: np.ndarray, basis_out: np.ndarray) -> np.ndarray:
    """``G[a, b, c, d] = <c_out| pipeline(|a_in><b_in|) |d_out>``."""
    basis_in = np.asarray(basis_in)
    basis_out = np.asarray(basis_out)
    d = basis_in.shape[1]
    units = np.einsum("ai,bj->abij", basis_in, basis_in.conj()).reshape(4, d, d)
    out = np.asarray(pipeline(units))
    d_out = out.shape[-1]
    out = out.reshape(2, 2, d_out, d_out)
    return np.einsum("ci,abij,dj->abcd", basis_out.conj(), out, basis_out)


def transfer_fidelities(g: np.ndarray, amps: np.ndarray) -> np.ndarray:
    return np.einsum("na,nb,nc,nd,abcd->n", amps, amps.conj(), amps.conj(), amps, g).real


def bloch_average(g: np.ndarray) -> float:
    """Exact Bloch-sphere average of :func:`transfer_fidelities`."""
    return float((np.einsum("aacc->", g) + np.einsum("abab->", g)).real / 6)


def _code_basis(code: StabilizerCode) -> np.ndarray:
    return np.stack([code.basis0, code.basis1])


_QUBIT_BASIS = np.eye(2, dtype=complex)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    noise: NoiseSpec
    num_samples: int
    mean_fidelity: float
    stderr: float
    classes: dict[str, tuple[float, int]] = field(default_factory=dict)

    def class_mean(self, name: str) -> float:
        return self.classes[name][0]

    def class_probabilities(self) -> dict[str, float]:
        return {k: n / self.num_samples for k, (_, n) in self.classes.items()}


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if len(x) == 0:
        return float("nan"), float("nan")
    if len(x) == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(len(x)))


def _model_routes(model) -> list[tuple[int, ...]]:
    return list(getattr(model, "patterns", [()]))


def _pattern_pipeline(model, label: str, erased: tuple[int, ...], internal: InternalNoise | None):
    run = channel_of(model, internal, erased) if erased in _model_routes(model) else None

    def pipe(rho):
        rho = apply_pauli(rho, label)
        if run is not None:
            return run(partial_trace(rho, erased))
        # no member for this erasure pattern: the hidden qubit carries no information
        trace = np.trace(rho, axis1=-2, axis2=-1)
        hidden = np.eye(2, dtype=complex) / 2
        dec = run_ops(model.decoder_ops(), model.flat_unitaries(), hidden[None])[0]
        return trace[..., None, None] * dec

    return pipe


def validate_qae(
    model,
    code: StabilizerCode,
    noise_spec: NoiseSpec,
    n_samples: int,
    rng: np.random.Generator,
    internal: InternalNoise | None = None,
) -> ValidationReport:
    """Bloch-uniform logical states, explicitly sampled error events, QAE correction.

    Fidelities are taken w.r.t. the noise-free logical state and grouped by
    the sampled event's class label.
    """
    if noise_spec.kind == "erasure" and not hasattr(model, "patterns"):
        raise ValueError("erasure noise needs a QAE collection")
    amps = sample_bloch_amplitudes(rng, n_samples)
    events = [noise_spec.sample(rng, code.n) for _ in range(n_samples)]
    basis = _code_basis(code)
    fids = np.empty(n_samples)
    cache: dict = {}
    by_event: dict = {}
    for i, ev in enumerate(events):
        by_event.setdefault(ev, []).append(i)
    for ev, idx in by_event.items():
        if ev not in cache:
            cache[ev] = logical_transfer(_pattern_pipeline(model, ev[0], ev[1], internal), basis, basis)
        fids[idx] = transfer_fidelities(cache[ev], amps[idx])
    labels = np.array([noise_spec.class_label(*ev) for ev in events])
    classes = {}
    for name in sorted(set(labels.tolist())):
        sel = fids[labels == name]
        classes[name] = (float(sel.mean()), int(len(sel)))
    mean, se = _mean_se(fids)
    return ValidationReport(noise_spec, n_samples, mean, se, classes)


def pattern_fidelity(model, code: StabilizerCode, label: str, erased: tuple[int, ...] = (), internal=None) -> float:
    """Exact Bloch-averaged fidelity after one fixed error event."""
    g = logical_transfer(_pattern_pipeline(model, label, tuple(erased), internal), _code_basis(code), _code_basis(code))
    return bloch_average(g)


# ---------------------------------------------------------------------------
# training helpers
# ---------------------------------------------------------------------------


def training_states(code: StabilizerCode, which: str = "six") -> list[np.ndarray]:
    """``three``: ``|0_L>, |1_L>, |+_L>``; ``six``: all cardinal logical states."""
    states = cardinal_logical_states(code)
    if which == "three":
        return states[:3]
    if which == "six":
        return states
    raise ValueError(f"unknown training state set {which!r}")


def make_pairs(code: StabilizerCode, noise_spec: NoiseSpec, which: str = "six", copies: int = 1) -> list[TrainingPair]:
    return [TrainingPair(noise_spec.apply(projector(s)), s) for _ in range(copies) for s in training_states(code, which)]


def recovery_cost(code: StabilizerCode, pairs: Sequence[TrainingPair]) -> float:
    """Cost of the code's own syndrome recovery on ``pairs``, a reference for restarts."""
    return float(1 - np.mean([np.real(p.target.conj() @ perfect_recovery(code, p.input) @ p.target) for p in pairs]))


def _init_rng(config: TrainingConfig, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng([config.seed, 1000 + stream])


def train_qae(
    code: StabilizerCode,
    noise_spec: NoiseSpec,
    config: TrainingConfig,
    which: str = "six",
    reference_codes: Sequence[StabilizerCode] = (),
    margin: float | None = None,
    self_inverse: bool = True,
) -> TrainingResult:
    """Train an ``n-1-n`` QAE on noisy cardinal states of ``code``.

    With ``margin`` set, the restart threshold becomes the best recovery cost
    among ``reference_codes`` (default: ``code``) plus ``margin``.
    """
    pairs = make_pairs(code, noise_spec, which)
    if margin is not None:
        refs = list(reference_codes) or [code]
        config = replace(config, restart_threshold=min(recovery_cost(c, pairs) for c in refs) + margin)
    arch = Architecture((code.n, 1, code.n), self_inverse)
    model = NetworkParams.random(arch, _init_rng(config))
    return train(model, pairs, config)


# ---------------------------------------------------------------------------
# correlated noise
# ---------------------------------------------------------------------------


def strategy_fidelities(p: float, eta: float) -> tuple[float, float]:
    """Bloch-averaged fidelity of the standard and the alternative repetition-code decoders."""
    d = correlated_flip_distribution(p, eta)
    return 1 - 2 * (3 * d.q2 + d.q3) / 3, 1 - 2 * (3 * d.q1 + d.q3) / 3


def critical_eta(p: float) -> float:
    return (1 - p) / p


def classify_strategy(model) -> tuple[str, dict[str, float]]:
    """Label a 3-qubit corrector by its chi-nearest reference decoder."""
    chi = chi_matrix(channel_of(model), 3, 3)
    dists = {}
    for name in ("standard", "alternative"):
        code = three_qubit_code(name)
        dists[name] = channel_distance(chi, chi_matrix(lambda r, c=code: perfect_recovery(c, r), 3, 3))
    return min(dists, key=dists.get), dists


@dataclass
class CorrelatedResult:
    eta: float
    report: ValidationReport
    strategy: str
    distances: dict[str, float]
    training: TrainingResult
    analytic: tuple[float, float]


def correlated_noise_study(
    p: float,
    eta_grid: Sequence[float],
    config: TrainingConfig,
    n_samples: int = 10_000,
    seed: int = 0,
    margin: float | None = 1e-4,
    which: str = "six",
) -> list[CorrelatedResult]:
    code = three_qubit_code()
    refs = [three_qubit_code("standard"), three_qubit_code("alternative")]
    out = []
    for i, eta in enumerate(eta_grid):
        spec = NoiseSpec("correlated", p=p, eta=eta)
        res = train_qae(code, spec, replace(config, seed=config.seed + i), which, refs, margin)
        label, dists = classify_strategy(res.model)
        report = validate_qae(res.model, code, spec, n_samples, np.random.default_rng([seed, i]))
        out.append(CorrelatedResult(eta, report, label, dists, res, strategy_fidelities(p, eta)))
    return out


# ---------------------------------------------------------------------------
# erasure collections
# ---------------------------------------------------------------------------


@dataclass
class CollectionResult:
    collection: QAECollection
    report: ValidationReport | None
    trainings: dict[tuple[int, ...], TrainingResult]

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.trainings.values())


def error_free_bound(n_survivors: int, p_comp: float) -> float:
    """Cost of a member that is exact when no Pauli hits the survivors and fails completely otherwise."""
    return 1 - (1 - p_comp) ** n_survivors


def erasure_collection(
    code: StabilizerCode,
    p_loss: float,
    p_comp: float,
    config: TrainingConfig,
    max_erasures: int,
    n_samples: int = 0,
    seed: int = 0,
    member_threshold: float | None = None,
    margin: float | None = None,
) -> CollectionResult:
    """Train the no-loss self-inverse QAE, freeze its decoder, then one encoder per erasure pattern.

    Each member is trained on the six noisy cardinal states routed through
    its own erasure pattern; with the Pauli part applied as a channel, every
    stochastic copy of a (state, pattern) pair is the same density matrix.
    Without ``member_threshold`` a member restarts unless its cost is below
    :func:`error_free_bound` plus ``margin`` (default ``1e-3``).
    """
    spec = NoiseSpec("erasure", p_loss=p_loss, p_comp=p_comp)
    states = cardinal_logical_states(code)
    no_loss = NoiseSpec("depolarizing", p=p_comp)
    base = train_qae(code, no_loss, config, "six", margin=margin)
    shared = base.model.unitaries[0][0]
    trainings = {(): base}
    encoders = {}
    rng = _init_rng(config, 1)
    for k, pattern in enumerate(erasure_patterns(code.n, max_erasures)):
        if not pattern:
            continue
        if member_threshold is None:
            threshold = error_free_bound(code.n - len(pattern), p_comp) + (1e-3 if margin is None else margin)
        else:
            threshold = member_threshold
        pairs = [TrainingPair(spec.apply(projector(s), pattern), s, pattern) for s in states]
        u = haar_random_unitary(code.n - len(pattern) + 1, rng)
        member = QAECollection(code.n, shared, {pattern: u})
        cfg = replace(config, seed=config.seed + k, restart_threshold=threshold)
        res = train(member, pairs, cfg, trainable_mask=[False, True])
        encoders[pattern] = res.model.encoders[pattern]
        trainings[pattern] = res
        log.info("erasure member %s final cost %.3e", pattern, res.final_cost)
    collection = QAECollection(code.n, shared, encoders)
    report = validate_qae(collection, code, spec, n_samples, np.random.default_rng(seed)) if n_samples else None
    return CollectionResult(collection, report, trainings)


# ---------------------------------------------------------------------------
# encoding discovery
# ---------------------------------------------------------------------------


@dataclass
class DiscoveryResult:
    finder: EncodingFinder
    training: TrainingResult
    loss_fidelities: dict[tuple[int, ...], float]
    finder_fidelities: dict[tuple[int, ...], float]
    marginal_fidelities: list[float]
    dfs_deviation: float
    logical_basis: np.ndarray

    @property
    def collection(self) -> QAECollection:
        return rearrange_to_qae(self.finder)


def discovery_pairs(n: int, copies: int, rng: np.random.Generator, max_erasures: int = 1) -> list[TrainingPair]:
    """Single-qubit cardinal states, each copy routed through a uniformly drawn erasure pattern."""
    routes = erasure_patterns(n, max_erasures)
    pairs = []
    for _ in range(copies):
        for s in cardinal_qubit_states():
            route = routes[rng.integers(len(routes))]
            pairs.append(TrainingPair(projector(s), s, route))
    return pairs


def discovered_basis(finder: EncodingFinder) -> np.ndarray:
    """Dominant eigenvectors of the decoder images of ``|0>`` and ``|1>``."""
    c = finder.collection
    units = np.stack([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]).astype(complex)
    images = run_ops(c.decoder_ops(), c.flat_unitaries(), units)
    return np.stack([np.linalg.eigh(r)[1][:, -1] for r in images])


def discovery_report(
    finder: EncodingFinder,
    n_validation: int,
    rng: np.random.Generator,
    quad: DephasingQuadrature,
    n_points: int = 100,
):
    """Per-loss fidelities of the rearranged QAE and of the finder, marginals and DFS deviation.

    The QAE is fed ``N(|psi_L><psi_L|)`` for Bloch-uniform ``psi_L`` in the
    discovered basis; the finder numbers are exact Bloch averages of its
    single-qubit round trip.
    """
    n = finder.collection.n
    qae = rearrange_to_qae(finder)
    basis = discovered_basis(finder)
    amps = sample_bloch_amplitudes(rng, n_validation)
    loss, round_trip = {}, {}
    for route in finder.patterns:
        run = channel_of(qae, None, route)
        g = logical_transfer(lambda r: run(partial_trace(collective_dephasing(r, quad), route)), basis, basis)
        loss[route] = float(transfer_fidelities(g, amps).mean()) if n_validation else float("nan")
        round_trip[route] = bloch_average(logical_transfer(channel_of(finder, None, route), _QUBIT_BASIS, _QUBIT_BASIS))
    pts = sample_bloch_amplitudes(rng, n_points) @ basis
    rho_l = np.einsum("ni,nj->nij", pts, pts.conj())
    dfs = float(np.abs(collective_dephasing(rho_l, quad) - rho_l).max())
    marginals = []
    for q in range(n):
        red = partial_trace(rho_l, [k for k in range(n) if k != q])
        marginals.append(float(np.mean([fidelity(r, np.eye(2) / 2) for r in red])))
    return loss, round_trip, marginals, dfs, basis


def encoding_discovery(
    config: TrainingConfig,
    n: int = 4,
    sigma: float = 1.0,
    copies: int = 50,
    n_validation: int = 2000,
    n_nodes: int = 21,
    n_points: int = 100,
) -> DiscoveryResult:
    """Train a ``1-n-1`` finder under collective dephasing and uniformly drawn single losses."""
    quad = dephasing_quadrature(sigma, n_nodes)
    pairs = discovery_pairs(n, copies, _init_rng(config, 2))
    finder = EncodingFinder.random(n, 1, _init_rng(config), quad)
    res = train(finder, pairs, config)
    loss, round_trip, marg, dfs, basis = discovery_report(res.model, n_validation, _init_rng(config, 3), quad, n_points)
    return DiscoveryResult(res.model, res, loss, round_trip, marg, dfs, basis)


# ---------------------------------------------------------------------------
# noisy quantum memory
# ---------------------------------------------------------------------------


REGIONS = ("corrected-best", "between", "corrected-worst", "ambiguous")


@dataclass
class MemoryPoint:
    p_i: float
    p_n: float
    P_single: float
    P_uncorr: float
    P_corr: float
    se_single: float
    se_uncorr: float
    se_corr: float
    region: str


def _memory_transfers(p_i: float, p_n: float, network=None):
    code = three_qubit_code()
    net = network if network is not None else handbuilt_three_qubit_qae()
    noisy = channel_of(net, InternalNoise(p_n) if p_n else None)
    basis = _code_basis(code)

    def idle(rho):
        return bit_flip(rho, p_i, range(3))

    g_single = logical_transfer(lambda r: bit_flip(bit_flip(r, p_i, [0]), p_i, [0]), _QUBIT_BASIS, _QUBIT_BASIS)
    g_uncorr = logical_transfer(lambda r: perfect_recovery(code, idle(idle(r))), basis, basis)
    g_corr = logical_transfer(lambda r: perfect_recovery(code, idle(noisy(idle(r)))), basis, basis)
    return g_single, g_uncorr, g_corr


def classify_region(diff_single: float, diff_uncorr: float, se_single: float, se_uncorr: float, k: float = 3.0) -> str:
    """Region from ``P_corr - P_other`` differences and their standard errors."""
    signs = []
    for d, se in ((diff_single, se_single), (diff_uncorr, se_uncorr)):
        if d > k * se and d != 0:
            signs.append(1)
        elif d < -k * se and d != 0:
            signs.append(-1)
        else:
            return "ambiguous"
    if signs == [1, 1]:
        return "corrected-best"
    if signs == [-1, -1]:
        return "corrected-worst"
    return "between"


def memory_point(
    p_i: float,
    p_n: float,
    network=None,
    n_samples: int = 10_000,
    rng: np.random.Generator | None = None,
    exact: bool = False,
) -> MemoryPoint:
    """Bare qubit vs encoded-uncorrected vs encoded with one noisy QAE round.

    ``exact=True`` replaces the Monte Carlo state average by the exact Bloch
    average (standard errors are then zero).
    """
    gs = _memory_transfers(p_i, p_n, network)
    if exact:
        vals = [bloch_average(g) for g in gs]
        region = classify_region(vals[2] - vals[0], vals[2] - vals[1], 0.0, 0.0)
        return MemoryPoint(p_i, p_n, *vals, 0.0, 0.0, 0.0, region)
    if rng is None:
        raise ValueError("Monte Carlo evaluation needs an rng")
    amps = sample_bloch_amplitudes(rng, n_samples)
    f = [transfer_fidelities(g, amps) for g in gs]
    stats = [_mean_se(x) for x in f]
    d_single = _mean_se(f[2] - f[0])
    d_uncorr = _mean_se(f[2] - f[1])
    region = classify_region(d_single[0], d_uncorr[0], d_single[1], d_uncorr[1])
    return MemoryPoint(
        p_i, p_n, stats[0][0], stats[1][0], stats[2][0], stats[0][1], stats[1][1], stats[2][1], region
    )


@dataclass(frozen=True)
class AnalyticMemory:
    P_single: float
    P_uncorr: float
    P_corr: float
    p_n_crit_single: float
    p_n_crit_logical: float


_CORR_P0 = (1.0, 0.0, -4.0, 8 / 3, 12.0, -16.0, 16 / 3)
_CORR_PN = (156 / 85, 8 / 15, -776 / 51, 5312 / 765, 13408 / 255, -17152 / 255, 17152 / 765)
_CRIT_DEN = (351, 102, -2910, 1328, 10056, -12864, 4288)


def _poly(coeffs, x):
    return float(sum(c * x**k for k, c in enumerate(coeffs)))


def analytic_memory(p_i: float, p_n: float) -> AnalyticMemory:
    """Closed forms for the three memory scenarios and the first-order phase boundaries."""
    p_single = 2 * p_i * (1 - p_i)
    P_single = 1 - 4 / 3 * p_i * (1 - p_i)
    p_uncorr = p_single**3 + 3 * p_single**2 * (1 - p_single)
    P_uncorr = 1 - 2 / 3 * p_uncorr
    P_corr = _poly(_CORR_P0, p_i) - p_n * _poly(_CORR_PN, p_i)
    den = _poly(_CRIT_DEN, p_i)
    crit_single = 255 * _poly((0, 1, -4, 2, 9, -12, 4), p_i) / den
    crit_logical = 765 * _poly((0, 0, 1, -6, 13, -12, 4), p_i) / den
    return AnalyticMemory(P_single, P_uncorr, P_corr, crit_single, crit_logical)


def first_order_output(rho_l: np.ndarray, p_n: float) -> np.ndarray:
    """Noisy hand-built QAE output to linear order in ``p_n``, given its noiseless output."""
    a = 256 / 255 * p_n
    b = 16 / 15 * p_n
    ends = (projector(ket("000")) + projector(ket("111"))) / 2
    four = sum(projector(ket(s)) for s in ("000", "011", "100", "111")) / 4
    n1 = (1 - a) * rho_l + a * np.trace(rho_l) * ends
    n2 = (1 - b) * rho_l + b * np.trace(rho_l) * four
    t = rho_l.reshape(2, 2, 2, 2, 2, 2)
    block = t[:, 0, 0, :, 0, 0] + t[:, 1, 1, :, 1, 1]
    n3 = (1 - b) * rho_l + b * np.kron(block, np.eye(4) / 4)
    n4 = (1 - b) * rho_l + b * np.kron(partial_trace(rho_l, [2]), np.eye(2) / 2)
    return n1 + n2 + n3 + n4 - 3 * rho_l


def phase_diagram(
    p_i_grid: Sequence[float],
    p_n_grid: Sequence[float],
    n_samples: int = 10_000,
    seed: int = 0,
    network=None,
    exact: bool = False,
) -> list[MemoryPoint]:
    """Memory points on a grid; point ``k`` uses the RNG stream ``(seed, k)``."""
    points = []
    k = 0
    for p_i in p_i_grid:
        for p_n in p_n_grid:
            rng = np.random.default_rng([seed, k])
            points.append(memory_point(float(p_i), float(p_n), network, n_samples, rng, exact))
            k += 1
    return points


def analytic_boundaries(p_i_grid: Sequence[float]) -> list[tuple[float, float, float]]:
    return [(float(p), analytic_memory(p, 0).p_n_crit_single, analytic_memory(p, 0).p_n_crit_logical) for p in p_i_grid]


def empirical_boundaries(points: Sequence[MemoryPoint]) -> dict[float, tuple[float | None, float | None]]:
    """Per ``p_i``, the first grid ``p_n`` where ``P_corr`` falls below ``P_single`` / ``P_uncorr``."""
    out: dict[float, list] = {}
    for pt in sorted(points, key=lambda x: (x.p_i, x.p_n)):
        entry = out.setdefault(pt.p_i, [None, None])
        if entry[0] is None and pt.P_corr < pt.P_single:
            entry[0] = pt.p_n
        if entry[1] is None and pt.P_corr < pt.P_uncorr:
            entry[1] = pt.p_n
    return {k: tuple(v) for k, v in out.items()}


# ---------------------------------------------------------------------------
# default reference codes for presets
# ---------------------------------------------------------------------------


def reference_codes_for(code_name: str, noise_kind: str) -> list[StabilizerCode]:
    if code_name == "3qc":
        if noise_kind == "correlated":
            return [three_qubit_code("standard"), three_qubit_code("alternative")]
        return [three_qubit_code()]
    if code_name == "5qc":
        return [five_qubit_code("bitflip") if noise_kind == "bitflip" else five_qubit_code()]
    return []
