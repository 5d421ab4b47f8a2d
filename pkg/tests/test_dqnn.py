import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import assert_cptp, naive_embed, naive_network, random_density
from qaeqec.codes import perfect_recovery, three_qubit_code
from qaeqec.dqnn import (
    Append,
    Architecture,
    Channel,
    Discard,
    EncodingFinder,
    Gate,
    InternalNoise,
    NetworkParams,
    QAECollection,
    build_self_inverse_decoder,
    channel_of,
    erasure_patterns,
    forward,
    handbuilt_three_qubit_qae,
    layer_map,
    mirror_index,
    rearrange_to_qae,
)
from qaeqec.experiments import first_order_output
from qaeqec.linalg import ket, partial_trace, projector
from qaeqec.noise import dephasing_quadrature
from qaeqec.tomography import channel_distance, chi_matrix

ARCHS = [
    ((3, 1, 3), False),
    ((3, 1, 3), True),
    ((2, 3, 2), False),
    ((1, 2, 1), True),
    ((2, 3, 1), False),
    ((2, 1, 2, 1, 2), True),
    ((5, 1, 5), True),
]


@pytest.mark.parametrize("widths,self_inverse", ARCHS)
def test_forward_matches_explicit_construction(widths, self_inverse, rng):
    params = NetworkParams.random(Architecture(widths, self_inverse), rng)
    rho = random_density(widths[0], rng)
    expect = naive_network(rho, widths, params.unitaries, self_inverse)
    assert np.allclose(forward(params, rho), expect, atol=1e-12)


@pytest.mark.parametrize("widths,self_inverse", ARCHS[:5])
def test_network_channel_is_cptp(widths, self_inverse, rng):
    params = NetworkParams.random(Architecture(widths, self_inverse), rng)
    assert_cptp(channel_of(params), widths[0])
    assert_cptp(channel_of(params, InternalNoise(0.05)), widths[0])


def test_layer_map_matches_oracle(rng):
    from oracles import naive_layer
    from qaeqec.linalg import haar_random_unitary

    us = [haar_random_unitary(3, rng) for _ in range(2)]
    rho = random_density(2, rng)
    assert np.allclose(layer_map(rho, us), naive_layer(rho, us, 2, 2))


def test_self_inverse_decoder_is_adjoint_with_swapped_roles(rng):
    params = NetworkParams.random(Architecture((3, 1, 3), True), rng)
    (dec,) = build_self_inverse_decoder(params)
    u = params.unitaries[0][0]
    assert len(dec) == 1
    mat, targets = dec[0]
    assert np.allclose(mat, u.conj().T)
    assert targets == (1, 2, 3, 0)
    # 2-1-2-1-2: the first decoder transition mirrors the 1 -> 2 encoder gates in reverse order
    p2 = NetworkParams.random(Architecture((2, 1, 2, 1, 2), True), rng)
    trans = build_self_inverse_decoder(p2)
    assert [len(t) for t in trans] == [2, 1]
    (g1, t1), (g2, t2) = trans[0]
    assert np.allclose(g1, p2.unitaries[1][1].conj().T) and t1 == (2, 1)
    assert np.allclose(g2, p2.unitaries[1][0].conj().T) and t2 == (2, 0)


def test_mirror_index():
    assert [mirror_index(3, j) for j in (1, 2, 3)] == [3, 2, 1]


def test_swap_encoder_round_trip(rng):
    # encoder swaps the input onto the hidden qubit, its mirror swaps it back
    from qaeqec.dqnn import SWAP

    params = NetworkParams(Architecture((1, 1, 1), True), [[SWAP]])
    rho = random_density(1, rng)
    assert np.allclose(forward(params, rho), rho)


def test_identity_network_outputs_fixed_state(rng):
    params = NetworkParams.identity(Architecture((3, 1, 3)))
    outs = [forward(params, random_density(3, rng)) for _ in range(3)]
    assert all(np.allclose(o, projector(ket("000"))) for o in outs)


def test_architecture_validation():
    with pytest.raises(ValueError):
        Architecture((3,))
    with pytest.raises(ValueError):
        Architecture((3, 0, 3))
    with pytest.raises(ValueError):
        Architecture((3, 1, 2), True)
    with pytest.raises(ValueError):
        Architecture((3, 1), True)
    a = Architecture((3, 1, 3), True)
    assert a.stored_transitions == 1 and a.unitary_qubits() == [[4]]
    assert Architecture((3, 1, 3)).unitary_qubits() == [[4], [2, 2, 2]]


def test_params_shape_validation(rng):
    with pytest.raises(ValueError):
        NetworkParams(Architecture((3, 1, 3), True), [[np.eye(8)]])
    with pytest.raises(ValueError):
        NetworkParams(Architecture((3, 1, 3), True), [[np.eye(16)], [np.eye(4)]])


def test_input_dimension_checked(rng):
    params = NetworkParams.random(Architecture((3, 1, 3), True), rng)
    with pytest.raises(ValueError):
        forward(params, np.eye(4) / 4)


def test_internal_noise_placement_standard_313():
    params = handbuilt_three_qubit_qae()
    ops = params.ops(noise=InternalNoise(0.01))
    channels = [i for i, op in enumerate(ops) if isinstance(op, Channel)]
    assert len(channels) == 4
    widths = [len(ops[i - 1].targets) for i in channels]
    assert widths == [4, 2, 2, 2]
    assert all(isinstance(ops[i - 1], Gate) for i in channels)


def test_internal_noise_range():
    with pytest.raises(ValueError):
        InternalNoise(-0.1)


def test_handbuilt_network_equals_recovery():
    code = three_qubit_code()
    net = chi_matrix(channel_of(handbuilt_three_qubit_qae()), 3, 3)
    ref = chi_matrix(lambda r: perfect_recovery(code, r), 3, 3)
    assert channel_distance(net, ref) < 1e-12


@pytest.mark.parametrize("p_n", [0.01, 0.005, 0.0025])
def test_first_order_noise_expansion(p_n, rng):
    net = handbuilt_three_qubit_qae()
    code = three_qubit_code()
    rho = random_density(3, rng)
    rho_l = perfect_recovery(code, rho)
    exact = forward(net, rho, InternalNoise(p_n))
    dev = np.abs(exact - first_order_output(rho_l, p_n)).max()
    assert dev < 5 * p_n**2


def test_erasure_patterns():
    pats = erasure_patterns(5, 2)
    assert pats[0] == () and len(pats) == 1 + 5 + 10
    assert (0, 4) in pats


def test_collection_routes(rng):
    col = QAECollection.random(4, erasure_patterns(4, 1), rng)
    assert col.patterns == [(), (0,), (1,), (2,), (3,)]
    assert col.slot((2,)) == 3
    for route in col.patterns:
        rho = random_density(4 - len(route), rng)
        out = forward(col, rho, route=route)
        assert out.shape == (16, 16)
        assert np.isclose(np.trace(out), 1)
    with pytest.raises(KeyError):
        col.encoder_ops((0, 1))


def test_collection_no_loss_member_is_self_inverse_qae(rng):
    col = QAECollection.random(3, [(), (0,)], rng)
    rho = random_density(3, rng)
    assert np.allclose(forward(col, rho), forward(col.qae, rho))


def test_collection_pattern_matches_explicit_oracle(rng):
    from oracles import naive_layer, naive_mirrored_layer

    col = QAECollection.random(4, erasure_patterns(4, 1), rng)
    rho = random_density(4, rng)
    lost = partial_trace(rho, [1])
    hidden = naive_layer(lost, [col.encoders[(1,)]], 3, 1)
    expect = naive_mirrored_layer(hidden, [col.shared], 1, 4)
    assert np.allclose(forward(col, lost, route=(1,)), expect)


def test_finder_ops_and_rearrangement(rng):
    quad = dephasing_quadrature(1.0, 9)
    finder = EncodingFinder.random(4, 1, rng, quad)
    ops = finder.ops((2,))
    assert isinstance(ops[0], Append)
    assert any(isinstance(op, Channel) for op in ops)
    assert any(isinstance(op, Discard) and op.qubits == (2,) for op in ops)
    rho = random_density(1, rng)
    assert forward(finder, rho, route=(2,)).shape == (2, 2)
    assert rearrange_to_qae(finder) is finder.collection


@given(st.integers(0, 2**32 - 1))
def test_random_network_output_is_density(seed):
    rng = np.random.default_rng(seed)
    params = NetworkParams.random(Architecture((2, 1, 2), True), rng)
    out = forward(params, random_density(2, rng), InternalNoise(0.1))
    assert np.allclose(out, out.conj().T)
    assert np.isclose(np.trace(out), 1)
    assert np.linalg.eigvalsh(out).min() > -1e-12


def test_gate_embedding_uses_target_order(rng):
    from qaeqec.dqnn import run_ops
    from qaeqec.linalg import haar_random_unitary

    u = haar_random_unitary(2, rng)
    rho = random_density(3, rng)
    full = naive_embed(u, [2, 0], 3)
    out = run_ops([Gate(0, (2, 0))], [u], rho)
    assert np.allclose(out, full @ rho @ full.conj().T)


@pytest.mark.parametrize("widths,self_inverse", ARCHS)
def test_transition_ops_compose_to_network(widths, self_inverse, rng):
    from qaeqec.dqnn import run_ops

    params = NetworkParams.random(Architecture(widths, self_inverse), rng)
    trans = params.transition_ops()
    assert len(trans) == len(widths) - 1
    rho = random_density(widths[0], rng)
    out = rho
    for ops in trans:
        out = run_ops(ops, params.flat_unitaries(), out)
    assert np.allclose(out, forward(params, rho))
