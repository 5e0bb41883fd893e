import numpy as np
import pytest

from mcpc import channels, linalg
from mcpc.channels import GATES
from mcpc.errors import DimensionError, InvariantViolation
from mcpc.pauli import SIGMA, PauliWord, dense

from conftest import random_density, random_unitary

NOISES = ["none", "depolarizing:0.05", "depolarizing:0.2", "amp_damp:0.1", "overrot:y:0.1"]


def basis_rho(bits):
    return linalg.projector(linalg.ket(int(bits, 2), 2 ** len(bits)))


def test_identity_unitary_channel(rng):
    rho = random_density(4, rng)
    assert np.allclose(channels.unitary_channel(np.eye(4)).apply(rho), rho)


@pytest.mark.parametrize("gate,inp,out", [("cnot", "10", "11"), ("toffoli", "110", "111"), ("cnot", "11", "10")])
def test_truth_tables(gate, inp, out):
    ch = channels.gate_library(gate)
    assert np.allclose(ch.apply(basis_rho(inp)), basis_rho(out))


def test_cphase_phases():
    u = channels.gate_unitary("cphase")
    assert np.allclose(np.diag(u), [1, 1, 1, -1])
    chain = channels.gate_unitary("cphase_chain")
    # diag-product oracle: phase (-1)^(q1 q2 + q2 q3)
    expected = [(-1) ** ((i >> 2 & 1) * (i >> 1 & 1) + (i >> 1 & 1) * (i & 1)) for i in range(8)]
    assert np.allclose(np.diag(chain), expected)
    assert chain[7, 7] == 1


def test_cnot_involution():
    u = channels.gate_unitary("cnot")
    for i in range(4):
        k = linalg.ket(i, 4)
        assert np.allclose(u @ u @ k, k)


def test_unknown_gate():
    with pytest.raises(KeyError):
        channels.gate_library("swap")


def test_noise_examples():
    zero, one = np.diag([1.0, 0]), np.diag([0, 1.0])
    assert np.allclose(channels.depolarizing(1.0, 1).apply(zero), np.eye(2) / 2)
    assert np.allclose(channels.amplitude_damping(1.0, 1).apply(one), zero)
    k = channels.depolarizing(0.2, 2).kraus
    total = sum(a.conj().T @ a for a in k)
    assert np.allclose(total, np.eye(4), rtol=0, atol=1e-12)


def test_depolarizing_affine_form(rng):
    rho = random_density(4, rng)
    out = channels.depolarizing(0.3, 2).apply(rho)
    assert np.allclose(out, 0.7 * rho + 0.3 * np.eye(4) / 4, rtol=0, atol=1e-12)


def test_amplitude_damping_per_qubit():
    ch = channels.amplitude_damping(0.25, 2)
    out = ch.apply(basis_rho("11"))
    # independent decay: populations (g^2, g(1-g), (1-g)g, (1-g)^2) over 00,01,10,11
    assert np.allclose(np.diag(out).real, [0.0625, 0.1875, 0.1875, 0.5625])


def test_overrotation_targets_one_qubit():
    ch = channels.overrotation("x", np.pi, 2, [2])
    out = ch.apply(basis_rho("00"))
    assert np.allclose(out, basis_rho("01"))


def test_invalid_noise_parameters():
    with pytest.raises(ValueError):
        channels.depolarizing(1.5, 1)
    with pytest.raises(ValueError):
        channels.amplitude_damping(-0.1)
    with pytest.raises(ValueError):
        channels.overrotation("w", 0.1, 1)


def test_compose_inverse(rng):
    u = random_unitary(4, rng)
    ch = channels.compose(channels.unitary_channel(u), channels.unitary_channel(u.conj().T))
    rho = random_density(4, rng)
    assert np.allclose(ch.apply(rho), rho, rtol=0, atol=1e-12)


def test_compose_with_identity(rng):
    dep = channels.depolarizing(0.2, 2)
    rho = random_density(4, rng)
    assert np.allclose(channels.compose(dep, channels.identity_channel(2)).apply(rho), dep.apply(rho), atol=1e-12)


def test_depolarizing_composition(rng):
    p1, p2 = 0.1, 0.25
    ch = channels.compose(channels.depolarizing(p1, 2), channels.depolarizing(p2, 2))
    rho = random_density(4, rng)
    expected = channels.depolarizing(1 - (1 - p1) * (1 - p2), 2).apply(rho)
    assert np.allclose(ch.apply(rho), expected, rtol=0, atol=1e-12)


def test_compose_order():
    first = channels.unitary_channel(channels.rotation("x", np.pi / 2))
    second = channels.unitary_channel(SIGMA["Z"])
    ch = channels.compose(first, second)
    psi = np.array([1, 0])
    expected = SIGMA["Z"] @ channels.rotation("x", np.pi / 2) @ psi
    assert np.allclose(ch.apply_pure(psi), np.outer(expected, expected.conj()))


def test_compose_size_mismatch():
    with pytest.raises(DimensionError):
        channels.compose(channels.identity_channel(1), channels.identity_channel(2))


def test_non_trace_preserving_rejected():
    with pytest.raises(InvariantViolation):
        channels.QuantumChannel(1, np.array([[[1, 0], [0, 0.5]]]))


@pytest.mark.parametrize("gate", GATES)
@pytest.mark.parametrize("noise", NOISES + ["depolarizing:0.1+amp_damp:0.05+overrot:x:0.2:1"])
def test_library_channels_complete(gate, noise):
    ch = channels.noisy_gate(gate, noise)
    total = np.einsum("kji,kjl->il", ch.kraus.conj(), ch.kraus)
    assert np.allclose(total, np.eye(ch.dim), rtol=0, atol=1e-9)
    c = channels.choi(ch)
    c.check()
    reduced = linalg.partial_trace(c.matrix, [0], [ch.dim, ch.dim])
    assert np.allclose(reduced, np.eye(ch.dim) / ch.dim, atol=1e-9)


@pytest.mark.parametrize("gate", GATES)
def test_unitary_choi_is_rank_one(gate):
    vals = np.linalg.eigvalsh(channels.choi(channels.gate_library(gate)).matrix)
    assert abs(vals[-1] - 1) < 1e-9
    assert np.all(np.abs(vals[:-1]) < 1e-9)


def test_choi_examples():
    m = channels.choi(channels.identity_channel(1)).matrix
    expected = np.zeros((4, 4))
    expected[np.ix_([0, 3], [0, 3])] = 0.5
    assert np.allclose(m, expected)
    assert np.allclose(channels.choi(channels.depolarizing(1.0, 1)).matrix, np.eye(4) / 4)
    cnot = channels.choi(channels.gate_library("cnot")).matrix
    assert abs(np.trace(dense(PauliWord.from_label("XIXX")) @ cnot) - 1) < 1e-12


def test_choi_matches_definition(rng):
    # (1 x E)(|phi><phi|) built term by term
    ch = channels.noisy_gate("cnot", "amp_damp:0.3")
    d = ch.dim
    phi = sum(np.kron(linalg.ket(i, d), linalg.ket(i, d)) for i in range(d)) / np.sqrt(d)
    big = np.zeros((d * d, d * d), dtype=complex)
    for k in ch.kraus:
        op = np.kron(np.eye(d), k)
        big += op @ np.outer(phi, phi.conj()) @ op.conj().T
    assert np.allclose(channels.choi(ch).matrix, big, rtol=0, atol=1e-12)


def test_overlaps():
    c_cnot = channels.choi(channels.gate_library("cnot"))
    c_cphase = channels.choi(channels.gate_library("cphase"))
    assert abs(channels.choi_overlap(c_cnot, c_cnot) - 1) < 1e-12
    u, v = channels.gate_unitary("cnot"), channels.gate_unitary("cphase")
    oracle = abs(np.trace(u.conj().T @ v)) ** 2 / 16
    assert oracle == pytest.approx(0.25)
    assert abs(channels.choi_overlap(c_cnot, c_cphase) - oracle) < 1e-12
    for p in (0.0, 0.1, 0.37, 1.0):
        noisy = channels.choi(channels.noisy_gate("cnot", f"depolarizing:{p}"))
        assert abs(channels.choi_overlap(c_cnot, noisy) - ((1 - p) + p / 16)) < 1e-12


def test_overlap_symmetric():
    a = channels.choi(channels.noisy_gate("toffoli", "amp_damp:0.2"))
    b = channels.choi(channels.noisy_gate("toffoli", "depolarizing:0.1"))
    assert abs(channels.choi_overlap(a, b) - channels.choi_overlap(b, a)) < 1e-12


def test_noise_before_or_after():
    after = channels.noisy_gate("cnot", "amp_damp:0.3")
    before = channels.noisy_gate("cnot", "amp_damp:0.3", before=True)
    rho = basis_rho("10")
    # damping after the gate acts on |11>; before it acts on |10>
    assert np.allclose(np.diag(after.apply(rho)).real, [0.09, 0.21, 0.21, 0.49])
    assert np.allclose(np.diag(before.apply(rho)).real, [0.3, 0, 0, 0.7])


@pytest.mark.parametrize(
    "text,canonical",
    [
        ("none", "none"),
        ("", "none"),
        ("depolarizing:0.10", "depolarizing:0.1"),
        ("amp_damp:1e-1+overrot:Y:0.1", "amp_damp:0.1+overrot:y:0.1"),
        ("overrot:x:0.2:3", "overrot:x:0.2:3"),
    ],
)
def test_noise_descriptor_round_trip(text, canonical):
    model = channels.parse_noise(text)
    assert model.render() == canonical
    assert channels.parse_noise(model.render()) == model


@pytest.mark.parametrize("bad", ["bogus", "depolarizing", "depolarizing:2", "overrot:w:0.1", "amp_damp:x", "overrot:x:0.1:0"])
def test_malformed_noise(bad):
    with pytest.raises(ValueError):
        channels.parse_noise(bad)


def test_noise_qubit_out_of_range():
    with pytest.raises(ValueError):
        channels.noisy_gate("cnot", "overrot:x:0.1:3")
