import math

import numpy as np
import pytest

from pqclab.entropy import check_correlation_bounds, shannon_entropy
from pqclab.protocols import (
    InputEnsemble,
    ProbabilityDist,
    SharedResource,
    alice_stage,
    build_broken_otp,
    build_broken_teleportation,
    build_classical_otp,
    build_epr_keyed_otp,
    build_named,
    build_quantum_otp,
    build_superdense,
    build_teleportation,
    canonical_ensemble,
    channel_on_units,
    decode,
    decode_per_key,
    encode,
    encode_cross_term,
    epr_block,
    message_distribution,
    protocol_digest,
    protocol_from_dict,
    protocol_to_dict,
    resource_report,
    save_protocol,
    load_protocol,
    security_deviations,
    verify_correctness,
    verify_security,
)
from pqclab.qmath import (
    Ket,
    SystemLayout,
    haar_ket,
    max_abs,
    partial_trace,
    trace_distance,
)

Q1 = SystemLayout.qubits(1)
Q2 = SystemLayout.qubits(2)

ZOO = [
    ("classical-otp", 2),
    ("quantum-otp", 1),
    ("superdense", 2),
    ("teleportation", 1),
    ("epr-otp", 2),
]


def small_ensemble(protocol, probes=8, seed=0):
    return canonical_ensemble(protocol, random_probes=probes, seed=seed)


# ---------------------------------------------------------------------------
# builders pass their own verification


@pytest.mark.parametrize("name,n", ZOO)
def test_zoo_verifies(name, n):
    p = build_named(name, n)
    ens = small_ensemble(p)
    assert verify_security(p, ens) <= 1e-9
    assert verify_correctness(p, ens) <= 1e-9


@pytest.mark.parametrize("name,n", ZOO)
def test_zoo_operations_unitary(name, n):
    p = build_named(name, n)
    for op in p.alice_ops + p.bob_ops:
        assert max_abs(op.matrix.conj().T @ op.matrix - np.eye(op.dim)) <= 1e-10


# ---------------------------------------------------------------------------
# encode


def test_quantum_otp_encode_is_maximally_mixed():
    p = build_quantum_otp(1)
    rng = np.random.default_rng(0)
    probes = [Ket.from_bits("0"), Ket(Q1, np.array([1, 1]) / math.sqrt(2)),
              haar_ket(Q1, rng)]
    for probe in probes:
        assert trace_distance(encode(p, probe).matrix, np.eye(2) / 2) <= 1e-10


def test_classical_otp_encode_uniform_diagonal():
    p = build_classical_otp(2)
    rho = encode(p, Ket.from_bits("01"))
    assert trace_distance(rho.matrix, np.eye(4) / 4) <= 1e-10


def test_superdense_encode_maximally_mixed():
    p = build_superdense(2)
    for bits in ("00", "01", "10", "11"):
        rho = encode(p, Ket.from_bits(bits))
        assert trace_distance(rho.matrix, np.eye(2) / 2) <= 1e-10


# ---------------------------------------------------------------------------
# decode


def test_teleportation_decodes_plus_state():
    p = build_teleportation(1)
    plus = Ket(Q1, np.array([1, 1]) / math.sqrt(2))
    assert trace_distance(decode(p, plus), plus.density()) <= 1e-9


def test_quantum_otp_decodes_basis_state():
    p = build_quantum_otp(1)
    zero = Ket.from_bits("0")
    assert trace_distance(decode(p, zero), zero.density()) <= 1e-9


@pytest.mark.parametrize("name,n", ZOO)
def test_zoo_decodes_every_probe(name, n):
    p = build_named(name, n)
    for probe in small_ensemble(p).probes():
        target = probe.density().matrix
        for k in range(p.key_count):
            assert trace_distance(decode_per_key(p, probe, k).matrix, target) <= 1e-9


def test_identity_protocol_correct_but_leaky():
    p = build_named("identity-leaky", 1)
    ens = InputEnsemble.classical_basis(1)
    assert verify_correctness(p, ens) == pytest.approx(0.0, abs=1e-12)
    assert verify_security(p, ens) > 0.9


# ---------------------------------------------------------------------------
# resource accounting


def test_resource_reports_match_the_table():
    expected = {
        ("classical-otp", 3): (3.0, 3.0, None),
        ("quantum-otp", 2): (2.0, 4.0, None),
        ("superdense", 2): (1.0, None, 1.0),
        ("teleportation", 1): (2.0, None, 1.0),
        ("epr-otp", 2): (2.0, None, 2.0),
    }
    for (name, n), (comm, key, ent) in expected.items():
        rep = resource_report(build_named(name, n))
        assert rep.comm == pytest.approx(comm, abs=1e-9)
        if key is None:
            assert rep.key_entropy is None
        else:
            assert rep.key_entropy == pytest.approx(key, abs=1e-9)
        if ent is None:
            assert rep.entanglement is None
        else:
            assert rep.entanglement == pytest.approx(ent, abs=1e-9)


# ---------------------------------------------------------------------------
# security sweeps


def test_security_random_probes_no_worse_than_structured():
    for name, n in (("quantum-otp", 1), ("teleportation", 1)):
        p = build_named(name, n)
        structured = InputEnsemble.quantum_full(n, random_probes=0, seed=0)
        randoms = InputEnsemble.quantum_full(n, random_probes=50, seed=3)
        dev_structured = security_deviations(p, structured)["state"]
        dev_full = security_deviations(p, randoms)["state"]
        assert dev_full <= dev_structured + 1e-9


def test_classical_message_states_are_diagonal():
    for name, n in (("classical-otp", 2), ("teleportation", 1), ("epr-otp", 2)):
        p = build_named(name, n)
        ens = small_ensemble(p)
        parts = security_deviations(p, ens)
        assert parts["classical_offdiag"] <= 1e-10


def test_teleportation_message_distribution_uniform():
    p = build_teleportation(1)
    rng = np.random.default_rng(5)
    for probe in (Ket.from_bits("0"), haar_ket(Q1, rng), haar_ket(Q1, rng)):
        dist = message_distribution(p, probe)
        assert max_abs(dist.probs - 0.25) <= 1e-10
        assert shannon_entropy(dist) == pytest.approx(2.0)


def test_encode_extends_linearly():
    # the channel evaluated through its matrix-unit table must agree with a
    # direct encode on fresh superposition probes
    p = build_quantum_otp(1)
    units = channel_on_units(p)
    rng = np.random.default_rng(11)
    for _ in range(10):
        psi = haar_ket(Q1, rng)
        direct = encode(p, psi).matrix
        via_units = np.einsum("a,b,abxy->xy", psi.amplitudes,
                              psi.amplitudes.conj(), units)
        assert max_abs(direct - via_units) <= 1e-9


def test_superposition_identity_with_cross_terms():
    p = build_quantum_otp(1)
    e0 = encode(p, Ket.from_bits("0")).matrix
    e1 = encode(p, Ket.from_bits("1")).matrix
    cross = encode_cross_term(p, 0, 1)
    plus = Ket(Q1, np.array([1, 1]) / math.sqrt(2))
    lhs = encode(p, plus).matrix
    rhs = (e0 + e1 + cross + cross.conj().T) / 2
    assert max_abs(lhs - rhs) <= 1e-9


def test_superdense_joint_state_correlation_bound_is_tight():
    # at message time, the (message qubit, receiver half) state saturates
    # I(A:B) <= 2 S(B): a maximally entangled pair gives 2 = 2
    p = build_superdense(2)
    joint = alice_stage(p, Ket.from_bits("00"))
    pair = partial_trace(joint.density(), [2, 3])  # message qubit, receiver half
    slacks = {r.name: r.slack for r in check_correlation_bounds(pair, (0,), (1,))}
    assert slacks["mutual_info_vs_marginals"] == pytest.approx(0.0, abs=1e-9)


# ---------------------------------------------------------------------------
# negative fixtures


def test_broken_otp_fails_security():
    p = build_broken_otp()
    dev = verify_security(p, InputEnsemble.quantum_full(1, 10, 0))
    assert dev > 0.2
    # two-Pauli average: |+> is fixed by the pad, |0> is flattened to I/2
    plus = Ket(Q1, np.array([1, 1]) / math.sqrt(2))
    assert trace_distance(encode(p, plus).matrix, np.eye(2) / 2) == pytest.approx(0.5)


def test_broken_teleportation_fails_correctness():
    p = build_broken_teleportation()
    dev = verify_correctness(p, InputEnsemble.quantum_full(1, 10, 0))
    assert dev > 0.4


# ---------------------------------------------------------------------------
# ensembles


def test_classical_basis_enumerates_all_states():
    ens = InputEnsemble.classical_basis(2)
    probes = list(ens.probes())
    assert len(probes) == 4
    assert max_abs(probes[1].amplitudes - Ket.from_bits("01").amplitudes) == 0


def test_quantum_full_probe_inventory():
    ens = InputEnsemble.quantum_full(1, random_probes=5, seed=0)
    probes = list(ens.probes())
    # 2 basis + 2 pair probes + 5 random
    assert len(probes) == 9
    assert len(probes) == len(ens)


def test_quantum_full_probes_reproducible():
    a = [k.amplitudes for k in InputEnsemble.quantum_full(1, 5, 42).probes()]
    b = [k.amplitudes for k in InputEnsemble.quantum_full(1, 5, 42).probes()]
    for x, y in zip(a, b):
        assert max_abs(x - y) == 0


# ---------------------------------------------------------------------------
# validation and guards


def test_dimension_guard_on_builders():
    with pytest.raises(ValueError, match="exceeds"):
        build_quantum_otp(12)
    with pytest.raises(ValueError, match="exceeds"):
        build_teleportation(8)


def test_superdense_requires_even_bits():
    with pytest.raises(ValueError):
        build_superdense(3)


def test_unknown_builder_name():
    with pytest.raises(KeyError):
        build_named("nonsense", 1)


def test_shared_resource_payload_consistency():
    with pytest.raises(ValueError):
        SharedResource("classical_key")
    with pytest.raises(ValueError):
        SharedResource("none", key_source=ProbabilityDist.uniform(["0", "1"]))
    with pytest.raises(ValueError):
        SharedResource("entangled_state", psi_ab=epr_block(1), alice_subsystems=0)


def test_encode_input_dimension_mismatch():
    with pytest.raises(ValueError):
        encode(build_quantum_otp(1), Ket.from_bits("00"))


# ---------------------------------------------------------------------------
# serialization


@pytest.mark.parametrize("name,n", ZOO)
def test_descriptor_round_trip(name, n, tmp_path):
    p = build_named(name, n)
    clone = protocol_from_dict(protocol_to_dict(p))
    for a, b in zip(p.alice_ops, clone.alice_ops):
        assert max_abs(a.matrix - b.matrix) <= 1e-12
    if p.resource.psi_ab is not None:
        assert max_abs(p.resource.psi_ab.amplitudes
                       - clone.resource.psi_ab.amplitudes) <= 1e-12
    assert protocol_digest(p) == protocol_digest(clone)

    path = tmp_path / "protocol.json"
    save_protocol(p, str(path))
    loaded = load_protocol(str(path))
    ens = small_ensemble(loaded, probes=4)
    assert verify_security(loaded, ens) <= 1e-9
    assert verify_correctness(loaded, ens) <= 1e-9
    rep_orig, rep_loaded = resource_report(p), resource_report(loaded)
    assert rep_orig.comm == pytest.approx(rep_loaded.comm, abs=1e-12)


def test_malformed_descriptor_rejected():
    with pytest.raises(ValueError):
        protocol_from_dict({"format": "something-else"})
