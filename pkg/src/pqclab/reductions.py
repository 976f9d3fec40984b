"""Constructive protocol conversions, lower-bound audits, and the bridge
from oblivious remote state preparation to private channels.

The audits never cite a bound symbolically: every certified figure is
measured on a protocol that was actually constructed and re-verified.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qmath
from .entropy import ProbabilityDist
from .qmath import (
    ENTROPY_TOL,
    SIGMA,
    DensityOp,
    Ket,
    SystemLayout,
    UnitaryOp,
    apply_gate,
    complete_orthonormal_basis,
    compose_circuit,
    max_abs,
    purify,
    reduced_from_vector,
    reduced_matrix,
    trace_distance,
)
from .protocols import (
    CNOT,
    HADAMARD,
    INPUT_CLASSICAL,
    INPUT_QUANTUM,
    RESOURCE_CLASSICAL_KEY,
    RESOURCE_ENTANGLED,
    ChannelProtocol,
    InputEnsemble,
    ProtocolVerificationError,
    SharedResource,
    controlled_by_value,
    epr_block,
    resource_report,
    verify_correctness,
    verify_security,
)


@dataclass(frozen=True)
class BoundAudit:
    """One measured quantity against one lower bound."""

    quantity: str
    measured: float
    bound: float
    slack: float
    satisfied: bool

    @classmethod
    def check(cls, quantity: str, measured: float, bound: float,
              tol: float = ENTROPY_TOL) -> "BoundAudit":
        slack = measured - bound
        return cls(quantity, measured, bound, slack, slack >= -tol)

    def to_dict(self) -> dict:
        return {"quantity": self.quantity, "measured": self.measured,
                "bound": self.bound, "slack": self.slack,
                "satisfied": self.satisfied}


class ObliviousnessError(ValueError):
    """A remote-state-preparation protocol violated an obliviousness invariant."""

    def __init__(self, invariant: str, deviation: float, probe_index: int | None = None):
        super().__init__(
            f"obliviousness invariant {invariant!r} violated "
            f"(deviation {deviation:.3e}"
            + (f", probe {probe_index}" if probe_index is not None else "") + ")")
        self.invariant = invariant
        self.deviation = deviation
        self.probe_index = probe_index


# ---------------------------------------------------------------------------
# verified lifts


def _verify_or_raise(p: ChannelProtocol, ensemble: InputEnsemble, tol: float,
                     context: str) -> tuple[float, float]:
    sec = verify_security(p, ensemble)
    corr = verify_correctness(p, ensemble)
    if sec > tol or corr > tol:
        raise ProtocolVerificationError(
            f"{context}: protocol {p.name!r} fails verification "
            f"(security {sec:.3e}, correctness {corr:.3e})",
            security=sec, correctness=corr)
    return sec, corr


def _pauli_injection(input_offset: int, targets: Sequence[int]) -> list:
    """Controlled Pauli per pair of input bits; bit pair (b1, b2) selects
    sigma with index 2*b1 + b2 on the matching target wire."""
    pair_gate = controlled_by_value(list(SIGMA))
    return [(pair_gate, (input_offset + 2 * i, input_offset + 2 * i + 1, t))
            for i, t in enumerate(targets)]


def _bell_readout(pairs: Sequence[tuple[int, int]]) -> list:
    """Bell-basis change plus index-to-bit relabel on each (first, second) pair."""
    gates = []
    for a, b in pairs:
        gates += [(CNOT, (a, b)), (HADAMARD, (a,)), (CNOT, (a, b))]
    return gates


def _map_alice_index(p: ChannelProtocol, idx: int, input_map: Sequence[int],
                     anc_start: int, res_start: int) -> int:
    """Translate an index of the inner sender register into the lifted one."""
    n, a = p.input_qubits, p.alice_ancillas
    if idx < n:
        return input_map[idx]
    if idx < n + a:
        return anc_start + (idx - n)
    return res_start + (idx - n - a)


def _map_bob_index(p: ChannelProtocol, idx: int, msg_map: Sequence[int],
                   anc_start: int, res_start: int) -> int:
    m, b = p.message_qubits, p.bob_ancillas
    if idx < m:
        return msg_map[idx]
    if idx < m + b:
        return anc_start + (idx - m)
    return res_start + (idx - m - b)


def lift_extra_comm(p: ChannelProtocol, check_input: bool = True,
                    random_probes: int = 12, seed: int = 7) -> ChannelProtocol:
    """Convert a quantum-input channel into one for twice as many classical
    bits, spending n extra qubits of communication.

    The sender locally prepares n EPR pairs, writes the input into them as a
    Pauli string on the first halves, encrypts the second halves with the
    original encoder and ships all of it; the receiver decrypts, then reads
    the pairs out in the Bell basis.  The shared resource is untouched, and
    the wire state factors as (I/2^n) ⊗ rho for every input.
    """
    if p.input_kind != INPUT_QUANTUM:
        raise ValueError("extra-communication lift needs a quantum-input protocol")
    n = p.input_qubits
    if check_input:
        _verify_or_raise(p, InputEnsemble.quantum_full(n, random_probes, seed),
                         1e-9, "lift_extra_comm")

    a = p.alice_ancillas
    m_inner = p.message_qubits
    # the sender keeps one environment copy per inner classical-message wire:
    # shipping those wires unmeasured would leak the input through branch
    # coherences, and the inner channel's output really is a measured value
    n_env = m_inner if p.message_kind == INPUT_CLASSICAL else 0
    f0, g0, anc0 = 2 * n, 3 * n, 4 * n
    env0 = 4 * n + a
    res0 = env0 + n_env
    a_reg = res0 + p.resource.alice_qubits
    dims = [2] * a_reg

    prep = []
    for i in range(n):
        prep += [(HADAMARD, (f0 + i,)), (CNOT, (f0 + i, g0 + i))]
    prep += _pauli_injection(0, [f0 + i for i in range(n)])
    inner_alice_targets = tuple(
        list(range(g0, g0 + n)) + list(range(anc0, anc0 + a))
        + list(range(res0, res0 + p.resource.alice_qubits)))
    inner_msg_map = [
        _map_alice_index(p, i, list(range(g0, g0 + n)), anc0, res0)
        for i in p.message_subsystems]
    measure = [(CNOT, (inner_msg_map[i], env0 + i)) for i in range(n_env)]
    alice_ops = tuple(
        UnitaryOp(compose_circuit(dims, prep + [(op.matrix, inner_alice_targets)] + measure))
        for op in p.alice_ops)

    message = tuple(range(f0, f0 + n)) + tuple(inner_msg_map)

    b = p.bob_ancillas
    b_reg = (n + m_inner) + b + p.resource.bob_qubits
    bob_dims = [2] * b_reg
    banc0, bres0 = n + m_inner, n + m_inner + b
    inner_bob_targets = tuple(
        list(range(n, n + m_inner)) + list(range(banc0, banc0 + b))
        + list(range(bres0, bres0 + p.resource.bob_qubits)))
    decoded = [
        _map_bob_index(p, o, list(range(n, n + m_inner)), banc0, bres0)
        for o in p.output_subsystems]
    readout = _bell_readout([(i, decoded[i]) for i in range(n)])
    bob_ops = tuple(
        UnitaryOp(compose_circuit(bob_dims, [(op.matrix, inner_bob_targets)] + readout))
        for op in p.bob_ops)
    out = tuple(x for i in range(n) for x in (i, decoded[i]))

    return ChannelProtocol(
        name=f"{p.name}-lift-extra-comm", input_kind=INPUT_CLASSICAL,
        input_qubits=2 * n, message_kind=INPUT_QUANTUM, resource=p.resource,
        alice_ancillas=2 * n + a + n_env, bob_ancillas=b,
        alice_ops=alice_ops, bob_ops=bob_ops,
        message_subsystems=message, output_subsystems=out)


def lift_extra_epr(p: ChannelProtocol, check_input: bool = True,
                   random_probes: int = 12, seed: int = 7) -> ChannelProtocol:
    """Convert a quantum-input channel into one for twice as many classical
    bits, spending n extra EPR pairs and no extra communication.

    The sender writes the input as a Pauli string on her halves of the new
    pairs, encrypts those halves with the original encoder, and sends only
    the original message; the receiver decrypts and reads the pairs out in
    the Bell basis against his halves.
    """
    if p.input_kind != INPUT_QUANTUM:
        raise ValueError("extra-entanglement lift needs a quantum-input protocol")
    n = p.input_qubits
    if check_input:
        _verify_or_raise(p, InputEnsemble.quantum_full(n, random_probes, seed),
                         1e-9, "lift_extra_epr")

    ra, rb = p.resource.alice_qubits, p.resource.bob_qubits
    extra = epr_block(n)
    if p.resource.psi_ab is None:
        psi = extra
    else:
        joint = p.resource.psi_ab.tensor(extra)
        # [A, B, e, h] -> [A, e, B, h]
        order = (list(range(ra)) + list(range(ra + rb, ra + rb + n))
                 + list(range(ra, ra + rb)) + list(range(ra + rb + n, ra + rb + 2 * n)))
        psi = joint.permute(order)
    if p.resource.keyed:
        resource = SharedResource.hybrid(p.resource.key_source, psi, ra + n)
    else:
        resource = SharedResource.entangled(psi, ra + n)

    a = p.alice_ancillas
    anc0 = 2 * n
    ares0 = 2 * n + a
    e0 = ares0 + ra
    a_reg = e0 + n
    dims = [2] * a_reg
    prep = _pauli_injection(0, [e0 + i for i in range(n)])
    inner_alice_targets = tuple(
        list(range(e0, e0 + n)) + list(range(anc0, anc0 + a))
        + list(range(ares0, ares0 + ra)))
    alice_ops = tuple(
        UnitaryOp(compose_circuit(dims, prep + [(op.matrix, inner_alice_targets)]))
        for op in p.alice_ops)

    message = tuple(
        _map_alice_index(p, i, list(range(e0, e0 + n)), anc0, ares0)
        for i in p.message_subsystems)

    m_inner = p.message_qubits
    b = p.bob_ancillas
    banc0, bres0 = m_inner, m_inner + b
    h0 = bres0 + rb
    b_reg = h0 + n
    bob_dims = [2] * b_reg
    inner_bob_targets = tuple(
        list(range(m_inner)) + list(range(banc0, banc0 + b))
        + list(range(bres0, bres0 + rb)))
    decoded = [
        _map_bob_index(p, o, list(range(m_inner)), banc0, bres0)
        for o in p.output_subsystems]
    readout = _bell_readout([(decoded[i], h0 + i) for i in range(n)])
    bob_ops = tuple(
        UnitaryOp(compose_circuit(bob_dims, [(op.matrix, inner_bob_targets)] + readout))
        for op in p.bob_ops)
    out = tuple(x for i in range(n) for x in (decoded[i], h0 + i))

    return ChannelProtocol(
        name=f"{p.name}-lift-extra-epr", input_kind=INPUT_CLASSICAL,
        input_qubits=2 * n, message_kind=p.message_kind, resource=resource,
        alice_ancillas=a, bob_ancillas=b,
        alice_ops=alice_ops, bob_ops=bob_ops,
        message_subsystems=message, output_subsystems=out)


# ---------------------------------------------------------------------------
# bound audits


def audit_classical_input(p: ChannelProtocol, verify_tol: float = 1e-9,
                          bound_tol: float = ENTROPY_TOL,
                          log: list[str] | None = None) -> list[BoundAudit]:
    """Audit the resource lower bounds of a verified classical-input channel.

    Classical key: key and communication entropies are each at least n bits.
    Entangled resource: at least n ebits and n bits for a classical message,
    at least n/2 of each for a quantum message.  A quantum-input protocol is
    accepted too: it is audited through its restriction to basis states.
    """
    n = p.input_qubits
    ensemble = InputEnsemble.classical_basis(n)
    sec, corr = _verify_or_raise(p, ensemble, verify_tol, "audit_classical_input")
    rep = resource_report(p)
    if log is not None:
        log.append(f"verified {p.name} on the {2 ** n}-state classical basis "
                   f"(security {sec:.2e}, correctness {corr:.2e})")
    kind = p.resource.kind
    if kind == RESOURCE_CLASSICAL_KEY:
        return [BoundAudit.check("key_entropy", rep.key_entropy, float(n), bound_tol),
                BoundAudit.check("comm_entropy", rep.comm, float(n), bound_tol)]
    if kind == RESOURCE_ENTANGLED:
        factor = 1.0 if p.message_kind == INPUT_CLASSICAL else 0.5
        return [BoundAudit.check("entanglement", rep.entanglement, factor * n, bound_tol),
                BoundAudit.check("comm_entropy", rep.comm, factor * n, bound_tol)]
    raise ValueError(f"no audited bounds for resource kind {kind!r}")


def audit_quantum_input(p: ChannelProtocol, verify_tol: float = 1e-9,
                        bound_tol: float = ENTROPY_TOL, random_probes: int = 20,
                        seed: int = 0, log: list[str] | None = None) -> list[BoundAudit]:
    """Audit the resource lower bounds of a verified quantum-input channel.

    Each bound is certified by construction: the protocol is converted with
    the appropriate lift, the lifted channel is itself verified on its full
    classical basis, and the measured resource figures are compared against
    the classical-input bounds for the doubled bit count.
    """
    if p.input_kind != INPUT_QUANTUM:
        raise ValueError("quantum-input audit needs a quantum-input protocol")
    n = p.input_qubits
    ensemble = InputEnsemble.quantum_full(n, random_probes, seed)
    _verify_or_raise(p, ensemble, verify_tol, "audit_quantum_input")
    rep = resource_report(p)
    basis2n = InputEnsemble.classical_basis(2 * n)
    kind = p.resource.kind

    if kind == RESOURCE_CLASSICAL_KEY:
        lifted = lift_extra_comm(p, check_input=False)
        sec, corr = _verify_or_raise(lifted, basis2n, verify_tol, "audit_quantum_input")
        lifted_rep = resource_report(lifted)
        if log is not None:
            log.append(f"constructed {lifted.name} for {2 * n} classical bits; "
                       f"verified (security {sec:.2e}, correctness {corr:.2e}); "
                       f"measured key entropy {lifted_rep.key_entropy:.6f}")
        return [
            BoundAudit.check("key_entropy", lifted_rep.key_entropy, 2.0 * n, bound_tol),
            BoundAudit.check("comm_entropy", rep.comm, float(n), bound_tol),
        ]

    if kind == RESOURCE_ENTANGLED:
        lifted1 = lift_extra_comm(p, check_input=False)
        sec1, corr1 = _verify_or_raise(lifted1, basis2n, verify_tol, "audit_quantum_input")
        rep1 = resource_report(lifted1)
        lifted2 = lift_extra_epr(p, check_input=False)
        sec2, corr2 = _verify_or_raise(lifted2, basis2n, verify_tol, "audit_quantum_input")
        rep2 = resource_report(lifted2)
        comm_bound = 2.0 * n if lifted2.message_kind == INPUT_CLASSICAL else float(n)
        if log is not None:
            log.append(f"constructed {lifted1.name}; verified (security {sec1:.2e}, "
                       f"correctness {corr1:.2e}); measured entanglement "
                       f"{rep1.entanglement:.6f}")
            log.append(f"constructed {lifted2.name}; verified (security {sec2:.2e}, "
                       f"correctness {corr2:.2e}); measured communication "
                       f"{rep2.comm:.6f}")
        return [
            BoundAudit.check("entanglement", rep1.entanglement, float(n), bound_tol),
            BoundAudit.check("comm_entropy", rep2.comm, comm_bound, bound_tol),
        ]

    raise ValueError(f"no audited bounds for resource kind {kind!r}")


# ---------------------------------------------------------------------------
# oblivious remote state preparation


@dataclass(frozen=True, eq=False)
class ObliviousRsp:
    """One-way remote state preparation with verified obliviousness.

    The sender measures input ⊗ her half of the shared state with the
    (projective) operators ``measurements``; on message m the receiver
    attaches ancillas and applies ``corrections[m]`` to his half ⊗ ancilla,
    after which the wires in ``output_subsystems`` hold the input and the
    rest is an input-independent residue.
    """

    n: int
    psi_ab: Ket
    alice_subsystems: int
    measurements: tuple[np.ndarray, ...]
    corrections: tuple[UnitaryOp, ...]
    bob_ancillas: int
    output_subsystems: tuple[int, ...]

    def __post_init__(self):
        if any(d != 2 for d in self.psi_ab.layout.dims):
            raise ValueError("shared state must be a qubit register")
        if not 0 < self.alice_subsystems < len(self.psi_ab.layout):
            raise ValueError("alice_subsystems must split the shared state")
        measurements = tuple(qmath.as_complex(m) for m in self.measurements)
        d = 2 ** (self.n + self.alice_subsystems)
        total = np.zeros((d, d), dtype=complex)
        for m in measurements:
            if m.shape != (d, d):
                raise ValueError("measurement operator has the wrong dimension")
            total += m.conj().T @ m
        if max_abs(total - np.eye(d)) > 1e-10:
            raise ValueError("measurement operators are not complete")
        if len(self.corrections) != len(measurements):
            raise ValueError("need one correction per message")
        bob_reg = self.bob_qubits + self.bob_ancillas
        for u in self.corrections:
            if u.dim != 2 ** bob_reg:
                raise ValueError("correction dimension does not match the receiver register")
        out = tuple(int(i) for i in self.output_subsystems)
        if len(out) != self.n or any(not 0 <= i < bob_reg for i in out):
            raise ValueError("output subsystems must name n receiver wires")
        object.__setattr__(self, "measurements", measurements)
        object.__setattr__(self, "output_subsystems", out)

    @property
    def bob_qubits(self) -> int:
        return len(self.psi_ab.layout) - self.alice_subsystems

    @property
    def message_count(self) -> int:
        return len(self.measurements)


def _bell_basis_state(labels: str) -> Ket:
    """Bell product state on interleaved pairs, regrouped to [firsts | seconds]."""
    n = len(labels)
    pair_layout = SystemLayout.qubits(2)
    state = None
    for c in labels:
        amps = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
        pair = Ket(pair_layout, apply_gate(amps, [2, 2], SIGMA[int(c)], [0]))
        state = pair if state is None else state.tensor(pair)
    order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    return state.permute(order)


def teleportation_rsp(n: int) -> ObliviousRsp:
    """Teleportation as remote state preparation: Bell-projective measurement
    on input ⊗ sender halves, Pauli corrections, uniform message statistics."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if 2 ** (3 * n) > 4096:
        raise ValueError("teleportation RSP beyond desk scale")
    labels = ["".join(t) for t in itertools.product("0123", repeat=n)]
    measurements = []
    corrections = []
    for s in labels:
        bell = _bell_basis_state(s)
        measurements.append(np.outer(bell.amplitudes, bell.amplitudes.conj()))
        corrections.append(qmath.pauli_string(s))
    return ObliviousRsp(
        n=n, psi_ab=epr_block(n), alice_subsystems=n,
        measurements=tuple(measurements), corrections=tuple(corrections),
        bob_ancillas=0, output_subsystems=tuple(range(n)))


def non_oblivious_rsp(n: int = 1) -> ObliviousRsp:
    """Negative fixture: teleportation RSP whose receiver never corrects, so
    his final state leaks the measurement outcome's Pauli frame."""
    good = teleportation_rsp(n)
    eye = UnitaryOp(np.eye(2 ** n, dtype=complex))
    return ObliviousRsp(
        n=good.n, psi_ab=good.psi_ab, alice_subsystems=good.alice_subsystems,
        measurements=good.measurements,
        corrections=tuple(eye for _ in good.corrections),
        bob_ancillas=good.bob_ancillas, output_subsystems=good.output_subsystems)


def _rsp_branches(rsp: ObliviousRsp, probe: Ket):
    """Yield (m, probability, post-correction receiver state) per message."""
    ra, rb = rsp.alice_subsystems, rsp.bob_qubits
    dims = [2] * (rsp.n + ra + rb)
    vec = np.kron(probe.amplitudes, rsp.psi_ab.amplitudes)
    meas_targets = list(range(rsp.n + ra))
    for m, op in enumerate(rsp.measurements):
        w = apply_gate(vec, dims, op, meas_targets)
        prob = float(np.real(np.vdot(w, w)))
        if prob < 1e-14:
            yield m, prob, None
            continue
        bob = reduced_from_vector(w / math.sqrt(prob), dims,
                                  list(range(rsp.n + ra, rsp.n + ra + rb)))
        if rsp.bob_ancillas:
            anc = np.zeros((2 ** rsp.bob_ancillas,) * 2, dtype=complex)
            anc[0, 0] = 1.0
            bob = np.kron(bob, anc)
        u = rsp.corrections[m].matrix
        bob = u @ bob @ u.conj().T
        yield m, prob, DensityOp(SystemLayout.qubits(rb + rsp.bob_ancillas), bob)


def rsp_message_probs(rsp: ObliviousRsp, probe: Ket) -> np.ndarray:
    return np.array([prob for _, prob, _ in _rsp_branches(rsp, probe)])


def check_obliviousness(rsp: ObliviousRsp, random_probes: int = 20,
                        seed: int = 0) -> dict[str, tuple[float, int]]:
    """Max deviation (and witness probe index) per obliviousness invariant.

    Invariants: message probabilities independent of the input; the output
    wires carry exactly the input; the residue is input-independent; output
    and residue factorize.
    """
    ensemble = InputEnsemble.quantum_full(rsp.n, random_probes, seed)
    bob_reg = rsp.bob_qubits + rsp.bob_ancillas
    residue = [i for i in range(bob_reg) if i not in rsp.output_subsystems]
    ref_probs = None
    ref_residues: dict[int, np.ndarray] = {}
    worst = {"message_probs": (0.0, 0), "output_state": (0.0, 0),
             "residue_drift": (0.0, 0), "factorization": (0.0, 0)}

    def bump(name: str, value: float, probe_index: int):
        if value > worst[name][0]:
            worst[name] = (value, probe_index)

    for idx, probe in enumerate(ensemble.probes()):
        target = probe.density().matrix
        probs = []
        for m, prob, post in _rsp_branches(rsp, probe):
            probs.append(prob)
            if post is None:
                continue
            out = reduced_matrix(post.matrix, [2] * bob_reg, list(rsp.output_subsystems))
            bump("output_state", trace_distance(out, target), idx)
            if residue:
                res = reduced_matrix(post.matrix, [2] * bob_reg, residue)
                if idx == 0:
                    ref_residues[m] = res
                else:
                    bump("residue_drift", trace_distance(res, ref_residues[m]), idx)
                # output wires first, residue after: compare against the product
                perm = list(rsp.output_subsystems) + residue
                reordered = reduced_matrix(post.matrix, [2] * bob_reg, perm)
                bump("factorization", trace_distance(reordered, np.kron(target, res)), idx)
        probs = np.array(probs)
        if ref_probs is None:
            ref_probs = probs
        else:
            bump("message_probs", float(np.max(np.abs(probs - ref_probs))), idx)
    return worst


def rsp_to_pqc(rsp: ObliviousRsp, tol: float = 1e-9, random_probes: int = 20,
               seed: int = 0) -> ChannelProtocol:
    """Turn a verified oblivious RSP into a keyed private channel.

    The message label m becomes the shared key with its (input-independent)
    probability; on key m the sender prepares the residue sigma_m via its
    purification, applies the inverse correction and ships the receiver-half
    wires; the receiver re-applies the correction and keeps the output wires.
    """
    checks = check_obliviousness(rsp, random_probes, seed)
    for invariant, (deviation, probe_index) in checks.items():
        if deviation > tol:
            raise ObliviousnessError(invariant, deviation, probe_index)

    n = rsp.n
    rb = rsp.bob_qubits
    bob_reg = rb + rsp.bob_ancillas
    residue_positions = [i for i in range(bob_reg) if i not in rsp.output_subsystems]
    q_r = len(residue_positions)

    # residue states from the reference probe (input-independent by the checks)
    ref = Ket.basis(SystemLayout.qubits(n), 0)
    probs = []
    residues = []
    keep_keys = []
    for m, prob, post in _rsp_branches(rsp, ref):
        probs.append(prob)
        if post is not None:
            keep_keys.append(m)
            if q_r:
                residues.append(reduced_matrix(post.matrix, [2] * bob_reg,
                                               residue_positions))
            else:
                residues.append(None)
    probs = np.array(probs)

    a_reg = n + 2 * q_r
    dims = [2] * a_reg
    pos_to_wire = {}
    for i, pos in enumerate(rsp.output_subsystems):
        pos_to_wire[pos] = i
    for j, pos in enumerate(residue_positions):
        pos_to_wire[pos] = n + j

    alice_ops = []
    bob_ops = []
    outcomes = []
    for slot, m in enumerate(keep_keys):
        gates = []
        if q_r:
            sigma = DensityOp(SystemLayout.qubits(q_r), residues[slot])
            pur = purify(sigma)  # [reference, residue...]
            # wires: residue system first, then its purification reference
            amps = pur.amplitudes.reshape(2 ** q_r, 2 ** q_r).T.reshape(-1)
            prep = complete_orthonormal_basis(amps.reshape(-1, 1))
            gates.append((prep, tuple(range(n, n + 2 * q_r))))
        correction_wires = tuple(pos_to_wire[pos] for pos in range(bob_reg))
        gates.append((rsp.corrections[m].matrix.conj().T, correction_wires))
        alice_ops.append(UnitaryOp(compose_circuit(dims, gates)))
        bob_ops.append(rsp.corrections[m])
        outcomes.append(str(m))

    message = tuple(pos_to_wire[pos] for pos in range(rb))
    dist = ProbabilityDist(tuple(outcomes), probs[keep_keys] / probs[keep_keys].sum())
    return ChannelProtocol(
        name="rsp-derived-pqc", input_kind=INPUT_QUANTUM, input_qubits=n,
        message_kind=INPUT_QUANTUM,
        resource=SharedResource.classical_key(dist),
        alice_ancillas=2 * q_r, bob_ancillas=rsp.bob_ancillas,
        alice_ops=tuple(alice_ops), bob_ops=tuple(bob_ops),
        message_subsystems=message,
        output_subsystems=rsp.output_subsystems)
