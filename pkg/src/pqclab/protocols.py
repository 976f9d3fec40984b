"""Private-channel protocol model: shared resources, encoders and decoders,
verification sweeps, resource accounting, and the builder zoo.

Simulation model: classical registers are qubit registers constrained to
computational-basis states (classicality is verified, never assumed), and
measurements are deferred, so every pipeline is attach-ancilla / unitary /
partial-trace on a global pure state.  Keyed protocols are simulated per
key: security uses the key-averaged message (the eavesdropper does not know
the key), correctness is enforced per key (the receiver does).
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import qmath
from .entropy import (
    ProbabilityDist,
    classicality_deviation,
    entanglement_measure,
    shannon_entropy,
    von_neumann,
)
from .qmath import (
    SIGMA,
    DensityOp,
    Ket,
    SystemLayout,
    UnitaryOp,
    apply_gate,
    compose_circuit,
    haar_ket,
    matrix_from_json,
    matrix_to_json,
    max_abs,
    reduced_from_vector,
    trace_distance,
)

#: largest dilated simulation load (key count times register dimension)
DESK_SCALE_LIMIT = 4096

RESOURCE_NONE = "none"
RESOURCE_CLASSICAL_KEY = "classical_key"
RESOURCE_ENTANGLED = "entangled_state"
RESOURCE_HYBRID = "hybrid"

INPUT_CLASSICAL = "classical"
INPUT_QUANTUM = "quantum"

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)


class ProtocolVerificationError(RuntimeError):
    """A protocol failed its security or correctness requirement."""

    def __init__(self, message: str, security: float | None = None,
                 correctness: float | None = None):
        super().__init__(message)
        self.security = security
        self.correctness = correctness


@dataclass(frozen=True, eq=False)
class SharedResource:
    """The pre-shared resource: a key distribution, an entangled pure state,
    both (hybrid, produced by resource-augmenting conversions), or nothing."""

    kind: str
    key_source: ProbabilityDist | None = None
    psi_ab: Ket | None = None
    alice_subsystems: int = 0

    def __post_init__(self):
        needs_key = self.kind in (RESOURCE_CLASSICAL_KEY, RESOURCE_HYBRID)
        needs_state = self.kind in (RESOURCE_ENTANGLED, RESOURCE_HYBRID)
        if self.kind not in (RESOURCE_NONE, RESOURCE_CLASSICAL_KEY,
                             RESOURCE_ENTANGLED, RESOURCE_HYBRID):
            raise ValueError(f"unknown resource kind {self.kind!r}")
        if needs_key != (self.key_source is not None):
            raise ValueError(f"resource kind {self.kind!r} and key payload disagree")
        if needs_state != (self.psi_ab is not None):
            raise ValueError(f"resource kind {self.kind!r} and state payload disagree")
        if self.psi_ab is not None:
            if any(d != 2 for d in self.psi_ab.layout.dims):
                raise ValueError("shared states must be qubit registers")
            if not 0 < self.alice_subsystems < len(self.psi_ab.layout):
                raise ValueError("alice_subsystems must split the shared state")

    @classmethod
    def none(cls) -> "SharedResource":
        return cls(RESOURCE_NONE)

    @classmethod
    def classical_key(cls, dist: ProbabilityDist) -> "SharedResource":
        return cls(RESOURCE_CLASSICAL_KEY, key_source=dist)

    @classmethod
    def entangled(cls, psi: Ket, alice_subsystems: int) -> "SharedResource":
        return cls(RESOURCE_ENTANGLED, psi_ab=psi, alice_subsystems=alice_subsystems)

    @classmethod
    def hybrid(cls, dist: ProbabilityDist, psi: Ket, alice_subsystems: int) -> "SharedResource":
        return cls(RESOURCE_HYBRID, key_source=dist, psi_ab=psi,
                   alice_subsystems=alice_subsystems)

    @property
    def keyed(self) -> bool:
        return self.key_source is not None

    @property
    def alice_qubits(self) -> int:
        return self.alice_subsystems if self.psi_ab is not None else 0

    @property
    def bob_qubits(self) -> int:
        if self.psi_ab is None:
            return 0
        return len(self.psi_ab.layout) - self.alice_subsystems


@dataclass(frozen=True)
class ResourceReport:
    """Communication entropy plus whatever shared-resource measures apply."""

    comm: float
    key_entropy: float | None = None
    entanglement: float | None = None

    def to_dict(self) -> dict:
        return {"comm": self.comm, "key_entropy": self.key_entropy,
                "entanglement": self.entanglement}


@dataclass(frozen=True, eq=False)
class ChannelProtocol:
    """One-way private channel: per-key (or global) unitaries for the sender
    and receiver plus the wiring of message and output registers.

    Register conventions: the sender's unitaries act on
    input ⊗ ancilla ⊗ sender-resource-half, the receiver's on
    message ⊗ ancilla ⊗ receiver-resource-half; ancillas start in |0...0>.
    ``message_subsystems`` index the sender register, ``output_subsystems``
    the receiver register, both in wire order.
    """

    name: str
    input_kind: str
    input_qubits: int
    message_kind: str
    resource: SharedResource
    alice_ancillas: int
    bob_ancillas: int
    alice_ops: tuple[UnitaryOp, ...]
    bob_ops: tuple[UnitaryOp, ...]
    message_subsystems: tuple[int, ...]
    output_subsystems: tuple[int, ...]

    def __post_init__(self):
        if self.input_kind not in (INPUT_CLASSICAL, INPUT_QUANTUM):
            raise ValueError(f"bad input_kind {self.input_kind!r}")
        if self.message_kind not in (INPUT_CLASSICAL, INPUT_QUANTUM):
            raise ValueError(f"bad message_kind {self.message_kind!r}")
        if self.input_qubits < 1 or self.alice_ancillas < 0 or self.bob_ancillas < 0:
            raise ValueError("bad register sizes")
        object.__setattr__(self, "alice_ops", tuple(self.alice_ops))
        object.__setattr__(self, "bob_ops", tuple(self.bob_ops))
        object.__setattr__(self, "message_subsystems", tuple(int(i) for i in self.message_subsystems))
        object.__setattr__(self, "output_subsystems", tuple(int(i) for i in self.output_subsystems))

        keys = self.key_count
        if len(self.alice_ops) != keys or len(self.bob_ops) != keys:
            raise ValueError(f"need exactly {keys} sender and receiver operations")

        alice_reg = self.input_qubits + self.alice_ancillas + self.resource.alice_qubits
        bob_reg = len(self.message_subsystems) + self.bob_ancillas + self.resource.bob_qubits
        total = alice_reg + self.resource.bob_qubits + self.bob_ancillas
        if self.message_kind == INPUT_CLASSICAL:
            total += len(self.message_subsystems)  # dephasing environment
        if 2 ** total > DESK_SCALE_LIMIT:
            raise ValueError(
                f"register of {total} qubits exceeds the supported total dimension "
                f"{DESK_SCALE_LIMIT}")
        for op in self.alice_ops:
            if op.dim != 2 ** alice_reg:
                raise ValueError("sender operation dimension does not match its register")
        for op in self.bob_ops:
            if op.dim != 2 ** bob_reg:
                raise ValueError("receiver operation dimension does not match its register")
        if not self.message_subsystems:
            raise ValueError("protocol sends no message")
        if len(set(self.message_subsystems)) != len(self.message_subsystems):
            raise ValueError("duplicate message subsystems")
        if any(not 0 <= i < alice_reg for i in self.message_subsystems):
            raise ValueError("message subsystems outside the sender register")
        if len(set(self.output_subsystems)) != len(self.output_subsystems) or not self.output_subsystems:
            raise ValueError("bad output subsystems")
        if any(not 0 <= i < bob_reg for i in self.output_subsystems):
            raise ValueError("output subsystems outside the receiver register")

    @property
    def key_count(self) -> int:
        return len(self.resource.key_source) if self.resource.keyed else 1

    @property
    def key_probs(self) -> np.ndarray:
        if self.resource.keyed:
            return self.resource.key_source.probs
        return np.array([1.0])

    @property
    def message_qubits(self) -> int:
        return len(self.message_subsystems)


@dataclass(frozen=True, eq=False)
class InputEnsemble:
    """Probe inputs for verification sweeps.

    ``classical_basis`` enumerates every computational-basis state.
    ``quantum_full`` adds, for each basis pair (i, j), the probes
    (|i> + |j>)/sqrt(2) and (|i> + i|j>)/sqrt(2) — enough to pin the
    channel on every matrix unit — plus seeded Haar-random states.
    """

    kind: str
    n: int
    deterministic_probes: tuple[Ket, ...]
    random_probes: int
    seed: int

    @classmethod
    def classical_basis(cls, n: int) -> "InputEnsemble":
        layout = SystemLayout.qubits(n)
        probes = tuple(Ket.basis(layout, i) for i in range(layout.dim))
        return cls("classical_basis", n, probes, 0, 0)

    @classmethod
    def quantum_full(cls, n: int, random_probes: int = 50, seed: int = 0) -> "InputEnsemble":
        layout = SystemLayout.qubits(n)
        d = layout.dim
        probes = [Ket.basis(layout, i) for i in range(d)]
        for i in range(d):
            for j in range(i + 1, d):
                for phase in (1.0, 1.0j):
                    v = np.zeros(d, dtype=complex)
                    v[i] = 1.0
                    v[j] = phase
                    probes.append(Ket(layout, v / math.sqrt(2)))
        return cls("quantum_full", n, tuple(probes), random_probes, seed)

    def probes(self) -> Iterator[Ket]:
        yield from self.deterministic_probes
        if self.random_probes:
            rng = np.random.default_rng(self.seed)
            layout = SystemLayout.qubits(self.n)
            for _ in range(self.random_probes):
                yield haar_ket(layout, rng)

    def __len__(self) -> int:
        return len(self.deterministic_probes) + self.random_probes


def canonical_ensemble(protocol: ChannelProtocol, random_probes: int = 50,
                       seed: int = 0) -> InputEnsemble:
    if protocol.input_kind == INPUT_CLASSICAL:
        return InputEnsemble.classical_basis(protocol.input_qubits)
    return InputEnsemble.quantum_full(protocol.input_qubits, random_probes, seed)


# ---------------------------------------------------------------------------
# simulation engine


def _zero_tail(vec: np.ndarray, qubits: int) -> np.ndarray:
    if qubits == 0:
        return vec
    tail = np.zeros(2 ** qubits, dtype=complex)
    tail[0] = 1.0
    return np.kron(vec, tail)


def _alice_stage_vector(p: ChannelProtocol, input_ket: Ket, key_index: int) -> tuple[np.ndarray, list[int]]:
    """Global pure state on [input, alice-ancilla, alice-half, bob-half], plus
    one trailing environment copy per message wire when the message is
    classical (sending a classical value means the channel records it, which
    is exactly the deferred measurement of those wires)."""
    if input_ket.dim != 2 ** p.input_qubits:
        raise ValueError(
            f"input dimension {input_ket.dim} does not match {p.input_qubits} qubits")
    vec = _zero_tail(input_ket.amplitudes, p.alice_ancillas)
    if p.resource.psi_ab is not None:
        vec = np.kron(vec, p.resource.psi_ab.amplitudes)
    a_reg = p.input_qubits + p.alice_ancillas + p.resource.alice_qubits
    total = a_reg + p.resource.bob_qubits
    dims = [2] * total
    vec = apply_gate(vec, dims, p.alice_ops[key_index].matrix, list(range(a_reg)))
    if p.message_kind == INPUT_CLASSICAL:
        vec = _zero_tail(vec, p.message_qubits)
        dims = dims + [2] * p.message_qubits
        for i, wire in enumerate(p.message_subsystems):
            vec = apply_gate(vec, dims, CNOT, [wire, total + i])
    return vec, dims


def alice_stage(p: ChannelProtocol, input_ket: Ket, key_index: int = 0) -> Ket:
    """Joint state right after the sender's operation (message not yet split off)."""
    vec, dims = _alice_stage_vector(p, input_ket, key_index)
    return Ket(SystemLayout(tuple(dims)), vec)


def encode_per_key(p: ChannelProtocol, input_ket: Ket, key_index: int) -> DensityOp:
    vec, dims = _alice_stage_vector(p, input_ket, key_index)
    reduced = reduced_from_vector(vec, dims, list(p.message_subsystems))
    return DensityOp(SystemLayout.qubits(p.message_qubits), reduced)


def encode(p: ChannelProtocol, input_ket: Ket) -> DensityOp:
    """Message state seen on the wire, averaged over the key distribution."""
    probs = p.key_probs
    acc = np.zeros((2 ** p.message_qubits,) * 2, dtype=complex)
    for k, prob in enumerate(probs):
        vec, dims = _alice_stage_vector(p, input_ket, k)
        acc += prob * reduced_from_vector(vec, dims, list(p.message_subsystems))
    return DensityOp(SystemLayout.qubits(p.message_qubits), acc)


def _decode_vector(p: ChannelProtocol, input_ket: Ket, key_index: int) -> tuple[np.ndarray, list[int], list[int]]:
    vec, dims = _alice_stage_vector(p, input_ket, key_index)
    vec = _zero_tail(vec, p.bob_ancillas)
    dims = dims + [2] * p.bob_ancillas
    res_start = p.input_qubits + p.alice_ancillas + p.resource.alice_qubits
    b_res = p.resource.bob_qubits
    bres_globals = [res_start + j for j in range(b_res)]
    banc_globals = [len(dims) - p.bob_ancillas + j for j in range(p.bob_ancillas)]
    targets = list(p.message_subsystems) + banc_globals + bres_globals
    vec = apply_gate(vec, dims, p.bob_ops[key_index].matrix, targets)
    out_globals = []
    m = p.message_qubits
    for o in p.output_subsystems:
        if o < m:
            out_globals.append(p.message_subsystems[o])
        elif o < m + p.bob_ancillas:
            out_globals.append(banc_globals[o - m])
        else:
            out_globals.append(bres_globals[o - m - p.bob_ancillas])
    return vec, dims, out_globals


def decode_per_key(p: ChannelProtocol, input_ket: Ket, key_index: int) -> DensityOp:
    vec, dims, out_globals = _decode_vector(p, input_ket, key_index)
    reduced = reduced_from_vector(vec, dims, out_globals)
    return DensityOp(SystemLayout.qubits(len(out_globals)), reduced)


def decode(p: ChannelProtocol, input_ket: Ket) -> DensityOp:
    """Receiver output averaged over keys (correctness checks stay per key)."""
    probs = p.key_probs
    acc = None
    for k, prob in enumerate(probs):
        out = decode_per_key(p, input_ket, k)
        acc = prob * out.matrix if acc is None else acc + prob * out.matrix
    return DensityOp(SystemLayout.qubits(len(p.output_subsystems)), acc)


def message_distribution(p: ChannelProtocol, input_ket: Ket) -> ProbabilityDist:
    """Distribution of a classical message, read off the diagonal."""
    if p.message_kind != INPUT_CLASSICAL:
        raise ValueError("message is not classical")
    rho = encode(p, input_ket)
    probs = np.clip(np.real(np.diag(rho.matrix)), 0.0, None)
    probs = probs / probs.sum()
    m = p.message_qubits
    outcomes = tuple(format(i, f"0{m}b") for i in range(2 ** m))
    return ProbabilityDist(outcomes, probs)


# ---------------------------------------------------------------------------
# the channel as a linear map (for cross-term and factorization checks)


def encode_cross_term(p: ChannelProtocol, i: int, j: int) -> np.ndarray:
    """E(|i><j|) for basis states i != j, recovered by linear extension from
    the encodings of four pure probes."""
    if i == j:
        raise ValueError("cross terms need two distinct basis states")
    layout = SystemLayout.qubits(p.input_qubits)
    d = layout.dim
    e_i = encode(p, Ket.basis(layout, i)).matrix
    e_j = encode(p, Ket.basis(layout, j)).matrix
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    v[j] = 1.0
    e_plus = encode(p, Ket(layout, v / math.sqrt(2))).matrix
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    v[j] = 1.0j
    e_phase = encode(p, Ket(layout, v / math.sqrt(2))).matrix
    return e_plus + 1.0j * e_phase - (1.0 + 1.0j) / 2.0 * (e_i + e_j)


def channel_on_units(p: ChannelProtocol) -> np.ndarray:
    """Table E(|a><b|) over all matrix units of the input space."""
    d = 2 ** p.input_qubits
    dm = 2 ** p.message_qubits
    layout = SystemLayout.qubits(p.input_qubits)
    units = np.zeros((d, d, dm, dm), dtype=complex)
    for a in range(d):
        units[a, a] = encode(p, Ket.basis(layout, a)).matrix
    for a in range(d):
        for b in range(a + 1, d):
            cross = encode_cross_term(p, a, b)
            units[a, b] = cross
            units[b, a] = cross.conj().T
    return units


def apply_encoder_to_second_factor(p: ChannelProtocol, sigma: DensityOp,
                                   units: np.ndarray | None = None) -> np.ndarray:
    """(I ⊗ E) sigma for a bipartite sigma whose second factor feeds the encoder."""
    d_in = 2 ** p.input_qubits
    d_ref = sigma.dim // d_in
    if d_ref * d_in != sigma.dim:
        raise ValueError("state dimension is not reference x input")
    if units is None:
        units = channel_on_units(p)
    dm = units.shape[-1]
    blocks = sigma.matrix.reshape(d_ref, d_in, d_ref, d_in)
    out = np.zeros((d_ref, dm, d_ref, dm), dtype=complex)
    for c in range(d_ref):
        for e in range(d_ref):
            out[c, :, e, :] = np.einsum("ab,abxy->xy", blocks[c, :, e, :], units)
    return out.reshape(d_ref * dm, d_ref * dm)


# ---------------------------------------------------------------------------
# verification


def classical_message_deviation(p: ChannelProtocol, ensemble: InputEnsemble) -> float:
    """Largest off-diagonal magnitude over all per-input message states."""
    worst = 0.0
    for probe in ensemble.probes():
        rho = encode(p, probe)
        worst = max(worst, classicality_deviation(rho, range(p.message_qubits)))
    return worst


def factorization_deviation(p: ChannelProtocol, samples: int = 20, seed: int = 0,
                            units: np.ndarray | None = None) -> float:
    """How far (I ⊗ E) sigma strays from (Tr_input sigma) ⊗ rho_ref on random
    bipartite inputs; zero for any input-independent encoder."""
    if units is None:
        units = channel_on_units(p)
    d_in = 2 ** p.input_qubits
    rng = np.random.default_rng(seed)
    layout = SystemLayout((d_in, d_in))
    ref = encode(p, Ket.basis(SystemLayout.qubits(p.input_qubits), 0)).matrix
    worst = 0.0
    for _ in range(samples):
        sigma = qmath.random_density(layout, rng)
        mapped = apply_encoder_to_second_factor(p, sigma, units)
        reduced = qmath.reduced_matrix(sigma.matrix, list(layout.dims), [0])
        worst = max(worst, trace_distance(mapped, np.kron(reduced, ref)))
    return worst


def max_cross_term_magnitude(p: ChannelProtocol, units: np.ndarray | None = None) -> float:
    """Largest |entry| of E(|i><j|) over all orthogonal basis pairs."""
    if units is None:
        units = channel_on_units(p)
    d = units.shape[0]
    worst = 0.0
    for a in range(d):
        for b in range(a + 1, d):
            worst = max(worst, max_abs(units[a, b]))
    return worst


def security_deviations(p: ChannelProtocol, ensemble: InputEnsemble,
                        factorization_samples: int = 20) -> dict[str, float]:
    """All components of the security check, keyed by name."""
    layout = SystemLayout.qubits(p.input_qubits)
    ref = encode(p, Ket.basis(layout, 0))
    state_dev = 0.0
    classical_dev = 0.0
    for probe in ensemble.probes():
        rho = encode(p, probe)
        state_dev = max(state_dev, trace_distance(rho, ref))
        if p.message_kind == INPUT_CLASSICAL:
            classical_dev = max(classical_dev,
                                classicality_deviation(rho, range(p.message_qubits)))
    parts = {"state": state_dev}
    if p.message_kind == INPUT_CLASSICAL:
        parts["classical_offdiag"] = classical_dev
    if ensemble.kind == "quantum_full":
        units = channel_on_units(p)
        parts["cross_term"] = max_cross_term_magnitude(p, units)
        parts["factorization"] = factorization_deviation(
            p, factorization_samples, ensemble.seed + 1, units)
    return parts


def verify_security(p: ChannelProtocol, ensemble: InputEnsemble) -> float:
    """Worst deviation of the wire state from input independence."""
    return max(security_deviations(p, ensemble).values())


def verify_correctness(p: ChannelProtocol, ensemble: InputEnsemble) -> float:
    """Worst per-key trace distance between the decoded output and the input."""
    worst = 0.0
    for probe in ensemble.probes():
        target = probe.density().matrix
        for k in range(p.key_count):
            out = decode_per_key(p, probe, k)
            worst = max(worst, trace_distance(out.matrix, target))
    return worst


def resource_report(p: ChannelProtocol) -> ResourceReport:
    """Communication entropy of the reference message plus key/entanglement
    entropies of the shared resource."""
    ref = Ket.basis(SystemLayout.qubits(p.input_qubits), 0)
    if p.message_kind == INPUT_CLASSICAL:
        comm = shannon_entropy(message_distribution(p, ref))
    else:
        comm = von_neumann(encode(p, ref))
    key_entropy = None
    if p.resource.keyed:
        key_entropy = shannon_entropy(p.resource.key_source)
    entanglement = None
    if p.resource.psi_ab is not None:
        entanglement = entanglement_measure(
            p.resource.psi_ab, range(p.resource.alice_subsystems))
    return ResourceReport(comm, key_entropy, entanglement)


# ---------------------------------------------------------------------------
# builders


def _check_desk_scale(sim_dim: int, context: str):
    if sim_dim > DESK_SCALE_LIMIT:
        raise ValueError(
            f"{context}: total simulation dimension {sim_dim} exceeds {DESK_SCALE_LIMIT}")


def require_desk_scale(p: ChannelProtocol):
    """Reject protocols whose dilated simulation load is beyond desk scale."""
    total = (p.input_qubits + p.alice_ancillas + p.resource.alice_qubits
             + p.resource.bob_qubits + p.bob_ancillas)
    if p.message_kind == INPUT_CLASSICAL:
        total += p.message_qubits
    _check_desk_scale(p.key_count * 2 ** total, p.name)


def controlled_by_value(gates: Sequence[np.ndarray]) -> np.ndarray:
    """Block-diagonal controlled gate: control wires outermost, one block per
    control value."""
    k = len(gates)
    d = gates[0].shape[0]
    out = np.zeros((k * d, k * d), dtype=complex)
    for v, g in enumerate(gates):
        out[v * d:(v + 1) * d, v * d:(v + 1) * d] = g
    return out


def epr_block(n: int) -> Ket:
    """n EPR pairs grouped side by side: sum_x |x>|x> / 2^(n/2) on [A | B]."""
    d = 2 ** n
    amps = np.zeros(d * d, dtype=complex)
    for x in range(d):
        amps[x * d + x] = 1.0
    return Ket(SystemLayout.qubits(2 * n), amps / math.sqrt(d))


def _pauli_key_table(n: int, alphabet: str) -> tuple[list[str], list[UnitaryOp]]:
    keys = ["".join(t) for t in itertools.product(alphabet, repeat=n)]
    ops = [qmath.pauli_string(k) for k in keys]
    return keys, ops


def build_classical_otp(n: int) -> ChannelProtocol:
    """Bitwise XOR pad: n classical bits under a uniform n-bit key."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_desk_scale(2 ** n * 2 ** n, "classical-otp")
    keys, ops = _pauli_key_table(n, "01")
    wires = tuple(range(n))
    return ChannelProtocol(
        name="classical-otp", input_kind=INPUT_CLASSICAL, input_qubits=n,
        message_kind=INPUT_CLASSICAL,
        resource=SharedResource.classical_key(ProbabilityDist.uniform(keys)),
        alice_ancillas=0, bob_ancillas=0,
        alice_ops=tuple(ops), bob_ops=tuple(ops),
        message_subsystems=wires, output_subsystems=wires)


def build_quantum_otp(n: int) -> ChannelProtocol:
    """Uniform Pauli twirl on n qubits: key alphabet {0,1,2,3}^n, per-key
    conjugation by the matching Pauli string."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_desk_scale(2 ** n * 4 ** n, "quantum-otp")
    keys, ops = _pauli_key_table(n, "0123")
    wires = tuple(range(n))
    return ChannelProtocol(
        name="quantum-otp", input_kind=INPUT_QUANTUM, input_qubits=n,
        message_kind=INPUT_QUANTUM,
        resource=SharedResource.classical_key(ProbabilityDist.uniform(keys)),
        alice_ancillas=0, bob_ancillas=0,
        alice_ops=tuple(ops), bob_ops=tuple(ops),
        message_subsystems=wires, output_subsystems=wires)


def build_superdense(n_bits: int) -> ChannelProtocol:
    """Dense coding: n_bits classical bits through n_bits/2 message qubits and
    n_bits/2 EPR pairs; the wire state is maximally mixed for every input."""
    if n_bits < 2 or n_bits % 2:
        raise ValueError("n_bits must be even and >= 2")
    m = n_bits // 2
    _check_desk_scale(2 ** (n_bits + 2 * m), "superdense")
    # controlled sigma_s, the two control bits selecting s = 2*b1 + b2
    pair_gate = controlled_by_value(list(SIGMA))
    alice_gates = [(pair_gate, (2 * i, 2 * i + 1, n_bits + i)) for i in range(m)]
    alice = compose_circuit([2] * (n_bits + m), alice_gates)
    bob_gates = []
    for i in range(m):
        bob_gates += [(CNOT, (i, m + i)), (HADAMARD, (i,)), (CNOT, (i, m + i))]
    bob = compose_circuit([2] * (2 * m), bob_gates)
    out = tuple(x for i in range(m) for x in (i, m + i))
    return ChannelProtocol(
        name="superdense", input_kind=INPUT_CLASSICAL, input_qubits=n_bits,
        message_kind=INPUT_QUANTUM,
        resource=SharedResource.entangled(epr_block(m), m),
        alice_ancillas=0, bob_ancillas=0,
        alice_ops=(UnitaryOp(alice),), bob_ops=(UnitaryOp(bob),),
        message_subsystems=tuple(n_bits + i for i in range(m)),
        output_subsystems=out)


def build_teleportation(n: int) -> ChannelProtocol:
    """Teleport n qubits: Bell readout on (input_i, A_i) produces 2n uniformly
    distributed classical bits; the receiver applies the matching Pauli."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_desk_scale(2 ** (3 * n), "teleportation")
    alice_gates = []
    for i in range(n):
        alice_gates += [(CNOT, (i, n + i)), (HADAMARD, (i,))]
    alice = compose_circuit([2] * (2 * n), alice_gates)
    bob_gates = []
    for i in range(n):
        bob_gates += [(CNOT, (n + i, 2 * n + i)), (CZ, (i, 2 * n + i))]
    bob = compose_circuit([2] * (3 * n), bob_gates)
    return ChannelProtocol(
        name="teleportation", input_kind=INPUT_QUANTUM, input_qubits=n,
        message_kind=INPUT_CLASSICAL,
        resource=SharedResource.entangled(epr_block(n), n),
        alice_ancillas=0, bob_ancillas=0,
        alice_ops=(UnitaryOp(alice),), bob_ops=(UnitaryOp(bob),),
        message_subsystems=tuple(range(2 * n)),
        output_subsystems=tuple(2 * n + i for i in range(n)))


def build_epr_keyed_otp(n: int) -> ChannelProtocol:
    """Classical pad whose key is drawn from EPR halves, realized unitarily:
    CNOTs from the sender's halves into the message register, undone by the
    receiver from the matching halves."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_desk_scale(2 ** (3 * n), "epr-otp")
    alice = compose_circuit([2] * (2 * n), [(CNOT, (n + i, i)) for i in range(n)])
    bob = compose_circuit([2] * (2 * n), [(CNOT, (n + i, i)) for i in range(n)])
    wires = tuple(range(n))
    return ChannelProtocol(
        name="epr-otp", input_kind=INPUT_CLASSICAL, input_qubits=n,
        message_kind=INPUT_CLASSICAL,
        resource=SharedResource.entangled(epr_block(n), n),
        alice_ancillas=0, bob_ancillas=0,
        alice_ops=(UnitaryOp(alice),), bob_ops=(UnitaryOp(bob),),
        message_subsystems=wires, output_subsystems=wires)


def build_identity_protocol(n: int = 1) -> ChannelProtocol:
    """Negative fixture: send the input in the clear (correct, insecure)."""
    eye = UnitaryOp(np.eye(2 ** n, dtype=complex))
    wires = tuple(range(n))
    return ChannelProtocol(
        name="identity-leaky", input_kind=INPUT_CLASSICAL, input_qubits=n,
        message_kind=INPUT_CLASSICAL, resource=SharedResource.none(),
        alice_ancillas=0, bob_ancillas=0,
        alice_ops=(eye,), bob_ops=(eye,),
        message_subsystems=wires, output_subsystems=wires)


def build_broken_otp(n: int = 1) -> ChannelProtocol:
    """Negative fixture: pad truncated to the keys {00, 01} (identity, bit flip)."""
    if n != 1:
        raise ValueError("the truncated-key fixture is defined for n = 1")
    keys = ["00", "01"]
    ops = (qmath.pauli_string("0"), qmath.pauli_string("1"))
    return ChannelProtocol(
        name="broken-otp", input_kind=INPUT_QUANTUM, input_qubits=1,
        message_kind=INPUT_QUANTUM,
        resource=SharedResource.classical_key(ProbabilityDist.uniform(keys)),
        alice_ancillas=0, bob_ancillas=0,
        alice_ops=ops, bob_ops=ops,
        message_subsystems=(0,), output_subsystems=(0,))


def build_broken_teleportation(n: int = 1) -> ChannelProtocol:
    """Negative fixture: teleportation whose receiver skips the Pauli correction."""
    good = build_teleportation(n)
    eye = UnitaryOp(np.eye(2 ** (3 * n), dtype=complex))
    return ChannelProtocol(
        name="broken-teleportation", input_kind=good.input_kind,
        input_qubits=good.input_qubits, message_kind=good.message_kind,
        resource=good.resource, alice_ancillas=0, bob_ancillas=0,
        alice_ops=good.alice_ops, bob_ops=(eye,),
        message_subsystems=good.message_subsystems,
        output_subsystems=good.output_subsystems)


PROTOCOL_BUILDERS = {
    "classical-otp": build_classical_otp,
    "quantum-otp": build_quantum_otp,
    "superdense": build_superdense,
    "teleportation": build_teleportation,
    "epr-otp": build_epr_keyed_otp,
    "identity-leaky": build_identity_protocol,
    "broken-otp": build_broken_otp,
    "broken-teleportation": build_broken_teleportation,
}


def build_named(name: str, n: int) -> ChannelProtocol:
    if name not in PROTOCOL_BUILDERS:
        raise KeyError(f"unknown protocol {name!r}; known: {sorted(PROTOCOL_BUILDERS)}")
    return PROTOCOL_BUILDERS[name](n)


# ---------------------------------------------------------------------------
# serialization


def protocol_to_dict(p: ChannelProtocol) -> dict:
    resource: dict = {"kind": p.resource.kind}
    if p.resource.key_source is not None:
        resource["key_outcomes"] = list(p.resource.key_source.outcomes)
        resource["key_probs"] = [float(x) for x in p.resource.key_source.probs]
    if p.resource.psi_ab is not None:
        resource["state_dims"] = list(p.resource.psi_ab.layout.dims)
        resource["state_amplitudes"] = matrix_to_json(p.resource.psi_ab.amplitudes)
        resource["alice_subsystems"] = p.resource.alice_subsystems
    return {
        "format": "pqclab-protocol",
        "schema": 1,
        "name": p.name,
        "input_kind": p.input_kind,
        "input_qubits": p.input_qubits,
        "message_kind": p.message_kind,
        "alice_ancillas": p.alice_ancillas,
        "bob_ancillas": p.bob_ancillas,
        "resource": resource,
        "alice_ops": [matrix_to_json(op.matrix) for op in p.alice_ops],
        "bob_ops": [matrix_to_json(op.matrix) for op in p.bob_ops],
        "message_subsystems": list(p.message_subsystems),
        "output_subsystems": list(p.output_subsystems),
    }


def protocol_from_dict(data: dict) -> ChannelProtocol:
    if data.get("format") != "pqclab-protocol":
        raise ValueError("not a protocol descriptor")
    res = data["resource"]
    kind = res["kind"]
    dist = None
    if "key_outcomes" in res:
        dist = ProbabilityDist(tuple(res["key_outcomes"]), np.asarray(res["key_probs"]))
    psi = None
    alice_subsystems = 0
    if "state_amplitudes" in res:
        layout = SystemLayout(tuple(res["state_dims"]))
        psi = Ket(layout, matrix_from_json(res["state_amplitudes"]))
        alice_subsystems = int(res["alice_subsystems"])
    resource = SharedResource(kind, key_source=dist, psi_ab=psi,
                              alice_subsystems=alice_subsystems)
    return ChannelProtocol(
        name=str(data["name"]),
        input_kind=data["input_kind"],
        input_qubits=int(data["input_qubits"]),
        message_kind=data["message_kind"],
        resource=resource,
        alice_ancillas=int(data["alice_ancillas"]),
        bob_ancillas=int(data["bob_ancillas"]),
        alice_ops=tuple(UnitaryOp(matrix_from_json(m)) for m in data["alice_ops"]),
        bob_ops=tuple(UnitaryOp(matrix_from_json(m)) for m in data["bob_ops"]),
        message_subsystems=tuple(data["message_subsystems"]),
        output_subsystems=tuple(data["output_subsystems"]))


def save_protocol(p: ChannelProtocol, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(protocol_to_dict(p), fh)


def load_protocol(path: str) -> ChannelProtocol:
    with open(path, encoding="utf-8") as fh:
        return protocol_from_dict(json.load(fh))


def protocol_digest(p: ChannelProtocol) -> str:
    """Stable sha256 of the canonical descriptor."""
    blob = json.dumps(protocol_to_dict(p), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
