"""Dense complex linear algebra over multi-qudit systems.

Conventions used throughout the package:

* subsystem index 0 is the leftmost (outermost) tensor factor;
* pure states are compared as rays (via the induced density operators),
  never amplitude-wise;
* every equality test is tolerance-parameterized, with the max-abs-entry
  metric for matrices and trace distance for states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: default tolerance for algebraic identities
ALGEBRA_TOL = 1e-9
#: default tolerance for entropy-valued quantities (logs amplify eigenvalue noise)
ENTROPY_TOL = 1e-7
#: eigenvalues at or below this threshold are treated as exact zeros
EIGENVALUE_CLIP = 1e-12
#: tolerance for unitarity / isometry checks
UNITARY_TOL = 1e-10

# sigma_2 carries the (i, -i) sign convention rather than the more common
# (-i, i); it is Hermitian, unitary and an involution either way, and the
# uniform twirl it enters is convention-independent.
SIGMA = (
    np.eye(2, dtype=complex),
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)


def as_complex(m) -> np.ndarray:
    return np.asarray(m, dtype=complex)


def max_abs(m) -> float:
    m = np.asarray(m)
    return 0.0 if m.size == 0 else float(np.max(np.abs(m)))


def mat_close(a, b, tol: float = ALGEBRA_TOL) -> bool:
    """Max-abs-entry comparison of two equally shaped arrays."""
    a, b = as_complex(a), as_complex(b)
    if a.shape != b.shape:
        return False
    return max_abs(a - b) <= tol


@dataclass(frozen=True)
class SystemLayout:
    """Ordered list of subsystem dimensions; index 0 is the outermost factor."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("layout needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise ValueError(f"subsystem dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def qubits(cls, n: int) -> "SystemLayout":
        if n < 1:
            raise ValueError("need at least one qubit")
        return cls((2,) * n)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.dims)

    def check_subsystems(self, indices: Iterable[int]) -> tuple[int, ...]:
        idx = tuple(int(i) for i in indices)
        for i in idx:
            if not 0 <= i < len(self.dims):
                raise ValueError(f"subsystem index {i} out of range for {self.dims}")
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate subsystem indices in {idx}")
        return idx


def _frozen_array(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Ket:
    """Unit-norm amplitude vector over a declared subsystem layout."""

    layout: SystemLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen_array(self.amplitudes, shape=(self.layout.dim,))
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"ket is not normalized (norm {norm})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, layout: SystemLayout, index: int) -> "Ket":
        amps = np.zeros(layout.dim, dtype=complex)
        amps[index] = 1.0
        return cls(layout, amps)

    @classmethod
    def from_bits(cls, bits: str) -> "Ket":
        """Computational-basis qubit ket, e.g. ``"01"`` for the second 2-qubit state."""
        layout = SystemLayout.qubits(len(bits))
        return cls.basis(layout, int(bits, 2))

    @property
    def dim(self) -> int:
        return self.layout.dim

    def density(self) -> "DensityOp":
        return DensityOp(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def tensor(self, other: "Ket") -> "Ket":
        layout = SystemLayout(self.layout.dims + other.layout.dims)
        return Ket(layout, np.kron(self.amplitudes, other.amplitudes))

    def permute(self, order: Sequence[int]) -> "Ket":
        """Reorder subsystems; new factor k is old factor ``order[k]``."""
        order = list(order)
        if sorted(order) != list(range(len(self.layout))):
            raise ValueError(f"{order} is not a permutation of the subsystems")
        dims = self.layout.dims
        amps = self.amplitudes.reshape(dims).transpose(order).reshape(-1)
        return Ket(SystemLayout(tuple(dims[i] for i in order)), amps)


@dataclass(frozen=True, eq=False)
class DensityOp:
    """Hermitian, positive semi-definite, unit-trace operator on a layout."""

    layout: SystemLayout
    matrix: np.ndarray

    def __post_init__(self):
        d = self.layout.dim
        mat = _frozen_array(self.matrix, shape=(d, d))
        if max_abs(mat - mat.conj().T) > 1e-8:
            raise ValueError("density operator is not Hermitian")
        eigmin = float(np.linalg.eigvalsh(mat)[0])
        if eigmin < -1e-8:
            raise ValueError(f"density operator has negative eigenvalue {eigmin}")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"density operator trace is {tr}, expected 1")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def eigenvalues(self) -> np.ndarray:
        """Real spectrum in descending order."""
        return np.linalg.eigvalsh(self.matrix)[::-1]

    def reduce(self, keep: Iterable[int]) -> "DensityOp":
        return partial_trace(self, keep)


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """Square matrix with U^dagger U = I within :data:`UNITARY_TOL`."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen_array(self.matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"unitary must be square, got shape {mat.shape}")
        d = mat.shape[0]
        if max_abs(mat.conj().T @ mat - np.eye(d)) > UNITARY_TOL:
            raise ValueError("matrix is not unitary")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


# ---------------------------------------------------------------------------
# composition and reduction


def tensor(a, b) -> np.ndarray:
    """Kronecker product with ``a``'s indices outermost."""
    return np.kron(as_complex(a), as_complex(b))


def apply_gate(block: np.ndarray, dims: Sequence[int], gate: np.ndarray,
               targets: Sequence[int]) -> np.ndarray:
    """Apply ``gate`` to the listed subsystems (in the given order) of a
    state vector or to the row index of a matrix of column vectors."""
    dims = list(dims)
    n = len(dims)
    targets = list(targets)
    rest = [i for i in range(n) if i not in targets]
    perm = targets + rest
    cols = 0 if block.ndim == 1 else block.shape[1]
    shape = dims + ([cols] if cols else [])
    t = block.reshape(shape)
    axes = perm + ([n] if cols else [])
    t = np.transpose(t, axes)
    d_t = int(np.prod([dims[i] for i in targets]))
    t = gate @ t.reshape(d_t, -1)
    t = t.reshape([dims[i] for i in perm] + ([cols] if cols else []))
    inverse = list(np.argsort(perm)) + ([n] if cols else [])
    t = np.transpose(t, inverse)
    return t.reshape(-1) if block.ndim == 1 else t.reshape(-1, cols)


def apply_to_ket(psi: Ket, gate: np.ndarray, targets: Sequence[int]) -> Ket:
    targets = psi.layout.check_subsystems(targets)
    return Ket(psi.layout, apply_gate(psi.amplitudes, psi.layout.dims, as_complex(gate), targets))


def embed_operator(gate: np.ndarray, targets: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Expand a gate on selected subsystems to the full product space."""
    d = int(np.prod(list(dims)))
    return apply_gate(np.eye(d, dtype=complex), dims, as_complex(gate), targets)


def compose_circuit(dims: Sequence[int], gates: Iterable[tuple[np.ndarray, Sequence[int]]]) -> np.ndarray:
    """Product of embedded gates; the first listed gate acts first."""
    d = int(np.prod(list(dims)))
    u = np.eye(d, dtype=complex)
    for gate, targets in gates:
        u = apply_gate(u, dims, as_complex(gate), list(targets))
    return u


def reduced_matrix(matrix: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a square matrix, keeping subsystems in the order given."""
    dims = list(dims)
    n = len(dims)
    keep = list(keep)
    rest = [i for i in range(n) if i not in keep]
    t = matrix.reshape(dims + dims)
    perm = keep + rest + [n + i for i in keep] + [n + i for i in rest]
    t = np.transpose(t, perm)
    dk = int(np.prod([dims[i] for i in keep]))
    dr = int(np.prod([dims[i] for i in rest])) if rest else 1
    return np.einsum("arbr->ab", t.reshape(dk, dr, dk, dr))


def reduced_from_vector(vec: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of a pure state, keeping subsystems in the order given."""
    dims = list(dims)
    n = len(dims)
    keep = list(keep)
    rest = [i for i in range(n) if i not in keep]
    t = vec.reshape(dims).transpose(keep + rest)
    dk = int(np.prod([dims[i] for i in keep]))
    m = t.reshape(dk, -1)
    return m @ m.conj().T


def partial_trace(state: DensityOp, keep: Iterable[int]) -> DensityOp:
    """Reduced state on the kept subsystems, in their original relative order."""
    keep = state.layout.check_subsystems(keep)
    if not keep:
        raise ValueError("must keep at least one subsystem")
    keep = tuple(sorted(keep))
    dims = state.layout.dims
    reduced = reduced_matrix(state.matrix, dims, list(keep))
    return DensityOp(SystemLayout(tuple(dims[i] for i in keep)), reduced)


# ---------------------------------------------------------------------------
# spectral helpers


def phase_fix_columns(mat: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Rotate each column so its first entry of magnitude > tol is real positive."""
    out = np.array(mat, dtype=complex)
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > tol)
        if nz.size:
            pivot = col[nz[0]]
            out[:, j] = col * (pivot.conj() / abs(pivot))
    return out


def eigh_descending(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition, eigenvalues descending, phases canonicalized.

    Deterministic for identical input bits; stable sort keeps LAPACK's
    ordering inside degenerate clusters.
    """
    vals, vecs = np.linalg.eigh(matrix)
    order = np.argsort(-vals, kind="stable")
    return vals[order], phase_fix_columns(vecs[:, order])


def complete_orthonormal_basis(columns: np.ndarray) -> np.ndarray:
    """Deterministically extend orthonormal columns to a full unitary."""
    d, r = columns.shape
    basis = [columns[:, j] for j in range(r)]
    for i in range(d):
        if len(basis) == d:
            break
        v = np.zeros(d, dtype=complex)
        v[i] = 1.0
        for b in basis:
            v = v - b * (b.conj() @ v)
        norm = float(np.linalg.norm(v))
        if norm > 1e-6:
            basis.append(v / norm)
    if len(basis) != d:
        raise ValueError("could not complete basis; input columns not orthonormal?")
    return np.column_stack(basis)


def _orthonormalize(columns: list[np.ndarray]) -> list[np.ndarray]:
    # modified Gram-Schmidt; inputs are already near-orthonormal
    out: list[np.ndarray] = []
    for v in columns:
        w = np.array(v, dtype=complex)
        for b in out:
            w = w - b * (b.conj() @ w)
        out.append(w / np.linalg.norm(w))
    return out


# ---------------------------------------------------------------------------
# decomposition and comparison


def schmidt_decompose(psi: Ket, cut: Iterable[int]) -> tuple[np.ndarray, list[Ket], list[Ket]]:
    """Schmidt form of a bipartite pure state.

    ``cut`` names the subsystems of the left group; the right group is the
    complement in original order.  Returns descending coefficients and the
    matching orthonormal local bases, with all zero coefficients dropped.
    """
    if len(psi.layout) < 2:
        raise ValueError("schmidt decomposition needs at least two subsystems")
    left = list(psi.layout.check_subsystems(cut))
    right = [i for i in range(len(psi.layout)) if i not in left]
    if not left or not right:
        raise ValueError("cut must split the layout into two nonempty groups")
    dims = psi.layout.dims
    d_l = int(np.prod([dims[i] for i in left]))
    m = psi.amplitudes.reshape(dims).transpose(left + right).reshape(d_l, -1)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    keep = s > math.sqrt(EIGENVALUE_CLIP)
    u, s, vh = u[:, keep], s[keep], vh[keep, :]
    left_layout = SystemLayout(tuple(dims[i] for i in left))
    right_layout = SystemLayout(tuple(dims[i] for i in right))
    left_basis = [Ket(left_layout, u[:, k]) for k in range(s.size)]
    right_basis = [Ket(right_layout, vh[k, :]) for k in range(s.size)]
    return s, left_basis, right_basis


def purify(rho: DensityOp) -> Ket:
    """Canonical purification on (reference ⊗ original).

    The reference is a single subsystem of the same dimension; the
    construction uses the descending eigendecomposition, so the Schmidt
    coefficients are the square roots of the eigenvalues.
    """
    vals, vecs = eigh_descending(rho.matrix)
    d = rho.dim
    amps = np.zeros(d * d, dtype=complex)
    for i in range(d):
        if vals[i] > EIGENVALUE_CLIP:
            ref = np.zeros(d, dtype=complex)
            ref[i] = 1.0
            amps += math.sqrt(vals[i]) * np.kron(ref, vecs[:, i])
    layout = SystemLayout((d,) + rho.layout.dims)
    return Ket(layout, amps / np.linalg.norm(amps))


def local_transition(phi1: Ket, phi2: Ket, cut: Iterable[int],
                     tol: float = 1e-8) -> UnitaryOp:
    """Local unitary U on the first cut group with (U ⊗ I)|phi1> = |phi2>.

    Both states must reduce to the same operator on the second group
    (i.e. be purifications of one state); otherwise ValueError is raised.
    Degenerate spectra are handled by expanding both states over one shared
    eigenbasis of that reduction.
    """
    if phi1.layout.dims != phi2.layout.dims:
        raise ValueError("states must share a layout")
    left = list(phi1.layout.check_subsystems(cut))
    right = [i for i in range(len(phi1.layout)) if i not in left]
    if not left or not right:
        raise ValueError("cut must split the layout into two nonempty groups")
    dims = phi1.layout.dims
    d_l = int(np.prod([dims[i] for i in left]))

    rho1 = reduced_from_vector(phi1.amplitudes, dims, right)
    rho2 = reduced_from_vector(phi2.amplitudes, dims, right)
    if max_abs(rho1 - rho2) > tol:
        raise ValueError(
            "reductions over the first group differ; the states do not purify "
            "the same operator")

    vals, vecs = eigh_descending((rho1 + rho2) / 2.0)

    def left_vectors(phi: Ket) -> list[np.ndarray]:
        m = phi.amplitudes.reshape(dims).transpose(left + right).reshape(d_l, -1)
        cols = []
        for j in range(vals.size):
            if vals[j] > EIGENVALUE_CLIP:
                g = m @ vecs[:, j].conj()
                cols.append(g / np.linalg.norm(g))
        return cols

    h1 = _orthonormalize(left_vectors(phi1))
    h2 = _orthonormalize(left_vectors(phi2))
    b1 = complete_orthonormal_basis(np.column_stack(h1))
    b2 = complete_orthonormal_basis(np.column_stack(h2))
    return UnitaryOp(b2 @ b1.conj().T)


def pauli_string(symbols: str) -> UnitaryOp:
    """Tensor product of single-qubit Paulis named by a {0,1,2,3} string."""
    if not symbols:
        raise ValueError("pauli string must have length >= 1")
    mats = []
    for c in symbols:
        if c not in "0123":
            raise ValueError(f"invalid pauli symbol {c!r}")
        mats.append(SIGMA[int(c)])
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return UnitaryOp(out)


def trace_distance(a, b) -> float:
    """(1/2) Σ |eigenvalues of a - b|; accepts DensityOp or raw matrices."""
    am = a.matrix if isinstance(a, DensityOp) else as_complex(a)
    bm = b.matrix if isinstance(b, DensityOp) else as_complex(b)
    if am.shape != bm.shape:
        raise ValueError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(am - bm))))


def ray_deviation(a: Ket, b: Ket) -> float:
    """Trace distance between the induced projectors (0 iff equal up to phase).

    Computed from the projector difference, not from 1 - |<a|b>|^2, which
    would square away half the floating-point precision.
    """
    pa = np.outer(a.amplitudes, a.amplitudes.conj())
    pb = np.outer(b.amplitudes, b.amplitudes.conj())
    return trace_distance(pa, pb)


# ---------------------------------------------------------------------------
# sampling and serialization


def haar_ket(layout: SystemLayout, rng: np.random.Generator) -> Ket:
    """Haar-random pure state: normalized iid standard complex Gaussians."""
    v = rng.standard_normal(layout.dim) + 1j * rng.standard_normal(layout.dim)
    return Ket(layout, v / np.linalg.norm(v))


def random_density(layout: SystemLayout, rng: np.random.Generator,
                   rank: int | None = None) -> DensityOp:
    """Random mixed state: partial trace of a Haar pure state on a doubled system."""
    d = layout.dim
    r = d if rank is None else int(rank)
    if not 1 <= r <= d:
        raise ValueError(f"rank must be in [1, {d}]")
    v = rng.standard_normal(d * r) + 1j * rng.standard_normal(d * r)
    m = (v / np.linalg.norm(v)).reshape(d, r)
    return DensityOp(layout, m @ m.conj().T)


def haar_unitary(dim: int, rng: np.random.Generator) -> UnitaryOp:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return UnitaryOp(q * (np.diag(r) / np.abs(np.diag(r))))


def matrix_to_json(m: np.ndarray) -> list:
    """Nested lists of [re, im] pairs (debug serialization for reports)."""
    m = as_complex(m)
    if m.ndim == 1:
        return [[float(x.real), float(x.imag)] for x in m]
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def matrix_from_json(data: list) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 2:  # vector
        return arr[:, 0] + 1j * arr[:, 1]
    return arr[:, :, 0] + 1j * arr[:, :, 1]
