"""Exact two-qubit density-matrix kernel.

States are 4x4 complex density matrices over the computational basis
|00>, |01>, |10>, |11> (first qubit major). Bell states follow the
convention

    psi+- = (|00> +- |11>)/sqrt(2)     parity 0
    phi+- = (|01> +- |10>)/sqrt(2)     parity 1

where the parity tag is the XOR of the two computational bits on the
state's support. Channels are applied in operator-sum form and
measurements sample the Born rule from a seeded generator, so a run is
reproducible bit-for-bit from its seed.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

# single-qubit operators
I2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
# iY is real: |0> -> -|1>, |1> -> |0>
IY = 1j * PAULI_Y

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10


class BellState(Enum):
    """The four maximally entangled two-qubit states."""

    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"

    @property
    def parity(self) -> int:
        """XOR of the two computational bits on the state's support."""
        return 0 if self in (BellState.PSI_PLUS, BellState.PSI_MINUS) else 1

    @property
    def token(self) -> str:
        return self.value


_BELL_VECTORS = {
    BellState.PSI_PLUS: np.array([1, 0, 0, 1], dtype=np.complex128) / np.sqrt(2),
    BellState.PSI_MINUS: np.array([1, 0, 0, -1], dtype=np.complex128) / np.sqrt(2),
    BellState.PHI_PLUS: np.array([0, 1, 1, 0], dtype=np.complex128) / np.sqrt(2),
    BellState.PHI_MINUS: np.array([0, 1, -1, 0], dtype=np.complex128) / np.sqrt(2),
}

BELL_ORDER = (
    BellState.PSI_PLUS,
    BellState.PSI_MINUS,
    BellState.PHI_PLUS,
    BellState.PHI_MINUS,
)


def bell_vector(state: BellState) -> np.ndarray:
    """Unit ket of ``state`` as a length-4 array (copy)."""
    return _BELL_VECTORS[state].copy()


def bell_density(state: BellState) -> np.ndarray:
    """Pure-state projector |state><state|."""
    v = _BELL_VECTORS[state]
    return np.outer(v, v.conj())


def product_density(bit_first: int, bit_second: int) -> np.ndarray:
    """Projector onto the computational basis state |b1 b2>."""
    rho = np.zeros((4, 4), dtype=np.complex128)
    idx = 2 * bit_first + bit_second
    rho[idx, idx] = 1.0
    return rho


def maximally_mixed() -> np.ndarray:
    return np.eye(4, dtype=np.complex128) / 4.0


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------

def is_density_matrix(rho: np.ndarray,
                      herm_tol: float = HERMITICITY_TOL,
                      trace_tol: float = TRACE_TOL,
                      psd_tol: float = PSD_TOL) -> bool:
    """Hermitian, unit trace, positive semidefinite (within tolerances)."""
    if rho.shape != (4, 4):
        return False
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        return False
    if abs(np.trace(rho).real - 1.0) > trace_tol or abs(np.trace(rho).imag) > trace_tol:
        return False
    eigenvalues = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    return bool(eigenvalues.min() >= -psd_tol)


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def check_kraus_completeness(operators, tol: float = COMPLETENESS_TOL) -> None:
    """Raise if sum_i K_i^dag K_i deviates from the identity beyond ``tol``."""
    total = np.zeros((2, 2), dtype=np.complex128)
    for op in operators:
        op = np.asarray(op, dtype=np.complex128)
        if op.shape != (2, 2):
            raise ValueError(f"Kraus operator must be 2x2, got shape {op.shape}")
        total += op.conj().T @ op
    deviation = float(np.max(np.abs(total - I2)))
    if deviation > tol:
        raise ValueError(f"Kraus set violates completeness by {deviation:.3e}")


# ---------------------------------------------------------------------------
# channels and unitaries
# ---------------------------------------------------------------------------

def two_qubit_kraus_stack(left_ops, right_ops) -> np.ndarray:
    """Stack of all tensor products K_i (x) L_j, shape (m, 4, 4)."""
    return np.array([np.kron(a, b) for a in left_ops for b in right_ops])


def apply_kraus_stack(rho: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """sum_a O_a rho O_a^dag for a stacked operator array."""
    return np.einsum("aij,jk,alk->il", stack, rho, stack.conj())


def apply_two_qubit_channel(rho: np.ndarray, left_ops, right_ops) -> np.ndarray:
    """Apply independent single-qubit channels to the two qubits.

    Returns sum_{i,j} (K_i (x) L_j) rho (K_i (x) L_j)^dag. Each operator
    list must satisfy the completeness relation; trace and Hermiticity
    are preserved by construction.
    """
    check_kraus_completeness(left_ops)
    check_kraus_completeness(right_ops)
    return apply_kraus_stack(rho, two_qubit_kraus_stack(left_ops, right_ops))


def single_qubit_apply(rho: np.ndarray, op: np.ndarray, position: int) -> np.ndarray:
    """Conjugate ``rho`` by op (x) I (position 0) or I (x) op (position 1)."""
    op = np.asarray(op, dtype=np.complex128)
    if op.shape != (2, 2):
        raise ValueError(f"operator must be 2x2, got shape {op.shape}")
    if position == 0:
        full = np.kron(op, I2)
    elif position == 1:
        full = np.kron(I2, op)
    else:
        raise ValueError(f"position must be 0 or 1, got {position}")
    return full @ rho @ full.conj().T


# ---------------------------------------------------------------------------
# fidelity and measurement
# ---------------------------------------------------------------------------

def fidelity(ideal: BellState, rho: np.ndarray) -> float:
    """Overlap <psi|rho|psi> of ``rho`` with the ideal pure state."""
    v = _BELL_VECTORS[ideal]
    return float(np.real(v.conj() @ rho @ v))


def _sample(probabilities: np.ndarray, rng: np.random.Generator) -> int:
    p = [max(float(np.real(v)), 0.0) for v in probabilities]
    total = sum(p)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {total}, expected 1")
    u = rng.random() * total
    acc = 0.0
    for i, weight in enumerate(p):
        acc += weight
        if u < acc:
            return i
    return len(p) - 1


def measure_computational(rho: np.ndarray,
                          rng: np.random.Generator) -> tuple[tuple[int, int], np.ndarray]:
    """Measure both qubits in the computational basis.

    Samples (b1, b2) with probability <b1 b2|rho|b1 b2> and returns the
    outcome with the collapsed projector |b1 b2><b1 b2|.
    """
    idx = _sample(np.diag(rho), rng)
    bits = (idx >> 1, idx & 1)
    return bits, product_density(*bits)


def measure_single_qubit(rho: np.ndarray, position: int,
                         rng: np.random.Generator) -> tuple[int, np.ndarray]:
    """Measure one qubit in the computational basis; collapse the pair.

    Collapse uses the projected-and-renormalized state, so the partner
    qubit keeps its conditional state.
    """
    diag = np.real(np.diag(rho))
    if position == 0:
        p1 = diag[2] + diag[3]
    elif position == 1:
        p1 = diag[1] + diag[3]
    else:
        raise ValueError(f"position must be 0 or 1, got {position}")
    bit = _sample((1.0 - p1, p1), rng)
    # basis index bit layout makes both projections plain slices
    keep = slice(2 * bit, 2 * bit + 2) if position == 0 else slice(bit, 4, 2)
    projected = np.zeros_like(rho)
    projected[keep, keep] = rho[keep, keep]
    return bit, projected / np.real(np.trace(projected))


def bell_probabilities(rho: np.ndarray) -> dict[BellState, float]:
    """Born probabilities <s|rho|s> for the four Bell outcomes."""
    return {s: fidelity(s, rho) for s in BELL_ORDER}


def measure_bell(rho: np.ndarray, rng: np.random.Generator) -> BellState:
    """Sample a Bell-basis measurement outcome of the pair."""
    probs = np.array([fidelity(s, rho) for s in BELL_ORDER])
    return BELL_ORDER[_sample(probs, rng)]


# ---------------------------------------------------------------------------
# seeded run contexts
# ---------------------------------------------------------------------------

def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Deterministically derive ``count`` independent generators from a seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(s) for s in children]
