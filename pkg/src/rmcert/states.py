"""Quantum state models.

Three representations coexist:

* ``DenseState`` -- explicit vector (pure) or density matrix (mixed),
  usable up to a hard qubit cap.
* ``NoisyGhz`` -- the white-noise GHZ family kept symbolic as ``(n, p)``,
  so large-n computations never touch 2^n-sized objects.
* ``BlockProduct`` -- tensor products of named blocks (GHZ / Bell /
  single-qubit), the saturating fixtures for the separability bounds.

All state objects are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError, ValidationError

STATE_ATOL = 1e-12
EIGENVALUE_FLOOR = -1e-10

MAX_DENSE_PURE_QUBITS = 24
MAX_DENSE_MIXED_QUBITS = 14

GHZ = "ghz"
BELL = "bell"
SINGLE = "single"

_BLOCK_KINDS = (GHZ, BELL, SINGLE)


@dataclass(frozen=True)
class DenseState:
    """An explicit n-qubit state: amplitude vector or density matrix.

    Invariants (checked on construction): a pure vector is normalized to
    1 within 1e-12; a density matrix is Hermitian and unit-trace within
    1e-12.  Positivity of the spectrum is expensive and only checked on
    demand via :meth:`check_positive`.
    """

    n_qubits: int
    data: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be >= 1")
        dim = 2 ** self.n_qubits
        arr = np.asarray(self.data, dtype=complex)
        if arr.ndim == 1:
            if arr.shape != (dim,):
                raise ValidationError(
                    f"pure state for {self.n_qubits} qubits needs {dim} amplitudes, "
                    f"got shape {arr.shape}"
                )
            norm = float(np.vdot(arr, arr).real)
            if abs(norm - 1.0) > STATE_ATOL * 10:
                raise ValidationError(f"pure state norm^2 = {norm!r}, expected 1")
        elif arr.ndim == 2:
            if arr.shape != (dim, dim):
                raise ValidationError(
                    f"density matrix for {self.n_qubits} qubits must be {dim}x{dim}, "
                    f"got shape {arr.shape}"
                )
            if not np.allclose(arr, arr.conj().T, atol=STATE_ATOL, rtol=0):
                raise ValidationError("density matrix is not Hermitian within 1e-12")
            tr = complex(np.trace(arr))
            if abs(tr - 1.0) > STATE_ATOL * 10:
                raise ValidationError(f"density matrix trace = {tr!r}, expected 1")
        else:
            raise ValidationError("state data must be a vector or a square matrix")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def check_positive(self) -> None:
        """Raise unless every eigenvalue is >= -1e-10."""
        if self.is_pure:
            return
        lo = float(np.linalg.eigvalsh(self.data).min())
        if lo < EIGENVALUE_FLOOR:
            raise ValidationError(f"density matrix has eigenvalue {lo} < {EIGENVALUE_FLOOR}")


@dataclass(frozen=True)
class NoisyGhz:
    """White-noise GHZ family: p * I/2^n + (1-p) |ghz_n><ghz_n|."""

    n_qubits: int
    p: float

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be >= 1")
        if not (0.0 <= self.p <= 1.0):
            raise ValidationError(f"noise fraction p={self.p} outside [0, 1]")


@dataclass(frozen=True)
class BlockProduct:
    """Pure product of named blocks, e.g. Bell x Bell x GHZ_4.

    ``blocks`` is an ordered tuple of (kind, size) pairs; Bell blocks have
    size 2, single-qubit blocks size 1, GHZ blocks any size >= 1 (a size-1
    "GHZ" is the |+> state, a size-2 one is a Bell pair).
    """

    blocks: tuple[tuple[str, int], ...]

    def __post_init__(self):
        blocks = tuple((str(kind), int(size)) for kind, size in self.blocks)
        if not blocks:
            raise ValidationError("block product needs at least one block")
        for kind, size in blocks:
            if kind not in _BLOCK_KINDS:
                raise ValidationError(f"unknown block kind {kind!r}")
            if kind == BELL and size != 2:
                raise ValidationError("Bell blocks have size 2")
            if kind == SINGLE and size != 1:
                raise ValidationError("single-qubit blocks have size 1")
            if size < 1:
                raise ValidationError("block sizes must be positive")
        object.__setattr__(self, "blocks", blocks)

    @property
    def n_qubits(self) -> int:
        return sum(size for _, size in self.blocks)


StateModel = DenseState | NoisyGhz | BlockProduct


def n_qubits_of(state: StateModel) -> int:
    return state.n_qubits


def make_noisy_ghz(n: int, p: float) -> NoisyGhz:
    """Noisy GHZ state with white-noise fraction p in [0, 1]."""
    return NoisyGhz(n_qubits=n, p=float(p))


def fidelity_to_p(n: int, fidelity: float) -> float:
    """Invert the GHZ overlap of the noisy GHZ family.

    The overlap of ``NoisyGhz(n, p)`` with the pure GHZ state is
    F = (1-p) + p/2^n, so p = (1-F) / (1 - 2^-n).  F must lie in
    (2^-n, 1]; below that no admissible p exists.
    """
    if n < 1:
        raise ValidationError("n_qubits must be >= 1")
    floor = 2.0 ** (-n)
    if not (floor < fidelity <= 1.0):
        raise ValidationError(
            f"fidelity {fidelity} outside ({floor}, 1] for n={n}"
        )
    return (1.0 - fidelity) / (1.0 - floor)


def ghz_vector(n: int) -> np.ndarray:
    v = np.zeros(2 ** n, dtype=complex)
    v[0] = v[-1] = 1.0 / math.sqrt(2.0)
    return v


def _block_vector(kind: str, size: int) -> np.ndarray:
    if kind == SINGLE:
        return np.array([1.0, 0.0], dtype=complex)
    # Bell pair == 2-qubit GHZ
    return ghz_vector(size)


def densify(state: StateModel) -> DenseState:
    """Materialize any state model as a DenseState.

    Pure outputs are capped at 24 qubits and mixed ones at 14; beyond
    that the 2^n object would not fit the memory budget and a
    ResourceLimitError is raised.
    """
    if isinstance(state, DenseState):
        return state
    n = state.n_qubits
    if isinstance(state, BlockProduct):
        if n > MAX_DENSE_PURE_QUBITS:
            raise ResourceLimitError(
                f"dense pure state for n={n} exceeds the cap of {MAX_DENSE_PURE_QUBITS} qubits"
            )
        vec = np.array([1.0], dtype=complex)
        for kind, size in state.blocks:
            vec = np.kron(vec, _block_vector(kind, size))
        return DenseState(n, vec)
    if isinstance(state, NoisyGhz):
        if state.p == 0.0:
            if n > MAX_DENSE_PURE_QUBITS:
                raise ResourceLimitError(
                    f"dense pure state for n={n} exceeds the cap of {MAX_DENSE_PURE_QUBITS} qubits"
                )
            return DenseState(n, ghz_vector(n))
        if n > MAX_DENSE_MIXED_QUBITS:
            raise ResourceLimitError(
                f"dense density matrix for n={n} exceeds the cap of {MAX_DENSE_MIXED_QUBITS} qubits"
            )
        g = ghz_vector(n)
        rho = state.p * np.eye(2 ** n, dtype=complex) / 2 ** n
        rho += (1.0 - state.p) * np.outer(g, g.conj())
        return DenseState(n, rho)
    raise ValidationError(f"unknown state model {type(state).__name__}")


def ghz_overlap(state: DenseState) -> float:
    """<ghz_n| rho |ghz_n> of a dense state."""
    g = ghz_vector(state.n_qubits)
    if state.is_pure:
        return float(abs(np.vdot(g, state.data)) ** 2)
    return float(np.real(g.conj() @ state.data @ g))


def apply_local_unitaries(state: DenseState, unitaries) -> DenseState:
    """Apply one 2x2 unitary per qubit; mainly a test utility."""
    us = [np.asarray(u, dtype=complex) for u in unitaries]
    if len(us) != state.n_qubits:
        raise ValidationError("need exactly one unitary per qubit")
    n = state.n_qubits
    if state.is_pure:
        v = state.data.reshape((2,) * n)
        for j, u in enumerate(us):
            v = np.moveaxis(np.tensordot(u, v, axes=([1], [j])), 0, j)
        return DenseState(n, v.reshape(-1))
    m = state.data.reshape((2,) * (2 * n))
    for j, u in enumerate(us):
        m = np.moveaxis(np.tensordot(u, m, axes=([1], [j])), 0, j)
        m = np.moveaxis(np.tensordot(u.conj(), m, axes=([1], [n + j])), 0, n + j)
    return DenseState(n, m.reshape(2 ** n, 2 ** n))


def state_descriptor(state: StateModel) -> str:
    """Canonical one-line description, used in record-file headers."""
    if isinstance(state, NoisyGhz):
        return f"noisy-ghz(n={state.n_qubits},p={state.p!r})"
    if isinstance(state, BlockProduct):
        parts = ",".join(f"{kind}{size}" for kind, size in state.blocks)
        return f"block-product({parts})"
    kind = "pure" if state.is_pure else "mixed"
    return f"dense(n={state.n_qubits},{kind})"
