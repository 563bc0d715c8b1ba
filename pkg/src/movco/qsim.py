"""Variational-state simulation.

Two ansatz families are supported:

* ``layered``: alternating layers of single-qubit y-rotations and a chain
  of control-Z gates between nearest neighbours, simulated as an exact
  statevector. One rotation block is applied before the first entangling
  layer, so a depth-L circuit holds N*(L+1) angles stored layer-major
  (the first N angles are the depth-0 block).
* ``product``: a fully separable state, one angle per qubit, sampled from
  the per-qubit probabilities {cos^2(theta_n)} without ever materializing
  the 2^N amplitude vector.

Conventions: qubit 0 is the leftmost character of a serialized bitstring,
so basis index i carries qubit 0 in its most significant bit. Spins map to
bits as z = 2b - 1 (bit 0 is spin -1). Both rotation conventions in use
(e^{i t Y}|0> = cos t|0> - sin t|1>, and cos t|0> + sin t|1> for the
product family) give P(1) = sin^2 t; all observables here are diagonal,
so the sign difference is unobservable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from movco.errors import InvalidArgumentError, InvalidStateError, ResourceLimitError

DEFAULT_MAX_QUBITS = 24
NORM_TOL = 1e-10

LAYERED = "layered"
PRODUCT = "product"

# Initialization scale: first rotation block around pi/4 (close to the full
# superposition), deeper blocks are small perturbations of magnitude ~1e-2.
INIT_CENTER = np.pi / 4
INIT_JITTER = 1e-2


@dataclass(frozen=True)
class ParameterVector:
    """Variational angles for one ansatz.

    ``angles`` is flat and layer-major for the layered kind: entry
    ``l * n_qubits + n`` is the angle of qubit ``n`` in rotation block
    ``l``. The product kind holds one angle per qubit.
    """

    angles: np.ndarray
    kind: str = LAYERED
    layers: int = 0

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=np.float64)
        object.__setattr__(self, "angles", angles)
        if angles.ndim != 1 or angles.size == 0:
            raise InvalidArgumentError("angles must be a non-empty 1-D array")
        if not np.all(np.isfinite(angles)):
            raise InvalidArgumentError("angles must be finite")
        if self.kind == LAYERED:
            if self.layers < 0:
                raise InvalidArgumentError("layer count must be >= 0")
            if angles.size % (self.layers + 1) != 0:
                raise InvalidArgumentError(
                    f"{angles.size} angles do not fit {self.layers + 1} rotation blocks"
                )
        elif self.kind == PRODUCT:
            if self.layers != 0:
                raise InvalidArgumentError("product ansatz has no layers")
        else:
            raise InvalidArgumentError(f"unknown ansatz kind {self.kind!r}")

    @property
    def n_qubits(self) -> int:
        if self.kind == PRODUCT:
            return self.angles.size
        return self.angles.size // (self.layers + 1)

    def block(self, layer: int) -> np.ndarray:
        """Angles of one rotation block (layered kind)."""
        n = self.n_qubits
        return self.angles[layer * n:(layer + 1) * n]

    def replace_angles(self, angles: np.ndarray) -> "ParameterVector":
        return ParameterVector(angles, kind=self.kind, layers=self.layers)


@dataclass(frozen=True)
class StateVector:
    """Exact amplitudes on the computational basis, unit norm."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        object.__setattr__(self, "amplitudes", amp)
        n = amp.size
        if n == 0 or n & (n - 1):
            raise InvalidArgumentError("amplitude count must be a power of two")
        norm = float(np.sum(np.abs(amp) ** 2))
        if abs(norm - 1.0) > 1e-8:
            raise InvalidStateError(f"state norm^2 = {norm!r}, not 1")

    @property
    def n_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class ProductState:
    """Separable state as per-qubit amplitude pairs, shape (N, 2)."""

    qubit_amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.qubit_amplitudes, dtype=np.complex128)
        object.__setattr__(self, "qubit_amplitudes", amp)
        if amp.ndim != 2 or amp.shape[1] != 2:
            raise InvalidArgumentError("qubit amplitudes must have shape (N, 2)")
        norms = np.sum(np.abs(amp) ** 2, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-8):
            raise InvalidStateError("every qubit state must have unit norm")

    @property
    def n_qubits(self) -> int:
        return self.qubit_amplitudes.shape[0]

    def one_probabilities(self) -> np.ndarray:
        """P(bit_n = 1) for every qubit."""
        return np.abs(self.qubit_amplitudes[:, 1]) ** 2


@dataclass(frozen=True)
class SampleBatch:
    """K measured bitstrings as a (K, N) 0/1 matrix."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        object.__setattr__(self, "bits", bits)
        if bits.ndim != 2 or bits.shape[0] < 1:
            raise InvalidArgumentError("bits must be a (K, N) matrix with K >= 1")
        if bits.size and bits.max() > 1:
            raise InvalidArgumentError("bits must be 0/1")

    @property
    def shots(self) -> int:
        return self.bits.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.bits.shape[1]

    def indices(self) -> np.ndarray:
        """Basis indices of each row (qubit 0 most significant); N <= 63 only."""
        n = self.n_qubits
        if n > 63:
            raise ResourceLimitError("basis indices overflow beyond 63 qubits")
        weights = (1 << np.arange(n - 1, -1, -1, dtype=np.int64))
        return self.bits.astype(np.int64) @ weights

    def counts(self) -> dict[str, int]:
        """Distinct bitstring -> count map; counts sum to the shot number."""
        rows, counts = np.unique(self.bits, axis=0, return_counts=True)
        return {bits_to_string(row): int(c) for row, c in zip(rows, counts)}


def bits_to_string(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def string_to_bits(s: str) -> np.ndarray:
    if any(ch not in "01" for ch in s):
        raise InvalidArgumentError(f"not a bitstring: {s!r}")
    return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")


def bit_to_spin(bits) -> np.ndarray:
    """z = 2b - 1; bit 0 maps to spin -1."""
    return 2 * np.asarray(bits, dtype=np.int8) - 1


def spin_to_bit(spins) -> np.ndarray:
    return ((np.asarray(spins, dtype=np.int8) + 1) // 2).astype(np.uint8)


def all_bitstrings(n_qubits: int) -> np.ndarray:
    """All 2^N bitstrings as a (2^N, N) matrix, basis order."""
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    shifts = np.arange(n_qubits - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def init_params(n_qubits: int, layers: int, rng: np.random.Generator) -> ParameterVector:
    """Draw starting angles for the layered ansatz.

    The depth-0 block starts at pi/4 plus a uniform jitter in
    [-0.01, 0.01]; deeper blocks are pure jitter, so the initial state is
    close to the full superposition.
    """
    if n_qubits < 1:
        raise InvalidArgumentError(f"qubit count must be >= 1, got {n_qubits}")
    if layers < 0:
        raise InvalidArgumentError(f"layer count must be >= 0, got {layers}")
    angles = rng.uniform(-INIT_JITTER, INIT_JITTER, size=n_qubits * (layers + 1))
    angles[:n_qubits] += INIT_CENTER
    return ParameterVector(angles, kind=LAYERED, layers=layers)


def init_product_params(n_qubits: int, rng: np.random.Generator) -> ParameterVector:
    """Product-ansatz counterpart of init_params: every angle near pi/4."""
    if n_qubits < 1:
        raise InvalidArgumentError(f"qubit count must be >= 1, got {n_qubits}")
    angles = INIT_CENTER + rng.uniform(-INIT_JITTER, INIT_JITTER, size=n_qubits)
    return ParameterVector(angles, kind=PRODUCT)


def _rotation_matrix(theta: float) -> np.ndarray:
    # e^{i theta Y} = [[cos, sin], [-sin, cos]]
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]], dtype=np.complex128)


def _apply_single_qubit(psi: np.ndarray, mat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    block = psi.reshape(1 << qubit, 2, 1 << (n - qubit - 1))
    out = np.empty_like(block)
    out[:, 0, :] = mat[0, 0] * block[:, 0, :] + mat[0, 1] * block[:, 1, :]
    out[:, 1, :] = mat[1, 0] * block[:, 0, :] + mat[1, 1] * block[:, 1, :]
    return out.reshape(psi.shape)


_cz_sign_cache: dict[int, np.ndarray] = {}


def _cz_chain_signs(n: int) -> np.ndarray:
    """Diagonal of the nearest-neighbour CZ chain: -1 where adjacent bits are both 1."""
    cached = _cz_sign_cache.get(n)
    if cached is not None:
        return cached
    bits = all_bitstrings(n)
    parity = (bits[:, :-1] & bits[:, 1:]).sum(axis=1) & 1 if n > 1 else np.zeros(2, dtype=np.int64)
    signs = (1 - 2 * parity).astype(np.int8)
    if n <= 20:
        _cz_sign_cache[n] = signs
    return signs


def build_state(params: ParameterVector, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    """Run the layered circuit on |0...0> and return the exact statevector."""
    if params.kind != LAYERED:
        raise InvalidArgumentError("build_state needs a layered parameter vector")
    n = params.n_qubits
    if n > max_qubits:
        raise ResourceLimitError(
            f"{n} qubits exceed the statevector limit of {max_qubits}"
        )
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[0] = 1.0
    for q, theta in enumerate(params.block(0)):
        psi = _apply_single_qubit(psi, _rotation_matrix(theta), q, n)
    for layer in range(1, params.layers + 1):
        if n > 1:
            psi = psi * _cz_chain_signs(n)
        for q, theta in enumerate(params.block(layer)):
            psi = _apply_single_qubit(psi, _rotation_matrix(theta), q, n)
    return StateVector(psi)


def product_state(params: ParameterVector) -> ProductState:
    """Per-qubit amplitudes (cos theta, sin theta) of the separable ansatz."""
    if params.kind != PRODUCT:
        raise InvalidArgumentError("product_state needs a product parameter vector")
    amps = np.stack([np.cos(params.angles), np.sin(params.angles)], axis=1)
    return ProductState(amps.astype(np.complex128))


def sample_state(state: StateVector, shots: int, rng: np.random.Generator) -> SampleBatch:
    """Draw ``shots`` independent z-basis measurements from a statevector."""
    if shots < 1:
        raise InvalidArgumentError(f"shot count must be >= 1, got {shots}")
    probs = state.probabilities()
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-8:
        raise InvalidStateError(f"probabilities sum to {total!r}")
    n = state.n_qubits
    idx = rng.choice(probs.size, size=shots, p=probs / total)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    return SampleBatch(bits)


def sample_product(params: ParameterVector, shots: int, rng: np.random.Generator) -> SampleBatch:
    """Sample the separable ansatz bit by bit: P(bit_n = 0) = cos^2(theta_n).

    Needs only the N per-qubit probabilities, so it scales to hundreds of
    qubits.
    """
    if params.kind != PRODUCT:
        raise InvalidArgumentError("sample_product needs a product parameter vector")
    if shots < 1:
        raise InvalidArgumentError(f"shot count must be >= 1, got {shots}")
    p_zero = np.cos(params.angles) ** 2
    u = rng.random((shots, params.n_qubits))
    return SampleBatch((u >= p_zero[None, :]).astype(np.uint8))


def basis_probability(state: StateVector, bitstring) -> float:
    """Probability of measuring one specific basis state."""
    bits = string_to_bits(bitstring) if isinstance(bitstring, str) else np.asarray(bitstring)
    n = state.n_qubits
    if bits.size != n:
        raise InvalidArgumentError(f"bitstring length {bits.size} != {n} qubits")
    index = 0
    for b in bits:
        index = (index << 1) | int(b)
    return float(np.abs(state.amplitudes[index]) ** 2)


def product_basis_probability(state: ProductState, bitstring) -> float:
    """Same as basis_probability but from per-qubit marginals."""
    bits = string_to_bits(bitstring) if isinstance(bitstring, str) else np.asarray(bitstring)
    if bits.size != state.n_qubits:
        raise InvalidArgumentError(
            f"bitstring length {bits.size} != {state.n_qubits} qubits"
        )
    p_one = state.one_probabilities()
    probs = np.where(np.asarray(bits, dtype=bool), p_one, 1.0 - p_one)
    return float(np.prod(probs))


def exact_expectation(state: StateVector, diagonal_cost) -> float:
    """<state| C |state> for a diagonal observable.

    ``diagonal_cost`` is either a length-2^N value array in basis order or
    a callable mapping one bit row to a value.
    """
    probs = state.probabilities()
    if callable(diagonal_cost):
        values = np.array(
            [float(diagonal_cost(row)) for row in all_bitstrings(state.n_qubits)]
        )
    else:
        values = np.asarray(diagonal_cost, dtype=np.float64)
        if values.shape != probs.shape:
            raise InvalidArgumentError(
                f"cost array has shape {values.shape}, expected {probs.shape}"
            )
    return float(probs @ values)


class StatevectorBackend:
    """Sampling backend for the layered ansatz (exact statevector)."""

    kind = LAYERED

    def __init__(self, max_qubits: int = DEFAULT_MAX_QUBITS):
        self.max_qubits = max_qubits

    def state(self, params: ParameterVector) -> StateVector:
        return build_state(params, max_qubits=self.max_qubits)

    def sample(self, params: ParameterVector, shots: int, rng: np.random.Generator) -> SampleBatch:
        return sample_state(self.state(params), shots, rng)


class ProductBackend:
    """Sampling backend for the separable ansatz (no 2^N storage)."""

    kind = PRODUCT

    def state(self, params: ParameterVector) -> ProductState:
        return product_state(params)

    def sample(self, params: ParameterVector, shots: int, rng: np.random.Generator) -> SampleBatch:
        return sample_product(params, shots, rng)


def backend_for(params: ParameterVector, max_qubits: int = DEFAULT_MAX_QUBITS):
    if params.kind == PRODUCT:
        return ProductBackend()
    return StatevectorBackend(max_qubits=max_qubits)
