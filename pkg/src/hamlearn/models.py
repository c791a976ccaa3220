"""Likelihood models for commuting-coupling spin systems.

The working model is an Ising Hamiltonian with no transverse field,
``H(x) = sum_{(i,j) in G} x_ij Z_i Z_j`` on an interaction graph G.  The
system starts in ``|+>^n``, evolves under the unknown couplings for time t,
optionally has a guessed evolution inverted on top of it, and is measured in
the ``X^n`` eigenbasis.  Because H is diagonal, the whole outcome
distribution reduces to per-bitstring phases followed by a Walsh-Hadamard
transform, which is what the fast path does.  A dense matrix reference
implementation (`dense_oracle_distribution`) provides an independent
brute-force check, and the analytic single-coupling model covers the exactly
solvable case.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Optional, Tuple, Union

import numpy as np

from .errors import DimensionMismatch, TooManyQubits

CLE = "CLE"
QLE = "QLE"
IQLE = "IQLE"
EXPERIMENT_KINDS = (CLE, QLE, IQLE)

FULL_BASIS = "full"
TWO_OUTCOME = "two"
MEASUREMENT_MODES = (FULL_BASIS, TWO_OUTCOME)

# Floor applied to every likelihood returned for weight updates.  It prevents
# a cloud from being wiped out by pure floating-point underflow while leaving
# genuine impossibilities numerically negligible at any realistic weight.
LIKELIHOOD_FLOOR = 1e-300

# O(n * 2^n) per distribution; beyond this the fast path stops being "fast".
DEFAULT_QUBIT_CAP = 14
ORACLE_QUBIT_CAP = 6

DEFAULT_BOX = (-0.5, 0.5)


@dataclass(frozen=True)
class InteractionGraph:
    """Qubit count plus an edge set; one coupling parameter per edge."""

    n: int
    edges: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("an interaction graph needs at least 2 qubits")
        edges = tuple(tuple(int(v) for v in edge) for edge in self.edges)
        seen = set()
        for i, j in edges:
            if not 0 <= i < j < self.n:
                raise ValueError(f"edge ({i}, {j}) is not ordered within [0, {self.n})")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
        if not edges:
            raise ValueError("graph must have at least one edge")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def complete(cls, n: int) -> "InteractionGraph":
        return cls(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def line(cls, n: int) -> "InteractionGraph":
        return cls(n, tuple((i, i + 1) for i in range(n - 1)))

    @property
    def dimension(self) -> int:
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """One experiment: kind, evolution time, optional inversion couplings.

    IQLE experiments must carry inversion couplings; CLE/QLE must not.
    `measurement` selects between the full X-basis outcome register and the
    two-outcome POVM {returned to |+>^n, anything orthogonal}.
    """

    kind: str
    time: float
    inversion: Optional[np.ndarray] = None
    measurement: str = FULL_BASIS

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.measurement not in MEASUREMENT_MODES:
            raise ValueError(f"unknown measurement mode {self.measurement!r}")
        if not np.isfinite(self.time) or self.time < 0:
            raise ValueError("evolution time must be finite and nonnegative")
        if self.kind == IQLE:
            if self.inversion is None:
                raise ValueError("IQLE experiments require inversion couplings")
            inv = np.asarray(self.inversion, dtype=float).ravel().copy()
            inv.setflags(write=False)
            object.__setattr__(self, "inversion", inv)
        elif self.inversion is not None:
            raise ValueError(f"{self.kind} experiments take no inversion couplings")


class LikelihoodModel:
    """Contract shared by all likelihood models.

    Subclasses define `dimension`, a `(d, 2)` parameter `box`,
    `outcome_count(exp)` and `outcome_distribution(x, exp)`.  The likelihood
    accessors clip into [0, 1] and apply LIKELIHOOD_FLOOR.  `rng` is accepted
    (and ignored) by exact models so stochastic evaluators can share the
    calling convention.
    """

    dimension: int
    box: np.ndarray

    def outcome_count(self, exp: ExperimentSpec) -> int:
        raise NotImplementedError

    def outcome_distribution(self, x, exp: ExperimentSpec) -> np.ndarray:
        raise NotImplementedError

    def likelihood(self, outcome: int, x, exp: ExperimentSpec, rng=None) -> float:
        self._check_outcome(outcome, exp)
        p = float(self.outcome_distribution(x, exp)[outcome])
        return float(np.clip(p, LIKELIHOOD_FLOOR, 1.0))

    def likelihood_many(self, outcome: int, xs, exp: ExperimentSpec, rng=None) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if xs.ndim == 1:
            xs = xs.reshape(-1, 1)
        return np.array([self.likelihood(outcome, x, exp) for x in xs])

    def _check_outcome(self, outcome: int, exp: ExperimentSpec) -> None:
        count = self.outcome_count(exp)
        if not 0 <= outcome < count:
            raise ValueError(f"outcome {outcome} outside [0, {count})")

    def _check_params(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.dimension:
            raise DimensionMismatch(
                f"expected {self.dimension} couplings, got {x.shape[0]}"
            )
        return x

    def _inversion(self, exp: ExperimentSpec) -> Optional[np.ndarray]:
        if exp.kind != IQLE:
            return None
        inv = np.asarray(exp.inversion, dtype=float).ravel()
        if inv.shape[0] != self.dimension:
            raise DimensionMismatch(
                f"inversion has {inv.shape[0]} couplings, model has {self.dimension}"
            )
        return inv


def _as_box(box, dimension: int) -> np.ndarray:
    box = np.asarray(box, dtype=float)
    if box.ndim == 1:
        box = np.tile(box, (dimension, 1))
    if box.shape != (dimension, 2) or np.any(box[:, 0] >= box[:, 1]):
        raise ValueError("parameter box must be (d, 2) with low < high")
    box = box.copy()
    box.setflags(write=False)
    return box


def single_param_likelihood(d: int, x, x_inv, t) -> Union[float, np.ndarray]:
    """Probability of outcome d in {0, 1} for the one-coupling echo model.

    Pr(d | x; x_inv, t) = (1 + (1 - 2d) cos[2 (x - x_inv) t]) / 2, so the two
    outcome probabilities sum to 1 exactly.
    """
    if d not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    value = 0.5 * (1.0 + (1 - 2 * d) * np.cos(2.0 * (np.asarray(x) - x_inv) * t))
    if np.ndim(x) == 0:
        return float(value)
    return value


class SingleParameterModel(LikelihoodModel):
    """Exactly solvable one-coupling model (two qubits, one edge).

    Always a two-outcome experiment: outcome 0 is a return to the initial
    state, outcome 1 its orthogonal complement.
    """

    def __init__(self, box=DEFAULT_BOX):
        self.dimension = 1
        self.box = _as_box(box, 1)

    def outcome_count(self, exp: ExperimentSpec) -> int:
        return 2

    def outcome_distribution(self, x, exp: ExperimentSpec) -> np.ndarray:
        x = self._check_params(x)
        p0 = self.likelihood(0, x, exp)
        return np.array([p0, 1.0 - p0])

    def likelihood(self, outcome: int, x, exp: ExperimentSpec, rng=None) -> float:
        return float(self.likelihood_many(outcome, np.atleast_2d(x), exp)[0])

    def likelihood_many(self, outcome: int, xs, exp: ExperimentSpec, rng=None) -> np.ndarray:
        self._check_outcome(outcome, exp)
        xs = np.asarray(xs, dtype=float)
        if xs.ndim == 1:
            xs = xs.reshape(-1, 1)
        inv = self._inversion(exp)
        x_inv = 0.0 if inv is None else float(inv[0])
        p = single_param_likelihood(outcome, xs[:, 0], x_inv, exp.time)
        return np.clip(p, LIKELIHOOD_FLOOR, 1.0)


def fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis.

    Returns W with W[..., D] = sum_z (-1)^{D.z} a[..., z]; the length of the
    last axis must be a power of two.
    """
    a = np.array(a, copy=True)
    m = a.shape[-1]
    if m & (m - 1) or m == 0:
        raise ValueError("transform length must be a power of two")
    lead = a.shape[:-1]
    h = 1
    while h < m:
        blocks = a.reshape(lead + (m // (2 * h), 2, h))
        out = np.empty_like(blocks)
        out[..., 0, :] = blocks[..., 0, :] + blocks[..., 1, :]
        out[..., 1, :] = blocks[..., 0, :] - blocks[..., 1, :]
        a = out.reshape(lead + (m,))
        h *= 2
    return a


def _bit_parity(v: np.ndarray) -> np.ndarray:
    """Parity of the set bits of each entry of a nonnegative integer array."""
    v = v.astype(np.uint64, copy=True)
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> np.uint64(shift)
    return (v & np.uint64(1)).astype(np.int64)


class IsingModel(LikelihoodModel):
    """Diagonal Ising couplings on an interaction graph.

    The fast path applies per-bitstring phases exp(-i dE(z) t), with
    dE(z) = E(z) - E_inv(z), followed by a Walsh-Hadamard transform; phases
    are reduced mod 2*pi before trig evaluation to limit error at large t.
    """

    def __init__(self, graph: InteractionGraph, box=DEFAULT_BOX,
                 max_qubits: int = DEFAULT_QUBIT_CAP):
        if graph.n > max_qubits:
            raise TooManyQubits(f"{graph.n} qubits exceeds cap {max_qubits}")
        self.graph = graph
        self.dimension = graph.dimension
        self.box = _as_box(box, self.dimension)
        self._n_states = 2**graph.n
        self._signs = self._sign_table(graph)
        # Cap on elements held by one chunk of the vectorized likelihood.
        self._chunk_elements = 2**22

    @staticmethod
    def _sign_table(graph: InteractionGraph) -> np.ndarray:
        """(d, 2^n) table of spin products s_i s_j per edge and bitstring.

        Bit k of the state index is the z-outcome of qubit k, and spin
        s_k = (-1)^{bit k}.
        """
        states = np.arange(2**graph.n, dtype=np.uint64)
        bits = (states[None, :] >> np.arange(graph.n, dtype=np.uint64)[:, None]) & np.uint64(1)
        table = np.empty((graph.dimension, 2**graph.n))
        for e, (i, j) in enumerate(graph.edges):
            table[e] = 1.0 - 2.0 * np.bitwise_xor(bits[i], bits[j]).astype(float)
        return table

    def energies(self, x) -> np.ndarray:
        """Diagonal of H(x) over all 2^n computational basis states."""
        return self._check_params(x) @ self._signs

    def outcome_count(self, exp: ExperimentSpec) -> int:
        return 2 if exp.measurement == TWO_OUTCOME else self._n_states

    def outcome_distribution(self, x, exp: ExperimentSpec) -> np.ndarray:
        x = self._check_params(x)
        inv = self._inversion(exp)
        delta = x if inv is None else x - inv
        phases = np.mod(self.energies(delta) * exp.time, 2.0 * np.pi)
        amplitudes = fwht(np.exp(-1j * phases)) / self._n_states
        probs = np.abs(amplitudes) ** 2
        if exp.measurement == TWO_OUTCOME:
            p0 = min(float(probs[0]), 1.0)
            return np.array([p0, 1.0 - p0])
        return probs

    def likelihood(self, outcome: int, x, exp: ExperimentSpec, rng=None) -> float:
        return float(self.likelihood_many(outcome, np.atleast_2d(x), exp)[0])

    def likelihood_many(self, outcome: int, xs, exp: ExperimentSpec, rng=None) -> np.ndarray:
        """Probability of `outcome` for every row of `xs`, vectorized.

        For a single fixed outcome the transform collapses to one character
        sum, so each chunk costs a (chunk, d) @ (d, 2^n) product plus one
        complex dot instead of a full transform per particle.
        """
        self._check_outcome(outcome, exp)
        xs = np.asarray(xs, dtype=float)
        if xs.ndim == 1:
            xs = xs.reshape(-1, 1)
        if xs.shape[1] != self.dimension:
            raise DimensionMismatch(
                f"expected {self.dimension} couplings, got {xs.shape[1]}"
            )
        inv = self._inversion(exp)
        deltas = xs if inv is None else xs - inv[None, :]

        if exp.measurement == TWO_OUTCOME:
            target, complement = 0, outcome == 1
        else:
            target, complement = outcome, False
        chi = 1.0 - 2.0 * _bit_parity(
            np.bitwise_and(np.uint64(target), np.arange(self._n_states, dtype=np.uint64))
        ).astype(float)

        out = np.empty(deltas.shape[0])
        chunk = max(1, self._chunk_elements // self._n_states)
        for start in range(0, deltas.shape[0], chunk):
            block = deltas[start : start + chunk]
            phases = np.mod((block @ self._signs) * exp.time, 2.0 * np.pi)
            amps = np.exp(-1j * phases) @ chi / self._n_states
            out[start : start + chunk] = np.abs(amps) ** 2
        if complement:
            out = 1.0 - out
        return np.clip(out, LIKELIHOOD_FLOOR, 1.0)


def ising_energy(graph: InteractionGraph, x, z) -> float:
    """Energy of a spin configuration: sum over edges of x_ij s_i s_j.

    `z` is either a bitstring like "0110" (character k is qubit k) or an
    integer state index whose bit k is qubit k; spin s_k = (-1)^{z_k}.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != graph.dimension:
        raise DimensionMismatch(
            f"expected {graph.dimension} couplings, got {x.shape[0]}"
        )
    if isinstance(z, str):
        if len(z) != graph.n or any(c not in "01" for c in z):
            raise DimensionMismatch(f"bitstring {z!r} is not {graph.n} bits")
        bits = [int(c) for c in z]
    else:
        z = int(z)
        if not 0 <= z < 2**graph.n:
            raise DimensionMismatch(f"state index {z} outside [0, 2^{graph.n})")
        bits = [(z >> k) & 1 for k in range(graph.n)]
    spins = [1.0 - 2.0 * b for b in bits]
    return float(sum(w * spins[i] * spins[j] for w, (i, j) in zip(x, graph.edges)))


def ising_outcome_distribution(graph: InteractionGraph, x, exp: ExperimentSpec) -> np.ndarray:
    """Fast-path outcome distribution for ad-hoc use; builds a model per call."""
    return IsingModel(graph).outcome_distribution(x, exp)


def _dense_energy_diagonal(graph: InteractionGraph, x: np.ndarray) -> np.ndarray:
    """Diagonal of H(x) assembled from Kronecker products of Z factors."""
    z_diag = np.array([1.0, -1.0])
    identity = np.ones(2)
    total = np.zeros(2**graph.n)
    for w, (i, j) in zip(x, graph.edges):
        factors = [identity] * graph.n
        factors[i] = z_diag
        factors[j] = z_diag
        # Reversed so that bit k of the matrix index is qubit k.
        total += w * reduce(np.kron, reversed(factors))
    return total


def dense_oracle_distribution(graph: InteractionGraph, x, exp: ExperimentSpec) -> np.ndarray:
    """Brute-force outcome distribution via dense matrix algebra.

    Builds the diagonal evolution operators explicitly, changes basis with a
    dense Hadamard-product matrix, and squares the amplitudes.  Deliberately
    shares no code with the fast path so it can serve as an independent
    ground truth; capped at 6 qubits.
    """
    if graph.n > ORACLE_QUBIT_CAP:
        raise TooManyQubits(f"oracle is capped at {ORACLE_QUBIT_CAP} qubits")
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != graph.dimension:
        raise DimensionMismatch(
            f"expected {graph.dimension} couplings, got {x.shape[0]}"
        )
    forward = np.diag(np.exp(-1j * _dense_energy_diagonal(graph, x) * exp.time))
    if exp.kind == IQLE:
        inv = np.asarray(exp.inversion, dtype=float).ravel()
        if inv.shape[0] != graph.dimension:
            raise DimensionMismatch("inversion couplings have the wrong dimension")
        backward = np.diag(np.exp(1j * _dense_energy_diagonal(graph, inv) * exp.time))
    else:
        backward = np.eye(2**graph.n, dtype=complex)
    h2 = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    hadamard = reduce(np.kron, [h2] * graph.n)
    initial = hadamard[:, 0].astype(complex)  # |+...+> in the z basis
    amplitudes = hadamard.T @ (backward @ (forward @ initial))
    probs = np.abs(amplitudes) ** 2
    if exp.measurement == TWO_OUTCOME:
        p0 = min(float(probs[0]), 1.0)
        return np.array([p0, 1.0 - p0])
    return probs


def bitflip_wrap(alpha: float, p):
    """Mix a two-outcome probability with a symmetric bit-flip of rate alpha."""
    if not 0.0 <= alpha <= 0.5:
        raise ValueError("bit-flip rate must lie in [0, 0.5]")
    out = alpha + (1.0 - 2.0 * alpha) * np.asarray(p, dtype=float)
    if out.ndim == 0:
        return float(out)
    return out


def noisy_likelihood(p, noise: float, rng: np.random.Generator):
    """Perturb likelihood(s) with zero-mean Gaussian noise of s.d. `noise`.

    The result is clipped to [0, 1] and then floored, mimicking the spread of
    a finite-sample likelihood estimate.
    """
    if noise < 0:
        raise ValueError("noise standard deviation must be nonnegative")
    p = np.asarray(p, dtype=float)
    if noise > 0:
        p = p + rng.normal(0.0, noise, size=p.shape)
    out = np.clip(p, 0.0, 1.0)
    out = np.clip(out, LIKELIHOOD_FLOOR, 1.0)
    if out.ndim == 0:
        return float(out)
    return out
