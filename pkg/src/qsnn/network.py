"""Network wiring, parameters, and the three-stage forward pass.

Neuron indexing: 0 is the input neuron, 1..V are word neurons, V+1..V+L are
output neurons (in label order).
"""
from dataclasses import dataclass, replace
from functools import cached_property
from itertools import combinations
from typing import NamedTuple, Optional

import numpy as np

from .lindblad import (
    GeneratorSpec,
    build_liouvillian,
    dissipator_superop,
    evolve,
    hamiltonian_superop,
    propagator,
)

LABELS = ("Yes", "No")


@dataclass(frozen=True)
class Topology:
    """Which word pairs are coherently coupled and which word->output channels exist.

    ``hamiltonian_pairs`` holds unordered word-index pairs (i, j), i < j.
    ``output_channels`` holds (word index, label position) pairs.
    Both default to the complete sets.
    """

    vocab_size: int
    labels: tuple = LABELS
    hamiltonian_pairs: Optional[tuple] = None
    output_channels: Optional[tuple] = None

    def __post_init__(self):
        v = self.vocab_size
        if v < 1:
            raise ValueError("vocab_size must be positive")
        if len(set(self.labels)) != len(self.labels) or not self.labels:
            raise ValueError(f"labels must be distinct and non-empty: {self.labels}")
        pairs = self.hamiltonian_pairs
        if pairs is None:
            pairs = tuple(combinations(range(1, v + 1), 2))
        pairs = tuple(tuple(sorted(p)) for p in pairs)
        for i, j in pairs:
            if i == j or not (1 <= i <= v and 1 <= j <= v):
                raise ValueError(f"hamiltonian pair ({i}, {j}) must join two distinct word neurons")
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate hamiltonian pair")
        chans = self.output_channels
        if chans is None:
            chans = tuple((i, o) for i in range(1, v + 1) for o in range(len(self.labels)))
        chans = tuple(tuple(c) for c in chans)
        for i, o in chans:
            if not (1 <= i <= v and 0 <= o < len(self.labels)):
                raise ValueError(f"output channel ({i}, {o}) must go word -> output")
        if len(set(chans)) != len(chans):
            raise ValueError("duplicate output channel")
        object.__setattr__(self, "hamiltonian_pairs", pairs)
        object.__setattr__(self, "output_channels", chans)

    @property
    def dim(self):
        return 1 + self.vocab_size + len(self.labels)

    @property
    def n_h(self):
        return len(self.hamiltonian_pairs)

    @property
    def n_gamma(self):
        return len(self.output_channels)

    def output_neuron(self, label):
        return 1 + self.vocab_size + self.labels.index(label)

    def _unit(self, row, col):
        m = np.zeros((self.dim, self.dim), dtype=complex)
        m[row, col] = 1.0
        return m

    @cached_property
    def coupling_ops(self):
        """H_k = |i><j| + |j><i| for each Hamiltonian pair."""
        return [self._unit(i, j) + self._unit(j, i) for i, j in self.hamiltonian_pairs]

    @cached_property
    def channel_ops(self):
        """E_k = |o><i| for each output channel; the jump operator is gamma_k * E_k."""
        return [self._unit(1 + self.vocab_size + o, i) for i, o in self.output_channels]

    @cached_property
    def coupling_superops(self):
        """Derivatives of the unitary-stage generator with respect to each h_k."""
        return [hamiltonian_superop(hk) for hk in self.coupling_ops]

    @cached_property
    def channel_superops(self):
        """Dissipators of the unit-rate channels; the generator is sum gamma_k**2 * G_k."""
        return [dissipator_superop(ek) for ek in self.channel_ops]

    def hamiltonian(self, h):
        h = np.asarray(h, dtype=float)
        if h.shape != (self.n_h,):
            raise ValueError(f"expected {self.n_h} coherent strengths, got shape {h.shape}")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for hk, op in zip(h, self.coupling_ops):
            out += hk * op
        return out

    def output_lindblads(self, gamma):
        gamma = np.asarray(gamma, dtype=float)
        if gamma.shape != (self.n_gamma,):
            raise ValueError(f"expected {self.n_gamma} output rates, got shape {gamma.shape}")
        return [g * op for g, op in zip(gamma, self.channel_ops)]

    def unitary_generator(self, h):
        return build_liouvillian(GeneratorSpec(self.hamiltonian(h)))

    def output_generator(self, gamma):
        d2 = self.dim ** 2
        gamma = np.asarray(gamma, dtype=float)
        if gamma.shape != (self.n_gamma,):
            raise ValueError(f"expected {self.n_gamma} output rates, got shape {gamma.shape}")
        out = np.zeros((d2, d2), dtype=complex)
        for g, sop in zip(gamma, self.channel_superops):
            out += g * g * sop
        return out

    def label_selector(self, label):
        """Row vector e with e @ vec(rho) == <label|rho|label>."""
        k = self.output_neuron(label)
        e = np.zeros(self.dim ** 2)
        e[k * self.dim + k] = 1.0
        return e


@dataclass(frozen=True)
class Params:
    """Trainable strengths plus the fixed encoding rate and stage durations."""

    h: np.ndarray
    gamma: np.ndarray
    gamma_in: float = 1.0
    t_in: float = 10.0
    t_u: float = 1.0
    t_d: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "h", np.array(self.h, dtype=float).reshape(-1))
        object.__setattr__(self, "gamma", np.array(self.gamma, dtype=float).reshape(-1))
        if not (self.gamma_in > 0):
            raise ValueError("gamma_in must be positive")
        for name in ("t_in", "t_u", "t_d"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")

    def check(self, topology):
        if self.h.shape != (topology.n_h,) or self.gamma.shape != (topology.n_gamma,):
            raise ValueError(
                f"parameter sizes ({self.h.size}, {self.gamma.size}) do not match topology "
                f"({topology.n_h}, {topology.n_gamma})")
        return self

    def with_values(self, h=None, gamma=None):
        return replace(self,
                       h=self.h if h is None else h,
                       gamma=self.gamma if gamma is None else gamma)


class ForwardResult(NamedTuple):
    rho_out: np.ndarray
    p_yes: float
    p_no: float
    p_undetermined: float


def _check_sequence(topology, seq):
    seq = [int(w) for w in seq]
    for w in seq:
        if not 1 <= w <= topology.vocab_size:
            raise ValueError(f"word index {w} outside 1..{topology.vocab_size}")
    return seq


def encode_input(topology, params, seq):
    """Load a word sequence into the word-neuron populations.

    The input time is split into len(seq) equal segments. At the start of
    segment i the channel from the input neuron to word seq[i] opens and stays
    open for the rest of the input stage, so earlier words collect more
    population. Re-opening an already open channel (repeated word) changes
    nothing.
    """
    seq = _check_sequence(topology, seq)
    d = topology.dim
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    if not seq:
        return rho
    tau = params.t_in / len(seq)
    open_words = []
    for w in seq:
        if w not in open_words:
            open_words.append(w)
        ops = []
        for v in open_words:
            op = np.zeros((d, d), dtype=complex)
            op[v, 0] = params.gamma_in
            ops.append(op)
        gen = build_liouvillian(GeneratorSpec(np.zeros((d, d)), ops))
        rho = evolve(rho, propagator(gen, tau))
    return rho


def stage_propagators(topology, params):
    """(unitary-stage, output-stage) superoperator propagators; input independent."""
    params.check(topology)
    p_u = propagator(topology.unitary_generator(params.h), params.t_u)
    p_d = propagator(topology.output_generator(params.gamma), params.t_d)
    return p_u, p_d


def unitary_stage(rho_in, topology, params):
    params.check(topology)
    return evolve(rho_in, propagator(topology.unitary_generator(params.h), params.t_u))


def output_stage(rho_u, topology, params):
    params.check(topology)
    return evolve(rho_u, propagator(topology.output_generator(params.gamma), params.t_d))


def measure(topology, rho_out):
    p_yes = float(rho_out[topology.output_neuron("Yes"), topology.output_neuron("Yes")].real)
    p_no = float(rho_out[topology.output_neuron("No"), topology.output_neuron("No")].real)
    return ForwardResult(rho_out, p_yes, p_no, 1.0 - p_yes - p_no)


def forward(topology, params, seq, propagators=None):
    """Encode, evolve coherently, dissipate to the outputs, then measure."""
    rho = encode_input(topology, params, seq)
    p_u, p_d = propagators if propagators is not None else stage_propagators(topology, params)
    rho = evolve(rho, p_u)
    rho = evolve(rho, p_d)
    return measure(topology, rho)


def classify(result):
    """Label with the larger probability; ties go to "Yes"."""
    return "Yes" if result.p_yes >= result.p_no else "No"
