"""Loss, analytic gradients, robustness, and full-batch gradient descent.

Every success probability has the form

    p_s = e_s . P_D P_U v_s,   P_U = exp(T_U A_U(h)),  P_D = exp(T_D A_D(gamma))

with v_s the encoded input and e_s the selector of the target label. Since the
input stage has no trainable parameters, derivatives only touch P_U and P_D
and are directional derivatives of the matrix exponential.
"""
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .linalg import frechet_exp, matexp, vec
from .network import Params, encode_input, stage_propagators


class NumericError(RuntimeError):
    """Training produced a non-finite loss or gradient."""


class TrainingPair(NamedTuple):
    sequence: tuple
    label: str


class Gradient(NamedTuple):
    h: np.ndarray
    gamma: np.ndarray


def _pairs(dataset):
    pairs = [TrainingPair(tuple(int(w) for w in seq), label) for seq, label in dataset]
    if not pairs:
        raise ValueError("dataset is empty")
    return pairs


class EncodedBatch:
    """Encoded inputs (columns) and label selectors (rows) for a dataset.

    Encoding depends only on gamma_in and t_in, which are not trained, so a batch
    is built once per dataset and reused across iterations.
    """

    def __init__(self, topology, params, dataset):
        pairs = _pairs(dataset)
        for p in pairs:
            if p.label not in topology.labels:
                raise ValueError(f"unknown label {p.label!r}")
        self.topology = topology
        self.key = (params.gamma_in, params.t_in)
        self.pairs = pairs
        self.inputs = np.hstack([vec(encode_input(topology, params, p.sequence)) for p in pairs])
        self.selectors = np.vstack([topology.label_selector(p.label) for p in pairs])

    def __len__(self):
        return len(self.pairs)

    def populations(self):
        """Word-neuron populations of each encoded input, shape (N, V)."""
        d = self.topology.dim
        idx = [k * d + k for k in range(1, 1 + self.topology.vocab_size)]
        return self.inputs[idx, :].real.T.copy()


def _batch(topology, params, dataset):
    if isinstance(dataset, EncodedBatch):
        if dataset.key != (params.gamma_in, params.t_in):
            raise ValueError("batch was encoded with different input-stage settings")
        return dataset
    return EncodedBatch(topology, params, dataset)


def success_probabilities(topology, params, dataset, propagators=None):
    """Tr(Omega_s rho_out_s) for every pair."""
    batch = _batch(topology, params, dataset)
    p_u, p_d = propagators if propagators is not None else stage_propagators(topology, params)
    out = p_d @ (p_u @ batch.inputs)
    return np.einsum("sk,ks->s", batch.selectors, out).real


def loss(topology, params, dataset):
    return 1.0 - float(np.mean(success_probabilities(topology, params, dataset)))


def _trace_pairing(m, superops):
    # Tr(M S) for each S
    return np.array([np.sum(m.T * s).real for s in superops])


class Evaluation(NamedTuple):
    loss: float
    grad: Gradient
    probabilities: np.ndarray
    # d p_s / d gamma_i, shape (N, n); None unless requested
    gamma_sensitivity: Optional[np.ndarray]


def evaluate(topology, params, dataset, per_pair=False, with_h=True):
    """Loss and analytic gradient in one pass.

    Uses the adjoint form e.(dexp(A)[E])v = Tr(dexp(A)[v e^T] E), so each stage
    costs one block exponential regardless of the number of parameters. The
    unitary stage is handled at the d x d level (rho -> U rho U^+); the output
    generator is real, so its block exponential runs in real arithmetic.
    With ``per_pair`` the output-stage term is split per pair, which the
    robustness metric needs (one block exponential per pair).
    """
    params.check(topology)
    batch = _batch(topology, params, dataset)
    n_pairs, d = len(batch), topology.dim
    a_u = -1j * params.t_u * topology.hamiltonian(params.h)
    with np.errstate(over="ignore", invalid="ignore"):
        a_d = topology.output_generator(params.gamma) * params.t_d
    if not (np.all(np.isfinite(a_d)) and np.all(np.isfinite(a_u))):
        raise NumericError("non-finite stage generator")
    if np.any(a_d.imag):
        raise ValueError("output generator is expected to be real")
    a_d = a_d.real
    u = matexp(a_u)
    rho_in = batch.inputs.reshape(d, d, n_pairs, order="F")
    rho_u = np.einsum("ij,jks,lk->ils", u, rho_in, u.conj())
    mid = rho_u.reshape(d * d, n_pairs, order="F")
    p_d = matexp(a_d)
    back = batch.selectors @ p_d
    probs = np.einsum("sk,ks->s", back, mid).real
    dgen = [2.0 * g * params.t_d * s.real for g, s in zip(params.gamma, topology.channel_superops)]

    # a_d, dgen real: only Re(mid) survives the real part of the trace pairing
    sens = None
    if per_pair:
        sens = np.empty((n_pairs, topology.n_gamma))
        for s in range(n_pairs):
            _, m = frechet_exp(a_d, np.outer(mid[:, s].real, batch.selectors[s]))
            sens[s] = _trace_pairing(m, dgen)
        dp_dgamma = sens.sum(axis=0)
    else:
        _, m = frechet_exp(a_d, mid.real @ batch.selectors)
        dp_dgamma = _trace_pairing(m, dgen)

    if with_h and topology.n_h:
        # p_s = Tr(Y_s U rho_s U^+) with Y_s the Hermitian part of unvec(back_s)^T, so
        # dp_s = 2 Re Tr(rho_s U^+ Y_s dU) and dU = dexp(a_u)[-i t_u H_k]
        y = back.reshape(n_pairs, d, d)  # row-major reshape == unvec(.)^T
        y = 0.5 * (y + y.conj().transpose(0, 2, 1))
        z = sum(rho_in[:, :, s] @ u.conj().T @ y[s] for s in range(n_pairs))
        _, m = frechet_exp(a_u, z)
        dp_dh = np.array([2.0 * np.sum(m.T * (-1j * params.t_u * hk)).real for hk in topology.coupling_ops])
    else:
        dp_dh = np.zeros(topology.n_h)

    value = 1.0 - float(np.mean(probs))
    grad = Gradient(-dp_dh / n_pairs, -dp_dgamma / n_pairs)
    return Evaluation(value, grad, probs, sens)


def gradient(topology, params, dataset):
    """Analytic gradient of the loss with respect to (h, gamma)."""
    return evaluate(topology, params, dataset).grad


def gradient_direct(topology, params, dataset):
    """Analytic gradient, one directional derivative per parameter.

    d vec(rho_out)/dh_k     = P_D dexp(T_U A_U)[T_U dA_U/dh_k] v
    d vec(rho_out)/dgamma_k = dexp(T_D A_D)[T_D dA_D/dgamma_k] P_U v
    Slower than :func:`evaluate` but a straight transcription of the chain rule.
    """
    params.check(topology)
    batch = _batch(topology, params, dataset)
    a_u = topology.unitary_generator(params.h) * params.t_u
    a_d = topology.output_generator(params.gamma) * params.t_d
    n = len(batch)
    p_u = matexp(a_u)
    p_d = matexp(a_d)
    gh = np.empty(topology.n_h)
    for k, s in enumerate(topology.coupling_superops):
        _, deriv = frechet_exp(a_u, params.t_u * s)
        d_out = p_d @ deriv @ batch.inputs
        gh[k] = -np.einsum("sk,ks->", batch.selectors, d_out).real / n
    gg = np.empty(topology.n_gamma)
    mid = p_u @ batch.inputs
    for k, (g, s) in enumerate(zip(params.gamma, topology.channel_superops)):
        _, deriv = frechet_exp(a_d, 2.0 * g * params.t_d * s)
        d_out = deriv @ mid
        gg[k] = -np.einsum("sk,ks->", batch.selectors, d_out).real / n
    return Gradient(gh, gg)


def finite_diff_gradient(topology, params, dataset, epsilon=1e-6):
    """Central differences of the loss, one parameter at a time."""
    if not 1e-8 <= epsilon <= 1e-3:
        raise ValueError("epsilon must lie in [1e-8, 1e-3]")
    batch = _batch(topology, params, dataset)

    def partials(values, rebuild):
        out = np.empty(values.size)
        for k in range(values.size):
            up, down = values.copy(), values.copy()
            up[k] += epsilon
            down[k] -= epsilon
            out[k] = (loss(topology, rebuild(up), batch) - loss(topology, rebuild(down), batch)) / (2 * epsilon)
        return out

    gh = partials(params.h, lambda v: params.with_values(h=v))
    gg = partials(params.gamma, lambda v: params.with_values(gamma=v))
    return Gradient(gh, gg)


def robustness(topology, params, dataset):
    """1 - mean over pairs and output rates of (d p_s / d gamma_i)**2."""
    ev = evaluate(topology, params, dataset, per_pair=True, with_h=False)
    return _robustness_from(ev.gamma_sensitivity)


def _robustness_from(sens):
    if sens.size == 0:
        return 1.0
    return 1.0 - float(np.mean(sens ** 2))


def sgd_step(params, grad, eta, train_h=True):
    """theta <- theta - eta * dLoss/dtheta. h is left untouched when ``train_h`` is false."""
    if eta < 0:
        raise ValueError("learning rate must be non-negative")
    h = params.h - eta * np.asarray(grad.h) if train_h else params.h
    return params.with_values(h=h, gamma=params.gamma - eta * np.asarray(grad.gamma))


# ---------------------------------------------------------------- training loop

def parse_gamma_init(spec):
    """Parse ``uniform:lo:hi``, ``const:v`` or ``grid:v1,v2,...``."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "uniform":
            lo, hi = (float(x) for x in rest.split(":"))
            if not lo < hi:
                raise ValueError
            return ("uniform", lo, hi)
        if kind == "const":
            return ("const", float(rest))
        if kind == "grid":
            values = tuple(float(x) for x in rest.split(","))
            if not values:
                raise ValueError
            return ("grid", values)
    except ValueError:
        pass
    raise ValueError(f"bad gamma-init spec {spec!r}; expected uniform:lo:hi, const:v or grid:v1,...")


def sample_rng(seed, sample):
    """Per-sample substream; every model in sample ``sample`` gets the same draws."""
    return np.random.default_rng([int(seed), int(sample)])


def draw_uniform_block(seed, sample, size, lo=-1.0, hi=1.0):
    return sample_rng(seed, sample).uniform(lo, hi, size)


def initial_gamma(spec, n, seed, sample):
    kind = parse_gamma_init(spec) if isinstance(spec, str) else ("explicit", spec)
    if kind[0] == "uniform":
        return draw_uniform_block(seed, sample, n, kind[1], kind[2])
    if kind[0] == "const":
        return np.full(n, kind[1])
    if kind[0] == "grid":
        return np.full(n, kind[1][sample % len(kind[1])])
    values = np.asarray(kind[1], dtype=float).reshape(-1)
    if values.size != n:
        raise ValueError(f"explicit gamma init has {values.size} entries, need {n}")
    return values.copy()


@dataclass
class TrainConfig:
    learning_rate: float = 0.5
    iterations: int = 2000
    mode: str = "coherent"
    h_init: float = 0.1
    gamma_init: Union[str, Sequence[float]] = "uniform:-1:1"
    seed: int = 0
    sample: int = 0
    gradient_method: str = "analytic"
    corrupted: Optional[Sequence] = None
    correct_at: Optional[int] = None
    track_robustness: bool = True

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.mode not in ("coherent", "incoherent"):
            raise ValueError(f"mode must be coherent or incoherent, got {self.mode!r}")
        if self.gradient_method not in ("analytic", "finite-difference"):
            raise ValueError(f"unknown gradient method {self.gradient_method!r}")
        if (self.corrupted is None) != (self.correct_at is None):
            raise ValueError("corrupted dataset and correct_at must be given together")
        if self.correct_at is not None and self.correct_at < 0:
            raise ValueError("correct_at must be non-negative")


@dataclass
class TrainingHistory:
    """One record per iteration, iteration 0 included."""

    loss: list = field(default_factory=list)
    robustness: list = field(default_factory=list)
    p_yes: list = field(default_factory=list)
    test_ids: tuple = ()
    final: object = None

    @property
    def iterations(self):
        return list(range(len(self.loss)))

    def append(self, loss_value, robust, p_yes):
        self.loss.append(float(loss_value))
        self.robustness.append(float(robust))
        self.p_yes.append(np.asarray(p_yes, dtype=float).copy())

    def as_arrays(self):
        return (np.asarray(self.loss), np.asarray(self.robustness),
                np.asarray(self.p_yes).reshape(len(self.loss), len(self.test_ids)))


def initial_params(topology, config, **durations):
    gamma = initial_gamma(config.gamma_init, topology.n_gamma, config.seed, config.sample)
    h0 = 0.0 if config.mode == "incoherent" else config.h_init
    return Params(h=np.full(topology.n_h, h0), gamma=gamma, **durations)


def test_probabilities(topology, params, test_batch, propagators=None):
    """p_yes of each tracked test sequence."""
    if test_batch is None:
        return np.empty(0)
    p_u, p_d = propagators if propagators is not None else stage_propagators(topology, params)
    out = p_d @ (p_u @ test_batch.inputs)
    k = topology.output_neuron("Yes")
    return out[k * topology.dim + k, :].real


def train(topology, dataset, config, params=None, test_set=None, test_ids=None, **durations):
    """Full-batch gradient descent; returns the per-iteration history.

    With a correction schedule the corrupted labels are used for iterations
    before ``config.correct_at`` and the clean ``dataset`` from then on.
    """
    if params is None:
        params = initial_params(topology, config, **durations)
    params.check(topology)
    coherent = config.mode == "coherent"
    if not coherent:
        params = params.with_values(h=np.zeros(topology.n_h))
    clean = EncodedBatch(topology, params, dataset)
    corrupted = None
    if config.corrupted is not None:
        corrupted = EncodedBatch(topology, params, config.corrupted)
        if [p.sequence for p in corrupted.pairs] != [p.sequence for p in clean.pairs]:
            raise ValueError("corrupted and clean datasets must share sequences")
    test_batch = None
    if test_set:
        test_batch = EncodedBatch(topology, params, [(seq, "Yes") for seq, *_ in test_set])
    history = TrainingHistory(test_ids=tuple(test_ids or range(len(test_set or ()))))

    for it in range(config.iterations + 1):
        batch = corrupted if corrupted is not None and it < config.correct_at else clean
        if config.gradient_method == "analytic":
            ev = evaluate(topology, params, batch, per_pair=config.track_robustness, with_h=coherent)
            value, grad = ev.loss, ev.grad
            robust = _robustness_from(ev.gamma_sensitivity) if config.track_robustness else np.nan
        else:
            value = loss(topology, params, batch)
            grad = finite_diff_gradient(topology, params, batch)
            robust = robustness(topology, params, batch) if config.track_robustness else np.nan
        if not np.isfinite(value) or not (np.all(np.isfinite(grad.h)) and np.all(np.isfinite(grad.gamma))):
            raise NumericError(f"non-finite loss or gradient at iteration {it} (loss={value})")
        history.append(value, robust, test_probabilities(topology, params, test_batch))
        if it < config.iterations:
            params = sgd_step(params, grad, config.learning_rate, train_h=coherent)
    history.final = params
    return history
