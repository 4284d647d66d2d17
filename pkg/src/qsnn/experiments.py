"""Multi-sample experiment runs: matched initializations across models, ordered reduction."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .classical import ClassicalNN, classical_train
from .corpus import builtin_corpus, load_dataset, write_history, write_summary
from .network import Params, Topology
from .training import EncodedBatch, TrainConfig, train

# per-experiment defaults; anything left as None on the command line falls back to these
DEFAULTS = {
    "accelerate": dict(samples=100, iters=200, lr=0.03, t_u=3.0, gamma_init="uniform:-1:1"),
    "robustness": dict(samples=100, iters=200, lr=0.03, t_u=3.0, gamma_init="uniform:-1:1"),
    "verse": dict(samples=20, iters=500, lr=0.3, t_u=1.0, gamma_init="uniform:-1:1"),
    "label-noise": dict(samples=4, iters=300, lr=0.1, t_u=1.0, gamma_init="grid:0.1,0.3,0.5,0.7",
                        correct_at=100),
    "train": dict(samples=1, iters=2000, lr=0.5, t_u=1.0, gamma_init="uniform:-1:1"),
}


@dataclass
class ExperimentConfig:
    name: str
    samples: int = 100
    iters: int = 200
    lr: float = 0.5
    seed: int = 0
    h_init: tuple = (0.1,)
    gamma_init: str = "uniform:-1:1"
    mode: str = "all"
    gamma_in: float = 1.0
    t_in: float = 10.0
    t_u: float = 1.0
    t_d: float = 10.0
    out: Path = Path("results")
    jobs: int = 1
    correct_at: Optional[int] = None
    track_robustness: bool = True

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.iters < 0:
            raise ValueError("iterations must be non-negative")
        if not self.lr >= 0:
            raise ValueError("learning rate must be non-negative")
        for name in ("gamma_in", "t_in", "t_u", "t_d"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.mode not in ("coherent", "incoherent", "classical", "all"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        self.out = Path(self.out)
        self.h_init = tuple(float(h) for h in self.h_init)

    @property
    def durations(self):
        return dict(gamma_in=self.gamma_in, t_in=self.t_in, t_u=self.t_u, t_d=self.t_d)

    def models(self, classical=True):
        """Model names in output order."""
        out = []
        if classical and self.mode in ("classical", "all"):
            out.append("classical")
        if self.mode in ("incoherent", "all"):
            out.append("incoherent")
        if self.mode in ("coherent", "all"):
            out += [coherent_name(h) for h in self.h_init]
        return out


def coherent_name(h):
    return f"coherent_h{h:g}"


@dataclass
class Job:
    model: str
    sample: int
    topology: Topology
    train_pairs: list
    test_pairs: list
    test_ids: tuple
    config: ExperimentConfig
    corrupted_pairs: Optional[list] = None


def run_job(job):
    """Train one model from the initialization of one sample."""
    cfg = job.config
    correct_at = cfg.correct_at if job.corrupted_pairs is not None else None
    if job.model == "classical":
        zero = Params(h=np.zeros(job.topology.n_h), gamma=np.zeros(job.topology.n_gamma), **cfg.durations)
        train_batch = EncodedBatch(job.topology, zero, job.train_pairs)
        labels = [p.label for p in train_batch.pairs]
        corrupted = None
        if job.corrupted_pairs is not None:
            corrupted = [label for _, label in job.corrupted_pairs]
        tests = None
        if job.test_pairs:
            tests = EncodedBatch(job.topology, zero, [(s, "Yes") for s, _ in job.test_pairs]).populations()
        nn = ClassicalNN.initial(job.topology.vocab_size, cfg.seed, job.sample)
        return classical_train(nn, train_batch.populations(), labels, cfg.lr, cfg.iters, tests, job.test_ids,
                               corrupted_labels=corrupted, correct_at=correct_at)
    mode = "incoherent" if job.model == "incoherent" else "coherent"
    h0 = 0.0 if mode == "incoherent" else float(job.model.removeprefix("coherent_h"))
    tc = TrainConfig(learning_rate=cfg.lr, iterations=cfg.iters, mode=mode, h_init=h0,
                     gamma_init=cfg.gamma_init, seed=cfg.seed, sample=job.sample,
                     corrupted=job.corrupted_pairs, correct_at=correct_at,
                     track_robustness=cfg.track_robustness)
    return train(job.topology, job.train_pairs, tc, test_set=job.test_pairs, test_ids=job.test_ids,
                 **cfg.durations)


def run_jobs(jobs, n_workers=1):
    """Run jobs and return histories in job order (serial and parallel give the same result)."""
    if n_workers == 1 or len(jobs) == 1:
        return [run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(run_job, jobs))


def load_corpus(dataset=None, test=None, default="accelerate"):
    if dataset is None:
        train_set, test_set = builtin_corpus(default)
    else:
        train_set = load_dataset(dataset)
        test_set = train_set if test is None else None
    if test is not None:
        test_set = load_dataset(test, role="test")
    if test_set.vocabulary != train_set.vocabulary:
        raise ValueError("train and test datasets must share a vocabulary")
    return train_set, test_set


def run_experiment(cfg, train_set, test_set, models, corrupted=None, write_histories=False):
    """Train every model over every sample and write <model>_summary.csv files.

    Returns {model: [history per sample]}.
    """
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    topology = Topology(len(train_set.vocabulary))
    train_pairs = train_set.indexed()
    test_pairs = test_set.indexed() if test_set is not None else []
    test_ids = test_set.ids if test_set is not None else ()
    corrupted_pairs = corrupted.indexed() if corrupted is not None else None
    jobs = [Job(m, s, topology, train_pairs, test_pairs, test_ids, cfg, corrupted_pairs)
            for m in models for s in range(cfg.samples)]
    histories = run_jobs(jobs, cfg.jobs)
    cfg.out.mkdir(parents=True, exist_ok=True)
    result = {}
    for k, m in enumerate(models):
        hs = histories[k * cfg.samples:(k + 1) * cfg.samples]
        result[m] = hs
        write_summary(hs, cfg.out / f"{m}_summary.csv")
        if write_histories:
            for s, h in enumerate(hs):
                write_history(h, cfg.out / f"{m}_sample{s:04d}.csv")
    return result


def with_defaults(name, **overrides):
    """ExperimentConfig for ``name`` with per-experiment defaults, then non-None overrides."""
    base = dict(DEFAULTS[name])
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(name=name, **base)
