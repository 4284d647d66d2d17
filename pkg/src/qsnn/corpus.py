"""Datasets (JSON), the shipped corpora, and CSV output of training histories."""
import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .network import LABELS


class DatasetError(ValueError):
    pass


@dataclass
class LabeledDataset:
    """Vocabulary plus labelled word sequences. Word k of the vocabulary is neuron k+1."""

    vocabulary: tuple
    pairs: list
    role: str = "train"
    ids: tuple = field(default=())

    def __post_init__(self):
        self.vocabulary = tuple(self.vocabulary)
        self.pairs = [(tuple(seq), label) for seq, label in self.pairs]
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise DatasetError("vocabulary contains duplicate words")
        if not self.ids:
            self.ids = tuple(f"s{k}" for k in range(len(self.pairs)))
        self.ids = tuple(self.ids)
        if len(self.ids) != len(self.pairs) or len(set(self.ids)) != len(self.ids):
            raise DatasetError("sequence ids must be unique, one per pair")
        known = set(self.vocabulary)
        for k, (seq, label) in enumerate(self.pairs):
            for w in seq:
                if w not in known:
                    raise DatasetError(f"pair {k}: unknown word {w!r}")
            if label not in LABELS:
                raise DatasetError(f"pair {k}: unknown label {label!r}")

    def __len__(self):
        return len(self.pairs)

    def indexed(self):
        """Pairs with words replaced by neuron indices 1..V."""
        pos = {w: k + 1 for k, w in enumerate(self.vocabulary)}
        return [(tuple(pos[w] for w in seq), label) for seq, label in self.pairs]

    def with_labels(self, labels):
        return LabeledDataset(self.vocabulary, [(s, l) for (s, _), l in zip(self.pairs, labels)],
                              self.role, self.ids)

    def to_json(self):
        pairs = []
        for pid, (seq, label) in zip(self.ids, self.pairs):
            pairs.append({"id": pid, "sequence": list(seq), "label": label})
        return {"vocabulary": list(self.vocabulary), "pairs": pairs}


def parse_dataset(obj, role="train", source="<data>"):
    if not isinstance(obj, dict):
        raise DatasetError(f"{source}: top level must be an object")
    vocab = obj.get("vocabulary")
    if not isinstance(vocab, list) or not all(isinstance(w, str) for w in vocab):
        raise DatasetError(f"{source}: 'vocabulary' must be a list of strings")
    raw = obj.get("pairs")
    if not isinstance(raw, list):
        raise DatasetError(f"{source}: 'pairs' must be a list")
    pairs, ids = [], []
    for k, item in enumerate(raw):
        if not isinstance(item, dict):
            raise DatasetError(f"{source}: pairs[{k}] must be an object")
        seq, label = item.get("sequence"), item.get("label")
        if not isinstance(seq, list) or not all(isinstance(w, str) for w in seq):
            raise DatasetError(f"{source}: pairs[{k}].sequence must be a list of strings")
        if not isinstance(label, str):
            raise DatasetError(f"{source}: pairs[{k}].label must be a string")
        pairs.append((seq, label))
        ids.append(str(item.get("id", f"s{k}")))
    try:
        return LabeledDataset(vocab, pairs, role, tuple(ids))
    except DatasetError as exc:
        raise DatasetError(f"{source}: {exc}") from None


def load_dataset(path, role="train"):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetError(f"{path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_dataset(obj, role, str(path))


def save_dataset(dataset, path):
    Path(path).write_text(json.dumps(dataset.to_json(), indent=2) + "\n")


BUILTIN = {
    "accelerate": ("accelerate_train.json", "accelerate_train.json"),
    # synthetic stand-in sentences written for this package
    "verse-default": ("verse_train.json", "verse_test.json"),
}


def builtin_corpus(name):
    """(train, test) datasets shipped with the package."""
    if name not in BUILTIN:
        raise DatasetError(f"unknown corpus {name!r}; choose from {sorted(BUILTIN)}")
    out = []
    for role, fname in zip(("train", "test"), BUILTIN[name]):
        text = resources.files("qsnn.data").joinpath(fname).read_text()
        out.append(parse_dataset(json.loads(text), role, fname))
    return tuple(out)


# ---------------------------------------------------------------- CSV output

def _fmt(x):
    return repr(float(x))


def write_history(history, path):
    """iteration, loss, robustness, p_yes_<id> ... ; one row per iteration."""
    loss, rob, p_yes = history.as_arrays()
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "loss", "robustness"] + [f"p_yes_{i}" for i in history.test_ids])
            for it in range(len(loss)):
                w.writerow([it, _fmt(loss[it]), _fmt(rob[it])] + [_fmt(v) for v in p_yes[it]])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


def summarize(values):
    """Per-column mean, 95% CI (normal approximation) and sample variance over rows (samples)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n > 1:
        var = values.var(axis=0, ddof=1)
    else:
        var = np.zeros_like(mean)
    half = 1.96 * np.sqrt(var) / np.sqrt(n)
    return mean, mean - half, mean + half, var


SUMMARY_COLUMNS = ["iteration", "mean_loss", "ci95_lo", "ci95_hi", "var_loss",
                   "mean_robustness", "ci95_rob_lo", "ci95_rob_hi"]


def write_summary(histories, path):
    """Aggregate several histories of equal length, plus mean/variance of each tracked p_yes."""
    if not histories:
        raise ValueError("no histories to summarize")
    arrays = [h.as_arrays() for h in histories]
    lengths = {len(a[0]) for a in arrays}
    if len(lengths) != 1:
        raise ValueError("histories have different lengths")
    ids = histories[0].test_ids
    m, lo, hi, var = summarize([a[0] for a in arrays])
    rm, rlo, rhi, _ = summarize([a[1] for a in arrays])
    p = np.stack([a[2] for a in arrays])  # (S, T, K)
    pm = p.mean(axis=0)
    pv = p.var(axis=0, ddof=1) if len(histories) > 1 else np.zeros_like(pm)
    path = Path(path)
    extra = [c for i in ids for c in (f"mean_p_yes_{i}", f"var_p_yes_{i}")]
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS + extra)
            for it in range(len(m)):
                row = [it] + [_fmt(x) for x in (m[it], lo[it], hi[it], var[it], rm[it], rlo[it], rhi[it])]
                for k in range(len(ids)):
                    row += [_fmt(pm[it, k]), _fmt(pv[it, k])]
                w.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


def read_csv(path):
    """Read one of our CSVs back as {column: float array}."""
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[k]) for r in body]) for k, name in enumerate(header)}
