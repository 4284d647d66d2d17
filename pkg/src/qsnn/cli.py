"""Command-line entry point.

    qsnn accelerate | verse | label-noise | robustness | train | eval  [flags]

Exit codes: 0 success, 2 configuration or validation error, 3 numeric failure.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .corpus import DatasetError, builtin_corpus, load_dataset, write_history
from .experiments import DEFAULTS, load_corpus, run_experiment, with_defaults
from .network import Params, Topology, forward
from .training import NumericError, TrainConfig, train

log = logging.getLogger("qsnn")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p):
    p.add_argument("--dataset", type=Path, help="training dataset JSON (default: built-in corpus)")
    p.add_argument("--test", type=Path, help="test dataset JSON whose p_yes is tracked")
    p.add_argument("--samples", type=int, help="number of matched initializations")
    p.add_argument("--iters", type=int, help="gradient-descent iterations")
    p.add_argument("--lr", type=float, help="learning rate")
    p.add_argument("--seed", type=int, default=0, help="base seed; sample s uses substream (seed, s)")
    p.add_argument("--h-init", type=_float_list, default=(0.1,), help="initial h of the coherent model(s)")
    p.add_argument("--gamma-init", help="uniform:lo:hi | const:v | grid:v1,v2,...")
    p.add_argument("--t-in", type=float, default=10.0)
    p.add_argument("--t-u", type=float)
    p.add_argument("--t-d", type=float, default=10.0)
    p.add_argument("--gamma-in", type=float, default=1.0)
    p.add_argument("--mode", choices=["coherent", "incoherent", "classical", "all"], default="all")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the sample loop")
    p.add_argument("--histories", action="store_true", help="also write one CSV per sample")


def build_parser():
    parser = argparse.ArgumentParser(prog="qsnn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("accelerate", "training speed of classical, incoherent and coherent models"),
                       ("verse", "verse / normal sentence recognition after training"),
                       ("label-noise", "retraining after corrupted labels are corrected"),
                       ("robustness", "robustness to output-rate perturbations during training"),
                       ("train", "a single seeded training run")]:
        p = sub.add_parser(name, help=text)
        _common(p)
        if name == "label-noise":
            p.add_argument("--corrupted", type=Path, help="dataset JSON with corrupted labels")
            p.add_argument("--correct-at", type=int, help="iteration at which the labels are corrected")
        if name == "train":
            p.add_argument("--params-out", type=Path, help="where to save final parameters (JSON)")
    p = sub.add_parser("eval", help="print forward results for saved parameters")
    p.add_argument("--params", type=Path, required=True)
    p.add_argument("--dataset", type=Path, help="sequences to evaluate (default: built-in accelerate set)")
    return parser


def _config(args, name, **extra):
    return with_defaults(
        name, samples=args.samples, iters=args.iters, lr=args.lr, seed=args.seed, h_init=args.h_init,
        gamma_init=args.gamma_init, mode=args.mode, gamma_in=args.gamma_in, t_in=args.t_in,
        t_u=args.t_u, t_d=args.t_d, out=args.out, jobs=args.jobs, **extra)


def _report(result, out):
    for model, hs in result.items():
        final = np.mean([h.loss[-1] for h in hs])
        log.info("%-16s mean final loss %.6f", model, final)
    print(f"wrote summaries for {', '.join(result)} to {out}")


def cmd_accelerate(args):
    cfg = _config(args, "accelerate")
    train_set, test_set = load_corpus(args.dataset, args.test, "accelerate")
    result = run_experiment(cfg, train_set, test_set, cfg.models(), write_histories=args.histories)
    _report(result, cfg.out)


def cmd_robustness(args):
    cfg = _config(args, "robustness")
    train_set, test_set = load_corpus(args.dataset, args.test, "accelerate")
    result = run_experiment(cfg, train_set, test_set, cfg.models(classical=False),
                            write_histories=args.histories)
    _report(result, cfg.out)


def cmd_verse(args):
    cfg = _config(args, "verse", track_robustness=False)
    train_set, test_set = load_corpus(args.dataset, args.test, "verse-default")
    result = run_experiment(cfg, train_set, test_set, cfg.models(), write_histories=args.histories)
    _report(result, cfg.out)


def cmd_label_noise(args):
    correct_at = args.correct_at if args.correct_at is not None else DEFAULTS["label-noise"]["correct_at"]
    cfg = _config(args, "label-noise", correct_at=correct_at, track_robustness=False)
    if args.dataset is None:
        clean, test_set = builtin_corpus("verse-default")
    else:
        clean, test_set = load_corpus(args.dataset, args.test)
    corrupted = load_dataset(args.corrupted) if args.corrupted else builtin_corrupted()
    if corrupted.vocabulary != clean.vocabulary or [s for s, _ in corrupted.pairs] != [s for s, _ in clean.pairs]:
        raise ValueError("corrupted dataset must have the same vocabulary and sequences as the clean one")
    models = [m for m in cfg.models() if m != "classical"]
    result = run_experiment(cfg, clean, test_set, models, corrupted=corrupted, write_histories=args.histories)
    _report(result, cfg.out)


def builtin_corrupted():
    from importlib import resources
    from .corpus import parse_dataset
    text = resources.files("qsnn.data").joinpath("verse_corrupted.json").read_text()
    return parse_dataset(json.loads(text), "train", "verse_corrupted.json")


def save_params(params, path):
    obj = {"h": [float(x) for x in params.h], "gamma": [float(x) for x in params.gamma],
           "gamma_in": params.gamma_in, "t_in": params.t_in, "t_u": params.t_u, "t_d": params.t_d}
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_params(path):
    try:
        obj = json.loads(Path(path).read_text())
        return Params(**obj)
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise ValueError(f"{path}: cannot read parameters ({exc})") from None


def cmd_train(args):
    if args.mode == "all":
        args.mode = "coherent"
    cfg = _config(args, "train")
    if cfg.mode not in ("coherent", "incoherent"):
        raise ValueError("train supports --mode coherent or incoherent")
    train_set, test_set = load_corpus(args.dataset, args.test, "accelerate")
    topology = Topology(len(train_set.vocabulary))
    tc = TrainConfig(learning_rate=cfg.lr, iterations=cfg.iters, mode=cfg.mode, h_init=cfg.h_init[0],
                     gamma_init=cfg.gamma_init, seed=cfg.seed, sample=0)
    hist = train(topology, train_set.indexed(), tc, test_set=test_set.indexed(), test_ids=test_set.ids,
                 **cfg.durations)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_history(hist, cfg.out / "history.csv")
    save_params(hist.final, args.params_out or cfg.out / "params.json")
    print(f"final loss {hist.loss[-1]:.6f}; wrote {cfg.out / 'history.csv'}")


def cmd_eval(args):
    params = load_params(args.params)
    if args.dataset is None:
        dataset, _ = builtin_corpus("accelerate")
    else:
        dataset = load_dataset(args.dataset)
    topology = Topology(len(dataset.vocabulary))
    params.check(topology)
    print("id,label,p_yes,p_no,p_undetermined")
    for pid, (seq, label) in zip(dataset.ids, dataset.indexed()):
        r = forward(topology, params, seq)
        print(f"{pid},{label},{r.p_yes!r},{r.p_no!r},{r.p_undetermined!r}")


COMMANDS = {"accelerate": cmd_accelerate, "verse": cmd_verse, "label-noise": cmd_label_noise,
            "robustness": cmd_robustness, "train": cmd_train, "eval": cmd_eval}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        COMMANDS[args.command](args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
