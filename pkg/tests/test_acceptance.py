"""Acceptance criteria 1-11. Each test prints one PASS/FAIL line.

The experiment-level checks (6-9) run the command-line tool at its default settings,
so this module takes roughly a quarter of an hour on one core.
Select it alone with `pytest tests/test_acceptance.py -v`, or skip it with `-m "not acceptance"`.
"""
import time

import numpy as np
import pytest

from qsnn.cli import main
from qsnn.corpus import read_csv
from qsnn.lindblad import GeneratorSpec, build_liouvillian, evolve, ode_oracle, propagator, trace_residual
from qsnn.network import Params, Topology, encode_input, forward, output_stage, unitary_stage
from qsnn.training import TrainConfig, finite_diff_gradient, gradient, loss, train

pytestmark = pytest.mark.acceptance

TASK = [((1, 2), "Yes"), ((2, 1), "No")]


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def random_spec(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (a + a.conj().T) / 2
    ops = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(int(rng.integers(1, 4)))]
    return GeneratorSpec(h, ops)


def random_density(rng, d, pure=False):
    a = rng.normal(size=(d, 1 if pure else d)) + 1j * rng.normal(size=(d, 1 if pure else d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_criterion_01_physics_invariants(report):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = dict(trace=0.0, herm=0.0, eig=np.inf, null=0.0)
    for k in range(200):
        d = int(rng.integers(2, 7))
        L = build_liouvillian(random_spec(rng, d))
        # pure starting states put the eigenvalue floor under real pressure
        rho = evolve(random_density(rng, d, pure=k % 2 == 0), propagator(L, rng.uniform(0, 5)), check=False)
        worst["trace"] = max(worst["trace"], abs(np.trace(rho) - 1))
        worst["herm"] = max(worst["herm"], np.max(np.abs(rho - rho.conj().T)))
        worst["eig"] = min(worst["eig"], np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
        worst["null"] = max(worst["null"], trace_residual(L))
    elapsed = time.perf_counter() - start
    ok = (worst["trace"] <= 1e-10 and worst["herm"] <= 1e-10 and worst["eig"] >= -1e-9
          and worst["null"] <= 1e-12 and elapsed <= 30)
    report(1, ok, f"trace {worst['trace']:.1e} herm {worst['herm']:.1e} min-eig {worst['eig']:.1e} "
                  f"null {worst['null']:.1e} ({elapsed:.1f}s)")


def test_criterion_02_rk4_equivalence(report):
    rng = np.random.default_rng(102)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 5))
        spec = random_spec(rng, d)
        rho0 = random_density(rng, d)
        t = rng.uniform(0.1, 1.0)
        ref = ode_oracle(spec, rho0, t, 10_000)
        got = evolve(rho0, propagator(build_liouvillian(spec), t), check=False)
        worst = max(worst, np.max(np.abs(got - ref)))
    elapsed = time.perf_counter() - start
    report(2, worst <= 1e-8 and elapsed <= 60, f"max entry difference {worst:.1e} ({elapsed:.1f}s)")


def test_criterion_03_closed_forms(report):
    top = Topology(2)
    errs = []
    single = Topology(2, output_channels=((1, 0),))
    for g, t in [(0.3, 2.0), (1.1, 0.7), (0.8, 4.0)]:
        rho = np.zeros((5, 5), dtype=complex)
        rho[1, 1] = 1
        out = output_stage(rho, single, Params(h=[0.0], gamma=[g], t_d=t))
        errs.append(abs(out[1, 1].real - np.exp(-g * g * t)))
        errs.append(abs(out[3, 3].real - (1 - np.exp(-g * g * t))))
    for h, t in [(0.2, 1.0), (0.9, 2.5), (1.7, 0.4)]:
        rho = np.zeros((5, 5), dtype=complex)
        rho[1, 1] = 1
        out = unitary_stage(rho, top, Params(h=[h], gamma=np.zeros(4), t_u=t))
        errs.append(abs(out[2, 2].real - np.sin(h * t) ** 2))
    ordered = True
    for gin, tin in [(1.0, 10.0), (0.6, 3.0), (1.3, 1.0)]:
        gg, tau = gin ** 2, tin / 2
        omega = np.exp(-3 * gg * tau)
        beta = (np.exp(-gg * tau) - np.exp(-3 * gg * tau)) / 2
        alpha = 1 - np.exp(-gg * tau) + beta
        pops = np.real(np.diag(encode_input(top, Params(h=[0], gamma=np.zeros(4), gamma_in=gin, t_in=tin), [1, 2])))
        errs.append(np.max(np.abs(pops - [omega, alpha, beta, 0, 0])))
        ordered &= alpha > beta
    worst = max(errs)
    report(3, worst <= 1e-8 and ordered, f"max closed-form error {worst:.1e}, alpha > beta: {ordered}")


def test_criterion_04_gradients(report):
    rng = np.random.default_rng(104)
    start = time.perf_counter()
    vocab8 = np.arange(1, 9)
    worst = 0.0
    for V in (2, 8):
        top = Topology(V)
        for _ in range(20):
            if V == 2:
                data = TASK
            else:
                data = [(tuple(int(w) for w in rng.permutation(vocab8)[:int(rng.integers(2, 4))]), lab)
                        for lab in ("Yes", "No", "Yes", "No", "Yes", "No")]
            p = Params(h=rng.uniform(-1, 1, top.n_h), gamma=rng.uniform(-1, 1, top.n_gamma),
                       t_u=rng.uniform(0.5, 3.0))
            g, fd = gradient(top, p, data), finite_diff_gradient(top, p, data, epsilon=1e-5)
            a = np.concatenate([g.h, g.gamma])
            b = np.concatenate([fd.h, fd.gamma])
            worst = max(worst, np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-8 / 1e-5)))
    elapsed = time.perf_counter() - start
    report(4, worst <= 1e-5 and elapsed <= 120,
           f"max relative error {worst:.1e} (floor 1e-8 absolute) ({elapsed:.1f}s)")


def test_criterion_05_trainability(report):
    start = time.perf_counter()
    finals = [train(Topology(2), TASK, TrainConfig(learning_rate=0.5, iterations=2000, seed=0, sample=s,
                                                   track_robustness=False)).loss[-1]
              for s in range(100)]
    elapsed = time.perf_counter() - start
    rate = np.mean(np.array(finals) <= 0.05)
    report(5, rate >= 0.95 and elapsed <= 300, f"{rate:.0%} of 100 runs reach loss <= 0.05 ({elapsed:.0f}s)")


@pytest.fixture(scope="module")
def accelerate_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("accelerate")
    start = time.perf_counter()
    assert main(["accelerate", "--out", str(out), "--histories"]) == 0
    return out, time.perf_counter() - start


def _half(data, it):
    return (data["ci95_hi"][it] - data["ci95_lo"][it]) / 2


def test_criterion_06_training_speed_ordering(report, accelerate_run):
    out, elapsed = accelerate_run
    coh, inc, cla = (read_csv(out / f"{m}_summary.csv") for m in ("coherent_h0.1", "incoherent", "classical"))
    ok = elapsed <= 600
    parts = []
    for it in (20, 50):
        m = [d["mean_loss"][it] for d in (coh, inc, cla)]
        h = [_half(d, it) for d in (coh, inc, cla)]
        ok &= (m[1] - m[0] > max(h[0], h[1])) and (m[2] - m[1] > max(h[1], h[2]))
        parts.append(f"it{it}: " + " < ".join(f"{a:.4f}+-{b:.4f}" for a, b in zip(m, h)))
    report(6, ok, "; ".join(parts) + f" ({elapsed:.0f}s)")


def test_criterion_07_robustness_ordering(report, accelerate_run):
    out, _ = accelerate_run
    coh, inc = (read_csv(out / f"{m}_summary.csv") for m in ("coherent_h0.1", "incoherent"))
    records = [read_csv(f)["robustness"] for m in ("coherent_h0.1", "incoherent")
               for f in sorted(out.glob(f"{m}_sample*.csv"))]
    top = max(r.max() for r in records)
    ok = len(records) == 200 and coh["mean_robustness"][-1] >= inc["mean_robustness"][-1] and top <= 1.0
    report(7, ok, f"final mean robustness coherent {coh['mean_robustness'][-1]:.6f} >= incoherent "
                  f"{inc['mean_robustness'][-1]:.6f}; max record {top:.6f}")


def test_criterion_08_verse_ordering(report, tmp_path):
    assert main(["verse", "--out", str(tmp_path)]) == 0
    acc, normal = {}, {}
    for m in ("coherent_h0.1", "incoherent", "classical"):
        d = read_csv(tmp_path / f"{m}_summary.csv")
        acc[m] = np.mean([d[f"mean_p_yes_{v}"][-1] for v in ("verse1", "verse2")])
        normal[m] = min(d[f"mean_p_yes_{v}"][-1] for v in ("normal1", "normal2"))
    ok = acc["coherent_h0.1"] >= acc["incoherent"] >= acc["classical"] and min(normal.values()) >= 0.9
    report(8, ok, "verse accuracy " + ", ".join(f"{m} {v:.6f}" for m, v in acc.items())
           + "; worst normal " + ", ".join(f"{m} {v:.4f}" for m, v in normal.items()))


def _settle(mean, start):
    final = mean[-1]
    return next(k for k in range(len(mean) - start) if np.all(np.abs(mean[start + k:] - final) <= 0.05))


def test_criterion_09_label_noise(report, tmp_path):
    assert main(["label-noise", "--out", str(tmp_path)]) == 0
    coh, inc = (read_csv(tmp_path / f"{m}_summary.csv") for m in ("coherent_h0.1", "incoherent"))
    pre = slice(0, 100)
    gap = np.abs(coh["mean_loss"][pre] - inc["mean_loss"][pre])
    band = np.maximum(coh["var_loss"][pre], inc["var_loss"][pre])
    within = bool(np.all(gap < band))
    within_sd = bool(np.all(gap < np.sqrt(band)))
    n_coh, n_inc = _settle(coh["mean_loss"], 100), _settle(inc["mean_loss"], 100)
    report(9, within and n_coh < n_inc,
           f"pre-correction gap inside variance band: {within} (inside one-sd band: {within_sd}); "
           f"iterations to settle after correction: coherent {n_coh}, incoherent {n_inc}")


def test_criterion_10_symmetries(report):
    rng = np.random.default_rng(110)
    worst_out = worst_loss = worst_grad = worst_norm = 0.0
    for V in (2, 8):
        top = Topology(V)
        seqs = TASK if V == 2 else [((1, 5, 3), "Yes"), ((4, 2), "No"), ((8, 6, 7), "Yes")]
        for _ in range(3):
            p = Params(h=rng.uniform(-1, 1, top.n_h), gamma=rng.uniform(-1, 1, top.n_gamma))
            base = [forward(top, p, s).rho_out for s, _ in seqs]
            l0, g0 = loss(top, p, seqs), gradient(top, p, seqs)
            for k in range(top.n_gamma):
                gam = p.gamma.copy()
                gam[k] = -gam[k]
                q = p.with_values(gamma=gam)
                for (s, _), b in zip(seqs, base):
                    worst_out = max(worst_out, np.max(np.abs(forward(top, q, s).rho_out - b)))
                worst_loss = max(worst_loss, abs(loss(top, q, seqs) - l0))
                g1 = gradient(top, q, seqs)
                others = np.arange(top.n_gamma) != k
                worst_grad = max(worst_grad, abs(g1.gamma[k] + g0.gamma[k]),
                                 np.max(np.abs(g1.gamma[others] - g0.gamma[others]), initial=0.0))
    top = Topology(8)
    for _ in range(100):
        p = Params(h=rng.normal(size=top.n_h), gamma=rng.normal(size=top.n_gamma), t_u=rng.uniform(0.1, 3))
        seq = [int(w) for w in rng.permutation(np.arange(1, 9))[:int(rng.integers(1, 5))]]
        r = forward(top, p, seq)
        worst_norm = max(worst_norm, abs(r.p_yes + r.p_no + r.p_undetermined - 1))
    ok = max(worst_out, worst_loss, worst_grad) <= 1e-12 and worst_norm <= 1e-10
    report(10, ok, f"output {worst_out:.1e} loss {worst_loss:.1e} gradient {worst_grad:.1e} "
                   f"normalization {worst_norm:.1e}")


DETERMINISM_RUNS = [
    ["accelerate", "--samples", "3", "--iters", "10"],
    ["robustness", "--samples", "3", "--iters", "10"],
    ["verse", "--samples", "2", "--iters", "5"],
    ["label-noise", "--iters", "8", "--correct-at", "4"],
    ["train", "--iters", "20"],
]


def test_criterion_11_determinism(report, tmp_path):
    compared, diffs = 0, []
    for argv in DETERMINISM_RUNS:
        dirs = [tmp_path / f"{argv[0]}_{k}" for k in (0, 1)]
        for d in dirs:
            assert main(argv + ["--seed", "5", "--out", str(d), "--histories"]) == 0
        for f in sorted(dirs[0].glob("*.csv")):
            compared += 1
            if f.read_bytes() != (dirs[1] / f.name).read_bytes():
                diffs.append(f"{argv[0]}/{f.name}")
    report(11, compared > 0 and not diffs, f"{compared} CSV pairs compared, {len(diffs)} differ {diffs[:3]}")
