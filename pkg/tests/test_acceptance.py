"""Acceptance gate: ten numbered criteria, one pass/fail line each.

Criteria 5-7 are end-to-end experiments on the bundled synthetic tasks
with thresholds frozen from calibration runs (procedure and numbers are
recorded in the project notes). Criterion 6 tests a real effect claim
(symmetric-cross-entropy beating plain cross entropy on the built-in
linear classifier under 40% symmetric label noise); with an
intentionally linear model the population argmax is unchanged by
symmetric noise, calibration found no stable positive margin, and the
criterion is expected to fail honestly rather than be weakened.
"""

from __future__ import annotations

import json
import math
import random
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from scipy import stats

import hint.adapters.echo_adapter as echo
from hint.adapter import ExternalAdapterModel
from hint.cli import main as cli_main
from hint.corpus import ClassLabel, TaskKind, save_dataset
from hint.errors import ProtocolViolation
from hint.metrics import (
    bleu4,
    classification_prf,
    exact_match,
    lcs_ratio,
    rouge_l,
)
from hint.models import (
    BagOfTokensClassifier,
    TokenTranslationModel,
    Vocabulary,
    vocabulary_from_dataset,
)
from hint.objective import (
    ObjectiveConfig,
    ce_loss,
    consistency_grad_logits,
    consistency_loss,
    one_hot,
    rce_loss,
    sce_grad_logits,
    sce_loss,
    softmax,
    total_objective,
)
from hint.pipeline import PipelineConfig, base_transform_spec, run
from hint.retrieval import build_index, levenshtein, ned, query
from hint.selection import SelectionConfig, select
from hint.synth import (
    bundled_classification_task,
    bundled_generation_task,
    make_classification_task,
)
from hint.transforms import Token, TokenKind

from test_retrieval import bm25_oracle_scores, levenshtein_oracle, make_corpus
from test_selection import random_generation_setup, selection_oracle

ECHO = str(Path(echo.__file__))


def criterion(num: int, desc: str, ok: bool, detail: str = "") -> None:
    line = f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}: {desc}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def finite_diff(f, z, h=1e-5):
    g = np.zeros_like(z)
    for i in range(len(z)):
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (f(zp) - f(zm)) / (2 * h)
    return g


def max_rel_err(analytic, numeric):
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def test_criterion_1_gradient_correctness():
    rng = np.random.default_rng(0)
    cfg = ObjectiveConfig()
    worst = 0.0

    for _ in range(100):
        n = int(rng.integers(2, 6))
        z = rng.normal(0, 2, n)
        gold = int(rng.integers(n))
        p = one_hot(gold, n)

        # CE, RCE, SCE, and the mu-weighted total, all w.r.t. logits.
        ce_fd = finite_diff(lambda zz: ce_loss(p, softmax(zz)), z)
        ce_an = sce_grad_logits(gold, softmax(z), use_reverse_term=False)
        worst = max(worst, max_rel_err(ce_an, ce_fd))

        sce_fd = finite_diff(lambda zz: sce_loss(p, softmax(zz)), z)
        sce_an = sce_grad_logits(gold, softmax(z))
        worst = max(worst, max_rel_err(sce_an, sce_fd))

        rce_fd = finite_diff(lambda zz: rce_loss(p, softmax(zz)), z)
        worst = max(worst, max_rel_err(sce_an - ce_an, rce_fd))

        z2 = rng.normal(0, 2, n)
        kl_fd1 = finite_diff(lambda zz: consistency_loss(softmax(zz), softmax(z2)), z)
        kl_fd2 = finite_diff(lambda zz: consistency_loss(softmax(z), softmax(zz)), z2)
        kl_an1, kl_an2 = consistency_grad_logits(softmax(z), softmax(z2))
        worst = max(worst, max_rel_err(kl_an1, kl_fd1), max_rel_err(kl_an2, kl_fd2))

        tot_fd = finite_diff(
            lambda zz: total_objective(softmax(zz), softmax(z2), p, cfg), z
        )
        tot_an = sce_grad_logits(gold, softmax(z)) + cfg.mu * kl_an1
        worst = max(worst, max_rel_err(tot_an, tot_fd))

    # Parameter-space checks for both built-in models via per_example_loss.
    vocab = Vocabulary.build([f"w{i}" for i in range(8)])
    clf = BagOfTokensClassifier(vocab, 3, seed=1)
    out_vocab = Vocabulary.build([f"O{i}" for i in range(5)])
    trans = TokenTranslationModel(vocab, out_vocab, seed=1)
    py_rng = random.Random(1)
    for _ in range(5):
        toks = tuple(
            Token(f"w{py_rng.randrange(8)}", TokenKind.IDENTIFIER) for _ in range(4)
        )
        gold = ClassLabel(py_rng.randrange(3))
        x = clf.featurize(toks)
        q = clf.predict_distribution(toks)
        gz = sce_grad_logits(gold.class_id, q)
        analytic = np.outer(gz, x)

        def loss_at(flat):
            probe = clf.reinitialize(1)
            probe.weights = flat.reshape(clf.weights.shape)
            probe.bias = clf.bias
            return probe.per_example_loss(toks, gold)

        numeric = finite_diff(loss_at, clf.weights.ravel().copy())
        worst = max(worst, max_rel_err(analytic.ravel(), numeric))

        from hint.corpus import TokenSequence

        target = TokenSequence(tuple(f"O{py_rng.randrange(5)}" for _ in toks))
        row_grads = np.zeros_like(trans.table)
        for pos, tok in enumerate(toks):
            i = trans.vocab_in.lookup(tok.text)
            qd = softmax(trans.table[i])
            g = sce_grad_logits(trans.vocab_out.lookup(target.tokens[pos]), qd)
            row_grads[i] += g / len(toks)

        def tloss_at(flat):
            probe = trans.reinitialize(1)
            probe.table = flat.reshape(trans.table.shape)
            return probe.per_example_loss(toks, target)

        tnum = finite_diff(tloss_at, trans.table.ravel().copy())
        worst = max(worst, max_rel_err(row_grads.ravel(), tnum))

    criterion(
        1,
        "analytic gradients match central finite differences (rel err <= 1e-4)",
        worst <= 1e-4,
        f"max rel err {worst:.2e}",
    )


def test_criterion_2_selection_oracle_equivalence():
    rng = random.Random(99)
    ds, pseudo = random_generation_setup(rng, n_pseudo=200)
    index = build_index(ds)
    mismatches = 0
    for _ in range(20):
        t = rng.uniform(0.05, 0.9)
        k = rng.uniform(5.0, 95.0)
        _, report = select(pseudo, ds, index, SelectionConfig(t=t, top_k_percent=k))
        got = [(d.example_id, d.verdict.value, d.reason.value) for d in report.decisions]
        if got != selection_oracle(pseudo, ds, index, t, k):
            mismatches += 1
    criterion(
        2,
        "selection matches a straight-line reimplementation on 200 examples x 20 configs",
        mismatches == 0,
        f"{mismatches} mismatching configs",
    )


def test_criterion_3_bm25_top10_matches_bruteforce():
    from hint.transforms import tokenize

    rng = random.Random(7)
    vocab = [f"tok{i}" for i in range(60)]
    ds = make_corpus(1000, rng, vocab)
    index = build_index(ds)
    docs = [[t.text.lower() for t in ex.code_tokens] for ex in ds.examples]
    ids = [ex.id for ex in ds.examples]
    bad = 0
    for _ in range(100):
        words = [rng.choice(vocab) for _ in range(rng.randrange(1, 6))]
        hits = query(index, tuple(tokenize(" ".join(words))), top_n=10)
        oracle = bm25_oracle_scores(docs, words)
        expected = sorted(zip(ids, oracle), key=lambda pr: (-pr[1], pr[0]))[:10]
        got = [(h.example_id, h.score) for h in hits]
        if [g[0] for g in got] != [e[0] for e in expected] or any(
            abs(g[1] - e[1]) > 1e-9 for g, e in zip(got, expected)
        ):
            bad += 1
    criterion(
        3,
        "BM25 top-10 equals brute force on 1000 docs x 100 queries",
        bad == 0,
        f"{bad} mismatching queries",
    )


def test_criterion_4_ned_matches_levenshtein_oracle():
    rng = random.Random(11)
    vocab = [f"v{i}" for i in range(6)]
    bad = 0
    for _ in range(1000):
        a = [rng.choice(vocab) for _ in range(rng.randrange(1, 12))]
        b = [rng.choice(vocab) for _ in range(rng.randrange(1, 12))]
        if levenshtein(a, b) != levenshtein_oracle(a, b):
            bad += 1
        if abs(ned(a, b) - levenshtein_oracle(a, b) / len(a)) > 1e-12:
            bad += 1
        if ned(a, a) != 0.0:
            bad += 1
    indicator_ok = (
        ned(ClassLabel(1), ClassLabel(1)) == 0.0
        and ned(ClassLabel(1), ClassLabel(0)) == 1.0
    )
    criterion(
        4,
        "NED agrees with a DP Levenshtein oracle on 1000 pairs; class labels act as indicators",
        bad == 0 and indicator_ok,
        f"{bad} sequence mismatches, indicator ok={indicator_ok}",
    )


def _best_accuracy(result) -> float:
    return result.reports[result.best_iteration - 1].heldout_metrics["accuracy"]


def test_criterion_5_end_to_end_self_training_benefit():
    task = bundled_classification_task()
    data = (task.labeled, task.unlabeled, task.heldout)
    gaps = []
    for seed in range(10):
        full_cfg = PipelineConfig(
            task=TaskKind.CLASSIFICATION,
            iterations=3,
            epochs=10,
            lr=0.5,
            seed=seed,
            select_best_iteration=True,
        )
        base_cfg = PipelineConfig(
            task=TaskKind.CLASSIFICATION,
            iterations=3,
            epochs=10,
            lr=0.5,
            seed=seed,
            select_best_iteration=True,
            ablation="no-selection",
            objective=ObjectiveConfig(mu=0.0, use_reverse_term=False),
        )
        gaps.append(
            _best_accuracy(run(full_cfg, data=data))
            - _best_accuracy(run(base_cfg, data=data))
        )
    mean_gap = float(np.mean(gaps))
    p_value = float(stats.wilcoxon(gaps, alternative="two-sided").pvalue)
    # Margin frozen from calibration: observed mean gaps of +0.07..+0.14
    # across three disjoint seed decades; 0.02 sits well below all of them.
    ok = mean_gap > 0.02 and p_value < 0.05
    criterion(
        5,
        "full pipeline beats no-selection CE pseudo-labeling over 10 seeds (mean gap > 0.02, p < 0.05)",
        ok,
        f"mean gap {mean_gap:+.4f}, wilcoxon p {p_value:.4f}",
    )


def test_criterion_6_sce_beats_ce_under_heavy_noise():
    task = bundled_classification_task(label_noise=0.4)
    labeled, heldout = task.labeled, task.heldout
    vocab = vocabulary_from_dataset(labeled)
    cfg = PipelineConfig(task=TaskKind.CLASSIFICATION, epochs=30, lr=0.5)
    transform = base_transform_spec(cfg, labeled)

    def accuracy(model) -> float:
        hits = sum(
            model.predict(ex.code_tokens)[0] == ex.target for ex in heldout.examples
        )
        return hits / len(heldout)

    gaps = []
    for seed in range(10):
        init = BagOfTokensClassifier(vocab, labeled.num_classes, seed=seed)
        sce_model = init.train(
            list(labeled.examples), ObjectiveConfig(mu=0.0), transform, 30, 0.5, seed
        )
        ce_model = init.train(
            list(labeled.examples),
            ObjectiveConfig(mu=0.0, use_reverse_term=False),
            transform,
            30,
            0.5,
            seed,
        )
        gaps.append(accuracy(sce_model) - accuracy(ce_model))
    mean_gap = float(np.mean(gaps))
    # 0.01 is the smallest margin distinguishable from seed noise here
    # (paired standard error over 10 seeds). Calibration on this exact
    # setup measured +0.0006 +/- 0.0214: for a linear classifier under
    # symmetric label noise the population argmax is unchanged, so no
    # stable SCE-over-CE accuracy gap exists. Expected to FAIL honestly.
    ok = mean_gap > 0.01
    criterion(
        6,
        "SCE-trained classifier beats CE under 40% symmetric noise (mean gap > 0.01 over 10 seeds)",
        ok,
        f"mean gap {mean_gap:+.4f}",
    )


def test_criterion_7_selected_pseudo_labels_closer_to_gold():
    task = bundled_generation_task()
    data = (task.labeled, task.unlabeled, task.heldout)
    margins = []
    for seed in range(10):
        cfg = PipelineConfig(
            task=TaskKind.GENERATION,
            model="builtin-translator",
            iterations=1,
            epochs=8,
            lr=0.5,
            seed=seed,
        )
        rep = run(cfg, data=data).reports[0]
        margins.append(rep.mean_ned_all - rep.mean_ned_selected)
    ok = all(m > 0 for m in margins)
    criterion(
        7,
        "selected pseudo labels have strictly lower mean NED to gold than the full pool, all 10 seeds",
        ok,
        f"min margin {min(margins):+.4f}",
    )


def test_criterion_8_cli_determinism(tmp_path):
    task = make_classification_task(seed=7, n_labeled=40, n_unlabeled=120, n_heldout=60)
    d = tmp_path / "data"
    d.mkdir()
    save_dataset(task.labeled, d / "labeled.jsonl")
    save_dataset(task.unlabeled, d / "unlabeled.jsonl")
    save_dataset(task.heldout, d / "heldout.jsonl")

    def run_once(tag: str) -> tuple[bytes, bytes, bytes]:
        out = tmp_path / tag
        result = CliRunner().invoke(
            cli_main,
            [
                "run",
                "--task", "classification",
                "--labeled", str(d / "labeled.jsonl"),
                "--unlabeled", str(d / "unlabeled.jsonl"),
                "--heldout", str(d / "heldout.jsonl"),
                "--iterations", "2",
                "--epochs", "3",
                "--seed", "5",
                "--out", str(out),
                "--emit-selection-report", str(out / "decisions.jsonl"),
            ],
            catch_exceptions=False,
        )
        assert result.exit_code == 0, result.output
        return (
            (out / "report.json").read_bytes(),
            (out / "iterations.csv").read_bytes(),
            (out / "decisions.jsonl").read_bytes(),
        )

    ok = run_once("a") == run_once("b")
    criterion(
        8,
        "two identical CLI runs produce byte-identical selection and evaluation reports",
        ok,
    )


def test_criterion_9_metric_sanity():
    seq = ["def", "f", "(", "x", ")", ":", "return", "x"]
    identical_ok = (
        exact_match(seq, list(seq)) == 1
        and abs(lcs_ratio(seq, list(seq)) - 1.0) < 1e-12
        and abs(bleu4(seq, list(seq)) - 1.0) < 1e-12
        and abs(rouge_l(seq, list(seq)) - 1.0) < 1e-12
        and levenshtein(seq, list(seq)) == 0
    )
    golds = [1, 1, 1, 1, 0, 0]
    preds = [1, 1, 0, 0, 1, 0]
    _, _, f1 = classification_prf(preds, golds, positive_class=1)
    prf_ok = abs(f1 - 4 / 7) < 1e-9
    criterion(
        9,
        "identical sequences score perfectly on every metric; TP=2,FP=1,FN=2 gives F1=4/7",
        identical_ok and prf_ok,
        f"f1 err {abs(f1 - 4 / 7):.1e}",
    )


def test_criterion_10_adapter_conformance(tmp_path):
    task = make_classification_task(seed=7, n_labeled=40, n_unlabeled=120, n_heldout=60)
    cfg = PipelineConfig(
        task=TaskKind.CLASSIFICATION,
        model=f"adapter:{ECHO}",
        iterations=2,
        epochs=1,
        seed=0,
    )
    result = run(cfg, data=(task.labeled, task.unlabeled, task.heldout))
    pipeline_ok = len(result.reports) == 2

    broken = Path(__file__).parent / "fixtures" / "broken_adapter.py"
    model = ExternalAdapterModel(str(broken), TaskKind.CLASSIFICATION, num_classes=2)
    try:
        model.predict_batch(list(task.labeled.examples))
        broken_ok = False
    except ProtocolViolation:
        broken_ok = True
    except Exception:
        broken_ok = False
    criterion(
        10,
        "echo adapter drives a 2-iteration run; dropped-id adapter raises ProtocolViolation",
        pipeline_ok and broken_ok,
    )
