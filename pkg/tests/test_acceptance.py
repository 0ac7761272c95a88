"""End-to-end acceptance gate.

Each test prints one PASS/FAIL line and enforces its stated tolerance and
runtime budget.  The suite runs on synthetic data only; branch d uses the
deterministic hash embedding throughout.
"""

import json
import time

import numpy as np
import pytest

from vtfusion import audio_dsp as dsp
from vtfusion import cli, dataset, fusion, mfcc as mfcc_mod, text_features
from vtfusion import neural as nn
from vtfusion.neural import gradcheck
from vtfusion.synth import make_demo_corpus, make_separable_bundles

from oracles import (
    chi2_cdf_quad,
    f_cdf_quad,
    naive_dft,
    spectral_summary_reference,
    time_summary_reference,
)


def report(criterion, ok, detail):
    line = f"CRITERION {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def separable_data():
    return make_separable_bundles(n=200, seed=11, liwc_dim=6,
                                  mfcc_shape=(13, 24), separation=2.0)


@pytest.fixture(scope="module")
def cv_all_branches(separable_data):
    bundles, labels = separable_data
    cfg = fusion.TrainConfig(seed=0)
    start = time.monotonic()
    result = fusion.cross_validate(bundles, labels, cfg, k=10, epochs_override=50)
    return result, time.monotonic() - start


def test_criterion_01_dsp_oracle_equivalence():
    start = time.monotonic()
    rng = np.random.default_rng(42)

    # STFT vs naive O(N^2) DFT on 200 random frames
    max_abs = 0.0
    for _ in range(200):
        k_size = int(rng.integers(8, 513)) * 2  # even K up to 1024
        samples = rng.normal(0.0, 0.5, k_size)
        clip = dsp.AudioClip(samples=samples, sample_rate=22050)
        spec = dsp.stft(clip, dsp.FrameConfig(k_size, k_size))
        ref = naive_dft(samples * dsp.hann_window(k_size))
        max_abs = max(max_abs, float(np.max(np.abs(spec.bins[0] - ref))))

    # time and frequency summaries vs the straight-line reimplementation
    max_rel = 0.0
    for _ in range(5):
        samples = rng.normal(0.0, 0.3, 6000)
        clip = dsp.AudioClip(samples=samples, sample_rate=11025)
        cfg = dsp.FrameConfig(512, 256)
        got_t = dsp.extract_time_summary(clip, cfg)
        want_t = np.asarray(time_summary_reference(list(samples), 512, 256))
        got_s = dsp.extract_spectral_summary(clip, cfg, split_hz=2000.0)
        want_s = np.asarray(spectral_summary_reference(list(samples), 512, 256,
                                                       11025, 2000.0))
        for got, want in ((got_t, want_t), (got_s, want_s)):
            rel = np.abs(got - want) / np.maximum(np.abs(want), 1e-300)
            rel[want == 0.0] = np.abs(got[want == 0.0])
            max_rel = max(max_rel, float(rel.max()))

    elapsed = time.monotonic() - start
    ok = max_abs < 1e-6 and max_rel < 1e-9 and elapsed < 30.0
    report(1, ok, f"stft max abs err {max_abs:.2e} (<1e-6), feature max rel err "
                  f"{max_rel:.2e} (<1e-9), {elapsed:.1f}s (<30s)")


def test_criterion_02_dimensional_contract():
    start = time.monotonic()
    rng = np.random.default_rng(7)
    ok = True
    for i in range(50):
        rate = int(rng.choice([22050, 16000, 11000]))
        duration = float(rng.uniform(0.3, 1.2))
        samples = rng.normal(0.0, 0.3, int(rate * duration))
        clip = dsp.AudioClip(samples=samples, sample_rate=rate)
        cfg = dsp.FrameConfig.for_rate(rate)
        ok = ok and dsp.extract_time_summary(clip, cfg).shape == (30,)
        ok = ok and dsp.extract_spectral_summary(clip, cfg).shape == (50,)
        ok = ok and mfcc_mod.mfcc(clip, cfg).shape[0] == 39
    elapsed = time.monotonic() - start
    ok = ok and elapsed < 10.0
    report(2, ok, f"50 clips all 30/50-dim summaries and 39 MFCC channels, "
                  f"{elapsed:.1f}s (<10s)")


def _fd_check(loss_fn, params, analytic, rng, max_entries=12):
    out = gradcheck.grad_check(loss_fn, params, analytic,
                               max_entries=max_entries, rng=rng)
    return max(out.values()) if out else 0.0


def test_criterion_03_gradient_suite():
    start = time.monotonic()
    rng = np.random.default_rng(5)
    worst = {}

    def weighted(layer, x, name):
        w = rng.normal(0, 1, layer.forward(x, train=True).shape)

        def loss_fn():
            return float(np.sum(layer.forward(x, train=True) * w))

        layer.zero_grads()
        loss_fn()
        layer.backward(w)
        if layer.params:
            worst[name] = _fd_check(loss_fn, layer.params, layer.grads, rng)

    weighted(nn.Dense(5, 4, rng), rng.normal(0, 1, (6, 5)), "dense")
    weighted(nn.Conv2d(2, 3, rng), rng.normal(0, 1, (2, 2, 5, 6)), "conv2d")
    weighted(nn.BatchNorm(3), rng.normal(0, 1, (8, 3)), "batchnorm2d")
    weighted(nn.BatchNorm(2), rng.normal(0, 1, (3, 2, 4, 4)), "batchnorm4d")
    weighted(nn.LSTM(3, 4, rng), rng.normal(0, 1, (2, 5, 3)), "lstm")
    weighted(nn.BiLSTM(2, 3, rng), rng.normal(0, 1, (2, 4, 2)), "bilstm")
    weighted(nn.Attention(4, rng), rng.normal(0, 1, (2, 5, 4)), "attention")

    logits = rng.normal(0, 1, (6, 2))
    target = fusion.one_hot(rng.integers(0, 2, 6))
    head = nn.SoftmaxCrossEntropy()

    def head_loss():
        loss, _ = head.forward(logits, target)
        return loss

    head.forward(logits, target)
    worst["softmax_ce"] = _fd_check(head_loss, {"logits": logits},
                                    {"logits": head.backward()}, rng)

    # full four-branch fusion model on a fixed small batch (dropout off,
    # linear activations keep the loss surface kink-free for differencing)
    bundles, labels = make_separable_bundles(n=8, seed=9, liwc_dim=4,
                                             mfcc_shape=(13, 24))
    cfg = fusion.TrainConfig(hidden_layers=1, dropout=0.0, hidden_nodes=32,
                             activation="linear", epochs=1, seed=0)
    model = fusion.FusionModel(cfg, liwc_dim=4, mfcc_shape=(13, 24))
    target = fusion.one_hot(labels[:6])
    batch = bundles[:6]

    def model_loss():
        out = model.forward(batch, train=True)
        loss, _ = model.loss_head.forward(out["logits"], target)
        return loss

    model.zero_grads()
    model_loss()
    model.backward(model.loss_head.backward())
    grads = {k: v.copy() for k, v in model.grads.items()}
    per_block = gradcheck.grad_check(model_loss, model.params, model.grads,
                                     max_entries=6, rng=rng)
    # per-channel shift parameters that the next normalization cancels have
    # true gradient ~0; finite differences only see roundoff noise there
    full = max((err for name, err in per_block.items()
                if np.max(np.abs(grads[name])) > 1e-6), default=0.0)
    worst["fusion_model"] = full

    elapsed = time.monotonic() - start
    worst_err = max(worst.values())
    ok = worst_err < 1e-4 and elapsed < 120.0
    report(3, ok, f"max relative error {worst_err:.2e} (<1e-4) over "
                  f"{len(worst)} blocks, {elapsed:.1f}s (<2min)")


def test_criterion_04_optimization_sanity(cv_all_branches):
    result, elapsed = cv_all_branches
    mean_f1 = result["mean_f1"]
    ok = mean_f1 >= 0.90 and elapsed < 300.0
    report(4, ok, f"10-fold CV mean F1 {mean_f1:.4f} (>=0.90) on the "
                  f"200-segment separable set, 50-epoch override, "
                  f"{elapsed:.0f}s (<300s)")


def test_criterion_05_ablation_ordering(separable_data, cv_all_branches):
    bundles, labels = separable_data
    cfg_bc = fusion.TrainConfig(seed=0, branches=("b", "c"))
    result_bc = fusion.cross_validate(bundles, labels, cfg_bc, k=10,
                                      epochs_override=50)
    all_f1 = cv_all_branches[0]["mean_f1"]
    bc_f1 = result_bc["mean_f1"]
    ok = all_f1 >= bc_f1 - 0.02
    report(5, ok, f"all-branch mean F1 {all_f1:.4f} >= pair {{b,c}} "
                  f"{bc_f1:.4f} - 0.02")


def test_criterion_06_statistics_fixtures():
    start = time.monotonic()

    # ANOVA on identical groups
    identical = dataset.anova_oneway([[1.0, 2.0, 3.0]] * 3)
    ok = identical["F"] == 0.0 and identical["p_value"] == 1.0

    # textbook three-group ANOVA vs quadrature oracle
    groups = [[6.0, 8.0, 4.0, 5.0, 3.0, 4.0],
              [8.0, 12.0, 9.0, 11.0, 6.0, 8.0],
              [13.0, 9.0, 11.0, 8.0, 7.0, 12.0]]
    out = dataset.anova_oneway(groups)
    p_ref = 1.0 - f_cdf_quad(out["F"], 2, 15)
    ok = ok and abs(out["p_value"] - p_ref) < 1e-6

    # Bartlett on exactly identity-correlation data: orthogonal mean-zero
    # columns make ln det(R) = 0, statistic 0, p = 1
    base = np.array([[1, 1, 1], [1, -1, 1], [-1, 1, 1], [-1, -1, 1],
                     [1, 1, -1], [1, -1, -1], [-1, 1, -1], [-1, -1, -1]],
                    dtype=np.float64)
    bart = text_features.bartlett_sphericity(base)
    ok = ok and bart["p_value"] == pytest.approx(1.0, abs=1e-12)
    p_chi_ref = 1.0 - chi2_cdf_quad(bart["statistic"], bart["dof"]) if bart["statistic"] > 0 else 1.0
    ok = ok and abs(bart["p_value"] - p_chi_ref) < 1e-6

    # PCA on collinear data: one component explains all the variance
    t = np.linspace(-1, 1, 40)
    collinear = np.column_stack([t, 2.0 * t, -0.5 * t])
    model = text_features.pca_fit(collinear, variance_target=0.95)
    ok = ok and model.n_components == 1
    ok = ok and model.explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-12)

    elapsed = time.monotonic() - start
    ok = ok and elapsed < 5.0
    report(6, ok, f"ANOVA F=0/p=1, quadrature match <1e-6, Bartlett p=1, "
                  f"collinear PCA 100% in one component, {elapsed:.1f}s (<5s)")


def test_criterion_07_determinism(tmp_path):
    corpus = tmp_path / "corpus"
    manifest = make_demo_corpus(corpus, n_segments=8, seed=3,
                                sample_rate=11000, duration=0.8)
    stores = []
    for name in ("s1", "s2"):
        store = tmp_path / name
        code = cli.main(["extract", "--manifest", str(manifest),
                         "--sample-rate", "11000", "--out", str(store)])
        assert code == 0
        stores.append(store)
    ok = (stores[0] / "features.jsonl").read_bytes() == \
         (stores[1] / "features.jsonl").read_bytes()
    for f in sorted((stores[0] / "arrays").iterdir()):
        ok = ok and f.read_bytes() == (stores[1] / "arrays" / f.name).read_bytes()

    cv_dirs = []
    for name in ("cv1", "cv2"):
        out = tmp_path / name
        code = cli.main(["crossval", "--store", str(stores[0]),
                         "--out", str(out), "--folds", "2", "--seed", "0",
                         "--hidden-nodes", "32", "--hidden-layers", "1",
                         "--dropout", "0.0", "--epochs", "1"])
        assert code == 0
        cv_dirs.append(out)
    for rel in ("fold_metrics.csv", "learning_curves.csv", "attention_weights.csv"):
        ok = ok and (cv_dirs[0] / rel).read_bytes() == (cv_dirs[1] / rel).read_bytes()
    s1 = json.loads((cv_dirs[0] / "summary.json").read_text())
    s2 = json.loads((cv_dirs[1] / "summary.json").read_text())
    ok = ok and s1["mean_f1"] == s2["mean_f1"] and s1["fold_f1"] == s2["fold_f1"]
    report(7, ok, "extract and crossval outputs byte-identical across reruns")


def test_criterion_08_metric_correctness():
    y_true = np.concatenate([np.ones(633, dtype=int), np.zeros(662, dtype=int)])
    y_pred = np.ones(1295, dtype=int)
    f1 = fusion.metrics_from_predictions(y_true, y_pred).f1
    ok = abs(f1 - 0.6566) <= 1e-4
    report(8, ok, f"all-positive F1 on 633/662 split = {f1:.6f} (0.6566 +/- 1e-4)")


def test_criterion_09_grid_enumeration():
    n = len(fusion.enumerate_grid())
    ok = n == 864
    report(9, ok, f"hyperparameter grid enumerates {n} configurations (= 864)")
