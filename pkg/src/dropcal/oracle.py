"""Deliberately naive reference implementations.

These use plain Python loops and the standard library only, so they share
no code path with the vectorized/compiled kernels they are checked against.
"""

import math
import random


def naive_in_bin(value, m, k):
    hi = (k + 1) / m
    if k == 0:
        return value <= hi
    return k / m < value <= hi


def naive_binned_error(values, flags, m):
    """O(n * m) double loop: for each bin, scan every record.

    ``flags`` holds the observed 0/1 outcome (correct for ECE, wrong for UCE).
    """
    n = len(values)
    total = 0.0
    for k in range(m):
        count = 0
        sum_values = 0.0
        sum_flags = 0.0
        for v, f in zip(values, flags):
            if naive_in_bin(v, m, k):
                count += 1
                sum_values += v
                sum_flags += f
        if count:
            total += (count / n) * abs(sum_flags / count - sum_values / count)
    return total


def naive_ece(records, m):
    return naive_binned_error(
        [r.confidence for r in records],
        [1.0 if r.predicted == r.label else 0.0 for r in records],
        m,
    )


def naive_uce(records, m):
    return naive_binned_error(
        [r.uncertainty for r in records],
        [1.0 if r.predicted != r.label else 0.0 for r in records],
        m,
    )


def naive_softmax(z, t=1.0):
    top = max(z)
    e = [math.exp((v - top) / t) for v in z]
    s = sum(e)
    return [v / s for v in e]


def naive_mc_integrate(samples, t=1.0):
    n_classes = len(samples[0])
    acc = [0.0] * n_classes
    for z in samples:
        for c, p in enumerate(naive_softmax(z, t)):
            acc[c] += p
    return [a / len(samples) for a in acc]


def naive_nll(logit_sets, labels, t=1.0):
    total = 0.0
    for samples, y in zip(logit_sets, labels):
        total -= math.log(max(naive_mc_integrate(samples, t)[y], 1e-300))
    return total


def random_records(rng: random.Random, n, n_classes):
    """Random PredictionRecord-like tuples with confidences in [1/C, 1]."""
    from dropcal.binned_metrics import PredictionRecord

    out = []
    for _ in range(n):
        conf = rng.uniform(1.0 / n_classes, 1.0)
        if rng.random() < 0.05:
            conf = rng.choice([1.0 / n_classes, 1.0, round(conf, 1)])
        unc = rng.random()
        if rng.random() < 0.05:
            unc = rng.choice([0.0, 1.0, round(unc, 1)])
        label = rng.randrange(n_classes)
        predicted = label if rng.random() < conf else rng.randrange(n_classes)
        out.append(PredictionRecord(conf, unc, predicted, label))
    return out


def check_binned_metrics(instances=1000, seed=0, bins=(1, 2, 15, 50), max_n=500):
    """Compare library ECE/UCE with the naive loops; returns a list of mismatches."""
    from dropcal.binned_metrics import Records, ece, uce

    rng = random.Random(seed)
    mismatches = []
    for i in range(instances):
        n = rng.randint(1, max_n)
        m = bins[i % len(bins)]
        records = random_records(rng, n, rng.randint(2, 10))
        cols = Records.from_records(records)
        got = (ece(cols, m), uce(cols, m))
        want = (naive_ece(records, m), naive_uce(records, m))
        if got != want:
            mismatches.append({"instance": i, "n": n, "m": m, "got": got, "want": want})
    return mismatches


def check_prob_core(instances=100, seed=0, rel_tol=1e-10):
    """Compare MC integration and NLL against the naive loops."""
    import numpy as np

    from dropcal.prob_core import mc_integrate_batch, nll_array

    rng = np.random.default_rng(seed)
    mismatches = []
    for i in range(instances):
        n, n_passes, n_classes = rng.integers(1, 20), rng.integers(1, 30), rng.integers(2, 8)
        logits = rng.normal(0.0, 3.0, size=(n, n_passes, n_classes))
        labels = rng.integers(0, n_classes, size=n)
        t = float(np.exp(rng.uniform(-2.0, 2.0)))
        probs = mc_integrate_batch(logits, t)
        want_probs = [naive_mc_integrate(s.tolist(), t) for s in logits]
        if not np.allclose(probs, want_probs, rtol=rel_tol, atol=1e-15):
            mismatches.append({"instance": i, "check": "mc_integrate"})
        got = nll_array(logits, labels, t)
        want = naive_nll(logits.tolist(), labels.tolist(), t)
        if not math.isclose(got, want, rel_tol=rel_tol, abs_tol=1e-12):
            mismatches.append({"instance": i, "check": "nll", "got": got, "want": want})
    return mismatches
