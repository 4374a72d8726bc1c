import math

import numpy as np
import pytest

from disrank.dataset import LabeledInstance, UsePair
from disrank.errors import DegenerateRankingError, ValidationError
from disrank.metrics import (
    average_ranks,
    evaluate_report,
    spearman_no_ties,
    spearman_rho,
    write_report,
)


def naive_average_ranks(values):
    """Independent O(n^2) average-rank computation."""
    out = []
    for v in values:
        less = sum(1 for u in values if u < v)
        equal = sum(1 for u in values if u == v)
        out.append(less + (equal + 1) / 2.0)
    return out


def naive_pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    return cov / math.sqrt(va * vb)


def gold_instance(iid, language, value):
    pair = UsePair(iid, "lemma", language, "ctx a", "ctx b", 0, 0)
    return LabeledInstance(pair, value, 2)


# ------------------------------------------------------------- ranks


def test_average_ranks_examples():
    assert average_ranks([10.0, 20.0, 30.0]).tolist() == [1.0, 2.0, 3.0]
    assert average_ranks([5.0, 5.0]).tolist() == [1.5, 1.5]
    assert average_ranks([3.0, 1.0, 3.0, 2.0]).tolist() == [3.5, 1.0, 3.5, 2.0]


def test_average_ranks_sum_invariant(rng):
    for _ in range(200):
        n = int(rng.integers(1, 12))
        values = rng.integers(0, 5, size=n).astype(float)
        ranks = average_ranks(values)
        assert abs(ranks.sum() - n * (n + 1) / 2.0) < 1e-9


def test_average_ranks_against_naive(rng):
    for _ in range(300):
        n = int(rng.integers(1, 10))
        values = rng.integers(0, 4, size=n).astype(float)
        assert np.allclose(average_ranks(values), naive_average_ranks(values), atol=1e-12)


def test_average_ranks_rejects_bad_input():
    with pytest.raises(ValidationError):
        average_ranks([])
    with pytest.raises(ValidationError):
        average_ranks([1.0, float("nan")])


# ------------------------------------------------------------- spearman


def test_spearman_identity_and_reversal():
    x = [0.3, 1.2, 2.5, 0.9, 3.1]
    assert spearman_rho(x, x) == pytest.approx(1.0, abs=1e-12)
    assert spearman_rho(x, [-v for v in x]) == pytest.approx(-1.0, abs=1e-12)


def test_spearman_closed_form_example():
    rho = spearman_rho([1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 4.0])
    assert rho == pytest.approx(0.8, abs=1e-12)
    closed = spearman_no_ties([1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 4.0])
    assert closed == pytest.approx(0.8, abs=1e-12)


def test_spearman_matches_closed_form_without_ties(rng):
    for _ in range(300):
        n = int(rng.integers(2, 12))
        pred = rng.permutation(n).astype(float)
        gold = rng.permutation(n).astype(float)
        assert spearman_rho(pred, gold) == pytest.approx(
            spearman_no_ties(pred, gold), abs=1e-12
        )


def test_spearman_tie_oracle(rng):
    for _ in range(500):
        n = int(rng.integers(2, 8))
        pred = rng.integers(0, 4, size=n).astype(float)
        gold = rng.integers(0, 4, size=n).astype(float)
        if pred.min() == pred.max() or gold.min() == gold.max():
            continue
        expected = naive_pearson(naive_average_ranks(pred), naive_average_ranks(gold))
        got = spearman_rho(pred, gold)
        assert abs(got - expected) < 1e-12
        assert -1.0 - 1e-12 <= got <= 1.0 + 1e-12


def test_spearman_symmetry(rng):
    for _ in range(100):
        a = rng.integers(0, 5, size=6).astype(float)
        b = rng.integers(0, 5, size=6).astype(float)
        if a.min() == a.max() or b.min() == b.max():
            continue
        assert abs(spearman_rho(a, b) - spearman_rho(b, a)) < 1e-12


def test_spearman_monotone_transform_invariance(rng):
    for _ in range(50):
        a = rng.standard_normal(8)
        b = rng.standard_normal(8)
        base = spearman_rho(a, b)
        assert spearman_rho(np.exp(a), b) == pytest.approx(base, abs=1e-12)
        assert spearman_rho(a, 3.0 * b + 7.0) == pytest.approx(base, abs=1e-12)
        assert spearman_rho(np.exp(a), 0.5 * b + 1.0) == pytest.approx(base, abs=1e-12)


def test_spearman_degenerate_and_mismatch():
    with pytest.raises(DegenerateRankingError):
        spearman_rho([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(DegenerateRankingError):
        spearman_rho([1.0, 2.0, 3.0], [5.0, 5.0, 5.0])
    with pytest.raises(ValidationError):
        spearman_rho([1.0], [1.0])
    with pytest.raises(ValidationError):
        spearman_rho([1.0, 2.0], [1.0, 2.0, 3.0])


# ------------------------------------------------------------- report


def test_report_single_language_proportional():
    gold = [gold_instance(f"p{i}", "en", v) for i, v in enumerate([0.0, 1.0, 2.0, 3.0])]
    pred = {f"p{i}": 0.5 * v + 0.1 for i, v in enumerate([0.0, 1.0, 2.0, 3.0])}
    report = evaluate_report(pred, gold)
    assert report.spearman == pytest.approx(1.0, abs=1e-12)
    assert report.per_language["en"].spearman == pytest.approx(1.0, abs=1e-12)
    assert report.avg_spearman == pytest.approx(1.0, abs=1e-12)
    assert report.n == 4


def test_report_two_language_average():
    # en: rank difference sum d^2 = 2 -> rho 0.8; de: d^2 = 6 -> rho 0.4
    gold = [gold_instance(f"en{i}", "en", v) for i, v in enumerate([0.0, 1.0, 2.0, 3.0])]
    gold += [gold_instance(f"de{i}", "de", v) for i, v in enumerate([0.0, 1.0, 2.0, 3.0])]
    pred = {"en0": 1.0, "en1": 3.0, "en2": 2.0, "en3": 4.0}
    pred.update({"de0": 2.0, "de1": 3.0, "de2": 1.0, "de3": 4.0})
    report = evaluate_report(pred, gold)
    assert report.per_language["en"].spearman == pytest.approx(0.8, abs=1e-12)
    assert report.per_language["de"].spearman == pytest.approx(0.4, abs=1e-12)
    assert report.avg_spearman == pytest.approx(0.6, abs=1e-12)
    assert sum(m.n for m in report.per_language.values()) == report.n


def test_report_missing_prediction():
    gold = [gold_instance("p1", "en", 1.0), gold_instance("p2", "en", 2.0)]
    with pytest.raises(ValidationError, match="p2"):
        evaluate_report({"p1": 1.0}, gold)


def test_report_undefined_language_excluded():
    gold = [gold_instance(f"en{i}", "en", float(i % 4)) for i in range(4)]
    gold += [gold_instance("zh0", "zh", 1.0), gold_instance("zh1", "zh", 1.0)]
    pred = {inst.pair.instance_id: inst.mean_disagreement for inst in gold}
    report = evaluate_report(pred, gold)
    assert report.per_language["zh"].spearman is None
    assert report.per_language["en"].spearman == pytest.approx(1.0, abs=1e-12)
    assert report.avg_spearman == pytest.approx(1.0, abs=1e-12)
    assert any("zh" in w for w in report.warnings)


def test_report_tsv_format(tmp_path):
    gold = [gold_instance(f"en{i}", "en", float(i)) for i in range(3)]
    gold += [gold_instance(f"de{i}", "de", float(i)) for i in range(3)]
    pred = {inst.pair.instance_id: inst.mean_disagreement for inst in gold}
    report = evaluate_report(pred, gold)
    path = str(tmp_path / "report.tsv")
    write_report(report, path)
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[0] == "scope\tn\tspearman\tmse"
    assert lines[1] == "de\t3\t1.000000\t0.000000"
    assert lines[2] == "en\t3\t1.000000\t0.000000"
    assert lines[3] == "ALL\t6\t1.000000\t0.000000"
    assert lines[4] == "AVG\t2\t1.000000\tNA"
