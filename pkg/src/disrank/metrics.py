"""Ranking metrics: Spearman's rho with average-rank tie handling, MSE,
and per-language report assembly.

Disagreement labels are means of small integer sets, so ties are the norm,
not the exception. rho is therefore computed as the Pearson correlation of
average ranks, which reduces to the classic rank-difference formula
1 - 6*sum(d^2)/(N(N^2-1)) exactly when there are no ties; that closed form
is kept (``spearman_no_ties``) as a cross-check.

Constant vectors have no ranking, so correlation against them raises
DegenerateRankingError instead of returning a fake 0; report assembly
downgrades that to an NA entry with a warning.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRankingError, ValidationError

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("scope", "n", "spearman", "mse")


def average_ranks(values) -> np.ndarray:
    """1-based ascending ranks; ties get the mean of the positions they span.

    The rank sum is always N(N+1)/2 regardless of ties.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError(f"need a non-empty 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError("non-finite values cannot be ranked")
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0  # positions i+1 .. j+1
        i = j + 1
    return ranks


def spearman_rho(pred, gold) -> float:
    """Rank correlation: Pearson correlation of the average-rank vectors."""
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gold, dtype=np.float64)
    if p.shape != g.shape:
        raise ValidationError(f"length mismatch: {p.shape} vs {g.shape}")
    if p.size < 2:
        raise ValidationError(f"need >= 2 values, got {p.size}")
    for name, v in (("pred", p), ("gold", g)):
        if np.min(v) == np.max(v):
            raise DegenerateRankingError(
                f"{name} vector is constant; its ranking is undefined"
            )
    rp = average_ranks(p)
    rg = average_ranks(g)
    rp -= rp.mean()
    rg -= rg.mean()
    denom = math.sqrt(float(rp @ rp) * float(rg @ rg))
    return float(rp @ rg) / denom


def spearman_no_ties(pred, gold) -> float:
    """Rank-difference form 1 - 6*sum(d^2)/(N(N^2-1)); exact only without ties."""
    rp = average_ranks(pred)
    rg = average_ranks(gold)
    d = rp - rg
    n = rp.size
    return 1.0 - 6.0 * float(d @ d) / (n * (n * n - 1.0))


@dataclass
class LanguageMetrics:
    spearman: float  # None when undefined (too few items or constant vector)
    n: int
    mse: float


@dataclass
class MetricReport:
    spearman: float  # pooled over all instances; None when undefined
    mse: float
    n: int
    per_language: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def avg_spearman(self):
        """Unweighted mean of the defined per-language correlations."""
        defined = [m.spearman for m in self.per_language.values() if m.spearman is not None]
        if not defined:
            return None
        return sum(defined) / len(defined)

    @property
    def languages_in_avg(self) -> int:
        return sum(1 for m in self.per_language.values() if m.spearman is not None)


def _safe_rho(pred, gold, scope, warnings):
    if len(gold) < 2:
        warnings.append(f"{scope}: fewer than 2 instances, rho undefined")
        return None
    try:
        return spearman_rho(pred, gold)
    except DegenerateRankingError as e:
        warnings.append(f"{scope}: {e}")
        return None


def evaluate_report(predictions, gold) -> MetricReport:
    """Score predictions against gold labeled instances.

    ``predictions`` is an id -> value mapping covering every gold instance
    (anything missing is an error listing the ids). Emits the pooled rho and
    MSE plus per-language correlations; languages whose rho is undefined are
    reported as such and excluded from the unweighted average.
    """
    missing = sorted(
        inst.pair.instance_id
        for inst in gold
        if inst.pair.instance_id not in predictions
    )
    if missing:
        shown = ", ".join(missing[:10])
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        raise ValidationError(f"predictions missing for: {shown}{more}")
    if not gold:
        raise ValidationError("no gold instances to evaluate")

    pred_all, gold_all = [], []
    by_language = {}
    for inst in gold:
        p = float(predictions[inst.pair.instance_id])
        y = inst.mean_disagreement
        pred_all.append(p)
        gold_all.append(y)
        by_language.setdefault(inst.pair.language, ([], []))
        by_language[inst.pair.language][0].append(p)
        by_language[inst.pair.language][1].append(y)

    warnings = []
    pooled_rho = _safe_rho(pred_all, gold_all, "ALL", warnings)
    pooled_mse = float(np.mean((np.asarray(pred_all) - np.asarray(gold_all)) ** 2))

    per_language = {}
    for lang in sorted(by_language):
        lp, lg = by_language[lang]
        rho = _safe_rho(lp, lg, lang, warnings)
        lmse = float(np.mean((np.asarray(lp) - np.asarray(lg)) ** 2))
        per_language[lang] = LanguageMetrics(spearman=rho, n=len(lg), mse=lmse)

    for w in warnings:
        log.warning("%s", w)
    return MetricReport(
        spearman=pooled_rho,
        mse=pooled_mse,
        n=len(gold_all),
        per_language=per_language,
        warnings=warnings,
    )


def _fmt(value) -> str:
    return "NA" if value is None else f"{value:.6f}"


def write_report(report: MetricReport, path) -> None:
    """Report TSV: one row per language, then pooled ALL, then AVG.

    The AVG row's n column is the number of languages included in the
    unweighted mean; its mse is NA.
    """
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(REPORT_COLUMNS) + "\n")
        for lang in sorted(report.per_language):
            m = report.per_language[lang]
            f.write(f"{lang}\t{m.n}\t{_fmt(m.spearman)}\t{_fmt(m.mse)}\n")
        f.write(f"ALL\t{report.n}\t{_fmt(report.spearman)}\t{_fmt(report.mse)}\n")
        f.write(f"AVG\t{report.languages_in_avg}\t{_fmt(report.avg_spearman)}\tNA\n")
