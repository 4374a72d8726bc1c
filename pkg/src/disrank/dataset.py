"""Judgment/instance file parsing, disagreement labels, train/validation splits.

File formats (UTF-8, tab-separated, one header row):

* instances:  instance_id, lemma, language, context1, target_index1,
  context2, target_index2
* judgments:  instance_id, annotator_id, judgment
* labels:     instance_id, mean_disagreement, num_judgments

Tabs, newlines and backslashes embedded in context fields are escaped as
``\\t``, ``\\n`` and ``\\\\``.
"""

import logging
from dataclasses import dataclass, field

from .errors import InsufficientJudgmentsError, ParseError, ValidationError
from .rng import SplitMix64

log = logging.getLogger(__name__)

INSTANCES_COLUMNS = (
    "instance_id",
    "lemma",
    "language",
    "context1",
    "target_index1",
    "context2",
    "target_index2",
)
JUDGMENTS_COLUMNS = ("instance_id", "annotator_id", "judgment")
LABELS_COLUMNS = ("instance_id", "mean_disagreement", "num_judgments")

JUDGMENT_SCALE = (1, 2, 3, 4)
MAX_DISAGREEMENT = float(JUDGMENT_SCALE[-1] - JUDGMENT_SCALE[0])


@dataclass(frozen=True)
class UsePair:
    """Two uses of one lemma, each in its own context sentence."""

    instance_id: str
    lemma: str
    language: str
    context1: str
    context2: str
    target_index1: int
    target_index2: int

    def __post_init__(self):
        if not self.context1 or not self.context2:
            raise ValidationError(
                f"instance {self.instance_id!r}: contexts must be non-empty"
            )
        if self.target_index1 < 0 or self.target_index2 < 0:
            raise ValidationError(
                f"instance {self.instance_id!r}: target indices must be >= 0"
            )


@dataclass(frozen=True)
class JudgmentRecord:
    """One annotator's ordinal relatedness rating of one use pair."""

    instance_id: str
    annotator_id: str
    judgment: int

    def __post_init__(self):
        if self.judgment not in JUDGMENT_SCALE:
            raise ValidationError(
                f"instance {self.instance_id!r}: judgment {self.judgment} "
                f"outside the ordinal scale {JUDGMENT_SCALE}"
            )


@dataclass(frozen=True)
class LabeledInstance:
    """A use pair with its gold mean-disagreement score."""

    pair: UsePair
    mean_disagreement: float
    num_judgments: int

    def __post_init__(self):
        if not 0.0 <= self.mean_disagreement <= MAX_DISAGREEMENT:
            raise ValidationError(
                f"instance {self.pair.instance_id!r}: mean disagreement "
                f"{self.mean_disagreement} outside [0, {MAX_DISAGREEMENT}]"
            )
        if self.num_judgments < 2:
            raise ValidationError(
                f"instance {self.pair.instance_id!r}: needs >= 2 judgments"
            )


@dataclass
class DataSplit:
    train: list
    validation: list
    seed: int
    ratio: float


@dataclass
class LabelBuildResult:
    """Labeled instances plus the ids skipped for having < 2 judgments."""

    instances: list = field(default_factory=list)
    skipped: list = field(default_factory=list)


def escape_context(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def unescape_context(text: str, path=None, line=None) -> str:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= len(text):
            raise ParseError("dangling backslash in context field", path, line)
        nxt = text[i + 1]
        if nxt == "t":
            out.append("\t")
        elif nxt == "n":
            out.append("\n")
        elif nxt == "\\":
            out.append("\\")
        else:
            raise ParseError(f"unknown escape sequence \\{nxt}", path, line)
        i += 2
    return "".join(out)


def _read_rows(path, columns):
    """Yield (line_number, fields) for each data row, validating the header."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty file, expected a header row", path, 1)
    header = tuple(lines[0].split("\t"))
    if header != columns:
        raise ParseError(
            f"bad header {header!r}, expected {columns!r}", path, 1
        )
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(columns):
            raise ParseError(
                f"expected {len(columns)} columns, found {len(fields)}",
                path,
                lineno,
            )
        yield lineno, fields


def _parse_int(text, what, path, lineno):
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{what} is not an integer: {text!r}", path, lineno)


def parse_instances(path) -> list:
    """Parse an instances TSV into UsePairs, preserving row order."""
    pairs = []
    seen = set()
    for lineno, f in _read_rows(path, INSTANCES_COLUMNS):
        iid, lemma, language = f[0], f[1], f[2]
        if iid in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate instance_id {iid!r}")
        seen.add(iid)
        try:
            pair = UsePair(
                instance_id=iid,
                lemma=lemma,
                language=language,
                context1=unescape_context(f[3], path, lineno),
                context2=unescape_context(f[5], path, lineno),
                target_index1=_parse_int(f[4], "target_index1", path, lineno),
                target_index2=_parse_int(f[6], "target_index2", path, lineno),
            )
        except ValidationError as e:
            raise ValidationError(f"{path}:{lineno}: {e}") from None
        pairs.append(pair)
    return pairs


def parse_judgments(path) -> list:
    """Parse a judgments TSV; ratings outside the 1-4 scale are rejected."""
    records = []
    for lineno, f in _read_rows(path, JUDGMENTS_COLUMNS):
        value = _parse_int(f[2], "judgment", path, lineno)
        try:
            records.append(JudgmentRecord(f[0], f[1], value))
        except ValidationError as e:
            raise ValidationError(f"{path}:{lineno}: {e}") from None
    return records


def mean_pairwise_disagreement(judgments) -> float:
    """Mean of |a - b| over all unordered pairs of judgments.

    Integer arithmetic until the single final division, so the result is
    exactly the correctly rounded rational and matches any brute force
    enumeration bit for bit.
    """
    n = len(judgments)
    if n < 2:
        raise InsufficientJudgmentsError(
            f"need >= 2 judgments, got {n}; pairwise disagreement is undefined"
        )
    total = 0
    for i in range(n):
        ji = judgments[i]
        for j in range(i + 1, n):
            total += abs(ji - judgments[j])
    return total / (n * (n - 1) // 2)


def build_labeled_dataset(pairs, judgments) -> LabelBuildResult:
    """Join pairs with their judgments and compute gold labels.

    Pairs with fewer than two judgments are skipped (a single annotator has
    no disagreement) and reported, never silently dropped. Output is sorted
    by instance_id.
    """
    by_id = {p.instance_id: p for p in pairs}
    grouped = {}
    for rec in judgments:
        if rec.instance_id not in by_id:
            raise ValidationError(
                f"judgment references unknown instance_id {rec.instance_id!r}"
            )
        grouped.setdefault(rec.instance_id, []).append(rec.judgment)

    result = LabelBuildResult()
    for iid in sorted(by_id):
        values = grouped.get(iid, [])
        if len(values) < 2:
            result.skipped.append(iid)
            continue
        result.instances.append(
            LabeledInstance(
                pair=by_id[iid],
                mean_disagreement=mean_pairwise_disagreement(values),
                num_judgments=len(values),
            )
        )
    if result.skipped:
        log.warning(
            "skipped %d instance(s) with fewer than 2 judgments: %s",
            len(result.skipped),
            ", ".join(result.skipped[:10]),
        )
    return result


def instance_key(item) -> str:
    """instance_id of a LabeledInstance, UsePair, or (id, value) pair."""
    if hasattr(item, "pair"):
        return item.pair.instance_id
    if hasattr(item, "instance_id"):
        return item.instance_id
    return item[0]


def split_train_validation(data, ratio: float, seed: int) -> DataSplit:
    """Deterministic shuffled split; both sides always non-empty.

    Instances are sorted by instance_id first so the outcome depends only on
    set membership, then Fisher-Yates shuffled with a splitmix64 stream
    seeded from ``seed``. Train size is round(ratio * N), clamped to keep
    both sides non-empty.
    """
    if not 0.0 < ratio < 1.0:
        raise ValidationError(f"split ratio must be in (0, 1), got {ratio}")
    if len(data) < 2:
        raise ValidationError(f"need >= 2 instances to split, got {len(data)}")
    items = sorted(data, key=instance_key)
    SplitMix64(seed).shuffle(items)
    n = len(items)
    n_train = int(ratio * n + 0.5)
    n_train = min(max(n_train, 1), n - 1)
    return DataSplit(
        train=items[:n_train], validation=items[n_train:], seed=seed, ratio=ratio
    )


def write_labels(instances, path) -> None:
    """Write a labels TSV (6 decimal places for the disagreement score)."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(LABELS_COLUMNS) + "\n")
        for inst in instances:
            f.write(
                f"{inst.pair.instance_id}\t{inst.mean_disagreement:.6f}"
                f"\t{inst.num_judgments}\n"
            )


def read_labels(path) -> list:
    """Read a labels TSV back as (instance_id, mean_disagreement, num) tuples."""
    rows = []
    seen = set()
    for lineno, f in _read_rows(path, LABELS_COLUMNS):
        iid = f[0]
        if iid in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate instance_id {iid!r}")
        seen.add(iid)
        try:
            value = float(f[1])
        except ValueError:
            raise ParseError(f"bad mean_disagreement {f[1]!r}", path, lineno)
        rows.append((iid, value, _parse_int(f[2], "num_judgments", path, lineno)))
    return rows
