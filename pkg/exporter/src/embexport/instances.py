"""Instances TSV parsing (the same wire schema the training toolkit reads).

Columns: instance_id, lemma, language, context1, target_index1, context2,
target_index2 - tab separated, UTF-8, one header row. Tabs, newlines and
backslashes inside context fields are escaped as ``\\t``, ``\\n``, ``\\\\``.
"""

from dataclasses import dataclass

from . import ParseError

COLUMNS = (
    "instance_id",
    "lemma",
    "language",
    "context1",
    "target_index1",
    "context2",
    "target_index2",
)


@dataclass(frozen=True)
class Instance:
    instance_id: str
    context1: str
    context2: str


def _unescape(text, path, line):
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= len(text):
            raise ParseError(f"{path}:{line}: dangling backslash")
        nxt = text[i + 1]
        if nxt == "t":
            out.append("\t")
        elif nxt == "n":
            out.append("\n")
        elif nxt == "\\":
            out.append("\\")
        else:
            raise ParseError(f"{path}:{line}: unknown escape \\{nxt}")
        i += 2
    return "".join(out)


def parse_instances(path):
    with open(path, encoding="utf-8") as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or tuple(lines[0].split("\t")) != COLUMNS:
        raise ParseError(f"{path}:1: bad or missing header row")
    out = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(COLUMNS):
            raise ParseError(
                f"{path}:{lineno}: expected {len(COLUMNS)} columns, found {len(fields)}"
            )
        iid = fields[0]
        if iid in seen:
            raise ParseError(f"{path}:{lineno}: duplicate instance_id {iid!r}")
        seen.add(iid)
        out.append(
            Instance(
                instance_id=iid,
                context1=_unescape(fields[3], path, lineno),
                context2=_unescape(fields[5], path, lineno),
            )
        )
    return out
