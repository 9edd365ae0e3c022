"""Corpus data model, tokenization, and dataset ingestion.

Datasets are line-delimited JSON, one record per line:
    {"id": str, "article_sentences": [str, ...], "highlights": [str, ...]}
Strings are space-separated tokens (the corpus is assumed pre-tokenized).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

log = logging.getLogger(__name__)


class DatasetError(ValueError):
    """Raised for malformed dataset files (names the offending line)."""


def tokenize(raw: str) -> list[str]:
    """Lowercase and split on whitespace runs. Total: empty input gives []."""
    return raw.lower().split()


@dataclass(frozen=True)
class Sentence:
    index: int
    tokens: tuple[str, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("sentence has no tokens")
        for t in self.tokens:
            if not t or any(c.isspace() for c in t):
                raise ValueError(f"bad token {t!r}")


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[Sentence, ...]

    def __post_init__(self):
        if not self.sentences:
            raise ValueError("document has no sentences")
        for i, s in enumerate(self.sentences):
            if s.index != i:
                raise ValueError("sentence indices must be 0..N-1 contiguous")

    def __len__(self) -> int:
        return len(self.sentences)

    def tokens_at(self, i: int) -> tuple[str, ...]:
        return self.sentences[i].tokens


@dataclass(frozen=True)
class ReferenceSummary:
    sentences: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.sentences or any(not s for s in self.sentences):
            raise ValueError("reference summary sentences must be non-empty")


@dataclass(frozen=True)
class Example:
    document: Document
    reference: ReferenceSummary


def document_from_strings(doc_id: str, sentences: list[str]) -> Document:
    return Document(
        id=doc_id,
        sentences=tuple(
            Sentence(i, tuple(tokenize(s))) for i, s in enumerate(sentences)
        ),
    )


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: int = 0
    reject_reasons: list[str] = None

    def __post_init__(self):
        if self.reject_reasons is None:
            self.reject_reasons = []


def _parse_record(lineno: int, line: str) -> Example | None:
    """Parse one dataset line. Returns None (with a diagnostic appended by the
    caller) only for empty-content records; structural problems raise."""
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(rec, dict):
        raise DatasetError(f"line {lineno}: record is not an object")
    for field in ("id", "article_sentences", "highlights"):
        if field not in rec:
            raise DatasetError(f"line {lineno}: missing field {field!r}")
    if not isinstance(rec["id"], str):
        raise DatasetError(f"line {lineno}: id must be a string")
    for field in ("article_sentences", "highlights"):
        v = rec[field]
        if not isinstance(v, list) or any(not isinstance(s, str) for s in v):
            raise DatasetError(f"line {lineno}: {field} must be a list of strings")
    article = [tokenize(s) for s in rec["article_sentences"]]
    highlights = [tokenize(s) for s in rec["highlights"]]
    if not article or any(not s for s in article):
        return None
    if not highlights or any(not s for s in highlights):
        return None
    doc = Document(
        id=rec["id"],
        sentences=tuple(Sentence(i, tuple(t)) for i, t in enumerate(article)),
    )
    ref = ReferenceSummary(sentences=tuple(tuple(t) for t in highlights))
    return Example(document=doc, reference=ref)


def ingest_dataset(path) -> tuple[list[Example], IngestReport]:
    """Load a dataset, rejecting (not silently skipping) empty records.

    Malformed lines raise DatasetError naming the line number; records with an
    empty article or empty highlights are counted as rejected with a reason.
    """
    examples: list[Example] = []
    report = IngestReport()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            ex = _parse_record(lineno, line)
            if ex is None:
                report.rejected += 1
                reason = f"line {lineno}: empty article or highlights"
                report.reject_reasons.append(reason)
                log.warning("rejected record: %s", reason)
            else:
                examples.append(ex)
                report.accepted += 1
    return examples, report


def load_dataset(path) -> list[Example]:
    """One Example per line, in file order. Rejects are logged as warnings."""
    examples, _ = ingest_dataset(path)
    return examples


def load_documents(path) -> list[Document]:
    """Load article documents only; highlights are optional and ignored."""
    docs: list[Document] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(rec, dict) or "id" not in rec or "article_sentences" not in rec:
                raise DatasetError(f"line {lineno}: missing field 'id' or 'article_sentences'")
            article = [tokenize(s) for s in rec["article_sentences"]]
            if not article or any(not s for s in article):
                raise DatasetError(f"line {lineno}: empty article")
            docs.append(
                Document(
                    id=rec["id"],
                    sentences=tuple(Sentence(i, tuple(t)) for i, t in enumerate(article)),
                )
            )
    return docs


def write_dataset(examples: list[Example], path) -> None:
    """Write examples in the canonical line-delimited JSON form."""
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            rec = {
                "id": ex.document.id,
                "article_sentences": [" ".join(s.tokens) for s in ex.document.sentences],
                "highlights": [" ".join(s) for s in ex.reference.sentences],
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
