"""Corpus ingestion: document parsing, sentence splitting, paragraph packing, on-disk store.

The store is append-only: one JSON-lines file for documents, one for
paragraphs, plus a sidecar offset index so individual records can be read
with a single ``pread``. After ``ingest`` finishes the store is immutable
and safe for any number of concurrent readers.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator

from . import CorpusError, EmptyCorpusError

logger = logging.getLogger(__name__)

STORE_VERSION = "1"
SPLITTER_VERSION = "rule-v1"

_TERMINALS = ".!?"
_CLOSERS = "\"')]}»”’"

# Lowercased tokens that end with a period without ending a sentence.
_ABBREVIATIONS = frozenset({
    "al", "approx", "ca", "cf", "dr", "e.g", "ed", "eds", "eq", "eqs",
    "et", "etc", "fig", "figs", "i.e", "jr", "mr", "mrs", "ms", "no",
    "prof", "resp", "sr", "st", "vol", "vs",
})


@dataclass
class SplitterConfig:
    """Paragraph packing and sentence splitting knobs."""

    max_words: int = 400
    splitter_version: str = SPLITTER_VERSION

    def to_dict(self) -> dict:
        return {"max_words": self.max_words, "splitter_version": self.splitter_version}


@dataclass
class Document:
    doc_id: str
    title: str
    abstract: str
    body_paragraphs: list[str]
    publish_date: str | None = None
    source_uri: str | None = None

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "abstract": self.abstract,
            "body_paragraphs": self.body_paragraphs,
            "publish_date": self.publish_date,
            "source_uri": self.source_uri,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Document":
        return cls(
            doc_id=obj["doc_id"],
            title=obj["title"],
            abstract=obj["abstract"],
            body_paragraphs=list(obj["body_paragraphs"]),
            publish_date=obj.get("publish_date"),
            source_uri=obj.get("source_uri"),
        )


@dataclass
class Paragraph:
    """One retrieval unit: a slice of a document body (or its abstract).

    ``sentences`` holds half-open character offsets into ``text``;
    ``word_count`` is the whitespace-token count of ``text``.
    """

    para_id: str
    doc_id: str
    text: str
    word_count: int
    sentences: list[tuple[int, int]] = field(default_factory=list)

    def sentence_text(self, index: int) -> str:
        start, end = self.sentences[index]
        return self.text[start:end]

    def to_dict(self) -> dict:
        return {
            "para_id": self.para_id,
            "doc_id": self.doc_id,
            "text": self.text,
            "word_count": self.word_count,
            "sentences": [list(s) for s in self.sentences],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Paragraph":
        return cls(
            para_id=obj["para_id"],
            doc_id=obj["doc_id"],
            text=obj["text"],
            word_count=obj["word_count"],
            sentences=[(s[0], s[1]) for s in obj["sentences"]],
        )


@dataclass
class CorpusManifest:
    corpus_id: str
    n_documents: int
    n_paragraphs: int
    n_rejected: int
    created_at: str
    splitter: dict

    def to_dict(self) -> dict:
        return {
            "store_version": STORE_VERSION,
            "corpus_id": self.corpus_id,
            "n_documents": self.n_documents,
            "n_paragraphs": self.n_paragraphs,
            "n_rejected": self.n_rejected,
            "created_at": self.created_at,
            "splitter": self.splitter,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CorpusManifest":
        return cls(
            corpus_id=obj["corpus_id"],
            n_documents=obj["n_documents"],
            n_paragraphs=obj["n_paragraphs"],
            n_rejected=obj.get("n_rejected", 0),
            created_at=obj["created_at"],
            splitter=obj["splitter"],
        )


def _is_abbreviation(text: str, period_pos: int, sentence_start: int) -> bool:
    """True when the period at ``period_pos`` belongs to an abbreviation."""
    if text[period_pos] != ".":
        return False
    j = period_pos - 1
    chars: list[str] = []
    while j >= sentence_start and (text[j].isalpha() or text[j] == "."):
        chars.append(text[j])
        j -= 1
    if not chars:
        return False
    word = "".join(reversed(chars)).strip(".")
    if not word:
        return False
    if len(word) == 1 and word.isupper():
        return True  # initials such as "J. Smith"
    return word.lower() in _ABBREVIATIONS


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Split ``text`` into sentence spans (half-open char offsets).

    Rule-based: a run of terminal punctuation (optionally followed by
    closing quotes/brackets) ends a sentence when followed by whitespace
    or end of text, unless the preceding token is a known abbreviation or
    an initial, or the position sits inside an unclosed paren/bracket.
    The spans cover every non-whitespace character; whitespace between
    sentences is not covered.
    """
    spans: list[tuple[int, int]] = []
    n = len(text)
    i = 0
    start: int | None = None
    depth = 0
    while i < n:
        ch = text[i]
        if start is None:
            if ch.isspace():
                i += 1
                continue
            start = i
            depth = 0
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth = max(0, depth - 1)
        elif ch in _TERMINALS and depth == 0:
            j = i
            while j + 1 < n and text[j + 1] in _TERMINALS:
                j += 1
            k = j
            while k + 1 < n and text[k + 1] in _CLOSERS:
                k += 1
            boundary = k + 1 >= n or text[k + 1].isspace()
            if boundary and not _is_abbreviation(text, i, start):
                spans.append((start, k + 1))
                start = None
            i = k + 1
            continue
        i += 1
    if start is not None:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append((start, end))
    return spans


def pack_block(text: str, max_words: int) -> list[tuple[str, list[tuple[int, int]]]]:
    """Pack a text block into paragraphs of at most ``max_words`` words.

    Sentences are accumulated greedily and never broken; a single
    sentence longer than the limit becomes its own paragraph. Returns
    ``(paragraph_text, sentence_offsets)`` pairs where offsets are
    relative to the paragraph text.
    """
    spans = split_sentences(text)
    if not spans:
        return []
    groups: list[list[tuple[int, int]]] = []
    current: list[tuple[int, int]] = []
    current_words = 0
    for span in spans:
        words = len(text[span[0]:span[1]].split())
        if current and current_words + words > max_words:
            groups.append(current)
            current = [span]
            current_words = words
        else:
            current.append(span)
            current_words += words
    groups.append(current)
    packed = []
    for group in groups:
        g_start, g_end = group[0][0], group[-1][1]
        packed.append((
            text[g_start:g_end],
            [(a - g_start, b - g_start) for a, b in group],
        ))
    return packed


def _parse_record(obj: object) -> Document:
    """Validate and convert one input JSON record. Raises ValueError."""
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    doc_id = obj.get("paper_id")
    if not isinstance(doc_id, str) or not doc_id.strip():
        raise ValueError("missing or empty paper_id")
    metadata = obj.get("metadata") or {}
    if not isinstance(metadata, dict):
        raise ValueError("metadata is not an object")
    title = metadata.get("title") or ""
    if not isinstance(title, str):
        raise ValueError("metadata.title is not a string")

    def _texts(key: str) -> list[str]:
        entries = obj.get(key) or []
        if not isinstance(entries, list):
            raise ValueError(f"{key} is not a list")
        out = []
        for entry in entries:
            if not isinstance(entry, dict) or not isinstance(entry.get("text"), str):
                raise ValueError(f"{key} entry missing text")
            if entry["text"].strip():
                out.append(entry["text"])
        return out

    abstract = " ".join(_texts("abstract"))
    body = _texts("body_text")
    publish_date = obj.get("publish_date") or metadata.get("publish_date")
    if publish_date is not None and not isinstance(publish_date, str):
        raise ValueError("publish_date is not a string")
    source_uri = obj.get("source_uri")
    if source_uri is not None and not isinstance(source_uri, str):
        raise ValueError("source_uri is not a string")
    return Document(
        doc_id=doc_id.strip(),
        title=title,
        abstract=abstract,
        body_paragraphs=body,
        publish_date=publish_date,
        source_uri=source_uri,
    )


def _iter_source_records(source: Path) -> Iterator[tuple[str, object]]:
    """Yield ``(origin, parsed_or_error)`` for each record in the source.

    The source is either a directory of ``*.json`` files (one document
    each) or a single ``.jsonl``/``.json`` file with one record per line.
    Parse failures yield a ValueError instance instead of a record.
    """
    if source.is_dir():
        files = sorted(p for p in source.iterdir() if p.suffix == ".json")
        for path in files:
            try:
                yield str(path), json.loads(path.read_text(encoding="utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                yield str(path), ValueError(f"malformed JSON: {exc}")
    elif source.is_file():
        with source.open(encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                origin = f"{source}:{lineno}"
                try:
                    yield origin, json.loads(line)
                except json.JSONDecodeError as exc:
                    yield origin, ValueError(f"malformed JSON: {exc}")
    else:
        raise CorpusError(f"source not found: {source}")


def split_document(doc: Document, config: SplitterConfig) -> list[Paragraph]:
    """Split a document body into stored paragraphs.

    When the body is empty but the abstract is not, the abstract itself
    is emitted as the document's only paragraph.
    """
    blocks = doc.body_paragraphs
    if not blocks and doc.abstract.strip():
        blocks = [doc.abstract]
    paragraphs = []
    ordinal = 0
    for block in blocks:
        for text, sentence_offsets in pack_block(block, config.max_words):
            paragraphs.append(Paragraph(
                para_id=f"{doc.doc_id}:{ordinal:04d}",
                doc_id=doc.doc_id,
                text=text,
                word_count=len(text.split()),
                sentences=sentence_offsets,
            ))
            ordinal += 1
    return paragraphs


def ingest(source_path: str | Path, out_dir: str | Path,
           config: SplitterConfig | None = None) -> CorpusManifest:
    """Ingest a document source into an on-disk corpus store.

    Malformed records are rejected individually (logged, counted in the
    manifest, and listed in ``rejections.jsonl``); an entirely empty
    source raises :class:`EmptyCorpusError`.
    """
    config = config or SplitterConfig()
    source = Path(source_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    doc_offsets: dict[str, tuple[int, int]] = {}
    para_offsets: dict[str, tuple[int, int]] = {}
    doc_paragraphs: dict[str, list[str]] = {}
    paragraph_ids: list[str] = []
    rejections: list[dict] = []
    hasher = hashlib.sha256()

    docs_path = out / "documents.jsonl"
    paras_path = out / "paragraphs.jsonl"
    with docs_path.open("wb") as docs_out, paras_path.open("wb") as paras_out:
        for origin, record in _iter_source_records(source):
            if isinstance(record, ValueError):
                reason = str(record)
            else:
                try:
                    doc = _parse_record(record)
                    reason = None
                except ValueError as exc:
                    reason = str(exc)
            if reason is None and doc.doc_id in doc_offsets:
                reason = f"duplicate doc_id {doc.doc_id!r}"
            if reason is not None:
                logger.warning("rejected record %s: %s", origin, reason)
                rejections.append({"origin": origin, "reason": reason})
                continue

            paragraphs = split_document(doc, config)
            line = json.dumps(doc.to_dict(), ensure_ascii=False).encode("utf-8") + b"\n"
            doc_offsets[doc.doc_id] = (docs_out.tell(), len(line))
            docs_out.write(line)
            doc_paragraphs[doc.doc_id] = []
            hasher.update(doc.doc_id.encode("utf-8"))
            for para in paragraphs:
                pline = json.dumps(para.to_dict(), ensure_ascii=False).encode("utf-8") + b"\n"
                para_offsets[para.para_id] = (paras_out.tell(), len(pline))
                paras_out.write(pline)
                doc_paragraphs[doc.doc_id].append(para.para_id)
                paragraph_ids.append(para.para_id)
                hasher.update(para.para_id.encode("utf-8"))
                hasher.update(para.text.encode("utf-8"))

    if not doc_offsets:
        raise EmptyCorpusError(f"no valid documents in {source}")

    hasher.update(json.dumps(config.to_dict(), sort_keys=True).encode("utf-8"))
    manifest = CorpusManifest(
        corpus_id=hasher.hexdigest()[:16],
        n_documents=len(doc_offsets),
        n_paragraphs=len(paragraph_ids),
        n_rejected=len(rejections),
        created_at=datetime.now(timezone.utc).isoformat(),
        splitter=config.to_dict(),
    )
    sidecar = {
        "documents": {k: list(v) for k, v in doc_offsets.items()},
        "paragraphs": {k: list(v) for k, v in para_offsets.items()},
        "doc_paragraphs": doc_paragraphs,
        "paragraph_ids": paragraph_ids,
    }
    (out / "offsets.json").write_text(json.dumps(sidecar), encoding="utf-8")
    (out / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=2), encoding="utf-8")
    if rejections:
        with (out / "rejections.jsonl").open("w", encoding="utf-8") as handle:
            for item in rejections:
                handle.write(json.dumps(item) + "\n")
    return manifest


class CorpusStore:
    """Read-only view over an ingested corpus directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        manifest_path = self.root / "manifest.json"
        if not manifest_path.exists():
            raise CorpusError(f"not a corpus store: {self.root}")
        self.manifest = CorpusManifest.from_dict(
            json.loads(manifest_path.read_text(encoding="utf-8")))
        sidecar = json.loads((self.root / "offsets.json").read_text(encoding="utf-8"))
        self._doc_offsets = {k: tuple(v) for k, v in sidecar["documents"].items()}
        self._para_offsets = {k: tuple(v) for k, v in sidecar["paragraphs"].items()}
        self._doc_paragraphs = sidecar["doc_paragraphs"]
        self.paragraph_ids: list[str] = sidecar["paragraph_ids"]
        # O_RDONLY descriptors; os.pread keeps readers position-free and
        # therefore safe to share across threads.
        self._docs_fd = os.open(self.root / "documents.jsonl", os.O_RDONLY)
        self._paras_fd = os.open(self.root / "paragraphs.jsonl", os.O_RDONLY)

    def close(self) -> None:
        for fd in (self._docs_fd, self._paras_fd):
            try:
                os.close(fd)
            except OSError:
                pass

    def __len__(self) -> int:
        return len(self._para_offsets)

    def _read(self, fd: int, offset: int, length: int) -> dict:
        return json.loads(os.pread(fd, length, offset).decode("utf-8"))

    def get_document(self, doc_id: str) -> Document:
        try:
            offset, length = self._doc_offsets[doc_id]
        except KeyError:
            raise KeyError(f"unknown doc_id: {doc_id}") from None
        return Document.from_dict(self._read(self._docs_fd, offset, length))

    def get_paragraph(self, para_id: str) -> Paragraph:
        try:
            offset, length = self._para_offsets[para_id]
        except KeyError:
            raise KeyError(f"unknown para_id: {para_id}") from None
        return Paragraph.from_dict(self._read(self._paras_fd, offset, length))

    def list_paragraphs(self, doc_id: str) -> list[Paragraph]:
        try:
            ids = self._doc_paragraphs[doc_id]
        except KeyError:
            raise KeyError(f"unknown doc_id: {doc_id}") from None
        return [self.get_paragraph(pid) for pid in ids]

    def iter_paragraphs(self) -> Iterator[Paragraph]:
        for pid in self.paragraph_ids:
            yield self.get_paragraph(pid)
