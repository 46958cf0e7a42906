"""Corpus, alignment, and text file formats.

Corpus files are JSON lines, one record each:

    {"entity_id": ..., "properties": [{"p": ..., "v": ..., "class": ...}],
     "sentences": [[token, ...], ...], "delex_map": {slot: surface}}

where "p", "v", and "class" hold space-joined token sequences. Alignments are
tab-separated lines "entity_id<TAB>sentence_idx<TAB>word_idx<TAB>property_idx".
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .types import (
    AlignmentSet,
    CorpusError,
    DelexMap,
    Document,
    PropertySet,
    PropertyValue,
)

__all__ = [
    "read_corpus",
    "write_corpus",
    "read_alignments",
    "write_alignments",
    "write_texts",
    "read_texts",
    "content_hash",
]


def record_to_json(pset: PropertySet, doc: Document) -> dict:
    props = []
    for pair in pset.pairs:
        entry = {"p": " ".join(pair.property), "v": " ".join(pair.value)}
        if pair.class_label:
            entry["class"] = " ".join(pair.class_label)
        props.append(entry)
    return {
        "entity_id": pset.entity_id,
        "properties": props,
        "sentences": doc.sentences,
        "delex_map": doc.delex_map.to_dict(),
    }


def record_from_json(obj: dict) -> tuple[PropertySet, Document]:
    try:
        pairs = [
            PropertyValue(
                tuple(e["p"].split()),
                tuple(e["v"].split()),
                tuple(e.get("class", "").split()),
            )
            for e in obj["properties"]
        ]
        pset = PropertySet(obj["entity_id"], pairs)
        doc = Document(
            [list(s) for s in obj["sentences"]],
            DelexMap(obj.get("delex_map", {})),
        )
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"malformed corpus record: {exc}") from exc
    return pset, doc


def write_corpus(path: str | Path, corpus: list[tuple[PropertySet, Document]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pset, doc in corpus:
            fh.write(json.dumps(record_to_json(pset, doc), sort_keys=True))
            fh.write("\n")


def read_corpus(path: str | Path) -> list[tuple[PropertySet, Document]]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            records.append(record_from_json(obj))
    return records


def write_alignments(path: str | Path, alignments: list[AlignmentSet]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for aset in alignments:
            for sent_idx, word_idx, prop_idx in sorted(aset.links):
                fh.write(f"{aset.entity_id}\t{sent_idx}\t{word_idx}\t{prop_idx}\n")


def read_alignments(path: str | Path) -> dict[str, AlignmentSet]:
    out: dict[str, AlignmentSet] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise CorpusError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}"
                )
            entity_id, s, w, p = parts
            aset = out.setdefault(entity_id, AlignmentSet(entity_id))
            try:
                aset.links.add((int(s), int(w), int(p)))
            except ValueError as exc:
                raise CorpusError(f"{path}:{lineno}: non-integer index") from exc
    return out


def write_texts(path: str | Path, texts: list[tuple[str, list[str]]]) -> None:
    """One line per entity: entity_id, a tab, then the space-joined tokens."""
    with open(path, "w", encoding="utf-8") as fh:
        for entity_id, tokens in texts:
            fh.write(f"{entity_id}\t{' '.join(tokens)}\n")


def read_texts(path: str | Path) -> list[tuple[str, list[str]]]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            entity_id, _, text = line.partition("\t")
            out.append((entity_id, text.split()))
    return out


def content_hash(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
