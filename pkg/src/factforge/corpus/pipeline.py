"""End-to-end corpus preprocessing: dates, delexicalisation, empty relation,
structural filtering."""

from __future__ import annotations

from .delex import delexicalise
from .filters import FilterLimits, filter_corpus
from .tokenization import expand_date_tokens
from .types import Document, PropertySet, PropertyValue

__all__ = ["preprocess_corpus", "normalize_record_dates"]


def normalize_record_dates(pset: PropertySet, doc: Document) -> tuple[PropertySet, Document]:
    pairs = [
        PropertyValue(
            p.property,
            tuple(expand_date_tokens(list(p.value))),
            p.class_label,
        )
        for p in pset.pairs
    ]
    sentences = [expand_date_tokens(s) for s in doc.sentences]
    return PropertySet(pset.entity_id, pairs), Document(sentences, doc.delex_map, doc.raw_text)


def preprocess_corpus(
    records: list[tuple[PropertySet, Document]],
    limits: FilterLimits | None = None,
) -> list[tuple[PropertySet, Document]]:
    """Normalize dates, delexicalise numerics, append the empty relation, and
    apply the structural filter. UNK-based filtering happens later, once a
    consumer has built its vocabularies."""
    out = []
    for pset, doc in records:
        pset, doc = normalize_record_dates(pset, doc)
        pset, doc = delexicalise(pset, doc)
        out.append((pset.with_empty_relation(), doc))
    if limits is not None:
        out = filter_corpus(out, limits)
    return out
