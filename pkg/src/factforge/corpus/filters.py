"""Structural and UNK-count filtering of (PropertySet, Document) pairs."""

from __future__ import annotations

from dataclasses import dataclass

from .types import CorpusError, Document, PropertySet, Vocabulary

__all__ = ["FilterLimits", "filter_corpus"]


@dataclass
class FilterLimits:
    min_pairs: int = 6
    max_pairs: int = 50
    min_sentences: int = 2
    max_sentences: int = 12
    min_tokens: int = 23
    # UNK caps only apply when vocabularies are supplied: the text cap is 3
    # for the alignment corpus and 5 for the generation corpus; property
    # values tolerate at most 2 unknown tokens each.
    max_text_unks: int = 3
    max_value_unks: int = 2

    @classmethod
    def for_aligner(cls) -> "FilterLimits":
        return cls(max_text_unks=3)

    @classmethod
    def for_generator(cls) -> "FilterLimits":
        return cls(max_text_unks=5)


def _count_unks(tokens, vocab: Vocabulary) -> int:
    unk = vocab.unk_id
    return sum(1 for t in tokens if vocab.id_of(t) == unk)


def keeps(
    pset: PropertySet,
    doc: Document,
    limits: FilterLimits,
    input_vocab: Vocabulary | None = None,
    output_vocab: Vocabulary | None = None,
) -> bool:
    n_pairs = len([p for p in pset.pairs if not p.is_empty_relation])
    if not limits.min_pairs <= n_pairs:
        return False
    if n_pairs > limits.max_pairs:
        return False
    if not limits.min_sentences <= doc.n_sentences <= limits.max_sentences:
        return False
    if doc.n_tokens < limits.min_tokens:
        return False
    if output_vocab is not None:
        if _count_unks(doc.all_tokens(), output_vocab) > limits.max_text_unks:
            return False
    if input_vocab is not None:
        for pair in pset.pairs:
            if _count_unks(pair.value, input_vocab) > limits.max_value_unks:
                return False
    return True


def filter_corpus(
    examples: list[tuple[PropertySet, Document]],
    limits: FilterLimits,
    input_vocab: Vocabulary | None = None,
    output_vocab: Vocabulary | None = None,
) -> list[tuple[PropertySet, Document]]:
    """Drop examples violating the size or UNK limits.

    Raises CorpusError when nothing survives, so an over-aggressive
    configuration cannot silently produce an empty corpus.
    """
    kept = [
        ex for ex in examples if keeps(ex[0], ex[1], limits, input_vocab, output_vocab)
    ]
    if examples and not kept:
        raise CorpusError("corpus exhausted: no examples survive the filter limits")
    return kept
