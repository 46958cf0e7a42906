"""Vocabulary construction and corpus encoding.

Input vocabularies rank tokens of the property side (property, value, and
class tokens); output vocabularies rank text tokens. A second delexicalisation
phase rescues text tokens that fall outside the output vocabulary but occur in
the example's own property values: they become property-position slot tokens,
which compete for vocabulary slots by frequency. Whatever remains out of
vocabulary maps to UNK.
"""

from __future__ import annotations

from collections import Counter

from .delex import delex_token_key
from .types import CorpusError, Document, PropertySet, Vocabulary

__all__ = ["build_vocabularies", "encode_output_tokens", "VocabCaps"]


class VocabCaps:
    """Size limits per side; the generator uses a smaller output cap."""

    def __init__(self, input_cap: int = 50_000, output_cap: int = 50_000):
        self.input_cap = input_cap
        self.output_cap = output_cap

    @classmethod
    def for_aligner(cls) -> "VocabCaps":
        return cls(50_000, 50_000)

    @classmethod
    def for_generator(cls) -> "VocabCaps":
        return cls(50_000, 20_000)


def _value_slot(pset: PropertySet, surface: str) -> str | None:
    for pair in pset.pairs:
        if pair.is_empty_relation:
            continue
        for pos, vtok in enumerate(pair.value, start=1):
            if vtok == surface:
                return delex_token_key(pair.property, pos)
    return None


def build_vocabularies(
    corpus: list[tuple[PropertySet, Document]],
    caps: VocabCaps,
) -> tuple[Vocabulary, Vocabulary]:
    """Build frequency-ranked (input, output) vocabularies for a corpus."""
    if not corpus:
        raise CorpusError("cannot build vocabularies from an empty corpus")
    input_counts: Counter[str] = Counter()
    output_counts: Counter[str] = Counter()
    for pset, doc in corpus:
        for pair in pset.pairs:
            input_counts.update(pair.input_tokens())
        for sentence in doc.sentences:
            output_counts.update(sentence)

    input_vocab = Vocabulary.build("input", dict(input_counts), caps.input_cap)

    preliminary = Vocabulary.build("output", dict(output_counts), caps.output_cap)
    slot_counts: Counter[str] = Counter()
    for pset, doc in corpus:
        for sentence in doc.sentences:
            for token in sentence:
                if token in preliminary:
                    continue
                slot = _value_slot(pset, token)
                if slot is not None:
                    slot_counts[slot] += 1
    merged = dict(output_counts)
    for slot, n in slot_counts.items():
        merged[slot] = merged.get(slot, 0) + n
    output_vocab = Vocabulary.build("output", merged, caps.output_cap)
    return input_vocab, output_vocab


def encode_output_tokens(
    tokens: list[str],
    pset: PropertySet,
    vocab: Vocabulary,
) -> list[int]:
    """Map text tokens to ids, rescuing OOV words via property-value slots."""
    ids = []
    for token in tokens:
        if token in vocab:
            ids.append(vocab.index[token])
            continue
        slot = _value_slot(pset, token)
        if slot is not None and slot in vocab:
            ids.append(vocab.index[slot])
        else:
            ids.append(vocab.unk_id)
    return ids
