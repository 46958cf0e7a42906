"""Core corpus data types: property sets, documents, alignments, vocabularies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CorpusError",
    "PropertyValue",
    "PropertySet",
    "DelexMap",
    "Document",
    "AlignmentSet",
    "Vocabulary",
    "CorpusStats",
    "EMPTY_RELATION_TOKEN",
    "PAD",
    "UNK",
    "EOS",
    "YEAR",
    "NUMERIC",
    "RESERVED_TOKENS",
]


class CorpusError(ValueError):
    """Raised for malformed or exhausted corpus data."""


EMPTY_RELATION_TOKEN = "<empty>"

PAD = "<pad>"
UNK = "UNK"
EOS = "<eos>"
YEAR = "YEAR"
NUMERIC = "NUMERIC"
RESERVED_TOKENS = (PAD, UNK, EOS, YEAR, NUMERIC)


@dataclass(frozen=True)
class PropertyValue:
    """One property:value pair; class_label holds an optional ontology class."""

    property: tuple[str, ...]
    value: tuple[str, ...]
    class_label: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.property:
            raise CorpusError("property tokens must be nonempty")
        if not self.value:
            raise CorpusError("value tokens must be nonempty")

    @property
    def is_empty_relation(self) -> bool:
        return self.property == (EMPTY_RELATION_TOKEN,)

    def input_tokens(self) -> tuple[str, ...]:
        """The concatenated sequence fed to the property encoder: p v [c]."""
        return self.property + self.value + self.class_label

    @property
    def property_key(self) -> str:
        return "_".join(self.property)


def empty_relation_pair() -> PropertyValue:
    return PropertyValue((EMPTY_RELATION_TOKEN,), (EMPTY_RELATION_TOKEN,))


@dataclass
class PropertySet:
    entity_id: str
    pairs: list[PropertyValue]

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def has_empty_relation(self) -> bool:
        return any(p.is_empty_relation for p in self.pairs)

    def with_empty_relation(self) -> "PropertySet":
        """Return a copy with exactly one empty-relation pair, appended last."""
        pairs = [p for p in self.pairs if not p.is_empty_relation]
        pairs.append(empty_relation_pair())
        return PropertySet(self.entity_id, pairs)


class DelexMap:
    """Mapping from delex slot tokens (DLX_property_position) to surface tokens."""

    def __init__(self, entries: dict[str, str] | None = None):
        self.entries: dict[str, str] = dict(entries or {})

    def add(self, key: str, surface: str) -> None:
        existing = self.entries.get(key)
        if existing is not None and existing != surface:
            raise CorpusError(
                f"delex token collision: {key} maps to both "
                f"{existing!r} and {surface!r}"
            )
        self.entries[key] = surface

    def get(self, key: str) -> str | None:
        return self.entries.get(key)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __eq__(self, other) -> bool:
        return isinstance(other, DelexMap) and self.entries == other.entries

    def to_dict(self) -> dict[str, str]:
        return dict(self.entries)


@dataclass
class Document:
    sentences: list[list[str]]
    delex_map: DelexMap = field(default_factory=DelexMap)
    raw_text: str = ""

    @property
    def n_sentences(self) -> int:
        return len(self.sentences)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def all_tokens(self) -> list[str]:
        return [t for s in self.sentences for t in s]


@dataclass
class AlignmentSet:
    """Word-to-property links for one data-text pair.

    Links are (sentence index, word position, property index) triples; the
    argmax extraction rule yields at most one property per word. Word
    surfaces are cached so reward computation does not need the document.
    """

    entity_id: str
    links: set[tuple[int, int, int]] = field(default_factory=set)
    word_surfaces: dict[tuple[int, int], str] = field(default_factory=dict)

    def add(self, sent_idx: int, word_idx: int, prop_idx: int, surface: str | None = None):
        self.links.add((sent_idx, word_idx, prop_idx))
        if surface is not None:
            self.word_surfaces[(sent_idx, word_idx)] = surface

    def aligned_words(self) -> set[str]:
        """Surface forms of all linked words (type-level set)."""
        return {
            self.word_surfaces[(s, w)]
            for (s, w, _) in self.links
            if (s, w) in self.word_surfaces
        }

    def aligned_positions(self) -> set[tuple[int, int]]:
        return {(s, w) for (s, w, _) in self.links}

    def __len__(self) -> int:
        return len(self.links)


class Vocabulary:
    """Frequency-ranked token inventory with reserved slots.

    Ids 0..4 are reserved for padding, UNK, EOS, YEAR and NUMERIC; the
    remaining slots are filled by frequency (ties broken lexicographically).
    """

    def __init__(self, kind: str, tokens: list[str]):
        if kind not in ("input", "output"):
            raise CorpusError(f"vocabulary kind must be input or output, got {kind!r}")
        self.kind = kind
        self.tokens = list(tokens)
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise CorpusError("vocabulary contains duplicate tokens")

    @classmethod
    def build(cls, kind: str, counts: dict[str, int], cap: int) -> "Vocabulary":
        if cap < len(RESERVED_TOKENS):
            raise CorpusError(
                f"vocabulary cap {cap} is smaller than the "
                f"{len(RESERVED_TOKENS)} reserved tokens"
            )
        ranked = sorted(
            (t for t in counts if t not in RESERVED_TOKENS),
            key=lambda t: (-counts[t], t),
        )
        tokens = list(RESERVED_TOKENS) + ranked[: cap - len(RESERVED_TOKENS)]
        return cls(kind, tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def pad_id(self) -> int:
        return self.index[PAD]

    @property
    def unk_id(self) -> int:
        return self.index[UNK]

    @property
    def eos_id(self) -> int:
        return self.index[EOS]

    def id_of(self, token: str) -> int:
        return self.index.get(token, self.index[UNK])

    def token_of(self, idx: int) -> str:
        return self.tokens[idx]

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.id_of(t) for t in tokens]

    def decode(self, ids: list[int]) -> list[str]:
        return [self.tokens[i] for i in ids]


@dataclass
class CorpusStats:
    """Per-corpus means and population standard deviations."""

    size: int
    sentences: tuple[float, float]
    tokens: tuple[float, float]
    properties: tuple[float, float]
    sentence_length: tuple[float, float]

    def rows(self) -> list[tuple[str, str]]:
        def fmt(pair):
            return f"{pair[0]:.2f}+/-{pair[1]:.2f}"

        return [
            ("size", str(self.size)),
            ("sentences", fmt(self.sentences)),
            ("tokens", fmt(self.tokens)),
            ("properties", fmt(self.properties)),
            ("sent.len", fmt(self.sentence_length)),
        ]

    def __str__(self) -> str:
        return "\n".join(f"{k}\t{v}" for k, v in self.rows())


def mean_sd(values) -> tuple[float, float]:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise CorpusError("cannot compute statistics of an empty sample")
    return float(arr.mean()), float(arr.std())
