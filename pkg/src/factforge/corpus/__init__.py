from .types import (
    AlignmentSet,
    CorpusError,
    CorpusStats,
    DelexMap,
    Document,
    PropertySet,
    PropertyValue,
    Vocabulary,
    EMPTY_RELATION_TOKEN,
    EOS,
    NUMERIC,
    PAD,
    RESERVED_TOKENS,
    UNK,
    YEAR,
)
from .delex import delexicalise, relexicalise, is_delex_token, delex_token_key
from .filters import FilterLimits, filter_corpus
from .io import (
    content_hash,
    read_alignments,
    read_corpus,
    read_texts,
    write_alignments,
    write_corpus,
    write_texts,
)
from .pipeline import normalize_record_dates, preprocess_corpus
from .stats import corpus_stats
from .synthetic import (
    SyntheticProperty,
    SyntheticSpec,
    content_reference,
    default_spec,
    generate_synthetic_corpus,
)
from .tokenization import (
    expand_date_tokens,
    is_numeric_token,
    is_year_token,
    normalize_dates,
    split_sentences,
    tokenize,
)
from .vocab import VocabCaps, build_vocabularies, encode_output_tokens

__all__ = [
    "AlignmentSet",
    "CorpusError",
    "CorpusStats",
    "DelexMap",
    "Document",
    "PropertySet",
    "PropertyValue",
    "Vocabulary",
    "EMPTY_RELATION_TOKEN",
    "EOS",
    "NUMERIC",
    "PAD",
    "RESERVED_TOKENS",
    "UNK",
    "YEAR",
    "delexicalise",
    "relexicalise",
    "is_delex_token",
    "delex_token_key",
    "FilterLimits",
    "filter_corpus",
    "content_hash",
    "read_alignments",
    "read_corpus",
    "read_texts",
    "write_alignments",
    "write_corpus",
    "write_texts",
    "normalize_record_dates",
    "preprocess_corpus",
    "corpus_stats",
    "SyntheticProperty",
    "SyntheticSpec",
    "content_reference",
    "default_spec",
    "generate_synthetic_corpus",
    "expand_date_tokens",
    "is_numeric_token",
    "is_year_token",
    "normalize_dates",
    "split_sentences",
    "tokenize",
    "VocabCaps",
    "build_vocabularies",
    "encode_output_tokens",
]
