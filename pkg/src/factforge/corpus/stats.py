"""Dataset summary statistics."""

from __future__ import annotations

from .types import CorpusError, CorpusStats, Document, PropertySet, mean_sd

__all__ = ["corpus_stats"]


def corpus_stats(corpus: list[tuple[PropertySet, Document]]) -> CorpusStats:
    """Means and population standard deviations over a nonempty corpus."""
    if not corpus:
        raise CorpusError("cannot compute statistics of an empty corpus")
    sent_lengths = [len(s) for _, doc in corpus for s in doc.sentences]
    return CorpusStats(
        size=len(corpus),
        sentences=mean_sd(doc.n_sentences for _, doc in corpus),
        tokens=mean_sd(doc.n_tokens for _, doc in corpus),
        properties=mean_sd(
            len([p for p in pset.pairs if not p.is_empty_relation])
            for pset, _ in corpus
        ),
        sentence_length=mean_sd(sent_lengths),
    )
