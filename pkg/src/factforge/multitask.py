"""Joint word-prediction / alignment-label training.

Alignment sets become per-token binary labels over the concatenated abstract;
the auxiliary head predicts each label from the same state that predicts the
word, sharing the combiner weights, and the two losses mix as
lambda * word_loss + (1 - lambda) * label_loss with an annealed lambda.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, sigmoid
from .corpus import AlignmentSet, CorpusError, Document

__all__ = [
    "derive_labels",
    "lambda_for_epoch",
    "alignment_probability",
    "mtl_loss_value",
]


def derive_labels(doc: Document, alignments: AlignmentSet) -> list[int]:
    """Binary labels over the concatenated document plus a trailing 0 for EOS.

    A position is 1 iff it participates in any link. Links pointing outside
    the document are an error.
    """
    offsets = []
    total = 0
    for sent in doc.sentences:
        offsets.append(total)
        total += len(sent)
    labels = [0] * (total + 1)  # + EOS
    for sent_idx, word_idx, _ in alignments.links:
        if not 0 <= sent_idx < len(doc.sentences):
            raise CorpusError(
                f"{alignments.entity_id}: link sentence {sent_idx} out of range"
            )
        if not 0 <= word_idx < len(doc.sentences[sent_idx]):
            raise CorpusError(
                f"{alignments.entity_id}: link word {word_idx} out of range "
                f"in sentence {sent_idx}"
            )
        labels[offsets[sent_idx] + word_idx] = 1
    return labels


def lambda_for_epoch(
    schedule: tuple[tuple[int, int | None, float], ...], epoch: int
) -> float:
    """Look up the word-task weight for an epoch from (first, last, value)
    ranges; last None means open-ended."""
    for first, last, value in schedule:
        if epoch >= first and (last is None or epoch <= last):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"lambda must be in [0, 1], got {value}")
            return value
    raise ValueError(f"lambda schedule does not cover epoch {epoch}")


def alignment_probability(align_logit: Tensor) -> Tensor:
    """P(a=1): sigmoid of the shared-combiner head output."""
    return sigmoid(align_logit)


def mtl_loss_value(word_loss: float, align_loss: float, lam: float) -> float:
    """The scalar combination, for reporting: lam * word + (1 - lam) * align."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    return lam * word_loss + (1.0 - lam) * align_loss
