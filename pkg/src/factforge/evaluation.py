"""Corpus-level BLEU-4 and the first-sentence evaluation protocol.

Standard corpus BLEU: count-clipped modified n-gram precision up to order 4,
geometric mean, and the brevity penalty against the closest reference length.
Unsmoothed by default; the optional smoothing (add-one on orders above 1) is
a debugging aid for very short texts, not the reported metric. Matching is
case-insensitive.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import math

__all__ = ["BleuReport", "bleu4", "first_sentence", "ngram_counts"]

SENTENCE_TERMINATORS = (".", "!", "?")


@dataclass
class BleuReport:
    bleu: float
    precisions: list[float]
    brevity_penalty: float
    candidate_length: int
    reference_length: int

    def rows(self) -> list[tuple[str, str]]:
        out = [("bleu4", f"{self.bleu:.4f}")]
        out += [
            (f"p{n + 1}", f"{p:.4f}") for n, p in enumerate(self.precisions)
        ]
        out += [
            ("brevity_penalty", f"{self.brevity_penalty:.4f}"),
            ("candidate_length", str(self.candidate_length)),
            ("reference_length", str(self.reference_length)),
        ]
        return out


def ngram_counts(tokens: list[str], order: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1)
    )


def _closest_ref_length(cand_len: int, ref_lens: list[int]) -> int:
    # Ties break toward the shorter reference.
    return min(ref_lens, key=lambda r: (abs(r - cand_len), r))


def bleu4(
    candidates: list[list[str]],
    references: list[list[list[str]]],
    max_order: int = 4,
    smooth: bool = False,
) -> BleuReport:
    """Corpus BLEU of tokenized candidates against one or more references each."""
    if not candidates:
        raise ValueError("empty candidate corpus")
    if len(candidates) != len(references):
        raise ValueError(
            f"{len(candidates)} candidates vs {len(references)} reference lists"
        )
    if any(not refs for refs in references):
        raise ValueError("every candidate needs at least one reference")

    cand_total = 0
    ref_total = 0
    matched = [0] * max_order
    possible = [0] * max_order
    for cand, refs in zip(candidates, references):
        cand = [t.lower() for t in cand]
        refs = [[t.lower() for t in ref] for ref in refs]
        cand_total += len(cand)
        ref_total += _closest_ref_length(len(cand), [len(r) for r in refs])
        for n in range(1, max_order + 1):
            cand_counts = ngram_counts(cand, n)
            if not cand_counts:
                continue
            max_ref: Counter = Counter()
            for ref in refs:
                for gram, cnt in ngram_counts(ref, n).items():
                    if cnt > max_ref[gram]:
                        max_ref[gram] = cnt
            possible[n - 1] += sum(cand_counts.values())
            matched[n - 1] += sum(
                min(cnt, max_ref[gram]) for gram, cnt in cand_counts.items()
            )

    precisions = []
    for n in range(max_order):
        if smooth and n > 0:
            p = (matched[n] + 1.0) / (possible[n] + 1.0)
        elif possible[n] > 0:
            p = matched[n] / possible[n]
        else:
            p = 0.0
        precisions.append(p)

    if min(precisions) > 0:
        geo_mean = math.exp(sum(math.log(p) for p in precisions) / max_order)
    else:
        geo_mean = 0.0
    if cand_total == 0:
        bp = 0.0
    elif cand_total > ref_total:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_total / cand_total)
    return BleuReport(bp * geo_mean, precisions, bp, cand_total, ref_total)


def first_sentence(tokens: list[str]) -> list[str]:
    """Tokens up to and including the first sentence terminator; the whole
    text when no terminator occurs."""
    if not tokens:
        raise ValueError("empty text")
    for i, tok in enumerate(tokens):
        if tok in SENTENCE_TERMINATORS:
            return tokens[: i + 1]
    return list(tokens)
