"""Weakly supervised word-property alignment.

Property sets and sentences are embedded into a shared space; the similarity
of a pair is the sum over words of the best property dot product, so learning
a good pair score also learns which property each word belongs to. Training
is max-margin against in-batch negatives; word links are then read off by
thresholding each word's best similarity.

Property vectors are h-dimensional (directions summed) while sentence word
vectors are 2h-dimensional (directions concatenated); a learned linear bridge
maps word vectors into the property space before the dot product.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    Adam,
    Parameter,
    Tensor,
    add,
    matmul,
    no_grad,
    relu,
    stack,
    sub,
    tmax,
    tmean,
    transpose2d,
    tsum,
)
from .corpus import (
    AlignmentSet,
    CorpusError,
    Document,
    PropertySet,
    Vocabulary,
    encode_output_tokens,
)
from .encoders import SequenceEncoder

log = logging.getLogger(__name__)

__all__ = [
    "AlignerConfig",
    "ContentAligner",
    "SimilarityResult",
    "pair_similarity",
    "margin_hinge_loss",
    "calibrate_threshold",
    "tune_threshold_coef",
    "extract_alignments",
    "alignment_fscore",
    "rank_at_k",
    "train_aligner",
]


@dataclass
class AlignerConfig:
    hidden_dim: int = 200
    margin: float = 1.0
    negatives_per_example: int = 1
    threshold_coef: float = 0.75
    abs_threshold: float | None = None
    tune_coef_grid: tuple[float, ...] = (-0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5)
    epochs: int = 20
    batch_size: int = 16
    lr: float = 0.001
    dropout: float = 0.3
    dev_frac: float = 0.15
    seed: int = 1
    dtype: str = "float32"
    # Give tokens shared by the two vocabularies identical embedding rows at
    # initialisation, standing in for pretrained-vector initialisation when no
    # embedding file is available: lexical identity is visible from epoch 0.
    shared_lexical_init: bool = True
    embedding_file: str | None = None

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if self.negatives_per_example < 1:
            raise ValueError("need at least one negative per example")

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32


@dataclass
class SimilarityResult:
    """Pair score with its per-word decomposition.

    The score equals per_word_best.sum() exactly, by construction; best_index
    holds each word's argmax property (ties broken toward the lowest index).
    """

    score: Tensor
    per_word_best: Tensor
    best_index: np.ndarray


class ContentAligner:
    def __init__(
        self,
        input_vocab: Vocabulary,
        output_vocab: Vocabulary,
        config: AlignerConfig,
        rng: np.random.Generator,
    ):
        self.input_vocab = input_vocab
        self.output_vocab = output_vocab
        self.config = config
        dt = config.np_dtype
        h = config.hidden_dim
        self.denc = SequenceEncoder.create(rng, len(input_vocab), h, "denc", dt)
        self.senc = SequenceEncoder.create(rng, len(output_vocab), h, "senc", dt)
        k = 1.0 / math.sqrt(2 * h)
        self.bridge = Parameter(
            rng.uniform(-k, k, (2 * h, h)).astype(dt), "bridge"
        )
        self.threshold: float | None = None
        self.threshold_coef_used: float | None = None
        if config.embedding_file:
            from .encoders import load_embedding_text

            self.denc.embedding = load_embedding_text(
                config.embedding_file, input_vocab.tokens, h, rng, "denc.embedding", dt
            )
            self.senc.embedding = load_embedding_text(
                config.embedding_file, output_vocab.tokens, h, rng, "senc.embedding", dt
            )
        elif config.shared_lexical_init:
            self._share_lexical_rows(rng)

    def _share_lexical_rows(self, rng: np.random.Generator) -> None:
        shared = sorted(set(self.input_vocab.tokens) & set(self.output_vocab.tokens))
        h = self.config.hidden_dim
        for token in shared:
            row = rng.uniform(-0.05, 0.05, h).astype(self.config.np_dtype)
            self.denc.embedding.weight.data[self.input_vocab.index[token]] = row
            self.senc.embedding.weight.data[self.output_vocab.index[token]] = row

    def parameters(self) -> list[Parameter]:
        return self.denc.parameters() + self.senc.parameters() + [self.bridge]

    # --- encoding -------------------------------------------------------

    def property_input_ids(self, pset: PropertySet) -> list[list[int]]:
        return [
            self.input_vocab.encode(list(pair.input_tokens())) for pair in pset.pairs
        ]

    def sentence_ids(self, pset: PropertySet, tokens: list[str]) -> list[int]:
        return encode_output_tokens(tokens, pset, self.output_vocab)

    def encode_property_set(
        self,
        pv_ids: list[list[int]],
        rng: np.random.Generator | None = None,
        train: bool = False,
    ) -> Tensor:
        if not pv_ids:
            raise CorpusError("cannot encode an empty property set")
        return self.denc.encode_final(
            pv_ids,
            pad_id=self.input_vocab.pad_id,
            drop_rate=self.config.dropout if train else 0.0,
            rng=rng,
            train=train,
            dtype=self.config.np_dtype,
        )

    def encode_sentences(
        self,
        sent_ids: list[list[int]],
        rng: np.random.Generator | None = None,
        train: bool = False,
    ) -> tuple[Tensor, np.ndarray]:
        return self.senc.encode_steps(
            sent_ids,
            pad_id=self.output_vocab.pad_id,
            drop_rate=self.config.dropout if train else 0.0,
            rng=rng,
            train=train,
            dtype=self.config.np_dtype,
        )


def pair_similarity(
    p_vecs: Tensor,
    w_vecs: Tensor,
    bridge: Tensor | None = None,
) -> SimilarityResult:
    """Sum over words of the best property dot product.

    p_vecs is (K, H); w_vecs is (T, H), or (T, 2H) with a (2H, H) bridge that
    maps word vectors into the property space first.
    """
    if p_vecs.shape[0] == 0:
        raise CorpusError("similarity against an empty property set")
    words = matmul(w_vecs, bridge) if bridge is not None else w_vecs
    scores = matmul(words, transpose2d(p_vecs))  # (T, K)
    best = tmax(scores, axis=1)
    idx = scores.data.argmax(axis=1)
    return SimilarityResult(tsum(best), best, idx)


def margin_hinge_loss(
    match: list[Tensor],
    neg_sentence: list[Tensor] | list[list[Tensor]],
    neg_propset: list[Tensor] | list[list[Tensor]],
    margin: float = 1.0,
) -> Tensor:
    """Hinge terms per example against mismatched sentences and mismatched
    property sets, encouraging each matched pair to win by the margin.

    With one negative of each kind per example this is exactly the two-term
    ranking loss; several negatives sum their hinges. The result is averaged
    over the batch.
    """
    if not (len(match) == len(neg_sentence) == len(neg_propset)):
        raise ValueError("mismatched score list lengths")
    if len(match) == 0:
        raise ValueError("empty batch")

    def as_lists(batch):
        return [x if isinstance(x, list) else [x] for x in batch]

    neg_s = as_lists(neg_sentence)
    neg_p = as_lists(neg_propset)
    margin_t = Tensor(np.asarray(margin, dtype=match[0].dtype))
    per_example = []
    for m, ns, np_ in zip(match, neg_s, neg_p):
        terms = [relu(add(sub(n, m), margin_t)) for n in ns + np_]
        total = terms[0]
        for t in terms[1:]:
            total = add(total, t)
        per_example.append(total)
    return tmean(stack(per_example))


def sample_negative_indices(
    entity_ids: list[str], rng: np.random.Generator, per_example: int = 1
) -> tuple[list[list[int]], list[list[int]]]:
    """Mismatched sentence and property-set indices per batch item, never
    drawn from the same entity."""
    n = len(entity_ids)
    if n < 2:
        raise ValueError("margin training needs a batch of at least 2 examples")
    neg_s, neg_p = [], []
    for i in range(n):
        candidates = [j for j in range(n) if entity_ids[j] != entity_ids[i]]
        if not candidates:
            candidates = [j for j in range(n) if j != i]
        k = min(per_example, len(candidates))
        neg_s.append([int(candidates[r]) for r in rng.integers(len(candidates), size=k)])
        neg_p.append([int(candidates[r]) for r in rng.integers(len(candidates), size=k)])
    return neg_s, neg_p


def calibrate_threshold(dev_scores, a: float) -> float:
    """avg + a * std over the dev-set word similarity sample (population std)."""
    arr = np.asarray(list(dev_scores), dtype=float)
    if arr.size == 0:
        raise CorpusError("cannot calibrate a threshold on an empty sample")
    return float(arr.mean() + a * arr.std())


@dataclass
class AlignerInstance:
    entity_id: str
    record_idx: int
    sent_idx: int
    pv_ids: list[list[int]]
    sent_ids: list[int]


def _build_instances(
    model: ContentAligner, records: list[tuple[PropertySet, Document]]
) -> list[AlignerInstance]:
    instances = []
    for ridx, (pset, doc) in enumerate(records):
        pv_ids = model.property_input_ids(pset)
        for sidx, sent in enumerate(doc.sentences):
            if not sent:
                continue
            instances.append(
                AlignerInstance(
                    pset.entity_id, ridx, sidx, pv_ids, model.sentence_ids(pset, sent)
                )
            )
    return instances


def _batch_scores(
    model: ContentAligner,
    batch: list[AlignerInstance],
    rng: np.random.Generator,
    train: bool,
) -> tuple[list[Tensor], list[Tensor], list[Tensor]]:
    by_entity: dict[str, list[list[int]]] = {}
    for inst in batch:
        by_entity.setdefault(inst.entity_id, inst.pv_ids)
    entity_order = list(by_entity)
    flat: list[list[int]] = []
    slices: dict[str, slice] = {}
    for eid in entity_order:
        seqs = by_entity[eid]
        slices[eid] = slice(len(flat), len(flat) + len(seqs))
        flat.extend(seqs)
    p_all = model.encode_property_set(flat, rng=rng, train=train)
    w_all, lengths = model.encode_sentences(
        [inst.sent_ids for inst in batch], rng=rng, train=train
    )

    entity_ids = [inst.entity_id for inst in batch]
    neg_s, neg_p = sample_negative_indices(
        entity_ids, rng, model.config.negatives_per_example
    )

    def sim(p_entity: str, widx: int) -> Tensor:
        p = p_all[slices[p_entity], :]
        w = w_all[widx, : int(lengths[widx]), :]
        return pair_similarity(p, w, model.bridge).score

    match, negs, negp = [], [], []
    for i, inst in enumerate(batch):
        match.append(sim(inst.entity_id, i))
        negs.append([sim(inst.entity_id, j) for j in neg_s[i]])
        negp.append([sim(batch[j].entity_id, i) for j in neg_p[i]])
    return match, negs, negp


def split_dev(
    records: list[tuple[PropertySet, Document]],
    dev_frac: float,
    seed: int,
) -> tuple[list[tuple[PropertySet, Document]], list[tuple[PropertySet, Document]]]:
    """Deterministic entity-level train/dev split."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(records))
    n_dev = max(1, int(round(dev_frac * len(records)))) if len(records) > 1 else 0
    dev_idx = set(int(i) for i in order[:n_dev])
    train = [r for i, r in enumerate(records) if i not in dev_idx]
    dev = [r for i, r in enumerate(records) if i in dev_idx]
    return train, dev


def train_aligner(
    model: ContentAligner,
    records: list[tuple[PropertySet, Document]],
    rng: np.random.Generator,
) -> list[float]:
    """Max-margin training over sentence-level instances; returns epoch losses."""
    cfg = model.config
    instances = _build_instances(model, records)
    if len(instances) < 2:
        raise CorpusError("alignment training needs at least two sentence instances")
    optimizer = Adam(model.parameters(), lr=cfg.lr)
    history: list[float] = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(instances))
        total, n_batches = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            idxs = order[start : start + cfg.batch_size]
            if len(idxs) < 2:
                continue  # a singleton batch has no in-batch negatives
            batch = [instances[int(i)] for i in idxs]
            match, negs, negp = _batch_scores(model, batch, rng, train=True)
            loss = margin_hinge_loss(match, negs, negp, cfg.margin)
            loss.backward()
            optimizer.step()
            total += loss.item()
            n_batches += 1
        history.append(total / max(n_batches, 1))
        log.info("aligner epoch %d/%d margin loss %.4f", epoch, cfg.epochs, history[-1])
    return history


# --- inference and metrics ----------------------------------------------


def _real_property_count(pset: PropertySet) -> int:
    return len([p for p in pset.pairs if not p.is_empty_relation])


def word_best_similarities(
    model: ContentAligner, pset: PropertySet, doc: Document
) -> list[tuple[int, int, int, float]]:
    """Per word: (sentence idx, word idx, argmax real property idx, best sim).

    The empty relation participates in training but never in extraction, so
    the argmax here ranges over real properties only.
    """
    real_idx = [i for i, p in enumerate(pset.pairs) if not p.is_empty_relation]
    if not real_idx:
        raise CorpusError(f"{pset.entity_id}: no real properties")
    pv_ids = model.property_input_ids(pset)
    with no_grad():
        p_all = model.encode_property_set(pv_ids)
        p_real = p_all[np.asarray(real_idx), :]
        sents = [s for s in doc.sentences if s]
        sent_ids = [model.sentence_ids(pset, s) for s in sents]
        w_all, lengths = model.encode_sentences(sent_ids)
        out = []
        for si, sent in enumerate(sents):
            w = w_all[si, : int(lengths[si]), :]
            result = pair_similarity(p_real, w, model.bridge)
            for wi in range(len(sent)):
                out.append(
                    (
                        si,
                        wi,
                        real_idx[int(result.best_index[wi])],
                        float(result.per_word_best.data[wi]),
                    )
                )
    return out


def collect_dev_scores(
    model: ContentAligner, records: list[tuple[PropertySet, Document]]
) -> list[float]:
    scores: list[float] = []
    for pset, doc in records:
        scores.extend(s for (_, _, _, s) in word_best_similarities(model, pset, doc))
    return scores


def extract_alignments(
    model: ContentAligner,
    pset: PropertySet,
    doc: Document,
    threshold: float,
) -> AlignmentSet:
    """Link each word to its argmax property iff the best similarity exceeds
    the threshold; sub-threshold words stay unaligned."""
    aset = AlignmentSet(pset.entity_id)
    for si, wi, pi, score in word_best_similarities(model, pset, doc):
        if score > threshold:
            aset.add(si, wi, pi, surface=doc.sentences[si][wi])
    return aset


def alignment_fscore(
    pairs: list[tuple[AlignmentSet, AlignmentSet]],
) -> tuple[float, float, float]:
    """Macro-averaged precision/recall/f over (predicted, gold) link sets.

    An example with empty gold scores recall 1 when the prediction is empty
    too, else 0; precision mirrors that convention for empty predictions.
    """
    if not pairs:
        raise CorpusError("cannot score an empty alignment sample")
    ps, rs, fs = [], [], []
    for pred, gold in pairs:
        inter = len(pred.links & gold.links)
        if pred.links:
            p = inter / len(pred.links)
        else:
            p = 1.0 if not gold.links else 0.0
        if gold.links:
            r = inter / len(gold.links)
        else:
            r = 1.0 if not pred.links else 0.0
        f = 2 * p * r / (p + r) if (p + r) > 0 else 0.0
        ps.append(p)
        rs.append(r)
        fs.append(f)
    return float(np.mean(ps)), float(np.mean(rs)), float(np.mean(fs))


def tune_threshold_coef(
    model: ContentAligner,
    dev_records: list[tuple[PropertySet, Document]],
    dev_gold: dict[str, AlignmentSet],
    grid: tuple[float, ...] | None = None,
) -> tuple[float, float, float]:
    """Pick the threshold coefficient maximizing dev macro-F against gold.

    Returns (best coefficient, threshold, dev macro-F). Mirrors the
    calibration recipe: the threshold is always avg + a * std of the dev
    similarity sample, only a is searched.
    """
    grid = grid or model.config.tune_coef_grid
    scores = collect_dev_scores(model, dev_records)
    per_record = [
        word_best_similarities(model, pset, doc) for pset, doc in dev_records
    ]
    best = (model.config.threshold_coef, calibrate_threshold(scores, model.config.threshold_coef), -1.0)
    for a in grid:
        threshold = calibrate_threshold(scores, a)
        pairs = []
        for (pset, doc), words in zip(dev_records, per_record):
            pred = AlignmentSet(pset.entity_id)
            for si, wi, pi, s in words:
                if s > threshold:
                    pred.add(si, wi, pi)
            gold = dev_gold.get(pset.entity_id, AlignmentSet(pset.entity_id))
            pairs.append((pred, gold))
        _, _, f = alignment_fscore(pairs)
        if f > best[2]:
            best = (a, threshold, f)
    return best


def rank_at_k(
    true_score: float, distractor_scores: list[float], k: int = 15
) -> int:
    """1-based rank of the matched pair among k-1 distractors under descending
    score; ties rank pessimistically (worst position among the tied group)."""
    if len(distractor_scores) != k - 1:
        raise ValueError(
            f"rank@{k} needs exactly {k - 1} distractors, got {len(distractor_scores)}"
        )
    higher = sum(1 for d in distractor_scores if d > true_score)
    tied = sum(1 for d in distractor_scores if d == true_score)
    return 1 + higher + tied


def sentence_pair_score(
    model: ContentAligner, pset: PropertySet, sentence: list[str]
) -> float:
    pv_ids = model.property_input_ids(pset)
    with no_grad():
        p = model.encode_property_set(pv_ids)
        w, lengths = model.encode_sentences([model.sentence_ids(pset, sentence)])
        return float(
            pair_similarity(p, w[0, : int(lengths[0]), :], model.bridge).score.data
        )


def mean_rank_at_15(
    model: ContentAligner,
    eval_pairs: list[tuple[PropertySet, list[str]]],
    all_sentences: list[list[str]],
    rng: np.random.Generator,
    k: int = 15,
) -> float:
    """Average rank of each true (property set, sentence) pair against k-1
    sentences sampled from other entities."""
    if len(all_sentences) < k:
        raise CorpusError(f"need at least {k} candidate sentences")
    ranks = []
    for pset, sentence in eval_pairs:
        true_score = sentence_pair_score(model, pset, sentence)
        distractors = []
        while len(distractors) < k - 1:
            cand = all_sentences[int(rng.integers(len(all_sentences)))]
            if cand != sentence:
                distractors.append(cand)
        d_scores = [sentence_pair_score(model, pset, d) for d in distractors]
        ranks.append(rank_at_k(true_score, d_scores, k))
    return float(np.mean(ranks))
