"""Attention encoder-decoder over property sets.

The decoder is an LSTM with dot-product attention over the encoded
property-value pairs. The next-word distribution at step t comes from the
state that has consumed tokens 1..t: softmax(W_o tanh(W_c [c_t ; h_t])).
Multi-sentence abstracts are treated as one concatenated sequence and
trained block-wise: an optimizer update per block, with the decoder state
(but not gradients) carried across block boundaries and the encoder
re-encoded inside every block so it receives gradients throughout.
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
    concat,
    dropout,
    gather_rows,
    log_softmax,
    matmul,
    mul,
    no_grad,
    reshape,
    softmax,
    softplus,
    tanh,
    tmean,
    transpose2d,
    tsum,
)
from .corpus import (
    CorpusError,
    Document,
    PropertySet,
    Vocabulary,
    encode_output_tokens,
)
from .encoders import SequenceEncoder, init_lstm, init_embedding, lstm_cell

log = logging.getLogger(__name__)

__all__ = [
    "GeneratorConfig",
    "Seq2SeqGenerator",
    "DecodeState",
    "split_blocks",
    "train_generator",
    "generate",
]


@dataclass
class GeneratorConfig:
    hidden_dim: int = 100
    block_size: int = 40
    max_decode_len: int = 80
    decode: str = "greedy"
    epochs: int = 20
    batch_size: int = 8
    lr: float = 0.001
    dropout: float = 0.3
    seed: int = 1
    dtype: str = "float32"
    # Multi-task settings; used only in mtl mode. The schedule maps epoch
    # ranges to the word-task weight: (first epoch, last epoch or None, value).
    lambda_schedule: tuple[tuple[int, int | None, float], ...] = (
        (1, 4, 0.1),
        (5, None, 0.9),
    )

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError("block size must be >= 1")
        if self.max_decode_len < 1:
            raise ValueError("max decode length must be >= 1")
        if self.decode not in ("greedy", "sample"):
            raise ValueError(f"unknown decode strategy {self.decode!r}")

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32


@dataclass
class DecodeState:
    """Decoder recurrence state carried across steps and block boundaries."""

    h: Tensor
    c: Tensor
    last_token: np.ndarray | None = None
    block_tokens: int = 0

    def detached(self) -> "DecodeState":
        return DecodeState(
            self.h.detach(), self.c.detach(), self.last_token, self.block_tokens
        )


class Seq2SeqGenerator:
    """Encoder, decoder LSTM, attention, and the two output heads.

    The alignment-label head (v_a) shares W_c with the word head; in plain
    likelihood training it is never touched, so base and multi-task models
    are bit-compatible when the auxiliary weight is zero.
    """

    def __init__(
        self,
        input_vocab: Vocabulary,
        output_vocab: Vocabulary,
        config: GeneratorConfig,
        rng: np.random.Generator,
    ):
        self.input_vocab = input_vocab
        self.output_vocab = output_vocab
        self.config = config
        d = config.hidden_dim
        dt = config.np_dtype
        self.denc = SequenceEncoder.create(rng, len(input_vocab), d, "gen.denc", dt)
        self.out_embedding = init_embedding(
            rng, len(output_vocab), d, "gen.out_embedding", dt
        )
        self.dec = init_lstm(rng, d, d, "gen.dec", dt)
        k = 1.0 / math.sqrt(d)
        self.W_o = Parameter(
            rng.uniform(-k, k, (len(output_vocab), d)).astype(dt), "gen.W_o"
        )
        k2 = 1.0 / math.sqrt(2 * d)
        self.W_c = Parameter(rng.uniform(-k2, k2, (d, 2 * d)).astype(dt), "gen.W_c")
        self.v_a = Parameter(rng.uniform(-k, k, (d, 1)).astype(dt), "gen.v_a")

    def parameters(self) -> list[Parameter]:
        return (
            self.denc.parameters()
            + self.out_embedding.parameters()
            + self.dec.parameters()
            + [self.W_o, self.W_c, self.v_a]
        )

    # --- encoding -------------------------------------------------------

    def property_input_ids(self, pset: PropertySet) -> list[list[int]]:
        return [
            self.input_vocab.encode(list(pair.input_tokens())) for pair in pset.pairs
        ]

    def target_ids(self, pset: PropertySet, doc: Document) -> list[int]:
        tokens = doc.all_tokens()
        ids = encode_output_tokens(tokens, pset, self.output_vocab)
        return ids + [self.output_vocab.eos_id]

    def encode_property_sets(
        self,
        psets_ids: list[list[list[int]]],
        rng: np.random.Generator | None = None,
        train: bool = False,
    ) -> tuple[Tensor, np.ndarray]:
        """Encode a batch of property sets, padded over the pair dimension.

        Returns (B, K, d) vectors and a (B, K) float mask of real pairs.
        """
        if any(len(p) == 0 for p in psets_ids):
            raise CorpusError("cannot encode an empty property set")
        flat = [seq for pv in psets_ids for seq in pv]
        vecs = self.denc.encode_final(
            flat,
            pad_id=self.input_vocab.pad_id,
            drop_rate=self.config.dropout if train else 0.0,
            rng=rng,
            train=train,
            dtype=self.config.np_dtype,
        )
        dt = self.config.np_dtype
        B = len(psets_ids)
        K = max(len(p) for p in psets_ids)
        d = self.config.hidden_dim
        mask = np.zeros((B, K), dtype=dt)
        rows = []
        offset = 0
        for i, pv in enumerate(psets_ids):
            n = len(pv)
            chunk = vecs[offset : offset + n, :]
            if n < K:
                padding = Tensor(np.zeros((K - n, d), dtype=dt))
                chunk = concat([chunk, padding], axis=0)
            rows.append(reshape(chunk, (1, K, d)))
            mask[i, :n] = 1.0
            offset += n
        return concat(rows, axis=0), mask

    # --- one decode step --------------------------------------------------

    def init_state(self, p_enc: Tensor, p_mask: np.ndarray) -> DecodeState:
        """Start the decoder from the mean of the encoded property vectors."""
        if p_enc.shape[1] == 0:
            raise CorpusError("cannot initialise the decoder on an empty set")
        dt = self.config.np_dtype
        counts = p_mask.sum(axis=1, keepdims=True).astype(dt)  # (B, 1)
        masked = mul(p_enc, Tensor(p_mask[:, :, None]))
        h0 = mul(tsum(masked, axis=1), Tensor(1.0 / counts))
        c0 = Tensor(np.zeros_like(h0.data))
        return DecodeState(h0, c0, None, 0)

    def attend(self, h: Tensor, p_enc: Tensor, p_mask: np.ndarray) -> tuple[Tensor, Tensor]:
        """Dot-product attention of (B, d) state over (B, K, d) properties."""
        if p_enc.shape[1] == 0:
            raise CorpusError("attention over an empty property set")
        B, K, d = p_enc.shape
        scores = reshape(matmul(p_enc, reshape(h, (B, d, 1))), (B, K))
        neg = np.where(p_mask > 0, 0.0, -1e9).astype(scores.dtype)
        alpha = softmax(add(scores, Tensor(neg)), axis=1)
        ctx = reshape(matmul(reshape(alpha, (B, 1, K)), p_enc), (B, d))
        return ctx, alpha

    def output_heads(
        self,
        state: DecodeState,
        p_enc: Tensor,
        p_mask: np.ndarray,
        drop_rng: np.random.Generator | None = None,
        train: bool = False,
    ) -> tuple[Tensor, Tensor, Tensor]:
        """Log-probabilities over the vocabulary, the alignment-head logit,
        and the attention weights, all from the current state."""
        h = state.h
        if train and self.config.dropout > 0.0:
            h = dropout(h, self.config.dropout, drop_rng, train=True)
        ctx, alpha = self.attend(h, p_enc, p_mask)
        hidden = tanh(matmul(concat([ctx, h], axis=1), transpose2d(self.W_c)))
        logits = matmul(hidden, transpose2d(self.W_o))
        logp = log_softmax(logits, axis=1)
        align_logit = reshape(matmul(hidden, self.v_a), (hidden.shape[0],))
        return logp, align_logit, alpha

    def advance(
        self,
        state: DecodeState,
        token_ids: np.ndarray,
        drop_rng: np.random.Generator | None = None,
        train: bool = False,
    ) -> DecodeState:
        """Consume one token per batch row (Eq.-style recurrence step)."""
        emb = self.out_embedding.lookup(token_ids)
        if train and self.config.dropout > 0.0:
            emb = dropout(emb, self.config.dropout, drop_rng, train=True)
        h, c = lstm_cell(emb, state.h, state.c, self.dec)
        return DecodeState(h, c, token_ids, state.block_tokens + 1)


def split_blocks(length: int, block_size: int) -> list[tuple[int, int]]:
    """Consecutive [start, end) block bounds; the last block may be short."""
    if length <= 0:
        raise ValueError("cannot split an empty sequence")
    return [(s, min(s + block_size, length)) for s in range(0, length, block_size)]


def prob_distribution(model: Seq2SeqGenerator, state: DecodeState, p_enc, p_mask) -> np.ndarray:
    """Next-token probabilities for a single-row batch (inference)."""
    with no_grad():
        logp, _, _ = model.output_heads(state, p_enc, p_mask)
    return np.exp(logp.data[0])


def sequence_nll(
    model: Seq2SeqGenerator,
    pset_ids: list[list[int]],
    target: list[int],
) -> Tensor:
    """Teacher-forced negative log likelihood of one target sequence."""
    if not target:
        raise CorpusError("empty target sequence")
    with_eos = target
    p_enc, p_mask = model.encode_property_sets([pset_ids])
    state = model.init_state(p_enc, p_mask)
    terms = []
    for t, tok in enumerate(with_eos):
        logp, _, _ = model.output_heads(state, p_enc, p_mask)
        terms.append(gather_rows(logp, np.asarray([tok])))
        state = model.advance(state, np.asarray([tok]))
    total = tsum(concat(terms, axis=0))
    return mul(total, Tensor(np.asarray(-1.0, dtype=total.dtype)))


@dataclass
class _Batch:
    record_idxs: list[int]
    psets_ids: list[list[list[int]]]
    targets: np.ndarray  # (B, T) padded with pad_id
    mask: np.ndarray  # (B, T) floats
    labels: np.ndarray | None = None  # (B, T) alignment labels, mtl only


def _make_batches(
    examples: list[tuple[int, list[list[int]], list[int], list[int] | None]],
    batch_size: int,
    pad_id: int,
    dtype,
    rng: np.random.Generator,
) -> list[_Batch]:
    order = np.argsort([len(e[2]) for e in examples], kind="stable")
    batches = []
    for start in range(0, len(order), batch_size):
        idxs = [int(i) for i in order[start : start + batch_size]]
        group = [examples[i] for i in idxs]
        T = max(len(e[2]) for e in group)
        B = len(group)
        targets = np.full((B, T), pad_id, dtype=np.int64)
        mask = np.zeros((B, T), dtype=dtype)
        labels = np.zeros((B, T), dtype=dtype)
        has_labels = group[0][3] is not None
        for j, (_, _, tgt, lab) in enumerate(group):
            targets[j, : len(tgt)] = tgt
            mask[j, : len(tgt)] = 1.0
            if has_labels:
                labels[j, : len(lab)] = lab
        batches.append(
            _Batch(
                [e[0] for e in group],
                [e[1] for e in group],
                targets,
                mask,
                labels if has_labels else None,
            )
        )
    perm = rng.permutation(len(batches))
    return [batches[int(i)] for i in perm]


def _block_loss(
    model: Seq2SeqGenerator,
    batch: _Batch,
    state: DecodeState,
    start: int,
    end: int,
    rng: np.random.Generator,
    train: bool,
    lam: float | None,
) -> tuple[Tensor, DecodeState, dict[str, float]]:
    """Teacher-forced loss over one block; returns the carried state."""
    p_enc, p_mask = model.encode_property_sets(batch.psets_ids, rng=rng, train=train)
    dt = model.config.np_dtype
    nll_terms = []
    aln_terms = []
    for t in range(start, end):
        logp, aln_logit, _ = model.output_heads(
            state, p_enc, p_mask, drop_rng=rng, train=train
        )
        step_mask = Tensor(batch.mask[:, t])
        tok = batch.targets[:, t]
        nll_terms.append(mul(gather_rows(logp, tok), step_mask))
        if lam is not None:
            # Binary cross-entropy via the stable softplus form:
            # -log P(a) = softplus(z) - a * z for label a in {0, 1}.
            a_t = Tensor(batch.labels[:, t])
            bce = sub_softplus(aln_logit, a_t)
            aln_terms.append(mul(bce, step_mask))
        state = model.advance(state, tok, drop_rng=rng, train=train)
    B = batch.targets.shape[0]
    inv_b = Tensor(np.asarray(1.0 / B, dtype=dt))
    nll = mul(mul(tsum(concat([reshape(x, (B, 1)) for x in nll_terms], axis=1)), Tensor(np.asarray(-1.0, dtype=dt))), inv_b)
    stats = {"nll": float(nll.data)}
    if lam is None:
        return nll, state, stats
    aln = mul(tsum(concat([reshape(x, (B, 1)) for x in aln_terms], axis=1)), inv_b)
    stats["aln"] = float(aln.data)
    lam_t = Tensor(np.asarray(lam, dtype=dt))
    one_minus = Tensor(np.asarray(1.0 - lam, dtype=dt))
    joint = add(mul(nll, lam_t), mul(aln, one_minus))
    stats["loss"] = float(joint.data)
    return joint, state, stats


def sub_softplus(logit: Tensor, label: Tensor) -> Tensor:
    """softplus(z) - a*z, the negative log likelihood of a Bernoulli logit."""
    return add(softplus(logit), mul(mul(label, logit), Tensor(np.asarray(-1.0, dtype=logit.dtype))))


def train_generator(
    model: Seq2SeqGenerator,
    examples: list[tuple[int, list[list[int]], list[int], list[int] | None]],
    rng: np.random.Generator,
    lambda_for_epoch=None,
) -> list[dict[str, float]]:
    """Block-wise likelihood (or multi-task) training.

    Each example is (record idx, property pair id lists, target ids with EOS,
    optional 0/1 alignment labels). lambda_for_epoch maps an epoch number to
    the word-task weight; None trains the plain likelihood objective.
    Returns per-epoch loss summaries.
    """
    cfg = model.config
    optimizer = Adam(model.parameters(), lr=cfg.lr)
    history: list[dict[str, float]] = []
    for epoch in range(1, cfg.epochs + 1):
        lam = None if lambda_for_epoch is None else lambda_for_epoch(epoch)
        if lam is not None and not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {lam}")
        batches = _make_batches(
            examples, cfg.batch_size, model.output_vocab.pad_id, cfg.np_dtype, rng
        )
        totals: dict[str, float] = {}
        n_blocks = 0
        for batch in batches:
            T = batch.targets.shape[1]
            p_enc, p_mask = model.encode_property_sets(batch.psets_ids)
            state = model.init_state(p_enc, p_mask).detached()
            for start, end in split_blocks(T, cfg.block_size):
                loss, state, stats = _block_loss(
                    model, batch, state, start, end, rng, True, lam
                )
                loss.backward()
                optimizer.step()
                state = state.detached()
                for k, v in stats.items():
                    totals[k] = totals.get(k, 0.0) + v
                n_blocks += 1
        history.append({k: v / max(n_blocks, 1) for k, v in totals.items()})
        log.info(
            "generator epoch %d/%d %s",
            epoch,
            cfg.epochs,
            " ".join(f"{k}={v:.4f}" for k, v in history[-1].items()),
        )
    return history


def generate(
    model: Seq2SeqGenerator,
    pset_ids: list[list[int]],
    rng: np.random.Generator | None = None,
    max_len: int | None = None,
    mode: str | None = None,
) -> list[int]:
    """Decode a token id sequence for one property set (greedy or sampled).

    Stops after the EOS token or at the length limit; EOS is not included in
    the returned sequence.
    """
    cfg = model.config
    mode = mode or cfg.decode
    limit = max_len or cfg.max_decode_len
    if mode == "sample" and rng is None:
        raise ValueError("sampling decode requires an rng")
    eos = model.output_vocab.eos_id
    out: list[int] = []
    with no_grad():
        p_enc, p_mask = model.encode_property_sets([pset_ids])
        state = model.init_state(p_enc, p_mask)
        for _ in range(limit):
            probs = prob_distribution(model, state, p_enc, p_mask)
            if mode == "greedy":
                tok = int(np.argmax(probs))
            else:
                tok = int(rng.choice(len(probs), p=probs / probs.sum()))
            if tok == eos:
                break
            out.append(tok)
            state = model.advance(state, np.asarray([tok]))
    return out
