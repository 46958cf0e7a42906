"""Bidirectional LSTM sequence encoders.

Two encoders share this machinery: the property-value encoder, which reads
the concatenated property+value(+class) token sequence and returns the sum
of the final forward and backward states (an h-dim vector per pair), and the
sentence encoder, which returns the concatenated forward/backward outputs at
every position (2h-dim vectors). The direction asymmetry (sum for property
pairs, concatenation for sentence positions) is intentional and preserved.

All encoding runs batched over padded id matrices with step masks, so a
single call can encode every property-value pair in a minibatch at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Parameter,
    Tensor,
    add,
    concat,
    dropout,
    embedding,
    gather_time,
    matmul,
    mul,
    sigmoid,
    stack,
    tanh,
)

__all__ = [
    "LSTMParams",
    "EmbeddingTable",
    "SequenceEncoder",
    "lstm_cell",
    "init_lstm",
    "init_embedding",
    "load_embedding_text",
    "pad_id_batch",
]


@dataclass
class LSTMParams:
    """Fused-gate LSTM weights: gates ordered (input, forget, output, candidate)."""

    W: Parameter  # (input_dim, 4*hidden)
    U: Parameter  # (hidden, 4*hidden)
    b: Parameter  # (4*hidden,)
    input_dim: int
    hidden_dim: int

    def parameters(self) -> list[Parameter]:
        return [self.W, self.U, self.b]


def init_lstm(
    rng: np.random.Generator,
    input_dim: int,
    hidden_dim: int,
    name: str,
    dtype=np.float32,
    identity_candidate: bool = False,
) -> LSTMParams:
    k = 1.0 / np.sqrt(hidden_dim)
    shape_w = (input_dim, 4 * hidden_dim)
    shape_u = (hidden_dim, 4 * hidden_dim)
    W = Parameter(rng.uniform(-k, k, shape_w).astype(dtype), f"{name}.W")
    U = Parameter(rng.uniform(-k, k, shape_u).astype(dtype), f"{name}.U")
    b = Parameter(np.zeros(4 * hidden_dim, dtype=dtype), f"{name}.b")
    if identity_candidate:
        if input_dim != hidden_dim:
            raise ValueError("identity candidate init needs input_dim == hidden_dim")
        # Start the cell as a leaky accumulator of its inputs: the candidate
        # gate reads the embedding through an identity map and the input gate
        # opens, so token identity survives the untrained encoder.
        W.data[:, 3 * hidden_dim :] = np.eye(input_dim, dtype=dtype)
        b.data[0:hidden_dim] = 1.0
    return LSTMParams(W, U, b, input_dim, hidden_dim)


def lstm_cell(
    x: Tensor, h_prev: Tensor, c_prev: Tensor, params: LSTMParams
) -> tuple[Tensor, Tensor]:
    """One step of the standard gated recurrence for a (B, input_dim) batch."""
    if x.shape[-1] != params.input_dim:
        raise ValueError(
            f"lstm input dim mismatch: got {x.shape}, expected last dim "
            f"{params.input_dim}"
        )
    if h_prev.shape[-1] != params.hidden_dim:
        raise ValueError(
            f"lstm hidden dim mismatch: got {h_prev.shape}, expected last dim "
            f"{params.hidden_dim}"
        )
    zs = add(add(matmul(x, params.W), matmul(h_prev, params.U)), params.b)
    H = params.hidden_dim
    i = sigmoid(zs[..., 0 * H : 1 * H])
    f = sigmoid(zs[..., 1 * H : 2 * H])
    o = sigmoid(zs[..., 2 * H : 3 * H])
    g = tanh(zs[..., 3 * H : 4 * H])
    c = add(mul(f, c_prev), mul(i, g))
    h = mul(o, tanh(c))
    return h, c


def _zeros(batch: int, dim: int, dtype) -> Tensor:
    return Tensor(np.zeros((batch, dim), dtype=dtype))


def run_lstm(
    steps: list[Tensor],
    masks: list[np.ndarray] | None,
    params: LSTMParams,
    collect_outputs: bool = False,
) -> tuple[list[Tensor], Tensor, Tensor]:
    """Run the recurrence over embedded steps; masked rows keep their state.

    steps[t] is (B, input_dim); masks[t], when given, is a (B, 1) float array
    with 1 for live rows. Returns (per-step hidden states if collected,
    final hidden, final cell).
    """
    if not steps:
        raise ValueError("cannot run an LSTM over an empty sequence")
    batch = steps[0].shape[0]
    dtype = steps[0].dtype
    h = _zeros(batch, params.hidden_dim, dtype)
    c = _zeros(batch, params.hidden_dim, dtype)
    outputs: list[Tensor] = []
    for t, x in enumerate(steps):
        h_new, c_new = lstm_cell(x, h, c, params)
        if masks is not None:
            m = Tensor(masks[t])
            keep = Tensor(1.0 - masks[t])
            h = add(mul(h_new, m), mul(h, keep))
            c = add(mul(c_new, m), mul(c, keep))
        else:
            h, c = h_new, c_new
        if collect_outputs:
            outputs.append(h)
    return outputs, h, c


@dataclass
class EmbeddingTable:
    weight: Parameter
    dim: int

    def lookup(self, ids: np.ndarray) -> Tensor:
        return embedding(self.weight, ids)

    def parameters(self) -> list[Parameter]:
        return [self.weight]


def init_embedding(
    rng: np.random.Generator,
    vocab_size: int,
    dim: int,
    name: str,
    dtype=np.float32,
) -> EmbeddingTable:
    data = rng.uniform(-0.05, 0.05, (vocab_size, dim)).astype(dtype)
    return EmbeddingTable(Parameter(data, name), dim)


def load_embedding_text(
    path: str,
    tokens: list[str],
    dim: int,
    rng: np.random.Generator,
    name: str,
    dtype=np.float32,
) -> EmbeddingTable:
    """Initialise an embedding table from a word2vec-style text file.

    Each line holds a word followed by its space-separated vector. Words not
    covered by the file keep their seeded uniform(-0.05, 0.05) rows.
    """
    table = init_embedding(rng, len(tokens), dim, name, dtype)
    index = {t: i for i, t in enumerate(tokens)}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                continue
            idx = index.get(parts[0])
            if idx is None:
                continue
            table.weight.data[idx] = np.asarray([float(v) for v in parts[1:]], dtype=dtype)
    return table


def pad_id_batch(
    sequences: list[list[int]], pad_id: int, dtype=np.float32
) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
    """Pad ragged id lists to a (B, T) matrix plus per-step (B, 1) masks."""
    if any(len(s) == 0 for s in sequences):
        raise ValueError("cannot encode an empty token sequence")
    batch = len(sequences)
    max_len = max(len(s) for s in sequences)
    ids = np.full((batch, max_len), pad_id, dtype=np.int64)
    lengths = np.zeros(batch, dtype=np.int64)
    for i, seq in enumerate(sequences):
        ids[i, : len(seq)] = seq
        lengths[i] = len(seq)
    masks = [
        (lengths > t).astype(dtype).reshape(batch, 1) for t in range(max_len)
    ]
    return ids, masks, lengths


def _reverse_rows(ids: np.ndarray, lengths: np.ndarray, pad_id: int) -> np.ndarray:
    out = np.full_like(ids, pad_id)
    for i, n in enumerate(lengths):
        out[i, :n] = ids[i, :n][::-1]
    return out


class SequenceEncoder:
    """A bidirectional LSTM over one embedding table.

    ``encode_final`` returns forward-final + backward-final per sequence
    (property-value pairs); ``encode_steps`` returns the per-position
    [forward ; backward] concatenation (sentences).
    """

    def __init__(
        self,
        embedding_table: EmbeddingTable,
        fwd: LSTMParams,
        bwd: LSTMParams,
        name: str,
    ):
        self.embedding = embedding_table
        self.fwd = fwd
        self.bwd = bwd
        self.name = name

    @classmethod
    def create(
        cls,
        rng: np.random.Generator,
        vocab_size: int,
        dim: int,
        name: str,
        dtype=np.float32,
        identity_candidate: bool = False,
    ) -> "SequenceEncoder":
        table = init_embedding(rng, vocab_size, dim, f"{name}.embedding", dtype)
        fwd = init_lstm(rng, dim, dim, f"{name}.fwd", dtype, identity_candidate)
        bwd = init_lstm(rng, dim, dim, f"{name}.bwd", dtype, identity_candidate)
        return cls(table, fwd, bwd, name)

    @property
    def hidden_dim(self) -> int:
        return self.fwd.hidden_dim

    def parameters(self) -> list[Parameter]:
        return (
            self.embedding.parameters() + self.fwd.parameters() + self.bwd.parameters()
        )

    def _embed_steps(
        self,
        ids: np.ndarray,
        drop_rate: float,
        rng: np.random.Generator | None,
        train: bool,
    ) -> list[Tensor]:
        emb = self.embedding.lookup(ids)  # (B, T, dim)
        if train and drop_rate > 0.0:
            if rng is None:
                raise ValueError("dropout requires an rng")
            emb = dropout(emb, drop_rate, rng, train=True)
        return [emb[:, t, :] for t in range(ids.shape[1])]

    def encode_final(
        self,
        sequences: list[list[int]],
        pad_id: int,
        drop_rate: float = 0.0,
        rng: np.random.Generator | None = None,
        train: bool = False,
        dtype=np.float32,
    ) -> Tensor:
        """(B, H) matrix: elementwise sum of final forward and backward states."""
        ids, masks, lengths = pad_id_batch(sequences, pad_id, dtype)
        rev = _reverse_rows(ids, lengths, pad_id)
        f_steps = self._embed_steps(ids, drop_rate, rng, train)
        b_steps = self._embed_steps(rev, drop_rate, rng, train)
        _, f_final, _ = run_lstm(f_steps, masks, self.fwd)
        _, b_final, _ = run_lstm(b_steps, masks, self.bwd)
        return add(f_final, b_final)

    def encode_steps(
        self,
        sequences: list[list[int]],
        pad_id: int,
        drop_rate: float = 0.0,
        rng: np.random.Generator | None = None,
        train: bool = False,
        dtype=np.float32,
    ) -> tuple[Tensor, np.ndarray]:
        """(B, T, 2H) per-position vectors plus the true lengths.

        Positions beyond a row's length hold junk; callers mask by length.
        """
        ids, masks, lengths = pad_id_batch(sequences, pad_id, dtype)
        rev = _reverse_rows(ids, lengths, pad_id)
        f_steps = self._embed_steps(ids, drop_rate, rng, train)
        b_steps = self._embed_steps(rev, drop_rate, rng, train)
        f_out, _, _ = run_lstm(f_steps, masks, self.fwd, collect_outputs=True)
        b_out, _, _ = run_lstm(b_steps, masks, self.bwd, collect_outputs=True)
        fwd = stack(f_out, axis=1)  # (B, T, H)
        bwd = stack(b_out, axis=1)
        # Backward outputs are produced over reversed rows; realign them so
        # position t carries the state that read tokens t..L-1.
        T = ids.shape[1]
        idx = np.zeros((ids.shape[0], T), dtype=np.int64)
        for i, n in enumerate(lengths):
            idx[i, :n] = np.arange(n - 1, -1, -1)
        bwd_aligned = gather_time(bwd, idx)
        return concat([fwd, bwd_aligned], axis=2), lengths
