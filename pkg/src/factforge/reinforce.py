"""Policy-gradient fine-tuning with an alignment-precision reward.

The pretrained generator acts as the policy; within each training block the
leading tokens stay teacher-forced under the likelihood objective while the
agent samples the last few tokens, a count grown on a fixed schedule until it
covers whole blocks. The block reward is the type-level unigram precision of
the sampled tokens against the document's aligned words, scaled and penalised
for emitting YEAR/NUMERIC placeholders; a linear regressor over the decoder
state supplies the variance-reducing baseline and receives no gradient
through the state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    SGD,
    Parameter,
    Tensor,
    add,
    gather_rows,
    matmul,
    mul,
    reshape,
    square,
    stack,
    tsum,
)
from .corpus import NUMERIC, YEAR
from .generator import DecodeState, Seq2SeqGenerator, split_blocks

log = logging.getLogger(__name__)

__all__ = [
    "RLConfig",
    "BaselineRegressor",
    "SampledBlock",
    "curriculum_schedule",
    "block_reward",
    "sample_block",
    "reinforce_update",
    "policy_gradient_loss",
    "train_rl",
]


@dataclass
class RLConfig:
    reward_scale: float = 1.0  # gamma, multiplies the unigram precision
    kappa: float = 0.025  # per YEAR/NUMERIC token emitted
    mho: int = 3  # curriculum increment, applied every 2 epochs
    block_size: int = 50
    epochs: int = 35
    lr: float = 0.001
    baseline_lr: float = 0.01
    seed: int = 1

    def __post_init__(self):
        if self.reward_scale <= 0:
            raise ValueError("reward scale must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.mho < 1:
            raise ValueError("curriculum increment must be >= 1")


def curriculum_schedule(epoch: int, config: RLConfig) -> int:
    """Agent-predicted token count for an epoch: grows by the increment every
    two epochs and clamps at the block size."""
    if epoch < 1:
        raise ValueError("epochs are 1-based")
    return min(config.block_size, config.mho * math.ceil(epoch / 2))


def block_reward(
    sampled_tokens: list[str],
    aligned_words: set[str],
    config: RLConfig,
) -> float:
    """Scaled unigram precision of the sampled tokens against the aligned-word
    set, minus the placeholder penalty; an empty block scores 0."""
    if not sampled_tokens:
        return 0.0
    matched = sum(1 for t in sampled_tokens if t in aligned_words)
    placeholders = sum(1 for t in sampled_tokens if t in (YEAR, NUMERIC))
    return (
        config.reward_scale * matched / len(sampled_tokens)
        - config.kappa * placeholders
    )


class BaselineRegressor:
    """Linear regression from the decoder hidden state to the block reward."""

    def __init__(self, dim: int, rng: np.random.Generator, dtype=np.float32):
        k = 1.0 / math.sqrt(dim)
        self.w = Parameter(rng.uniform(-k, k, (dim, 1)).astype(dtype), "baseline.w")
        self.b = Parameter(np.zeros((1,), dtype=dtype), "baseline.b")
        self.dim = dim

    def parameters(self) -> list[Parameter]:
        return [self.w, self.b]

    def predict(self, hidden: np.ndarray) -> Tensor:
        """Scalar prediction from a detached (d,) state snapshot."""
        h = Tensor(np.asarray(hidden, dtype=self.w.dtype).reshape(1, self.dim))
        return reshape(add(matmul(h, self.w), self.b), ())


@dataclass
class SampledBlock:
    """One block's worth of teacher-forced prefix and agent-sampled suffix."""

    prefix_ids: list[int]
    prefix_nll: Tensor | None
    sampled_ids: list[int]
    sampled_logps: list[Tensor] = field(default_factory=list)
    hidden_snapshots: list[np.ndarray] = field(default_factory=list)
    state: DecodeState | None = None


def _sample_token(logp_row: np.ndarray, rng: np.random.Generator) -> int:
    gumbel = -np.log(-np.log(rng.random(logp_row.shape)))
    return int(np.argmax(logp_row + gumbel))


def sample_block(
    model: Seq2SeqGenerator,
    pset_ids: list[list[int]],
    state: DecodeState,
    block_targets: list[int],
    agent_tokens: int,
    rng: np.random.Generator,
    train: bool = False,
) -> SampledBlock:
    """Teacher-force the first (len(block) - agent_tokens) positions, then let
    the policy sample the rest, recording per-step log-probabilities and
    detached state snapshots for the baseline. Sampling stops early on EOS.
    """
    if agent_tokens > model.config.block_size:
        raise ValueError(
            f"agent token count {agent_tokens} exceeds block size "
            f"{model.config.block_size}"
        )
    p_enc, p_mask = model.encode_property_sets([pset_ids], rng=rng, train=train)
    n_agent = min(agent_tokens, len(block_targets))
    prefix = block_targets[: len(block_targets) - n_agent]
    out = SampledBlock(prefix_ids=list(prefix), prefix_nll=None, sampled_ids=[])
    nll_terms = []
    for tok in prefix:
        logp, _, _ = model.output_heads(state, p_enc, p_mask, drop_rng=rng, train=train)
        nll_terms.append(gather_rows(logp, np.asarray([tok])))
        state = model.advance(state, np.asarray([tok]), drop_rng=rng, train=train)
    if nll_terms:
        total = tsum(stack(nll_terms))
        out.prefix_nll = mul(total, Tensor(np.asarray(-1.0, dtype=total.dtype)))
    eos = model.output_vocab.eos_id
    for _ in range(n_agent):
        logp, _, _ = model.output_heads(state, p_enc, p_mask, drop_rng=rng, train=train)
        tok = _sample_token(logp.data[0], rng)
        out.sampled_logps.append(reshape(gather_rows(logp, np.asarray([tok])), ()))
        out.hidden_snapshots.append(state.h.data[0].copy())
        out.sampled_ids.append(tok)
        if tok == eos:
            break
        state = model.advance(state, np.asarray([tok]), drop_rng=rng, train=train)
    out.state = state
    return out


def policy_gradient_loss(logps: list[Tensor], scales: list[float]) -> Tensor:
    """Sum of -scale_t * log pi(action_t); scales are treated as constants."""
    if len(logps) != len(scales):
        raise ValueError("one scale per log-probability required")
    dtype = logps[0].dtype
    terms = [
        mul(lp, Tensor(np.asarray(-s, dtype=dtype))) for lp, s in zip(logps, scales)
    ]
    return tsum(stack(terms))


def reinforce_update(
    block: SampledBlock,
    reward: float,
    baseline: BaselineRegressor,
) -> tuple[Tensor | None, Tensor | None]:
    """Build the policy and baseline losses for one sampled block.

    The policy term scales each step's log-probability by (reward - b_t) with
    the baseline value detached; the baseline trains toward the block reward
    by squared error and receives no gradient through the state snapshots.
    """
    if not block.sampled_ids:
        return None, None
    b_preds = [baseline.predict(h) for h in block.hidden_snapshots]
    scales = [reward - float(b.data) for b in b_preds]
    policy_loss = policy_gradient_loss(block.sampled_logps, scales)
    dtype = b_preds[0].dtype
    r_t = Tensor(np.asarray(reward, dtype=dtype))
    sq = [square(add(b, mul(r_t, Tensor(np.asarray(-1.0, dtype=dtype))))) for b in b_preds]
    baseline_loss = mul(
        tsum(stack(sq)), Tensor(np.asarray(1.0 / len(sq), dtype=dtype))
    )
    return policy_loss, baseline_loss


def train_rl(
    model: Seq2SeqGenerator,
    examples: list[tuple[int, list[list[int]], list[int], set[str]]],
    config: RLConfig,
    rng: np.random.Generator,
) -> list[dict[str, float]]:
    """Fine-tune a pretrained policy document by document.

    Each example is (record idx, property pair ids, target ids with EOS, the
    document's aligned-word surface set). Returns per-epoch summaries of the
    mean block reward and prefix likelihood.
    """
    policy_opt = SGD(model.parameters(), lr=config.lr)
    baseline = BaselineRegressor(
        model.config.hidden_dim, rng, dtype=model.config.np_dtype
    )
    baseline_opt = SGD(baseline.parameters(), lr=config.baseline_lr, clip_norm=None)
    history: list[dict[str, float]] = []
    vocab = model.output_vocab
    for epoch in range(1, config.epochs + 1):
        agent_tokens = curriculum_schedule(epoch, config)
        rewards, nlls = [], []
        order = rng.permutation(len(examples))
        for idx in order:
            _, pset_ids, target, aligned = examples[int(idx)]
            p_enc, p_mask = model.encode_property_sets([pset_ids])
            state = model.init_state(p_enc, p_mask).detached()
            for start, end in split_blocks(len(target), config.block_size):
                block = sample_block(
                    model,
                    pset_ids,
                    state,
                    target[start:end],
                    agent_tokens,
                    rng,
                    train=True,
                )
                sampled_tokens = [vocab.token_of(t) for t in block.sampled_ids]
                r = block_reward(sampled_tokens, aligned, config)
                policy_loss, baseline_loss = reinforce_update(block, r, baseline)
                total = block.prefix_nll
                if policy_loss is not None:
                    total = policy_loss if total is None else add(total, policy_loss)
                    rewards.append(r)
                if block.prefix_nll is not None:
                    nlls.append(float(block.prefix_nll.data))
                if total is not None:
                    total.backward()
                    policy_opt.step()
                if baseline_loss is not None:
                    baseline_loss.backward()
                    baseline_opt.step()
                state = block.state.detached()
        summary = {
            "reward": float(np.mean(rewards)) if rewards else 0.0,
            "prefix_nll": float(np.mean(nlls)) if nlls else 0.0,
            "agent_tokens": float(agent_tokens),
        }
        history.append(summary)
        log.info(
            "rl epoch %d/%d reward %.4f prefix nll %.2f agent tokens %d",
            epoch,
            config.epochs,
            summary["reward"],
            summary["prefix_nll"],
            agent_tokens,
        )
    return history
