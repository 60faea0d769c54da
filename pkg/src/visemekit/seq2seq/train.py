"""Mini-batch Adam training with gradient clipping and best-epoch selection."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import ConfigError, DegenerateInputError, NumericError
from ..metrics import corpus_error_rates
from .decode import greedy_decode_batch
from .model import Params, loss_and_gradients, make_batch
from .vocab import TokenVocab

log = logging.getLogger(__name__)

PRECISIONS = {"standard": np.float32, "verification": np.float64}


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 10
    teacher_forcing: float = 1.0
    clip_norm: float = 5.0
    seed: int = 0
    precision: str = "standard"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    # stop once validation CER reaches this value (None: run every epoch)
    target_cer: float | None = None
    # 0 disables; otherwise stop after this many epochs without improvement
    patience: int = 0
    decode_max_len: int = 0

    def validate(self) -> "TrainConfig":
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")
        if not 0.0 <= self.teacher_forcing <= 1.0:
            raise ConfigError("teacher_forcing must lie in [0, 1]")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigError("batch_size must be >= 1 and epochs >= 0")
        if self.precision not in PRECISIONS:
            raise ConfigError(f"precision must be one of {sorted(PRECISIONS)}")
        return self

    @property
    def dtype(self):
        return PRECISIONS[self.precision]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    valid_cer: float | None
    wall_seconds: float

    def to_dict(self):
        return asdict(self)


class Adam:
    def __init__(self, params: Params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: Params, grads: dict):
        if self.lr == 0:
            return
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for k, p in params.items():
            g = grads[k]
            m, v = self.m[k], self.v[k]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= (self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)).astype(p.dtype)


def clip_gradients(grads: dict, max_norm: float) -> float:
    norm = float(np.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads.values())))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for g in grads.values():
            g *= scale
    return norm


def make_batches(pairs, batch_size: int, rng: np.random.Generator, pool: int = 32):
    """Shuffle, length-sort within pools of batches, then shuffle batch order.

    Keeps padding low while staying a pure function of ``rng``.
    """
    order = rng.permutation(len(pairs))
    span = batch_size * pool
    batches = []
    for start in range(0, len(order), span):
        chunk = order[start : start + span]
        chunk = sorted(chunk, key=lambda i: (len(pairs[i][0]), len(pairs[i][1])))
        for b in range(0, len(chunk), batch_size):
            batches.append(chunk[b : b + batch_size])
    return [batches[i] for i in rng.permutation(len(batches))]


def evaluate_cer(params: Params, vocab: TokenVocab, pairs, max_len: int = 0, batch_size: int = 256) -> float:
    hyps, refs = decode_all(params, vocab, [s for s, _ in pairs], max_len, batch_size), [vocab.decode_target(t) for _, t in pairs]
    return corpus_error_rates(zip(refs, hyps)).cer


def decode_all(params: Params, vocab: TokenVocab, sources, max_len: int = 0, batch_size: int = 256) -> list[str]:
    """Batched greedy decoding, length-sorted for speed, results in input order."""
    order = sorted(range(len(sources)), key=lambda i: len(sources[i]))
    out: list[str] = [""] * len(sources)
    for b in range(0, len(order), batch_size):
        idx = order[b : b + batch_size]
        srcs = [sources[i] for i in idx]
        limit = max_len or default_max_len(max(len(s) for s in srcs))
        for i, text in zip(idx, greedy_decode_batch(params, vocab, srcs, limit)):
            out[i] = text
    return out


def default_max_len(source_len: int) -> int:
    return 3 * source_len + 10


def train(
    params: Params,
    vocab: TokenVocab,
    train_pairs: Sequence[tuple[Sequence[int], Sequence[int]]],
    cfg: TrainConfig,
    valid_pairs: Sequence[tuple[Sequence[int], Sequence[int]]] | None = None,
    on_epoch: Callable[[EpochRecord], None] | None = None,
):
    """Train ``params`` in place on encoded (source ids, target ids) pairs.

    Returns (best params, epoch log).  The best epoch is the one with the
    lowest validation CER, or the lowest training loss without a validation
    set; epoch 0 records the untrained model.
    """
    cfg.validate()
    if not train_pairs:
        raise DegenerateInputError("empty training split")
    dtype = cfg.dtype
    for k in params:
        params[k] = params[k].astype(dtype, copy=False)
    rng = np.random.default_rng(cfg.seed)
    tf_rng = np.random.default_rng([cfg.seed, 1])
    opt = Adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)
    history: list[EpochRecord] = []
    best = ({k: v.copy() for k, v in params.items()}, np.inf)
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        tot = 0.0
        ntok = 0.0
        for bi, idx in enumerate(make_batches(train_pairs, cfg.batch_size, rng)):
            batch = make_batch([train_pairs[i] for i in idx], dtype=dtype)
            try:
                loss, grads = loss_and_gradients(params, batch, cfg.teacher_forcing, tf_rng)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch} batch {bi}: {exc}") from None
            clip_gradients(grads, cfg.clip_norm)
            opt.step(params, grads)
            n = float(batch.tmask.sum())
            tot += loss * n
            ntok += n
        train_loss = tot / ntok
        valid_cer = None
        if valid_pairs:
            valid_cer = evaluate_cer(params, vocab, valid_pairs, cfg.decode_max_len)
        rec = EpochRecord(epoch, float(train_loss), valid_cer, time.perf_counter() - t0)
        history.append(rec)
        log.debug("epoch %d loss %.4f valid_cer %s", epoch, train_loss, valid_cer)
        if on_epoch is not None:
            on_epoch(rec)
        crit = valid_cer if valid_cer is not None else train_loss
        if crit < best[1]:
            best = ({k: v.copy() for k, v in params.items()}, crit)
            stale = 0
        else:
            stale += 1
        if cfg.target_cer is not None and valid_cer is not None and valid_cer <= cfg.target_cer:
            break
        if cfg.patience and stale >= cfg.patience:
            break
    return best[0], history
