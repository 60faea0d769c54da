"""Greedy and beam decoding from viseme ids to text."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import DecoderState, Params, decoder_step, make_batch, start_decoder
from .vocab import TokenVocab

EOS_OUT = TokenVocab.EOS_ID - TokenVocab.OUT_OFFSET


def greedy_decode_batch(
    params: Params,
    vocab: TokenVocab,
    sources: Sequence[Sequence[int]],
    max_len: int,
    return_scores: bool = False,
):
    """Argmax decoding for many source id lists at once."""
    n = len(sources)
    if n == 0:
        return ([], []) if return_scores else []
    if max_len <= 0:
        return ([""] * n, [0.0] * n) if return_scores else [""] * n
    dtype = params["out_b"].dtype
    batch = make_batch([(list(s), [TokenVocab.EOS_ID]) for s in sources], dtype=dtype)
    st = start_decoder(params, batch.src, batch.smask)
    prev = np.full(n, TokenVocab.SOS_ID, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    out = np.zeros((n, max_len), dtype=np.int64)
    scores = np.zeros(n)
    lengths = np.zeros(n, dtype=np.int64)
    for t in range(max_len):
        logp, st, _ = decoder_step(params, st, prev)
        best = logp.argmax(axis=1)
        live = ~done
        scores[live] += logp[live, best[live]]
        lengths[live] += 1
        tok = best + TokenVocab.OUT_OFFSET
        out[:, t] = np.where(done, TokenVocab.PAD_ID, tok)
        done |= best == EOS_OUT
        prev = tok
        if done.all():
            break
    texts = [vocab.decode_target(row) for row in out]
    if return_scores:
        return texts, [s / max(k, 1) for s, k in zip(scores, lengths)]
    return texts


def greedy_decode(params: Params, vocab: TokenVocab, source: Sequence[int], max_len: int) -> str:
    return greedy_decode_batch(params, vocab, [source], max_len)[0]


def _score(logp_sum: float, length: int) -> float:
    return logp_sum / length if length else 0.0


def beam_search(params: Params, vocab: TokenVocab, source: Sequence[int], beam_width: int, max_len: int):
    """Length-normalised beam search; returns (text, normalised log-prob)."""
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    if max_len <= 0:
        return "", 0.0
    dtype = params["out_b"].dtype
    batch = make_batch([(list(source), [TokenVocab.EOS_ID])], dtype=dtype)
    st0 = start_decoder(params, batch.src, batch.smask)
    # live hypotheses: (output ids, logp sum); their states are stacked in ``st``
    live = [((), 0.0)]
    st = st0
    finished: list[tuple[tuple[int, ...], float]] = []
    for t in range(max_len):
        prev = np.array(
            [TokenVocab.SOS_ID if not ids else ids[-1] + TokenVocab.OUT_OFFSET for ids, _ in live],
            dtype=np.int64,
        )
        logp, st_new, _ = decoder_step(params, st, prev)
        base = np.array([lp for _, lp in live])
        cand = (base[:, None] + logp) / (t + 1)
        flat = cand.ravel()
        order = np.argsort(-flat, kind="stable")[:beam_width]
        V = logp.shape[1]
        next_live, rows = [], []
        for k in order:
            h, c = divmod(int(k), V)
            ids = live[h][0] + (c,)
            lp = live[h][1] + float(logp[h, c])
            if c == EOS_OUT:
                finished.append((ids, lp))
            else:
                next_live.append((ids, lp))
                rows.append(h)
        if not next_live:
            live = []
            break
        live = next_live
        idx = np.array(rows)
        st = DecoderState(st0.enc[idx * 0], st0.keys[idx * 0], st0.smask[idx * 0], st_new.s[idx])
    pool = finished + live
    best_ids, best_lp = max(pool, key=lambda h: _score(h[1], len(h[0])))
    return vocab.decode_target([i + TokenVocab.OUT_OFFSET for i in best_ids]), _score(best_lp, len(best_ids))


def beam_decode(params: Params, vocab: TokenVocab, source: Sequence[int], beam_width: int, max_len: int) -> str:
    """Beam search that never scores below the greedy hypothesis.

    A pruned beam can lose the greedy path, so the greedy result is kept as
    a fallback and returned when its normalised log-prob is strictly higher.
    """
    text, score = beam_search(params, vocab, source, beam_width, max_len)
    if beam_width == 1:
        return text
    g_texts, g_scores = greedy_decode_batch(params, vocab, [source], max_len, return_scores=True)
    if g_scores[0] > score:
        return g_texts[0]
    return text
