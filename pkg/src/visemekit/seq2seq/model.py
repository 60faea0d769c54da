"""Attention encoder-decoder in plain numpy, with hand-written backprop.

Architecture
------------
* source embedding -> ``encoder_layers`` stacked unidirectional GRUs
* decoder initial state ``s0 = tanh(h_last W_init + b_init)``
* additive attention ``e_i = v . tanh(s_{t-1} W_q + h_i W_k)``, softmax over
  non-padded source positions, context ``c_t = sum_i a_i h_i``
* decoder GRU over ``[emb(y_{t-1}); c_t]``
* output softmax over ``[s_t; c_t] W_out + b_out`` (EOS and characters)

GRU cell (gate order z, r, n in the stacked weight matrices)::

    z = sigmoid(x Wx_z + h Wh_z + b_z)
    r = sigmoid(x Wx_r + h Wh_r + b_r)
    n = tanh(x Wx_n + (r * h) Wh_n + b_n)
    h' = (1 - z) * n + z * h

Padded encoder steps carry the previous state through unchanged, so the
state at the last column is each sequence's final state.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigError, DegenerateInputError, InputError, NumericError
from .vocab import TokenVocab


@dataclass(frozen=True)
class ModelConfig:
    source_vocab: int
    target_vocab: int
    embed_dim: int = 32
    hidden_dim: int = 128
    attention_dim: int = 64
    encoder_layers: int = 2
    init_scale: float = 1.0
    seed: int = 0

    @property
    def n_outputs(self) -> int:
        return self.target_vocab - TokenVocab.OUT_OFFSET

    def validate(self) -> "ModelConfig":
        if self.source_vocab < 2 or self.target_vocab <= TokenVocab.OUT_OFFSET + 1:
            raise ConfigError("source/target vocabularies must contain real tokens")
        for name in ("embed_dim", "hidden_dim", "attention_dim", "encoder_layers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.init_scale < 0:
            raise ConfigError("init_scale must be non-negative")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


Params = dict  # name -> np.ndarray, insertion order is canonical


def param_shapes(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    E, H, A = cfg.embed_dim, cfg.hidden_dim, cfg.attention_dim
    shapes = [("src_emb", (cfg.source_vocab, E)), ("tgt_emb", (cfg.target_vocab, E))]
    for layer in range(cfg.encoder_layers):
        d_in = E if layer == 0 else H
        shapes += [
            (f"enc{layer}_Wx", (d_in, 3 * H)),
            (f"enc{layer}_Wh", (H, 3 * H)),
            (f"enc{layer}_b", (3 * H,)),
        ]
    shapes += [
        ("init_W", (H, H)),
        ("init_b", (H,)),
        ("att_Wq", (H, A)),
        ("att_Wk", (H, A)),
        ("att_v", (A,)),
        ("dec_Wx", (E + H, 3 * H)),
        ("dec_Wh", (H, 3 * H)),
        ("dec_b", (3 * H,)),
        ("out_W", (2 * H, cfg.n_outputs)),
        ("out_b", (cfg.n_outputs,)),
    ]
    return shapes


_BIASES = {"init_b", "dec_b", "out_b"}


def _is_bias(name: str) -> bool:
    return name in _BIASES or (name.startswith("enc") and name.endswith("_b"))


def init_model(cfg: ModelConfig, dtype=np.float32) -> Params:
    """Uniform(-s, s) weights with ``s = init_scale / sqrt(fan_in)``; zero biases.

    Embedding tables count as fan_in 1 (a lookup reads a single row).
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    params: Params = {}
    for name, shape in param_shapes(cfg):
        if _is_bias(name):
            params[name] = np.zeros(shape, dtype=dtype)
            continue
        fan_in = 1 if name.endswith("_emb") else shape[0]
        s = cfg.init_scale / np.sqrt(fan_in)
        params[name] = rng.uniform(-s, s, size=shape).astype(dtype)
    return params


def param_count(params: Params) -> int:
    return int(sum(p.size for p in params.values()))


# batching -------------------------------------------------------------------


@dataclass
class Batch:
    src: np.ndarray  # (B, S) int, 0 = pad
    smask: np.ndarray  # (B, S) float
    tgt: np.ndarray  # (B, T) target token ids ending in EOS, 0 = pad
    tmask: np.ndarray  # (B, T) float

    @property
    def size(self) -> int:
        return self.src.shape[0]


def make_batch(pairs: Sequence[tuple[Sequence[int], Sequence[int]]], dtype=np.float32) -> Batch:
    """Pad (source ids, target ids) pairs; target ids should end with EOS."""
    if not pairs:
        raise InputError("empty batch")
    B = len(pairs)
    S = max(len(s) for s, _ in pairs)
    T = max(len(t) for _, t in pairs)
    if S == 0:
        raise InputError("source sequences must be non-empty")
    src = np.zeros((B, S), dtype=np.int64)
    tgt = np.zeros((B, max(T, 1)), dtype=np.int64)
    for b, (s, t) in enumerate(pairs):
        if len(s) == 0:
            raise InputError("source sequences must be non-empty")
        src[b, : len(s)] = s
        tgt[b, : len(t)] = t
    return Batch(src, (src != 0).astype(dtype), tgt, (tgt != 0).astype(dtype))


def encode_pairs(vocab: TokenVocab, sources, targets) -> list[tuple[list[int], list[int]]]:
    return [(vocab.encode_source(s), vocab.encode_target(t)) for s, t in zip(sources, targets)]


def _check_ranges(params: Params, batch: Batch):
    vs, vt = params["src_emb"].shape[0], params["tgt_emb"].shape[0]
    if batch.src.min() < 0 or batch.src.max() >= vs:
        raise InputError(f"source token index outside [0, {vs})")
    if batch.tgt.min() < 0 or batch.tgt.max() >= vt:
        raise InputError(f"target token index outside [0, {vt})")
    if np.any((batch.tgt > 0) & (batch.tgt < TokenVocab.OUT_OFFSET)):
        raise InputError("SOS cannot be a prediction target")


# primitives -----------------------------------------------------------------


def sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def log_softmax(x):
    m = x.max(axis=-1, keepdims=True)
    y = x - m
    return y - np.log(np.exp(y).sum(axis=-1, keepdims=True))


def encoder_layer_count(params: Params) -> int:
    n = 0
    while f"enc{n}_Wx" in params:
        n += 1
    return n


def _gru_step(xp, h, Wh, H):
    """One GRU step given the precomputed input projection ``xp``."""
    zr = sigmoid(xp[:, : 2 * H] + h @ Wh[:, : 2 * H])
    z, r = zr[:, :H], zr[:, H:]
    rh = r * h
    n = np.tanh(xp[:, 2 * H :] + rh @ Wh[:, 2 * H :])
    h_new = (1.0 - z) * n + z * h
    return h_new, (h, z, r, n, rh)


def _gru_step_back(dh_new, cache, Wh, H):
    """Returns (d input projection, d previous h, d Wh)."""
    h, z, r, n, rh = cache
    dn = dh_new * (1.0 - z)
    dz = dh_new * (h - n)
    dh = dh_new * z
    dan = dn * (1.0 - n * n)
    Wh_n = Wh[:, 2 * H :]
    drh = dan @ Wh_n.T
    dh += drh * r
    dr = drh * h
    dzr = np.concatenate([dz * z * (1.0 - z), dr * r * (1.0 - r)], axis=1)
    dh += dzr @ Wh[:, : 2 * H].T
    dWh = np.concatenate([h.T @ dzr, rh.T @ dan], axis=1)
    return np.concatenate([dzr, dan], axis=1), dh, dWh


def encode(params: Params, src: np.ndarray, smask: np.ndarray, keep_cache: bool = False):
    """Run the stacked encoder; returns (states (B,S,H), caches)."""
    H = params["enc0_Wh"].shape[0]
    B, S = src.shape
    x = params["src_emb"][src]
    caches = []
    for layer in range(encoder_layer_count(params)):
        Wx, Wh, b = params[f"enc{layer}_Wx"], params[f"enc{layer}_Wh"], params[f"enc{layer}_b"]
        xp_all = x @ Wx + b
        h = np.zeros((B, H), dtype=x.dtype)
        out = np.empty((B, S, H), dtype=x.dtype)
        steps = []
        for t in range(S):
            hn, cache = _gru_step(xp_all[:, t], h, Wh, H)
            m = smask[:, t, None]
            h = m * hn + (1.0 - m) * h
            out[:, t] = h
            if keep_cache:
                steps.append(cache)
        caches.append((x, steps))
        x = out
    return x, caches


@dataclass
class DecoderState:
    enc: np.ndarray  # (B, S, H)
    keys: np.ndarray  # (B, S, A)
    smask: np.ndarray
    s: np.ndarray  # (B, H)


def start_decoder(params: Params, src: np.ndarray, smask: np.ndarray) -> DecoderState:
    enc, _ = encode(params, src, smask)
    s0 = np.tanh(enc[:, -1] @ params["init_W"] + params["init_b"])
    return DecoderState(enc, enc @ params["att_Wk"], smask, s0)


def _attend(params, keys, enc, smask, s):
    q = s @ params["att_Wq"]
    u = np.tanh(keys + q[:, None, :])
    e = u @ params["att_v"]
    e = np.where(smask > 0, e, -np.inf)
    e = e - e.max(axis=1, keepdims=True)
    a = np.exp(e)
    a /= a.sum(axis=1, keepdims=True)
    c = np.einsum("bs,bsh->bh", a, enc)
    return a, c, u


def decoder_step(params: Params, st: DecoderState, prev_tokens: np.ndarray):
    """Advance one step; returns (log-probs over outputs, new state, attention)."""
    H = st.s.shape[1]
    a, c, _ = _attend(params, st.keys, st.enc, st.smask, st.s)
    x = np.concatenate([params["tgt_emb"][prev_tokens], c], axis=1)
    s_new, _ = _gru_step(x @ params["dec_Wx"] + params["dec_b"], st.s, params["dec_Wh"], H)
    logits = np.concatenate([s_new, c], axis=1) @ params["out_W"] + params["out_b"]
    return log_softmax(logits), DecoderState(st.enc, st.keys, st.smask, s_new), a


# loss and gradients ---------------------------------------------------------


def _forward(params: Params, batch: Batch, teacher_forcing: float = 1.0, rng=None, keep_cache: bool = True):
    _check_ranges(params, batch)
    n_tok = float(batch.tmask.sum())
    if n_tok == 0:
        raise DegenerateInputError("batch has no non-PAD target positions")
    H = params["enc0_Wh"].shape[0]
    src, smask, tgt, tmask = batch.src, batch.smask, batch.tgt, batch.tmask
    B, T = tgt.shape

    enc, enc_caches = encode(params, src, smask, keep_cache)
    h_last = enc[:, -1]
    s = np.tanh(h_last @ params["init_W"] + params["init_b"])
    s0 = s
    keys = enc @ params["att_Wk"]
    out_idx = np.maximum(tgt - TokenVocab.OUT_OFFSET, 0)

    prev = np.full(B, TokenVocab.SOS_ID, dtype=np.int64)
    total = 0.0
    steps = []
    attn = []
    for t in range(T):
        a, c, u = _attend(params, keys, enc, smask, s)
        emb = params["tgt_emb"][prev]
        x = np.concatenate([emb, c], axis=1)
        s_new, gcache = _gru_step(x @ params["dec_Wx"] + params["dec_b"], s, params["dec_Wh"], H)
        o = np.concatenate([s_new, c], axis=1)
        logp = log_softmax(o @ params["out_W"] + params["out_b"])
        m = tmask[:, t]
        total -= float((logp[np.arange(B), out_idx[:, t]] * m).sum())
        attn.append(a)
        if keep_cache:
            steps.append((prev, s, a, c, u, x, gcache, o, logp))
        gold = tgt[:, t]
        if teacher_forcing >= 1.0:
            prev = gold
        else:
            pred = logp.argmax(axis=1) + TokenVocab.OUT_OFFSET
            use_gold = rng.random(B) < teacher_forcing
            prev = np.where(use_gold, gold, pred)
        s = s_new
    loss = total / n_tok
    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss {loss}")
    cache = (enc, enc_caches, h_last, s0, keys, out_idx, steps, n_tok)
    return loss, np.stack(attn, axis=1), cache


def forward_loss(params: Params, batch: Batch, teacher_forcing: float = 1.0, rng=None):
    """Mean per-token cross-entropy and attention weights (B, T, S)."""
    loss, attn, _ = _forward(params, batch, teacher_forcing, rng, keep_cache=False)
    return loss, attn


def loss_and_gradients(params: Params, batch: Batch, teacher_forcing: float = 1.0, rng=None):
    loss, _, cache = _forward(params, batch, teacher_forcing, rng, keep_cache=True)
    enc, enc_caches, h_last, s0, keys, out_idx, steps, n_tok = cache
    g = {k: np.zeros_like(v) for k, v in params.items()}
    H = params["enc0_Wh"].shape[0]
    E = params["tgt_emb"].shape[1]
    B, S, _ = enc.shape
    tmask = batch.tmask
    rows = np.arange(B)

    d_enc = np.zeros_like(enc)
    d_keys = np.zeros_like(keys)
    ds = np.zeros((B, H), dtype=enc.dtype)
    W_out, W_dx, W_dh = params["out_W"], params["dec_Wx"], params["dec_Wh"]
    W_q, v = params["att_Wq"], params["att_v"]

    for t in range(len(steps) - 1, -1, -1):
        prev, s_prev, a, c, u, x, gcache, o, logp = steps[t]
        dlogits = np.exp(logp)
        dlogits[rows, out_idx[:, t]] -= 1.0
        dlogits *= (tmask[:, t] / n_tok)[:, None]
        g["out_W"] += o.T @ dlogits
        g["out_b"] += dlogits.sum(axis=0)
        do = dlogits @ W_out.T
        ds_new = ds + do[:, :H]
        dc = do[:, H:]

        dxp, ds, dWh = _gru_step_back(ds_new, gcache, W_dh, H)
        g["dec_Wh"] += dWh
        g["dec_Wx"] += x.T @ dxp
        g["dec_b"] += dxp.sum(axis=0)
        dx = dxp @ W_dx.T
        np.add.at(g["tgt_emb"], prev, dx[:, :E])
        dc = dc + dx[:, E:]

        # context and attention
        d_enc += a[:, :, None] * dc[:, None, :]
        da = np.einsum("bh,bsh->bs", dc, enc)
        de = a * (da - (a * da).sum(axis=1, keepdims=True))
        g["att_v"] += np.einsum("bs,bsa->a", de, u)
        dpre = de[:, :, None] * v * (1.0 - u * u)
        d_keys += dpre
        dq = dpre.sum(axis=1)
        g["att_Wq"] += s_prev.T @ dq
        ds += dq @ W_q.T

    # decoder initial state
    dpre0 = ds * (1.0 - s0 * s0)
    g["init_W"] += h_last.T @ dpre0
    g["init_b"] += dpre0.sum(axis=0)
    A = keys.shape[2]
    g["att_Wk"] += enc.reshape(-1, H).T @ d_keys.reshape(-1, A)
    d_enc += d_keys @ params["att_Wk"].T
    d_enc[:, -1] += dpre0 @ params["init_W"].T

    # encoder layers, top to bottom
    smask = batch.smask
    d_out = d_enc
    for layer in range(len(enc_caches) - 1, -1, -1):
        x_in, caches = enc_caches[layer]
        Wh = params[f"enc{layer}_Wh"]
        dxp_all = np.empty((B, S, 3 * H), dtype=enc.dtype)
        dh = np.zeros((B, H), dtype=enc.dtype)
        dWh = np.zeros_like(Wh)
        for t in range(S - 1, -1, -1):
            dh = dh + d_out[:, t]
            m = smask[:, t, None]
            dxp, dh_prev, dW = _gru_step_back(m * dh, caches[t], Wh, H)
            dWh += dW
            dxp_all[:, t] = dxp
            dh = dh_prev + (1.0 - m) * dh
        g[f"enc{layer}_Wh"] += dWh
        D = x_in.shape[2]
        g[f"enc{layer}_Wx"] += x_in.reshape(-1, D).T @ dxp_all.reshape(-1, 3 * H)
        g[f"enc{layer}_b"] += dxp_all.sum(axis=(0, 1))
        d_out = dxp_all @ params[f"enc{layer}_Wx"].T
    np.add.at(g["src_emb"], batch.src, d_out)
    return loss, g


def compute_gradients(params: Params, batch: Batch) -> dict:
    """Exact gradients of :func:`forward_loss` under full teacher forcing."""
    return loss_and_gradients(params, batch, 1.0)[1]


def sequence_logprob(params: Params, vocab: TokenVocab, source_ids: Sequence[int], text: str, finished: bool = True):
    """Sum of output log-probabilities for ``text`` (plus EOS if ``finished``)."""
    ids = [vocab.tgt_index[ch] for ch in text] + ([TokenVocab.EOS_ID] if finished else [])
    if not ids:
        return 0.0, 0
    batch = make_batch([(list(source_ids), ids)], dtype=params["out_b"].dtype)
    loss, _ = forward_loss(params, batch)
    return -loss * len(ids), len(ids)
