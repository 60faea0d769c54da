"""Loop-by-loop scalar recomputation of the seq2seq loss.

Written from the model equations with Python floats and lists only, so it
shares no code path with the vectorised implementation it checks.
"""

import math


def _matvec(x, W):
    # x: list (in), W: rows=in, cols=out
    return [sum(x[i] * W[i][j] for i in range(len(x))) for j in range(len(W[0]))]


def _sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def _gru(x, h, Wx, Wh, b):
    H = len(h)
    xp = [a + c for a, c in zip(_matvec(x, Wx), b)]
    hp = _matvec(h, [row[: 2 * H] for row in Wh])
    z = [_sig(xp[j] + hp[j]) for j in range(H)]
    r = [_sig(xp[H + j] + hp[H + j]) for j in range(H)]
    rh = [r[j] * h[j] for j in range(H)]
    hn = _matvec(rh, [row[2 * H :] for row in Wh])
    n = [math.tanh(xp[2 * H + j] + hn[j]) for j in range(H)]
    return [(1 - z[j]) * n[j] + z[j] * h[j] for j in range(H)]


def scalar_loss(params, pairs, sos=1, offset=2):
    P = {k: v.tolist() for k, v in params.items()}
    layers = sum(1 for k in P if k.startswith("enc") and k.endswith("_Wx"))
    H = len(P["enc0_Wh"])
    total, count = 0.0, 0
    for src, tgt in pairs:
        seq = [P["src_emb"][t] for t in src]
        for layer in range(layers):
            h = [0.0] * H
            states = []
            for x in seq:
                h = _gru(x, h, P[f"enc{layer}_Wx"], P[f"enc{layer}_Wh"], P[f"enc{layer}_b"])
                states.append(h)
            seq = states
        enc = seq
        s = [math.tanh(v + b) for v, b in zip(_matvec(enc[-1], P["init_W"]), P["init_b"])]
        keys = [_matvec(hh, P["att_Wk"]) for hh in enc]
        prev = sos
        for y in tgt:
            q = _matvec(s, P["att_Wq"])
            e = [sum(v * math.tanh(k + qq) for v, k, qq in zip(P["att_v"], key, q)) for key in keys]
            mx = max(e)
            w = [math.exp(v - mx) for v in e]
            a = [v / sum(w) for v in w]
            c = [sum(a[i] * enc[i][j] for i in range(len(enc))) for j in range(H)]
            s = _gru(P["tgt_emb"][prev] + c, s, P["dec_Wx"], P["dec_Wh"], P["dec_b"])
            logits = [v + b for v, b in zip(_matvec(s + c, P["out_W"]), P["out_b"])]
            mx = max(logits)
            lse = mx + math.log(sum(math.exp(v - mx) for v in logits))
            total -= logits[y - offset] - lse
            count += 1
            prev = y
    return total / count
