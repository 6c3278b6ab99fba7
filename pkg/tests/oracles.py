"""Independent, deliberately naive reimplementations used as test oracles.

Everything here is written with Python scalars and explicit loops so that it
shares no code with the vectorized package.
"""

import math
from collections import Counter


def sig(a):
    return 1.0 / (1.0 + math.exp(-a))


def dot(row, vec):
    return sum(r * v for r, v in zip(row, vec))


def lstm_run(xs, W_x, W_h, b):
    """Scalar LSTM over list-of-vectors ``xs``; gate rows stacked [i, f, o, g]."""
    H = len(W_h[0])
    h, c = [0.0] * H, [0.0] * H
    out = []
    for x in xs:
        a = [dot(W_x[r], x) + dot(W_h[r], h) + b[r] for r in range(4 * H)]
        i = [sig(a[j]) for j in range(H)]
        f = [sig(a[H + j]) for j in range(H)]
        o = [sig(a[2 * H + j]) for j in range(H)]
        g = [math.tanh(a[3 * H + j]) for j in range(H)]
        c = [f[j] * c[j] + i[j] * g[j] for j in range(H)]
        h = [o[j] * math.tanh(c[j]) for j in range(H)]
        out.append(h)
    return out


def sc_step(h, c, d, w, P, alpha=1.0):
    """Scalar sc-LSTM cell; ``P`` maps names like "W_i" to nested lists."""
    H = len(h)
    gate = {}
    for g in "ifoc":
        pre = [dot(P[f"U_{g}"][j], w) + dot(P[f"W_{g}"][j], h) + P[f"b_{g}"][j] for j in range(H)]
        gate[g] = [math.tanh(a) if g == "c" else sig(a) for a in pre]
    r = [sig(dot(P["W_wr"][k], w) + alpha * dot(P["W_hr"][k], h)) for k in range(len(d))]
    d_new = [r[k] * d[k] for k in range(len(d))]
    c_new = [gate["f"][j] * c[j] + gate["i"][j] * gate["c"][j] + math.tanh(dot(P["W_dc"][j], d_new))
             for j in range(H)]
    h_new = [gate["o"][j] * math.tanh(c_new[j]) for j in range(H)]
    logits = [dot(P["W_out"][v], h_new) + P["b_out"][v] for v in range(len(P["b_out"]))]
    top = max(logits)
    z = [math.exp(a - top) for a in logits]
    s = sum(z)
    return [v / s for v in z], h_new, c_new, d_new


def loss_direct(P, y, D, eta=1e-4, xi=100.0):
    T = len(y)
    nll = -sum(math.log(max(P[t][y[t]], 1e-12)) for t in range(T))
    final = math.sqrt(sum(v * v for v in D[T]))
    reg = 0.0
    for t in range(1, T + 1):
        gap = math.sqrt(sum((a - b) ** 2 for a, b in zip(D[t], D[t - 1])))
        reg += eta * xi ** gap
    return nll + final + reg


# --- metrics ------------------------------------------------------------------

def grams(s, n):
    return Counter(tuple(s[i:i + n]) for i in range(len(s) - n + 1))


def bleu4_direct(cands, refsets):
    clipped, total = [0] * 4, [0] * 4
    c_len = r_len = 0
    for cand, refs in zip(cands, refsets):
        c_len += len(cand)
        lens = sorted(len(r) for r in refs)
        r_len += min(lens, key=lambda L: (abs(L - len(cand)), L))
        for n in range(1, 5):
            cc = grams(cand, n)
            for g, k in cc.items():
                clipped[n - 1] += min(k, max(grams(r, n)[g] for r in refs))
            total[n - 1] += max(0, len(cand) - n + 1)
    if any(m == 0 for m in clipped):
        return 0.0
    geo = math.exp(sum(math.log(clipped[i] / total[i]) for i in range(4)) / 4)
    return geo * (1.0 if c_len > r_len else math.exp(1 - r_len / c_len))


def lcs_brute(a, b):
    # memoized recursion, independent of the row-DP in the package
    memo = {}

    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if (i, j) not in memo:
            memo[(i, j)] = go(i + 1, j + 1) + 1 if a[i] == b[j] else max(go(i + 1, j), go(i, j + 1))
        return memo[(i, j)]
    return go(0, 0)


def rouge_l_direct(cands, refsets, beta=1.2):
    total = 0.0
    for cand, refs in zip(cands, refsets):
        ls = [lcs_brute(cand, r) for r in refs]
        p = max(l / len(cand) for l in ls) if cand else 0.0
        r = max(l / len(ref) for l, ref in zip(ls, refs))
        total += 0.0 if p == 0 or r == 0 else (1 + beta ** 2) * p * r / (r + beta ** 2 * p)
    return total / len(cands)


def cider_direct(cands, refsets):
    N = len(cands)
    df = Counter()
    for refs in refsets:
        present = set()
        for r in refs:
            for n in range(1, 5):
                present |= set(grams(r, n))
        df.update(present)

    def vec(s, n):
        return {g: k * (math.log(N) - math.log(max(1.0, df[g]))) for g, k in grams(s, n).items()}

    def cos(u, v):
        nu = math.sqrt(sum(x * x for x in u.values()))
        nv = math.sqrt(sum(x * x for x in v.values()))
        if nu == 0 or nv == 0:
            return 0.0
        return sum(u[g] * v.get(g, 0.0) for g in u) / (nu * nv)

    scores = []
    for cand, refs in zip(cands, refsets):
        per_n = []
        for n in range(1, 5):
            per_n.append(sum(cos(vec(cand, n), vec(r, n)) for r in refs) / len(refs))
        scores.append(10.0 * sum(per_n) / 4)
    return sum(scores) / N
