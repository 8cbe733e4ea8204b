"""Slow reference implementations used as independent test oracles.

Everything here is written with plain Python loops over scalars so that it
shares no code path with the vectorised library functions it checks.
"""

import math

import numpy as np


def dot(a, b):
    return math.fsum(float(x) * float(y) for x, y in zip(a, b))


def matvec(A, x):
    return [dot(row, x) for row in A]


def project(weights, bias, x):
    return [[dot(weights[m][z], x) + float(bias[m][z]) for z in range(len(bias[m]))]
            for m in range(len(bias))]


def scores(V, W):
    out = []
    for w in W:
        best = -math.inf
        for v in V:
            best = max(best, dot(v, w))
        out.append(best)
    return out


def softplus(x):
    # numpy scalar ufuncs, so elementary-function rounding matches the library
    x = np.float64(x)
    if x > 30:
        return float(x + np.log1p(np.exp(-x)))
    if x < -30:
        return float(np.exp(x))
    return float(np.log1p(np.exp(x)))


def val_loss(V, W, y):
    s = scores(V, W)
    terms = []
    for p in range(len(y)):
        if y[p] != 1:
            continue
        for n in range(len(y)):
            if y[n] != 0:
                continue
            terms.append(softplus(s[n] - s[p]))
    return math.fsum(terms)


def reg_loss(V):
    total = []
    for row in V:
        mean = math.fsum(row) / len(row)
        total.append(math.fsum((x - mean) ** 2 for x in row) / (len(row) - 1))
    return math.fsum(total)


def rank_weight(y):
    p = sum(1 for v in y if v == 1)
    q = len(y) - p
    return 0.0 if p == 0 or q == 0 else 1.0 / (p * q)


def sample_objective(weights, bias, x, W, y, beta):
    V = project(weights, bias, x)
    return rank_weight(y) * val_loss(V, W, y) + beta * reg_loss(V)


def distance(a, b):
    return math.sqrt(math.fsum((float(x) - float(y)) ** 2 for x, y in zip(a, b)))


def knn_images(V, query, k, min_distance=1e-12, dist=None):
    """Exhaustive top-K over every (query attribute, foreign node) pair.

    ``V`` has shape (N, M, Z).  Sorting key: distance, owner, node, query
    attribute.  ``dist`` overrides the distance function (needed only when
    exact ties must be reproduced bit for bit).
    """
    dist = dist or distance
    n, m = len(V), len(V[0])
    cands = []
    for a in range(m):
        for j in range(n):
            if j == query:
                continue
            for b in range(m):
                d = max(float(dist(V[query][a], V[j][b])), min_distance)
                cands.append((d, j, j * m + b, a))
    cands.sort()
    return sorted({c[1] for c in cands[:k]})


def auc_pairwise(scores_, labels):
    """(#concordant + 0.5 #tied) / (P Q) by enumerating every pair, as a
    ratio of integers."""
    pos = [s for s, l in zip(scores_, labels) if l == 1]
    neg = [s for s, l in zip(scores_, labels) if l == 0]
    twice = 0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                twice += 2
            elif sp == sn:
                twice += 1
    return twice / (2 * len(pos) * len(neg))


def bce(y, logits):
    total = []
    for t, z in zip(y, logits):
        p = 1.0 / (1.0 + math.exp(-z))
        total.append(-(t * math.log(p) + (1 - t) * math.log(1 - p)))
    return math.fsum(total)


def central_difference(f, params, h=1e-5):
    """Central differences of scalar ``f()`` w.r.t. every entry of the arrays
    in ``params`` (perturbed in place and restored)."""
    out = {}
    for key, arr in params.items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = f()
            flat[i] = orig - h
            down = f()
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        out[key] = g
    return out


def relative_errors(analytic, numeric, floor=1e-6):
    a = np.concatenate([analytic[k].ravel() for k in sorted(analytic)])
    b = np.concatenate([numeric[k].ravel() for k in sorted(numeric)])
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def val_objective_stacked(weights, bias, X, Y, W, beta):
    """Batch attribute objective for K parameter sets at once.

    ``weights`` (K, M, Z, D), ``bias`` (K, M, Z); returns K values.  Written
    directly from the definition with no code shared with the library.
    """
    k, m, z, d = weights.shape
    V = (weights.reshape(k, m * z, d) @ X.T).reshape(k, m, z, -1).transpose(0, 3, 1, 2)
    V = V + bias[:, None]
    s = (V @ W.T).max(axis=2)                                    # (K, B, C)
    pos = Y == 1
    pair = pos[:, :, None] & ~pos[:, None, :]                    # [b, p, n]
    x = s[..., None, :] - s[..., :, None]                        # s_n - s_p
    total = np.where(pair, np.logaddexp(0.0, x), 0.0).sum(axis=(-2, -1))
    P = (Y == 1).sum(axis=1)
    Q = Y.shape[1] - P
    omega = np.where((P > 0) & (Q > 0), 1.0 / np.maximum(P * Q, 1), 0.0)
    reg = V.var(axis=-1, ddof=1).sum(axis=-1)
    return (omega * total + beta * reg).mean(axis=1)


def bce_objective_stacked(weights, bias, X, Y):
    """Mean summed BCE for K classifiers: ``weights`` (K, C, D), ``bias`` (K, C)."""
    z = np.einsum("kcd,bd->kbc", weights, X) + bias[:, None]
    # -log sigmoid(z) = logaddexp(0, -z)
    loss = Y * np.logaddexp(0.0, -z) + (1.0 - Y) * np.logaddexp(0.0, z)
    return loss.sum(axis=-1).mean(axis=-1)


def central_difference_stacked(f, params, h=1e-5, chunk=256):
    """Central differences where ``f(**stacked)`` evaluates many parameter
    sets at once; each stacked array gains a leading axis."""
    keys = list(params)
    sizes = [params[k].size for k in keys]
    total = sum(sizes)
    flat = np.concatenate([params[k].ravel() for k in keys])
    out = np.empty(total)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        vals = []
        for sign in (1.0, -1.0):
            stack = np.repeat(flat[None], idx.size, axis=0)
            stack[np.arange(idx.size), idx] += sign * h
            pieces, off = {}, 0
            for k, n in zip(keys, sizes):
                pieces[k] = stack[:, off:off + n].reshape((idx.size,) + params[k].shape)
                off += n
            vals.append(f(**pieces))
        out[idx] = (vals[0] - vals[1]) / (2 * h)
    res, off = {}, 0
    for k, n in zip(keys, sizes):
        res[k] = out[off:off + n].reshape(params[k].shape)
        off += n
    return res
