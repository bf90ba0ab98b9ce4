"""Pure-Python implementation of the hot kernels.

Fallback for environments where the compiled extension (_kernels_c) is not
built. Every function here mirrors the compiled version operation for
operation: same FNV-1a hashing, same accumulation order, same libm calls via
``math.exp``/``math.log``, so the two backends produce bit-identical output.
Keep the scalar loops in sync with _kernels_c.pyx when changing anything.
"""

import math

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64_MASK = 0xFFFFFFFFFFFFFFFF

# token -> raw 64-bit hash; tokens repeat heavily across a corpus
_hash_cache: dict = {}
_HASH_CACHE_MAX = 1 << 20


def hash_token(token):
    """FNV-1a 64-bit hash of the token's UTF-8 bytes."""
    h = _hash_cache.get(token)
    if h is None:
        h = _FNV_OFFSET
        for byte in token.encode("utf-8"):
            h = ((h ^ byte) * _FNV_PRIME) & _U64_MASK
        if len(_hash_cache) >= _HASH_CACHE_MAX:
            _hash_cache.clear()
        _hash_cache[token] = h
    return h


def featurize(tokens, dim, signed):
    """Hash tokens into a sparse (indices, values) pair.

    Bucket is ``hash & (dim - 1)`` (dim must be a power of two); with
    ``signed`` each occurrence contributes +/-1 by the hash's top bit,
    otherwise +1. Buckets whose accumulated value is exactly zero are
    dropped; indices come back sorted ascending.
    """
    acc = {}
    for token in tokens:
        h = hash_token(token)
        bucket = h & (dim - 1)
        if signed and (h >> 63):
            acc[bucket] = acc.get(bucket, 0.0) - 1.0
        else:
            acc[bucket] = acc.get(bucket, 0.0) + 1.0
    items = sorted((f, v) for f, v in acc.items() if v != 0.0)
    idx = np.empty(len(items), dtype=np.int64)
    val = np.empty(len(items), dtype=np.float64)
    for j, (f, v) in enumerate(items):
        idx[j] = f
        val[j] = v
    return idx, val


def nb_accumulate(indices, values, labels, sample_w, c, dim):
    """Weighted count accumulation for multinomial naive Bayes.

    Returns (class_w, feat_w): total sample weight per class and the
    weight-scaled feature mass per (class, bucket).
    """
    class_w = np.zeros(c, dtype=np.float64)
    feat_w = np.zeros((c, dim), dtype=np.float64)
    n = len(labels)
    for i in range(n):
        y = int(labels[i])
        wi = float(sample_w[i])
        class_w[y] += wi
        idx = indices[i]
        val = values[i]
        row = feat_w[y]
        for j in range(len(idx)):
            row[idx[j]] += wi * val[j]
    return class_w, feat_w


def sgd_epoch(W, b, order, indices, values, labels, sample_w, lr, l2):
    """One epoch of weighted softmax-regression SGD, in place.

    Visits samples in the given order; applies L2 decay only to the
    features each sample touches. Returns the summed weighted
    cross-entropy of the visited samples (computed before each update).
    """
    c = W.shape[0]
    lrl2 = lr * l2
    total_loss = 0.0
    z = [0.0] * c
    p = [0.0] * c
    for pos in order:
        i = int(pos)
        idx = indices[i]
        val = values[i]
        y = int(labels[i])
        wi = float(sample_w[i])
        nnz = len(idx)
        for k in range(c):
            s = float(b[k])
            row = W[k]
            for j in range(nnz):
                s += row[idx[j]] * val[j]
            z[k] = s
        m = z[0]
        for k in range(1, c):
            if z[k] > m:
                m = z[k]
        s = 0.0
        for k in range(c):
            e = math.exp(z[k] - m)
            p[k] = e
            s += e
        for k in range(c):
            p[k] /= s
        py = p[y]
        if py < 1e-15:
            py = 1e-15
        total_loss += wi * -math.log(py)
        coef = lr * wi
        for k in range(c):
            g = p[k]
            if k == y:
                g -= 1.0
            gk = coef * g
            b[k] -= gk
            row = W[k]
            for j in range(nnz):
                f = idx[j]
                row[f] -= gk * val[j] + lrl2 * row[f]
    return total_loss


def stump_scan(indices, labels, sample_w, c):
    """Exhaustive search for the best single-feature presence rule.

    A rule is (feature, class-if-present, class-if-absent); presence means
    the feature occurs in the document with any nonzero value. Returns
    (feature, cls_present, cls_absent, weighted_error); ties go to the
    lowest feature index, then the lowest class index.
    """
    n = len(labels)
    total = [0.0] * c
    present = {}
    for i in range(n):
        y = int(labels[i])
        wi = float(sample_w[i])
        total[y] += wi
        for f in indices[i]:
            mass = present.get(f)
            if mass is None:
                mass = [0.0] * c
                present[int(f)] = mass
            mass[y] += wi
    best_f = -1
    best_a = 0
    best_b = 0
    best_err = math.inf
    for f in sorted(present):
        pm = present[f]
        a = 0
        b_cls = 0
        pm_sum = 0.0
        am_sum = 0.0
        am_best = total[0] - pm[0]
        pm_best = pm[0]
        for k in range(c):
            am_k = total[k] - pm[k]
            pm_sum += pm[k]
            am_sum += am_k
            if pm[k] > pm_best:
                pm_best = pm[k]
                a = k
            if am_k > am_best:
                am_best = am_k
                b_cls = k
        err = (pm_sum - pm_best) + (am_sum - am_best)
        if err < best_err:
            best_err = err
            best_f = f
            best_a = a
            best_b = b_cls
    return best_f, best_a, best_b, best_err
