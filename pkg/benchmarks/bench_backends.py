"""Time the compiled kernels against the pure-Python fallback.

Generates a synthetic hashed-feature corpus, runs each hot kernel under
every importable backend, checks the outputs agree bit for bit, and
prints a per-kernel timing table. Run from the repo root:

    python3 benchmarks/bench_backends.py --docs 2000 --repeats 5
"""

import argparse
import time

import numpy as np

from chainboost.kernels import BACKEND, get_backends


def make_corpus(docs, vocab, tokens_per_doc, dim, c, seed, featurize):
    rng = np.random.default_rng(seed)
    words = [f"w{j}" for j in range(vocab)]
    token_lists = [
        [words[k] for k in rng.integers(0, vocab, tokens_per_doc)]
        for _ in range(docs)
    ]
    feats = [featurize(toks, dim, False) for toks in token_lists]
    indices = [f[0] for f in feats]
    values = [f[1] for f in feats]
    labels = rng.integers(0, c, docs).astype(np.int64)
    sample_w = rng.uniform(0.5, 1.5, docs)
    sample_w /= sample_w.sum()
    return token_lists, indices, values, labels, sample_w


def best_of(repeats, fn):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(impl, data, dim, c, lr, l2, repeats):
    token_lists, indices, values, labels, sample_w = data
    docs = len(token_lists)
    order = np.arange(docs, dtype=np.int64)
    rng = np.random.default_rng(1)
    W0 = rng.normal(scale=0.1, size=(c, dim))
    b0 = rng.normal(scale=0.1, size=c)

    times = {}
    # fresh suffixes defeat the hash cache so hashing itself is measured
    stamp = [0]

    def run_hash():
        stamp[0] += 1
        suffix = f"_{stamp[0]}"
        for toks in token_lists:
            for tok in toks:
                impl.hash_token(tok + suffix)

    times["hash_token"] = best_of(repeats, run_hash)
    times["featurize"] = best_of(
        repeats, lambda: [impl.featurize(toks, dim, True) for toks in token_lists])
    times["nb_accumulate"] = best_of(
        repeats, lambda: impl.nb_accumulate(indices, values, labels, sample_w, c, dim))

    def run_sgd():
        W = W0.copy()
        b = b0.copy()
        impl.sgd_epoch(W, b, order, indices, values, labels, sample_w, lr, l2)
        return W, b

    times["sgd_epoch"] = best_of(repeats, run_sgd)
    times["stump_scan"] = best_of(
        repeats, lambda: impl.stump_scan(indices, labels, sample_w, c))

    outputs = {
        "featurize": impl.featurize(token_lists[0], dim, True),
        "nb_accumulate": impl.nb_accumulate(indices, values, labels, sample_w, c, dim),
        "sgd_epoch": run_sgd(),
        "stump_scan": impl.stump_scan(indices, labels, sample_w, c),
    }
    return times, outputs


def check_agreement(per_backend):
    names = sorted(per_backend)
    if len(names) < 2:
        return
    ref_name, other_name = names[0], names[1]
    ref, other = per_backend[ref_name], per_backend[other_name]
    a_idx, a_val = ref["featurize"]
    b_idx, b_val = other["featurize"]
    assert np.array_equal(a_idx, b_idx) and np.array_equal(a_val, b_val)
    for a, b in zip(ref["nb_accumulate"], other["nb_accumulate"]):
        assert np.array_equal(a, b)
    for a, b in zip(ref["sgd_epoch"], other["sgd_epoch"]):
        assert np.array_equal(a, b)
    assert ref["stump_scan"] == other["stump_scan"]
    print(f"output agreement: {ref_name} == {other_name} (bit-identical)\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=2000)
    ap.add_argument("--vocab", type=int, default=5000)
    ap.add_argument("--tokens-per-doc", type=int, default=40)
    ap.add_argument("--dim", type=int, default=16384)
    ap.add_argument("--classes", type=int, default=4)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = get_backends()
    print(f"active backend: {BACKEND}; importable: {', '.join(sorted(backends))}")
    print(f"corpus: {args.docs} docs x {args.tokens_per_doc} tokens, "
          f"dim={args.dim}, c={args.classes}, best of {args.repeats}\n")

    data = make_corpus(args.docs, args.vocab, args.tokens_per_doc,
                       args.dim, args.classes, args.seed,
                       next(iter(backends.values())).featurize)

    all_times = {}
    all_outputs = {}
    for name, impl in sorted(backends.items()):
        all_times[name], all_outputs[name] = bench_backend(
            impl, data, args.dim, args.classes, 0.1, 1e-4, args.repeats)

    check_agreement(all_outputs)

    kernels = ["hash_token", "featurize", "nb_accumulate", "sgd_epoch", "stump_scan"]
    names = sorted(all_times)
    header = f"{'kernel':<14}" + "".join(f"{n + ' (ms)':>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for kernel in kernels:
        row = f"{kernel:<14}"
        vals = [all_times[n][kernel] for n in names]
        for v in vals:
            row += f"{v * 1e3:>12.2f}"
        if len(vals) == 2:
            ratio = vals[1] / vals[0] if names[0] == "c" else vals[0] / vals[1]
            row += f"{ratio:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
