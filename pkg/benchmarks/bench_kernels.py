"""Time each kernel under the compiled and the NumPy backend.

    python benchmarks/bench_kernels.py [--repeat 50]

Also times one full-set classification (8 classes x 205 gallery images,
41 test images at 32x32) through ``classify_set`` with each backend
swapped in.
"""

import argparse
import timeit

import numpy as np

from setlrc import kernels
from setlrc.classifier import TestSet, VoteConfig, classify_set, gallery_from_vectors
from setlrc.preprocess import ImageVector, PreprocessConfig


def kernel_cases(rng):
    img = rng.uniform(0, 255, (480, 640))
    levels = rng.integers(0, 256, (32, 32)).astype(np.float64)
    X = rng.standard_normal((1024, 41))
    X_hat = X + 1e-3 * rng.standard_normal(X.shape)
    d = rng.uniform(0, 50, (8, 41))
    return {
        "box_downsample 480x640->32x32": lambda k: k.box_downsample(img, 32, 32),
        "equalize_levels 32x32": lambda k: k.equalize_levels(levels),
        "residual_norms 1024x41": lambda k: k.residual_norms(X, X_hat),
        "accumulate_exp 8x41": lambda k: k.accumulate_exp(d, 0.2),
    }


def set_case(rng):
    cfg = PreprocessConfig((32, 32))
    class_vectors = [
        (f"c{c}", [ImageVector(rng.uniform(0, 255, 1024), (32, 32)) for _ in range(205)])
        for c in range(8)
    ]
    gallery = gallery_from_vectors(class_vectors, cfg)
    test = TestSet(rng.uniform(0, 255, (1024, 41)))
    vote = VoteConfig("exponential", alpha=0.2)

    def run(k):
        saved = kernels.residual_norms, kernels.accumulate_exp
        kernels.residual_norms, kernels.accumulate_exp = k.residual_norms, k.accumulate_exp
        try:
            classify_set(gallery, test, vote)
        finally:
            kernels.residual_norms, kernels.accumulate_exp = saved

    return run


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    names = kernels.available_backends()
    if "cython" not in names:
        print("compiled extension not built; only the NumPy backend is timed")
    backends = {n: kernels.get_backend(n) for n in names}
    cases = kernel_cases(rng)
    cases["classify_set 8x205, M=41"] = set_case(rng)

    header = f"{'case':34s}" + "".join(f"{n:>14s}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for label, fn in cases.items():
        times = {n: best_of(lambda: fn(k), args.repeat) for n, k in backends.items()}
        row = f"{label:34s}" + "".join(f"{times[n] * 1e6:12.1f}us" for n in names)
        if len(names) == 2:
            row += f"{times['python'] / times['cython']:9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
