"""Regenerates the frozen oracle fixtures under tests/fixtures/.

    python3 tests/oracles/make_fixtures.py

Inputs are drawn with numpy's PCG64 and stored alongside the expected
outputs, so the C++ tests never need to reproduce numpy's RNG.
"""

import json
import os

import numpy as np

import reference_impute as ref

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "fixtures")


def dump(name, payload):
    with open(os.path.join(OUT, name), "w") as fh:
        json.dump(payload, fh, indent=None, separators=(",", ":"))
        fh.write("\n")


def full_svd_shrink(M, threshold):
    # Brute force: full (not thin) SVD, explicit Sigma, shrink, multiply back.
    U, s, Vt = np.linalg.svd(M, full_matrices=True)
    S = np.zeros(M.shape)
    for k, sv in enumerate(s):
        S[k, k] = max(sv - threshold, 0.0)
    return U @ S @ Vt


def svt_fixture():
    rng = np.random.default_rng(1001)
    cases = []
    M = rng.normal(size=(5, 4))
    cases.append({"matrix": M.tolist(), "threshold": 0.7,
                  "expected": full_svd_shrink(M, 0.7).tolist()})
    while len(cases) < 101:
        rows = int(rng.integers(1, 21))
        cols = int(rng.integers(1, 16))
        M = rng.normal(size=(rows, cols)) * float(rng.uniform(0.1, 5.0))
        smax = np.linalg.svd(M, compute_uv=False)[0]
        thr = float(rng.uniform(0.0, 2.0 * smax))
        cases.append({"matrix": M.tolist(), "threshold": thr,
                      "expected": full_svd_shrink(M, thr).tolist()})
    dump("svt_oracle.json", {"cases": cases})


def observed_everywhere(mask):
    return mask.any(axis=1).all() and mask.any(axis=0).all()


def softimpute_fixture():
    rng = np.random.default_rng(2002)
    n, t = 12, 20
    Y = rng.normal(size=(n, 2)) @ rng.normal(size=(2, t)) + 0.1 * rng.normal(size=(n, t))
    Y += rng.normal(size=(n, 1)) + rng.normal(size=(1, t)) + 0.5
    while True:
        mask = rng.uniform(size=(n, t)) >= 0.25
        if observed_everywhere(mask):
            break
    cases = []
    for demean in (True, False):
        lam = 0.5 * ref.lambda_max(Y, mask, demean)
        for tol, max_iter in ((1e-6, 500), (1e-13, 12)):
            fit = ref.soft_impute(Y, mask, lam, tol, max_iter, demean)
            # Stay above rounding level: the reference trace must be monotone.
            trace = fit["objective"]
            assert all(b <= a for a, b in zip(trace, trace[1:])), "reference trace not monotone"
            cases.append({
                "demean": demean, "lambda": lam, "tolerance": tol, "max_iter": max_iter,
                "iterations": fit["iterations"], "converged": fit["converged"],
                "prediction": fit["prediction"].tolist(),
                "low_rank": fit["low_rank"].tolist(),
                "objective": fit["objective"],
            })
    dump("softimpute_oracle.json",
         {"Y": Y.tolist(), "mask": mask.astype(int).tolist(), "cases": cases})


def cv_fixture():
    rng = np.random.default_rng(3003)
    n, t = 15, 30
    Y = rng.normal(size=(n, 2)) @ rng.normal(size=(2, t)) * 0.3 + 0.05 * rng.normal(size=(n, t))
    Y += 0.4
    mask = rng.uniform(size=(n, t)) >= 0.15
    # Last five rows act as treated units: post-onset cells leave the mask.
    for i in range(n - 5, n):
        mask[i, int(rng.integers(15, 26)):] = False
    assert observed_everywhere(mask)
    folds, seed, n_grid = 5, 20261014, 12
    grid = ref.lambda_grid(Y, mask, n_grid, True)
    cv = ref.cross_validate(Y, mask, grid, folds, seed, 1e-6, 500, True)
    dump("cv_oracle.json", {
        "Y": Y.tolist(), "mask": mask.astype(int).tolist(),
        "folds": folds, "seed": seed, "grid": grid,
        "tolerance": 1e-6, "max_iter": 500, **cv,
    })


if __name__ == "__main__":
    os.makedirs(OUT, exist_ok=True)
    svt_fixture()
    softimpute_fixture()
    cv_fixture()
    print("fixtures written to", os.path.normpath(OUT))
