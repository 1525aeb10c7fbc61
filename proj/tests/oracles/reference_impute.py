"""Reference soft-impute, built on numpy only.

Independent route for the C++ completion code: fixed effects come from a
dummy-variable least-squares solve (not alternating projections) and the
SVD is LAPACK's via numpy.
"""

import numpy as np

from portable_rng import Stream, DOMAIN_CV_FOLDS


def two_way_fit(Y, mask):
    """Fitted mu + a_i + b_t for every cell, estimated on mask cells only."""
    n, t = Y.shape
    rows, cols = np.nonzero(mask)
    X = np.zeros((rows.size, 1 + n + t))
    X[:, 0] = 1.0
    X[np.arange(rows.size), 1 + rows] = 1.0
    X[np.arange(rows.size), 1 + n + cols] = 1.0
    coef, *_ = np.linalg.lstsq(X, Y[rows, cols], rcond=None)
    mu, a, b = coef[0], coef[1:1 + n], coef[1 + n:]
    return mu + a[:, None] + b[None, :]


def svt(M, threshold):
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    shrunk = np.maximum(s - threshold, 0.0)
    return (U * shrunk) @ Vt, s, shrunk


def working_matrix(Y, mask, demean):
    fe = two_way_fit(Y, mask) if demean else np.zeros_like(Y)
    W = np.where(mask, Y - fe, 0.0)
    return W, fe


def lambda_max(Y, mask, demean):
    W, _ = working_matrix(Y, mask, demean)
    return np.linalg.svd(W, compute_uv=False)[0] / mask.sum()


def lambda_grid(Y, mask, n_points, demean):
    top = lambda_max(Y, mask, demean)
    return [top * (1e-4) ** (k / (n_points - 1)) for k in range(n_points)]


def soft_impute(Y, mask, lam, tol, max_iter, demean, warm=None):
    W, fe = working_matrix(Y, mask, demean)
    n_obs = mask.sum()
    threshold = lam * n_obs
    L = np.zeros_like(Y) if warm is None else warm.copy()

    def objective(L, shrunk_sum):
        r = np.where(mask, W - L, 0.0)
        return 0.5 * (r ** 2).sum() / n_obs + lam * shrunk_sum

    trace = [objective(L, np.linalg.svd(L, compute_uv=False).sum())]
    converged = False
    iters = 0
    delta = 0.0
    while iters < max_iter:
        Z = np.where(mask, W, L)
        L_new, _, shrunk = svt(Z, threshold)
        iters += 1
        denom = max(np.linalg.norm(L), np.linalg.norm(L_new))
        delta = 0.0 if denom == 0.0 else np.linalg.norm(L_new - L) / denom
        L = L_new
        trace.append(objective(L, shrunk.sum()))
        if delta <= tol:
            converged = True
            break
    return {
        "low_rank": L,
        "prediction": L + fe,
        "iterations": iters,
        "converged": converged,
        "final_delta": delta,
        "objective": trace,
    }


def assign_folds(mask, folds, seed):
    n, t = mask.shape
    # Column-major linear indices, matching Eigen storage order.
    cells = [i + n * j for j in range(t) for i in range(n) if mask[i, j]]
    Stream(seed, DOMAIN_CV_FOLDS, 0).shuffle(cells)
    fold = {c: p % folds for p, c in enumerate(cells)}
    row_count = np.zeros(n, dtype=int)
    col_count = np.zeros(t, dtype=int)
    for c in cells:
        row_count[c % n] += 1
        col_count[c // n] += 1
    if (row_count < 2).any() or (col_count < 2).any():
        raise ValueError("row or column with fewer than two observed cells")

    reassigned = 0
    for _ in range(10 * folds):
        changed = False
        for f in range(folds):
            for axis, size in ((0, n), (1, t)):
                for k in range(size):
                    members = [c for c in cells if (c % n if axis == 0 else c // n) == k]
                    if all(fold[c] == f for c in members):
                        fold[members[0]] = (f + 1) % folds
                        changed = True
                        reassigned += 1
        if not changed:
            break
    else:
        raise ValueError("fold repair did not settle")
    return cells, fold, reassigned


def cross_validate(Y, mask, grid, folds, seed, tol, max_iter, demean):
    n, t = Y.shape
    cells, fold, reassigned = assign_folds(mask, folds, seed)
    errors = np.zeros((len(grid), folds))
    for f in range(folds):
        held = np.zeros_like(mask)
        for c in cells:
            if fold[c] == f:
                held[c % n, c // n] = True
        train = mask & ~held
        warm = None
        for k, lam in enumerate(grid):
            fit = soft_impute(Y, train, lam, tol, max_iter, demean, warm)
            warm = fit["low_rank"]
            resid = (Y - fit["prediction"])[held]
            errors[k, f] = np.mean(resid ** 2)
    mean = errors.mean(axis=1)
    sd = errors.std(axis=1, ddof=1)
    chosen = int(np.argmin(mean))  # first minimum = largest lambda on ties
    return {
        "mean": mean.tolist(),
        "sd": sd.tolist(),
        "chosen": chosen,
        "reassigned": reassigned,
        "fold_of_cell": [[c, fold[c]] for c in sorted(cells)],
    }
