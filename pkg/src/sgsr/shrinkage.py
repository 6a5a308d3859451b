"""Per-group subproblem: hard thresholding of singular values.

Each group subproblem min 0.5*||G - G_r||_F^2 + penalty*||code||_0 over
groups expressible in the dictionary of G_r has a closed-form solution:
decompose G_r, zero every singular value whose magnitude does not exceed
sqrt(2*penalty), reconstruct.  brute_force_oracle verifies this by support
enumeration and is intended for tests only.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from sgsr.dictionary import reconstruct_group, thin_svd


@dataclass(frozen=True)
class ShrinkageParams:
    """Regularization weight and the per-group penalty/threshold derived
    from it: penalty = lam * coeff_count / pixel_count, threshold =
    sqrt(2 * penalty)."""

    lam: float
    group_penalty: float
    threshold: float
    coeff_count: int
    pixel_count: int


def shrinkage_params(lam, patch_len, group_size, group_count, pixel_count):
    """Derive the per-group penalty from the global regularization weight.

    coeff_count is the total number of group coefficients,
    patch_len * group_size * group_count.
    """
    if lam <= 0:
        raise ValueError(f"regularization weight must be positive, got {lam}")
    for name, value in (
        ("patch_len", patch_len),
        ("group_size", group_size),
        ("group_count", group_count),
        ("pixel_count", pixel_count),
    ):
        if value <= 0:
            raise ValueError(f"{name} must be positive, got {value}")
    coeff_count = patch_len * group_size * group_count
    penalty = lam * coeff_count / pixel_count
    return ShrinkageParams(
        lam=lam,
        group_penalty=penalty,
        threshold=float(np.sqrt(2.0 * penalty)),
        coeff_count=coeff_count,
        pixel_count=pixel_count,
    )


def hard_threshold(values, threshold):
    """Zero every entry whose magnitude does not exceed the threshold
    (strict inequality: boundary values are zeroed)."""
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    values = np.asarray(values, dtype=np.float64)
    return np.where(np.abs(values) > threshold, values, 0.0)


def solve_group_subproblem(group_r, params, return_support=False):
    """Closed-form minimizer of the per-group objective.

    Decomposes ``group_r``, hard-thresholds its singular values at
    params.threshold and reconstructs.  With ``return_support`` also returns
    the number of surviving coefficients.
    """
    svd = thin_svd(group_r)
    code = hard_threshold(svd.singular_values, params.threshold)
    solution = reconstruct_group(svd, code)
    if return_support:
        return solution, int(np.count_nonzero(code))
    return solution


def brute_force_oracle(group_r, params):
    """Exhaustive reference solver for the per-group objective (tests only).

    Enumerates all 2^m coefficient supports in order of increasing size; on
    each support the optimal code keeps the singular values there and zeroes
    the rest.  The objective is evaluated by explicit reconstruction,
    0.5*||G_hat - G_r||_F^2 + penalty * |support|, and exact ties prefer the
    smaller support.

    Returns
    -------
    (ndarray, float)
        The minimizing group matrix and its objective value.
    """
    group_r = np.asarray(group_r, dtype=np.float64)
    m = min(group_r.shape)
    if m > 16:
        raise ValueError(f"support enumeration infeasible for m={m} > 16")
    svd = thin_svd(group_r)
    best_matrix = None
    best_objective = np.inf
    for size in range(m + 1):
        for support in combinations(range(m), size):
            code = np.zeros(m)
            code[list(support)] = svd.singular_values[list(support)]
            candidate = reconstruct_group(svd, code)
            objective = (
                0.5 * np.sum((candidate - group_r) ** 2) + params.group_penalty * size
            )
            # Strict improvement beyond tie tolerance, so equal-objective
            # supports resolve to the smallest (earliest enumerated) one.
            tie_tol = 1e-12 * (1.0 + abs(best_objective))
            if best_matrix is None or objective < best_objective - tie_tol:
                best_matrix = candidate
                best_objective = objective
    return best_matrix, float(best_objective)
