"""Per-group adaptive dictionaries via thin SVD.

A group's dictionary is the set of rank-1 outer products u_i v_i^T formed
from its singular vectors; it is never materialized, the (U, s, V) factors
are the canonical representation.  Sparse codes for a group are coordinates
in this basis, so reconstruction is U @ diag(code) @ V.T.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GroupSVD:
    """Thin SVD factors of a group matrix; columns of u and v are orthonormal."""

    u: np.ndarray  # (rows, m)
    singular_values: np.ndarray  # (m,), descending, nonnegative
    v: np.ndarray  # (cols, m)

    @property
    def m(self):
        return len(self.singular_values)


def thin_svd(group):
    """Thin SVD of a group matrix with a deterministic sign convention.

    The entry of largest magnitude in each column of U is made positive
    (first such entry on ties); the matching V column flips with it, so
    reconstructions are unaffected.

    Parameters
    ----------
    group : ndarray
        (rows, cols) matrix with finite entries.

    Returns
    -------
    GroupSVD
        Factors with m = min(rows, cols) components.
    """
    group = np.asarray(group, dtype=np.float64)
    if not np.isfinite(group).all():
        raise ValueError("group matrix has non-finite entries")
    u, s, vt = np.linalg.svd(group, full_matrices=False)
    v = vt.T
    anchor = np.argmax(np.abs(u), axis=0)
    flip = u[anchor, np.arange(u.shape[1])] < 0
    u[:, flip] *= -1.0
    v[:, flip] *= -1.0
    return GroupSVD(u=u, singular_values=s, v=v)


def reconstruct_group(svd, code):
    """Sum of code[i] * u_i v_i^T, i.e. the group represented by ``code``."""
    code = np.asarray(code, dtype=np.float64)
    if code.shape != svd.singular_values.shape:
        raise ValueError(
            f"code length {code.shape} does not match {svd.singular_values.shape}"
        )
    return (svd.u * code) @ svd.v.T
