"""Nonlocal patch grouping: overlapped patch layout, exhaustive block
matching inside a local search window, and gather/scatter between the image
raster and per-group patch matrices.

A group is the set of the c patches most similar (smallest SSD) to a
reference patch among all stride-1 candidates in a window centered on it;
the window is shifted inward at borders so the candidate count is constant.
Gathered groups are (patch_len, c) matrices whose columns are flattened
patches; scattering returns every patch to its position and averages
overlapping contributions with uniform weights.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True)
class PatchLayout:
    """Top-left positions of overlapped patches covering an image."""

    width: int
    height: int
    patch_edge: int
    stride: int
    positions: np.ndarray  # (n, 2) int rows of (row, col), raster order

    @property
    def n(self):
        return len(self.positions)

    @property
    def patch_len(self):
        return self.patch_edge * self.patch_edge


@dataclass(frozen=True)
class GroupIndex:
    """Matched patch positions for one reference; members[0] is the reference."""

    reference: tuple
    members: np.ndarray  # (c, 2) int rows of (row, col)
    patch_edge: int


def _axis_offsets(extent, patch_edge, stride):
    limit = extent - patch_edge
    offsets = list(range(0, limit + 1, stride))
    if offsets[-1] != limit:
        offsets.append(limit)  # clamp so the last patch touches the border
    return offsets


def build_layout(width, height, patch_edge=8, stride=4):
    """Raster-ordered patch positions at the given stride, with the final
    row/column clamped so the right and bottom borders are covered."""
    if patch_edge > min(width, height):
        raise ValueError(
            f"patch edge {patch_edge} exceeds image extent {width}x{height}"
        )
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    rows = _axis_offsets(height, patch_edge, stride)
    cols = _axis_offsets(width, patch_edge, stride)
    positions = np.array(
        [(r, c) for r in rows for c in cols], dtype=np.int64
    ).reshape(len(rows) * len(cols), 2)
    return PatchLayout(
        width=width, height=height, patch_edge=patch_edge, stride=stride,
        positions=positions,
    )


def _patch_matrix(source, patch_edge):
    """All stride-1 patches flattened row-major: (grid_h * grid_w, patch_len)."""
    view = sliding_window_view(source, (patch_edge, patch_edge))
    grid_h, grid_w = view.shape[:2]
    return view.reshape(grid_h * grid_w, patch_edge * patch_edge), grid_h, grid_w


def _row_sq_norms(matrix):
    return np.einsum("ij,ij->i", matrix, matrix)


def _window_origins(layout, window_edge, rows, cols):
    """Clamped window top-left corners for reference patches at (rows, cols).

    The window is centered on the patch and shifted inward at borders, so
    the candidate grid shape (and count) is the same for every reference.
    """
    if window_edge < layout.patch_edge:
        raise ValueError(
            f"window edge {window_edge} smaller than patch edge {layout.patch_edge}"
        )
    shift = window_edge // 2 - layout.patch_edge // 2
    top = np.clip(rows - shift, 0, max(layout.height - window_edge, 0))
    left = np.clip(cols - shift, 0, max(layout.width - window_edge, 0))
    cand_rows = min(window_edge, layout.height) - layout.patch_edge + 1
    cand_cols = min(window_edge, layout.width) - layout.patch_edge + 1
    return top, left, cand_rows, cand_cols


def _rank_candidates(cand_vecs, cand_norms, ref_idx, ref_vec, c):
    """Indices of the c nearest candidates; the reference is forced first and
    exact distance ties fall back to candidate raster order (stable sort)."""
    dist = cand_norms - 2.0 * (cand_vecs @ ref_vec) + cand_norms[ref_idx]
    dist[ref_idx] = -1.0
    return np.argsort(dist, kind="stable")[:c]


def match_patches(source, layout, reference, window_edge, c):
    """Exhaustive SSD search for the c best matches to one reference patch.

    Parameters
    ----------
    source : ndarray
        Image to search.
    layout : PatchLayout
        Supplies the patch size and image extent.
    reference : (row, col)
        Top-left corner of the reference patch.
    window_edge : int
        Side of the square search window centered on the reference patch.
    c : int
        Number of matches to return, reference included.

    Returns
    -------
    GroupIndex
        members[0] is the reference itself (distance 0).
    """
    source = np.asarray(source, dtype=np.float64)
    p = layout.patch_edge
    ref_r, ref_c = int(reference[0]), int(reference[1])
    top, left, n_rows, n_cols = _window_origins(
        layout, window_edge, np.array([ref_r]), np.array([ref_c])
    )
    wt, wl = int(top[0]), int(left[0])
    if n_rows * n_cols < c:
        raise ValueError(
            f"window holds {n_rows * n_cols} candidate patches, fewer than c={c}"
        )
    if not (0 <= ref_r - wt < n_rows and 0 <= ref_c - wl < n_cols):
        raise ValueError(f"reference {reference} outside its own search window")
    view = sliding_window_view(source, (p, p))
    cand_vecs = view[wt : wt + n_rows, wl : wl + n_cols].reshape(n_rows * n_cols, p * p)
    cand_norms = _row_sq_norms(cand_vecs)
    ref_idx = (ref_r - wt) * n_cols + (ref_c - wl)
    order = _rank_candidates(cand_vecs, cand_norms, ref_idx, cand_vecs[ref_idx], c)
    return GroupIndex(
        reference=(ref_r, ref_c),
        members=np.stack((wt + order // n_cols, wl + order % n_cols), axis=1),
        patch_edge=p,
    )


def match_all_patches(source, layout, window_edge, c):
    """match_patches for every layout position, sharing one patch-vector table.

    Returns the groups in layout order; output is identical to calling
    match_patches per reference.
    """
    source = np.asarray(source, dtype=np.float64)
    p = layout.patch_edge
    top, left, n_rows, n_cols = _window_origins(
        layout, window_edge, layout.positions[:, 0], layout.positions[:, 1]
    )
    if n_rows * n_cols < c:
        raise ValueError(
            f"window holds {n_rows * n_cols} candidate patches, fewer than c={c}"
        )
    patches, _, grid_w = _patch_matrix(source, p)
    norms = _row_sq_norms(patches)
    window_offsets = (
        np.arange(n_rows, dtype=np.int64)[:, None] * grid_w
        + np.arange(n_cols, dtype=np.int64)[None, :]
    ).ravel()
    groups = []
    for (ref_r, ref_c), wt, wl in zip(layout.positions, top, left):
        cand_idx = wt * grid_w + wl + window_offsets
        cand_vecs = patches[cand_idx]
        ref_idx = (ref_r - wt) * n_cols + (ref_c - wl)
        order = _rank_candidates(
            cand_vecs, norms[cand_idx], ref_idx, patches[ref_r * grid_w + ref_c], c
        )
        picked = cand_idx[order]
        groups.append(
            GroupIndex(
                reference=(int(ref_r), int(ref_c)),
                members=np.stack((picked // grid_w, picked % grid_w), axis=1),
                patch_edge=p,
            )
        )
    return groups


def gather_group(source, index):
    """Assemble the (patch_len, c) matrix whose column j is the flattened
    patch at members[j]."""
    source = np.asarray(source, dtype=np.float64)
    p = index.patch_edge
    height, width = source.shape
    if (
        (index.members < 0).any()
        or (index.members[:, 0] > height - p).any()
        or (index.members[:, 1] > width - p).any()
    ):
        raise ValueError("group member position out of bounds")
    view = sliding_window_view(source, (p, p))
    patches = view[index.members[:, 0], index.members[:, 1]]
    return patches.reshape(len(index.members), p * p).T.copy()


def gather_groups(source, indices):
    """Batched gather_group for same-shape groups: (n_groups, patch_len, c)."""
    source = np.asarray(source, dtype=np.float64)
    p = indices[0].patch_edge
    members = np.stack([index.members for index in indices])
    view = sliding_window_view(source, (p, p))
    patches = view[members[..., 0], members[..., 1]]
    n_groups, c = members.shape[:2]
    return patches.reshape(n_groups, c, p * p).transpose(0, 2, 1)


def scatter_average(groups, width, height):
    """Return every group column to its patch position and average overlaps.

    ``groups`` is an iterable of (GroupIndex, matrix) pairs.  Each output
    pixel is the mean of all values mapped onto it (uniform weights); raises
    if any pixel receives no contribution.  Accumulation order is fixed
    (group, then member, then pixel), so results are reproducible.
    """
    groups = list(groups)
    offset_cache = {}

    def pixel_offsets(p):
        if p not in offset_cache:
            offset_cache[p] = (
                np.arange(p, dtype=np.int64)[:, None] * width
                + np.arange(p, dtype=np.int64)[None, :]
            ).ravel()
        return offset_cache[p]

    first = groups[0][0]
    homogeneous = all(
        index.patch_edge == first.patch_edge
        and index.members.shape == first.members.shape
        for index, _ in groups
    )
    if homogeneous:
        members = np.stack([index.members for index, _ in groups])
        base = members[..., 0] * width + members[..., 1]
        pixels = (base[..., None] + pixel_offsets(first.patch_edge)).ravel()
        values = np.stack(
            [np.ascontiguousarray(matrix.T) for _, matrix in groups]
        ).ravel()
    else:
        pixel_chunks = []
        value_chunks = []
        for index, matrix in groups:
            base = index.members[:, 0] * width + index.members[:, 1]
            pixel_chunks.append(
                (base[:, None] + pixel_offsets(index.patch_edge)).ravel()
            )
            value_chunks.append(np.ascontiguousarray(matrix.T).ravel())
        pixels = np.concatenate(pixel_chunks)
        values = np.concatenate(value_chunks)
    sums = np.bincount(pixels, weights=values, minlength=width * height)
    counts = np.bincount(pixels, minlength=width * height)
    if (counts == 0).any():
        raise ValueError("uncovered pixel: groups do not cover the image")
    return (sums / counts).reshape(height, width)
