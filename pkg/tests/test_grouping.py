import numpy as np
import pytest

from sgsr.grouping import (
    build_layout,
    gather_group,
    gather_groups,
    match_all_patches,
    match_patches,
    scatter_average,
)


def layout_positions_oracle(width, height, patch_edge, stride):
    """Independent enumeration of the clamped raster layout."""
    def axis(extent):
        offs = sorted({min(k * stride, extent - patch_edge)
                       for k in range((extent - patch_edge) // stride + 2)})
        return [o for o in offs if 0 <= o <= extent - patch_edge]
    return [(r, c) for r in axis(height) for c in axis(width)]


def matching_oracle(source, patch_edge, reference, window_edge, c):
    """Brute-force SSD ranking over every candidate inside the clamped window."""
    height, width = source.shape
    ref_r, ref_c = reference
    shift = window_edge // 2 - patch_edge // 2
    wt = min(max(ref_r - shift, 0), max(height - window_edge, 0))
    wl = min(max(ref_c - shift, 0), max(width - window_edge, 0))
    n_rows = min(window_edge, height) - patch_edge + 1
    n_cols = min(window_edge, width) - patch_edge + 1
    ref_patch = source[ref_r : ref_r + patch_edge, ref_c : ref_c + patch_edge]
    scored = []
    for i in range(n_rows):
        for j in range(n_cols):
            r, col = wt + i, wl + j
            patch = source[r : r + patch_edge, col : col + patch_edge]
            dist = float(np.sum((patch - ref_patch) ** 2))
            if (r, col) == (ref_r, ref_c):
                dist = -1.0
            scored.append((dist, i * n_cols + j, (r, col)))
    scored.sort(key=lambda item: (item[0], item[1]))
    return [pos for _, _, pos in scored[:c]]


class TestBuildLayout:
    def test_even_sixteen(self):
        layout = build_layout(16, 16, 8, 4)
        assert layout.n == 9
        assert sorted({r for r, _ in layout.positions}) == [0, 4, 8]

    def test_exact_fit_single_patch(self):
        layout = build_layout(8, 8, 8, 4)
        assert layout.positions.tolist() == [[0, 0]]

    def test_clamped_seventeen(self):
        layout = build_layout(17, 17, 8, 4)
        assert layout.n == 16
        assert sorted({r for r, _ in layout.positions}) == [0, 4, 8, 9]

    @pytest.mark.parametrize("width,height,stride", [(16, 16, 4), (17, 23, 4),
                                                     (33, 41, 5), (9, 64, 3)])
    def test_matches_enumeration_oracle(self, width, height, stride):
        layout = build_layout(width, height, 8, stride)
        assert layout.positions.tolist() == [
            list(p) for p in layout_positions_oracle(width, height, 8, stride)
        ]

    def test_coverage(self):
        layout = build_layout(37, 29, 8, 4)
        hits = np.zeros((29, 37), dtype=int)
        for r, c in layout.positions:
            hits[r : r + 8, c : c + 8] += 1
        assert (hits > 0).all()

    def test_patch_larger_than_image(self):
        with pytest.raises(ValueError, match="patch edge"):
            build_layout(6, 6, 8, 4)


class TestMatchPatches:
    def test_reference_always_first(self, rng):
        source = rng.uniform(0, 255, size=(64, 64))
        layout = build_layout(64, 64, 8, 4)
        group = match_patches(source, layout, (12, 20), 40, 10)
        assert group.reference == (12, 20)
        assert tuple(group.members[0]) == (12, 20)

    def test_constant_image_tie_break(self):
        source = np.full((64, 64), 9.0)
        layout = build_layout(64, 64, 8, 4)
        group = match_patches(source, layout, (16, 16), 40, 5)
        assert tuple(group.members[0]) == (16, 16)
        # remaining members: first window positions in raster order
        assert group.members[1:].tolist() == [[0, 0], [0, 1], [0, 2], [0, 3]]

    def test_exact_duplicate_ranks_before_near_misses(self, rng):
        source = rng.uniform(0, 255, size=(64, 64))
        ref = (28, 28)
        source[40:48, 12:20] = source[28:36, 28:36]  # plant a duplicate
        layout = build_layout(64, 64, 8, 4)
        group = match_patches(source, layout, ref, 40, 3)
        assert tuple(group.members[0]) == ref
        assert tuple(group.members[1]) == (40, 12)

    @pytest.mark.parametrize("reference", [(0, 0), (56, 56), (28, 0), (12, 44)])
    def test_matches_brute_force_oracle(self, rng, reference):
        source = rng.uniform(0, 255, size=(64, 64))
        layout = build_layout(64, 64, 8, 4)
        group = match_patches(source, layout, reference, 40, 12)
        expected = matching_oracle(source, 8, reference, 40, 12)
        assert [tuple(m) for m in group.members] == expected

    def test_rerun_is_identical(self, rng):
        source = rng.uniform(0, 255, size=(64, 64))
        layout = build_layout(64, 64, 8, 4)
        a = match_patches(source, layout, (8, 8), 40, 8)
        b = match_patches(source, layout, (8, 8), 40, 8)
        assert np.array_equal(a.members, b.members)

    def test_too_few_candidates(self):
        layout = build_layout(16, 16, 8, 4)
        with pytest.raises(ValueError, match="fewer than c"):
            match_patches(np.zeros((16, 16)), layout, (0, 0), 40, 100)

    def test_match_all_equals_per_reference(self, rng):
        source = rng.uniform(0, 255, size=(64, 64))
        layout = build_layout(64, 64, 8, 4)
        batched = match_all_patches(source, layout, 40, 10)
        assert len(batched) == layout.n
        for position, group in zip(layout.positions, batched):
            single = match_patches(source, layout, tuple(position), 40, 10)
            assert group.reference == single.reference
            assert np.array_equal(group.members, single.members)


class TestGatherScatter:
    def test_whole_image_single_patch(self, rng):
        source = rng.uniform(0, 255, size=(8, 8))
        layout = build_layout(8, 8, 8, 4)
        group = match_patches(source, layout, (0, 0), 8, 1)
        matrix = gather_group(source, group)
        assert matrix.shape == (64, 1)
        assert np.array_equal(matrix[:, 0], source.ravel())

    def test_constant_gather(self):
        source = np.full((16, 16), 3.5)
        layout = build_layout(16, 16, 8, 4)
        group = match_patches(source, layout, (4, 4), 16, 4)
        assert np.all(gather_group(source, group) == 3.5)

    def test_single_group_round_trip(self, rng):
        source = rng.uniform(0, 255, size=(8, 8))
        layout = build_layout(8, 8, 8, 4)
        group = match_patches(source, layout, (0, 0), 8, 1)
        out = scatter_average([(group, gather_group(source, group))], 8, 8)
        assert np.array_equal(out, source)

    def test_two_contributions_average(self):
        # two single-patch groups at the same position with values a and b
        layout = build_layout(8, 8, 8, 4)
        source_a = np.full((8, 8), 10.0)
        source_b = np.full((8, 8), 20.0)
        group = match_patches(source_a, layout, (0, 0), 8, 1)
        out = scatter_average(
            [(group, gather_group(source_a, group)),
             (group, gather_group(source_b, group))],
            8, 8,
        )
        assert np.all(out == 15.0)

    def test_full_round_trip_partition_of_unity(self, rng):
        source = rng.uniform(0, 255, size=(48, 48))
        layout = build_layout(48, 48, 8, 4)
        groups = match_all_patches(source, layout, 40, 10)
        gathered = [(g, gather_group(source, g)) for g in groups]
        out = scatter_average(gathered, 48, 48)
        assert np.abs(out - source).max() < 1e-12

    def test_gather_groups_matches_loop(self, rng):
        source = rng.uniform(0, 255, size=(48, 48))
        layout = build_layout(48, 48, 8, 4)
        groups = match_all_patches(source, layout, 40, 6)
        batched = gather_groups(source, groups)
        for matrix, group in zip(batched, groups):
            assert np.array_equal(matrix, gather_group(source, group))

    def test_out_of_bounds_member_rejected(self, rng):
        source = rng.uniform(0, 255, size=(16, 16))
        layout = build_layout(16, 16, 8, 4)
        group = match_patches(source, layout, (0, 0), 16, 2)
        bad = type(group)(
            reference=group.reference,
            members=np.array([[0, 0], [12, 0]]),
            patch_edge=8,
        )
        with pytest.raises(ValueError, match="out of bounds"):
            gather_group(source, bad)

    def test_uncovered_pixel_rejected(self):
        layout = build_layout(16, 16, 8, 4)
        source = np.zeros((16, 16))
        group = match_patches(source, layout, (0, 0), 16, 1)
        with pytest.raises(ValueError, match="uncovered pixel"):
            scatter_average([(group, gather_group(source, group))], 16, 16)
