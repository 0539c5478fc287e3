"""Color conversion, polygon masking, and Monk classification."""

import numpy as np
import pytest

from glean.align import AlignmentTarget, SimilarityTransform
from glean.skintone import (
    DegenerateMaskError,
    LabColor,
    MonkPalette,
    MonkReference,
    RegionConfig,
    SkinMask,
    build_skin_mask,
    classify_monk,
    lab_to_srgb,
    masked_median_lab,
    rasterize_polygon,
    srgb_to_lab,
    srgb_to_lab_array,
)

from conftest import synthetic_landmarks

IDENTITY = SimilarityTransform(rotation_rad=0.0, scale=1.0, translation=(0.0, 0.0))


class TestSrgbToLab:
    def test_white_point(self):
        lab = srgb_to_lab((255, 255, 255))
        assert lab.L == pytest.approx(100.0, abs=0.01)
        assert abs(lab.a) < 0.01
        assert abs(lab.b) < 0.01

    def test_black(self):
        lab = srgb_to_lab((0, 0, 0))
        assert lab == LabColor(0.0, 0.0, 0.0)

    def test_mid_gray(self):
        # independent evaluation of the standard pipeline for (119,119,119):
        # linear = ((119/255 + 0.055)/1.055)^2.4 = 0.184475, Y/Yn = 0.184475,
        # L = 116 * 0.184475^(1/3) - 16 = 50.03, a = b = 0
        lab = srgb_to_lab((119, 119, 119))
        assert lab.L == pytest.approx(50.0, abs=0.5)
        assert abs(lab.a) < 0.01
        assert abs(lab.b) < 0.01

    def test_round_trip_on_lattice(self):
        # all 16^3 lattice colors survive Lab and back within 1 channel unit
        grid = np.arange(0, 256, 17)
        worst = 0
        for r in grid:
            for g in grid:
                for b in grid:
                    lab = srgb_to_lab((r, g, b))
                    rr, gg, bb = lab_to_srgb(lab)
                    worst = max(worst, abs(rr - r), abs(gg - g), abs(bb - b))
        assert worst <= 1

    def test_array_and_scalar_agree(self):
        pixels = np.array([[10, 200, 30], [255, 0, 128]], dtype=np.uint8)
        batch = srgb_to_lab_array(pixels)
        for row, (r, g, b) in zip(batch, pixels):
            lab = srgb_to_lab((int(r), int(g), int(b)))
            assert row[0] == pytest.approx(lab.L, abs=1e-9)
            assert row[1] == pytest.approx(lab.a, abs=1e-9)
            assert row[2] == pytest.approx(lab.b, abs=1e-9)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            srgb_to_lab((256, 0, 0))
        with pytest.raises(ValueError):
            srgb_to_lab_array(np.array([[-1.0, 0.0, 0.0]]))


class TestMonkPalette:
    def test_default_palette_loads_ten_ranks(self):
        palette = MonkPalette.default()
        assert [r.rank for r in palette.references] == list(range(1, 11))
        # rank 1 is lightest, rank 10 darkest
        assert palette.references[0].lab.L > palette.references[-1].lab.L

    def test_classify_each_reference_exactly(self):
        palette = MonkPalette.default()
        for ref in palette.references:
            res = classify_monk(ref.lab, palette)
            assert res.monk_rank == ref.rank
            assert res.distance == 0.0

    def test_tie_breaks_to_lower_rank(self):
        refs = tuple(
            MonkReference(rank=k, hex="#000000", lab=LabColor(10.0 * k, 0.0, 0.0))
            for k in range(1, 11)
        )
        palette = MonkPalette(references=refs)
        res = classify_monk(LabColor(35.0, 0.0, 0.0), palette)  # midpoint of 3 and 4
        assert res.monk_rank == 3

    def test_perturbed_reference_still_nearest(self):
        palette = MonkPalette.default()
        base = palette.references[8].lab  # rank 9
        res = classify_monk(LabColor(base.L + 0.1, base.a, base.b), palette)
        assert res.monk_rank == 9
        # brute-force scan oracle
        dists = [(LabColor(base.L + 0.1, base.a, base.b).distance(r.lab), r.rank)
                 for r in palette.references]
        assert min(dists)[1] == 9

    def test_reference_order_does_not_matter(self):
        palette = MonkPalette.default()
        shuffled = MonkPalette(references=tuple(reversed(palette.references)))
        probe = LabColor(55.0, 10.0, 20.0)
        assert classify_monk(probe, shuffled) == classify_monk(probe, palette)

    def test_wrong_swatch_count_rejected(self):
        with pytest.raises(ValueError):
            MonkPalette.from_hex_list(["#ffffff"] * 9)


class TestRasterizePolygon:
    def test_integer_square_exact_area(self):
        square = [(10, 10), (30, 10), (30, 30), (10, 30)]
        mask = rasterize_polygon(square, 50, 50)
        assert mask.sum() == 20 * 20
        assert mask[15, 15]
        assert not mask[5, 5]

    def test_oval_minus_hole_arithmetic(self):
        outer = [(0, 0), (40, 0), (40, 40), (0, 40)]
        hole = [(10, 10), (20, 10), (20, 20), (10, 20)]
        full = rasterize_polygon(outer, 50, 50)
        inner = rasterize_polygon(hole, 50, 50)
        diff = full & ~inner
        assert full.sum() == 1600
        assert inner.sum() == 100
        assert diff.sum() == 1500

    def test_degenerate_polygon_rejected(self):
        with pytest.raises(ValueError):
            rasterize_polygon([(0, 0), (1, 1)], 10, 10)


class TestBuildSkinMask:
    def _landmarks(self):
        return synthetic_landmarks(
            nose=(400, 460), left_eye=(340, 400), right_eye=(460, 400),
            width=800, height=800, face_radius=200,
        )

    def test_mask_within_canvas_and_covering(self):
        mask = build_skin_mask(self._landmarks(), IDENTITY, AlignmentTarget())
        assert isinstance(mask, SkinMask)
        assert 0.01 < mask.coverage < 1.0

    def test_exclusions_strictly_reduce_coverage(self):
        lm = self._landmarks()
        regions = RegionConfig.default()
        oval_only = RegionConfig(face_oval=regions.face_oval, exclusions={
            "dummy": (0, 2, 3),
        })
        # a dummy exclusion far outside the oval leaves the oval intact
        full = build_skin_mask(lm, IDENTITY, AlignmentTarget(), oval_only)
        carved = build_skin_mask(lm, IDENTITY, AlignmentTarget(), regions)
        assert carved.coverage < full.coverage

    def test_degenerate_oval_rejected(self):
        lm = synthetic_landmarks(
            nose=(400, 460), left_eye=(340, 400), right_eye=(460, 400),
            width=800, height=800, face_radius=0.1,
        )
        with pytest.raises(DegenerateMaskError):
            build_skin_mask(lm, IDENTITY, AlignmentTarget())

    def test_undetected_rejected(self):
        from glean.landmarks import FaceLandmarks

        lm = FaceLandmarks(image_width=800, image_height=800, detected=False)
        with pytest.raises(DegenerateMaskError):
            build_skin_mask(lm, IDENTITY, AlignmentTarget())


class TestMaskedMedianLab:
    def _mask(self, h, w, bitmap):
        return SkinMask(bitmap=bitmap, coverage=float(bitmap.sum()) / (h * w))

    def test_uniform_region_is_exact(self):
        img = np.full((10, 10, 3), (120, 90, 60), dtype=np.uint8)
        bitmap = np.zeros((10, 10), dtype=bool)
        bitmap[2:8, 2:8] = True
        lab = masked_median_lab(img, self._mask(10, 10, bitmap))
        expected = srgb_to_lab((120, 90, 60))
        assert lab.L == pytest.approx(expected.L, abs=1e-9)
        assert lab.a == pytest.approx(expected.a, abs=1e-9)

    def test_component_wise_median_of_three(self):
        # gray levels with Lab L approximately 30/40/90 and zero a, b
        img = np.zeros((2, 3, 3), dtype=np.uint8)
        img[0, 0] = 71   # L ~ 30
        img[0, 1] = 97   # L ~ 41
        img[0, 2] = 227  # L ~ 90
        bitmap = np.zeros((2, 3), dtype=bool)
        bitmap[0, :] = True
        lab = masked_median_lab(img, self._mask(2, 3, bitmap))
        assert lab.L == pytest.approx(srgb_to_lab((97, 97, 97)).L, abs=1e-9)

    def test_majority_color_wins(self):
        img = np.full((5, 5, 3), (200, 150, 120), dtype=np.uint8)
        img[0, 0] = (0, 255, 0)
        img[0, 1] = (255, 0, 255)
        bitmap = np.ones((5, 5), dtype=bool)
        bitmap[4, 4] = False
        lab = masked_median_lab(img, self._mask(5, 5, bitmap))
        expected = srgb_to_lab((200, 150, 120))
        assert lab.L == pytest.approx(expected.L, abs=1e-9)
        assert lab.b == pytest.approx(expected.b, abs=1e-9)

    def test_duplication_invariance(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, (4, 6, 3), dtype=np.uint8)
        doubled = np.concatenate([img, img], axis=0)
        m1 = np.ones((4, 6), dtype=bool)
        m1[3, 5] = False
        m2 = np.concatenate([m1, m1], axis=0)
        lab1 = masked_median_lab(img, self._mask(4, 6, m1))
        lab2 = masked_median_lab(doubled, self._mask(8, 6, m2))
        assert lab1.L == pytest.approx(lab2.L, abs=1e-12)
        assert lab1.a == pytest.approx(lab2.a, abs=1e-12)
        assert lab1.b == pytest.approx(lab2.b, abs=1e-12)

    def test_brute_force_component_oracle(self):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, (3, 7, 3), dtype=np.uint8)
        bitmap = rng.random((3, 7)) < 0.7
        bitmap[0, 0] = True
        mask = self._mask(3, 7, bitmap)
        lab = masked_median_lab(img, mask)
        pixels = img[bitmap]
        per_pixel = np.array([
            [srgb_to_lab(tuple(int(c) for c in px)).L,
             srgb_to_lab(tuple(int(c) for c in px)).a,
             srgb_to_lab(tuple(int(c) for c in px)).b]
            for px in pixels
        ])
        for got, comp in zip((lab.L, lab.a, lab.b), per_pixel.T):
            vals = sorted(comp)
            n = len(vals)
            want = vals[n // 2] if n % 2 else (vals[n // 2 - 1] + vals[n // 2]) / 2
            assert got == pytest.approx(want, abs=1e-9)

    def test_empty_mask_rejected(self):
        img = np.zeros((2, 2, 3), dtype=np.uint8)
        bitmap = np.zeros((2, 2), dtype=bool)
        with pytest.raises(ValueError):
            SkinMask(bitmap=bitmap, coverage=0.0)
        mask = SkinMask(bitmap=np.ones((2, 2), dtype=bool), coverage=0.5)
        with pytest.raises(ValueError):
            masked_median_lab(np.zeros((3, 3, 3), dtype=np.uint8), mask)
