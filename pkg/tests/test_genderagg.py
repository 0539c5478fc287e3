"""Similarity aggregation, temperature softmax, and corpus proportions."""

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glean.genderagg import (
    Gender,
    GenderPrediction,
    PromptManifest,
    SimilarityRecord,
    SimilaritySchemaError,
    class_scores,
    corpus_gender_proportions,
    parse_similarity_file,
    predict,
    softmax_tau,
)

MAN_IDS = ("photo_of_man", "portrait_of_male_person", "picture_of_man", "male_face")
WOMAN_IDS = (
    "photo_of_woman",
    "portrait_of_female_person",
    "picture_of_woman",
    "female_face",
)


def make_record(man_scores, woman_scores, file="img.png"):
    scores = dict(zip(MAN_IDS, man_scores)) | dict(zip(WOMAN_IDS, woman_scores))
    class_of = {pid: Gender.MAN for pid in MAN_IDS} | {
        pid: Gender.WOMAN for pid in WOMAN_IDS
    }
    return SimilarityRecord(file=file, scores=scores, class_of=class_of)


class TestClassScores:
    def test_constant_scores(self):
        rec = make_record([0.25] * 4, [0.25] * 4)
        assert class_scores(rec) == (0.25, 0.25)

    def test_distinct_class_means(self):
        rec = make_record([0.30] * 4, [0.25] * 4)
        assert class_scores(rec) == pytest.approx((0.30, 0.25))

    def test_mean_of_varied_scores(self):
        rec = make_record([0.1, 0.2, 0.3, 0.4], [0.0] * 4)
        assert class_scores(rec)[0] == pytest.approx(0.25)

    def test_record_schema_enforced(self):
        with pytest.raises(SimilaritySchemaError):
            SimilarityRecord(
                file="x",
                scores={pid: 0.1 for pid in MAN_IDS},
                class_of={pid: Gender.MAN for pid in MAN_IDS},
            )
        with pytest.raises(SimilaritySchemaError):
            make_record([2.0, 0.1, 0.1, 0.1], [0.0] * 4)


class TestSoftmaxTau:
    def test_equal_scores_split_evenly(self):
        pred = softmax_tau(0.3, 0.3)
        assert pred.p_man == pytest.approx(0.5)
        assert pred.p_woman == pytest.approx(0.5)
        assert pred.tie

    def test_gap_of_five_hundredths(self):
        # logistic oracle: 1 / (1 + exp(-0.05 / 0.02)) = 0.92414181997876...
        pred = softmax_tau(0.30, 0.25, tau=0.02)
        assert pred.p_man == pytest.approx(1.0 / (1.0 + math.exp(-2.5)), abs=1e-12)
        assert pred.p_man == pytest.approx(0.9241418199, abs=1e-9)

    def test_saturation_is_stable(self):
        pred = softmax_tau(1.0, 0.0, tau=0.02)
        assert pred.p_man == pytest.approx(1.0, abs=1e-12)
        assert pred.p_woman >= 0.0

    def test_extreme_inputs_do_not_overflow(self):
        pred = softmax_tau(1.0, -1.0, tau=1e-4)
        assert math.isfinite(pred.p_man)
        assert pred.p_man == pytest.approx(1.0)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            softmax_tau(float("nan"), 0.0)
        with pytest.raises(ValueError):
            softmax_tau(0.1, 0.2, tau=0.0)

    @given(
        # realistic similarity precision: score gaps either zero or far above
        # the rounding error the shift introduces
        st.integers(-10_000, 10_000), st.integers(-10_000, 10_000),
        st.integers(-100_000, 100_000),
    )
    @settings(max_examples=300, deadline=None)
    def test_shift_invariance(self, man_q, woman_q, shift_q):
        s_man, s_woman, shift = man_q / 1e4, woman_q / 1e4, shift_q / 1e4
        base = softmax_tau(s_man, s_woman)
        shifted = softmax_tau(s_man + shift, s_woman + shift)
        assert shifted.p_man == pytest.approx(base.p_man, abs=1e-9)
        assert shifted.predicted is base.predicted

    @given(st.floats(-1, 1), st.floats(-1, 1))
    @settings(max_examples=300, deadline=None)
    def test_probabilities_sum_to_one(self, s_man, s_woman):
        pred = softmax_tau(s_man, s_woman)
        assert abs(pred.p_man + pred.p_woman - 1.0) <= 1e-9

    def test_temperature_monotonicity(self):
        p_wide = softmax_tau(0.3, 0.2, tau=0.1).p_man
        p_sharp = softmax_tau(0.3, 0.2, tau=0.02).p_man
        assert p_sharp > p_wide

    def test_prediction_invariant_enforced(self):
        with pytest.raises(ValueError):
            GenderPrediction(p_man=0.7, p_woman=0.3, predicted=Gender.WOMAN)
        with pytest.raises(ValueError):
            GenderPrediction(p_man=0.7, p_woman=0.2, predicted=Gender.MAN)


class TestCorpusProportions:
    def test_counting(self):
        records = [make_record([0.5] * 4, [0.1] * 4, file=f"m{i}.png") for i in range(3)]
        records.append(make_record([0.1] * 4, [0.5] * 4, file="w.png"))
        props = corpus_gender_proportions(records)
        assert props.pct_man == pytest.approx(75.0)
        assert props.pct_woman == pytest.approx(25.0)
        assert props.tie_count == 0

    def test_ties_go_to_declared_class_and_are_counted(self):
        records = [make_record([0.2] * 4, [0.2] * 4, file=f"t{i}.png") for i in range(4)]
        props = corpus_gender_proportions(records)
        assert props.pct_man == 100.0
        assert props.tie_count == 4

    def test_permutation_invariance(self):
        records = [
            make_record([0.5] * 4, [0.1] * 4, file="a.png"),
            make_record([0.1] * 4, [0.5] * 4, file="b.png"),
            make_record([0.4] * 4, [0.2] * 4, file="c.png"),
        ]
        forward = corpus_gender_proportions(records)
        backward = corpus_gender_proportions(records[::-1])
        assert forward == backward

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            corpus_gender_proportions([])


class TestInterchange:
    def _write(self, tmp_path, images):
        path = tmp_path / "sims.json"
        path.write_text(json.dumps({"images": images}))
        return path

    def test_valid_file_parses(self, tmp_path):
        sims = {pid: 0.2 for pid in MAN_IDS + WOMAN_IDS}
        path = self._write(tmp_path, [{"file": "a.png", "similarities": sims}])
        records = parse_similarity_file(path)
        assert set(records) == {"a.png"}
        assert predict(records["a.png"]).tie

    def test_wrong_id_set_rejected(self, tmp_path):
        sims = {pid: 0.2 for pid in MAN_IDS + WOMAN_IDS[:3]} | {"extra": 0.1}
        path = self._write(tmp_path, [{"file": "a.png", "similarities": sims}])
        with pytest.raises(SimilaritySchemaError):
            parse_similarity_file(path)

    def test_out_of_range_rejected(self, tmp_path):
        sims = {pid: 0.2 for pid in MAN_IDS + WOMAN_IDS}
        sims["male_face"] = 1.5
        path = self._write(tmp_path, [{"file": "a.png", "similarities": sims}])
        with pytest.raises(SimilaritySchemaError):
            parse_similarity_file(path)

    def test_duplicate_file_rejected(self, tmp_path):
        sims = {pid: 0.2 for pid in MAN_IDS + WOMAN_IDS}
        entry = {"file": "a.png", "similarities": sims}
        path = self._write(tmp_path, [entry, entry])
        with pytest.raises(SimilaritySchemaError):
            parse_similarity_file(path)

    def test_default_manifest_is_four_per_class(self):
        manifest = PromptManifest.default()
        classes = [manifest.class_of(pid) for pid in manifest.ids()]
        assert classes.count(Gender.MAN) == 4
        assert classes.count(Gender.WOMAN) == 4
