import numpy as np
import pytest

from eegspect.eval_report import (
    ConfusionMatrix,
    SubjectResult,
    accuracy,
    confusion_matrix,
    confusion_to_pgm,
    percent_2dp,
    results_from_json,
    results_to_json,
    subject_table,
    table_to_csv,
)


def result_for(subject_id, accuracy_value, total=100, seed=0):
    """SubjectResult with a synthetic 2-class confusion at the given accuracy."""
    correct = int(round(accuracy_value * total))
    counts = np.array([[correct, total - correct], [0, 0]], dtype=np.int64)
    cm = ConfusionMatrix(counts=counts, class_names=("a", "b"))
    return SubjectResult(
        subject_id=subject_id,
        accuracy=accuracy_value,
        confusion=cm,
        scheme="four_class",
        seed=seed,
        strategy="per_example_stratified",
    )


class TestConfusionMatrix:
    def test_counts_land_on_true_row_predicted_column(self):
        cm = confusion_matrix(preds=[0, 1, 1, 0], truths=[0, 1, 0, 0], k=2)
        np.testing.assert_array_equal(cm.counts, [[2, 1], [0, 1]])
        assert cm.total == 4

    def test_empty_input_gives_zero_matrix(self):
        cm = confusion_matrix(preds=[], truths=[], k=3)
        np.testing.assert_array_equal(cm.counts, np.zeros((3, 3), dtype=np.int64))

    def test_default_and_custom_names(self):
        assert confusion_matrix([0], [0], k=2).class_names == ("class_0", "class_1")
        cm = confusion_matrix([0], [0], k=2, class_names=("rest", "hand"))
        assert cm.class_names == ("rest", "hand")

    def test_out_of_range_labels_rejected(self):
        with pytest.raises(ValueError, match=r"\[0, 2\)"):
            confusion_matrix([0, 2], [0, 1], k=2)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="equal-length"):
            confusion_matrix([0, 1], [0], k=2)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            ConfusionMatrix(counts=np.array([[1, -1], [0, 1]]), class_names=("a", "b"))

    def test_counts_are_frozen(self):
        cm = confusion_matrix([0], [0], k=2)
        with pytest.raises(ValueError):
            cm.counts[0, 0] = 5


class TestAccuracy:
    def test_trace_over_total(self):
        cm = confusion_matrix(preds=[0, 1, 1, 0], truths=[0, 1, 0, 0], k=2)
        assert accuracy(cm) == 0.75

    def test_matches_direct_fraction(self):
        rng = np.random.default_rng(0)
        truths = rng.integers(0, 4, size=200)
        preds = rng.integers(0, 4, size=200)
        cm = confusion_matrix(preds, truths, k=4)
        assert accuracy(cm) == float((preds == truths).mean())

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            accuracy(confusion_matrix([], [], k=2))


class TestPercentRendering:
    @pytest.mark.parametrize(
        "fraction,rendered",
        [
            (0.75, "75.00"),
            (0.8651, "86.51"),
            (0.87365, "87.37"),  # exact half rounds up, not to even
            (0.87364999, "87.36"),
            (1.0, "100.00"),
            (0.0, "0.00"),
        ],
    )
    def test_half_up_two_decimals(self, fraction, rendered):
        assert percent_2dp(fraction) == rendered


class TestSubjectTable:
    def test_two_subject_average(self):
        table = subject_table([result_for(1, 1.0), result_for(2, 0.5)])
        assert table.rows == (("S1", "100.00", 1.0), ("S2", "50.00", 0.5))
        assert table.average == 0.75
        assert table.average_percent == "75.00"

    def test_single_subject(self):
        table = subject_table([result_for(4, 0.8651)])
        assert table.rows == (("S4", "86.51", 0.8651),)
        assert table.average == 0.8651

    def test_rows_sorted_and_order_invariant(self):
        results = [result_for(3, 0.9), result_for(1, 0.8), result_for(2, 0.7)]
        table = subject_table(results)
        assert [row[0] for row in table.rows] == ["S1", "S2", "S3"]
        assert subject_table(list(reversed(results))) == table

    def test_duplicate_subject_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            subject_table([result_for(1, 0.9), result_for(1, 0.8)])

    def test_empty_results_rejected(self):
        with pytest.raises(ValueError):
            subject_table([])


class TestCsvEmission:
    def test_layout_and_round_trip_precision(self, tmp_path):
        table = subject_table([result_for(1, 2.0 / 3.0), result_for(2, 0.5)])
        path = tmp_path / "table.csv"
        table_to_csv(table, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "subject,accuracy_pct,accuracy"
        assert lines[1].startswith("S1,66.67,")
        assert lines[-1].startswith("Average,")
        # full-precision column survives the text round trip
        assert float(lines[1].split(",")[2]) == 2.0 / 3.0
        assert float(lines[-1].split(",")[2]) == table.average


class TestJsonRoundTrip:
    def test_results_round_trip_exactly(self):
        rng = np.random.default_rng(1)
        results = []
        for sid in (1, 2, 3):
            truths = rng.integers(0, 4, size=50)
            preds = rng.integers(0, 4, size=50)
            cm = confusion_matrix(
                preds,
                truths,
                k=4,
                class_names=("hand_movement", "elbow_movement", "forearm_movement", "rest"),
            )
            results.append(
                SubjectResult(sid, accuracy(cm), cm, "four_class", seed=7, strategy="per_example_stratified")
            )
        text = results_to_json(results, "four_class")
        loaded, scheme = results_from_json(text)
        assert scheme == "four_class"
        assert len(loaded) == 3
        for before, after in zip(results, loaded):
            assert after.subject_id == before.subject_id
            assert after.accuracy == before.accuracy
            assert after.seed == before.seed
            assert after.strategy == before.strategy
            np.testing.assert_array_equal(after.confusion.counts, before.confusion.counts)

    def test_config_block_is_embedded(self):
        text = results_to_json([result_for(1, 0.9)], "four_class", config={"train.lr": "0.001"})
        assert '"train.lr": "0.001"' in text

    def test_emission_is_deterministic(self):
        results = [result_for(2, 0.8), result_for(1, 0.7)]
        assert results_to_json(results, "four_class") == results_to_json(
            list(reversed(results)), "four_class"
        )


class TestConfusionPgm:
    def test_heat_image_scales_to_peak(self, tmp_path):
        cm = ConfusionMatrix(
            counts=np.array([[8, 0], [4, 2]]), class_names=("a", "b")
        )
        path = tmp_path / "cm.pgm"
        confusion_to_pgm(cm, path, cell_size=2)
        blob = path.read_bytes()
        assert blob.startswith(b"P5\n4 4\n255\n")
        pixels = np.frombuffer(blob.split(b"255\n", 1)[1], dtype=np.uint8).reshape(4, 4)
        assert pixels[0, 0] == 255  # peak cell
        assert pixels[0, 2] == 0
        assert pixels[2, 0] == 128  # half the peak, rounded
        assert pixels[2, 2] == 64

    def test_all_zero_matrix_renders_black(self, tmp_path):
        cm = ConfusionMatrix(counts=np.zeros((2, 2), dtype=np.int64), class_names=("a", "b"))
        path = tmp_path / "cm.pgm"
        confusion_to_pgm(cm, path, cell_size=1)
        assert path.read_bytes().endswith(b"\x00\x00\x00\x00")
