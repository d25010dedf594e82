import numpy as np
import pytest

from eegspect.dataset import (
    FOUR_CLASS,
    PER_EXAMPLE,
    PER_TRIAL,
    SLICE_SAMPLES,
    THREE_CLASS,
    Example,
    MergedLabel,
    build_examples,
    class_names,
    manifest_from_json,
    manifest_to_json,
    merge_classes,
    n_classes,
    parse_example_id,
    slice_trial,
    split,
    to_tensors,
)
from eegspect.filters import design_notch
from eegspect.stft import Spectrogram, StftConfig, stack3
from eegspect.trial_store import RawLabel, SynthSpec, Trial, TrialSet, synthesize_dataset

SMALL_CFG = StftConfig(win_len=64, hop=60, nfft=65)  # 33x13 at 788 samples


def dummy_stacked():
    cfg = StftConfig(win_len=2, hop=1, nfft=3)
    return stack3(Spectrogram(values=np.zeros((2, 2)), cfg=cfg))


def fake_examples(counts: dict[MergedLabel, int]):
    stacked = dummy_stacked()
    out = []
    serial = 0
    for label, n in counts.items():
        for _ in range(n):
            out.append(
                Example(
                    stacked=stacked,
                    label=label,
                    subject_id=1,
                    run_index=serial // 5000,
                    trial_index=(serial % 5000) // 70,
                    channel_index=serial % 70,
                )
            )
            serial += 1
    return out


class TestMergeClasses:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            (RawLabel.HAND_OPEN, MergedLabel.HAND_MOVEMENT),
            (RawLabel.HAND_CLOSE, MergedLabel.HAND_MOVEMENT),
            (RawLabel.ELBOW_FLEXION, MergedLabel.ELBOW_MOVEMENT),
            (RawLabel.ELBOW_EXTENSION, MergedLabel.ELBOW_MOVEMENT),
            (RawLabel.FOREARM_SUPINATION, MergedLabel.FOREARM_MOVEMENT),
            (RawLabel.FOREARM_PRONATION, MergedLabel.FOREARM_MOVEMENT),
            (RawLabel.REST, MergedLabel.REST),
        ],
    )
    def test_four_class_mapping(self, raw, expected):
        assert merge_classes(raw, FOUR_CLASS) is expected

    def test_three_class_drops_rest_only(self):
        assert merge_classes(RawLabel.REST, THREE_CLASS) is None
        for raw in RawLabel:
            if raw is RawLabel.REST:
                continue
            assert merge_classes(raw, THREE_CLASS) is merge_classes(raw, FOUR_CLASS)

    def test_surjective_onto_four_classes(self):
        image = {merge_classes(raw, FOUR_CLASS) for raw in RawLabel}
        assert image == set(MergedLabel)

    def test_scheme_vocabulary(self):
        assert class_names(FOUR_CLASS) == (
            "hand_movement",
            "elbow_movement",
            "forearm_movement",
            "rest",
        )
        assert n_classes(THREE_CLASS) == 3
        with pytest.raises(ValueError):
            class_names("five_class")


class TestSliceTrial:
    def _trial(self, n_samples):
        return Trial(1, 0, 0, RawLabel.REST, np.arange(2.0 * n_samples).reshape(2, -1), 512.0)

    def test_truncates_to_first_samples(self):
        sliced = slice_trial(self._trial(2048))
        assert sliced.samples.shape == (2, SLICE_SAMPLES)
        np.testing.assert_array_equal(sliced.samples[0], np.arange(788.0))

    def test_exact_length_passes_through(self):
        t = self._trial(SLICE_SAMPLES)
        assert slice_trial(t) is t

    def test_short_trial_error_names_trial_and_length(self):
        with pytest.raises(ValueError, match=r"s1r0t0.*500"):
            slice_trial(self._trial(500))


class TestBuildExamples:
    def _small_set(self):
        return synthesize_dataset(
            SynthSpec(
                n_runs=1,
                trials_per_class_per_run=1,
                n_channels=1,
                n_samples=SLICE_SAMPLES,
                noise_sigma=0.0,
                seed=1,
            )
        )

    def test_tiny_four_class_counts(self):
        examples = build_examples(self._small_set(), [], SMALL_CFG, FOUR_CLASS)
        counts = {}
        for ex in examples:
            counts[ex.label] = counts.get(ex.label, 0) + 1
        assert counts == {
            MergedLabel.HAND_MOVEMENT: 2,
            MergedLabel.ELBOW_MOVEMENT: 2,
            MergedLabel.FOREARM_MOVEMENT: 2,
            MergedLabel.REST: 1,
        }

    def test_three_class_drops_rest_examples(self):
        examples = build_examples(self._small_set(), [], SMALL_CFG, THREE_CLASS)
        assert len(examples) == 6
        assert all(ex.label is not MergedLabel.REST for ex in examples)

    def test_count_formula(self):
        spec = SynthSpec(n_runs=2, trials_per_class_per_run=1, n_channels=3, n_samples=SLICE_SAMPLES, noise_sigma=0.0)
        trial_set = synthesize_dataset(spec)
        four = build_examples(trial_set, [], SMALL_CFG, FOUR_CLASS)
        three = build_examples(trial_set, [], SMALL_CFG, THREE_CLASS)
        n_trials = len(trial_set.trials)
        n_rest = sum(1 for t in trial_set.trials if t.raw_label is RawLabel.REST)
        assert len(four) == n_trials * 3
        assert len(three) == (n_trials - n_rest) * 3

    def test_canonical_ordering(self):
        examples = build_examples(self._small_set(), [], SMALL_CFG, FOUR_CLASS)
        keys = [(e.subject_id, e.run_index, e.trial_index, e.channel_index) for e in examples]
        assert keys == sorted(keys)

    def test_filter_chain_changes_values(self):
        trial_set = self._small_set()
        notch = design_notch(50.0, 512.0, 35.0)
        plain = build_examples(trial_set, [], SMALL_CFG, FOUR_CLASS)
        filtered = build_examples(trial_set, [notch], SMALL_CFG, FOUR_CLASS)
        assert plain[0].example_id == filtered[0].example_id
        assert not np.array_equal(plain[0].stacked.values, filtered[0].stacked.values)

    def test_short_trials_propagate_slice_error(self):
        with pytest.raises(ValueError, match="need at least 789"):
            build_examples(self._small_set(), [], SMALL_CFG, FOUR_CLASS, slice_len=789)

    def test_no_surviving_examples_rejected(self):
        rest_only = TrialSet(
            trials=(
                Trial(1, 0, 0, RawLabel.REST, np.zeros((1, SLICE_SAMPLES)), 512.0),
            ),
            channel_names=("C1",),
            fs=512.0,
        )
        with pytest.raises(ValueError):
            build_examples(rest_only, [], SMALL_CFG, THREE_CLASS)


class TestSplit:
    def test_paper_counts(self):
        examples = fake_examples(
            {
                MergedLabel.HAND_MOVEMENT: 7320,
                MergedLabel.ELBOW_MOVEMENT: 7320,
                MergedLabel.FOREARM_MOVEMENT: 7320,
                MergedLabel.REST: 3660,
            }
        )
        manifest = split(examples, seed=0)
        assert (len(manifest.train), len(manifest.val), len(manifest.test)) == (
            17934,
            2562,
            5124,
        )

    def test_partition_property(self):
        examples = fake_examples({MergedLabel.HAND_MOVEMENT: 23, MergedLabel.REST: 17})
        manifest = split(examples, seed=3)
        train, val, test = set(manifest.train), set(manifest.val), set(manifest.test)
        assert not (train & val or train & test or val & test)
        assert train | val | test == {ex.example_id for ex in examples}

    @pytest.mark.parametrize(
        "n,expected",
        [
            (13, (10, 1, 2)),  # floors 9/1/2, one leftover -> train
            (15, (11, 1, 3)),  # floors 10/1/3, one leftover -> train
            (19, (14, 1, 4)),  # floors 13/1/3, leftovers -> train then test
            (20, (14, 2, 4)),  # exact
        ],
    )
    def test_leftover_rule_single_class(self, n, expected):
        manifest = split(fake_examples({MergedLabel.REST: n}), seed=0)
        assert (len(manifest.train), len(manifest.val), len(manifest.test)) == expected

    def test_deterministic(self):
        examples = fake_examples({MergedLabel.HAND_MOVEMENT: 40, MergedLabel.REST: 20})
        assert split(examples, seed=9) == split(examples, seed=9)

    def test_seed_changes_assignment(self):
        examples = fake_examples({MergedLabel.HAND_MOVEMENT: 40, MergedLabel.REST: 20})
        assert split(examples, seed=0) != split(examples, seed=1)

    def test_reorder_invariance(self):
        examples = fake_examples({MergedLabel.HAND_MOVEMENT: 25, MergedLabel.REST: 15})
        shuffled = list(examples)
        np.random.default_rng(4).shuffle(shuffled)
        assert split(examples, seed=7) == split(shuffled, seed=7)

    def test_stratified_per_class(self):
        examples = fake_examples({MergedLabel.HAND_MOVEMENT: 40, MergedLabel.REST: 20})
        manifest = split(examples, seed=2)
        by_id = {ex.example_id: ex.label for ex in examples}
        for part, frac in (("train", 0.7), ("val", 0.1), ("test", 0.2)):
            ids = getattr(manifest, part)
            hands = sum(1 for i in ids if by_id[i] is MergedLabel.HAND_MOVEMENT)
            assert hands == int(round(40 * frac))

    def test_too_few_examples_rejected(self):
        with pytest.raises(ValueError, match="need >= 10"):
            split(fake_examples({MergedLabel.REST: 9}))

    def test_grouped_strategy_keeps_trials_whole(self):
        stacked = dummy_stacked()
        examples = []
        for trial in range(48):
            label = MergedLabel(trial % 4)
            for channel in range(5):
                examples.append(
                    Example(stacked, label, 1, trial // 6, trial % 6, channel)
                )
        manifest = split(examples, seed=0, strategy=PER_TRIAL)
        owner = {}
        for part in ("train", "val", "test"):
            for ex_id in getattr(manifest, part):
                key = parse_example_id(ex_id)[:3]
                assert owner.setdefault(key, part) == part
        assert len(owner) == 48

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError, match="strategy"):
            split(fake_examples({MergedLabel.REST: 12}), strategy="leave_one_out")


class TestManifestJson:
    def test_round_trip(self):
        examples = fake_examples({MergedLabel.HAND_MOVEMENT: 12, MergedLabel.REST: 11})
        manifest = split(examples, seed=42, strategy=PER_EXAMPLE)
        again = manifest_from_json(manifest_to_json(manifest))
        assert again == manifest

    def test_example_id_round_trip(self):
        ex = Example(dummy_stacked(), MergedLabel.REST, 3, 1, 4, 59)
        assert ex.example_id == "s3r1t4c59"
        assert parse_example_id(ex.example_id) == (3, 1, 4, 59)

    def test_bad_id_rejected(self):
        with pytest.raises(ValueError):
            parse_example_id("subject3run1")


class TestToTensors:
    def test_shapes_and_labels(self):
        trial_set = synthesize_dataset(
            SynthSpec(
                n_runs=1,
                trials_per_class_per_run=1,
                n_channels=1,
                n_samples=SLICE_SAMPLES,
                noise_sigma=0.0,
            )
        )
        examples = build_examples(trial_set, [], SMALL_CFG, FOUR_CLASS)
        x, y = to_tensors(examples)
        assert x.shape == (7, 3, 33, 13)
        assert x.dtype == np.float64
        assert y.dtype == np.int64
        assert sorted(y.tolist()) == [0, 0, 1, 1, 2, 2, 3]

    def test_id_selection_preserves_order(self):
        trial_set = synthesize_dataset(
            SynthSpec(
                n_runs=1,
                trials_per_class_per_run=1,
                n_channels=2,
                n_samples=SLICE_SAMPLES,
                noise_sigma=0.0,
            )
        )
        examples = build_examples(trial_set, [], SMALL_CFG, FOUR_CLASS)
        ids = [examples[3].example_id, examples[0].example_id]
        x, y = to_tensors(examples, ids)
        np.testing.assert_array_equal(x[0], examples[3].stacked.as_tensor())
        np.testing.assert_array_equal(x[1], examples[0].stacked.as_tensor())
        assert y[0] == int(examples[3].label)
