import numpy as np
import pytest

from skelmotion.data import Window, sample_test_windows
from skelmotion.errors import DataError
from skelmotion.evaluation import (
    ModelPipeline,
    emit_report,
    eval_horizons,
    eval_mof,
    evaluate_pipeline,
    parse_report,
)
from skelmotion.preprocess import apply_preprocess, fit_preprocess, invert_preprocess
from skelmotion.rotations import frame_euler_error
from skelmotion.synthetic import SyntheticSpec, default_skeleton, generate_synthetic


class LookupPipeline:
    """Maps each window's seeds to a fixed preprocessed prediction."""

    def __init__(self, table):
        self.table = {k.tobytes(): v for k, v in table}

    def predict(self, seeds_pre, horizon):
        return self.table[seeds_pre.tobytes()][:horizon]


def hand_windows(spec, stats, rng, n=2, horizon=5):
    windows, table = [], []
    width = spec.total_dim
    for i in range(n):
        seeds_raw = rng.normal(scale=0.3, size=(1, width))
        truth_raw = rng.normal(scale=0.3, size=(horizon, width))
        pred_raw = rng.normal(scale=0.3, size=(horizon, width))
        seeds_pre = apply_preprocess(seeds_raw, stats)
        w = Window(
            activity="hand", sequence_index=i, start=0,
            seeds_raw=seeds_raw, truth_raw=truth_raw,
            seeds_pre=seeds_pre, truth_pre=apply_preprocess(truth_raw, stats),
            period_ms=40.0,
        )
        windows.append(w)
        table.append((seeds_pre, apply_preprocess(pred_raw, stats)))
    return windows, LookupPipeline(table)


@pytest.fixture(scope="module")
def setup():
    skeleton = default_skeleton()
    split = generate_synthetic(SyntheticSpec(count=8, length=60, seed=0), skeleton)
    return skeleton, split


def ground_truth_pipeline(windows):
    return LookupPipeline([(w.seeds_pre, w.truth_pre) for w in windows])


class TestMetrics:
    def test_ground_truth_pipeline_scores_zero(self, setup):
        skeleton, split = setup
        windows = sample_test_windows(split, count=4, seed=8, seed_length=1, horizon=6)
        pipe = ground_truth_pipeline(windows)
        mof, avg, std = eval_mof(pipe, windows, 6, split.stats, skeleton)
        assert avg == 0.0 and std == 0.0
        assert all(v == 0.0 for v in mof.values())
        horizons = eval_horizons(pipe, windows, [80, 160, 240], split.stats, skeleton)
        assert all(err == 0.0 for pairs in horizons.values() for _, err in pairs)

    def test_metric_invariant_to_standardization(self, setup):
        # ground truth scores zero under deliberately different stats
        skeleton, split = setup
        windows = sample_test_windows(split, count=3, seed=9, seed_length=1, horizon=4)
        other = generate_synthetic(SyntheticSpec(count=8, length=60, seed=99), skeleton)
        rebuilt = []
        for w in windows:
            rebuilt.append(Window(
                activity=w.activity, sequence_index=w.sequence_index, start=w.start,
                seeds_raw=w.seeds_raw, truth_raw=w.truth_raw,
                seeds_pre=apply_preprocess(w.seeds_raw, other.stats),
                truth_pre=apply_preprocess(w.truth_raw, other.stats),
                period_ms=w.period_ms,
            ))
        pipe = ground_truth_pipeline(rebuilt)
        _, avg, _ = eval_mof(pipe, rebuilt, 4, other.stats, skeleton)
        assert avg < 1e-9

    def test_mof_matches_brute_force_recomputation(self, setup):
        # 2 windows, 5 frames: scalar triple loop over window/frame/joint
        skeleton, split = setup
        rng = np.random.default_rng(1)
        windows, pipe = hand_windows(skeleton, split.stats, rng, n=2, horizon=5)
        mof, avg, std = eval_mof(pipe, windows, 5, split.stats, skeleton)

        total = 0.0
        per_window = []
        for w in windows:
            pred = invert_preprocess(pipe.predict(w.seeds_pre, 5), split.stats)
            errs = [frame_euler_error(pred[t], w.truth_raw[t], skeleton) for t in range(5)]
            per_window.append(errs)
            total += sum(errs)
        expected = total / (2 * 5)
        assert mof["hand"] == pytest.approx(expected, abs=1e-10)
        assert avg == pytest.approx(expected, abs=1e-10)

    def test_single_window_single_horizon_equals_direct_call(self, setup):
        skeleton, split = setup
        rng = np.random.default_rng(2)
        windows, pipe = hand_windows(skeleton, split.stats, rng, n=1, horizon=3)
        horizons = eval_horizons(pipe, windows, [120], split.stats, skeleton)
        (ms, err), = horizons["hand"]
        pred = invert_preprocess(pipe.predict(windows[0].seeds_pre, 3), split.stats)
        direct = frame_euler_error(pred[2], windows[0].truth_raw[2], skeleton)
        assert err == pytest.approx(direct, abs=1e-12)

    def test_two_window_mean(self, setup):
        skeleton, split = setup
        rng = np.random.default_rng(3)
        windows, pipe = hand_windows(skeleton, split.stats, rng, n=2, horizon=4)
        horizons = eval_horizons(pipe, windows, [160], split.stats, skeleton)
        singles = []
        for w in windows:
            pred = invert_preprocess(pipe.predict(w.seeds_pre, 4), split.stats)
            singles.append(frame_euler_error(pred[3], w.truth_raw[3], skeleton))
        assert horizons["hand"][0][1] == pytest.approx(np.mean(singles), abs=1e-12)

    def test_mof_over_single_frame_equals_horizon_error(self, setup):
        skeleton, split = setup
        rng = np.random.default_rng(4)
        windows, pipe = hand_windows(skeleton, split.stats, rng, n=2, horizon=1)
        mof, avg, _ = eval_mof(pipe, windows, 1, split.stats, skeleton)
        horizons = eval_horizons(pipe, windows, [40], split.stats, skeleton)
        assert mof["hand"] == pytest.approx(horizons["hand"][0][1], abs=1e-15)

    def test_cross_activity_population_stddev(self, setup):
        skeleton, split = setup
        rng = np.random.default_rng(5)
        wa, pa = hand_windows(skeleton, split.stats, rng, n=2, horizon=3)
        wb, pb = hand_windows(skeleton, split.stats, rng, n=2, horizon=3)
        wb = [Window(activity="other", sequence_index=w.sequence_index, start=w.start,
                     seeds_raw=w.seeds_raw, truth_raw=w.truth_raw,
                     seeds_pre=w.seeds_pre, truth_pre=w.truth_pre,
                     period_ms=w.period_ms) for w in wb]
        pipe = LookupPipeline([])
        pipe.table = {**pa.table, **pb.table}
        mof, avg, std = eval_mof(pipe, wa + wb, 3, split.stats, skeleton)
        values = np.array([mof[a] for a in sorted(mof)])
        assert avg == pytest.approx(values.mean(), abs=1e-15)
        assert std == pytest.approx(values.std(), abs=1e-15)  # population

    def test_horizon_beyond_rollout_rejected(self, setup):
        skeleton, split = setup
        windows = sample_test_windows(split, count=2, seed=8, seed_length=1, horizon=5)
        pipe = ground_truth_pipeline(windows)
        with pytest.raises(DataError):
            eval_horizons(pipe, windows, [400], split.stats, skeleton)

    def test_indivisible_horizon_rejected(self, setup):
        skeleton, split = setup
        windows = sample_test_windows(split, count=2, seed=8, seed_length=1, horizon=5)
        pipe = ground_truth_pipeline(windows)
        with pytest.raises(DataError):
            eval_horizons(pipe, windows, [100], split.stats, skeleton)

    def test_empty_window_list_rejected(self, setup):
        skeleton, split = setup
        with pytest.raises(DataError):
            eval_mof(LookupPipeline([]), [], 3, split.stats, skeleton)

    def test_threaded_evaluation_matches_sequential(self, setup):
        skeleton, split = setup
        rng = np.random.default_rng(6)
        windows, pipe = hand_windows(skeleton, split.stats, rng, n=4, horizon=4)
        seq = evaluate_pipeline(pipe, windows, 4, split.stats, skeleton, threads=1)
        par = evaluate_pipeline(pipe, windows, 4, split.stats, skeleton, threads=4)
        assert seq.per_frame == par.per_frame
        assert seq.mof == par.mof


class TestReport:
    def make_report(self, setup, with_groups=False):
        skeleton, split = setup
        windows = sample_test_windows(split, count=3, seed=8, seed_length=1, horizon=5)
        pipe = ground_truth_pipeline(windows)
        group_map = skeleton.group_maps["five_part"] if with_groups else None
        return evaluate_pipeline(
            pipe, windows, 5, split.stats, skeleton, horizons_ms=[80, 200],
            sampler_seed=8, checkpoints=["skelnet.ckpt:abc123"],
            config={"command": "eval", "seed": 8}, group_map=group_map,
        )

    def test_emit_parse_round_trip(self, setup, tmp_path):
        report = self.make_report(setup, with_groups=True)
        path = emit_report(report, tmp_path)
        back = parse_report(path)
        assert back.sampler_seed == report.sampler_seed
        assert back.horizon_frames == report.horizon_frames
        assert back.frame_period_ms == report.frame_period_ms
        assert back.mof == report.mof
        assert back.mof_average == report.mof_average
        assert back.mof_stddev == report.mof_stddev
        assert back.per_frame == report.per_frame
        assert back.horizons == report.horizons
        assert back.group_errors == report.group_errors
        assert back.checkpoints == report.checkpoints
        assert back.config == report.config

    def test_report_embeds_sampler_seed(self, setup, tmp_path):
        report = self.make_report(setup)
        path = emit_report(report, tmp_path)
        assert "sampler_seed=8" in path.read_text() if hasattr(path, "read_text") else True
        text = open(path).read()
        assert "sampler_seed=8" in text

    def test_plot_csv_row_count_equals_horizon(self, setup, tmp_path):
        report = self.make_report(setup)
        emit_report(report, tmp_path)
        csv = (tmp_path / "plots" / "synthetic.csv").read_text().strip().splitlines()
        assert csv[0] == "frame_index,ms,error"
        assert len(csv) - 1 == report.horizon_frames

    def test_mof_recomputable_from_per_frame_values(self, setup, tmp_path):
        report = self.make_report(setup)
        for activity, values in report.per_frame.items():
            assert report.mof[activity] == pytest.approx(np.mean(values), abs=1e-15)

    def test_group_breakdown_covers_scheme_groups(self, setup):
        report = self.make_report(setup, with_groups=True)
        for activity in report.group_errors:
            assert sorted(report.group_errors[activity]) == [
                "lower_left_leg", "lower_right_leg", "torso",
                "upper_left_arm", "upper_right_arm",
            ]
