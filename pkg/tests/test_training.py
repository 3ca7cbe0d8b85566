import numpy as np
import pytest

from skelmotion.data import MotionSequence, make_split
from skelmotion.errors import DataError, TrainAbort
from skelmotion.models import CRnnConfig, CRnnModel, MergeConfig, SkelNetConfig, SkelNetModel
from skelmotion.numerics import OptimizerConfig, ParamStore, Tensor, grad_check
from skelmotion.skeleton import Group, PartitionScheme
from skelmotion.synthetic import SyntheticSpec, default_skeleton, generate_synthetic
from skelmotion.training import (
    ConvergingLossConfig,
    TrainConfig,
    add_gaussian_noise,
    converging_loss,
    read_train_log,
    sampling_loss,
    sequence_l2,
    train_skel_tnet,
    train_stage,
    smoke_pipeline_plan,
    smoke_model_config,
    smoke_train_config,
)
from skelmotion.skeleton import scheme_from_spec

from oracles import scalar_sequence_l2


def tensors(rng, n, batch=1, width=4):
    return [Tensor(rng.normal(size=(batch, width))) for _ in range(n)]


class TestSequenceL2:
    def test_identical_is_zero(self):
        rng = np.random.default_rng(0)
        seq = tensors(rng, 5)
        assert sequence_l2(seq, seq).item() == 0.0

    def test_single_frame_hand_case(self):
        pred = [Tensor([[3.0, 4.0]])]
        truth = [Tensor([[0.0, 0.0]])]
        assert sequence_l2(pred, truth).item() == 25.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        pred = tensors(rng, 7)
        truth = tensors(rng, 7)
        ours = sequence_l2(pred, truth).item()
        ref = scalar_sequence_l2([p.data for p in pred], [t.data for t in truth])
        assert ours == pytest.approx(ref, rel=1e-12)

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(2)
        with pytest.raises(Exception):
            sequence_l2(tensors(rng, 3), tensors(rng, 4))


def zero_residual_model(width=4):
    scheme = PartitionScheme("whole", (Group("whole", tuple(range(width))),))
    cfg = SkelNetConfig(scheme=scheme, branch_dims=(3,), dropout_rate=0.0)
    model = SkelNetModel.initialize(cfg, seed=0)
    for name, entry in model.store.entries():
        model.store.set_value(name, np.zeros(entry.value.shape))
    return model


class TestSamplingLoss:
    def test_zero_weight_residual_on_constant_truth(self):
        model = zero_residual_model()
        seed_frame = Tensor(np.full((1, 4), 0.7))
        truth = [seed_frame for _ in range(6)]
        assert sampling_loss(model, [seed_frame], truth, horizon=6).item() == 0.0

    def test_horizon_one_equals_positive_phase(self):
        cfg = CRnnConfig(width=4, gru_units=3, head_dims=(3, 4), dropout_rate=0.0)
        model = CRnnModel.initialize(cfg, seed=1)
        rng = np.random.default_rng(3)
        seeds = tensors(rng, 2)
        truth = tensors(rng, 1)
        samp = sampling_loss(model, seeds, truth, horizon=1).item()
        total, l_pos, l_neg = converging_loss(model, seeds, truth, horizon=1)
        assert samp == pytest.approx(l_pos.item(), rel=1e-15)
        assert samp == pytest.approx(l_neg.item(), rel=1e-15)


class TestConvergingLoss:
    def test_weighting_arithmetic(self):
        # alpha=1, beta=0.1, L_pos=2, L_neg=5 -> 2.5, checked through a stub
        class Stub:
            def paired_runs(self, seeds, inputs, horizon, training=False, seed=()):
                pos = [Tensor([[2.0 ** 0.5, 0.0]]) for _ in range(1)]
                neg = [Tensor([[5.0 ** 0.5, 0.0]]) for _ in range(1)]
                return pos, neg

        truth = [Tensor([[0.0, 0.0]])]
        total, l_pos, l_neg = converging_loss(
            Stub(), [truth[0]], truth, 1, ConvergingLossConfig(1.0, 0.1)
        )
        assert l_pos.item() == pytest.approx(2.0, rel=1e-15)
        assert l_neg.item() == pytest.approx(5.0, rel=1e-15)
        assert total.item() == pytest.approx(2.5, rel=1e-15)

    def test_beta_zero_reduces_to_positive_phase(self):
        cfg = CRnnConfig(width=4, gru_units=3, head_dims=(3, 4), dropout_rate=0.0)
        model = CRnnModel.initialize(cfg, seed=2)
        rng = np.random.default_rng(4)
        seeds, truth = tensors(rng, 2), tensors(rng, 4)
        total, l_pos, _ = converging_loss(
            model, seeds, truth, 4, ConvergingLossConfig(alpha=1.0, beta=0.0)
        )
        assert total.item() == l_pos.item()

    def test_perfect_model_gives_zeros(self):
        model = zero_residual_model()
        seed_frame = Tensor(np.full((1, 4), -0.3))
        truth = [seed_frame for _ in range(5)]
        total, l_pos, l_neg = converging_loss(model, [seed_frame], truth, 5)
        assert (total.item(), l_pos.item(), l_neg.item()) == (0.0, 0.0, 0.0)

    def test_linearity_over_random_weights(self):
        # total = alpha*L_pos + beta*L_neg to ~1 ulp, 100 random draws
        rng = np.random.default_rng(5)
        for _ in range(100):
            cfg = CRnnConfig(width=3, gru_units=2, head_dims=(2, 3), dropout_rate=0.0)
            model = CRnnModel.initialize(cfg, seed=int(rng.integers(1000)))
            seeds, truth = tensors(rng, 1, width=3), tensors(rng, 3, width=3)
            alpha, beta = float(rng.uniform(0, 3)), float(rng.uniform(0, 3))
            total, l_pos, l_neg = converging_loss(
                model, seeds, truth, 3, ConvergingLossConfig(alpha, beta)
            )
            expected = alpha * l_pos.item() + beta * l_neg.item()
            assert total.item() == pytest.approx(expected, rel=1e-12)

    def test_phase_independence(self):
        # L_pos recomputed around an L_neg evaluation is bit-identical
        cfg = CRnnConfig(width=4, gru_units=3, head_dims=(3, 4), dropout_rate=0.0)
        model = CRnnModel.initialize(cfg, seed=6)
        rng = np.random.default_rng(7)
        seeds, truth = tensors(rng, 2), tensors(rng, 4)

        def l_pos():
            outs = model.teacher_run(seeds, truth[:3], horizon=4)
            return sequence_l2(outs, truth).item()

        first = l_pos()
        model.free_run(seeds, horizon=4)  # interleaved negative-phase rollout
        assert l_pos() == first

    def test_gradients_of_both_losses_against_finite_differences(self):
        # 4-unit GRU, 6-dim frames, horizon 3, tolerance 1e-4
        cfg = CRnnConfig(width=6, gru_units=4, head_dims=(4, 6), dropout_rate=0.0)
        model = CRnnModel.initialize(cfg, seed=8)
        rng = np.random.default_rng(9)
        seeds, truth = tensors(rng, 2, width=6), tensors(rng, 3, width=6)

        report = grad_check(
            lambda: sampling_loss(model, seeds, truth, 3), model.store, tolerance=1e-4
        )
        assert report.passed, str(report)

        report = grad_check(
            lambda: converging_loss(model, seeds, truth, 3)[0], model.store,
            tolerance=1e-4,
        )
        assert report.passed, str(report)


class TestNoise:
    def test_variance_zero_is_identity(self):
        x = np.ones((5, 3))
        assert add_gaussian_noise(x, 0.0, seed=1) is x

    def test_empirical_variance(self):
        x = np.zeros(100_000)
        noisy = add_gaussian_noise(x, 0.5, seed=2)
        assert 0.48 <= noisy.var() <= 0.52

    def test_seeded_twice_identical(self):
        x = np.zeros((10, 10))
        a = add_gaussian_noise(x, 0.3, seed=(1, 2))
        b = add_gaussian_noise(x, 0.3, seed=(1, 2))
        assert np.array_equal(a, b)

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            add_gaussian_noise(np.zeros(3), -0.1, seed=0)


@pytest.fixture(scope="module")
def split():
    return generate_synthetic(SyntheticSpec(count=8, length=60, seed=0), default_skeleton())


@pytest.fixture(scope="module")
def skeleton():
    return default_skeleton()


class TestTrainStage:
    def test_zero_iterations_returns_initialization(self, split, skeleton):
        scheme = scheme_from_spec(skeleton, "five_part", split.stats.retained)
        cfg = smoke_model_config("skelnet", scheme=scheme)
        tc = smoke_train_config("skelnet", horizon=5, iterations=0)
        model, log = train_stage("skelnet", split, cfg, tc)
        fresh = SkelNetModel.initialize(cfg, (tc.seed, 10))
        for name in model.store.names():
            assert np.array_equal(model.store[name].data, fresh.store[name].data)
        assert log.records == []

    def test_training_reduces_loss(self, split, skeleton):
        # threshold recorded from the run itself: mean of the last 10 losses
        # must fall below the iteration-0 loss
        scheme = scheme_from_spec(skeleton, "five_part", split.stats.retained)
        cfg = smoke_model_config("skelnet", scheme=scheme)
        tc = smoke_train_config("skelnet", horizon=5, iterations=60, seed=1)
        _, log = train_stage("skelnet", split, cfg, tc)
        first = log.records[0].loss
        tail = np.mean([r.loss for r in log.records[-10:]])
        assert tail < first

    def test_identical_seeds_give_bit_identical_checkpoints(self, split, skeleton, tmp_path):
        scheme = scheme_from_spec(skeleton, "five_part", split.stats.retained)
        for sub in ("a", "b"):
            cfg = smoke_model_config("skelnet", scheme=scheme)
            tc = smoke_train_config("skelnet", horizon=4, iterations=8, seed=3)
            train_stage("skelnet", split, cfg, tc, out_dir=tmp_path / sub)
        assert (tmp_path / "a" / "skelnet.ckpt").read_bytes() == (
            tmp_path / "b" / "skelnet.ckpt"
        ).read_bytes()
        assert (tmp_path / "a" / "skelnet.log").read_bytes() == (
            tmp_path / "b" / "skelnet.log"
        ).read_bytes()

    def test_converging_log_carries_both_phases(self, split, skeleton, tmp_path):
        width = split.stats.retained_width
        cfg = smoke_model_config("crnn", width=width)
        tc = smoke_train_config("crnn", horizon=4, iterations=3)
        _, log = train_stage("crnn", split, cfg, tc, out_dir=tmp_path)
        for r in log.records:
            assert r.l_pos is not None and r.l_neg is not None
            assert r.loss == pytest.approx(r.l_pos + 0.1 * r.l_neg, rel=1e-12)
        back = read_train_log(tmp_path / "crnn.log")
        assert [r.loss for r in back.records] == [r.loss for r in log.records]

    def test_numeric_fault_aborts_with_iteration(self, split, skeleton):
        scheme = scheme_from_spec(skeleton, "five_part", split.stats.retained)
        cfg = smoke_model_config("skelnet", scheme=scheme)
        # absurd learning rate, no clipping: guaranteed blow-up
        tc = TrainConfig(horizon=8, iterations=60, seed=0, loss="sampling",
                         optimizer=OptimizerConfig("sgd", 50.0), clip_norm=0.0)
        with pytest.raises(TrainAbort) as err:
            train_stage("skelnet", split, cfg, tc)
        assert err.value.iteration >= 0

    def test_merge_stage_requires_stage1(self, split):
        cfg = MergeConfig(width=split.stats.retained_width, hidden_dims=(8, 33))
        tc = smoke_train_config("merge", horizon=4, iterations=1)
        with pytest.raises(DataError):
            train_stage("merge", split, cfg, tc)


@pytest.fixture(scope="module")
def trained(split, skeleton, tmp_path_factory):
    out = tmp_path_factory.mktemp("pipeline")
    scheme = scheme_from_spec(skeleton, "five_part", split.stats.retained)
    plan = smoke_pipeline_plan(scheme, split.stats.retained_width, horizon=5,
                               seed=0, iterations=5)
    models, logs = train_skel_tnet(split, plan, out_dir=out)
    return models, logs, out


class TestSkelTNet:

    def test_emits_three_checkpoints(self, trained):
        _, _, out = trained
        for kind in ("skelnet", "crnn", "merge"):
            assert (out / f"{kind}.ckpt").exists()
            assert (out / f"{kind}.log").exists()

    def test_stage2_never_mutates_stage1(self, split, skeleton, tmp_path):
        from skelmotion.numerics import checkpoint_checksum, save_checkpoint
        from skelmotion.training.loop import StagePlan, SkelTNetPlan

        scheme = scheme_from_spec(skeleton, "five_part", split.stats.retained)
        plan = smoke_pipeline_plan(scheme, split.stats.retained_width, horizon=4,
                                   seed=1, iterations=4)
        skel_model, _ = train_stage("skelnet", split, plan.skelnet.model_config,
                                    plan.skelnet.train)
        crnn_model, _ = train_stage("crnn", split, plan.crnn.model_config,
                                    plan.crnn.train)
        p1, p2 = tmp_path / "skel_before.ckpt", tmp_path / "crnn_before.ckpt"
        save_checkpoint(skel_model.store, p1)
        save_checkpoint(crnn_model.store, p2)
        before = (checkpoint_checksum(p1), checkpoint_checksum(p2))
        train_stage("merge", split, plan.merge.model_config, plan.merge.train,
                    stage1=(skel_model, crnn_model))
        save_checkpoint(skel_model.store, p1)
        save_checkpoint(crnn_model.store, p2)
        assert (checkpoint_checksum(p1), checkpoint_checksum(p2)) == before

    def test_passthrough_wiring_reproduces_stage1(self, trained, split, skeleton):
        from skelmotion.evaluation import ModelPipeline, SkelTNetPipeline
        from skelmotion.models import MergeModel

        (skel, crnn, _), _, _ = trained
        rng = np.random.default_rng(0)
        seeds = rng.normal(size=(1, split.stats.retained_width))
        for mode, reference in (("passthrough_skel", skel), ("passthrough_crnn", crnn)):
            merge = MergeModel.initialize(
                MergeConfig(width=split.stats.retained_width, mode=mode), seed=0
            )
            pipe = SkelTNetPipeline(skel, crnn, merge)
            direct = ModelPipeline(reference)
            assert pipe.predict(seeds, 5).tobytes() == direct.predict(seeds, 5).tobytes()

    def test_average_wiring_is_framewise_mean(self, trained, split):
        from skelmotion.evaluation import ModelPipeline, SkelTNetPipeline
        from skelmotion.models import MergeModel

        (skel, crnn, _), _, _ = trained
        rng = np.random.default_rng(1)
        seeds = rng.normal(size=(1, split.stats.retained_width))
        merge = MergeModel.initialize(
            MergeConfig(width=split.stats.retained_width, mode="average"), seed=0
        )
        pipe = SkelTNetPipeline(skel, crnn, merge)
        a = ModelPipeline(skel).predict(seeds, 5)
        b = ModelPipeline(crnn).predict(seeds, 5)
        assert np.array_equal(pipe.predict(seeds, 5), 0.5 * (a + b))
