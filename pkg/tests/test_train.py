import numpy as np
import pytest

from segrestore.dataset import CorruptedPair, PairArrays, Scheme, build_pairs, normalize_pairs
from segrestore.nncore import (
    CANONICAL_DIMS,
    Activation,
    DenseLayer,
    DenseNetwork,
    GradientSet,
    NumericalError,
    apply_update,
    backprop,
    forward,
    init_network,
)
from segrestore.trackgen import GenConfig, gen_dataset
from segrestore.train import (
    MODEL_MAGIC,
    ModelFormatError,
    TrainConfig,
    format_model,
    load_model,
    save_model,
    train,
    write_history,
)

from conftest import read_report


@pytest.fixture(scope="module")
def small_pairs():
    data = gen_dataset(200, GenConfig(seed=4))
    return normalize_pairs(build_pairs(data, Scheme.B))


def test_scalar_convex_descent():
    net = DenseNetwork.from_layers([DenseLayer([[0.0]], [0.0], Activation.IDENTITY)])
    pairs = [CorruptedPair(np.array([1.0]), np.array([0.5]), 0)]
    report = train(pairs, TrainConfig(learning_rate=0.01, momentum=0.0, max_epochs=5000, target_mse=1e-8), net)
    h = np.array(report.history)
    assert np.all(np.diff(h) < 0)
    assert h[-1] <= 1e-8
    assert report.epochs_run == len(h) < 5000


@pytest.mark.parametrize(
    "kwargs",
    [dict(max_epochs=0), dict(learning_rate=0), dict(momentum=1.0), dict(target_mse=-1), dict(log_every=0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_empty_pairs():
    with pytest.raises(ValueError):
        train(PairArrays(np.zeros((0, 6)), np.zeros((0, 6)), np.zeros(0, int)), TrainConfig(), init_network(CANONICAL_DIMS, 0))


def test_dimension_mismatch(small_pairs):
    with pytest.raises(ValueError):
        train(small_pairs, TrainConfig(max_epochs=1), init_network([6, 4, 5], 0))


def test_non_finite_loss_reports_location():
    net = DenseNetwork.from_layers([DenseLayer([[1.0]], [0.0], Activation.IDENTITY)])
    pairs = PairArrays(np.array([[1e200]]), np.array([[0.0]]), np.array([0]))
    with pytest.raises(NumericalError, match="epoch 1, pair index 0"):
        train(pairs, TrainConfig(max_epochs=3), net)


def test_matches_public_step_functions(small_pairs):
    cfg = TrainConfig(max_epochs=1, shuffle_seed=3)
    net = init_network(CANONICAL_DIMS, 1)
    ref = net.copy()
    report = train(small_pairs, cfg, net)

    order = np.random.default_rng(cfg.shuffle_seed).permutation(len(small_pairs))
    vel = GradientSet.zeros_like(ref)
    total = 0.0
    for k in order:
        value, grads = backprop(ref, small_pairs.inputs[k], small_pairs.targets[k])
        total += value
        apply_update(ref, grads, vel, cfg.learning_rate, cfg.momentum)
    assert np.array_equal(net.flat, ref.flat)
    assert report.history[0] == total / len(small_pairs)


def test_deterministic_and_non_mutating(small_pairs, tmp_path):
    inputs_before = small_pairs.inputs.copy()
    cfg = TrainConfig(max_epochs=5, shuffle_seed=9)
    a, b = init_network(CANONICAL_DIMS, 2), init_network(CANONICAL_DIMS, 2)
    ra, rb = train(small_pairs, cfg, a), train(small_pairs, cfg, b)
    assert ra.history == rb.history
    save_model(a, tmp_path / "a.model")
    save_model(b, tmp_path / "b.model")
    assert (tmp_path / "a.model").read_bytes() == (tmp_path / "b.model").read_bytes()
    assert np.array_equal(small_pairs.inputs, inputs_before)


def test_history_csv(small_pairs, tmp_path):
    report = train(small_pairs, TrainConfig(max_epochs=3), init_network(CANONICAL_DIMS, 0))
    assert report.epochs_run == 3 and len(report.history) == 3
    assert all(h >= 0 for h in report.history)
    write_history(report, tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "epoch,mean_mse"
    assert [int(l.split(",")[0]) for l in lines[1:]] == [1, 2, 3]
    assert float(lines[-1].split(",")[1]) == report.final_mse


class TestModelFile:
    def test_round_trip(self, tmp_path):
        net = init_network(CANONICAL_DIMS, 42)
        save_model(net, tmp_path / "m")
        back = load_model(tmp_path / "m")
        assert back == net
        rng = np.random.default_rng(0)
        for x in rng.random((100, 6)):
            assert np.max(np.abs(forward(back, x) - forward(net, x))) < 1e-15

    def test_layout(self):
        net = init_network(CANONICAL_DIMS, 0)
        lines = format_model(net).splitlines()
        assert lines[:3] == [MODEL_MAGIC, "6 12 6 12 6", "sigmoid sigmoid sigmoid sigmoid"]
        assert len(lines) == 3 + 12 + 6 + 12 + 6
        assert len(lines[3].split()) == 7
        assert lines[3].split()[-1] == "0"

    def test_identity_tag(self, tmp_path):
        net = DenseNetwork.from_layers([DenseLayer(np.eye(2), [0.5, -0.25], Activation.IDENTITY)])
        save_model(net, tmp_path / "m")
        assert (tmp_path / "m").read_text().splitlines()[2] == "identity"
        assert load_model(tmp_path / "m") == net

    def test_version_mismatch(self, tmp_path):
        (tmp_path / "m").write_text("segrestore-model v2\n2 2\nsigmoid\n1 1 0\n1 1 0\n")
        with pytest.raises(ModelFormatError, match="header") as info:
            load_model(tmp_path / "m")
        assert info.value.line == 1

    def test_truncated(self, tmp_path):
        text = format_model(init_network(CANONICAL_DIMS, 0)).splitlines()
        (tmp_path / "m").write_text("\n".join(text[:20]) + "\n")
        with pytest.raises(ModelFormatError, match="end of file") as info:
            load_model(tmp_path / "m")
        assert info.value.line == 21

    @pytest.mark.parametrize(
        "body,line",
        [
            ("2 x\nsigmoid\n", 2),
            ("2 2\nsigmoid sigmoid\n", 3),
            ("2 2\nrelu\n", 3),
            ("2 2\nsigmoid\n1 1 0\n1 1\n", 5),
            ("2 2\nsigmoid\n1 1 0\n1 one 0\n", 5),
            ("2 2\nsigmoid\n1 1 0\n1 1 0\n9 9 9\n", 6),
        ],
    )
    def test_parse_errors_name_line(self, tmp_path, body, line):
        (tmp_path / "m").write_text(MODEL_MAGIC + "\n" + body)
        with pytest.raises(ModelFormatError) as info:
            load_model(tmp_path / "m")
        assert info.value.line == line

    def test_no_temp_file_left(self, tmp_path):
        save_model(init_network([2, 2], 0), tmp_path / "m")
        assert [p.name for p in tmp_path.iterdir()] == ["m"]


@pytest.mark.slow
def test_epoch_mse_mostly_non_increasing(pipeline):
    rows = (pipeline.model_b.parent / "history.csv").read_text().splitlines()[1:]
    mse = np.array([float(r.split(",")[1]) for r in rows])
    non_increasing = np.mean(np.diff(mse) <= 0)
    assert non_increasing >= 0.9, f"only {non_increasing:.1%} of epoch transitions non-increasing"


@pytest.mark.slow
def test_scheme_b_not_worse_than_a(pipeline):
    assert float(read_report(pipeline.report_b)["std"]) <= float(read_report(pipeline.report_a)["std"])
