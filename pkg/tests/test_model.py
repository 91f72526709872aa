import numpy as np
import pytest

from helpers import make_blobs
from mcpart.binary import BinaryModel, Dataset, TrainingConfig
from mcpart.coding import balanced_tree, one_vs_one
from mcpart.control import from_matrix, from_tree, parse
from mcpart.errors import DataError, MethodError
from mcpart.model import MulticlassModel, load_model_dir, save_model_dir, train_model


@pytest.fixture(scope="module")
def ovo_model():
    return train_model(from_matrix(one_vs_one(3)), make_blobs(100, seed=3))


def test_inverse_and_constrained_agree(ovo_model):
    test = make_blobs(100, seed=8)
    a = ovo_model.predict(test.X, "inverse")
    b = ovo_model.predict(test.X, "constrained")
    assert np.mean(a.labels == b.labels) >= 0.95
    np.testing.assert_allclose(a.probabilities, b.probabilities, atol=1e-8)


def test_inverse_alias(ovo_model):
    x = make_blobs(5, seed=1).X
    np.testing.assert_array_equal(ovo_model.predict(x, "1v1-inverse").probabilities, ovo_model.predict(x, "inverse").probabilities)


def test_inverse_handles_reordered_and_flipped_rows():
    data = make_blobs(60, seed=4)
    canonical = train_model(parse("a 0 / 1; b 0 / 2; c 1 / 2; {0 1 2}"), data)
    shuffled = train_model(parse("c 1 / 2; a 1 / 0; b 0 / 2; {0 1 2}"), data)
    x = make_blobs(20, seed=5).X
    np.testing.assert_allclose(
        shuffled.predict(x, "inverse").probabilities, canonical.predict(x, "inverse").probabilities, atol=1e-9
    )


def test_recursive_matches_flattened_tree(separable_blobs):
    train, test = separable_blobs
    model = train_model(from_tree(balanced_tree(range(3)), "t"), train)
    rec = model.predict(test.X, "recursive")
    lsq = model.predict(test.X, "constrained")
    np.testing.assert_array_equal(rec.labels, lsq.labels)
    np.testing.assert_array_equal(rec.labels, test.y)
    assert rec.probabilities is None and rec.winner_prob.shape == (test.n_samples,)


def test_consistent_decisions_give_one_class():
    # binaries that saturate to the true partition outcome for class 1
    spec = parse("a 0 / 1 2; b 0 1 / 2; c 0 / 1; {0 1 2}")
    signs = {"a": 1.0, "b": -1.0, "c": 1.0}
    binaries = {n: BinaryModel(np.zeros(1), 50.0 * s, name=n) for n, s in signs.items()}
    model = MulticlassModel(spec, binaries, 1)
    for method in ("vote", "unconstrained", "constrained"):
        assert model.predict_one([0.0], method)[0] == 1


def test_incompatible_methods(ovo_model):
    with pytest.raises(MethodError):
        ovo_model.predict(np.zeros((1, 2)), "recursive")
    tree = train_model(from_tree(balanced_tree(range(3)), "t"), make_blobs(30, seed=2))
    with pytest.raises(MethodError):
        tree.predict(np.zeros((1, 2)), "inverse")
    with pytest.raises(MethodError):
        tree.predict(np.zeros((1, 2)), "magic")


def test_vote_returns_labels_only(ovo_model):
    out = ovo_model.predict(make_blobs(3, seed=1).X, "vote")
    assert out.probabilities is None and out.winner_prob is None
    assert ovo_model.predict_one(np.zeros(2), "vote")[1] is None


def test_labels_are_spec_labels():
    data = make_blobs(40, seed=6)
    data = Dataset(data.X, np.array([10, 20, 30])[data.y])
    model = train_model(parse("m 0 / 1; n 1 / 2; {30 10 20}"), data)
    assert model.labels == (10, 20, 30)
    assert set(model.predict(data.X).labels) <= {10, 20, 30}


def test_missing_class_is_named():
    data = make_blobs(20, seed=1).subset(slice(0, 40))
    with pytest.raises(DataError, match="class 2"):
        train_model(from_matrix(one_vs_one(3)), data)


def test_unknown_class_in_data():
    data = make_blobs(20, means=np.eye(4) * 3, seed=1)
    with pytest.raises(DataError, match=r"\[3\]"):
        train_model(from_matrix(one_vs_one(3)), data)


def test_feature_count_checked(ovo_model):
    with pytest.raises(DataError):
        ovo_model.predict(np.zeros((1, 3)))


def test_persistence_round_trip(tmp_path, ovo_model):
    save_model_dir(ovo_model, tmp_path / "m")
    again = load_model_dir(tmp_path / "m")
    assert again.spec == ovo_model.spec and again.labels == ovo_model.labels
    x = make_blobs(10, seed=9).X
    np.testing.assert_array_equal(again.predict(x).probabilities, ovo_model.predict(x).probabilities)
    assert sorted(p.name for p in (tmp_path / "m").iterdir()) == [
        "manifest.txt",
        "model0.model",
        "model1.model",
        "model2.model",
    ]


def test_retraining_is_byte_identical(tmp_path):
    data = make_blobs(50, seed=2)
    spec = from_tree(balanced_tree(range(3)), "t")
    for d in ("a", "b"):
        save_model_dir(train_model(spec, data, TrainingConfig(seed=3)), tmp_path / d)
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_load_rejects_bad_manifest(tmp_path):
    (tmp_path / "manifest.txt").write_text("something else\n")
    with pytest.raises(DataError):
        load_model_dir(tmp_path)
    with pytest.raises(DataError):
        load_model_dir(tmp_path / "nowhere")


def test_missing_binary_rejected():
    spec = parse("a 0 / 1; {0 1}")
    with pytest.raises(DataError, match="a"):
        MulticlassModel(spec, {}, 2)


def test_calibrated_training():
    data = make_blobs(80, seed=5)
    model = train_model(from_matrix(one_vs_one(3)), data, calibrate=0.3)
    assert any(b.cal_scale != 1.0 for b in model.binaries.values())
    p = model.predict(make_blobs(20, seed=6).X).probabilities
    np.testing.assert_allclose(p.sum(axis=1), 1.0)
