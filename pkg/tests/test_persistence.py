import numpy as np
import pytest

from conftest import random_instance
from simgood.classifier import Landmarks, SimilarityEvaluator, train_l1_classifier
from simgood.exceptions import FormatError, VersionError
from simgood.kpca import kpca_fit, kpca_project
from simgood.persistence import dumps_model, load_model, loads_model, save_model
from simgood.sllc import SllcConfig, solve_sllc


@pytest.fixture
def models(rng):
    T, R = random_instance(3)
    sim = solve_sllc(T, R, SllcConfig(beta=1e-2, gamma=0.1))
    kpca = kpca_fit(rng.normal(size=(15, 2)), 5)
    bil = train_l1_classifier(SimilarityEvaluator.bilinear(sim.A), Landmarks.from_dataset(T), T, 0.5)
    cos = train_l1_classifier(SimilarityEvaluator.cosine(), Landmarks.from_dataset(T), T, 0.5)
    return {"similarity": sim, "kpca": kpca, "bilinear": bil, "cosine": cos}


def test_round_trip_is_exact(models, tmp_path, rng):
    for name, model in models.items():
        path = tmp_path / f"{name}.txt"
        save_model(model, path)
        back = load_model(path)
        assert dumps_model(back) == dumps_model(model)
    sim = load_model(tmp_path / "similarity.txt", "similarity")
    np.testing.assert_array_equal(sim.A, models["similarity"].A)
    np.testing.assert_array_equal(sim.reasonable.X, models["similarity"].reasonable.X)
    k = load_model(tmp_path / "kpca.txt")
    Q = rng.normal(size=(4, 2))
    np.testing.assert_array_equal(kpca_project(k, Q), kpca_project(models["kpca"], Q))
    c = load_model(tmp_path / "bilinear.txt")
    np.testing.assert_array_equal(c.alpha, models["bilinear"].alpha)
    assert c.similarity.kind == "bilinear"
    assert load_model(tmp_path / "cosine.txt").similarity.kind == "cosine"


def test_header_and_precision(models):
    m = models["similarity"]
    lines = dumps_model(m).splitlines()
    assert lines[0] == "SIMGOOD 1 similarity"
    assert lines[1] == f"{m.A.shape[0]} {m.A.shape[1]} {len(m.reasonable)}"
    first_row = [ln for ln in lines if not ln.startswith("#")][3].split()
    assert [float(v) for v in first_row] == m.A[0].tolist()
    assert all(len(v.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 17 for v in first_row)


def test_comments_are_ignored(models):
    text = dumps_model(models["kpca"])
    noisy = text.replace("\n", "   # remark\n", 3)
    assert dumps_model(loads_model("# leading note\n" + noisy)) == text


@pytest.mark.parametrize("cut", [1, 2, 5, -2])
def test_truncated_file(models, cut):
    lines = dumps_model(models["bilinear"]).splitlines()
    with pytest.raises(FormatError):
        loads_model("\n".join(lines[:cut]))


def test_wrong_version(models):
    text = dumps_model(models["similarity"]).replace("SIMGOOD 1", "SIMGOOD 99", 1)
    with pytest.raises(VersionError):
        loads_model(text)


@pytest.mark.parametrize("mutate", [
    lambda t: t.replace("SIMGOOD", "OTHER", 1),
    lambda t: t.replace("similarity", "mystery", 1),
    lambda t: t + "1 2 3\n",
    lambda t: t.replace("\n", "\nxyz\n", 3).replace("xyz\n", "", 1),
])
def test_malformed_files(models, mutate):
    with pytest.raises(FormatError):
        loads_model(mutate(dumps_model(models["similarity"])))


def test_expected_kind_enforced(models):
    with pytest.raises(FormatError):
        loads_model(dumps_model(models["kpca"]), "classifier")
