import math

import pytest

import taxemb


def test_closed_forms():
    assert taxemb.ce_loss([0.25] * 4, 1) == pytest.approx(math.log(4), abs=1e-9)
    assert taxemb.margin_triplet_loss([1, 0], [0.6, 0.8], [0.6, 0.8]) == pytest.approx(0.4, abs=1e-12)
    assert taxemb.contrastive_loss_nomargin([1, 0], [0.5, 1], [[0.5, -1]]) == pytest.approx(math.log(2), abs=1e-9)
    probs = taxemb.softmax([2, 1, 0])
    assert probs[0] == pytest.approx(0.6652, abs=1e-4)
    assert taxemb.cosine([1, 0], [0, 1]) == 0.0


def test_dimension_errors_map_to_value_error():
    with pytest.raises(ValueError):
        taxemb.cosine([1, 2], [1, 2, 3])


def test_encoder():
    enc = taxemb.TextEncoder(dim=16, buckets=256, seed=1)
    enc.fit_idf(["crane repair", "tax audit"])
    v = enc.encode("crane repair hydraulics")
    assert len(v) == enc.dim == 16
    assert sum(x * x for x in v) == pytest.approx(1.0)
    assert taxemb.tokenize("Crane-Repair 2x") == ["crane", "repair", "2x"]


def test_pipeline(tmp_path):
    cfg = {
        "seed": 3,
        "synth": {"soc_count": 2, "carotene_count": 4, "min_branching": 2, "max_branching": 2, "jobs_per_carotene": 5, "sim_out_degree": 1},
        "encoder": {"dim": 8, "buckets": 256},
        "mining": {"n_neg": 2},
        "train": {"max_epochs": 2},
    }
    data, trip, run = tmp_path / "data", tmp_path / "trip", tmp_path / "run"
    taxemb.generate_corpus(str(data), cfg)
    stats = taxemb.load_taxonomy_stats(str(data))
    assert (stats["m"], stats["n"]) == (2, 4)
    assert sum(stats["split_sizes"]) == 20

    counts = taxemb.mine(str(data), str(trip), config=cfg)
    assert set(counts) == {"soc-car", "car-car", "job-soc", "job-car"}
    assert all(c > 0 for c in counts.values())

    result = taxemb.train(str(data), str(trip), str(run), cfg)
    assert 1 <= result["epochs"] <= 2

    metrics = taxemb.evaluate(str(run / "checkpoint.bin"), str(data), str(trip), "test", str(tmp_path / "eval"), cfg)
    assert 0.0 <= metrics["soc_accuracy"] <= 1.0
    assert "soc-car" in metrics["tra"]

    params = taxemb.load_checkpoint(str(run / "checkpoint.bin"))
    assert len(params["soc_emb"]) == 2 and len(params["soc_emb"][0]) == 8
    coords = taxemb.pca_2d(params["car_emb"])
    assert len(coords) == 4 and len(coords[0]) == 2
