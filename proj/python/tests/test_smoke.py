import json

import numpy as np
import pytest

import screenline


def test_index_search_ranks_self_first():
    rng = np.random.default_rng(0)
    vectors = rng.normal(size=(20, 32)).astype(np.float32)
    index = screenline.Index.build([f"id{i}" for i in range(20)], vectors, "cosine")
    ids, scores = index.search(vectors[7], 3)
    assert ids[0] == "id7"
    assert scores[0] == pytest.approx(1.0, abs=1e-6)
    assert scores == sorted(scores, reverse=True)


def test_index_round_trip(tmp_path):
    index = screenline.synth_gallery(1, 5, 64, "l2")
    index.save(str(tmp_path / "g.keix"))
    again = screenline.Index.load(str(tmp_path / "g.keix"))
    assert again.ids == index.ids and again.metric == "l2" and again.dim == 64


def test_errors_carry_codes(tmp_path):
    store = screenline.Store(tmp_path / "db")
    with pytest.raises(screenline.Error) as info:
        screenline.chart(store, "total_counts", episode="missing")
    assert info.value.args[0] == "UnknownEpisode"
    with pytest.raises(screenline.Error):
        screenline.Index.load(str(tmp_path / "nothing.keix"))


def test_ingest_query_and_charts(tmp_path):
    store = screenline.Store(tmp_path / "db")
    store.register_episode("e1", 120000, series_id="show")
    records = [
        {
            "episode_id": "e1",
            "celebrity_id": "ab"[i % 2],
            "t_ms": i * 1000,
            "pos_index": i,
            "bbox": [0.1, 0.1, 0.2, 0.2],
            "score": 0.9,
        }
        for i in range(60)
    ]
    assert store.ingest("e1", records) == 60
    assert len(store.query(celebrities=["a"], from_ms=10000, to_ms=20000)) == 5
    assert store.aggregate("count", "celebrity") == {"a": 30, "b": 30}
    for chart_type in screenline.chart_types():
        if chart_type == "seasonal_comparison":
            spec = screenline.chart(store, chart_type, series="show")
        else:
            spec = screenline.chart(store, chart_type, episode="e1", bucket_ms=30000)
        assert spec["chart_type"] == chart_type


def test_pipeline_and_cli_agree(tmp_path):
    gallery = screenline.synth_gallery(2, 6, 64)
    gallery.save(str(tmp_path / "g.keix"))
    expected = screenline.synth_detections(str(tmp_path / "e.dets"), 2, 6, 64, 5, 60000, fps=2.0, scene_ms=10000)
    db = str(tmp_path / "db")
    store = screenline.Store(db)
    store.register_episode("e", 60000, source=str(tmp_path / "e.dets"))
    report = screenline.process_episode(store, "e", gallery, workers=3)
    assert report["stored"] == sum(expected.values())
    assert store.aggregate("count", "celebrity") == expected

    via_api = json.dumps(screenline.chart(store, "total_counts", episode="e"))
    del store
    code, out, err = screenline.run_cli(["--data-dir", db, "chart", "total_counts", "--episode", "e"])
    assert code == 0, err
    assert json.dumps(json.loads(out)) == via_api
