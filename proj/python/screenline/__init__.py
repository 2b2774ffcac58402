"""Celebrity screen-time timelines: stores, charts and the detection pipeline."""

import json

from ._screenline import Error, Index, chart_types, run_cli, synth_detections, synth_gallery
from . import _screenline

__all__ = [
    "Error",
    "Index",
    "Store",
    "chart",
    "chart_types",
    "process_episode",
    "run_cli",
    "synth_detections",
    "synth_gallery",
]


class Store:
    """Embedded appearance store rooted at a directory."""

    def __init__(self, path, max_records=None):
        self._native = _screenline.Store(str(path), max_records)

    def register_episode(self, episode_id, duration_ms, series_id="", season=1, episode_number=1, source=""):
        meta = {
            "episode_id": episode_id,
            "series_id": series_id,
            "season": season,
            "episode_number": episode_number,
            "duration_ms": duration_ms,
            "source": source,
        }
        self._native.register_episode(json.dumps(meta))

    def ingest(self, episode_id, records):
        # records: iterable of dicts, or a JSON Lines string
        if not isinstance(records, str):
            records = "".join(json.dumps(r) + "\n" for r in records)
        return self._native.ingest(episode_id, records)

    def mark_processed(self, episode_id):
        self._native.mark_processed(episode_id)

    def episodes(self):
        return json.loads(self._native.episodes())

    def unprocessed(self):
        return json.loads(self._native.unprocessed())

    def query(self, **filters):
        text = self._native.query(json.dumps(filters) if filters else "")
        return [json.loads(line) for line in text.splitlines()]

    def aggregate(self, statistic, group_by, coalesce=None, **filters):
        return self._native.aggregate(statistic, group_by, json.dumps(filters) if filters else "", coalesce)

    @property
    def record_count(self):
        return self._native.record_count


def chart(store, chart_type, episode=None, series=None, seasons=(), **params):
    """ChartSpec as a dict. Params: bucket_ms, window_ms, segment_ms,
    min_edge_weight, gap_ms, tail_ms."""
    return json.loads(_screenline.chart(store._native, chart_type, episode, series, list(seasons), params))


def process_episode(store, episode_id, index, workers=1, threshold=0.5, k=5, detections=None):
    return json.loads(_screenline.process_episode(store._native, episode_id, index, workers, threshold, k, detections))
