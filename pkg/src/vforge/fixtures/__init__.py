"""Bundled example data: a small backbone ontology, weather samples, a disjointness list."""

from __future__ import annotations

import pathlib

FIXTURE_DIR = pathlib.Path(__file__).parent

BACKBONE_PATH = FIXTURE_DIR / "backbone.json"
WEATHER_SAMPLES_PATH = FIXTURE_DIR / "weather_samples.jsonl"
DISJOINT_PATH = FIXTURE_DIR / "disjoint.tsv"
