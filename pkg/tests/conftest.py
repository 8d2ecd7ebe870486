"""Shared fixtures: a small water-network graph and random-table builders."""

import json

import numpy as np
import pytest

from semarm.transact import Feature, TransactionTable

WATER_GRAPH = {
    "ontology": {
        "classes": ["Pipe", "Junction"],
        "relations": [{"name": "connected_to", "from": "Pipe", "to": "Junction"}],
        "properties": ["length", "elevation", "order"],
        "owned": {"Pipe": ["length"], "Junction": ["elevation"], "connected_to": ["order"]},
    },
    "nodes": [
        {"id": "p1", "labels": ["Pipe"], "props": {"length": 850}},
        {"id": "j2", "labels": ["Junction"], "props": {"elevation": 12.5}},
        {"id": "p3", "labels": ["Pipe"], "props": {"length": 430}},
    ],
    "edges": [
        {"id": "e1", "from": "p1", "to": "j2", "labels": ["connected_to"], "props": {}},
        {"id": "e2", "from": "p3", "to": "j2", "labels": ["connected_to"], "props": {"order": 2}},
    ],
    "bindings": {"s1": "p1", "s2": "j2", "s3": "p3"},
}


@pytest.fixture
def water_graph_json() -> str:
    return json.dumps(WATER_GRAPH)


def make_random_table(rng, max_features=8, max_classes=4, max_rows=60) -> TransactionTable:
    n_features = int(rng.integers(2, max_features + 1))
    n_rows = int(rng.integers(4, max_rows + 1))
    features = []
    columns = []
    for f in range(n_features):
        n_classes = int(rng.integers(2, max_classes + 1))
        features.append(
            Feature(f"f{f}", "categorical", [f"v{c}" for c in range(n_classes)])
        )
        columns.append(rng.integers(0, n_classes, size=n_rows))
    return TransactionTable(features, np.column_stack(columns))
