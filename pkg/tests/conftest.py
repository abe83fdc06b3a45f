import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mlgb.data import MultiLabelGraph


def build_graph(edges, labels, features=None):
    labels = np.asarray(labels, dtype=np.int8)
    n = labels.shape[0]
    if features is None:
        features = np.arange(n, dtype=np.float64)[:, None]
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return MultiLabelGraph(edges=edges, features=np.asarray(features, dtype=np.float64),
                           labels=labels)


@pytest.fixture
def triangle_graph():
    return build_graph(edges=[(0, 1), (0, 2), (1, 2)],
                       labels=[[1], [1], [1]])


def random_multilabel_graph(rng, n, num_labels=None, **kw):
    from oracles import random_graph

    edges, features, labels = random_graph(rng, n, num_labels, **kw)
    return build_graph(edges, labels, features)
