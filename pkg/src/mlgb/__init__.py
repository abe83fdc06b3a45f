"""Multi-label graph benchmarking toolkit.

Synthetic multi-label graph generation with tunable label homophily,
label-induced similarity metrics, a layerwise feature-label fusion model
with MLP/GCN/DeepWalk baselines, and a reproducible benchmark harness.
"""

from .data import (DataSplit, DatasetFormatError, DatasetStats,
                   MultiLabelGraph, dataset_stats, load_dataset, make_splits,
                   save_dataset)
from .generator import (CalibrationError, CorruptionConfig, GeneratorConfig,
                        LabelSphere, attachment_probability,
                        calibrate_homophily, corrupt_features,
                        generate_graph, generate_multilabel_points)
from .labelsim import CcnsMatrix, UndefinedMetricError, ccns, edge_density, \
    label_homophily

__version__ = "0.1.0"
