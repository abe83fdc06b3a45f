"""Two-stage synthetic multi-label graph generator.

Stage 1 samples labeled points: one hypersphere per label, each contained in
the unit hypersphere, populated with uniformly drawn points; a point's label
set is the set of spheres containing it. Stage 2 wires the points into a
graph with a social-distance attachment rule: a pair is connected with
probability 1 / (1 + (d/b)^alpha) where d is the normalized Hamming distance
between the two label vectors. alpha tunes label homophily, b is the
distance at which the connection probability is exactly 1/2.

Edge draws use a counter-based stream keyed on (seed, pair index), so the
edge set is reproducible pair by pair and independent of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .data import MultiLabelGraph
from .labelsim import label_homophily


class CalibrationError(RuntimeError):
    """Target homophily is outside what the parameter grid can reach."""


@dataclass(frozen=True)
class GeneratorConfig:
    num_nodes: int
    num_labels: int
    num_features: int
    alpha: float = 8.8
    b: float = 0.12
    seed: int = 0
    min_sphere_radius: float = 0.1
    max_sphere_radius: float = 0.78

    def __post_init__(self):
        if self.num_nodes < 1 or self.num_labels < 1 or self.num_features < 1:
            raise ValueError("counts must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.b <= 0:
            raise ValueError("b must be positive")
        if not 0 < self.min_sphere_radius <= self.max_sphere_radius < 1:
            raise ValueError("need 0 < min_sphere_radius <= max_sphere_radius < 1")


@dataclass(frozen=True)
class LabelSphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if np.linalg.norm(self.center) + self.radius > 1.0 + 1e-12:
            raise ValueError("sphere not contained in the unit hypersphere")


@dataclass(frozen=True)
class CorruptionConfig:
    original_ratio: float
    num_irrelevant: int = 10

    def __post_init__(self):
        if not 0.0 <= self.original_ratio <= 1.0:
            raise ValueError("original_ratio must be in [0, 1]")
        if self.num_irrelevant < 0:
            raise ValueError("num_irrelevant must be >= 0")


def _uniform_in_ball(rng, count, dim, radius):
    """Points uniform in a ball: random direction scaled by radius * U^(1/dim)."""
    direction = rng.normal(size=(count, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    scale = np.asarray(radius) * rng.uniform(0.0, 1.0, size=count) ** (1.0 / dim)
    return direction * scale[:, None]


def sphere_membership(points, spheres):
    """Binary matrix: entry (i, l) is 1 iff point i lies inside sphere l."""
    centers = np.stack([s.center for s in spheres])
    radii = np.array([s.radius for s in spheres])
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return (d2 <= radii[None, :] ** 2).astype(np.int8)


def generate_multilabel_points(cfg: GeneratorConfig):
    """Stage 1: labeled points in the unit hypersphere.

    Returns (X, Y, spheres). Every point is drawn inside one uniformly chosen
    sphere, so every row of Y has at least one 1; Y is recomputed from the
    full membership test, which by construction includes the chosen sphere.
    """
    rng = np.random.default_rng(cfg.seed)
    m = cfg.num_features
    radii = rng.uniform(cfg.min_sphere_radius, cfg.max_sphere_radius,
                        size=cfg.num_labels)
    centers = _uniform_in_ball(rng, cfg.num_labels, m, 1.0 - radii)
    spheres = [LabelSphere(center=centers[i], radius=float(radii[i]))
               for i in range(cfg.num_labels)]
    chosen = rng.integers(0, cfg.num_labels, size=cfg.num_nodes)
    offsets = _uniform_in_ball(rng, cfg.num_nodes, m, radii[chosen])
    points = centers[chosen] + offsets
    labels = sphere_membership(points, spheres)
    return points, labels, spheres


def attachment_probability(d, alpha, b):
    """Connection probability 1 / (1 + (d/b)^alpha); p(b) = 1/2, p(0) = 1 for alpha > 0."""
    d = np.asarray(d, dtype=np.float64)
    if (d < 0).any():
        raise ValueError("distance must be non-negative")
    if b <= 0:
        raise ValueError("b must be positive")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return 1.0 / (1.0 + (d / b) ** alpha)


def generate_graph(points, labels, alpha, b, seed) -> MultiLabelGraph:
    """Stage 2: distance-attachment edges over the stage-1 points."""
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    u, v = kernels.sample_pair_edges(labels, float(alpha), float(b), int(seed))
    edges = np.stack([u, v], axis=1) if len(u) else np.empty((0, 2), dtype=np.int64)
    return MultiLabelGraph(edges=edges, features=np.asarray(points, dtype=np.float64),
                           labels=labels.astype(np.int8))


def parameter_grid():
    """The paired (alpha, b) sweep: alpha ascending 0.5..10, b descending 0.25..0.0125."""
    alphas = np.round(np.arange(1, 21) * 0.5, 10)
    bs = np.round(np.arange(20, 0, -1) * 0.0125, 10)
    return list(zip(alphas.tolist(), bs.tolist()))


def measure_homophily_grid(points, labels, seed, grid=None):
    """Measured label homophily of the generated graph at every grid pair."""
    if grid is None:
        grid = parameter_grid()
    measured = []
    for alpha, b in grid:
        graph = generate_graph(points, labels, alpha, b, seed)
        h = label_homophily(graph) if graph.num_edges else 0.0
        measured.append((alpha, b, h))
    return measured


def calibrate_homophily(points, labels, target_h, seed, tol=0.05,
                        grid_measurements=None, max_bisect=12):
    """Find (alpha, b) whose generated graph hits target_h within tol.

    Sweeps the paired parameter grid, then bisects along the segment between
    the two bracketing grid points. Raises CalibrationError with the
    achievable range when the target is outside the grid's span.
    """
    if not 0.0 < target_h <= 1.0:
        raise ValueError("target homophily must be in (0, 1]")
    if grid_measurements is None:
        grid_measurements = measure_homophily_grid(points, labels, seed)
    pts = sorted(grid_measurements, key=lambda t: t[2])
    best = min(pts, key=lambda t: abs(t[2] - target_h))
    if abs(best[2] - target_h) <= tol:
        graph = generate_graph(points, labels, best[0], best[1], seed)
        if graph.num_edges:
            return best[0], best[1], graph
    lo = max((p for p in pts if p[2] <= target_h), default=None, key=lambda t: t[2])
    hi = min((p for p in pts if p[2] >= target_h), default=None, key=lambda t: t[2])
    if lo is None or hi is None:
        span = (pts[0][2], pts[-1][2])
        raise CalibrationError(
            f"target homophily {target_h} outside achievable range "
            f"[{span[0]:.3f}, {span[1]:.3f}]")
    for _ in range(max_bisect):
        alpha = 0.5 * (lo[0] + hi[0])
        b = 0.5 * (lo[1] + hi[1])
        graph = generate_graph(points, labels, alpha, b, seed)
        h = label_homophily(graph) if graph.num_edges else 0.0
        if abs(h - target_h) <= tol and graph.num_edges:
            return alpha, b, graph
        if h < target_h:
            lo = (alpha, b, h)
        else:
            hi = (alpha, b, h)
    # fall back to the closer bracket end
    alpha, b, h = min((lo, hi), key=lambda t: abs(t[2] - target_h))
    graph = generate_graph(points, labels, alpha, b, seed)
    h = label_homophily(graph) if graph.num_edges else 0.0
    if abs(h - target_h) <= tol and graph.num_edges:
        return alpha, b, graph
    raise CalibrationError(
        f"could not reach homophily {target_h} within {tol}; closest {h:.3f}")


def generate_dataset(cfg: GeneratorConfig, target_homophily=None, tol=0.05):
    """Full pipeline: stage-1 points, then edges at (alpha, b) or calibrated."""
    points, labels, _ = generate_multilabel_points(cfg)
    if target_homophily is None:
        return generate_graph(points, labels, cfg.alpha, cfg.b, cfg.seed)
    _, _, graph = calibrate_homophily(points, labels, target_homophily,
                                      cfg.seed, tol=tol)
    return graph


def corrupt_features(graph: MultiLabelGraph, cc: CorruptionConfig,
                     seed: int) -> MultiLabelGraph:
    """Keep the first round(ratio*m) original feature columns, append standard
    normal noise columns; structure and labels are untouched."""
    m = graph.num_features
    keep = int(round(cc.original_ratio * m))
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((graph.num_nodes, cc.num_irrelevant))
    features = np.concatenate([graph.features[:, :keep], noise], axis=1)
    return graph.with_features(features)
