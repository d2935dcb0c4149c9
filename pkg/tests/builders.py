# tests/builders.py
from backend.services.rgg_model import GraphInstance, ModelParams, sample_instance


def complete_graph(m: int) -> GraphInstance:
    """m <= 10 vertices within distance r of each other."""
    pts = [(5.0 + 0.1 * i, 5.0 + 0.05 * (i % 2)) for i in range(m)]
    return GraphInstance.from_positions(pts, r=1.0, side=10.0)


def path_graph(m: int) -> GraphInstance:
    """Vertices 0..m-1 on a line, consecutive ones adjacent, no wrap-around edge."""
    pts = [(1.0 + 0.9 * i, 1.0) for i in range(m)]
    return GraphInstance.from_positions(pts, r=1.0, side=0.9 * m + 5.0)


def random_instance(n: int, r: float, seed: int, metric: str = "torus", profile: str = "desk") -> GraphInstance:
    return sample_instance(ModelParams(n=n, r=r, seed=seed, metric=metric, profile=profile))
