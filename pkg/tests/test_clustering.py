import numpy as np
import pytest

from cohort_synth.clustering import DbscanParams, dbscan


def reference_dbscan(Y, eps, min_pts):
    """Brute-force implementation straight from the definition: scalar loops,
    core mask, BFS components in scan order, border -> lowest-index core."""
    n = len(Y)
    neighbors = []
    for i in range(n):
        nb = []
        for j in range(n):
            dx = Y[i][0] - Y[j][0]
            dy = Y[i][1] - Y[j][1]
            if dx * dx + dy * dy <= eps * eps:
                nb.append(j)
        neighbors.append(nb)
    core = [len(nb) >= min_pts for nb in neighbors]
    labels = [-1] * n
    cluster = 0
    for i in range(n):
        if not core[i] or labels[i] != -1:
            continue
        labels[i] = cluster
        queue = [i]
        while queue:
            j = queue.pop()
            for k in neighbors[j]:
                if core[k] and labels[k] == -1:
                    labels[k] = cluster
                    queue.append(k)
        cluster += 1
    for i in range(n):
        if core[i] or labels[i] != -1:
            continue
        cores = [j for j in neighbors[i] if core[j]]
        if cores:
            labels[i] = labels[min(cores)]
    return np.array(labels)


def blob(rng, center, n, radius):
    angles = rng.uniform(0, 2 * np.pi, n)
    radii = radius * np.sqrt(rng.uniform(0, 1, n))
    return np.column_stack([center[0] + radii * np.cos(angles), center[1] + radii * np.sin(angles)])


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            DbscanParams(eps=0.0, min_pts=5)
        with pytest.raises(ValueError):
            DbscanParams(eps=0.1, min_pts=0)


class TestDbscan:
    def test_two_dense_groups(self):
        rng = np.random.default_rng(0)
        Y = np.vstack([blob(rng, (0.0, 0.0), 25, 0.005), blob(rng, (0.5, 0.0), 25, 0.005)])
        labels = dbscan(Y, DbscanParams(eps=0.03, min_pts=20))
        assert set(labels[:25]) == {0}
        assert set(labels[25:]) == {1}
        assert (labels != -1).all()

    def test_sparse_points_all_noise(self):
        rng = np.random.default_rng(1)
        Y = rng.uniform(-1, 1, size=(5, 2))
        labels = dbscan(Y, DbscanParams(eps=0.03, min_pts=20))
        assert (labels == -1).all()

    def test_translation_invariance(self):
        rng = np.random.default_rng(2)
        Y = np.vstack([blob(rng, (0.0, 0.0), 30, 0.01), blob(rng, (0.4, 0.3), 30, 0.01)])
        params = DbscanParams(eps=0.05, min_pts=10)
        a = dbscan(Y, params)
        b = dbscan(Y + np.array([3.7, -2.2]), params)
        assert (a == b).all()

    def test_border_point_joins_lowest_index_core(self):
        # Two 5-point cores, plus one border point equally reachable from a
        # core in each cluster. It must join the cluster of its lowest-index
        # core neighbor (which sits in the second-listed cluster here).
        right = [(1.0 + 0.01 * k, 0.0) for k in range(5)]
        left = [(-1.0 - 0.01 * k, 0.0) for k in range(5)]
        border = [(0.0, 0.0)]
        Y = np.array(right + left + border)
        params = DbscanParams(eps=1.05, min_pts=5)
        labels = dbscan(Y, params)
        assert labels[10] == labels[0]
        assert (labels == reference_dbscan(Y, params.eps, params.min_pts)).all()

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_reference_on_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 120))
        Y = np.round(rng.uniform(-1, 1, size=(n, 2)), 3)
        eps = float(rng.uniform(0.05, 0.4))
        min_pts = int(rng.integers(2, 8))
        labels = dbscan(Y, DbscanParams(eps=eps, min_pts=min_pts))
        assert (labels == reference_dbscan(Y, eps, min_pts)).all()

    def test_cluster_ids_dense_and_ordered(self):
        rng = np.random.default_rng(9)
        Y = np.vstack(
            [blob(rng, (0, 0), 20, 0.01), blob(rng, (1, 1), 20, 0.01), blob(rng, (-1, 1), 20, 0.01)]
        )
        labels = dbscan(Y, DbscanParams(eps=0.05, min_pts=10))
        present = sorted(set(labels))
        assert present == [0, 1, 2]
        assert labels[0] == 0  # first scan-order core starts cluster 0
