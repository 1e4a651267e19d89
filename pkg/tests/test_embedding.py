import numpy as np
import pytest

from cohort_synth.embedding import (
    EmbeddingCoords,
    TsneParams,
    conditional_neighbor_probs,
    normalize_coords,
    proximity_to_distance,
    tsne_embed,
)
from cohort_synth.errors import PerplexityTooLarge


def two_blob_distances(n=200):
    D = np.ones((n, n))
    half = n // 2
    D[:half, :half] = 0.0
    D[half:, half:] = 0.0
    np.fill_diagonal(D, 0.0)
    return D


def pairwise(A, B):
    return np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(-1))


class TestProximityToDistance:
    def test_extremes(self):
        P = np.array([[1.0, 1.0], [1.0, 1.0]])
        assert proximity_to_distance(P)[0, 1] == 0.0
        P = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert proximity_to_distance(P)[0, 1] == 1.0

    def test_symmetry_and_zero_diagonal(self):
        rng = np.random.default_rng(0)
        P = rng.uniform(0, 1, (10, 10))
        P = (P + P.T) / 2
        np.fill_diagonal(P, 1.0)
        D = proximity_to_distance(P)
        assert np.array_equal(D, D.T)
        assert (np.diag(D) == 0).all()


class TestPerplexitySearch:
    def test_row_entropies_hit_target(self):
        rng = np.random.default_rng(3)
        D = rng.uniform(0.1, 1.0, (120, 120))
        D = (D + D.T) / 2
        np.fill_diagonal(D, 0.0)
        perplexity = 25.0
        _, entropies = conditional_neighbor_probs(D, perplexity)
        assert np.abs(entropies - np.log2(perplexity)).max() <= 1e-3

    def test_conditional_rows_normalized(self):
        D = two_blob_distances(60)
        P, _ = conditional_neighbor_probs(D, 15.0)
        assert np.allclose(P.sum(axis=1), 1.0)
        assert (np.diag(P) == 0).all()


class TestTsne:
    def test_planted_blobs_linearly_separable(self):
        D = two_blob_distances(200)
        coords = tsne_embed(D, TsneParams(), seed=11)
        Y = coords.Y
        a, b = Y[:100], Y[100:]
        max_within = max(pairwise(a, a).max(), pairwise(b, b).max())
        min_between = pairwise(a, b).min()
        assert max_within < min_between

    def test_kl_trace_non_increasing_after_exaggeration(self):
        D = two_blob_distances(200)
        coords = tsne_embed(D, TsneParams(), seed=11)
        kl = coords.kl_trace
        assert kl.shape == (1000,)
        deltas = np.diff(kl[250:])
        assert deltas.max() <= 1e-3

    def test_byte_identical_reruns(self):
        D = two_blob_distances(100)
        a = tsne_embed(D, TsneParams(iters=300), seed=4)
        b = tsne_embed(D, TsneParams(iters=300), seed=4)
        assert a.Y.tobytes() == b.Y.tobytes()
        assert a.kl_trace.tobytes() == b.kl_trace.tobytes()

    def test_equilateral_triangle(self):
        D = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
        with pytest.warns(UserWarning):
            coords = tsne_embed(D, TsneParams(perplexity=2.0), seed=5)
        Y = coords.Y
        d = sorted(
            [np.linalg.norm(Y[0] - Y[1]), np.linalg.norm(Y[0] - Y[2]), np.linalg.norm(Y[1] - Y[2])]
        )
        assert d[2] / d[0] <= 1.1

    def test_perplexity_too_large(self):
        D = two_blob_distances(10)
        with pytest.raises(PerplexityTooLarge):
            tsne_embed(D, TsneParams(perplexity=10.0), seed=0)

    def test_finite_output(self):
        rng = np.random.default_rng(1)
        D = rng.uniform(0, 1, (90, 90))
        D = (D + D.T) / 2
        np.fill_diagonal(D, 0)
        coords = tsne_embed(D, TsneParams(iters=300), seed=2)
        assert np.isfinite(coords.Y).all()
        assert np.isfinite(coords.kl_trace).all()


class TestNormalize:
    def test_affine_map_to_unit_interval(self):
        coords = EmbeddingCoords(Y=np.array([[0.0, 0.0], [5.0, 1.0], [10.0, 2.0]]), kl_trace=np.zeros(1))
        out = normalize_coords(coords).Y
        assert out[:, 0].tolist() == [-1.0, 0.0, 1.0]
        assert out[:, 1].tolist() == [-1.0, 0.0, 1.0]

    def test_constant_dimension_maps_to_zero(self):
        coords = EmbeddingCoords(Y=np.array([[2.0, 1.0], [2.0, 3.0]]), kl_trace=np.zeros(1))
        out = normalize_coords(coords).Y
        assert (out[:, 0] == 0.0).all()

    def test_idempotent_on_full_range(self):
        rng = np.random.default_rng(7)
        Y = rng.uniform(-1, 1, (50, 2))
        Y[0] = [-1.0, -1.0]
        Y[1] = [1.0, 1.0]
        once = normalize_coords(EmbeddingCoords(Y=Y, kl_trace=np.zeros(1)))
        twice = normalize_coords(once)
        assert np.allclose(once.Y, twice.Y)

    def test_output_bounds(self):
        rng = np.random.default_rng(8)
        coords = EmbeddingCoords(Y=rng.normal(0, 50, (40, 2)), kl_trace=np.zeros(1))
        out = normalize_coords(coords).Y
        assert out.min(axis=0).tolist() == [-1.0, -1.0]
        assert out.max(axis=0).tolist() == [1.0, 1.0]
