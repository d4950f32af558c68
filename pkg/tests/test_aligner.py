import math

import numpy as np
import pytest
from scipy.special import comb

from subtree_align.aligner import _Side, iterate_scores, run_mp_er, run_mp_general, run_mp_weighted
from subtree_align.ensembles import (
    DegreeTripleLaw,
    ErParams,
    Graph,
    GraphPairInstance,
    WeightModel,
    attach_weights,
    sample_configuration_correlated,
    sample_correlated_er,
)
from subtree_align.errors import CapacityError, DataError
from subtree_align.trees import computational_tree, likelihood_ratio, neighborhood_tree


def er_instance(n=120, lam=1.6, s=0.8, seed=0):
    return sample_correlated_er(ErParams(n, lam, s), seed)


def test_depth_one_closed_form():
    lam, s = 1.5, 0.7
    _, inst = er_instance(lam=lam, s=s)
    sc = run_mp_er(inst, lam, s, 1).log_scores
    da, db = inst.graph_a.degrees, inst.graph_b.degrees
    w = s / (lam * (1 - s) ** 2)
    for i in range(0, inst.n, 7):
        for j in range(0, inst.n, 5):
            tot = sum(w ** k * comb(da[i], k) * comb(db[j], k) * math.factorial(k)
                      for k in range(min(da[i], db[j]) + 1))
            expect = lam * s + (da[i] + db[j]) * math.log(1 - s) + math.log(tot)
            assert sc[i, j] == pytest.approx(expect, abs=1e-10)


def test_isolated_vertex_row():
    a = Graph(4, [(1, 2), (2, 3)])
    b = Graph(4, [(0, 1), (1, 2)])
    inst = GraphPairInstance(a, b)
    for d in (1, 2, 4):
        sc = run_mp_er(inst, 1.4, 0.8, d).log_scores
        assert sc[0, 1] == pytest.approx(1.12 + 2 * math.log(0.2))


@pytest.mark.parametrize("seed", range(4))
def test_acyclic_neighborhoods_match_tree_ratio(seed):
    lam, s = 1.5, 0.75
    _, inst = er_instance(n=150, lam=lam, s=s, seed=seed)
    checked = 0
    for d, score in enumerate(iterate_scores(inst, (lam, s), 4), start=1):
        nb_a = [neighborhood_tree(inst.graph_a, i, d) for i in range(inst.n)]
        nb_b = [neighborhood_tree(inst.graph_b, j, d) for j in range(inst.n)]
        for i in range(0, inst.n, 3):
            ta, ok_a = nb_a[i]
            if not ok_a:
                continue
            for j in range(0, inst.n, 3):
                tb, ok_b = nb_b[j]
                if ok_b:
                    assert abs(score.log_scores[i, j] - likelihood_ratio(ta, tb, lam, s, d)) < 1e-9
                    checked += 1
    assert checked > 1000


def test_square_follows_non_backtracking_unwrapping():
    square = Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    path = Graph(4, [(0, 1), (1, 2), (2, 3)])
    inst = GraphPairInstance(square, path)
    lam, s = 1.3, 0.6
    for score in iterate_scores(inst, (lam, s), 5):
        d = score.depth
        for i in range(4):
            for j in range(4):
                ref = likelihood_ratio(computational_tree(square, i, d),
                                       computational_tree(path, j, d), lam, s, d)
                assert score.log_scores[i, j] == pytest.approx(ref, abs=1e-10)
    # the square is vertex-transitive: every row is the same
    assert np.allclose(score.log_scores, score.log_scores[0])


def test_unwrapping_on_random_graph_with_cycles():
    _, inst = er_instance(n=25, lam=3.0, s=0.7, seed=3)
    d = 3
    sc = run_mp_er(inst, 3.0, 0.7, d).log_scores
    for i in range(inst.n):
        ta = computational_tree(inst.graph_a, i, d)
        for j in range(0, inst.n, 2):
            tb = computational_tree(inst.graph_b, j, d)
            assert sc[i, j] == pytest.approx(likelihood_ratio(ta, tb, 3.0, 0.7, d), abs=1e-9)


def test_iterate_matches_single_runs():
    _, inst = er_instance()
    scores = list(iterate_scores(inst, (1.6, 0.8), 5))
    assert [s.depth for s in scores] == [1, 2, 3, 4, 5]
    for d in (1, 3, 5):
        assert np.array_equal(scores[d - 1].log_scores, run_mp_er(inst, 1.6, 0.8, d).log_scores)


def test_determinism_across_threads():
    _, inst = er_instance(n=200)
    a = run_mp_er(inst, 1.6, 0.8, 6, threads=1).log_scores
    b = run_mp_er(inst, 1.6, 0.8, 6).log_scores
    c = run_mp_er(inst, 1.6, 0.8, 6, threads=1).log_scores
    assert np.array_equal(a, b) and np.array_equal(a, c)


def test_transpose_symmetry():
    _, inst = er_instance(seed=5)
    swapped = GraphPairInstance(inst.graph_b, inst.graph_a)
    a = run_mp_er(inst, 1.6, 0.8, 5).log_scores
    b = run_mp_er(swapped, 1.6, 0.8, 5).log_scores
    assert np.allclose(a, b.T, atol=1e-10, rtol=0)


def test_message_count():
    _, inst = er_instance()
    score = next(iterate_scores(inst, (1.6, 0.8), 1, keep_state=True))
    assert score.state.message_count == 4 * inst.graph_a.m * inst.graph_b.m


def test_capacity_error_names_pair():
    a = Graph(8, [(0, k) for k in range(1, 8)])
    inst = GraphPairInstance(a, a)
    with pytest.raises(CapacityError, match=r"\(0, 0\)"):
        run_mp_er(inst, 1.4, 0.8, 2, degree_cap=4)


class TestGeneralMode:
    def test_poisson_law_reduces_to_er(self):
        lam, s = 1.4, 0.7
        q = DegreeTripleLaw.poisson_product(lam, s)
        for seed in range(3):
            _, inst = er_instance(n=100, lam=lam, s=s, seed=seed)
            a = run_mp_general(inst, q, 4).log_scores
            b = run_mp_er(inst, lam, s, 4).log_scores
            assert np.max(np.abs(a - b)) < 1e-8

    def test_regular_law_is_uninformative(self):
        q = DegreeTripleLaw.point_mass(0, 0, 3)
        _, inst = sample_configuration_correlated(q, 40, 1)
        sc = run_mp_general(inst, q, 4).log_scores
        assert np.all(np.ptp(sc, axis=1) == 0)

    def test_isolated_pair_depth_one(self):
        d = {(0, 0, 0): 0.3, (1, 1, 0): 0.2, (0, 0, 1): 0.3, (1, 1, 1): 0.2}
        q = DegreeTripleLaw(d)
        inst = GraphPairInstance(Graph(3, [(1, 2)]), Graph(3, [(1, 2)]))
        sc = run_mp_general(inst, q, 1).log_scores
        marg00 = q.marginal[0, 0]
        assert sc[0, 0] == pytest.approx(math.log(0.3) - 2 * math.log(marg00))

    def test_configuration_instance_runs(self):
        d = {(0, 0, 1): 0.3, (1, 1, 1): 0.3, (1, 1, 0): 0.2, (0, 0, 2): 0.2}
        q = DegreeTripleLaw(d)
        _, inst = sample_configuration_correlated(q, 200, 2)
        sc = run_mp_general(inst, q, 5).log_scores
        assert not np.any(np.isnan(sc))
        assert np.mean(np.argmax(sc, axis=1) == inst.ground_truth) > 5 / inst.n


class TestWeightedMode:
    def _weighted(self, kind, rho=0.0, seed=0):
        colored, inst = er_instance(n=100, lam=1.6, s=0.8, seed=seed)
        model = WeightModel(kind, rho)
        return attach_weights(inst, colored, model, seed), model

    @pytest.mark.parametrize("kind", ["product", "gaussian_correlated"])
    def test_factorized_density_is_neutral_er(self, kind):
        inst, model = self._weighted(kind)
        a = run_mp_weighted(inst, (1.6, 0.8), model, 5).log_scores
        b = run_mp_er(inst, 1.6, 0.8, 5).log_scores
        assert np.max(np.abs(a - b)) < 1e-8

    def test_product_is_neutral_general(self):
        inst, model = self._weighted("product")
        q = DegreeTripleLaw.poisson_product(1.6, 0.8)
        a = run_mp_weighted(inst, q, model, 4).log_scores
        b = run_mp_general(inst, q, 4).log_scores
        assert np.max(np.abs(a - b)) < 1e-8

    def test_equal_weight_blocks_mismatched_edges(self):
        inst, model = self._weighted("equal_weight")
        score = next(iterate_scores(inst, (1.6, 0.8), 1, model, keep_state=True))
        wa, wb = _Side(inst.graph_a).slot_weights, _Side(inst.graph_b).slot_weights
        mismatch = wa[:, None] != wb[None, :]
        assert np.all(np.isneginf(score.state.pair[mismatch]))
        assert np.all(np.isfinite(score.state.pair[~mismatch]))

    def test_correlated_weights_help(self):
        inst, model = self._weighted("gaussian_correlated", 0.9, seed=4)
        truth = inst.ground_truth
        plain = run_mp_er(inst, 1.6, 0.8, 5).log_scores
        weighted = run_mp_weighted(inst, (1.6, 0.8), model, 5).log_scores
        ov = lambda sc: np.mean(np.argmax(sc, axis=1) == truth)
        assert ov(weighted) >= ov(plain)

    def test_missing_weights(self):
        _, inst = er_instance()
        with pytest.raises(DataError):
            run_mp_weighted(inst, (1.6, 0.8), WeightModel("product"), 2)
