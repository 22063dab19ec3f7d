import json

import numpy as np
import pytest

from treeembed.errors import Infeasible, InvalidArgument, TreeEmbedError
from treeembed.graph import Digraph, OrientedTree, min_semidegree, verify_embedding
from treeembed.pipeline import (
    CSV_FIELDS,
    ExperimentConfig,
    TrialRecord,
    choose_route,
    default_degree_cap,
    embed_almost_spanning,
    embed_spanning_tree,
    generate_host,
    host_hierarchy,
    records_to_csv,
    run_experiments,
    run_trial,
)
from treeembed.trees import disjoint_bare_paths, disjoint_leaf_edges, random_tree


def path(n):
    return OrientedTree.from_arcs(n, [(i, i + 1) for i in range(n - 1)], 0)


def spider(legs, length, extra=0):
    """Centre 0 with ``legs`` legs of ``length`` arcs, plus one leg of ``extra`` arcs."""
    arcs, nxt = [], 1
    for leg_len in [length] * legs + ([extra] if extra else []):
        prev = 0
        for _ in range(leg_len):
            arcs.append((prev, nxt))
            prev, nxt = nxt, nxt + 1
    return OrientedTree.from_arcs(nxt, arcs, 0)


class TestGenerateHost:
    def test_independent_arcs_semidegree(self):
        G = generate_host(2000, 0.15, seed=0)
        assert min_semidegree(G) >= 1300

    def test_near_complete(self):
        G = generate_host(200, 0.49, seed=1)
        assert min_semidegree(G) >= 198
        assert G.arc_count >= 0.99 * 200 * 199

    def test_planted_minimum_is_exact(self):
        G = generate_host(100, 0.1, "planted-minimum", seed=2)
        assert min_semidegree(G) == 60

    @pytest.mark.parametrize("alpha", [0.0, 0.5, -0.1])
    def test_bad_alpha(self, alpha):
        with pytest.raises(InvalidArgument):
            generate_host(50, alpha)

    def test_unknown_model(self):
        with pytest.raises(InvalidArgument):
            generate_host(50, 0.1, "erdos")

    def test_infeasible_order(self):
        with pytest.raises(InvalidArgument):
            generate_host(1, 0.2)

    def test_seeded(self):
        a = generate_host(120, 0.2, seed=9)
        b = generate_host(120, 0.2, seed=9)
        assert np.array_equal(a.adj, b.adj)


def test_degree_cap():
    assert default_degree_cap(2000) == 13
    assert default_degree_cap(10) == 3


def test_host_hierarchy_reads_density():
    G = generate_host(600, 0.2, "planted-minimum", seed=0)
    assert host_hierarchy(G).alpha == pytest.approx(0.2, abs=0.01)
    sparse = Digraph.from_adjacency(np.roll(np.eye(6, dtype=bool), 1, axis=1))
    with pytest.raises(InvalidArgument):
        host_hierarchy(sparse)


class TestDispatch:
    def test_path_goes_to_paths(self):
        T = path(2400)
        choice = choose_route(T)
        assert choice.route == "paths"
        assert choice.leaf_edges == 2
        assert choice.bare_paths == len(disjoint_bare_paths(T, 7)) == 299

    def test_spider_with_short_legs_goes_to_leaves(self):
        T = spider(100, 3, extra=699)
        assert T.n == 1000
        choice = choose_route(T)
        assert choice.route == "leaves"
        assert choice.leaf_edges == len(disjoint_leaf_edges(T)) == 101

    def test_star_of_short_legs_has_no_route(self):
        # every leg has 2 arcs: no bare path of order 7, and leaves below the raised bar
        T = spider(50, 2)
        with pytest.raises(Infeasible) as info:
            choose_route(T, leaf_threshold=0.9)
        assert info.value.certificate == {"leaf_edges": 50, "bare_paths": 0}

    @pytest.mark.parametrize("seed", range(20))
    def test_route_meets_its_own_threshold(self, seed):
        T = random_tree(1200, 5, "uniform", seed=seed)
        choice = choose_route(T)
        if choice.route == "leaves":
            assert len(disjoint_leaf_edges(T)) >= choice.leaf_needed
        else:
            assert len(disjoint_bare_paths(T, 7)) >= choice.paths_needed


class TestAlmostSpanning:
    @pytest.mark.parametrize("seed", range(3))
    def test_complete_host_always_works(self, seed):
        n = 690
        G = Digraph.from_adjacency(~np.eye(n, dtype=bool))
        T = random_tree(600, 6, "uniform", seed=seed)
        emb = embed_almost_spanning(G, T, 0.15, seed=seed)
        assert verify_embedding(G, T, emb)
        assert emb.log["route"] == "approx"
        assert sum(emb.log["loads"]) == T.n

    @pytest.mark.parametrize("seed", range(2))
    def test_random_host(self, seed):
        G = generate_host(1100, 0.15, seed=seed)
        T = random_tree(1000, 6, "uniform", seed=seed)
        emb = embed_almost_spanning(G, T, 0.1, seed=seed)
        assert verify_embedding(G, T, emb)
        assert set(emb.log["stage_seconds"]) == {"partition", "allocation", "embedding",
                                                 "verification"}

    def test_tree_too_big(self):
        G = generate_host(300, 0.2, seed=0)
        T = random_tree(280, 4, "uniform", seed=0)
        with pytest.raises(InvalidArgument) as info:
            embed_almost_spanning(G, T, 0.2)
        assert info.value.pipeline_stage == "precondition"
        assert info.value.exit_code == 2

    def test_degree_cap_enforced(self):
        G = generate_host(300, 0.2, seed=0)
        T = spider(20, 1)
        with pytest.raises(InvalidArgument, match="max degree"):
            embed_almost_spanning(G, T, 0.2)

    def test_single_vertex(self):
        G = generate_host(10, 0.3, seed=0)
        emb = embed_almost_spanning(G, OrientedTree.from_arcs(1, [], 0), 0.3)
        assert len(emb.image) == 1


class TestSpanning:
    def test_orders_must_match(self):
        G = generate_host(100, 0.2, seed=0)
        with pytest.raises(InvalidArgument):
            embed_spanning_tree(G, path(99), 0.2)

    def test_unknown_route(self):
        G = generate_host(100, 0.2, seed=0)
        with pytest.raises(InvalidArgument):
            embed_spanning_tree(G, path(100), 0.2, route="both")

    def test_auto_route(self):
        n = 2400
        G = generate_host(n, 0.15, seed=3)
        T = random_tree(n, 5, "leaf-rich", seed=3)
        emb = embed_spanning_tree(G, T, 0.15, seed=3)
        assert verify_embedding(G, T, emb)
        assert emb.log["route"] == choose_route(T).route == "leaves"
        assert emb.log["allocation_checks"] == {}
        assert len(set(emb.log["loads"])) == 1


def test_dispatch_success_rate():
    good = 0
    for seed in range(20):
        G = generate_host(2400, 0.15, seed=seed)
        T = random_tree(2400, 5, "uniform", seed=seed)
        try:
            emb = embed_spanning_tree(G, T, 0.15, seed=seed)
        except TreeEmbedError:
            continue
        good += bool(verify_embedding(G, T, emb))
        assert emb.log["route"] == choose_route(T).route
    assert good >= 17


class TestExperiments:
    def test_empty_run_writes_header(self, tmp_path):
        cfg = ExperimentConfig(n=50, alpha=0.2, trials=0)
        res = run_experiments(cfg, tmp_path / "run")
        assert res.records == [] and res.summary["trials"] == 0
        text = (tmp_path / "run.csv").read_text()
        assert text == ",".join(CSV_FIELDS) + "\n"
        data = json.loads((tmp_path / "run.json").read_text())
        assert data["records"] == [] and data["config"]["trials"] == 0

    def test_broken_params_are_all_precondition(self):
        cfg = ExperimentConfig(n=200, alpha=0.2, trials=4, params={"eps": 0.6, "d": 0.3})
        res = run_experiments(cfg)
        assert res.summary["successes"] == 0
        assert res.summary["failure_stages"] == {"precondition": 4}
        assert all(r.message.startswith("InvalidArgument") for r in res.records)

    def test_small_approx_run(self, tmp_path):
        cfg = ExperimentConfig(n=1100, alpha=0.1, trials=3, max_degree=6)
        res = run_experiments(cfg, tmp_path / "small")
        assert res.summary["success_rate"] == 1.0
        assert res.summary["mean_balance_deviation"] < 0.2
        rows = (tmp_path / "small.csv").read_text().strip().split("\n")
        assert len(rows) == 4

    def test_twenty_seed_run(self):
        cfg = ExperimentConfig(n=2200, alpha=0.1, trials=20, max_degree=6, workers=4)
        assert run_experiments(cfg).summary["success_rate"] >= 0.95

    def test_determinism(self):
        cfg = ExperimentConfig(n=1100, alpha=0.1, trials=1, max_degree=6)
        a = run_trial(cfg, 5).to_dict(with_time=False)
        b = run_trial(cfg, 5).to_dict(with_time=False)
        assert a["outcome"] == "success"
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_workers_match_serial(self):
        cfg = ExperimentConfig(n=1100, alpha=0.1, trials=2, max_degree=6)
        par = ExperimentConfig(n=1100, alpha=0.1, trials=2, max_degree=6, workers=2)
        strip = lambda res: [r.to_dict(with_time=False) for r in res.records]  # noqa: E731
        assert strip(run_experiments(cfg)) == strip(run_experiments(par))

    def test_config_validation(self):
        with pytest.raises(InvalidArgument):
            ExperimentConfig(n=10, alpha=0.2, mode="exact")
        with pytest.raises(InvalidArgument):
            ExperimentConfig(n=10, alpha=0.2, mode="spanning-auto", tree_n=9)
        with pytest.raises(InvalidArgument):
            ExperimentConfig(n=10, alpha=0.2, trials=-1)
        assert ExperimentConfig(n=110, alpha=0.1).tree_order == 100

    def test_success_requires_verification(self):
        with pytest.raises(InvalidArgument):
            TrialRecord(0, "success", verified=False)

    def test_csv_layout(self):
        recs = [TrialRecord(1, "failure", "partition", message="x")]
        lines = records_to_csv(recs).strip().split("\n")
        assert lines[0].split(",") == CSV_FIELDS
        assert lines[1].startswith("1,1,failure,partition")
