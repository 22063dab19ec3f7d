import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from treeembed.graph import Digraph, OrientedTree

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def oriented_trees(draw, min_n=1, max_n=40):
    """Random labelled oriented tree: parent[v] < v, arbitrary orientations, random root."""
    n = draw(st.integers(min_n, max_n))
    parents = [draw(st.integers(0, v - 1)) for v in range(1, n)]
    flips = draw(st.lists(st.booleans(), min_size=n - 1, max_size=n - 1))
    arcs = [(p, v) if f else (v, p) for v, (p, f) in enumerate(zip(parents, flips), start=1)]
    root = draw(st.integers(0, n - 1))
    return OrientedTree.from_arcs(n, arcs, root=root)


@st.composite
def digraphs(draw, min_n=1, max_n=9, p=None):
    n = draw(st.integers(min_n, max_n))
    bits = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    adj = np.array(bits, dtype=bool).reshape(n, n)
    np.fill_diagonal(adj, False)
    return Digraph.from_adjacency(adj)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def oriented_regular_digraph(n, r, seed):
    """r-in/r-out digraph with no loops and no antiparallel pairs (union of r permutations)."""
    rng = np.random.default_rng(seed)
    adj = np.zeros((n, n), dtype=bool)
    for _ in range(r):
        while True:
            pi = rng.permutation(n)
            idx = np.arange(n)
            if ((pi != idx).all() and (pi[pi] != idx).all()
                    and not adj[idx, pi].any() and not adj[pi, idx].any()):
                break
        adj[idx, pi] = True
    return adj


def shift_instance(k, per_branch, seed, pattern="++"):
    """Tree, allocation and diamonds on the complete digraph K_k for weight shifting.

    Every diamond gets ``per_branch`` tree paths a -> b -> c on each branch.
    Each path hangs off the root through a connector vertex.
    """
    from treeembed.expanders import p_connected_subgraph
    from treeembed.graph import Allocation

    rng = np.random.default_rng(seed)
    R = Digraph.complete(k)
    pc = p_connected_subgraph(R, pattern, alpha=0.25, check_degree=False)
    fwd_ab, fwd_bc = pattern[0] == "+", pattern[1] == "+"
    arcs, target = [], [0]
    branch_index = {}
    for i, dmd in enumerate(pc.diamonds):
        sides = ([], [])
        for side in (0, 1):
            for _ in range(per_branch):
                z, a, b, c = len(target), len(target) + 1, len(target) + 2, len(target) + 3
                za = [v for v in range(k) if v not in (0, dmd.prefix)]
                target += [int(rng.choice(za)), dmd.prefix, dmd.middle[side], dmd.suffix]
                arcs += [(0, z), (z, a), (a, b) if fwd_ab else (b, a), (b, c) if fwd_bc else (c, b)]
                sides[side].append((a, b, c))
        branch_index[i] = sides
    T = OrientedTree.from_arcs(len(target), arcs)
    return T, R, Allocation(np.array(target), k), pc.diamonds, branch_index


def random_zero_sum(k, total, rng):
    """Integer vector with zero sum and at most ``total`` units moved."""
    delta = np.zeros(k, dtype=np.int64)
    for _ in range(int(rng.integers(0, total + 1))):
        a, b = rng.choice(k, size=2, replace=False)
        delta[a] += 1
        delta[b] -= 1
    return delta


SPANNING_N = 2400


def dense_host(n, p, seed):
    rng = np.random.default_rng(seed)
    A = rng.random((n, n)) < p
    np.fill_diagonal(A, False)
    return Digraph.from_adjacency(A)


@pytest.fixture(scope="session")
def spanning_partition():
    """p = 0.8 host on 2400 vertices, k = 8 clusters and 16 vertices forced into V0."""
    from treeembed.graph import ParamHierarchy
    from treeembed.regularity import build_cluster_partition

    params = ParamHierarchy.default_for(SPANNING_N, 0.15)
    G = dense_host(SPANNING_N, 0.8, 100)
    forced = np.random.default_rng(101).choice(SPANNING_N, 16, replace=False)
    dec, red = build_cluster_partition(G, params, seed=0, forced_exceptional=forced)
    return G, dec, red, params


@pytest.fixture
def acceptance_line(request, capsys):
    """record(number, ok, detail): prints one line and keeps it for the session summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return record


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
