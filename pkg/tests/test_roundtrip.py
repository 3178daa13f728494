import numpy as np
import pytest

from graphreal.generate import random_graph, random_problem
from graphreal.netcompile import assemble_global, check_vertices
from graphreal.realize import realize
from graphreal.roundtrip import reference_graph, roundtrip


@pytest.mark.parametrize("seed", range(25))
def test_generated_problem_satisfies_assumptions(seed):
    problem = random_problem(seed)
    assert 2 <= problem.n_vertices <= 8 and problem.m <= 12
    assert all(c.verdict for c in check_vertices(problem))
    compiled = assemble_global(problem)
    assert all(compiled.wellposedness.values())


def test_generator_is_deterministic_and_mixes_signs():
    a, b = random_problem(11), random_problem(11)
    assert [(e.x0, e.x1, e.lam_plus, e.lam_minus) for e in a.edges] == [
        (e.x0, e.x1, e.lam_plus, e.lam_minus) for e in b.edges
    ]
    alphas = {e.alpha for s in range(30) for e in random_problem(s).edges}
    assert alphas == {0, 1, 2}


def test_random_graph_connected_simple():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        edges = random_graph(rng, n, 12)
        assert len(set(edges)) == len(edges)
        seen, stack = {0}, [0]
        while stack:
            u = stack.pop()
            for a, b in edges:
                for x, y in ((a, b), (b, a)):
                    if x == u and y not in seen:
                        seen.add(y)
                        stack.append(y)
        assert seen == set(range(n))


@pytest.mark.parametrize("seed", range(25))
def test_roundtrip_recovers_edges(seed):
    problem = random_problem(seed)
    compiled = assemble_global(problem)
    rt = roundtrip(problem, compiled)
    assert rt.ok, rt.detail
    ref = reference_graph(problem, compiled)
    assert ref.pairs == frozenset(frozenset(p) for p in compiled.edge_components)
    # the realized network found first carries the same component pairs
    assert realize(compiled.system).network.edge_pairs() == set(ref.pairs)
