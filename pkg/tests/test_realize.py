import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import DATA
from graphreal.realize import (
    BUDGET_ENV,
    BUDGET_EXHAUSTED,
    DEFAULT_BUDGET,
    EDGE_IDENTITY,
    LINE_DIGRAPH,
    NOT_REALIZABLE,
    ODD_SINK_COUNT,
    OUTGOING_NONZERO,
    PAIR_FORM,
    REALIZABLE,
    SINKS_EXHAUSTED,
    BoundarySystem,
    check_assumptions,
    check_conditions,
    default_budget,
    iter_realizations,
    pairings,
    realize,
    set_partitions,
)
from graphreal.serialize import load

BELL = [1, 1, 2, 5, 15, 52, 203]


def _system(xo, xi, j_plus, speeds=None):
    size = len(xo)
    j_minus = tuple(q for q in range(size) if q not in j_plus)
    speeds = speeds or tuple(range(size, 0, -1))
    return BoundarySystem(np.array(xo, dtype=object), np.array(xi, dtype=object), tuple(j_plus), j_minus, speeds)


def _two_edge_path():
    """Source s -> transient t -> sink z, two components per arc.

    Components 0, 1 run s -> t, components 2, 3 run t -> z; all in J+.
    """
    xo = [
        [1, 1, 0, 0],  # at s
        [1, -1, 0, 0],
        [0, 0, 1, 1],  # at t
        [0, 0, 1, 0],
    ]
    xi = [
        [0, 0, 0, 0],
        [0, 0, 0, 0],
        [-1, -1, 0, 0],
        [-1, 0, 0, 0],
    ]
    return _system(xo, xi, (0, 1, 2, 3))


def test_pairings_count_is_double_factorial():
    for n in range(0, 9, 2):
        expected = math.prod(range(n - 1, 0, -2)) if n else 1
        got = list(pairings(range(n)))
        assert len(got) == expected
        assert got == sorted(got)
    assert list(pairings([0, 1, 2])) == []


def test_set_partitions_count_is_bell():
    for n, bell in enumerate(BELL):
        parts = list(set_partitions(range(n)))
        assert len(parts) == bell
        assert len({frozenset(map(frozenset, p)) for p in parts}) == bell


def test_system_validation():
    with pytest.raises(ValueError):
        _system([[1]], [[0]], (0,))  # odd size
    with pytest.raises(ValueError):
        BoundarySystem(np.eye(2), np.zeros((2, 2)), (0,), (0,), (1, 2))
    with pytest.raises(ValueError):
        _system(np.eye(2).tolist(), np.zeros((2, 2)).tolist(), (0, 1), speeds=(1, 0))


def test_path_realizes_with_one_sink():
    res = realize(_two_edge_path())
    assert res.status == REALIZABLE
    net = res.network
    assert sorted(net.roles) == ["sink", "source", "transient"]
    assert net.edge_pairs() == {frozenset({0, 1}), frozenset({2, 3})}
    assert res.successes == res.partitions_tried == 1


def test_outgoing_zero_column_is_reported():
    bs = _two_edge_path()
    xo = bs.xi_out.copy()
    xo[:, 3] = Fraction(0)
    res = realize(BoundarySystem(xo, bs.xi_in, bs.j_plus, bs.j_minus, bs.speeds))
    assert res.status == NOT_REALIZABLE
    assert res.diagnoses[0].tag == OUTGOING_NONZERO
    assert res.diagnoses[0].witness["column"] == 3


def test_non_line_digraph_is_reported():
    # arc 2 enters at a row that also feeds arc 0, while arc 3 enters only there
    xo = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    xi = [[0, 0, 1, 1], [0, 0, 1, 0], [0, 0, 0, 0], [0, 0, 0, 0]]
    report = check_assumptions(_system(xo, xi, (0, 1, 2, 3)))
    assert not report.ok
    assert report.diagnoses[0].tag == LINE_DIGRAPH


def test_odd_sink_count():
    bs = _two_edge_path()
    xo = bs.xi_out.copy()
    xi = bs.xi_in.copy()
    # component 1 now ends in a sink of its own; arc 2/3 at t stay
    xi[2, 1] = xi[3, 1] = Fraction(0)
    res = realize(BoundarySystem(xo, xi, bs.j_plus, bs.j_minus, bs.speeds))
    assert res.status == NOT_REALIZABLE
    assert res.diagnoses[0].tag == ODD_SINK_COUNT


def test_budget_zero_exhausts_and_env_default(monkeypatch):
    res = realize(_two_edge_path(), budget=0)
    assert res.status == BUDGET_EXHAUSTED and not res.search_complete
    monkeypatch.delenv(BUDGET_ENV, raising=False)
    assert default_budget() == DEFAULT_BUDGET
    monkeypatch.setenv(BUDGET_ENV, "0")
    assert realize(_two_edge_path()).status == BUDGET_EXHAUSTED


def test_sink_free_system_ignores_budget():
    res = realize(load(DATA / "worked_positive.json"), budget=0)
    assert res.status == REALIZABLE


def test_concurrent_pair_with_equal_speeds_fails():
    bs = _two_edge_path()
    same = BoundarySystem(bs.xi_out, bs.xi_in, bs.j_plus, bs.j_minus, (2, 2, 1, 1))
    res = realize(same)
    assert res.status == NOT_REALIZABLE
    tags = [d.tag for d in res.diagnoses]
    assert tags == [EDGE_IDENTITY, EDGE_IDENTITY, SINKS_EXHAUSTED]
    assert res.diagnoses[0].witness["components"] == (0, 1)


def test_iter_realizations_matches_success_count():
    bs = load(DATA / "worked_positive.json")
    found = list(iter_realizations(bs))
    assert len(found) == realize(bs).successes == 1


def test_check_conditions_pair_forms():
    bs = _two_edge_path()
    AG = np.array([[0, 0, 0], [3, 0, 0], [0, 1, 0]])
    fails = check_conditions(bs, AG, {})
    assert [d.tag for d in fails] == [PAIR_FORM, PAIR_FORM]
    assert fails[0].witness == {"vertices": (0, 1), "counts": (0, 3)}
    # opposite directions in a concurrent pair
    mixed = BoundarySystem(bs.xi_out, bs.xi_in, (0, 2, 3), (1,), bs.speeds)
    AG = np.array([[0, 0], [2, 0]])
    [d] = check_conditions(mixed, AG, {(0, 1): ((), (0, 1))})
    assert d.tag == EDGE_IDENTITY and "opposite" in d.message
