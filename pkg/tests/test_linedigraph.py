import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphreal.binmat import StructureError
from graphreal.linedigraph import (
    SINK,
    SOURCE,
    TRANSIENT,
    IncidencePair,
    MultiDigraph,
    RecognitionError,
    build_classes,
    enumerate_small_digraphs,
    host_adjacency,
    line_adjacency,
    line_digraph_adjacency,
    reconstruct,
    recognize,
)


@st.composite
def multi_digraphs(draw):
    n = draw(st.integers(2, 6))
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1])
    arcs = draw(st.lists(pairs, min_size=1, max_size=10))
    return MultiDigraph(n, tuple(arcs))


@given(multi_digraphs())
@settings(max_examples=200, deadline=None)
def test_incidence_product_is_line_digraph(g):
    A = line_adjacency(g.incidence())
    assert np.array_equal(A, line_digraph_adjacency(g))
    assert recognize(A)


@given(multi_digraphs())
@settings(max_examples=200, deadline=None)
def test_reconstruction_preserves_line_digraph(g):
    A = line_digraph_adjacency(g)
    pair, h = reconstruct(A)
    assert np.array_equal(line_digraph_adjacency(h), A)
    AG, h2 = host_adjacency(pair)
    assert h2 == h
    assert AG.sum() == g.n_arcs


def test_roles_and_adjacency():
    g = MultiDigraph(3, ((0, 1), (0, 1), (1, 2)))
    assert g.roles == (SOURCE, TRANSIENT, SINK)
    assert g.adjacency().tolist() == [[0, 0, 0], [2, 0, 0], [0, 1, 0]]


def test_loops_and_bad_incidence_rejected():
    with pytest.raises(StructureError):
        MultiDigraph(2, ((1, 1),))
    with pytest.raises(StructureError):
        IncidencePair(np.array([[1, 1], [0, 0]]), np.array([[0, 0], [1, 0]]))


def test_recognize_witnesses():
    v = recognize(np.array([[1, 0], [0, 0]]))
    assert not v and v.witness == ("diagonal", 0)
    A = np.array([[0, 1, 1], [0, 0, 1], [0, 0, 0]])
    v = recognize(A)
    assert not v and v.witness[0] == "columns"
    with pytest.raises(RecognitionError):
        build_classes(A)


def test_class_structure_of_path():
    # arcs 0: a->b, 1: b->c
    A = line_digraph_adjacency(MultiDigraph(3, ((0, 1), (1, 2))))
    cs = build_classes(A)
    assert cs.M == cs.N == 1
    assert cs.source_arcs == (0,) and cs.sink_arcs == (1,)


def test_enumeration_bounds_and_count():
    with pytest.raises(ValueError):
        list(enumerate_small_digraphs(5, 2))
    # two labelled vertices, one or two arcs: {ab},{ba},{ab,ab},{ab,ba},{ba,ba}
    assert len(list(enumerate_small_digraphs(2, 2))) == 5
