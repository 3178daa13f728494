"""End-to-end acceptance checks, one test per criterion.

Each test runs under a wall-clock limit and records a one-line PASS/FAIL
summary that is printed at the end of the session.
"""
import io
import itertools
import time
from contextlib import contextmanager
from math import comb, sqrt

import numpy as np
import pytest

from conftest import CRITERIA, DATA
from graphreal import cli
from graphreal.binmat import hat
from graphreal.flowconn import (
    BlockError,
    VertexBoundaryBlock,
    check_block,
    source_connectivity,
    transient_connectivity,
)
from graphreal.generate import random_problem
from graphreal.linedigraph import (
    RecognitionError,
    augment,
    build_classes,
    collapse,
    enumerate_small_digraphs,
    line_adjacency,
    line_digraph_adjacency,
    reconstruct,
    recognize,
)
from graphreal.netcompile import (
    WellPosednessError,
    assemble_global,
    build_contraction,
    classify,
    wellposed,
)
from graphreal.realize import (
    CONCURRENT,
    COUNTERCURRENT,
    EDGE_IDENTITY,
    NOT_REALIZABLE,
    REALIZABLE,
    realize,
)
from graphreal.serialize import dumps, graph_document, load


@contextmanager
def criterion(n: int, title: str, limit: float):
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield
        elapsed = time.perf_counter() - start
        if elapsed >= limit:
            status = f"FAIL (time {elapsed:.2f}s over {limit:g}s limit)"
            raise AssertionError(f"criterion {n} took {elapsed:.2f}s, limit {limit:g}s")
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        line = f"criterion {n} [{title}]: {status} in {elapsed:.2f}s (limit {limit:g}s)"
        CRITERIA[n] = line
        print(line)


def _rows(M):
    return np.asarray(M, dtype=np.int64)


# ---------------------------------------------------------------- 1
def test_criterion_1_worked_negative():
    with criterion(1, "worked example, negative", 1.0):
        bs = load(DATA / "worked_negative.json")
        res = realize(bs)
        vp, sd = res.partition, res.sources
        expected_A = np.zeros((6, 6), dtype=np.int64)
        expected_A[4] = [1, 1, 0, 0, 0, 1]
        expected_A[5] = [0, 0, 1, 1, 1, 0]
        assert np.array_equal(vp.line_adjacency, expected_A)
        assert np.array_equal(
            sd.connectivity, _rows([[1, 1, 0, 0], [1, 1, 1, 0], [0, 1, 1, 1], [0, 0, 1, 1]])
        )
        assert sd.k == 1
        att = res.attempts[0]
        assert np.array_equal(att.layout.incidence.plus, _rows([[1, 1, 0, 0, 0, 1], [0, 0, 1, 1, 1, 0], [0] * 6]))
        assert np.array_equal(
            att.layout.incidence.minus, _rows([[0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 1], [1, 1, 1, 1, 0, 0]])
        )
        assert np.array_equal(att.adjacency, _rows([[0, 1, 2], [1, 0, 2], [0, 0, 0]]))
        # 0-based: a12 -> {6}, a21 -> {5}; a13 -> {1,2}; a23 -> {3,4}
        assert att.edge_map == {(0, 1): ((5,), (4,)), (0, 2): ((0, 1), ()), (1, 2): ((2, 3), ())}
        assert res.status == NOT_REALIZABLE
        [diag] = res.diagnoses
        assert diag.tag == EDGE_IDENTITY
        assert diag.witness["components"] == (5, 4)
        assert all(q in bs.j_minus for q in diag.witness["components"])


# ---------------------------------------------------------------- 2
def test_criterion_2_worked_positive():
    with criterion(2, "worked example, positive", 1.0):
        res = realize(load(DATA / "worked_positive.json"))
        assert res.status == REALIZABLE
        net = res.network
        assert net.n_vertices == 3
        by_pair = {e.components: e for e in net.edges}
        assert set(by_pair) == {(0, 1), (2, 3), (4, 5)}
        e1, e3, e2 = by_pair[(0, 1)], by_pair[(2, 3)], by_pair[(4, 5)]
        # x=0 at v3 for {1,2} and {3,4}; x=0 at v1 for {5,6}
        assert e1.x0 == 2 and e3.x0 == 2 and e2.x0 == 0
        assert (e1.x1, e3.x1, e2.x1) == (0, 1, 1)
        assert (e1.kind, e3.kind, e2.kind) == (CONCURRENT, CONCURRENT, COUNTERCURRENT)

        # displayed per-vertex conditions: {component: coefficient} per row
        expected = {
            0: [{4: 1, 0: -1, 1: -1, 5: -1}],
            1: [{5: 1, 2: -1, 3: -1, 4: -1}],
            2: [{1: 1, 2: 1}, {0: 1}, {0: 1, 1: 1}, {2: 1, 3: 1}],
        }
        for vs in net.vertex_systems:
            got = []
            for r in range(len(vs.rows)):
                row = {q: vs.xi_out[r, i] for i, q in enumerate(vs.out_components) if vs.xi_out[r, i] != 0}
                row.update({q: vs.xi_in[r, i] for i, q in enumerate(vs.in_components) if vs.xi_in[r, i] != 0})
                got.append(row)
            key = lambda d: sorted(d.items())
            assert sorted(got, key=key) == sorted(expected[vs.vertex], key=key)


# ---------------------------------------------------------------- 3
GROUPING_A = _rows(
    [
        [0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0],
        [1, 1, 0, 1, 0, 0, 0],
        [0, 0, 1, 0, 1, 0, 0],
        [0, 0, 0, 0, 0, 0, 0],
        [0, 0, 1, 0, 1, 0, 0],
        [0, 0, 0, 0, 0, 0, 0],
    ]
)


def test_criterion_3_source_sink_grouping():
    with criterion(3, "source and sink grouping", 1.0):
        A = GROUPING_A
        cs = build_classes(A)
        a_plus, a_minus = collapse(A, cs)
        assert np.array_equal(a_plus, _rows([[1, 1, 0, 1, 0, 0, 0], [0, 0, 1, 0, 1, 0, 0], [0] * 7]))
        assert np.array_equal(a_minus, _rows([[0, 0, 1, 0, 0, 0, 0], [0, 0, 0, 1, 0, 1, 0], [0] * 7]))

        one = augment(a_plus, a_minus, [(0, 1, 4, 6)], [(5, 6)])
        assert np.array_equal(
            one.plus,
            _rows([[1, 1, 0, 1, 0, 0, 0], [0, 0, 1, 0, 1, 0, 0], [0] * 7, [0, 0, 0, 0, 0, 1, 1]]),
        )
        assert np.array_equal(
            one.minus,
            _rows([[0, 0, 1, 0, 0, 0, 0], [0, 0, 0, 1, 0, 1, 0], [1, 1, 0, 0, 1, 0, 1], [0] * 7]),
        )
        assert np.array_equal(
            one.plus @ one.minus.T, _rows([[0, 1, 2, 0], [1, 0, 1, 0], [0, 0, 0, 0], [0, 1, 1, 0]])
        )

        many = augment(a_plus, a_minus, [(0, 6), (1,), (4,)], [(6,), (5,)])
        assert np.array_equal(
            many.plus,
            _rows(
                [
                    [1, 1, 0, 1, 0, 0, 0],
                    [0, 0, 1, 0, 1, 0, 0],
                    [0] * 7,
                    [0] * 7,
                    [0] * 7,
                    [0, 0, 0, 0, 0, 0, 1],
                    [0, 0, 0, 0, 0, 1, 0],
                ]
            ),
        )
        assert np.array_equal(
            many.minus,
            _rows(
                [
                    [0, 0, 1, 0, 0, 0, 0],
                    [0, 0, 0, 1, 0, 1, 0],
                    [1, 0, 0, 0, 0, 0, 1],
                    [0, 1, 0, 0, 0, 0, 0],
                    [0, 0, 0, 0, 1, 0, 0],
                    [0] * 7,
                    [0] * 7,
                ]
            ),
        )
        assert np.array_equal(
            many.plus @ many.minus.T,
            _rows(
                [
                    [0, 1, 1, 1, 0, 0, 0],
                    [1, 0, 0, 0, 1, 0, 0],
                    [0] * 7,
                    [0] * 7,
                    [0] * 7,
                    [0, 0, 1, 0, 0, 0, 0],
                    [0, 1, 0, 0, 0, 0, 0],
                ]
            ),
        )
        for p in (one, many):
            assert np.array_equal(line_adjacency(p), A)


# ---------------------------------------------------------------- 4
def _violates_criterion(A) -> bool:
    if np.any(np.diag(A)):
        return True
    cols = A.T
    for a, b in itertools.combinations(cols, 2):
        if not np.array_equal(a, b) and int(a @ b) > 0:
            return True
    return False


def test_criterion_4_recognition_oracle():
    with criterion(4, "line-digraph recognition oracle", 30.0):
        count = 0
        for g in enumerate_small_digraphs(3, 4):
            count += 1
            inc = g.incidence()
            A = line_adjacency(inc)
            assert np.array_equal(A, line_digraph_adjacency(g))
            assert recognize(A)
            _, h = reconstruct(A)
            assert np.array_equal(line_digraph_adjacency(h), A)
        # multisets of 1..4 ordered pairs over n(n-1) pairs, n = 2, 3
        assert count == sum(comb(n * (n - 1) + a - 1, a) for n in (2, 3) for a in range(1, 5))

        rng = np.random.default_rng(2024)
        rejected = 0
        while rejected < 100:
            n = int(rng.integers(2, 8))
            A = (rng.random((n, n)) < rng.uniform(0.15, 0.6)).astype(np.int64)
            if not _violates_criterion(A):
                continue
            v = recognize(A)
            assert not v
            kind, *idx = v.witness
            if kind == "diagonal":
                assert A[idx[0], idx[0]] == 1
            else:
                j, k = idx
                assert not np.array_equal(A[:, j], A[:, k]) and int(A[:, j] @ A[:, k]) > 0
            with pytest.raises(RecognitionError):
                reconstruct(A)
            rejected += 1


# ---------------------------------------------------------------- 5
def test_criterion_5_roundtrip(tmp_path):
    with criterion(5, "round trip on random problems", 120.0):
        failures = []
        for seed in range(200):
            path = tmp_path / f"problem_{seed}.json"
            path.write_text(dumps(graph_document(random_problem(seed))), encoding="utf-8")
            out = io.StringIO()
            code = cli.main(["roundtrip", str(path), "--no-timestamp"], stdout=out)
            if code != 0:
                failures.append((seed, code, out.getvalue().strip().splitlines()[-1:]))
        assert not failures, failures[:5]


# ---------------------------------------------------------------- 6
def _random_block(rng):
    k = int(rng.integers(1, 6))
    n_out = int(rng.integers(1, 6))
    n_in = int(rng.integers(0, 6))
    density = rng.uniform(0.2, 0.9)

    def draw(shape):
        vals = rng.integers(-4, 5, size=shape).astype(float if rng.random() < 0.3 else np.int64)
        return vals * (rng.random(shape) < density)

    psi_out, psi_in = draw((k, n_out)), draw((k, n_in))
    if rng.random() < 0.3:  # plant a dense row
        r = int(rng.integers(k))
        psi_out[r] = rng.integers(1, 4, size=n_out)
        psi_in[r] = rng.integers(1, 4, size=n_in)
    return psi_out, psi_in


def test_criterion_6_connectivity():
    with criterion(6, "flow connectivity products", 10.0):
        rng = np.random.default_rng(6)
        built = dense = 0
        while built < 500:
            psi_out, psi_in = _random_block(rng)
            try:
                b = VertexBoundaryBlock(psi_out, psi_in)
            except BlockError:
                continue
            built += 1
            k, n_out, n_in = psi_out.shape[0], psi_out.shape[1], psi_in.shape[1]
            if n_in:
                C = transient_connectivity(b)
                direct = np.zeros((n_out, n_in), dtype=np.int64)
                for l in range(n_out):
                    for j in range(n_in):
                        direct[l, j] = int(any(psi_out[r, l] != 0 and psi_in[r, j] != 0 for r in range(k)))
            else:
                C = source_connectivity(b)
                direct = np.zeros((n_out, n_out), dtype=np.int64)
                for l in range(n_out):
                    for j in range(n_out):
                        direct[l, j] = int(any(psi_out[r, l] != 0 and psi_out[r, j] != 0 for r in range(k)))
            assert np.array_equal(C, direct)
            full = np.hstack([psi_out, psi_in]) != 0
            if full.all(axis=1).any():
                dense += 1
                assert check_block(b)
        assert dense > 0


# ---------------------------------------------------------------- 7
def test_criterion_7_wellposedness():
    with criterion(7, "well-posedness and solved map", 10.0):
        rng = np.random.default_rng(7)
        checked = rejected = 0
        seed = 0
        while checked < 200:
            problem = random_problem(seed, max_vertices=6, max_edges=8)
            seed += 1
            cls = classify(problem)
            for v, phi in problem.phi.items():
                asm = build_contraction(problem, cls, v)
                wp = wellposed(phi, asm)
                assert wp.ok
                phi_f = np.asarray(phi, dtype=float)
                A = phi_f @ np.asarray(asm.F_out, dtype=float)
                B = phi_f @ np.asarray(asm.F_in, dtype=float)
                u_in = rng.normal(size=B.shape[1])
                u_out = wp.solved_map @ u_in
                residual = np.linalg.norm(A @ u_out + B @ u_in)
                scale = np.linalg.norm(A) * np.linalg.norm(u_out) + np.linalg.norm(B) * np.linalg.norm(u_in)
                assert residual <= 1e-9 * max(scale, 1.0)
                checked += 1

                # singular construction: rows of Phi F_out made dependent
                F_out = np.asarray(asm.F_out, dtype=float)
                if A.shape[0] >= 2:
                    bad = phi_f.copy()
                    bad[1] = 2.0 * bad[0]
                else:
                    null = np.linalg.svd(F_out.T)[2][-1]
                    bad = null[None, :]
                assert not wellposed(bad, asm).ok
                rejected += 1
        assert rejected >= 200

        # the compiler refuses an ill-posed problem outright
        problem = random_problem(0)
        v = next(iter(problem.phi))
        phi = np.asarray(problem.phi[v], dtype=float)
        if phi.shape[0] >= 2:
            phi[1] = phi[0]
        else:
            phi[:] = 0.0
        broken = type(problem)(problem.n_vertices, problem.edges, {**problem.phi, v: phi}, problem.labels)
        with pytest.raises(WellPosednessError):
            assemble_global(broken)


# ---------------------------------------------------------------- 8
def test_criterion_8_saint_venant_star():
    with criterion(8, "Saint-Venant star", 1.0):
        g, H = 10.0, (1.0, 4.0, 9.0)
        compiled = assemble_global(load(DATA / "saint_venant_star.json"))
        center = 1
        assert compiled.classification.k[center] == 2 * 3 - 2
        rows = list(compiled.row_blocks[center])
        xo = np.asarray(compiled.system.xi_out, dtype=float)[rows]
        xi = np.asarray(compiled.system.xi_in, dtype=float)[rows]
        idx = compiled.classification.index
        s = [sqrt(g * h) for h in H]
        # outgoing: u^j(0) for j = 2, 3 through F^j
        out_cols = [idx(1, 1), idx(1, 2), idx(2, 1), idx(2, 2)]
        expected_out = np.array(
            [[H[1], H[1], 0, 0], [s[1], -s[1], 0, 0], [0, 0, H[2], H[2]], [0, 0, s[2], -s[2]]]
        )
        assert np.allclose(xo[:, out_cols], expected_out, rtol=0, atol=1e-12)
        # incoming: u^1(1) through F^1, once per outgoing edge
        in_cols = [idx(0, 1), idx(0, 2)]
        expected_in = -np.array([[H[0], H[0]], [s[0], -s[0]]] * 2)
        assert np.allclose(xi[:, in_cols], expected_in, rtol=0, atol=1e-12)
        other = [c for c in range(xo.shape[1]) if c not in out_cols + in_cols]
        assert not hat(xo[:, other]).any() and not hat(xi[:, other]).any()
