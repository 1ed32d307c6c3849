import itertools

import numpy as np
import pytest

from bepo.errors import InvalidSpec, OutOfRange
from bepo.grid import (
    GridSpec,
    NodeClass,
    build_grid,
    classify_node,
    index_of,
    invert_index,
)


def test_small_symmetric_grid():
    g = build_grid(GridSpec(x_bar=1.0, y_bar=1.0, b=1.0, lam=1.0, I=3, J=3, K=3))
    for axis in (g.xt, g.yt, g.zt):
        assert list(axis) == [-1.0, 0.0, 1.0]
    ci, cj, ck = g.center
    assert (ci, cj, ck) == (2, 2, 2)
    assert g.xt[ci - 1] == 0.0


def test_spacing_formula():
    spec = GridSpec(x_bar=3.5, lam=1e-3, I=5, J=5, K=5)
    assert spec.dx == pytest.approx(2 * 3.5e-3 / 4)


def test_paper_scale_spacing_implies_129_nodes():
    # dx of 5.47e-5 at lam*x_bar = 3.5e-3 corresponds to I - 1 = 128
    target_dx = 5.47e-5
    I = round(2 * 1e-3 * 3.5 / target_dx) + 1
    assert I == 129
    spec = GridSpec(x_bar=3.5, lam=1e-3, I=129, J=129, K=129)
    assert spec.dx == pytest.approx(target_dx, rel=5e-3)


def test_invalid_specs():
    with pytest.raises(InvalidSpec):
        GridSpec(I=4)
    with pytest.raises(InvalidSpec):
        GridSpec(J=1)
    with pytest.raises(InvalidSpec):
        GridSpec(lam=0.0)


def test_index_of_values():
    assert index_of(1, 1, 1, J=5, K=5) == 1
    assert index_of(2, 1, 1, J=5, K=5) == 26
    assert index_of(5, 5, 5, J=5, K=5) == 125


def test_index_of_bijection_and_inverse():
    I = J = K = 5
    seen = set()
    for i, j, k in itertools.product(range(1, I + 1), range(1, J + 1), range(1, K + 1)):
        l = index_of(i, j, k, J=J, K=K, I=I)
        assert 1 <= l <= I * J * K
        assert l not in seen
        seen.add(l)
        assert invert_index(l, J=J, K=K) == (i, j, k)
    assert len(seen) == I * J * K


def test_index_of_range_errors():
    with pytest.raises(OutOfRange):
        index_of(0, 1, 1, J=5, K=5)
    with pytest.raises(OutOfRange):
        index_of(1, 6, 1, J=5, K=5)
    with pytest.raises(OutOfRange):
        index_of(6, 1, 1, J=5, K=5, I=5)


def test_classification_examples():
    assert classify_node(3, 3, 3, 5, 5, 5) is NodeClass.INTERIOR
    assert classify_node(2, 1, 4, 5, 5, 5) is NodeClass.NEUMANN_Y
    assert classify_node(1, 3, 5, 5, 5, 5) is NodeClass.EDGE_X_MINUS


def test_classification_partition_and_cardinalities():
    for I, J, K in ((3, 3, 3), (5, 5, 5), (5, 7, 3), (7, 5, 9)):
        counts = {c: 0 for c in NodeClass}
        for i, j, k in itertools.product(
            range(1, I + 1), range(1, J + 1), range(1, K + 1)
        ):
            counts[classify_node(i, j, k, I, J, K)] += 1
        assert sum(counts.values()) == I * J * K
        assert counts[NodeClass.INTERIOR] == (I - 2) * (J - 2) * (K - 2)
        assert counts[NodeClass.NEUMANN_Y] == 2 * I * K
        assert counts[NodeClass.FACE_Z_MINUS] == (I - 2) * (J - 2)
        assert counts[NodeClass.FACE_Z_PLUS] == (I - 2) * (J - 2)
        assert counts[NodeClass.FACE_X_MINUS] == (J - 2) * (K - 2)
        assert counts[NodeClass.FACE_X_PLUS] == (J - 2) * (K - 2)
        assert counts[NodeClass.EDGE_X_MINUS] == 2 * (J - 2)
        assert counts[NodeClass.EDGE_X_PLUS] == 2 * (J - 2)


def test_classify_out_of_range():
    with pytest.raises(OutOfRange):
        classify_node(0, 1, 1, 5, 5, 5)


def test_reflection_negates_coordinates_exactly():
    g = build_grid(GridSpec(x_bar=3.5, y_bar=2.5, b=1.0, lam=1e-3, I=9, J=7, K=5))
    for axis in (g.xt, g.yt, g.zt, g.x, g.y, g.z):
        assert np.array_equal(axis[::-1], -axis)


def test_unscaled_coordinates():
    spec = GridSpec(x_bar=2.0, lam=1e-2, I=5, J=5, K=5)
    g = build_grid(spec)
    assert g.x[0] == pytest.approx(-2.0)
    assert g.x[-1] == pytest.approx(2.0)
    assert g.xt[0] == pytest.approx(-2.0e-2)
