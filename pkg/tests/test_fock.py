import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockmarket import (CapacityError, NumberState, SpaceMismatchError,
                        build_space, commutator, expectation, identity,
                        ladder, matrix_element, number_op, zero_operator)


def test_dimensions():
    assert build_space([2]).dim == 3
    assert build_space([2, 3]).dim == 12
    assert build_space([0]).dim == 1


def test_index_roundtrip():
    s = build_space([2, 1, 3])
    seen = set()
    for j in range(s.dim):
        occ = s.occupation_of(j)
        assert s.index_of(occ) == j
        seen.add(occ)
    assert len(seen) == s.dim


def test_build_errors():
    with pytest.raises(ValueError):
        build_space([])
    with pytest.raises(CapacityError):
        build_space([100, 100, 100], max_dim=10_000)
    with pytest.raises(ValueError):
        build_space([2, -1])
    s = build_space([2])
    with pytest.raises(ValueError):
        ladder(s, 1, "lower")
    with pytest.raises(ValueError):
        ladder(s, 0, "sideways")


def test_lower_examples():
    s = build_space([3])
    a = ladder(s, 0, "lower")
    # vacuum annihilated
    assert a.matrix[:, 0].nnz == 0
    # lower on occupation 2 gives sqrt(2) on occupation 1
    assert a.matrix[1, 2] == pytest.approx(np.sqrt(2.0))
    # raise on occupation 1 gives sqrt(2) on occupation 2
    ad = ladder(s, 0, "raise")
    assert ad.matrix[2, 1] == pytest.approx(np.sqrt(2.0))
    # raise annihilates the cutoff state
    assert ad.matrix[:, 3].nnz == 0


def test_canonical_commutator_on_interior():
    s = build_space([4, 3])
    a = ladder(s, 0, "lower")
    ad = ladder(s, 0, "raise")
    dev = commutator(a, ad) - identity(s)
    interior = s.interior_columns([1, 0])
    assert dev.max_abs_on_columns(interior) < 1e-12
    # at the cutoff the truncated commutator is not the identity
    assert dev.max_abs() > 0.5


def test_commutator_trivial_cases():
    s = build_space([3, 3])
    a1 = ladder(s, 0, "lower")
    a2d = ladder(s, 1, "raise")
    assert commutator(a1, a1).max_abs() == 0.0
    assert commutator(a1, a2d).max_abs() == 0.0


def test_adjoint_pairs():
    s = build_space([3, 2])
    for m in range(2):
        lo = ladder(s, m, "lower")
        hi = ladder(s, m, "raise")
        assert (lo.adjoint() - hi).max_abs() == 0.0
        assert (lo.adjoint().adjoint() - lo).max_abs() == 0.0


def test_expectation_examples():
    s = build_space([5])
    n = number_op(s, 0)
    a = ladder(s, 0, "lower")
    ad = ladder(s, 0, "raise")
    assert expectation(NumberState([3]), n) == 3
    assert expectation(NumberState([0]), ad @ a) == 0
    # normal-ordered two-body value on occupation 3: 3 * 2
    assert expectation(NumberState([3]), ad @ ad @ a @ a) == pytest.approx(6.0)


def test_expectation_validation():
    s = build_space([2])
    n = number_op(s, 0)
    with pytest.raises(ValueError):
        expectation(NumberState([5]), n)
    with pytest.raises(ValueError):
        expectation(NumberState([1, 1]), n)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3), st.integers(0, 2), st.data())
def test_hermitian_expectation_is_real(n0, n1, data):
    s = build_space([3, 2])
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    dense = rng.normal(size=(s.dim, s.dim)) + 1j * rng.normal(size=(s.dim, s.dim))
    from fockmarket import MatrixOperator
    b = MatrixOperator(s, dense)
    herm = b + b.adjoint()
    val = expectation(NumberState([n0, n1]), herm)
    assert abs(val.imag) < 1e-12


def test_disjoint_modes_commute_exactly():
    s = build_space([2, 2, 2])
    ops = [ladder(s, m, k) for m in range(3) for k in ("lower", "raise")]
    for i in range(0, 6, 2):
        for j in range(0, 6, 2):
            if i // 2 == j // 2:
                continue
            assert commutator(ops[i], ops[j + 1]).max_abs() == 0.0


def test_space_mismatch():
    a = ladder(build_space([2]), 0, "lower")
    b = ladder(build_space([3]), 0, "lower")
    with pytest.raises(SpaceMismatchError):
        a @ b
    with pytest.raises(SpaceMismatchError):
        a + b


def test_entries_sorted_and_csv(tmp_path):
    s = build_space([2])
    op = ladder(s, 0, "lower") + 2.0 * number_op(s, 0)
    ent = list(op.entries())
    assert ent == sorted(ent, key=lambda e: (e[0], e[1]))
    path = tmp_path / "op.csv"
    op.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "row,col,re,im"
    assert len(lines) == 1 + len(ent)
    # identical rebuild gives identical bytes
    path2 = tmp_path / "op2.csv"
    op.write_csv(path2)
    assert path.read_bytes() == path2.read_bytes()


def test_matrix_element():
    s = build_space([3])
    a = ladder(s, 0, "lower")
    assert matrix_element(NumberState([1]), a, NumberState([2])) == pytest.approx(np.sqrt(2))
    assert matrix_element(NumberState([2]), a, NumberState([2])) == 0.0


def test_zero_operator():
    s = build_space([2, 2])
    assert zero_operator(s).max_abs() == 0.0
