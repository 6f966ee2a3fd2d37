import numpy as np
import pytest

from qslbench.paulis import (
    CompiledOperator,
    PauliString,
    SparseOperator,
    StateVector,
    apply_operator,
    expectation,
    identity_string,
    parse_pauli,
)

from oracles import operator_matrix, pauli_string_matrix, random_state


def test_parse_basic():
    ps = parse_pauli("XIZ")
    assert ps.ops == "XIZ"
    assert ps.nqubits == 3
    assert ps.weight == 2


def test_parse_identity():
    ps = parse_pauli("IIII")
    assert ps.nqubits == 4
    assert ps.weight == 0


def test_parse_rejects_bad_symbol():
    with pytest.raises(ValueError, match="position 2"):
        parse_pauli("XB")


def test_parse_rejects_empty():
    with pytest.raises(ValueError):
        parse_pauli("")


def test_apply_z_on_zero():
    op = SparseOperator.from_strings([(1.0, "Z")], 1)
    state = StateVector.computational([0])
    out = apply_operator(op, state)
    np.testing.assert_allclose(out, state.amplitudes)


def test_apply_x_flips():
    op = SparseOperator.from_strings([(1.0, "X")], 1)
    out = apply_operator(op, StateVector.computational([0]))
    np.testing.assert_allclose(out, StateVector.computational([1]).amplitudes)


def test_heisenberg_pair_on_singlet(singlet):
    op = SparseOperator.from_strings([(1.0, "XX"), (1.0, "YY"), (1.0, "ZZ")], 2)
    out = apply_operator(op, singlet)
    np.testing.assert_allclose(out, -3.0 * singlet.amplitudes, atol=1e-12)
    # independent check against the dense matrix
    dense = operator_matrix(op) @ singlet.amplitudes
    np.testing.assert_allclose(out, dense, atol=1e-12)


def test_expectation_examples(singlet):
    assert expectation(StateVector.computational([0]), parse_pauli("Z")) == pytest.approx(1.0)
    plus = StateVector(np.array([1, 1]) / np.sqrt(2))
    assert expectation(plus, parse_pauli("Z")) == pytest.approx(0.0, abs=1e-12)
    assert expectation(singlet, parse_pauli("ZZ")) == pytest.approx(-1.0)


def test_identity_expectation_is_one(rng):
    for n in (1, 2, 3, 5):
        state = StateVector(random_state(rng, n))
        assert expectation(state, identity_string(n)) == pytest.approx(1.0)


def test_expectation_bounded(rng):
    for _ in range(50):
        n = int(rng.integers(1, 5))
        state = StateVector(random_state(rng, n))
        ops = "".join(rng.choice(list("IXYZ"), size=n))
        assert abs(expectation(state, PauliString(ops))) <= 1.0 + 1e-12


def _random_operator(rng, n, nterms):
    terms = []
    for _ in range(nterms):
        ops = "".join(rng.choice(list("IXYZ"), size=n))
        terms.append((float(rng.normal()), PauliString(ops)))
    return SparseOperator(terms, n)


def test_apply_matches_dense_small_systems(rng):
    for _ in range(100):
        n = int(rng.integers(1, 5))
        op = _random_operator(rng, n, int(rng.integers(1, 8)))
        state = StateVector(random_state(rng, n))
        got = apply_operator(op, state)
        want = operator_matrix(op) @ state.amplitudes
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_compiled_matvec_matches_apply(rng):
    for n in (2, 4, 6):
        op = _random_operator(rng, n, 10)
        compiled = CompiledOperator(op)
        state = StateVector(random_state(rng, n))
        np.testing.assert_allclose(
            compiled.matvec(state.amplitudes), apply_operator(op, state), atol=1e-12
        )


def test_expectation_linearity(rng):
    n = 3
    state = StateVector(random_state(rng, n))
    p, q = PauliString("XYZ"), PauliString("ZIX")
    a, b = 0.7, -1.3
    combo = SparseOperator([(a, p), (b, q)], n)
    lhs = np.vdot(state.amplitudes, apply_operator(combo, state)).real
    rhs = a * expectation(state, p) + b * expectation(state, q)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_single_string_matrix_convention():
    # site 1 lives on the least significant bit
    mat = pauli_string_matrix("XI")
    op = SparseOperator.from_strings([(1.0, "XI")], 2)
    state = StateVector.computational([0, 0])
    np.testing.assert_allclose(apply_operator(op, state), mat @ state.amplitudes)
    assert mat[1, 0] == 1  # X on site 1 maps index 0 to index 1


def test_canonicalization_merges_duplicates():
    op = SparseOperator.from_strings([(1.0, "XX"), (0.5, "XX"), (2.0, "ZZ")], 2)
    assert len(op) == 2
    coeffs = {ps.ops: c for c, ps in op.terms}
    assert coeffs == {"XX": 1.5, "ZZ": 2.0}


def test_rejects_complex_and_nonfinite_coefficients():
    with pytest.raises(TypeError):
        SparseOperator.from_strings([(1.0j, "X")], 1)
    with pytest.raises(ValueError):
        SparseOperator.from_strings([(float("nan"), "X")], 1)


def test_dimension_mismatch():
    op = SparseOperator.from_strings([(1.0, "XX")], 2)
    with pytest.raises(ValueError, match="mismatch"):
        apply_operator(op, StateVector.computational([0]))
    with pytest.raises(ValueError, match="mismatch"):
        expectation(StateVector.computational([0]), PauliString("XX"))


def test_state_normalization_enforced():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0]))


def test_operator_serialization_roundtrip(rng):
    op = _random_operator(rng, 3, 5)
    text = op.serialize()
    back = SparseOperator.deserialize(text)
    assert back.nqubits == op.nqubits
    assert [(c, ps.ops) for c, ps in back.terms] == [(c, ps.ops) for c, ps in op.terms]
