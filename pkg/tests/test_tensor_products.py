import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opspace.matrix_core import DiamondContext, diamond, kron, op_norm, random_cmatrix
from opspace.quantum_space import (
    AmplifiedElement,
    amplified_norm,
    elementary,
    functional_norm,
    make_column_hilbertian,
    make_conjugate_row,
    make_matrix_space,
    make_row_hilbertian,
    make_scalar_space,
    module_action,
    random_element,
    random_operator_space,
    spatial_product,
    zero_element,
)
from opspace.tensor_products import (
    DIMENSION_CAP,
    EQUALITY_CASES,
    NoRepresentationError,
    NormBracket,
    TensorRepresentation,
    canonical_effros,
    chain_brackets,
    column_left_certificate,
    column_right_transport,
    combine_brackets,
    diamond_tensor,
    effros,
    effros_rep,
    effros_to_rigged,
    equality_suite,
    fournamed_bracket,
    gauge_effros,
    gauge_rigged,
    haagerup_bracket,
    join_orthogonal_effros,
    join_orthogonal_rigged,
    merge_effros,
    merge_rigged,
    pairing_lower_bound,
    reconstruction_error,
    rigged_rep,
    rigged_to_effros,
    row_left_transport,
    row_right_certificate,
    sliced_rigged,
    spatial_norm,
    tensor_space,
    transport_effros,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def pair_of_spaces(rng):
    return random_operator_space(rng, 2, 2, 2), make_matrix_space(2)


def random_effros_terms(rng, E, F, n, r=2, c=2):
    terms = []
    for _ in range(n):
        s = int(rng.integers(1, 4))
        terms.append((random_element(E, rng, r, s), random_element(F, rng, s, c)))
    return terms


def random_rigged_terms(rng, E, F, n, r=2, c=3):
    terms = []
    for _ in range(n):
        m1, m2, m3, m4 = (int(x) for x in rng.integers(1, 4, 4))
        terms.append((random_cmatrix(rng, r, m1 * m3), random_element(E, rng, m1, m2),
                      random_element(F, rng, m3, m4), random_cmatrix(rng, m2 * m4, c)))
    return terms


# Effros symbol and diamond tensor

def test_effros_on_elementary_tensors(rng):
    E, F = pair_of_spaces(rng)
    a, b = random_cmatrix(rng, 2, 3), random_cmatrix(rng, 3, 2)
    x, y = random_cmatrix(rng, E.dim, 1).ravel(), random_cmatrix(rng, F.dim, 1).ravel()
    U = effros(elementary(E, a, x), elementary(F, b, y))
    expected = elementary(tensor_space(E, F), a @ b, np.kron(x, y))
    assert np.allclose(U.coeffs, expected.coeffs, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_effros_is_balanced(seed):
    rng = np.random.default_rng(seed)
    E, F = pair_of_spaces(rng)
    u, v, a = random_element(E, rng, 2, 3), random_element(F, rng, 3, 2), random_cmatrix(rng, 3)
    lhs = effros(module_action(None, u, a), v)
    rhs = effros(u, module_action(a, v))
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)


def test_effros_zero_and_mismatch(rng):
    E, F = pair_of_spaces(rng)
    u = random_element(E, rng, 2)
    assert not effros(u, zero_element(F, 2)).coeffs.any()
    with pytest.raises(ValueError):
        effros(u, random_element(F, rng, 3))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=3))
def test_diamond_tensor_module_identity(seed, m):
    rng = np.random.default_rng(seed)
    ctx = DiamondContext(m)
    E, F = pair_of_spaces(rng)
    u, v = random_element(E, rng, m), random_element(F, rng, m)
    a, b, c, d = (random_cmatrix(rng, m) for _ in range(4))
    lhs = module_action(diamond(a, b, ctx), diamond_tensor(u, v, ctx), diamond(c, d, ctx))
    rhs = diamond_tensor(module_action(a, u, c), module_action(b, v, d), ctx)
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)


def test_diamond_tensor_elementary_norm(rng):
    E, F = make_column_hilbertian(3), make_row_hilbertian(2)
    a, b = random_cmatrix(rng, 2), random_cmatrix(rng, 2)
    x, y = random_cmatrix(rng, 3, 1).ravel(), random_cmatrix(rng, 2, 1).ravel()
    W = diamond_tensor(elementary(E, a, x), elementary(F, b, y))
    # kron-norm oracle: ||x (x) y|| in the spatial product is ||kron(I_c x, I_r y)||
    xy = op_norm(kron(E.vector(x), F.vector(y)))
    assert amplified_norm(W) == pytest.approx(op_norm(a) * op_norm(b) * xy, rel=1e-10)
    assert not diamond_tensor(elementary(E, a, x), zero_element(F, 2)).coeffs.any()


def test_diamond_tensor_context_check(rng):
    E, F = pair_of_spaces(rng)
    with pytest.raises(ValueError):
        diamond_tensor(random_element(E, rng, 2), random_element(F, rng, 2), DiamondContext(3))


def test_spatial_norm(rng):
    E, F = make_column_hilbertian(3), random_operator_space(rng, 2, 2, 2)
    a = random_cmatrix(rng, 2)
    x, y = np.eye(3)[1], random_cmatrix(rng, 2, 1).ravel()
    U = elementary(tensor_space(E, F), a, np.kron(x, y))
    assert spatial_norm(U) == pytest.approx(
        op_norm(a) * op_norm(E.vector(x)) * op_norm(F.vector(y)), rel=1e-10)
    assert spatial_norm(zero_element(tensor_space(E, F), 2)) == 0.0


def test_spatial_norm_cap():
    C = make_scalar_space()
    U = AmplifiedElement(spatial_product(C, C), np.zeros((1, DIMENSION_CAP + 1, 1)))
    with pytest.raises(ValueError, match="cap"):
        spatial_norm(U)


@pytest.mark.parametrize("h", [2, 3])
def test_column_column_spatial_is_column_of_product(rng, h):
    G = tensor_space(make_column_hilbertian(h), make_column_hilbertian(h))
    U = random_element(G, rng, 2)
    flat = AmplifiedElement(make_column_hilbertian(h * h), U.coeffs)
    assert spatial_norm(U) == pytest.approx(amplified_norm(flat), rel=1e-12)


# representations and merges

def test_representation_validation(rng):
    E, F = pair_of_spaces(rng)
    u, v = random_element(E, rng, 2), random_element(F, rng, 2)
    with pytest.raises(ValueError):
        TensorRepresentation("single_effros", [(u, v), (u, v)])
    with pytest.raises(ValueError):
        TensorRepresentation("effros_list", [])
    with pytest.raises(ValueError):
        TensorRepresentation("mystery", [(u, v)])
    json.dumps(effros_rep((u, v)).to_json())
    json.dumps(rigged_rep((np.eye(4), u, v, np.eye(4))).to_json())


def test_merge_effros_single_term(rng):
    E, F = pair_of_spaces(rng)
    rep = effros_rep((random_element(E, rng, 2), random_element(F, rng, 2)))
    merged = merge_effros(rep, balanced=False)
    assert merged.kind == "single_effros"
    assert np.array_equal(merged.terms[0][0].coeffs, rep.terms[0][0].coeffs)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(min_value=2, max_value=4))
def test_merge_effros_reconstructs_with_bounds(seed, n):
    rng = np.random.default_rng(seed)
    E, F = pair_of_spaces(rng)
    rep = effros_rep(*random_effros_terms(rng, E, F, n))
    U = rep.assemble()
    merged = merge_effros(rep, balanced=False)
    (u, v), = merged.terms
    assert reconstruction_error(merged, U) <= 1e-10
    assert amplified_norm(u) <= math.sqrt(sum(amplified_norm(x) ** 2 for x, _ in rep.terms)) + 1e-12
    assert amplified_norm(v) <= math.sqrt(sum(amplified_norm(y) ** 2 for _, y in rep.terms)) + 1e-12
    balanced = merge_effros(rep)
    assert reconstruction_error(balanced, U) <= 1e-10
    assert balanced.value() <= rep.value() + 1e-10


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=4))
def test_merge_rigged_reconstructs_with_bounds(seed, n):
    rng = np.random.default_rng(seed)
    E, F = pair_of_spaces(rng)
    rep = rigged_rep(*random_rigged_terms(rng, E, F, n))
    V = rep.assemble()
    merged = merge_rigged(rep)
    assert merged.kind == "single_rigged"
    assert reconstruction_error(merged, V) <= 1e-10
    (a, u, v, b), = merged.terms
    norm_a = [op_norm(t[0]) * math.sqrt(amplified_norm(t[1]) * amplified_norm(t[2])
                                        * op_norm(t[3]) / op_norm(t[0])) for t in rep.terms]
    assert op_norm(a) <= math.sqrt(sum(x ** 2 for x in norm_a)) + 1e-10
    assert amplified_norm(u) <= 1 + 1e-12 and amplified_norm(v) <= 1 + 1e-12
    assert merged.value() <= rep.value() + 1e-10


def test_conversions_reconstruct(rng):
    E, F = pair_of_spaces(rng)
    U = effros_rep(*random_effros_terms(rng, E, F, 2)).assemble()
    for rep in (canonical_effros(U), effros_to_rigged(U), sliced_rigged(U, "left"),
                sliced_rigged(U, "right")):
        assert reconstruction_error(rep, U) <= 1e-10
    rig = rigged_rep(*random_rigged_terms(rng, E, F, 2))
    conv = rigged_to_effros(rig)
    assert reconstruction_error(conv, rig.assemble()) <= 1e-10
    assert conv.value() <= rig.value() * (1 + 1e-12)
    with pytest.raises(ValueError):
        sliced_rigged(U, "middle")


def test_non_tensor_elements_have_no_representation(rng):
    u = random_element(make_matrix_space(2), rng, 2)
    with pytest.raises(NoRepresentationError):
        canonical_effros(u)
    with pytest.raises(NoRepresentationError):
        haagerup_bracket(u, restarts=0, iterations=0)


def test_gauges_never_hurt(rng):
    E, F = pair_of_spaces(rng)
    rep = merge_effros(effros_rep(*random_effros_terms(rng, E, F, 2)))
    U = rep.assemble()
    g = gauge_effros(rep, restarts=2, iterations=30, seed=1)
    assert g.value() <= rep.value() * (1 + 1e-12)
    assert reconstruction_error(g, U) <= 1e-10
    rig = merge_rigged(rigged_rep(*random_rigged_terms(rng, E, F, 1)))
    g = gauge_rigged(rig, restarts=1, iterations=20, seed=1)
    assert g.value() <= rig.value() * (1 + 1e-12)
    assert reconstruction_error(g, rig.assemble()) <= 1e-10


# brackets

def test_bracket_validation_and_json(rng):
    E, F = pair_of_spaces(rng)
    rep = effros_rep((random_element(E, rng, 1), random_element(F, rng, 1)))
    with pytest.raises(ValueError):
        NormBracket(2.0, 1.0, "spatial", "raw_representation", rep)
    with pytest.raises(ValueError):
        NormBracket(-1.0, 1.0, "spatial", "raw_representation", rep)
    b = NormBracket(1.0, 1.0 + 1e-9, "spatial", "raw_representation", rep)
    assert b.resolved() and b.status == "RESOLVED"
    obj = json.loads(json.dumps(b.to_json("demo", 3)))
    assert set(obj) == {"case", "lower", "upper", "gap", "lower_method", "upper_method",
                        "resolved", "seed"}
    wide = NormBracket(1.0, 2.0, "spatial", "merged_gauged", rep)
    assert wide.status == "UNRESOLVED" and wide.gap == 1.0
    both = combine_brackets(wide, NormBracket(1.5, 3.0, "functional_pairing", "raw_representation", rep))
    assert (both.lower, both.upper) == (1.5, 2.0)


def test_zero_element_brackets_are_zero(rng):
    E, F = pair_of_spaces(rng)
    Z = zero_element(tensor_space(E, F), 2)
    for bracket in (haagerup_bracket(Z, restarts=1, iterations=5, functionals=2),
                    fournamed_bracket(Z, restarts=1, iterations=5, functionals=2)):
        assert bracket.lower == 0.0 and bracket.upper == 0.0


def test_elementary_column_conjugate_row_bracket_closes(rng):
    h = 3
    G = tensor_space(make_column_hilbertian(h), make_conjugate_row(h))
    x, y = random_cmatrix(rng, h, 1).ravel(), random_cmatrix(rng, h, 1).ravel()
    U = elementary(G, np.ones((1, 1)), np.kron(x, y))
    b = haagerup_bracket(U, restarts=0, iterations=0, functionals=0)
    target = np.linalg.norm(x) * np.linalg.norm(y)
    assert b.relative_gap <= 1e-6
    assert b.upper == pytest.approx(target, rel=1e-10)


@pytest.mark.parametrize("space", ["column", "row"])
def test_hilbertian_certificates_equal_spatial(rng, space):
    E = random_operator_space(rng, 3, 2, 2)
    if space == "column":
        H = make_column_hilbertian(3)
        U = random_element(tensor_space(H, E), rng, 2)
        cert = column_left_certificate(U)
        W = U.coeffs.reshape(3, E.dim, 2, 2)
        us = [AmplifiedElement(E, W[k]) for k in range(3)]
        formula = math.sqrt(op_norm(sum(u.assemble().conj().T @ u.assemble() for u in us)))
    else:
        H = make_row_hilbertian(3)
        U = random_element(tensor_space(E, H), rng, 2)
        cert = row_right_certificate(U)
        W = U.coeffs.reshape(E.dim, 3, 2, 2)
        us = [AmplifiedElement(E, W[:, k]) for k in range(3)]
        formula = math.sqrt(op_norm(sum(u.assemble() @ u.assemble().conj().T for u in us)))
    assert reconstruction_error(cert, U) <= 1e-12
    (w1, w2), = cert.terms
    assert cert.value() == pytest.approx(formula, rel=1e-10)
    assert spatial_norm(U) == pytest.approx(formula, rel=1e-10)
    assert min(amplified_norm(w1), amplified_norm(w2)) == pytest.approx(
        1.0 if space == "column" else amplified_norm(w2), rel=1e-12)


@pytest.mark.parametrize("side", ["column", "row"])
def test_transport_to_rigged_keeps_value(rng, side):
    E = random_operator_space(rng, 3, 2, 2)
    if side == "column":
        U = random_element(tensor_space(E, make_column_hilbertian(3)), rng, 2)
        rep = merge_effros(canonical_effros(U))
        cert = column_right_transport(rep)
    else:
        U = random_element(tensor_space(make_row_hilbertian(3), E), rng, 2)
        rep = merge_effros(canonical_effros(U))
        cert = row_left_transport(rep)
    assert reconstruction_error(cert, U) <= 1e-10
    assert cert.value() <= rep.value() * (1 + 1e-6)
    fb = fournamed_bracket(U, [cert], restarts=0, iterations=0, functionals=0)
    assert fb.upper <= rep.value() * (1 + 1e-6)


def test_transport_rejects_wrong_factor(rng):
    E = random_operator_space(rng, 3, 2, 2)
    U = random_element(tensor_space(E, make_row_hilbertian(2)), rng, 2)
    with pytest.raises(ValueError):
        column_right_transport(canonical_effros(U))
    with pytest.raises(ValueError):
        column_left_certificate(U)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_norm_chain(seed):
    rng = np.random.default_rng(seed)
    E, F = pair_of_spaces(rng)
    rep = effros_rep(*random_effros_terms(rng, E, F, 2))
    sp, hb, fb = chain_brackets(rep, restarts=1, iterations=10, functionals=4, seed=seed)
    assert sp <= hb.upper + 1e-9
    assert hb.upper <= fb.upper + 1e-9
    assert hb.lower <= fb.upper + 1e-9
    U = rep.assemble()
    assert reconstruction_error(hb.witness, U) <= 1e-10
    assert reconstruction_error(fb.witness, U) <= 1e-10


def test_functional_pairing_is_a_sound_lower_bound(rng):
    E, F = make_matrix_space(2), make_row_hilbertian(3)
    U = effros_rep(*random_effros_terms(rng, E, F, 2)).assemble()
    val, (f, g) = pairing_lower_bound(U, samples=16, seed=2)
    hb = haagerup_bracket(U, restarts=1, iterations=10, functionals=0)
    assert 0 <= val <= hb.upper + 1e-9
    W = U.coeffs.reshape(E.dim, F.dim, *U.shape)
    paired = op_norm(np.einsum("i,j,ijab->ab", f, g, W))
    assert paired == pytest.approx(val * functional_norm(E, f) * functional_norm(F, g), rel=1e-10)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_pairings_bounded_by_upper_bounds(seed):
    rng = np.random.default_rng(seed)
    E, F = make_matrix_space(2), make_column_hilbertian(2)
    U = effros_rep(*random_effros_terms(rng, E, F, 2)).assemble()
    f, g = random_cmatrix(rng, 4, 1).ravel(), random_cmatrix(rng, 2, 1).ravel()
    W = U.coeffs.reshape(E.dim, F.dim, *U.shape)
    paired = op_norm(np.einsum("i,j,ijab->ab", f, g, W))
    scale = functional_norm(E, f) * functional_norm(F, g)
    hb = haagerup_bracket(U, restarts=0, iterations=0, functionals=0)
    fb = fournamed_bracket(U, restarts=0, iterations=0, functionals=0)
    assert paired <= scale * hb.upper + 1e-9
    assert paired <= scale * fb.upper + 1e-9


def test_symbols_are_contractive(rng):
    E, F = pair_of_spaces(rng)
    u, v = random_element(E, rng, 2), random_element(F, rng, 2)
    hb = haagerup_bracket(effros_rep((u, v)), restarts=0, iterations=0, functionals=0)
    assert hb.upper <= amplified_norm(u) * amplified_norm(v) + 1e-12
    fb = fournamed_bracket(rigged_rep((np.eye(4), u, v, np.eye(4))), restarts=0, iterations=0,
                           functionals=0)
    assert fb.upper <= amplified_norm(u) * amplified_norm(v) + 1e-12
    assert np.allclose(fb.witness.assemble().coeffs, diamond_tensor(u, v).coeffs)


def test_transport_of_representations(rng):
    E, F = pair_of_spaces(rng)
    rep = effros_rep(*random_effros_terms(rng, E, F, 2))
    a, b = random_cmatrix(rng, 3, 2), random_cmatrix(rng, 2, 4)
    moved = transport_effros(rep, a, b)
    target = module_action(a, rep.assemble(), b)
    assert reconstruction_error(moved, target) <= 1e-10
    assert moved.value() <= op_norm(a) * op_norm(b) * rep.value() + 1e-10
    rig = rigged_rep(*random_rigged_terms(rng, E, F, 2))
    moved = transport_effros(rig, a, np.eye(3))
    assert reconstruction_error(moved, module_action(a, rig.assemble())) <= 1e-10
    assert moved.value() <= op_norm(a) * rig.value() + 1e-10


@pytest.mark.parametrize("kind", ["effros", "rigged"])
def test_orthogonal_joins(rng, kind):
    E, F = pair_of_spaces(rng)
    m = 4
    P1 = np.diag([1.0, 1.0, 0.0, 0.0]).astype(complex)
    P2 = np.eye(m) - P1
    if kind == "effros":
        rU = transport_effros(effros_rep(*random_effros_terms(rng, E, F, 2, m, m)), P1, P1)
        rV = transport_effros(effros_rep(*random_effros_terms(rng, E, F, 2, m, m)), P2, P2)
        joined = join_orthogonal_effros(rU, rV, P1, P2)
        bound = max(merge_effros(rU).value(), merge_effros(rV).value())
    else:
        rU = transport_effros(rigged_rep(*random_rigged_terms(rng, E, F, 2, m, m)), P1, P1)
        rV = transport_effros(rigged_rep(*random_rigged_terms(rng, E, F, 2, m, m)), P2, P2)
        joined = join_orthogonal_rigged(rU, rV, P1, P2)
        bound = max(merge_rigged(rU).value(), merge_rigged(rV).value())
    target = rU.assemble() + rV.assemble()
    assert reconstruction_error(joined, target) <= 1e-10
    assert joined.value() <= bound + 1e-9


# equality suites

@pytest.mark.parametrize("case", EQUALITY_CASES)
@pytest.mark.parametrize("space", ["M2", "random3"])
def test_equality_cases_close(case, space):
    for h in (1, 2, 3):
        rep = equality_suite(case, h, space, 2, seed=7)
        assert rep["ok"], rep
        assert rep["relative_gap"] <= 1e-6
        assert rep["lower"] <= rep["upper"] + 1e-12


def test_finite_rank_case_is_isometric():
    rep = equality_suite("column_row_finite_rank", 3, "M2", 2, seed=11)
    assert rep["finite_rank_norm"] == pytest.approx(rep["upper"], rel=1e-10)
    assert rep["finite_rank_norm"] == pytest.approx(rep["spatial"], rel=1e-10)


def test_column_column_norms_agree():
    rep = equality_suite("column_column", 2, "M2", 2, seed=5)
    assert rep["flat_norm"] == pytest.approx(rep["spatial"], rel=1e-10)
    assert rep["h_upper"] == pytest.approx(rep["spatial"], rel=1e-6)
    assert rep["upper"] == pytest.approx(rep["spatial"], rel=1e-6)


def test_equality_suite_errors():
    with pytest.raises(ValueError, match="unknown"):
        equality_suite("nonsense")
    with pytest.raises(ValueError, match="cap"):
        equality_suite("column_column", 70)
    with pytest.raises(ValueError):
        equality_suite("column_column", 2, "M7")
