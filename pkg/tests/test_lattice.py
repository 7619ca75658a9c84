import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from nhcse.lattice import (GeometryError, ProfileError, ReductionError, allowed_momenta,
                           apply_dissipation, bloch_reduce, build_haldane, build_honeycomb,
                           make_profile)
from nhcse.topology import BlochMap


def matched_distance(a, b):
    """Largest distance under the optimal one-to-one pairing of two spectra."""
    C = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    r, c = linear_sum_assignment(C)
    return C[r, c].max()


def brute_force_bonds(positions, period, length):
    """Pairs at a given distance, periodic along y with the given period."""
    n = len(positions)
    pairs = set()
    for i in range(n):
        for j in range(i + 1, n):
            for shift in (-period, 0.0, period):
                d = positions[j] - positions[i] + np.array([0.0, shift])
                if abs(np.hypot(*d) - length) < 1e-9:
                    pairs.add((i, j, shift))
    return pairs


# --------------------------------------------------------------------- geometry

def test_torus_coordination(torus2):
    assert torus2.n_sites == 8
    nn, nnn = torus2.coordination()
    np.testing.assert_array_equal(nn, 3)
    np.testing.assert_array_equal(nnn, 6)


def test_zigzag_boundary_rows_lose_one_bond():
    g = build_honeycomb(4, 3, "periodic", "open", "zigzag")
    nn, _ = g.coordination()
    rows = g.rows(1)
    for n in (0, g.Ly - 1):
        on_row = rows == n
        # one sublattice per outer row has its vertical bond cut
        assert sorted(np.unique(nn[on_row])) == [2, 3]
        assert np.sum(nn[on_row] == 2) == g.Lx
    assert np.all(nn[rows == 1] == 3)


def test_armchair_bond_counts_match_enumeration():
    g = build_honeycomb(3, 3, "open", "periodic", "armchair")
    assert g.n_sites == 18
    period = g.translations[1][1]
    nn = brute_force_bonds(g.positions, period, 1.0)
    nnn = brute_force_bonds(g.positions, period, np.sqrt(3))
    assert len(g.nn_pairs) == len(nn) == 21
    assert len(g.nnn_pairs) == len(nnn) == 30


@pytest.mark.parametrize("args", [
    (2, 2, "periodic", "periodic", "zigzag"),
    (2, 2, "open", "open", "torus"),
    (2, 2, "periodic", "open", "hexagon"),
    (2, 2, "closed", "open", "zigzag"),
])
def test_inconsistent_geometry_rejected(args):
    with pytest.raises(GeometryError):
        build_honeycomb(*args)


# ---------------------------------------------------------------------- Haldane

@pytest.mark.parametrize("style,bc", [("torus", ("periodic", "periodic")),
                                      ("zigzag", ("periodic", "open")),
                                      ("armchair", ("open", "periodic")),
                                      ("rectangle", ("open", "open"))])
def test_chiral_symmetry_without_nnn(style, bc):
    g = build_honeycomb(4, 4, *bc, style)
    w = np.linalg.eigvalsh(build_haldane(g, 1.0, 0.0, np.pi / 2).matrix)
    np.testing.assert_allclose(np.sort(w), np.sort(-w), atol=1e-12)


def test_hermitian(torus2):
    H = build_haldane(torus2, 1.0, 0.2, np.pi / 2)
    assert np.abs(H.matrix - H.matrix.conj().T).max() < 1e-14
    assert H.hermiticity_error() < 1e-14


def test_torus_matches_bloch_formula(torus2):
    H = build_haldane(torus2, 1.0, 0.2, np.pi / 2)
    T1, T2 = torus2.translations[0], torus2.translations[1]
    ks = [np.array([2 * np.pi * n / T1[0], 2 * np.pi * m / T2[1]]) for n in (0, 1) for m in (0, 1)]
    bloch = BlochMap(1.0, 0.2, np.pi / 2)
    expected = np.concatenate([np.linalg.eigvalsh(bloch(k)) for k in ks])
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(H.matrix)), np.sort(expected),
                               atol=1e-12)


# --------------------------------------------------------------------- profiles

def test_uniform_profile(cylinder):
    p = make_profile({"kind": "bulk-uniform", "gamma": 0.1}, cylinder)
    np.testing.assert_array_equal(p.gamma, 0.1)


@pytest.mark.parametrize("style,bc", [("torus", ("periodic", "periodic")),
                                      ("zigzag", ("periodic", "open")),
                                      ("armchair", ("open", "periodic")),
                                      ("rectangle", ("open", "open"))])
def test_staggered_profile_sums_to_zero(style, bc):
    g = build_honeycomb(4, 6, *bc, style)
    p = make_profile({"kind": "staggered", "gamma": 0.3}, g)
    assert abs(p.gamma.sum()) < 1e-12
    np.testing.assert_array_equal(p.gamma[g.sublattice == 0], 0.3)
    np.testing.assert_array_equal(p.gamma[g.sublattice == 1], -0.3)


def test_edge_gddw_profile_on_outer_row_only():
    g = build_honeycomb(24, 20, "periodic", "open", "zigzag")
    p = make_profile({"kind": "edge", "edge": "lower", "gamma_left": -0.1,
                      "gamma_right": 0.1}, g)
    outer = g.rows(1) == 0
    assert np.all(p.gamma[~outer] == 0)
    assert np.all(p.gamma[outer] != 0)
    assert np.count_nonzero(p.gamma) == 2 * g.Lx
    assert np.count_nonzero(p.gamma == 0.1) == np.count_nonzero(p.gamma == -0.1) == g.Lx


@pytest.mark.parametrize("spec", [
    {"kind": "nope"},
    {"kind": "edge", "edge": "left", "gamma": 0.1},  # x is periodic
    {"kind": "custom", "gamma": [0.1, 0.2]},
    {"kind": "bulk-gddw", "gamma_left": -0.1, "gamma_right": 0.1, "walls": [3, 3]},
])
def test_bad_profiles_rejected(cylinder, spec):
    with pytest.raises(ProfileError):
        make_profile(spec, cylinder)


def test_profile_is_read_only(cylinder):
    p = make_profile({"kind": "staggered", "gamma": 0.3}, cylinder)
    with pytest.raises(ValueError):
        p.gamma[0] = 1.0


# ------------------------------------------------------------------ dissipation

def test_zero_dissipation_is_bit_identical(haldane_cylinder, cylinder):
    p = make_profile({"kind": "bulk-uniform", "gamma": 0.0}, cylinder)
    out = apply_dissipation(haldane_cylinder, p)
    assert np.array_equal(out.matrix, haldane_cylinder.matrix)
    assert out.matrix is not haldane_cylinder.matrix


def test_uniform_shift_identity(haldane_cylinder, cylinder):
    w0 = np.linalg.eigvals(haldane_cylinder.matrix)
    p = make_profile({"kind": "bulk-uniform", "gamma": 0.1}, cylinder)
    w1 = np.linalg.eigvals(apply_dissipation(haldane_cylinder, p).matrix)
    assert matched_distance(w1, w0 + 0.1j) < 1e-10


@pytest.mark.parametrize("spec", [
    {"kind": "staggered", "gamma": 0.3},
    {"kind": "bulk-gddw", "gamma_left": -0.2, "gamma_right": 0.2},
    {"kind": "edge", "edge": "upper", "gamma": 0.4},
])
def test_trace_identity(haldane_cylinder, cylinder, spec):
    p = make_profile(spec, cylinder)
    w = np.linalg.eigvals(apply_dissipation(haldane_cylinder, p).matrix)
    assert abs(w.imag.sum() - p.gamma.sum()) < 1e-10


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_trace_identity_random_gddw(gl, gr):
    g = build_honeycomb(4, 3, "periodic", "open", "zigzag")
    H = build_haldane(g)
    p = make_profile({"kind": "bulk-gddw", "gamma_left": gl, "gamma_right": gr}, g)
    w = np.linalg.eigvals(apply_dissipation(H, p).matrix)
    assert abs(w.imag.sum() - p.gamma.sum()) < 1e-9


# -------------------------------------------------------------- Bloch reduction

@pytest.mark.parametrize("style,bc,spec", [
    ("zigzag", ("periodic", "open"), None),
    ("zigzag", ("periodic", "open"), {"kind": "edge", "edge": "lower", "gamma": 0.2}),
    ("zigzag", ("periodic", "open"), {"kind": "staggered", "gamma": 0.3}),
    ("armchair", ("open", "periodic"), {"kind": "staggered", "gamma": 0.3}),
    ("armchair", ("open", "periodic"), {"kind": "edge", "edge": "left", "gamma": -0.2}),
])
def test_bloch_union_reproduces_real_space(style, bc, spec):
    g = build_honeycomb(6, 6, *bc, style)
    p = make_profile(spec, g) if spec else None
    H = build_haldane(g)
    if p is not None:
        H = apply_dissipation(H, p)
    full = np.linalg.eigvals(H.matrix)
    parts = [np.linalg.eigvals(bloch_reduce(g, 1.0, 0.2, np.pi / 2, p, k).matrix)
             for k in allowed_momenta(g)]
    assert matched_distance(np.concatenate(parts), full) < 1e-9


def test_hermitian_k_and_minus_k_conjugate(cylinder):
    # +k and -k blocks of the Hermitian cylinder: spectra map onto each other
    # under complex conjugation (both are real, so the sets coincide)
    for k in (0.3, 1.1, 2.5):
        a = np.linalg.eigvals(bloch_reduce(cylinder, 1.0, 0.2, np.pi / 2, None, k).matrix)
        b = np.linalg.eigvals(bloch_reduce(cylinder, 1.0, 0.2, np.pi / 2, None, -k).matrix)
        assert matched_distance(a, b.conj()) < 1e-12
        assert np.abs(a.imag).max() < 1e-12


def test_bloch_reduce_rejects_gddw_along_periodic_axis(cylinder):
    p = make_profile({"kind": "bulk-gddw", "gamma_left": -0.1, "gamma_right": 0.1}, cylinder)
    with pytest.raises(ReductionError):
        bloch_reduce(cylinder, 1.0, 0.2, np.pi / 2, p, 0.0)


def test_bloch_reduce_needs_one_periodic_axis(torus2):
    with pytest.raises(ReductionError):
        bloch_reduce(torus2, 1.0, 0.2, np.pi / 2, None, 0.0)


@given(st.floats(0.1, 2.0), st.floats(0.0, 0.5), st.floats(-np.pi, np.pi),
       st.floats(-np.pi, np.pi))
def test_bloch_block_hermitian_without_dissipation(t1, t2, phi, k):
    g = build_honeycomb(2, 3, "periodic", "open", "zigzag")
    M = bloch_reduce(g, t1, t2, phi, None, k).matrix
    assert np.abs(M - M.conj().T).max() < 1e-12


@given(st.floats(0.0, 0.5), st.floats(-np.pi, np.pi))
def test_haldane_hermitian_random_parameters(t2, phi):
    g = build_honeycomb(3, 3, "periodic", "open", "zigzag")
    assert build_haldane(g, 1.0, t2, phi).hermiticity_error() < 1e-12
