import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nhcse import scenarios
from nhcse.hatano_nelson import (MOMENTUM_OFFSET, HNParams, compare_edge_to_half_hn,
                                 half_hn_dispersion, hn_bloch, hn_localization_length,
                                 hn_matrix, obc_decay_fit, skin_decay_length,
                                 zeta_from_harmonics)
from nhcse.lattice import bloch_reduce, build_honeycomb, make_profile
from nhcse.spectra import edge_weights, eigensolve

MODEL = {"t1": 1.0, "t2": 0.2, "phi": np.pi / 2}
SQRT3 = np.sqrt(3)


def eig(p):
    return np.linalg.eigvals(hn_matrix(p).matrix)


# ---------------------------------------------------------------------- chain

def test_params_hoppings():
    p = HNParams.from_hoppings(0.4, 0.6)
    assert (p.t_L, p.t_R) == pytest.approx((0.4, 0.6))
    assert p.v_eff == pytest.approx(1.0) and p.zeta == pytest.approx(0.2)


def test_reciprocal_chain():
    N = 32
    w = eig(HNParams.from_hoppings(0.5, 0.5, N=N))
    assert np.abs(w.imag).max() < 1e-12
    np.testing.assert_allclose(np.sort(w.real), np.sort(np.cos(2 * np.pi * np.arange(N) / N)),
                               atol=1e-12)


def test_periodic_ellipse():
    p = HNParams.from_hoppings(0.4, 0.6, N=64)
    w = eig(p)
    assert np.abs(w.imag).max() == pytest.approx(0.2, abs=1e-8)
    k = 2 * np.pi * np.arange(64) / 64
    ellipse = (0.4 + 0.6) * np.cos(k) - 1j * (0.4 - 0.6) * np.sin(k)
    C = np.abs(w[:, None] - ellipse[None, :])
    assert C.min(axis=1).max() < 1e-8


@given(st.floats(0.1, 1.0), st.floats(0.1, 1.0), st.floats(-0.1, 0.1), st.integers(5, 40))
def test_periodic_matches_bloch(tl, tr, a2, N):
    p = HNParams(tl + tr, tr - tl, N=N, second_harmonic=a2)
    k = 2 * np.pi * np.arange(N) / N
    bloch = hn_bloch(p, k)
    C = np.abs(eig(p)[:, None] - bloch[None, :])
    assert C.min(axis=1).max() < 1e-8


def test_open_chain_real():
    w = eig(HNParams.from_hoppings(0.4, 0.6, N=64, bc="open"))
    assert np.abs(w.imag).max() < 1e-8


def test_open_chain_similar_to_hermitian():
    # S^-1 H S with S = diag(r^(n/2)) is the symmetric chain with hopping sqrt(tL tR)
    N = 40
    w = np.sort(eig(HNParams.from_hoppings(0.3, 0.7, N=N, bc="open")).real)
    t = np.sqrt(0.3 * 0.7)
    exact = np.sort(2 * t * np.cos(np.pi * np.arange(1, N + 1) / (N + 1)))
    np.testing.assert_allclose(w, exact, atol=1e-8)


def test_bloch_offset_identity():
    # t_L e^{ik} + t_R e^{-ik} = v sin k' + i zeta cos k' with k' = k + offset
    p = HNParams(0.9, 0.15)
    k = np.linspace(-np.pi, np.pi, 17)
    kp = k + MOMENTUM_OFFSET
    np.testing.assert_allclose(hn_bloch(p, k), 0.9 * np.sin(kp) + 0.15j * np.cos(kp), atol=1e-14)


@pytest.mark.parametrize("kw", [{"N": 2}, {"bc": "twisted"}])
def test_chain_validation(kw):
    with pytest.raises(ValueError):
        hn_matrix(HNParams(1.0, 0.1, **kw))


# ------------------------------------------------------------------ half chain

def test_half_dispersion_without_dissipation():
    k, E = half_hn_dispersion(0.937, [0.0])
    assert np.all(E.imag == 0)
    np.testing.assert_allclose(E.real, 0.937 * np.sin(k))
    assert k[0] > -np.pi / 2 and k[-1] == pytest.approx(np.pi / 2)


def test_half_dispersion_values():
    _, E0 = half_hn_dispersion(0.937, [0.12, 0.023], k=[0.0])
    assert E0[0] == pytest.approx(0.143j, abs=1e-15)
    _, E1 = half_hn_dispersion(0.937, [0.12, 0.023], k=[np.pi / 2])
    assert E1[0] == pytest.approx(0.937 - 0.023j, abs=1e-15)


def test_half_dispersion_on_full_ellipse():
    # single harmonic: the half band is the Im > 0 half of the chain's ellipse
    v, zeta = 0.9, 0.1
    k, E = half_hn_dispersion(v, [zeta])
    p = HNParams(v, zeta)
    np.testing.assert_allclose(E, hn_bloch(p, k - MOMENTUM_OFFSET), atol=1e-14)
    assert np.all(E.imag >= -1e-15)


@pytest.mark.parametrize("mode,expected", [("a1", 0.12), ("center", 0.143)])
def test_zeta_modes(mode, expected):
    assert zeta_from_harmonics([0.12, 0.023], mode) == pytest.approx(expected)


def test_zeta_lstsq_single_harmonic():
    assert zeta_from_harmonics([0.12], "lstsq") == pytest.approx(0.12, rel=1e-6)
    with pytest.raises(ValueError):
        zeta_from_harmonics([0.1], "median")


# -------------------------------------------------------------- decay lengths

def test_localization_length_value():
    r = hn_localization_length(1.0, np.e, SQRT3)
    assert r.xi == pytest.approx(SQRT3 / 2)
    assert r.side == "right" and not r.extended
    assert hn_localization_length(np.e, 1.0, SQRT3).side == "left"


def test_reciprocal_chain_extended():
    assert hn_localization_length(0.5, 0.5).extended
    assert skin_decay_length(0.5, 0.5).extended


def test_negative_hopping_rejected():
    with pytest.raises(ValueError):
        hn_localization_length(-0.1, 0.5)


@pytest.fixture(scope="module")
def fitted_chain():
    """Open chain built from the edge harmonics at edge dissipation 0.1."""
    band = scenarios.edge_band(MODEL, 0.1, Ly=20, edge="lower", n_k=60)
    fit = scenarios.half_hn_fit(band, MODEL, 2)
    v = fit.v_eff
    return HNParams(v, zeta_from_harmonics(np.abs(fit.a), "a1"), N=200, bc="open", c=1.0)


@pytest.mark.xfail(strict=True, reason="c / (2 ln r) is a quarter of the OBC decay length")
def test_literal_length_matches_open_chain(fitted_chain):
    p = fitted_chain
    assert hn_localization_length(p.t_L, p.t_R, p.c).xi == pytest.approx(
        obc_decay_fit(p), rel=0.05)


def test_decay_length_matches_open_chain(fitted_chain):
    p = fitted_chain
    assert skin_decay_length(p.t_L, p.t_R, p.c).xi == pytest.approx(obc_decay_fit(p), rel=0.05)


@given(st.floats(0.6, 1.2), st.floats(0.01, 0.14))
def test_decay_length_property(v, asym):
    p = HNParams(v, asym * v, N=200, bc="open", c=1.0)
    assert skin_decay_length(p.t_L, p.t_R, 1.0).xi == pytest.approx(obc_decay_fit(p), rel=0.05)


def test_decay_fit_refuses_ill_conditioned_chain():
    with pytest.raises(ValueError):
        obc_decay_fit(HNParams(1.0, 0.5, N=200, bc="open"))


def test_weak_asymmetry_limit():
    # 2c / ln(tR/tL) -> c v / zeta
    v, zeta = 1.0, 1e-4
    p = HNParams(v, zeta)
    assert skin_decay_length(p.t_L, p.t_R, 1.0).xi == pytest.approx(v / zeta, rel=1e-6)


# ----------------------------------------------------------------- comparison

def test_compare_with_itself():
    disp = half_hn_dispersion(0.937, [0.12, 0.023])
    rep = compare_edge_to_half_hn(disp, disp)
    assert rep.max_deviation == 0.0
    assert not rep.flagged
    assert rep.half == "upper"


def test_compare_no_overlap():
    disp = half_hn_dispersion(0.937, [0.1])
    with pytest.raises(ValueError):
        compare_edge_to_half_hn((np.array([3.0]), np.array([0j])), disp)


@pytest.fixture(scope="module")
def lossy_band():
    band = scenarios.edge_band(MODEL, -0.1, Ly=20, edge="lower", n_k=60)
    return band, scenarios.half_hn_fit(band, MODEL, 2)


def test_dissipative_edge_matches_half_chain(lossy_band):
    band, fit = lossy_band
    assert fit.max_dev_fit < 0.05
    assert fit.half == "lower"
    # the edge mode exists inside the bulk gap only; it covers most of the half zone
    lo, hi = fit.coverage
    assert lo == pytest.approx(-hi, abs=0.06)
    assert hi > 0.8 * np.pi / 2


def test_free_edge_flagged(lossy_band):
    band, fit = lossy_band
    g = build_honeycomb(2, 20, "periodic", "open", "zigzag")
    prof = make_profile({"kind": "edge", "edge": "lower", "gamma": -0.1}, g)
    levels = []
    for d in band.delta:
        Hk = bloch_reduce(g, 1.0, 0.2, np.pi / 2, prof, np.pi + d)
        sp = eigensolve(Hk)
        W = edge_weights(sp.vectors, Hk.basis, 2)["upper"]
        cand = np.flatnonzero(np.abs(sp.eigenvalues.real) < 1.0)
        levels.append(sp.eigenvalues[cand[np.argmax(W[cand])]])
    levels = np.array(levels)
    assert np.abs(levels.imag).max() < 1e-3
    disp = half_hn_dispersion(fit.v_fit, fit.a, k=band.delta)
    rep = compare_edge_to_half_hn((band.delta, levels), disp)
    assert rep.flagged
    assert rep.half == "none"
