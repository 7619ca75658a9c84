"""Effective non-reciprocal chain for a dissipative chiral edge.

The edge band ``E(k) = v sin k + i gamma_eff(k)`` on the half zone
``k in (-pi/2, pi/2]`` is half of the Bloch ellipse of a generalized
Hatano-Nelson chain

    H = sum_i (t_L c_i^dag c_{i+1} + t_R c_{i+1}^dag c_i),
    t_L = (v - zeta)/2,  t_R = (v + zeta)/2.

In real space (``t_L`` above, ``t_R`` below the diagonal) the Bloch
energy is ``t_L e^{ik} + t_R e^{-ik}``.  It equals
``v sin k' + i zeta cos k'`` with ``k' = k + pi/2``
(:data:`MOMENTUM_OFFSET`).  A second harmonic ``i a2 cos 2k'`` becomes
a symmetric range-2 hopping ``-i a2 / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import ZIGZAG_PERIOD, LatticeOperator

MOMENTUM_OFFSET = np.pi / 2
# (t_R/t_L)^N beyond e^MAX_SKIN_EXPONENT makes dense eigenvectors unreliable
MAX_SKIN_EXPONENT = 64.0


@dataclass(frozen=True)
class HNParams:
    """Generalized Hatano-Nelson chain.

    Attributes
    ----------
    v_eff : float
        Velocity, ``t_L + t_R``.
    zeta : float
        Non-reciprocity, ``t_R - t_L``.
    N : int
        Number of sites.
    bc : {"periodic", "open"}
    c : float
        Lattice spacing (the zigzag period sqrt(3) by default).
    second_harmonic : float
        ``a2``; adds the range-2 hopping ``-i a2 / 2`` when nonzero.
    """

    v_eff: float
    zeta: float
    N: int = 64
    bc: str = "periodic"
    c: float = ZIGZAG_PERIOD
    second_harmonic: float = 0.0

    @property
    def t_L(self) -> float:
        return (self.v_eff - self.zeta) / 2

    @property
    def t_R(self) -> float:
        return (self.v_eff + self.zeta) / 2

    @classmethod
    def from_hoppings(cls, t_L: float, t_R: float, **kw) -> "HNParams":
        return cls(t_L + t_R, t_R - t_L, **kw)

    @classmethod
    def from_harmonics(cls, v_eff: float, a, zeta_mode: str = "a1",
                       include_second: bool = True, **kw) -> "HNParams":
        """Chain from edge harmonics ``a = (a1, a2, ...)``.

        ``zeta_mode`` picks how the nearest-neighbour asymmetry is taken
        from the harmonics: ``"a1"`` (zeta = a1), ``"lstsq"`` (L2
        projection of sum_n a_n cos nk onto cos k over the half zone) or
        ``"center"`` (zeta = sum_n a_n, the band-center dissipation).
        """
        return cls(v_eff, zeta_from_harmonics(a, zeta_mode),
                   second_harmonic=float(a[1]) if include_second and len(a) > 1 else 0.0, **kw)


def zeta_from_harmonics(a, mode: str = "a1") -> float:
    """Nearest-neighbour non-reciprocity implied by ``a = (a1, a2, ...)``."""
    a = np.asarray(a, dtype=float)
    if mode == "a1":
        return float(a[0])
    if mode == "center":
        return float(a.sum())
    if mode == "lstsq":
        k = np.linspace(-np.pi / 2, np.pi / 2, 20001)
        g = sum(an * np.cos((n + 1) * k) for n, an in enumerate(a))
        return float(np.trapezoid(g * np.cos(k), k) / np.trapezoid(np.cos(k) ** 2, k))
    raise ValueError(f"unknown zeta mode {mode!r}")


def hn_matrix(p: HNParams) -> LatticeOperator:
    """Real-space chain: ``t_L`` on the super-diagonal, ``t_R`` below."""
    if p.N < 3:
        raise ValueError("chain needs N >= 3")
    N = p.N
    H = np.zeros((N, N), dtype=complex)
    i = np.arange(N - 1)
    H[i, i + 1] = p.t_L
    H[i + 1, i] = p.t_R
    h2 = -0.5j * p.second_harmonic
    if h2 != 0:
        j = np.arange(N - 2)
        H[j, j + 2] += h2
        H[j + 2, j] += h2
    if p.bc == "periodic":
        H[N - 1, 0] += p.t_L
        H[0, N - 1] += p.t_R
        if h2 != 0:
            for a, b in ((N - 2, 0), (N - 1, 1)):
                H[a, b] += h2
                H[b, a] += h2
    elif p.bc != "open":
        raise ValueError(f"unknown boundary condition {p.bc!r}")
    return LatticeOperator(H, None)


def hn_bloch(p: HNParams, k):
    """Bloch energy of the real-space chain at momentum ``k``."""
    k = np.asarray(k, dtype=float)
    return (p.t_L * np.exp(1j * k) + p.t_R * np.exp(-1j * k)
            - 1j * p.second_harmonic * np.cos(2 * k))


def half_hn_dispersion(v_eff: float, a, k=None, n_samples: int = 201,
                       a0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """``E(k) = v_eff sin k + i (a0 + sum_n a_n cos n k)`` on (-pi/2, pi/2].

    ``a = (a1, a2, ...)``; pass ``k`` to evaluate at given momenta.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.size < 1:
        raise ValueError("need at least one harmonic")
    if k is None:
        k = np.linspace(-np.pi / 2, np.pi / 2, n_samples + 1)[1:]
    k = np.asarray(k, dtype=float)
    gamma = a0 + sum(an * np.cos((n + 1) * k) for n, an in enumerate(a))
    return k, v_eff * np.sin(k) + 1j * gamma


@dataclass(frozen=True)
class HNLength:
    """Localization length with the end of the chain the modes pile up at."""

    xi: float
    side: str
    extended: bool = False


def _ratio(t_L: float, t_R: float) -> float:
    if t_L <= 0 or t_R <= 0:
        raise ValueError("hoppings must be positive")
    return t_R / t_L


def hn_localization_length(t_L: float, t_R: float, c: float = ZIGZAG_PERIOD) -> HNLength:
    """``xi = c / (2 ln(t_R / t_L))`` as a positive magnitude.

    ``side`` is ``"right"`` when ``t_R > t_L`` (stronger rightward hopping).
    """
    r = _ratio(t_L, t_R)
    if r == 1:
        return HNLength(np.inf, "none", extended=True)
    return HNLength(float(c / (2 * abs(np.log(r)))), "right" if r > 1 else "left")


def skin_decay_length(t_L: float, t_R: float, c: float = ZIGZAG_PERIOD) -> HNLength:
    """Decay length of OBC skin modes in the ``|psi|^2 ~ exp(-2 x / xi)`` convention.

    The OBC eigenvectors are ``(t_R/t_L)^{n/2}`` times standing waves, so
    ``xi = 2 c / ln(t_R / t_L)``; for weak asymmetry this is ``c v / zeta``,
    the continuum decay length.
    """
    r = _ratio(t_L, t_R)
    if r == 1:
        return HNLength(np.inf, "none", extended=True)
    return HNLength(float(2 * c / abs(np.log(r))), "right" if r > 1 else "left")


def obc_decay_fit(p: HNParams, trim: int = 10) -> float:
    """Decay length fitted from the summed OBC eigenvector density.

    Uses ``ln rho_n`` against ``n c`` away from both ends (``trim`` sites)
    and returns xi in the ``rho ~ exp(-2 x / xi)`` convention.
    """
    if p.bc != "open":
        raise ValueError("decay fit needs an open chain")
    if p.N * abs(np.log(_ratio(p.t_L, p.t_R))) > MAX_SKIN_EXPONENT:
        raise ValueError("chain too long for its asymmetry: eigenvectors are ill-conditioned")
    w, v = np.linalg.eig(hn_matrix(p).matrix)
    rho = np.abs(v / np.linalg.norm(v, axis=0)) ** 2
    prof = rho.mean(axis=1)
    n = np.arange(p.N)[trim:p.N - trim]
    slope = np.polyfit(n * p.c, np.log(prof[trim:p.N - trim]), 1)[0]
    return float(2 / abs(slope))


@dataclass(frozen=True)
class MismatchReport:
    k: np.ndarray
    deviation: np.ndarray
    max_deviation: float
    mean_deviation: float
    half: str
    flagged: bool


def compare_edge_to_half_hn(edge_levels, dispersion, tol: float = 0.05) -> MismatchReport:
    """Compare sampled edge levels with a half-HN dispersion.

    Parameters
    ----------
    edge_levels : (k, E) arrays
    dispersion : (k, E) arrays, as returned by :func:`half_hn_dispersion`
        Interpolated (real and imaginary parts separately) at the edge
        momenta that fall inside its range.
    tol : float
        Mismatches above ``tol`` are flagged.
    """
    ke, Ee = (np.asarray(x) for x in edge_levels)
    kd, Ed = (np.asarray(x) for x in dispersion)
    order = np.argsort(kd)
    kd, Ed = kd[order], Ed[order]
    inside = (ke >= kd[0] - 1e-12) & (ke <= kd[-1] + 1e-12)
    if not inside.any():
        raise ValueError("no overlapping k points")
    ke, Ee = ke[inside], Ee[inside]
    model = np.interp(ke, kd, Ed.real) + 1j * np.interp(ke, kd, Ed.imag)
    dev = np.abs(Ee - model)
    im = float(np.mean(Ee.imag))
    half = "none" if abs(im) < 1e-8 else ("upper" if im > 0 else "lower")
    return MismatchReport(ke, dev, float(dev.max()), float(dev.mean()), half,
                          bool(dev.max() > tol))
