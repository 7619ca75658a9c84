"""Bulk Bloch matrix, Chern number and chiral edge velocity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import NN_VECTORS, NNN_VECTORS, SQRT3

# primitive lattice vectors (A -> A) and their reciprocal partners
PRIMITIVE = np.array([[SQRT3, 0.0], [SQRT3 / 2, 1.5]])
RECIPROCAL = 2 * np.pi * np.linalg.inv(PRIMITIVE).T


class GapClosedError(ArithmeticError):
    """The band gap closes (or nearly closes) somewhere on the k grid."""


@dataclass(frozen=True)
class BlochMap:
    """2x2 Bloch matrix of the (dissipative) Haldane model.

    ``gauge="position"`` keeps the site positions in the Fourier phases,
    giving ``[[p_k(phi), T_k], [T_k*, p_k(-phi)]]`` with
    ``p_k(phi) = 2 t2 sum_i cos(k.v_i + phi)`` and
    ``T_k = t1 sum_l exp(i k.e_l)``.  ``gauge="periodic"`` places both
    sublattices at the cell origin so the matrix is periodic under
    reciprocal-lattice shifts.
    """

    t1: float = 1.0
    t2: float = 0.2
    phi: float = np.pi / 2
    gamma_a: float = 0.0
    gamma_b: float = 0.0
    gauge: str = "position"

    basis = RECIPROCAL

    def p(self, k, phi: float) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return 2 * self.t2 * np.cos(k @ NNN_VECTORS.T + phi).sum(axis=-1)

    def T(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        shift = NN_VECTORS[0] if self.gauge == "periodic" else np.zeros(2)
        return self.t1 * np.exp(1j * (k @ (NN_VECTORS - shift).T)).sum(axis=-1)

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        out = np.empty(k.shape[:-1] + (2, 2), dtype=complex)
        out[..., 0, 0] = self.p(k, self.phi) + 1j * self.gamma_a
        out[..., 1, 1] = self.p(k, -self.phi) + 1j * self.gamma_b
        out[..., 0, 1] = self.T(k)
        out[..., 1, 0] = np.conj(self.T(k))
        return out


def _grid(n: int) -> np.ndarray:
    f = np.arange(n) / n
    f1, f2 = np.meshgrid(f, f, indexing="ij")
    return f1[..., None] * RECIPROCAL[0] + f2[..., None] * RECIPROCAL[1]


def dirac_points() -> np.ndarray:
    """The two inequivalent zone corners K and K'."""
    return np.array([(RECIPROCAL[0] + 2 * RECIPROCAL[1]) / 3,
                     (2 * RECIPROCAL[0] + RECIPROCAL[1]) / 3])


def chern_number(bloch: BlochMap, band: int = 0, grid: int = 24,
                 min_gap: float = 1e-6) -> int:
    """Chern number of one band by plaquette link products.

    Parameters
    ----------
    bloch : BlochMap
        Hermitian map (zero dissipation).
    band : int
        0 for the lower band, 1 for the upper band.
    grid : int
        Number of k points per reciprocal direction.
    min_gap : float
        Smallest admissible direct gap on the grid.

    Returns
    -------
    int

    Raises
    ------
    GapClosedError
        If the direct gap drops below ``min_gap`` on the grid or at K, K'.
    """
    if bloch.gamma_a != 0 or bloch.gamma_b != 0:
        raise ValueError("Chern number is defined here for the Hermitian model only")
    periodic = BlochMap(bloch.t1, bloch.t2, bloch.phi, gauge="periodic")
    H = periodic(_grid(grid))
    w, v = np.linalg.eigh(H)
    # the Dirac points are where the Haldane mass acts; always include them
    w_dirac = np.linalg.eigvalsh(periodic(dirac_points()))
    gap = float(min(np.min(w[..., 1] - w[..., 0]), np.min(w_dirac[:, 1] - w_dirac[:, 0])))
    if gap < min_gap:
        raise GapClosedError(f"direct gap {gap:.3e} below {min_gap:.1e} on the {grid}x{grid} grid "
                             "or at the Dirac points")
    u = v[..., band]

    def link(shift_axis):
        nb = np.roll(u, -1, axis=shift_axis)
        z = np.einsum("abi,abi->ab", u.conj(), nb)
        return z / np.abs(z)

    u1, u2 = link(0), link(1)
    flux = np.angle(u1 * np.roll(u2, -1, axis=0) * np.roll(u1, -1, axis=1).conj() * u2.conj())
    q = flux.sum() / (2 * np.pi)
    return int(np.rint(q))


def edge_velocity(kx, t1: float = 1.0, t2: float = 0.2):
    """Chiral edge-mode velocity ``6 t1 t2 / sqrt(t1^2 + 8 t2^2 (1 - cos kx))``."""
    if t1 <= 0:
        raise ValueError("t1 must be positive")
    kx = np.asarray(kx, dtype=float)
    v = 6 * t1 * t2 / np.sqrt(t1**2 + 8 * t2**2 * (1 - np.cos(kx)))
    return float(v) if v.ndim == 0 else v
