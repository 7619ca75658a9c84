"""Honeycomb geometry, Haldane Hamiltonians and dissipation profiles.

Sites live on a brick-wall embedding of the honeycomb lattice with
nearest-neighbour distance ``a = 1``.  Zigzag chains run along ``x``;
the A site of a vertical bond sits below its B partner, so the three
A -> B vectors are

    e1 = (0, 1),  e2 = (-sqrt(3)/2, -1/2),  e3 = (sqrt(3)/2, -1/2)

and the A -> A next-nearest-neighbour vectors are ``v1 = e2 - e3``,
``v2 = e3 - e1``, ``v3 = e1 - e2``.

Two unit-cell groupings are supported:

* ``zigzag`` style (zigzag, rectangle, torus): cell ``(m, n)`` holds one
  A and one B site of zigzag row ``n``; the period along ``x`` is
  ``c = sqrt(3)``.
* ``armchair`` style: cell ``(m, n)`` holds the two sites of brick
  column ``m`` in rows ``2n`` and ``2n + 1``; the period along ``y``
  is 3.

Sites are indexed lexicographically by ``(n, m, sublattice)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy.spatial import cKDTree

SQRT3 = np.sqrt(3.0)
ZIGZAG_PERIOD = SQRT3

NN_VECTORS = np.array([[0.0, 1.0], [-SQRT3 / 2, -0.5], [SQRT3 / 2, -0.5]])
NNN_VECTORS = np.array(
    [
        NN_VECTORS[1] - NN_VECTORS[2],
        NN_VECTORS[2] - NN_VECTORS[0],
        NN_VECTORS[0] - NN_VECTORS[1],
    ]
)

PERIODIC, OPEN = "periodic", "open"
SUBLATTICE_LABELS = ("A", "B")

_STYLE_ALIASES = {
    "zigzag": "zigzag",
    "zigzag-along-x": "zigzag",
    "armchair": "armchair",
    "armchair-along-y": "armchair",
    "rectangle": "rectangle",
    "torus": "torus",
}

EDGE_AXIS = {"lower": 1, "upper": 1, "left": 0, "right": 0}


class GeometryError(ValueError):
    """Inconsistent or degenerate lattice request."""


class ProfileError(ValueError):
    """Invalid dissipation profile request."""


@dataclass(frozen=True, eq=False)
class SiteGraph:
    """Honeycomb site graph with boundary conditions.

    Attributes
    ----------
    Lx, Ly : int
        Number of unit cells along x and y.
    bc_x, bc_y : str
        ``"periodic"`` or ``"open"``.
    edge_style : str
        One of ``zigzag``, ``armchair``, ``rectangle``, ``torus``.
    cells : ndarray, shape (N, 2)
        Integer cell coordinates ``(m, n)`` of each site.
    sublattice : ndarray, shape (N,)
        0 for A, 1 for B.
    positions : ndarray, shape (N, 2)
        Cartesian coordinates in units of the NN distance.
    nn_pairs, nn_disp : ndarray
        Nearest-neighbour bonds ``(i, j)`` and displacements ``r_j - r_i``
        (including the periodic image shift).  Each bond is stored once.
    nnn_pairs, nnn_disp, nnn_nu : ndarray
        Next-nearest-neighbour bonds, displacements and direction flags.
        ``nu = +1`` marks the positive direction ``i -> j``: the hopping
        amplitude is ``H[i, j] = t2 * exp(1j * nu * phi)``.
    translations : dict
        Periodic translation vector for each periodic axis (0 = x, 1 = y).
    """

    Lx: int
    Ly: int
    bc_x: str
    bc_y: str
    edge_style: str
    cells: np.ndarray
    sublattice: np.ndarray
    positions: np.ndarray
    nn_pairs: np.ndarray
    nn_disp: np.ndarray
    nnn_pairs: np.ndarray
    nnn_disp: np.ndarray
    nnn_nu: np.ndarray
    translations: dict = field(default_factory=dict)

    nn_vectors = NN_VECTORS
    nnn_vectors = NNN_VECTORS

    @property
    def n_sites(self) -> int:
        return len(self.sublattice)

    @property
    def style(self) -> str:
        return "armchair" if self.edge_style == "armchair" else "zigzag"

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Lx, self.Ly)

    @property
    def periodic_axes(self) -> list[int]:
        return [ax for ax, bc in enumerate((self.bc_x, self.bc_y)) if bc == PERIODIC]

    @property
    def open_axes(self) -> list[int]:
        return [ax for ax, bc in enumerate((self.bc_x, self.bc_y)) if bc == OPEN]

    def cell_period(self, axis: int) -> float:
        """Length of one unit cell along ``axis``."""
        if self.style == "zigzag":
            return ZIGZAG_PERIOD if axis == 0 else 1.5
        return SQRT3 / 2 if axis == 0 else 3.0

    def site_index(self, m: int, n: int, s: int) -> int:
        """Row of site ``(m, n, s)`` in every real-space operator."""
        if not (0 <= m < self.Lx and 0 <= n < self.Ly and s in (0, 1)):
            raise IndexError(f"site ({m}, {n}, {s}) outside the graph")
        return (n * self.Lx + m) * 2 + s

    def coordination(self) -> tuple[np.ndarray, np.ndarray]:
        """Number of NN and NNN bonds attached to each site."""
        nn = np.bincount(self.nn_pairs.ravel(), minlength=self.n_sites)
        nnn = np.bincount(self.nnn_pairs.ravel(), minlength=self.n_sites)
        return nn, nnn

    def rows(self, axis: int) -> np.ndarray:
        """Cell coordinate of each site along ``axis``."""
        return self.cells[:, axis]

    def n_rows(self, axis: int) -> int:
        return self.Lx if axis == 0 else self.Ly


def _normalize_style(edge_style: str) -> str:
    try:
        return _STYLE_ALIASES[edge_style]
    except KeyError:
        raise GeometryError(f"unknown edge_style {edge_style!r}") from None


def _check_bc(bc_x: str, bc_y: str, style: str) -> None:
    for bc in (bc_x, bc_y):
        if bc not in (PERIODIC, OPEN):
            raise GeometryError(f"boundary condition must be 'periodic' or 'open', got {bc!r}")
    rules = {
        "zigzag": bc_y == OPEN,
        "armchair": bc_x == OPEN,
        "rectangle": bc_x == OPEN and bc_y == OPEN,
        "torus": bc_x == PERIODIC and bc_y == PERIODIC,
    }
    if not rules[style]:
        raise GeometryError(f"edge_style {style!r} inconsistent with bc_x={bc_x!r}, bc_y={bc_y!r}")


def _brick_sites(Lx: int, Ly: int, style: str):
    """Cells, sublattice labels and positions in (n, m, s) order."""
    cells, sub, pos = [], [], []
    for n in range(Ly):
        for m in range(Lx):
            for s in (0, 1):
                if style == "armchair":
                    j = m
                    # the A site of column j is in the row with j - row even
                    row = 2 * n + ((j % 2) if s == 0 else 1 - (j % 2))
                else:
                    row = n
                    j = 2 * m + ((row % 2) if s == 0 else 1 - (row % 2))
                x = j * SQRT3 / 2
                y = 1.5 * row + (0.5 if s == 0 else 0.0)
                cells.append((m, n))
                sub.append(s)
                pos.append((x, y))
    return np.array(cells, dtype=int), np.array(sub, dtype=int), np.array(pos, dtype=float)


def _find_bonds(positions: np.ndarray, translations: list[np.ndarray], length: float):
    """All bonds of a given length, one entry per (pair, image)."""
    tree = cKDTree(positions)
    tol = 1e-6
    pairs, disps = [], []
    shifts = itertools.product((-1, 0, 1), repeat=len(translations))
    for combo in shifts:
        t = np.zeros(2)
        for c, vec in zip(combo, translations):
            t = t + c * vec
        other = cKDTree(positions + t)
        sdm = tree.sparse_distance_matrix(other, length + tol, output_type="ndarray")
        for i, j, dist in zip(sdm["i"], sdm["j"], sdm["v"]):
            if abs(dist - length) > tol:
                continue
            if i > j:
                continue
            if i == j and not (combo > tuple(0 for _ in combo)):
                continue
            pairs.append((i, j))
            disps.append(positions[j] + t - positions[i])
    pairs = np.array(pairs, dtype=int).reshape(-1, 2)
    disps = np.array(disps, dtype=float).reshape(-1, 2)
    order = np.lexsort((disps[:, 1].round(9), disps[:, 0].round(9), pairs[:, 1], pairs[:, 0]))
    return pairs[order], disps[order]


def _nnn_direction(sub_i: np.ndarray, disp: np.ndarray) -> np.ndarray:
    """+1 when an NNN hop i -> j runs along the positive direction."""
    nu = np.zeros(len(disp), dtype=int)
    for k, (s, d) in enumerate(zip(sub_i, disp)):
        sign = 1 if s == 0 else -1
        match = np.abs(NNN_VECTORS - d).max(axis=1) < 1e-6
        anti = np.abs(NNN_VECTORS + d).max(axis=1) < 1e-6
        if match.any():
            nu[k] = sign
        elif anti.any():
            nu[k] = -sign
        else:
            raise GeometryError(f"displacement {d} is not an NNN vector")
    return nu


def build_honeycomb(Lx: int, Ly: int, bc_x: str = PERIODIC, bc_y: str = OPEN,
                    edge_style: str = "zigzag") -> SiteGraph:
    """Build a honeycomb site graph.

    Parameters
    ----------
    Lx, Ly : int
        Cell counts along x and y, both at least 2.
    bc_x, bc_y : {"periodic", "open"}
        Boundary conditions.
    edge_style : str
        ``zigzag`` (open y, zigzag rows at y=0 and the top), ``armchair``
        (open x, armchair columns), ``rectangle`` (both open) or ``torus``
        (both periodic).

    Returns
    -------
    SiteGraph
    """
    style = _normalize_style(edge_style)
    if int(Lx) != Lx or int(Ly) != Ly or Lx < 2 or Ly < 2:
        raise GeometryError(f"degenerate size Lx={Lx}, Ly={Ly}; both must be integers >= 2")
    Lx, Ly = int(Lx), int(Ly)
    _check_bc(bc_x, bc_y, style)

    cells, sub, pos = _brick_sites(Lx, Ly, "armchair" if style == "armchair" else "zigzag")
    translations: dict[int, np.ndarray] = {}
    if style == "armchair":
        if bc_y == PERIODIC:
            translations[1] = np.array([0.0, 3.0 * Ly])
    else:
        if bc_x == PERIODIC:
            translations[0] = np.array([SQRT3 * Lx, 0.0])
        if bc_y == PERIODIC:
            # an odd number of zigzag rows shifts the A/B pattern by one column
            translations[1] = np.array([(Ly % 2) * SQRT3 / 2, 1.5 * Ly])
    tvecs = [translations[ax] for ax in sorted(translations)]

    nn_pairs, nn_disp = _find_bonds(pos, tvecs, 1.0)
    nnn_pairs, nnn_disp = _find_bonds(pos, tvecs, SQRT3)
    nnn_nu = _nnn_direction(sub[nnn_pairs[:, 0]], nnn_disp)

    return SiteGraph(Lx, Ly, bc_x, bc_y, style, cells, sub, pos,
                     nn_pairs, nn_disp, nnn_pairs, nnn_disp, nnn_nu, translations)


@dataclass(frozen=True, eq=False)
class BlochCut:
    """Basis of a momentum-reduced operator: one slice of the parent graph.

    ``sites`` are the parent-graph indices of the reference slice (cell
    coordinate 0 along ``axis``); row ``r`` of the reduced operator is
    site ``sites[r]``.
    """

    graph: SiteGraph
    axis: int
    sites: np.ndarray

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def cells(self) -> np.ndarray:
        return self.graph.cells[self.sites]

    @property
    def sublattice(self) -> np.ndarray:
        return self.graph.sublattice[self.sites]

    @property
    def positions(self) -> np.ndarray:
        return self.graph.positions[self.sites]

    @property
    def open_axes(self) -> list[int]:
        return [ax for ax in self.graph.open_axes if ax != self.axis]

    def rows(self, axis: int) -> np.ndarray:
        return self.cells[:, axis]

    def n_rows(self, axis: int) -> int:
        return self.graph.n_rows(axis)


@dataclass(frozen=True, eq=False)
class LatticeOperator:
    """Dense single-particle operator on a site graph or a Bloch cut."""

    matrix: np.ndarray
    basis: Any
    k_label: float | None = None

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("operator matrix must be square")
        if self.basis is not None and self.matrix.shape[0] != self.basis.n_sites:
            raise ValueError("operator dimension differs from the number of basis sites")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def build_haldane(graph: SiteGraph, t1: float = 1.0, t2: float = 0.2,
                  phi: float = np.pi / 2) -> LatticeOperator:
    """Haldane Hamiltonian in real space.

    ``H[i, j] = t1`` on NN bonds and ``t2 * exp(1j * nu_ij * phi)`` on NNN
    bonds, with the Hermitian partner on the transposed entry.  Bonds to
    several periodic images of the same site are summed.
    """
    N = graph.n_sites
    H = np.zeros((N, N), dtype=complex)
    i, j = graph.nn_pairs.T
    np.add.at(H, (i, j), t1)
    np.add.at(H, (j, i), t1)
    i, j = graph.nnn_pairs.T
    amp = t2 * np.exp(1j * graph.nnn_nu * phi)
    np.add.at(H, (i, j), amp)
    np.add.at(H, (j, i), amp.conj())
    return LatticeOperator(H, graph)


@dataclass(frozen=True, eq=False)
class DissipationProfile:
    """Per-site imaginary on-site potential.

    Attributes
    ----------
    kind : str
        ``bulk-uniform``, ``bulk-gddw``, ``edge``, ``staggered`` or ``custom``.
    gamma : ndarray, shape (N,)
        Real gamma_i for every site (0 where unspecified).
    params : dict
        The defining scalars (after wall snapping).
    """

    kind: str
    gamma: np.ndarray
    params: dict

    @property
    def n_sites(self) -> int:
        return len(self.gamma)


def _snap_walls(walls, n_cells: int) -> tuple[int, int]:
    if len(walls) != 2:
        raise ProfileError("walls must be a (start, stop) pair")
    snapped = []
    for w in walls:
        if not (0 <= w < n_cells):
            raise ProfileError(f"wall position {w} outside [0, {n_cells})")
        snapped.append(int(np.floor(w + 0.5)) % n_cells)
    if snapped[0] == snapped[1]:
        raise ProfileError("walls snap onto the same cell boundary")
    return snapped[0], snapped[1]


def _two_region(coord: np.ndarray, n_cells: int, params: Mapping, where: str):
    """gamma_left everywhere except the cyclic window [start, stop) -> gamma_right."""
    gl, gr = float(params["gamma_left"]), float(params["gamma_right"])
    start, stop = _snap_walls(params.get("walls", (n_cells / 2, 0)), n_cells)
    inside = (coord - start) % n_cells < (stop - start) % n_cells
    return np.where(inside, gr, gl), {"gamma_left": gl, "gamma_right": gr,
                                      "walls": [start, stop], "along": where}


def make_profile(spec: Mapping[str, Any], graph) -> DissipationProfile:
    """Build a dissipation profile on ``graph``.

    Parameters
    ----------
    spec : mapping
        ``kind`` plus parameters:

        - ``bulk-uniform``: ``gamma``
        - ``bulk-gddw``: ``gamma_left``, ``gamma_right``, optional
          ``walls=(start, stop)`` delimiting the gamma_right window in cell
          units along ``axis`` (default ``"x"``), cyclic
        - ``edge``: ``edge`` in {lower, upper, left, right} and either
          ``gamma`` or ``gamma_left``/``gamma_right``/``walls`` along the edge;
          acts on the outermost row only
        - ``staggered``: ``gamma`` (+gamma on A, -gamma on B)
        - ``custom``: ``gamma`` array with one value per site
    graph : SiteGraph
    """
    kind = spec.get("kind")
    N = graph.n_sites
    gamma = np.zeros(N)
    params: dict[str, Any] = {}
    if kind == "bulk-uniform":
        gamma[:] = float(spec["gamma"])
        params = {"gamma": float(spec["gamma"])}
    elif kind == "bulk-gddw":
        axis = {"x": 0, "y": 1}[spec.get("axis", "x")]
        n_cells = graph.n_rows(axis)
        gamma, params = _two_region(graph.rows(axis), n_cells, spec, spec.get("axis", "x"))
    elif kind == "edge":
        edge = spec.get("edge", "lower")
        if edge not in EDGE_AXIS:
            raise ProfileError(f"unknown edge selector {edge!r}")
        axis = EDGE_AXIS[edge]
        if axis not in graph.open_axes:
            raise ProfileError(f"edge {edge!r} lies on a periodic direction")
        coord = graph.rows(axis)
        outer = 0 if edge in ("lower", "left") else graph.n_rows(axis) - 1
        on_edge = coord == outer
        along = 1 - axis
        if "gamma" in spec:
            values = np.full(N, float(spec["gamma"]))
            params = {"gamma": float(spec["gamma"])}
        else:
            values, params = _two_region(graph.rows(along), graph.n_rows(along), spec,
                                         "xy"[along])
        gamma = np.where(on_edge, values, 0.0)
        params["edge"] = edge
    elif kind == "staggered":
        g = float(spec["gamma"])
        gamma = np.where(graph.sublattice == 0, g, -g)
        params = {"gamma": g}
    elif kind == "custom":
        gamma = np.asarray(spec["gamma"], dtype=float).copy()
        if gamma.shape != (N,):
            raise ProfileError(f"custom gamma needs {N} values, got shape {gamma.shape}")
    else:
        raise ProfileError(f"unknown profile kind {kind!r}")
    gamma = gamma.astype(float)
    gamma.setflags(write=False)
    return DissipationProfile(kind, gamma, params)


def apply_dissipation(H: LatticeOperator, p: DissipationProfile) -> LatticeOperator:
    """Return ``H + i diag(gamma)``; the input is left untouched."""
    if p.n_sites != H.dim:
        raise ValueError(f"profile has {p.n_sites} sites, operator dimension is {H.dim}")
    M = H.matrix.copy()
    if np.any(p.gamma != 0):
        M[np.diag_indices_from(M)] += 1j * p.gamma
    return LatticeOperator(M, H.basis, H.k_label)


class ReductionError(ValueError):
    """Momentum reduction requested where it is not exact."""


def bloch_cut(graph: SiteGraph) -> tuple[BlochCut, np.ndarray]:
    """Reference slice of a one-periodic-axis graph and the site -> slice map."""
    if len(graph.periodic_axes) != 1:
        raise ReductionError("Bloch reduction needs exactly one periodic direction")
    axis = graph.periodic_axes[0]
    ref = np.flatnonzero(graph.cells[:, axis] == 0)
    other = 1 - axis
    key = {(c[other], s): r for r, (c, s) in enumerate(zip(graph.cells[ref], graph.sublattice[ref]))}
    slot = np.array([key[(c[other], s)] for c, s in zip(graph.cells, graph.sublattice)])
    return BlochCut(graph, axis, ref), slot


def allowed_momenta(graph: SiteGraph) -> np.ndarray:
    """k = 2 pi n / L along the single periodic axis, n = 0..L-1."""
    cut, _ = bloch_cut(graph)
    L = graph.n_rows(cut.axis)
    return 2 * np.pi * np.arange(L) / L


def bloch_reduce(graph: SiteGraph, t1: float, t2: float, phi: float,
                 profile: DissipationProfile | None, k: float) -> LatticeOperator:
    """Momentum-resolved operator along the periodic axis.

    Parameters
    ----------
    graph : SiteGraph
        Must have exactly one periodic direction.
    t1, t2, phi : float
        Haldane parameters.
    profile : DissipationProfile or None
        Must be constant along the periodic axis.
    k : float
        Momentum per unit cell (dimensionless, period 2 pi).

    Returns
    -------
    LatticeOperator
        Dimension ``2 * L_transverse``; its basis is a :class:`BlochCut`.
    """
    cut, slot = bloch_cut(graph)
    axis = cut.axis
    a = graph.cell_period(axis)
    if profile is not None:
        if profile.n_sites != graph.n_sites:
            raise ValueError("profile does not match graph")
        ref_gamma = profile.gamma[cut.sites]
        if np.max(np.abs(profile.gamma - ref_gamma[slot])) > 0:
            raise ReductionError("dissipation varies along the periodic axis; "
                                 "use the real-space operator")
    in_ref = graph.cells[:, axis] == 0
    n = cut.n_sites
    Hk = np.zeros((n, n), dtype=complex)

    def add(pairs, disp, amp):
        i, j = pairs.T
        phase = np.exp(1j * k * disp[:, axis] / a)
        sel = in_ref[i]
        np.add.at(Hk, (slot[i[sel]], slot[j[sel]]), (amp * phase)[sel])
        sel = in_ref[j]
        np.add.at(Hk, (slot[j[sel]], slot[i[sel]]), np.conj(amp * phase)[sel])

    add(graph.nn_pairs, graph.nn_disp, np.full(len(graph.nn_pairs), t1, dtype=complex))
    add(graph.nnn_pairs, graph.nnn_disp, t2 * np.exp(1j * graph.nnn_nu * phi))
    if profile is not None:
        Hk[np.diag_indices(n)] += 1j * profile.gamma[cut.sites]
    return LatticeOperator(Hk, cut, float(k))
