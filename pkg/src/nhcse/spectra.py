"""Non-Hermitian eigensolves, edge-state classification and density fits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .lattice import DissipationProfile, LatticeOperator

EPS = np.finfo(float).eps


class SolverError(RuntimeError):
    """Eigensolver failure; ``residuals`` holds the offending values."""

    def __init__(self, msg: str, residuals=None):
        super().__init__(msg)
        self.residuals = residuals


class FitError(ValueError):
    """Ill-posed fit (too few points, rank deficiency, bad densities)."""


class GaplessWarning(UserWarning):
    """Bulk-like states found inside the gap window."""


def operator_norm_bound(M: np.ndarray) -> float:
    """Cheap upper bound on the spectral norm: sqrt(||M||_1 ||M||_inf)."""
    A = np.abs(M)
    return float(np.sqrt(A.sum(axis=0).max() * A.sum(axis=1).max()))


@dataclass(frozen=True, eq=False)
class ComplexSpectrum:
    """Eigenvalues and unit-norm right eigenvectors of one operator.

    Attributes
    ----------
    eigenvalues : ndarray, shape (n,)
        Sorted by (Re E, Im E).
    vectors : ndarray, shape (dim, n)
        Column ``j`` belongs to ``eigenvalues[j]``.
    residuals : ndarray, shape (n,)
        ``||H v - E v||`` per pair.
    operator : LatticeOperator
    norm : float
        Norm bound of the operator used in the residual check.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    operator: LatticeOperator
    norm: float

    @property
    def basis(self):
        return self.operator.basis

    def __len__(self) -> int:
        return len(self.eigenvalues)


def _clusters(w: np.ndarray, tol: float) -> list[np.ndarray]:
    """Groups of eigenvalue indices linked by |E_i - E_j| < tol."""
    n = len(w)
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    order = np.argsort(w.real, kind="stable")
    wr = w.real[order]
    for a in range(n):
        b = a + 1
        while b < n and wr[b] - wr[a] < tol:
            if abs(w[order[b]] - w[order[a]]) < tol:
                ra, rb = find(order[a]), find(order[b])
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            b += 1
    roots = np.array([find(i) for i in range(n)])
    return [np.flatnonzero(roots == r) for r in np.unique(roots) if np.sum(roots == r) > 1]


def eigensolve(H: LatticeOperator, observable: np.ndarray | None = None,
               degeneracy_tol: float | None = None, residual_tol: float = 1e-8) -> ComplexSpectrum:
    """Full dense eigendecomposition with residual diagnostics.

    Parameters
    ----------
    H : LatticeOperator
    observable : ndarray, optional
        Real per-site weights.  Inside every cluster of eigenvalues that
        coincide within ``degeneracy_tol`` the eigenvectors are rotated to
        diagonalize this observable, which makes the basis of a degenerate
        subspace reproducible (e.g. one state per edge).
    degeneracy_tol : float, optional
        Defaults to ``1e3 * eps * ||H||``, i.e. eigenvalues that cannot be
        told apart at round-off level.
    residual_tol : float
        Relative residual bound; pairs above ``residual_tol * ||H||``
        raise :class:`SolverError`.

    Returns
    -------
    ComplexSpectrum
    """
    M = H.matrix
    if not np.all(np.isfinite(M)):
        raise SolverError("operator has non-finite entries")
    norm = operator_norm_bound(M)
    if np.array_equal(M, M.conj().T):
        w, v = np.linalg.eigh(M)
        w = w.astype(complex)
    else:
        w, v = np.linalg.eig(M)
    v = v / np.linalg.norm(v, axis=0)

    if observable is not None:
        d = np.asarray(observable, dtype=float)
        tol = 1e3 * EPS * max(norm, 1.0) if degeneracy_tol is None else degeneracy_tol
        for cl in _clusters(w, tol):
            q, _ = np.linalg.qr(v[:, cl])
            obs = q.conj().T @ (d[:, None] * q)
            _, u = np.linalg.eigh(obs)
            v[:, cl] = q @ u
            w[cl] = w[cl].mean()

    order = np.lexsort((np.round(w.imag, 10), np.round(w.real, 10)))
    w, v = w[order], v[:, order]
    residuals = np.linalg.norm(M @ v - v * w, axis=0)
    bad = residuals > residual_tol * max(norm, 1.0)
    if np.any(bad):
        raise SolverError(f"{bad.sum()} eigenpairs exceed the residual bound", residuals[bad])
    return ComplexSpectrum(w, v, residuals, H, norm)


def _edge_sides(basis, axes) -> list[tuple[str, np.ndarray]]:
    """(side name, row distance from that side) for every open side."""
    names = {0: ("left", "right"), 1: ("lower", "upper")}
    out = []
    for ax in axes:
        rows = basis.rows(ax)
        out.append((names[ax][0], rows))
        out.append((names[ax][1], basis.n_rows(ax) - 1 - rows))
    return out


def edge_observable(basis, depth: int = 2, axis: int | None = None) -> np.ndarray:
    """+1 on the ``depth`` lowest (leftmost) rows, -1 on the opposite ones."""
    ax = _default_axis(basis) if axis is None else axis
    rows = basis.rows(ax)
    n = basis.n_rows(ax)
    return np.where(rows < depth, 1.0, 0.0) - np.where(rows >= n - depth, 1.0, 0.0)


def _default_axis(basis) -> int:
    axes = basis.open_axes
    if not axes:
        raise ValueError("basis has no open direction")
    return 1 if 1 in axes else axes[0]


@dataclass(frozen=True)
class EdgeStateRecord:
    """Classification of one eigenstate."""

    eigen_index: int
    k_label: float | None
    edge: str
    edge_weight: float
    gamma_eff: float | None = None
    energy: complex = 0j


class EdgeStates(list):
    """List of :class:`EdgeStateRecord` with a gaplessness flag."""

    gapless: bool = False

    def indices(self, edge: str | None = None) -> np.ndarray:
        return np.array([r.eigen_index for r in self if edge is None or r.edge == edge], dtype=int)


def edge_weights(vectors: np.ndarray, basis, depth: int = 2,
                 axes: list[int] | None = None) -> dict[str, np.ndarray]:
    """Weight of each column within ``depth`` rows of every open side."""
    axes = basis.open_axes if axes is None else axes
    rho = np.abs(vectors) ** 2
    out = {}
    near = np.zeros(basis.n_sites, dtype=bool)
    for name, dist in _edge_sides(basis, axes):
        out[name] = rho[dist < depth].sum(axis=0)
        near |= dist < depth
    out["any"] = rho[near].sum(axis=0)
    return out


def classify_edge_states(spec: ComplexSpectrum, basis=None, gap_window: float = 0.3,
                         weight_threshold: float = 0.5, depth: int = 2,
                         axes: list[int] | None = None,
                         profile: DissipationProfile | None = None) -> EdgeStates:
    """Label in-gap eigenstates by the boundary they live on.

    A state with ``|Re E| < gap_window`` is an edge state when its weight
    within ``depth`` rows of the open boundaries reaches
    ``weight_threshold``; it is attributed to the side carrying the
    largest weight.  In-gap states failing the threshold mark the result
    as gapless and emit :class:`GaplessWarning`.

    Parameters
    ----------
    spec : ComplexSpectrum
    basis : SiteGraph or BlochCut, optional
        Defaults to the basis of the diagonalized operator.
    gap_window, weight_threshold, depth
        Classification defaults 0.3, 0.5 and 2 rows.
    axes : list of int, optional
        Open axes to consider; all open axes by default.
    profile : DissipationProfile, optional
        When given, ``gamma_eff`` is filled in for each record.
    """
    basis = spec.basis if basis is None else basis
    axes = basis.open_axes if axes is None else axes
    if not axes:
        raise ValueError("edge classification needs an open direction")
    E = spec.eigenvalues
    inside = np.flatnonzero(np.abs(E.real) < gap_window)
    out = EdgeStates()
    if inside.size == 0:
        return out
    W = edge_weights(spec.vectors[:, inside], basis, depth, axes)
    sides = [name for name in W if name != "any"]
    bulk = 0
    gamma = None if profile is None else profile.gamma
    if gamma is not None and len(gamma) != basis.n_sites:
        gamma = gamma[basis.sites]
    for col, idx in enumerate(inside):
        total = W["any"][col]
        if total < weight_threshold:
            bulk += 1
            continue
        best = max(sides, key=lambda s: W[s][col])
        g = None
        if gamma is not None:
            g = float(np.sum(gamma * np.abs(spec.vectors[:, idx]) ** 2))
        out.append(EdgeStateRecord(int(idx), spec.operator.k_label, best,
                                   float(min(total, 1.0)), g, complex(E[idx])))
    if bulk:
        out.gapless = True
        warnings.warn(f"{bulk} bulk-like states inside |Re E| < {gap_window}; "
                      "the model looks gapless", GaplessWarning, stacklevel=2)
    return out


def effective_dissipation(state: np.ndarray, deltaH) -> float:
    """``sum_i gamma_i |psi_i|^2`` for a normalized state.

    ``deltaH`` is a :class:`DissipationProfile` or a plain gamma array
    (possibly restricted to a Bloch cut).
    """
    gamma = deltaH.gamma if isinstance(deltaH, DissipationProfile) else np.asarray(deltaH)
    rho = np.abs(np.asarray(state)) ** 2
    if abs(rho.sum() - 1) > 1e-8:
        raise ValueError("state is not normalized")
    return float(np.dot(gamma, rho))


def fit_effective_dissipation_harmonics(k, gamma_eff, n_max: int,
                                        include_constant: bool = True) -> np.ndarray:
    """Least-squares cosine series ``sum_n a_n cos(n k)``.

    Returns ``a_0..a_n_max``; with ``include_constant=False`` the constant
    term is pinned to zero and ``a_0 = 0`` is returned.
    """
    k = np.asarray(k, dtype=float)
    y = np.asarray(gamma_eff, dtype=float)
    start = 0 if include_constant else 1
    ns = np.arange(start, n_max + 1)
    A = np.cos(np.outer(k, ns))
    if len(np.unique(np.round(np.cos(k), 12))) < len(ns) or np.linalg.matrix_rank(A) < len(ns):
        raise FitError(f"rank-deficient sample set for {len(ns)} harmonics")
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef if include_constant else np.concatenate([[0.0], coef])


@dataclass(frozen=True, eq=False)
class DensityField:
    """Site densities of a set of normalized states.

    ``per_state[s]`` sums to 1 for each state; ``per_site`` is their
    average, so it is itself normalized.
    """

    per_state: np.ndarray
    basis: object

    @property
    def per_site(self) -> np.ndarray:
        return self.per_state.mean(axis=0)

    def project(self, axis: int = 0, per_state: bool = False) -> np.ndarray:
        rows = self.basis.rows(axis)
        n = self.basis.n_rows(axis)
        src = self.per_state if per_state else self.per_site[None, :]
        out = np.stack([np.bincount(rows, weights=r, minlength=n) for r in src])
        return out if per_state else out[0]

    @property
    def projected_x(self) -> np.ndarray:
        return self.project(0)

    @property
    def projected_y(self) -> np.ndarray:
        return self.project(1)


def particle_distribution(spec: ComplexSpectrum, selection, basis=None) -> DensityField:
    """Densities of the selected eigenstates (records or indices)."""
    idx = np.array([r.eigen_index if isinstance(r, EdgeStateRecord) else int(r) for r in selection],
                   dtype=int)
    if idx.size == 0:
        raise ValueError("empty state selection")
    rho = np.abs(spec.vectors[:, idx].T) ** 2
    rho = rho / rho.sum(axis=1, keepdims=True)
    return DensityField(rho, spec.basis if basis is None else basis)


def inverse_participation_ratio(density) -> float:
    """``sum_i rho_i^2`` of a normalized density (DensityField or array)."""
    rho = density.per_site if isinstance(density, DensityField) else np.asarray(density, float)
    if abs(rho.sum() - 1) > 1e-8 or np.any(rho < 0):
        raise ValueError("density must be nonnegative and normalized")
    return float(np.sum(rho**2))


@dataclass(frozen=True)
class LocalizationFit:
    """Per-side decay lengths from ``rho ~ exp(-2 d / xi)``; NaN if not fitted."""

    xi_left: float
    xi_right: float
    r2_left: float
    r2_right: float

    @property
    def xi(self) -> float:
        vals = [x for x in (self.xi_left, self.xi_right) if np.isfinite(x)]
        return float(np.mean(vals)) if vals else float("nan")


def _fit_side(d: np.ndarray, rho: np.ndarray, min_points: int):
    if len(d) < min_points:
        raise FitError(f"only {len(d)} usable points, need {min_points}")
    if np.any(rho <= 0):
        raise FitError("non-positive density in the fit window")
    y = np.log(rho)
    slope, icpt = np.polyfit(d, y, 1)
    pred = slope * d + icpt
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1 - np.sum((y - pred) ** 2) / ss if ss > 0 else 1.0
    xi = -2.0 / slope if slope != 0 else np.inf
    return float(xi), float(r2)


def fit_localization_length(density, wall_x: float, exclusion: int = 2,
                            opposite_wall: float | None = None, periodic: bool = True,
                            sides=("left", "right"), min_points: int = 4) -> LocalizationFit:
    """Fit decay lengths on both sides of a wall.

    Parameters
    ----------
    density : array_like
        Projected density ``rho[m]`` of cell ``m``, covering ``[m, m + 1)``.
    wall_x : float
        Wall position on the cell-boundary grid.
    exclusion : int
        Cells dropped next to the wall and next to the opposite wall (or
        the open boundary).
    opposite_wall : float, optional
        Second wall of a periodic profile; defaults to ``wall_x + L/2``.
    periodic : bool
        Whether ``density`` wraps around.
    sides : tuple
        Which sides to fit.

    Returns
    -------
    LocalizationFit
        Decay lengths in cell units.  A decaying side has positive xi.
    """
    rho = np.asarray(density, dtype=float)
    L = len(rho)
    centers = np.arange(L) + 0.5
    res = {}
    for side in ("left", "right"):
        if side not in sides:
            res[side] = (np.nan, np.nan)
            continue
        sgn = 1 if side == "right" else -1
        if periodic:
            far = opposite_wall if opposite_wall is not None else wall_x + sgn * L / 2
            d = (sgn * (centers - wall_x)) % L
            span = (sgn * (far - wall_x)) % L or L
        else:
            d = sgn * (centers - wall_x)
            span = (L - wall_x) if sgn > 0 else wall_x
        keep = (d > exclusion) & (d < span - exclusion)
        res[side] = _fit_side(d[keep], rho[keep], min_points)
    return LocalizationFit(res["left"][0], res["right"][0], res["left"][1], res["right"][1])


def assign_by_overlap(reference: np.ndarray, spec: ComplexSpectrum,
                      candidates=None) -> np.ndarray:
    """Match reference vectors to eigenvectors maximizing total overlap.

    Returns, for each reference column, the index into ``spec`` of the
    eigenstate it is assigned to (one-to-one).
    """
    cand = np.arange(len(spec)) if candidates is None else np.asarray(candidates, dtype=int)
    if len(cand) < reference.shape[1]:
        raise ValueError("fewer candidates than reference states")
    ov = np.abs(reference.conj().T @ spec.vectors[:, cand]) ** 2
    rows, cols = linear_sum_assignment(-ov)
    out = np.empty(reference.shape[1], dtype=int)
    out[rows] = cand[cols]
    return out
