"""Continuum theory of chiral edge modes in an inhomogeneous dissipation field.

A chiral mode ``i v d/dx psi + i gamma(x) psi = E psi`` on a loop of
length ``L`` has the exact solutions

    psi_k(x) = N^{-1} exp(i k x) exp((1/v) int_0^x [gamma(x') - gamma_bar] dx'),
    E = v k + i gamma_bar,   k = 2 pi n / L,

so ``d|psi|^2/dx = (2/v) |psi|^2 gamma_global(x)`` with
``gamma_global = gamma - gamma_bar``.  Sign changes of ``gamma_global``
are the domain walls: A-type (- to +) traps ``v < 0`` modes, B-type
(+ to -) traps ``v > 0`` modes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

TIE = 1e-12


class PerturbativeWarning(UserWarning):
    """Dissipation not small compared with the mode velocity."""


@dataclass(frozen=True, eq=False)
class DissipationField:
    """Piecewise-constant or continuous piecewise-linear gamma(x) on a loop.

    Parameters
    ----------
    breakpoints : array_like
        ``0 = x_0 < x_1 < ... < x_n = L``.
    values : array_like
        ``n`` segment values (``kind="constant"``) or ``n + 1`` node values
        with ``values[0] == values[-1]`` (``kind="linear"``).
    kind : {"constant", "linear"}
    """

    breakpoints: np.ndarray
    values: np.ndarray
    kind: str = "constant"

    def __post_init__(self):
        x = np.asarray(self.breakpoints, dtype=float)
        g = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "values", g)
        if x[0] != 0 or np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must start at 0 and increase strictly")
        if self.kind == "constant":
            if len(g) != len(x) - 1:
                raise ValueError("need one value per segment")
        elif self.kind == "linear":
            if len(g) != len(x):
                raise ValueError("need one value per node")
            if abs(g[0] - g[-1]) > 1e-12:
                raise ValueError("periodic field must satisfy gamma(0) == gamma(L)")
        else:
            raise ValueError(f"unknown field kind {self.kind!r}")

    @classmethod
    def from_segments(cls, segments) -> "DissipationField":
        """Build from ``[(gamma_i, length_i), ...]`` laid out from x = 0."""
        g = [float(s[0]) for s in segments]
        lengths = np.array([float(s[1]) for s in segments])
        if np.any(lengths <= 0):
            raise ValueError("segment lengths must be positive")
        return cls(np.concatenate([[0.0], np.cumsum(lengths)]), np.array(g), "constant")

    @property
    def L(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def continuous(self) -> bool:
        if self.kind == "linear":
            return True
        return bool(np.all(self.values == self.values[0]))

    @property
    def segments(self) -> list[tuple[float, float, float]]:
        """``(x_start, x_end, gamma)`` for constant fields."""
        if self.kind != "constant":
            raise TypeError("segments are defined for piecewise-constant fields")
        x = self.breakpoints
        return [(x[i], x[i + 1], self.values[i]) for i in range(len(self.values))]

    def _locate(self, x):
        x = np.mod(np.asarray(x, dtype=float), self.L)
        i = np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1, 0,
                    len(self.breakpoints) - 2)
        return x, i

    def __call__(self, x):
        x, i = self._locate(x)
        if self.kind == "constant":
            return self.values[i]
        x0, x1 = self.breakpoints[i], self.breakpoints[i + 1]
        t = (x - x0) / (x1 - x0)
        return self.values[i] * (1 - t) + self.values[i + 1] * t

    def _cumulative(self) -> np.ndarray:
        x, g = self.breakpoints, self.values
        if self.kind == "constant":
            pieces = g * np.diff(x)
        else:
            pieces = 0.5 * (g[:-1] + g[1:]) * np.diff(x)
        return np.concatenate([[0.0], np.cumsum(pieces)])

    def integral(self, x):
        """Exact ``int_0^x gamma`` for ``x`` in [0, L] (wrapping beyond)."""
        x = np.asarray(x, dtype=float)
        turns = np.floor(x / self.L)
        xr, i = self._locate(x)
        cum = self._cumulative()
        x0 = self.breakpoints[i]
        if self.kind == "constant":
            part = self.values[i] * (xr - x0)
        else:
            x1 = self.breakpoints[i + 1]
            g0, g1 = self.values[i], self.values[i + 1]
            s = (g1 - g0) / (x1 - x0)
            part = g0 * (xr - x0) + 0.5 * s * (xr - x0) ** 2
        return turns * cum[-1] + cum[i] + part


def average_dissipation(field: DissipationField) -> float:
    """``gamma_bar = (1/L) int_0^L gamma dx``, exact."""
    return float(field._cumulative()[-1] / field.L)


@dataclass(frozen=True)
class Gddw:
    x0: float
    type: str


@dataclass(frozen=True)
class GddwSet:
    """Domain walls of ``gamma_global`` on the loop.

    ``plateaus`` lists ``(start, end)`` intervals on which
    ``gamma_global`` vanishes identically (extended regions).
    """

    walls: list
    gamma_bar: float
    plateaus: list = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.walls

    def of_type(self, kind: str) -> list:
        return [w for w in self.walls if w.type == kind]


def _sign_intervals(field: DissipationField, gbar: float, tol: float):
    """Maximal intervals of constant sign of gamma_global, in loop order."""
    x = field.breakpoints
    pts = list(x)
    if field.kind == "linear":
        g = field.values - gbar
        for i in range(len(g) - 1):
            if g[i] * g[i + 1] < 0:
                pts.append(x[i] + (x[i + 1] - x[i]) * g[i] / (g[i] - g[i + 1]))
    pts = np.unique(pts)
    mids = 0.5 * (pts[:-1] + pts[1:])
    gg = field(mids) - gbar
    signs = np.where(gg > tol, 1, np.where(gg < -tol, -1, 0))
    out = []
    for a, b, s in zip(pts[:-1], pts[1:], signs):
        if out and out[-1][2] == s:
            out[-1][1] = b
        else:
            out.append([a, b, s])
    if len(out) > 1 and out[0][2] == out[-1][2]:
        first = out.pop(0)
        out[-1][1] = first[1] + field.L
    return [tuple(o) for o in out]


def detect_gddws(field: DissipationField, tol: float = 1e-12) -> GddwSet:
    """Classify the sign changes of ``gamma_global``.

    A wall is reported at the point where ``gamma_global`` enters its new
    sign, so a zero plateau between a negative and a positive region
    yields one A wall at the plateau exit and the plateau is recorded
    separately.  Positions are reduced modulo ``L`` (a wall at the seam
    is reported at 0).
    """
    gbar = average_dissipation(field)
    ivs = _sign_intervals(field, gbar, tol)
    plateaus = [(float(a % field.L), float(b % field.L or field.L)) for a, b, s in ivs if s == 0]
    nonzero = [iv for iv in ivs if iv[2] != 0]
    walls = []
    n = len(nonzero)
    for i in range(n):
        prev, cur = nonzero[i - 1], nonzero[i]
        if n > 1 and prev[2] != cur[2]:
            kind = "A" if cur[2] > 0 else "B"
            walls.append(Gddw(float(cur[0] % field.L), kind))
    walls.sort(key=lambda w: w.x0)
    return GddwSet(walls, gbar, plateaus)


@dataclass(frozen=True, eq=False)
class ChiralModeSolution:
    """Exact chiral mode on a dissipation loop.

    For piecewise-constant fields ``alphas[i] = (gamma_i - gamma_bar) / v``
    and ``norms[i]`` are the matching constants with ``norms[0] = 1``.
    ``scale`` normalizes ``int |psi|^2 dx`` to one.
    """

    field: DissipationField
    n: int
    k: float
    v: float
    energy: complex
    gamma_bar: float
    alphas: np.ndarray | None
    norms: np.ndarray | None
    scale: float

    def log_envelope(self, x):
        """``(1/v) int_0^x gamma_global`` (so |psi| = scale * exp(.))."""
        x = np.asarray(x, dtype=float)
        return (self.field.integral(x) - self.gamma_bar * x) / self.v

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale * np.exp(1j * self.k * x + self.log_envelope(x))

    def psi_closed_form(self, x):
        """Segment-wise closed form ``N_i^{-1} e^{ikx} e^{alpha_i (x - x_i)}``."""
        if self.alphas is None:
            raise TypeError("closed form exists for piecewise-constant fields")
        xr, i = self.field._locate(x)
        x0 = self.field.breakpoints[i]
        return self.scale * np.exp(1j * self.k * xr) * np.exp(self.alphas[i] * (xr - x0)) / self.norms[i]

    def density(self, x):
        return np.abs(self.psi(x)) ** 2

    def samples(self, n: int = 1000) -> tuple[np.ndarray, np.ndarray]:
        x = np.linspace(0, self.field.L, n)
        return x, self.density(x)

    def pbc_error(self) -> float:
        a, b = self.psi(0.0), self.psi(self.field.L)
        return float(abs(a - b) / max(abs(a), abs(b)))

    def continuity_error(self) -> float:
        """Max relative jump of the closed form across segment boundaries."""
        if self.alphas is None:
            return 0.0
        x = self.field.breakpoints
        worst = 0.0
        for i in range(1, len(x)):
            left = self.scale * np.exp(1j * self.k * x[i]) * np.exp(
                self.alphas[i - 1] * (x[i] - x[i - 1])) / self.norms[i - 1]
            j = i % (len(x) - 1)
            right = self.scale * np.exp(1j * self.k * (x[i] % self.field.L)) / self.norms[j]
            worst = max(worst, abs(left - right) / max(abs(left), abs(right)))
        return float(worst)


def _matching_norms(alphas: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    norms = np.ones(len(alphas))
    for i in range(1, len(alphas)):
        norms[i] = norms[i - 1] * np.exp(-alphas[i - 1] * lengths[i - 1])
    return norms


def chiral_wavefunction(field: DissipationField, n: int, v: float) -> ChiralModeSolution:
    """Exact mode ``n`` with velocity ``v`` on the loop.

    Raises
    ------
    ValueError
        For ``v == 0``.
    """
    if v == 0:
        raise ValueError("velocity must be nonzero")
    if np.max(np.abs(field.values)) >= 0.5 * abs(v):
        warnings.warn("max|gamma| >= |v|/2: outside the perturbative regime",
                      PerturbativeWarning, stacklevel=2)
    L = field.L
    gbar = average_dissipation(field)
    k = 2 * np.pi * n / L
    alphas = norms = None
    if field.kind == "constant":
        alphas = (field.values - gbar) / v
        norms = _matching_norms(alphas, np.diff(field.breakpoints))
    sol = ChiralModeSolution(field, n, k, v, complex(v * k, gbar), gbar, alphas, norms, 1.0)
    xs = np.linspace(0, L, 4097)
    mass = np.trapezoid(np.exp(2 * sol.log_envelope(xs)), xs)
    object.__setattr__(sol, "scale", float(1 / np.sqrt(mass)))
    return sol


def localization_predicate(sol: ChiralModeSolution, x0: float, interval,
                           grid: int = 1000, tie: float = TIE) -> bool:
    """Whether ``|psi|^2`` rises strictly on [a, x0) and falls strictly on (x0, b].

    ``interval = (a, b)`` may extend past the seam (``a < 0`` or
    ``b > L``); positions are wrapped onto the loop.  Steps smaller than
    ``tie * max|psi|^2`` count as ties and are tolerated, but both sides
    must change by more than that overall.
    """
    a, b = interval
    if not (a < x0 < b):
        raise ValueError("need a < x0 < b")
    if b - a > sol.field.L + 1e-12:
        raise ValueError("interval longer than the loop")
    xs = np.union1d(np.linspace(a, b, grid), [x0])
    # log-density avoids overflow; compare in linear scale relative to the max
    logr = 2 * sol.log_envelope(np.mod(xs, sol.field.L))
    rho = np.exp(logr - logr.max())
    i0 = int(np.searchsorted(xs, x0))
    tol = tie
    up, down = np.diff(rho[: i0 + 1]), np.diff(rho[i0:])
    if np.any(up < -tol) or np.any(down > tol):
        return False
    return bool(rho[i0] - rho[0] > tol and rho[i0] - rho[-1] > tol)


@dataclass(frozen=True)
class PairSolution:
    """Closed-form pair-of-walls solution (matching constants with N2 = 1)."""

    alpha1: float
    alpha2: float
    norm1: float
    norm2: float
    xi1: float
    xi2: float
    gamma_bar: float
    no_wall: bool = False

    @property
    def xi(self) -> float:
        return self.xi1 if np.isclose(self.xi1, self.xi2) else float(np.mean([self.xi1, self.xi2]))


def pair_gddw_solution(gamma1: float, gamma2: float, L1: float, L: float, v: float) -> PairSolution:
    """gamma1 on (0, L1), gamma2 on (L1, L).

    ``alpha1 = (g1 - g2)(L - L1)/(v L)``, ``alpha2 = (g2 - g1) L1/(v L)``,
    ``N1 = exp(alpha1 L1)``, ``N2 = 1``; ``xi_i = 1/|alpha_i|`` is the decay
    length of ``|psi|`` (``|psi|^2 ~ exp(-2 d / xi)``).
    """
    if not 0 < L1 < L:
        raise ValueError("need 0 < L1 < L")
    if v == 0:
        raise ValueError("velocity must be nonzero")
    gbar = (gamma1 * L1 + gamma2 * (L - L1)) / L
    if gamma1 == gamma2:
        return PairSolution(0.0, 0.0, 1.0, 1.0, np.inf, np.inf, gbar, no_wall=True)
    a1 = (gamma1 - gamma2) * (L - L1) / (v * L)
    a2 = (gamma2 - gamma1) * L1 / (v * L)
    return PairSolution(a1, a2, float(np.exp(a1 * L1)), 1.0, 1 / abs(a1), 1 / abs(a2), gbar)


@dataclass(frozen=True)
class MultiSolution:
    alphas: np.ndarray
    norms: np.ndarray
    gamma_bar: float
    lengths: np.ndarray

    def xi(self) -> np.ndarray:
        """Decay length of |psi| per segment (inf where extended)."""
        with np.errstate(divide="ignore"):
            return np.where(self.alphas == 0, np.inf, 1 / np.abs(self.alphas))


def multi_gddw_solution(segments, v: float, L: float | None = None) -> MultiSolution:
    """Closed form for piecewise-uniform dissipation ``[(gamma_i, L_i), ...]``.

    ``alpha_i = (gamma_i - gamma_bar)/v``; ``N_1 = 1`` and
    ``N_{i+1} = N_i exp(-alpha_i L_i)`` keep psi continuous and periodic.
    """
    if len(segments) < 2:
        raise ValueError("need at least two segments")
    g = np.array([float(s[0]) for s in segments])
    lengths = np.array([float(s[1]) for s in segments])
    total = lengths.sum()
    if L is not None and not np.isclose(total, L, rtol=1e-12, atol=1e-12):
        raise ValueError(f"segment lengths sum to {total}, not L={L}")
    if v == 0:
        raise ValueError("velocity must be nonzero")
    gbar = float(np.dot(g, lengths) / total)
    dg = g - gbar
    # round-off in gamma_bar must not turn a flat segment into a decaying one
    dg[np.abs(dg) <= TIE * max(1.0, np.abs(g).max())] = 0.0
    alphas = dg / v
    return MultiSolution(alphas, _matching_norms(alphas, lengths), gbar, lengths)
