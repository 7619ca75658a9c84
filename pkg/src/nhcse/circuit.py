"""LC/resistor network realizing the dissipative Haldane model.

Each lattice site owns four nodes ``X+, X-, Y+, Y-`` with an inductor
``L`` between ``X+``/``X-`` and between ``Y+``/``Y-``.  With
``U_X = V_{X+} - V_{X-}``, ``U_Y = V_{Y+} - V_{Y-}`` and
``U_up = U_X + i U_Y`` Kirchhoff's law at every node reduces to

    E(w) U_up = [H_hop - M] U_up,   E(w) = 3 t1 + 6 t2 - 2 w0^2 / w^2,

with ``M = (C_g - 1/(w^2 L_g) - i/(w R_g)) / C``.  At ``w = w0`` with
``C_g = C`` and ``L_g = L`` the on-site term is ``-M = i sqrt(L/C) / R_g``,
so a grounding resistance ``R_g = sqrt(L/C) / gamma`` produces
``+i gamma``; negative values are INICs.

Wiring:

* NN bond (``C1 = t1 C``): same-label nodes are connected.
* NNN bond with lattice amplitude ``t2 exp(-i pi/2)`` from site i to j
  (``C2 = t2 C``): ``X(+/-)_i - Y(+/-)_j`` and ``Y(+/-)_i - X(-/+)_j``.
  The ``exp(+i pi/2)`` direction uses the same table with i and j
  exchanged.
* Nodes missing bonds at open edges get grounding capacitors that keep
  the total attached capacitance equal to ``(3 t1 + 6 t2) C``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .lattice import SiteGraph
from .topology import BlochMap

KINDS = ("CAP", "IND", "RES", "INIC", "CAPG", "INDG")
NODE_LABELS = ("X+", "X-", "Y+", "Y-")
XP, XM, YP, YM = range(4)
GND = -1


class CircuitError(ValueError):
    """Unrealizable request or netlist unsuited to the requested reduction."""


@dataclass(frozen=True)
class Component:
    """Two-terminal element; ``b == GND`` for grounding elements.

    ``disp`` is the displacement between the lattice sites owning the two
    nodes (zero for on-site and grounding elements).
    """

    kind: str
    a: int
    b: int
    value: float
    disp: tuple = (0.0, 0.0)


@dataclass(frozen=True, eq=False)
class CircuitNetlist:
    """Node/component graph of the circuit.

    Node ``4 * i + l`` belongs to lattice site ``i`` with label
    ``NODE_LABELS[l]``.
    """

    graph: SiteGraph
    components: tuple
    C: float
    L: float
    t1: float
    t2: float
    phi: float
    Cg: float
    Lg: float
    site_resistance: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return 4 * self.graph.n_sites

    @property
    def w0(self) -> float:
        return 1 / np.sqrt(self.L * self.C)

    def count(self, kind: str) -> int:
        return sum(c.kind == kind for c in self.components)

    def node_name(self, n: int) -> str:
        if n == GND:
            return "GND"
        return f"s{n // 4}.{NODE_LABELS[n % 4]}"

    def gamma(self) -> np.ndarray:
        """Lattice dissipation realized by the grounding resistances."""
        with np.errstate(divide="ignore"):
            g = np.sqrt(self.L / self.C) / self.site_resistance
        return np.where(np.isinf(self.site_resistance), 0.0, g)


def gamma_to_resistance(gamma, L: float = 1.0, C: float = 1.0):
    """``R = sqrt(L/C) / gamma`` (inf where gamma = 0)."""
    g = np.asarray(gamma, dtype=float)
    with np.errstate(divide="ignore"):
        r = np.sqrt(L / C) / g
    return float(r) if r.ndim == 0 else r


def resistance_to_gamma(R, L: float = 1.0, C: float = 1.0):
    """Inverse of :func:`gamma_to_resistance`."""
    r = np.asarray(R, dtype=float)
    g = np.where(np.isinf(r), 0.0, np.sqrt(L / C) / r)
    return float(g) if g.ndim == 0 else g


def _nnn_table(phase_sign: int) -> list[tuple[int, int]]:
    """Node pairs (node of i, node of j) for an NNN hop i -> j.

    ``phase_sign = -1`` realizes ``exp(-i pi/2)``; ``+1`` is the mirror
    table, expressed here from i's side.
    """
    if phase_sign < 0:
        return [(XP, YP), (XM, YM), (YP, XM), (YM, XP)]
    return [(YP, XP), (YM, XM), (XM, YP), (XP, YM)]


def build_circuit(graph: SiteGraph, t1: float = 1.0, t2: float = 0.2, phi: float = np.pi / 2,
                  gamma=None, resistance=None, C: float = 1.0, L: float = 1.0,
                  Cg: float | None = None, Lg: float | None = None) -> CircuitNetlist:
    """Assemble the netlist.

    Parameters
    ----------
    graph : SiteGraph
    t1, t2, phi : float
        Lattice parameters; ``phi`` must be an odd multiple of pi/2.
    gamma : float, (gamma_A, gamma_B) or array, optional
        Target on-site dissipation, mapped to ``R = sqrt(L/C) / gamma``.
    resistance : array, optional
        Per-site grounding resistance (inf = none); overrides ``gamma``.
    C, L : float
        Reference capacitance and inductance.
    Cg, Lg : float, optional
        Grounding capacitance and inductance, default ``C`` and ``L``.
    """
    if not np.isclose(np.cos(phi), 0, atol=1e-12):
        raise CircuitError("only phi = +-pi/2 is realizable by the NNN wiring")
    Cg = C if Cg is None else Cg
    Lg = L if Lg is None else Lg
    N = graph.n_sites
    if resistance is not None:
        R = np.asarray(resistance, dtype=float)
    else:
        if gamma is None:
            g = np.zeros(N)
        elif np.ndim(gamma) == 0:
            g = np.full(N, float(gamma))
        elif len(gamma) == 2 and N != 2:
            g = np.where(graph.sublattice == 0, gamma[0], gamma[1]).astype(float)
        else:
            g = np.asarray(gamma, dtype=float)
        R = gamma_to_resistance(g, L, C)
    R = np.broadcast_to(R, (N,)).astype(float)

    comps: list[Component] = []
    attached = np.zeros(4 * N)
    zero = (0.0, 0.0)
    for (i, j), d in zip(graph.nn_pairs, graph.nn_disp):
        d = tuple(float(x) for x in d)
        for lab in range(4):
            comps.append(Component("CAP", 4 * i + lab, 4 * j + lab, t1 * C, d))
            attached[[4 * i + lab, 4 * j + lab]] += t1 * C
    for (i, j), d, nu in zip(graph.nnn_pairs, graph.nnn_disp, graph.nnn_nu):
        sign = int(np.sign(np.sin(nu * phi)))
        d = tuple(float(x) for x in d)
        for la, lb in _nnn_table(sign):
            comps.append(Component("CAP", 4 * i + la, 4 * j + lb, t2 * C, d))
            attached[[4 * i + la, 4 * j + lb]] += t2 * C
    for i in range(N):
        comps.append(Component("IND", 4 * i + XP, 4 * i + XM, L, zero))
        comps.append(Component("IND", 4 * i + YP, 4 * i + YM, L, zero))
    full = (3 * t1 + 6 * t2) * C
    for n in range(4 * N):
        deficit = full - attached[n]
        comps.append(Component("CAPG", n, GND, Cg + (deficit if deficit > 1e-15 else 0.0), zero))
        comps.append(Component("INDG", n, GND, Lg, zero))
        r = R[n // 4]
        if np.isfinite(r):
            comps.append(Component("RES" if r > 0 else "INIC", n, GND, float(r), zero))
    return CircuitNetlist(graph, tuple(comps), C, L, t1, t2, phi, Cg, Lg, R.copy())


def kirchhoff_matrix(netlist: CircuitNetlist, w: float, coupling_only: bool = False) -> np.ndarray:
    """Node admittance matrix ``Y(w)`` with ``I = Y V``.

    Capacitors contribute ``i w C``, inductors ``1/(i w L)`` and resistors
    or INICs ``1/R``.  With ``coupling_only`` the grounding elements are
    left out.
    """
    if w <= 0:
        raise ValueError("angular frequency must be positive")
    Y = np.zeros((netlist.n_nodes, netlist.n_nodes), dtype=complex)
    for c in netlist.components:
        y = _admittance(c, w)
        if c.b == GND:
            if not coupling_only:
                Y[c.a, c.a] += y
            continue
        Y[c.a, c.a] += y
        Y[c.b, c.b] += y
        Y[c.a, c.b] -= y
        Y[c.b, c.a] -= y
    return Y


def _admittance(c: Component, w) -> complex:
    if c.kind in ("CAP", "CAPG"):
        return 1j * w * c.value
    if c.kind in ("IND", "INDG"):
        return 1 / (1j * w * c.value)
    return 1 / c.value


def energy_of_frequency(w: float, t1: float, t2: float, w0: float) -> float:
    """``E(w) = 3 t1 + 6 t2 - 2 w0^2 / w^2``."""
    return 3 * t1 + 6 * t2 - 2 * w0**2 / w**2


def _spin_transform(n_sites: int) -> tuple[np.ndarray, np.ndarray]:
    """Maps node voltages to (U_up, U_down) and back, per site."""
    # forward: U_up = (V_X+ - V_X-) + i (V_Y+ - V_Y-), U_dn with -i
    fwd = np.zeros((2 * n_sites, 4 * n_sites), dtype=complex)
    back = np.zeros((4 * n_sites, 2 * n_sites), dtype=complex)
    for i in range(n_sites):
        up, dn = i, n_sites + i
        fwd[up, 4 * i + XP], fwd[up, 4 * i + XM] = 1, -1
        fwd[up, 4 * i + YP], fwd[up, 4 * i + YM] = 1j, -1j
        fwd[dn, 4 * i + XP], fwd[dn, 4 * i + XM] = 1, -1
        fwd[dn, 4 * i + YP], fwd[dn, 4 * i + YM] = -1j, 1j
        # antisymmetric node pattern reproducing U_X, U_Y from U_up, U_dn
        for col, s in ((up, 1), (dn, -1)):
            back[4 * i + XP, col], back[4 * i + XM, col] = 0.25, -0.25
            back[4 * i + YP, col], back[4 * i + YM, col] = -0.25j * s, 0.25j * s
    return fwd, back


def _spin_reduce(Y: np.ndarray, n_sites: int, w: float, C: float):
    fwd, back = _spin_transform(n_sites)
    K = fwd @ Y @ back / (1j * w * C)
    return K[:n_sites, :n_sites], K[:n_sites, n_sites:], K[n_sites:, :n_sites]


@dataclass(frozen=True)
class SpinReduction:
    """Circuit Hamiltonian in the spin-up sector.

    ``matrix = E(w) I - K_upup``; ``leak`` is the largest up/down coupling.
    """

    matrix: np.ndarray
    energy: float
    leak: float


def reduce_real_space(netlist: CircuitNetlist, w: float | None = None) -> SpinReduction:
    """Spin-up reduction of the full node-space matrix (any geometry)."""
    w = netlist.w0 if w is None else w
    Y = kirchhoff_matrix(netlist, w)
    N = netlist.graph.n_sites
    K, ud, du = _spin_reduce(Y, N, w, netlist.C)
    E = energy_of_frequency(w, netlist.t1, netlist.t2, netlist.w0)
    leak = float(max(np.abs(ud).max(), np.abs(du).max()))
    return SpinReduction(E * np.eye(N) - K, E, leak)


def bloch_node_matrix(netlist: CircuitNetlist, k, w: float) -> np.ndarray:
    """8x8 node admittance of the primitive cell (A nodes 0-3, B nodes 4-7).

    Every component is folded onto the two-site cell with the phase of its
    site displacement; the sum is divided by the number of cells, which is
    exact when all cells carry identical components.
    """
    k = np.asarray(k, dtype=float)
    sub = netlist.graph.sublattice
    Yk = np.zeros((8, 8), dtype=complex)
    for c in netlist.components:
        y = _admittance(c, w)
        a = 4 * sub[c.a // 4] + c.a % 4
        if c.b == GND:
            Yk[a, a] += y
            continue
        b = 4 * sub[c.b // 4] + c.b % 4
        ph = np.exp(1j * np.dot(k, c.disp))
        Yk[a, a] += y
        Yk[b, b] += y
        Yk[a, b] -= y * ph
        Yk[b, a] -= y * np.conj(ph)
    return Yk / (netlist.graph.n_sites // 2)


def _check_bloch(netlist: CircuitNetlist) -> None:
    g = netlist.graph
    if g.periodic_axes != [0, 1]:
        raise CircuitError("Bloch reduction needs a fully periodic netlist")
    R = netlist.site_resistance
    for s in (0, 1):
        vals = R[g.sublattice == s]
        if not np.all(vals == vals[0]):
            raise CircuitError("grounding varies within a sublattice; not a Bloch netlist")


def reduce_to_spin_basis(netlist: CircuitNetlist, k, w: float | None = None) -> SpinReduction:
    """2x2 spin-up circuit matrix at momentum ``k`` and ``E(w)``.

    On a fully periodic netlist with sublattice-uniform grounding this is
    ``[[p_k(phi) - M_A, T_k], [T_k*, p_k(-phi) - M_B]]``.
    """
    _check_bloch(netlist)
    w = netlist.w0 if w is None else w
    Yk = bloch_node_matrix(netlist, k, w)
    K, ud, du = _spin_reduce(Yk, 2, w, netlist.C)
    E = energy_of_frequency(w, netlist.t1, netlist.t2, netlist.w0)
    leak = float(max(np.abs(ud).max(), np.abs(du).max()))
    return SpinReduction(E * np.eye(2) - K, E, leak)


@dataclass(frozen=True)
class EquivalenceReport:
    max_deviation: float
    max_offdiag_deviation: float
    max_diag_deviation: float
    max_leak: float
    resonance_residual: float | None


def lattice_resonance(eps: float, t1: float, t2: float, Cg_over_C: float = 1.0,
                      L_over_Lg: float = 1.0) -> float:
    """``u = w0^2 / w^2`` at which a lossless circuit resonates with level ``eps``."""
    return (3 * t1 + 6 * t2 + Cg_over_C - eps) / (2 + L_over_Lg)


def verify_haldane_equivalence(netlist: CircuitNetlist, k_samples, w: float | None = None,
                               bloch: BlochMap | None = None) -> EquivalenceReport:
    """Compare the reduced circuit with the dissipative Haldane Bloch matrix.

    Parameters
    ----------
    netlist : CircuitNetlist
        Fully periodic, sublattice-uniform grounding.
    k_samples : array, shape (n, 2)
    w : float, optional
        Drive frequency, ``w0`` by default.
    bloch : BlochMap, optional
        Lattice side; built from the netlist parameters by default.

    Returns
    -------
    EquivalenceReport
        Entrywise deviations and, for a lossless netlist at ``w0``, the
        largest smallest-singular-value of ``Y(w)`` at the frequencies
        predicted from the lattice eigenvalues.
    """
    _check_bloch(netlist)
    g = netlist.graph
    gam = netlist.gamma()
    if bloch is None:
        bloch = BlochMap(netlist.t1, netlist.t2, netlist.phi,
                         float(gam[g.sublattice == 0][0]), float(gam[g.sublattice == 1][0]))
    devs, off, diag, leak, res = [], [], [], [], []
    lossless = not np.any(np.isfinite(netlist.site_resistance))
    for k in np.atleast_2d(k_samples):
        red = reduce_to_spin_basis(netlist, k, w)
        D = np.abs(red.matrix - bloch(k))
        devs.append(D.max())
        off.append(max(D[0, 1], D[1, 0]))
        diag.append(max(D[0, 0], D[1, 1]))
        leak.append(red.leak)
        if lossless and w is None:
            for eps in np.linalg.eigvalsh(bloch(k)):
                u = lattice_resonance(eps, netlist.t1, netlist.t2, netlist.Cg / netlist.C,
                                      netlist.L / netlist.Lg)
                wr = netlist.w0 / np.sqrt(u)
                Yk = bloch_node_matrix(netlist, k, wr) / (1j * wr * netlist.C)
                res.append(np.linalg.svd(Yk, compute_uv=False)[-1])
    return EquivalenceReport(float(max(devs)), float(max(off)), float(max(diag)),
                             float(max(leak)), float(max(res)) if res else None)


def perturb(netlist: CircuitNetlist, kind: str, factor: float, value: float | None = None) -> CircuitNetlist:
    """Scale components of ``kind`` (optionally only those of a given value)."""
    comps = tuple(
        replace(c, value=c.value * factor)
        if c.kind == kind and (value is None or np.isclose(c.value, value)) else c
        for c in netlist.components
    )
    return replace(netlist, components=comps)


def export_netlist(netlist: CircuitNetlist) -> str:
    """One component per line: ``KIND nodeA nodeB value``."""
    lines = [f"{c.kind} {netlist.node_name(c.a)} {netlist.node_name(c.b)} {c.value!r}"
             for c in netlist.components]
    return "\n".join(lines) + "\n"


def parse_netlist(text: str) -> list[tuple[str, str, str, float]]:
    """Read the text format back into ``(kind, nodeA, nodeB, value)`` tuples."""
    out = []
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4 or parts[0] not in KINDS:
            raise ValueError(f"line {ln}: malformed component {line!r}")
        out.append((parts[0], parts[1], parts[2], float(parts[3])))
    return out
