"""Modified nodal analysis: DC operating point and fixed-step transient.

Unknown vector layout: node voltages for nodes 1..N-1 (ground eliminated),
followed by one branch current per inductor and per voltage source.  The
matrix is structurally symmetric; branch rows carry the element equation
``v_a - v_b - z*j = e`` with ``z`` the companion impedance (0 in DC).

Companion models (fixed step dt):

* capacitor, trapezoidal: conductance 2C/dt with history current
  ``I_eq <- 2*(2C/dt)*v - I_eq``; backward Euler: C/dt and ``I_eq = (C/dt)*v``.
* inductor, trapezoidal: z = 2L/dt, ``e = -v_prev - z*j_prev``; backward
  Euler: z = L/dt, ``e = -z*j_prev``.

The system matrix is constant over a transient run (linear network, fixed
step), so it is factorized once and each step is a single backsolve.  Solves
are sequential and deterministic: identical inputs give bit-identical
results on one platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .netlist import (CAPACITOR, CURRENT_SOURCE, GROUND, INDUCTOR, RESISTOR,
                      VOLTAGE_SOURCE, Netlist)


@dataclass(frozen=True)
class Stimulus:
    """Drive applied to every VRM voltage source.

    ``dc``: sources held at their netlist value.  ``step``: all sources ramp
    linearly from v_start to v_end over rise_time, then hold.

    For the step stimulus the tile load currents activate only after the
    rail is energized: each current source ramps linearly from zero to its
    netlist value over ``load_rise_s`` starting at ``load_delay_s``.  The
    active circuitry cannot draw its switching current while the rail is
    still coming up, and a cold start with the full load connected at 0 V
    would bury the supply-noise metrics under the power-on transient.
    """

    kind: str = "step"  # "dc" | "step"
    v_start: float = 0.0
    v_end: float = 1.0
    rise_time_s: float = 1e-9
    load_delay_s: float = 5e-9
    load_rise_s: float = 0.35e-9

    def __post_init__(self):
        if self.kind not in ("dc", "step"):
            raise ValueError(f"unknown stimulus kind {self.kind!r}")
        if self.kind == "step" and not self.rise_time_s > 0:
            raise ValueError("step stimulus requires rise_time_s > 0")
        if self.kind == "step" and not self.load_rise_s > 0:
            raise ValueError("step stimulus requires load_rise_s > 0")

    def load_factor(self, t):
        """Fraction of the nominal load current drawn at time ``t``."""
        if self.kind == "dc":
            return 1.0
        u = (t - self.load_delay_s) / self.load_rise_s
        return min(1.0, max(0.0, u))

    def voltage(self, t, dc_value):
        if self.kind == "dc":
            return dc_value
        if t >= self.rise_time_s:
            return self.v_end
        if t <= 0.0:
            return self.v_start
        return self.v_start + (self.v_end - self.v_start) * (t / self.rise_time_s)

    @property
    def ramp_end_s(self):
        return 0.0 if self.kind == "dc" else self.rise_time_s


class MnaSystem:
    """Stamped sparse MNA system plus the index arrays for RHS assembly."""

    def __init__(self, netlist: Netlist, mode="dc", dt=None, method="trap"):
        if mode not in ("dc", "transient"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "transient":
            if dt is None or not dt > 0:
                raise ValueError("transient mode requires dt > 0")
            if method not in ("trap", "be"):
                raise ValueError(f"unknown integration method {method!r}")
        self.netlist = netlist
        self.mode = mode
        self.dt = dt
        self.method = method

        n_nodes = netlist.node_count - 1  # ground eliminated
        self.n_nodes = n_nodes

        rows, cols, vals = [], [], []

        def stamp(r, c, v):
            if r >= 0 and c >= 0:
                rows.append(r)
                cols.append(c)
                vals.append(v)

        def nrow(node):
            return node - 1  # ground (0) -> -1, skipped by stamp()

        branch = n_nodes
        self.ind_rows, self.ind_a, self.ind_b, self.ind_z = [], [], [], []
        self.vsrc_rows, self.vsrc_vals, self.vsrc_elems = [], [], []
        self.cap_a, self.cap_b, self.cap_g = [], [], []
        self.isrc_a, self.isrc_b, self.isrc_vals = [], [], []
        self.branch_of_elem = {}

        for idx, e in enumerate(netlist.elements):
            a, b = nrow(e.a), nrow(e.b)
            if e.kind == RESISTOR:
                g = 1.0 / e.value
                stamp(a, a, g)
                stamp(b, b, g)
                stamp(a, b, -g)
                stamp(b, a, -g)
            elif e.kind == CAPACITOR:
                if mode == "dc":
                    continue  # open circuit
                g = (2.0 if method == "trap" else 1.0) * e.value / dt
                stamp(a, a, g)
                stamp(b, b, g)
                stamp(a, b, -g)
                stamp(b, a, -g)
                self.cap_a.append(a)
                self.cap_b.append(b)
                self.cap_g.append(g)
            elif e.kind == INDUCTOR:
                br = branch
                branch += 1
                if mode == "dc":
                    z = 0.0
                else:
                    z = (2.0 if method == "trap" else 1.0) * e.value / dt
                stamp(a, br, 1.0)
                stamp(b, br, -1.0)
                stamp(br, a, 1.0)
                stamp(br, b, -1.0)
                stamp(br, br, -z)
                self.ind_rows.append(br)
                self.ind_a.append(a)
                self.ind_b.append(b)
                self.ind_z.append(z)
                self.branch_of_elem[idx] = br
            elif e.kind == VOLTAGE_SOURCE:
                br = branch
                branch += 1
                stamp(a, br, 1.0)
                stamp(b, br, -1.0)
                stamp(br, a, 1.0)
                stamp(br, b, -1.0)
                self.vsrc_rows.append(br)
                self.vsrc_vals.append(e.value)
                self.vsrc_elems.append(idx)
                self.branch_of_elem[idx] = br
            elif e.kind == CURRENT_SOURCE:
                self.isrc_a.append(a)
                self.isrc_b.append(b)
                self.isrc_vals.append(e.value)

        self.dim = branch
        self.matrix = sp.coo_matrix(
            (vals, (rows, cols)), shape=(self.dim, self.dim)
        ).tocsc()

        for name in ("ind_rows", "ind_a", "ind_b", "ind_z", "vsrc_rows",
                     "vsrc_vals", "cap_a", "cap_b", "cap_g", "isrc_a",
                     "isrc_b", "isrc_vals"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float)
                    if name.endswith(("_z", "_vals", "_g")) else
                    np.asarray(getattr(self, name), dtype=int))

        self._lu = None

    def factorize(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.matrix)
            except RuntimeError as exc:
                raise SolverError(self._singular_diagnostic(str(exc))) from exc
        return self._lu

    def _singular_diagnostic(self, detail):
        diag = np.abs(self.matrix.diagonal())
        node_diag = diag[: self.n_nodes]
        worst = np.argsort(node_diag)[:8]
        names = []
        for r in worst:
            node = self.netlist.nodes[int(r) + 1]
            names.append(f"{node.tier}{node.position}")
        return (f"singular MNA matrix ({detail}); smallest-diagonal node "
                f"cluster: {', '.join(names)}")

    def static_rhs(self):
        rhs = np.zeros(self.dim)
        np.add.at(rhs, self.isrc_a[self.isrc_a >= 0], -self.isrc_vals[self.isrc_a >= 0])
        np.add.at(rhs, self.isrc_b[self.isrc_b >= 0], self.isrc_vals[self.isrc_b >= 0])
        return rhs


def stamp_mna(netlist: Netlist, mode="dc", dt=None, method="trap") -> MnaSystem:
    """Stamp a netlist into an MNA system (see module docstring)."""
    return MnaSystem(netlist, mode=mode, dt=dt, method=method)


@dataclass
class DcSolution:
    """Operating point: node voltages indexed by netlist node id (ground
    included as entry 0) and branch currents by element index."""

    voltages: np.ndarray
    branch_currents: dict
    kcl_residual: float

    def voltage(self, node):
        return float(self.voltages[node])


def dc_solve(netlist: Netlist) -> DcSolution:
    """Sparse-LU DC operating point with a KCL residual check."""
    sys_ = stamp_mna(netlist, mode="dc")
    lu = sys_.factorize()
    rhs = sys_.static_rhs()
    rhs[sys_.vsrc_rows] = sys_.vsrc_vals
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SolverError(sys_._singular_diagnostic("non-finite solution"))
    # Iterative refinement with the residual accumulated in extended
    # precision: high-degree nodes (thousands of stiff branches) sum terms
    # orders of magnitude above the net current, so a float64 dot product
    # alone cannot resolve residuals near the accuracy target.
    A_ext = sys_.matrix.astype(np.longdouble)
    rhs_ext = rhs.astype(np.longdouble)

    def _resid(v):
        return np.asarray(A_ext @ v.astype(np.longdouble) - rhs_ext,
                          dtype=np.longdouble)

    best_x = x
    best_r = float(np.max(np.abs(_resid(x))))
    for _ in range(4):
        x = x + lu.solve(np.asarray(_resid(x), dtype=float) * -1.0)
        r = float(np.max(np.abs(_resid(x))))
        if r < best_r:
            best_x, best_r = x, r
        else:
            break
    x = best_x

    resid = _resid(x)
    kcl = float(np.max(np.abs(resid[: sys_.n_nodes]))) if sys_.n_nodes else 0.0

    voltages = np.concatenate(([0.0], x[: sys_.n_nodes]))
    branch_currents = {idx: float(x[br]) for idx, br in sys_.branch_of_elem.items()}
    return DcSolution(voltages=voltages, branch_currents=branch_currents,
                      kcl_residual=kcl)


@dataclass
class TransientWaveform:
    """Probe voltage series under a stimulus, uniform time step."""

    time_s: np.ndarray
    series: dict                   # probe name -> voltage array
    method: str
    dt: float
    ramp_end_s: float
    final_voltages: np.ndarray     # full node-voltage vector at t_end
    post_ramp_min: dict = field(default_factory=dict)  # probe name -> min v after ramp
    tile_min: np.ndarray | None = None   # per chip tile min voltage after ramp
    tile_final: np.ndarray | None = None


def transient_solve(netlist: Netlist, stimulus: Stimulus, dt, t_end,
                    method="trap", probes=None, init="cold") -> TransientWaveform:
    """Fixed-step transient simulation.

    ``init="cold"`` starts with all states at zero and ramps the VRM
    sources per the stimulus (power-up experiment).  ``init="warm"``
    starts from the energized zero-load operating point (every node at
    v_end, all branch currents zero) and holds the sources at v_end, so
    the response is the pure load step; used for load-step studies such
    as decap sweeps.

    Records voltage series for ``probes`` (netlist probe names; defaults to
    the named chip probes) and running post-ramp minima for every chip tile
    when the netlist carries tile metadata.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if not t_end > 0:
        raise ValueError("t_end must be > 0")
    if init not in ("cold", "warm"):
        raise ValueError(f"unknown init {init!r}")
    warm = init == "warm"
    sys_ = stamp_mna(netlist, mode="transient", dt=dt, method=method)
    lu = sys_.factorize()
    trap = method == "trap"

    n_steps = int(round(t_end / dt))
    times = dt * np.arange(n_steps + 1)

    if probes is None:
        probes = [p for p in ("chip_center", "chip_corner") if p in netlist.probes]
    probe_rows = {}
    for name in probes:
        if name not in netlist.probes:
            raise KeyError(f"unknown probe {name!r}")
        probe_rows[name] = netlist.probes[name] - 1

    tiles = netlist.meta.get("chip_tile_nodes") if netlist.meta else None
    tile_rows = None if tiles is None else (np.asarray(tiles).ravel() - 1)

    x = np.zeros(sys_.dim)
    static = sys_.static_rhs()

    cap_a, cap_b, cap_g = sys_.cap_a, sys_.cap_b, sys_.cap_g
    cap_ieq = np.zeros(len(cap_g))
    ind_rows, ind_a, ind_b, ind_z = sys_.ind_rows, sys_.ind_a, sys_.ind_b, sys_.ind_z
    ind_e = np.zeros(len(ind_rows))

    if warm:
        # zero-load operating point: every non-ground node at v_end, all
        # branch currents zero; capacitor companions carry their standing
        # voltage so no spurious transient is injected at t=0
        v0 = stimulus.v_end
        x[: sys_.n_nodes] = v0
        if len(cap_g):
            vab0 = np.where(cap_a >= 0, v0, 0.0) - np.where(cap_b >= 0, v0, 0.0)
            cap_ieq = cap_g * vab0

    vsrc_rows = sys_.vsrc_rows
    dc_vals = sys_.vsrc_vals

    def vnode(rows, xv):
        out = np.where(rows >= 0, xv[np.clip(rows, 0, None)], 0.0)
        return out

    guard = 10.0 * max(abs(stimulus.v_end), abs(stimulus.v_start),
                       float(np.max(np.abs(dc_vals))) if len(dc_vals) else 1.0, 1e-12)

    series = {name: np.empty(n_steps + 1) for name in probe_rows}
    for name, row in probe_rows.items():
        series[name][0] = x[row] if row >= 0 else 0.0

    ramp_end = 0.0 if warm else stimulus.ramp_end_s
    tile_min = None
    if tile_rows is not None:
        tile_min = np.full(tile_rows.shape, np.inf)

    for step in range(1, n_steps + 1):
        t = times[step]
        rhs = static * stimulus.load_factor(t)
        if len(cap_g):
            pos = cap_a >= 0
            np.add.at(rhs, cap_a[pos], cap_ieq[pos])
            neg = cap_b >= 0
            np.subtract.at(rhs, cap_b[neg], cap_ieq[neg])
        if len(ind_rows):
            rhs[ind_rows] += ind_e
        if len(vsrc_rows):
            if warm:
                rhs[vsrc_rows] = stimulus.v_end
            elif stimulus.kind == "step":
                rhs[vsrc_rows] = stimulus.voltage(t, 0.0)
            else:
                rhs[vsrc_rows] = dc_vals

        x = lu.solve(rhs)

        vmax = float(np.max(np.abs(x[: sys_.n_nodes])))
        if not np.isfinite(vmax) or vmax > guard:
            raise SolverError(
                f"transient diverged at t={t:.3e}s (|v|max={vmax:.3e}); "
                f"method={method}, dt={dt:.3e} — reduce dt or switch method")

        # history updates
        if len(cap_g):
            vab = vnode(cap_a, x) - vnode(cap_b, x)
            if trap:
                cap_ieq = 2.0 * cap_g * vab - cap_ieq
            else:
                cap_ieq = cap_g * vab
        if len(ind_rows):
            j = x[ind_rows]
            if trap:
                vab = vnode(ind_a, x) - vnode(ind_b, x)
                ind_e = -vab - ind_z * j
            else:
                ind_e = -ind_z * j

        for name, row in probe_rows.items():
            series[name][step] = x[row]
        if tile_min is not None and t >= ramp_end:
            np.minimum(tile_min, x[tile_rows], out=tile_min)

    final = np.concatenate(([0.0], x[: sys_.n_nodes]))
    mask = times >= ramp_end
    if not np.any(mask):
        mask = times == times[-1]
    post_ramp_min = {name: float(np.min(s[mask])) for name, s in series.items()}
    wf = TransientWaveform(
        time_s=times, series=series, method=method, dt=dt,
        ramp_end_s=ramp_end, final_voltages=final,
        post_ramp_min=post_ramp_min)
    if tile_min is not None:
        shape = np.asarray(tiles).shape
        wf.tile_min = tile_min.reshape(shape)
        wf.tile_final = final[np.asarray(tiles)]
    return wf


def waveform_to_csv(wf: TransientWaveform) -> str:
    """CSV export: ``time_s,probe,...`` one row per step, full precision."""
    names = list(wf.series)
    lines = ["time_s," + ",".join(names)]
    cols = [wf.series[n] for n in names]
    for k, t in enumerate(wf.time_s):
        vals = ",".join(f"{c[k]:.17g}" for c in cols)
        lines.append(f"{t:.17g},{vals}")
    return "\n".join(lines) + "\n"
