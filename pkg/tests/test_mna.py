"""MNA solver: DC oracle parity, closed-form transients, solver properties."""

import numpy as np
import pytest

from oracle import (dense_dc, random_dc_netlist, rc_step_voltage,
                    rl_mid_voltage, rlc_cap_voltage)
from pdnsim import (Netlist, SolverError, Stimulus, dc_solve, stamp_mna,
                    transient_solve)
from pdnsim.mna import waveform_to_csv
from pdnsim.netlist import (CAPACITOR, CURRENT_SOURCE, GROUND, INDUCTOR,
                            RESISTOR, VOLTAGE_SOURCE)


def _series_rlc(*elems, v=1.0):
    """source - elem1 - elem2 - ... - ground chain with probes n0, n1, ..."""
    net = Netlist()
    prev = net.add_node("vrm_die")
    net.sources.append(net.add(VOLTAGE_SOURCE, prev, GROUND, v, "vrm_src[0]"))
    stems = {RESISTOR: "chip_h", INDUCTOR: "pkg_lh", CAPACITOR: "chip_decap_c"}
    for k, (kind, val) in enumerate(elems):
        last = k == len(elems) - 1
        nxt = GROUND if last else net.add_node("internal", (k, 0))
        net.add(kind, prev, nxt, val, f"{stems[kind]}[{k},0]")
        if not last:
            net.probes[f"n{k}"] = nxt
        prev = nxt
    return net


# ---------------------------------------------------------------------------
# DC


def test_dc_voltage_divider():
    net = _series_rlc((RESISTOR, 3.0), (RESISTOR, 1.0))
    dc = dc_solve(net)
    assert dc.voltage(net.probes["n0"]) == pytest.approx(0.25, rel=1e-12)


def test_dc_inductor_is_short():
    net = _series_rlc((RESISTOR, 2.0), (INDUCTOR, 1e-9), (RESISTOR, 2.0))
    dc = dc_solve(net)
    assert dc.voltage(net.probes["n0"]) == pytest.approx(0.5, rel=1e-12)
    assert dc.voltage(net.probes["n1"]) == pytest.approx(0.5, rel=1e-12)


def test_dc_capacitor_is_open():
    net = _series_rlc((RESISTOR, 1.0), (CAPACITOR, 1e-9))
    dc = dc_solve(net)
    # no DC path through the cap: no current, no drop across R
    assert dc.voltage(net.probes["n0"]) == pytest.approx(1.0, rel=1e-12)


def test_dc_branch_currents_and_residual():
    net = _series_rlc((RESISTOR, 4.0,))
    dc = dc_solve(net)
    # source branch carries -0.25 A (current flows out of the + terminal)
    (src_idx,) = net.sources
    assert dc.branch_currents[src_idx] == pytest.approx(-0.25, rel=1e-12)
    assert dc.kcl_residual < 1e-12


def test_dc_matches_dense_oracle_on_random_netlists():
    rng = np.random.default_rng(1234)
    for _ in range(25):
        net = random_dc_netlist(rng)
        ref = dense_dc(net)
        got = dc_solve(net).voltages
        scale = max(1.0, float(np.max(np.abs(ref))))
        assert np.max(np.abs(got - ref)) / scale < 1e-9


def test_dc_superposition():
    """Doubling every source doubles every node voltage (linear network)."""
    rng = np.random.default_rng(99)
    net = random_dc_netlist(rng)
    v1 = dc_solve(net).voltages
    doubled = Netlist()
    doubled.nodes = list(net.nodes)
    for e in net.elements:
        scale = 2.0 if e.kind in (VOLTAGE_SOURCE, CURRENT_SOURCE) else 1.0
        doubled.add(e.kind, e.a, e.b, e.value * scale, e.label)
    doubled.sources = list(net.sources)
    v2 = dc_solve(doubled).voltages
    assert np.allclose(v2, 2.0 * v1, rtol=1e-9, atol=1e-12)


def test_dc_singular_matrix_raises_with_diagnostic():
    # a node reachable only through a capacitor has no DC equation
    net = Netlist()
    a = net.add_node("vrm_die")
    net.sources.append(net.add(VOLTAGE_SOURCE, a, GROUND, 1.0, "vrm_src[0]"))
    b = net.add_node("internal", (0, 0))
    net.add(CAPACITOR, a, b, 1e-9, "chip_decap_c[0,0]")
    net.add(RESISTOR, a, GROUND, 1.0, "chip_h[0,0]")
    with pytest.raises(SolverError, match="singular|non-finite"):
        dc_solve(net)


def test_stamp_mna_argument_checks():
    net = _series_rlc((RESISTOR, 1.0))
    with pytest.raises(ValueError, match="unknown mode"):
        stamp_mna(net, mode="ac")
    with pytest.raises(ValueError, match="dt > 0"):
        stamp_mna(net, mode="transient", dt=0.0)
    with pytest.raises(ValueError, match="integration method"):
        stamp_mna(net, mode="transient", dt=1e-12, method="rk4")


# ---------------------------------------------------------------------------
# stimulus


def test_stimulus_ramp_shape():
    s = Stimulus(kind="step", v_start=0.0, v_end=1.0, rise_time_s=1e-9)
    assert s.voltage(-1e-12, 0.0) == 0.0
    assert s.voltage(0.5e-9, 0.0) == pytest.approx(0.5)
    assert s.voltage(2e-9, 0.0) == 1.0
    assert s.ramp_end_s == 1e-9


def test_stimulus_load_activation_window():
    s = Stimulus(kind="step", load_delay_s=5e-9, load_rise_s=0.5e-9)
    assert s.load_factor(4.9e-9) == 0.0
    assert s.load_factor(5.25e-9) == pytest.approx(0.5)
    assert s.load_factor(6e-9) == 1.0
    assert Stimulus(kind="dc").load_factor(0.0) == 1.0


def test_stimulus_rejects_bad_arguments():
    with pytest.raises(ValueError, match="unknown stimulus kind"):
        Stimulus(kind="pulse")
    with pytest.raises(ValueError, match="rise_time_s > 0"):
        Stimulus(kind="step", rise_time_s=0.0)


# ---------------------------------------------------------------------------
# transient closed forms
#
# The t=0 sample is the pre-step initial condition by construction (the
# "dc" stimulus applies the full source value from the first step), so the
# closed-form comparisons start at sample 1.


def test_transient_rc_matches_closed_form():
    r, c = 100.0, 1e-9
    tau = r * c
    net = _series_rlc((RESISTOR, r), (CAPACITOR, c))
    wf = transient_solve(net, Stimulus(kind="dc"), tau / 1000, 5 * tau,
                         probes=["n0"])
    ref = rc_step_voltage(wf.time_s, 1.0, r, c)
    assert np.max(np.abs(wf.series["n0"][1:] - ref[1:])) < 5e-3


def test_transient_rl_matches_closed_form():
    r, l = 10.0, 1e-6
    tau = l / r
    net = _series_rlc((RESISTOR, r), (INDUCTOR, l))
    wf = transient_solve(net, Stimulus(kind="dc"), tau / 1000, 5 * tau,
                         probes=["n0"])
    ref = rl_mid_voltage(wf.time_s, 1.0, r, l)
    assert np.max(np.abs(wf.series["n0"][1:] - ref[1:])) < 5e-3


def test_transient_rlc_underdamped_matches_closed_form():
    r, l, c = 1.0, 1e-6, 1e-6
    wd = np.sqrt(1.0 / (l * c) - (r / (2 * l)) ** 2)
    period = 2 * np.pi / wd
    net = _series_rlc((RESISTOR, r), (INDUCTOR, l), (CAPACITOR, c))
    wf = transient_solve(net, Stimulus(kind="dc"), period / 1000, 5 * period,
                         probes=["n1"])
    ref = rlc_cap_voltage(wf.time_s, 1.0, r, l, c)
    assert np.max(np.abs(wf.series["n1"][1:] - ref[1:])) < 1e-2


def test_backward_euler_converges_to_same_answer():
    r, c = 100.0, 1e-9
    tau = r * c
    net = _series_rlc((RESISTOR, r), (CAPACITOR, c))
    wf = transient_solve(net, Stimulus(kind="dc"), tau / 5000, 5 * tau,
                         method="be", probes=["n0"])
    ref = rc_step_voltage(wf.time_s, 1.0, r, c)
    # first order: looser than trap at matched step, still converging
    assert np.max(np.abs(wf.series["n0"][1:] - ref[1:])) < 5e-3


def test_transient_settles_to_dc():
    net = _series_rlc((RESISTOR, 2.0), (INDUCTOR, 1e-9), (RESISTOR, 2.0))
    dc = dc_solve(net)
    wf = transient_solve(net, Stimulus(kind="step", rise_time_s=1e-10,
                                       load_delay_s=0.0, load_rise_s=1e-12),
                         1e-11, 1e-7, probes=["n0"])
    assert wf.series["n0"][-1] == pytest.approx(dc.voltage(net.probes["n0"]),
                                                abs=1e-9)


def test_warm_start_holds_operating_point_without_load():
    """With no current sources, the warm start is already the steady state."""
    net = _series_rlc((RESISTOR, 2.0), (CAPACITOR, 1e-9))
    wf = transient_solve(net, Stimulus(kind="step"), 1e-11, 1e-8,
                         probes=["n0"], init="warm")
    assert np.max(np.abs(wf.series["n0"] - 1.0)) < 1e-9


def test_warm_start_responds_only_to_the_load_step():
    net = _series_rlc((RESISTOR, 2.0), (CAPACITOR, 1e-9))
    node = net.probes["n0"]
    net.add(CURRENT_SOURCE, node, GROUND, 0.1, "load[0,0]")
    stim = Stimulus(kind="step", load_delay_s=2e-9, load_rise_s=0.1e-9)
    wf = transient_solve(net, stim, 1e-11, 5e-8, probes=["n0"], init="warm")
    t = wf.time_s
    before = wf.series["n0"][t < 1.9e-9]
    assert np.max(np.abs(before - 1.0)) < 1e-9       # quiet until the step
    assert wf.series["n0"][-1] == pytest.approx(1.0 - 0.1 * 2.0, rel=1e-6)


def test_transient_argument_checks():
    net = _series_rlc((RESISTOR, 1.0))
    stim = Stimulus(kind="dc")
    with pytest.raises(ValueError, match="dt must be"):
        transient_solve(net, stim, 0.0, 1e-9)
    with pytest.raises(ValueError, match="t_end must be"):
        transient_solve(net, stim, 1e-12, 0.0)
    with pytest.raises(ValueError, match="unknown init"):
        transient_solve(net, stim, 1e-12, 1e-9, init="tepid")
    with pytest.raises(KeyError, match="unknown probe"):
        transient_solve(net, stim, 1e-12, 1e-9, probes=["nope"])


def test_waveform_csv_format_and_determinism():
    net = _series_rlc((RESISTOR, 100.0), (CAPACITOR, 1e-9))
    wf = transient_solve(net, Stimulus(kind="dc"), 1e-8, 1e-7, probes=["n0"])
    csv1 = waveform_to_csv(wf)
    lines = csv1.splitlines()
    assert lines[0] == "time_s,n0"
    assert len(lines) == 12  # header + 11 samples
    wf2 = transient_solve(net, Stimulus(kind="dc"), 1e-8, 1e-7, probes=["n0"])
    assert waveform_to_csv(wf2) == csv1
