"""Builders that turn a validated ScenarioConfig into an RLC netlist.

Discretization scheme:

* chip: one node per tile; neighboring tiles joined by the parallel
  combination of all physical power wires crossing the tile boundary.
* package: the P/G metal layers are merged into one equivalent sheet and
  discretized on a coarser grid (``grid_pitch_mm``); each lateral segment is
  one square of sheet resistance in series with the effective loop
  inductance per square.
* bump/via arrays are aggregated into one R-L branch per tile (or per
  attach site); per-branch values are the parallel combination of the bumps
  or vias whose centers fall in the tile footprint.

The chip is centered on the package; coordinates are in mm with the origin
at the common center.
"""

from __future__ import annotations

import numpy as np

from .config import (BacksideVrm, ChipOnVrm3D, OnPackageVrm, ScenarioConfig,
                     total_load_current)
from .errors import NetlistError
from .netlist import (CAPACITOR, CURRENT_SOURCE, GROUND, INDUCTOR, RESISTOR,
                      VOLTAGE_SOURCE, Netlist, make_label,
                      merged_sheet_resistance, via_inductance, via_resistance,
                      wire_resistance)

# floors used when a config legitimately sets a parasitic to zero; elements
# must stay strictly positive for the stampers
_R_FLOOR = 1e-9
_L_FLOOR = 1e-16
_PAD_CONTACT_OHM = 1e-6  # total contact resistance of one VRM attach pad


def _r(x):
    return max(float(x), _R_FLOOR)


def _l(x):
    return max(float(x), _L_FLOOR)


def build_chip_grid(chip, power_map=None, onchip_esr_ohm_mm2=1.2, net=None):
    """Discretized on-chip PDN: tile node grid, aggregated boundary
    resistors, per-tile load current sources and decap branches.

    Returns ``(net, tile_nodes)`` with ``tile_nodes[j, i]`` the node index
    of tile (i, j).
    """
    nx, ny = chip.tile_count_x, chip.tile_count_y
    if nx < 2 or ny < 2:
        raise NetlistError("chip tile grid must be at least 2x2")
    if net is None:
        net = Netlist()

    tx_mm = chip.width_mm / nx
    ty_mm = chip.height_mm / ny
    tile_area_mm2 = tx_mm * ty_mm
    wire = chip.onchip_wire

    tile_nodes = np.empty((ny, nx), dtype=int)
    for j in range(ny):
        for i in range(nx):
            tile_nodes[j, i] = net.add_node("chip", (i, j))

    # boundary resistors: n parallel wires cross each tile boundary
    n_x = max(1, int(ty_mm * 1000.0 // wire.pitch_um))   # wires along x
    n_y = max(1, int(tx_mm * 1000.0 // wire.pitch_um))   # wires along y
    r_h = wire_resistance(wire, tx_mm * 1000.0) / n_x
    r_v = wire_resistance(wire, ty_mm * 1000.0) / n_y
    for j in range(ny):
        for i in range(nx - 1):
            net.add(RESISTOR, tile_nodes[j, i], tile_nodes[j, i + 1], r_h,
                    make_label("chip_h", i, j))
    for j in range(ny - 1):
        for i in range(nx):
            net.add(RESISTOR, tile_nodes[j, i], tile_nodes[j + 1, i], r_v,
                    make_label("chip_v", i, j))

    # per-tile load and decap
    dens = None if power_map is None else power_map.densities
    cap_f = chip.onchip_decap_density_nf_per_mm2 * 1e-9 * tile_area_mm2
    esr = onchip_esr_ohm_mm2 / tile_area_mm2
    for j in range(ny):
        for i in range(nx):
            node = tile_nodes[j, i]
            amps = 0.0 if dens is None else float(dens[j, i]) * tile_area_mm2
            net.add(CURRENT_SOURCE, node, GROUND, amps, make_label("load", i, j))
            if cap_f > 0.0:
                mid = net.add_node("internal", (i, j))
                net.add(RESISTOR, node, mid, _r(esr), make_label("chip_decap_esr", i, j))
                net.add(CAPACITOR, mid, GROUND, cap_f, make_label("chip_decap_c", i, j))
            net.probes[f"tile[{i},{j}]"] = node
    return net, tile_nodes


def build_package_network(pkg, net=None):
    """Merged-sheet package plane on a coarse grid.

    Returns ``(net, pkg_nodes, xs_mm, ys_mm)``; ``pkg_nodes[j, i]`` is the
    node at lateral position (xs_mm[i], ys_mm[j]), origin at package center.
    """
    if net is None:
        net = Netlist()
    p = pkg.grid_pitch_mm
    nx = int(round(pkg.package_width_mm / p)) + 1
    ny = int(round(pkg.package_height_mm / p)) + 1
    xs = -pkg.package_width_mm / 2.0 + p * np.arange(nx)
    ys = -pkg.package_height_mm / 2.0 + p * np.arange(ny)

    r_sq = merged_sheet_resistance(pkg)
    l_sq = pkg.segment_inductance_ph_per_square * 1e-12

    nodes = np.empty((ny, nx), dtype=int)
    for j in range(ny):
        for i in range(nx):
            nodes[j, i] = net.add_node("package_top", (i, j))
    for j in range(ny):
        for i in range(nx - 1):
            mid = net.add_node("internal", (i, j))
            net.add(RESISTOR, nodes[j, i], mid, _r(r_sq), make_label("pkg_h", i, j))
            net.add(INDUCTOR, mid, nodes[j, i + 1], _l(l_sq), make_label("pkg_lh", i, j))
    for j in range(ny - 1):
        for i in range(nx):
            mid = net.add_node("internal", (i, j))
            net.add(RESISTOR, nodes[j, i], mid, _r(r_sq), make_label("pkg_v", i, j))
            net.add(INDUCTOR, mid, nodes[j + 1, i], _l(l_sq), make_label("pkg_lv", i, j))
    return net, nodes, xs, ys


def _nearest(coords, value):
    return int(np.argmin(np.abs(coords - value)))


def _bumps_per_tile(tx_mm, ty_mm, pitch_um):
    return max(1, int(tx_mm * 1000.0 // pitch_um) * int(ty_mm * 1000.0 // pitch_um))


def _decap_branch(net, node, cap, stem_prefix, idx):
    mid1 = net.add_node("internal")
    mid2 = net.add_node("internal")
    net.add(RESISTOR, node, mid1, _r(cap.esr_mohm * 1e-3),
            make_label(f"{stem_prefix}_esr", idx))
    net.add(INDUCTOR, mid1, mid2, _l(cap.esl_nh * 1e-9),
            make_label(f"{stem_prefix}_esl", idx))
    net.add(CAPACITOR, mid2, GROUND, cap.capacitance_uf * 1e-6,
            make_label(f"{stem_prefix}_c", idx))


def _vrm_chain(net, k, vrm, attach_label="vrm"):
    """Ideal source + series R/L; returns the output node of the chain."""
    n_src = net.add_node("vrm_die", ("src", k))
    src_idx = net.add(VOLTAGE_SOURCE, n_src, GROUND, vrm.output_voltage_v,
                      make_label("vrm_src", k))
    net.sources.append(src_idx)
    n1 = net.add_node("vrm_die", ("r", k))
    net.add(RESISTOR, n_src, n1, _r(vrm.series_resistance_mohm * 1e-3),
            make_label("vrm_r", k))
    n2 = net.add_node("vrm_die", ("l", k))
    net.add(INDUCTOR, n1, n2, _l(vrm.series_inductance_nh * 1e-9),
            make_label("vrm_l", k))
    return n2


def assemble_netlist(config: ScenarioConfig) -> Netlist:
    """Full benchmark netlist for one scenario (topology per VRM placement).

    The returned netlist carries ``meta`` entries used downstream:
    ``chip_tile_nodes`` (2-D array of node ids), ``supply_voltage_v`` and
    ``total_load_current_a``.
    """
    chip, pkg = config.chip, config.package
    net = Netlist()

    net, tiles = build_chip_grid(
        chip, power_map=config.power_map,
        onchip_esr_ohm_mm2=config.decaps.onchip_esr_ohm_mm2, net=net)
    net, pnodes, pxs, pys = build_package_network(pkg, net=net)

    nx, ny = chip.tile_count_x, chip.tile_count_y
    tx_mm = chip.width_mm / nx
    ty_mm = chip.height_mm / ny
    tile_cx = -chip.width_mm / 2.0 + tx_mm * (np.arange(nx) + 0.5)
    tile_cy = -chip.height_mm / 2.0 + ty_mm * (np.arange(ny) + 0.5)

    plc = config.placement
    is_3d = isinstance(plc, ChipOnVrm3D)

    # chip-to-carrier attach: C4 per tile (2.5-D) or TSV+microbump per tile (3-D)
    if is_3d:
        vrm_out = _vrm_chain(net, 0, config.vrm)
        die = vrm_out  # VRM die distribution node
        if plc.die_decap is not None:
            _decap_branch(net, die, plc.die_decap, "die_decap", 0)
        n_ub = _bumps_per_tile(tx_mm, ty_mm, plc.microbump.pitch_um)
        r_site = (via_resistance(plc.vrm_tsv)
                  + plc.microbump.resistance_per_bump_mohm * 1e-3) / n_ub
        l_site = (via_inductance(plc.vrm_tsv)
                  + plc.microbump.inductance_per_bump_ph * 1e-12) / n_ub
        for j in range(ny):
            for i in range(nx):
                mid = net.add_node("internal", (i, j))
                net.add(RESISTOR, die, mid, _r(r_site), make_label("tsv_r", i, j))
                net.add(INDUCTOR, mid, tiles[j, i], _l(l_site), make_label("ubump_l", i, j))
    else:
        c4 = pkg.c4_bump
        n_c4 = _bumps_per_tile(tx_mm, ty_mm, c4.pitch_um)
        r_tile = c4.resistance_per_bump_mohm * 1e-3 / n_c4
        l_tile = c4.inductance_per_bump_ph * 1e-12 / n_c4
        for j in range(ny):
            for i in range(nx):
                pi = _nearest(pxs, tile_cx[i])
                pj = _nearest(pys, tile_cy[j])
                mid = net.add_node("internal", (i, j))
                net.add(RESISTOR, tiles[j, i], mid, _r(r_tile), make_label("c4_r", i, j))
                net.add(INDUCTOR, mid, pnodes[pj, pi], _l(l_tile), make_label("c4_l", i, j))

    # under-chip package node set (used by 3-D die attach and backside vias)
    under_i = [i for i, x in enumerate(pxs) if abs(x) <= chip.width_mm / 2.0 + 1e-9]
    under_j = [j for j, y in enumerate(pys) if abs(y) <= chip.height_mm / 2.0 + 1e-9]

    if isinstance(plc, OnPackageVrm):
        sides = {1: ["west"], 2: ["west", "east"],
                 4: ["west", "east", "south", "north"]}[plc.count]
        r_sq = merged_sheet_resistance(pkg)
        l_sq = pkg.segment_inductance_ph_per_square * 1e-12
        padw = pkg.vrm_pad_width_mm
        squares = plc.gap_mm / padw
        for k, side in enumerate(sides):
            out = _vrm_chain(net, k, config.vrm)
            n3 = net.add_node("vrm_die", ("strap_r", k))
            net.add(RESISTOR, out, n3, _r(r_sq * squares), make_label("strap_r", k))
            n_pad = net.add_node("vrm_die", ("pad", k))
            net.add(INDUCTOR, n3, n_pad, _l(l_sq * squares), make_label("strap_l", k))
            pad_nodes = _pad_line(pnodes, pxs, pys, chip, side, padw)
            for m, pn in enumerate(pad_nodes):
                net.add(RESISTOR, n_pad, pn, _PAD_CONTACT_OHM * len(pad_nodes),
                        make_label("pad", k, m))
    elif isinstance(plc, BacksideVrm):
        tpv = pkg.through_package_via
        out = _vrm_chain(net, 0, config.vrm)
        n_side = pkg.tpv_sites_per_side
        site_x = [-chip.width_mm / 2.0 + (s + 0.5) * chip.width_mm / n_side
                  for s in range(n_side)]
        site_y = [-chip.height_mm / 2.0 + (s + 0.5) * chip.height_mm / n_side
                  for s in range(n_side)]
        m = 0
        for yy in site_y:
            for xx in site_x:
                pn = pnodes[_nearest(pys, yy), _nearest(pxs, xx)]
                mid = net.add_node("internal", ("tpv", m))
                net.add(RESISTOR, out, mid, _r(via_resistance(tpv)), make_label("tpv_r", m))
                net.add(INDUCTOR, mid, pn, _l(via_inductance(tpv)), make_label("tpv_l", m))
                m += 1
    else:
        # 3-D: VRM die still sits on the package through the C4 array so the
        # package/board decap paths stay connected
        c4 = pkg.c4_bump
        total_c4 = _bumps_per_tile(chip.width_mm, chip.height_mm, c4.pitch_um)
        n_sites = len(under_i) * len(under_j)
        share = max(1.0, total_c4 / n_sites)
        m = 0
        for j in under_j:
            for i in under_i:
                mid = net.add_node("internal", ("die_c4", m))
                net.add(RESISTOR, die, mid, _r(c4.resistance_per_bump_mohm * 1e-3 / share),
                        make_label("die_c4_r", m))
                net.add(INDUCTOR, mid, pnodes[j, i],
                        _l(c4.inductance_per_bump_ph * 1e-12 / share),
                        make_label("die_c4_l", m))
                m += 1

    # package discrete decaps
    for m, cap in enumerate(config.decaps.package_decaps):
        pi = _nearest(pxs, (cap.x - 0.5) * pkg.package_width_mm)
        pj = _nearest(pys, (cap.y - 0.5) * pkg.package_height_mm)
        _decap_branch(net, pnodes[pj, pi], cap, "pkg_decap", m)

    # board: solder bump array at the four package corners -> lumped board
    sb = pkg.solder_bump
    r_sb = sb.resistance_per_bump_mohm * 1e-3 / pkg.solder_bump_count
    l_sb = sb.inductance_per_bump_ph * 1e-12 / pkg.solder_bump_count
    board_a = net.add_node("board", "solder")
    corners = [(0, 0), (0, len(pxs) - 1), (len(pys) - 1, 0), (len(pys) - 1, len(pxs) - 1)]
    for c, (j, i) in enumerate(corners):
        mid = net.add_node("internal", ("solder", c))
        net.add(RESISTOR, pnodes[j, i], mid, _r(r_sb * len(corners)),
                make_label("solder_r", c))
        net.add(INDUCTOR, mid, board_a, _l(l_sb * len(corners)), make_label("solder_l", c))
    board_mid = net.add_node("board", "lump")
    board_b = net.add_node("board", "far")
    net.add(RESISTOR, board_a, board_mid, _r(config.board.lumped_resistance_mohm * 1e-3),
            make_label("board_r"))
    net.add(INDUCTOR, board_mid, board_b, _l(config.board.lumped_inductance_nh * 1e-9),
            make_label("board_l"))
    for m, cap in enumerate(config.decaps.board_decaps):
        _decap_branch(net, board_b, cap, "board_decap", m)

    # named probes
    net.probes["chip_center"] = int(tiles[ny // 2, nx // 2])
    net.probes["chip_corner"] = int(tiles[0, 0])

    net.meta = {
        "chip_tile_nodes": tiles,
        "supply_voltage_v": config.vrm.output_voltage_v,
        "total_load_current_a": total_load_current(config),
    }
    net.check_connected()
    if not net.sources:
        raise NetlistError("netlist has no VRM voltage source")
    return net


def _pad_line(pnodes, pxs, pys, chip, side, pad_width_mm):
    """Package nodes forming the VRM attach pad just outside one chip edge."""
    half_w, half_h = chip.width_mm / 2.0, chip.height_mm / 2.0
    out = []
    if side in ("west", "east"):
        x = -half_w if side == "west" else half_w
        i = _nearest(pxs, x)
        for j, y in enumerate(pys):
            if abs(y) <= pad_width_mm / 2.0 + 1e-9:
                out.append(int(pnodes[j, i]))
    else:
        y = -half_h if side == "south" else half_h
        j = _nearest(pys, y)
        for i, x in enumerate(pxs):
            if abs(x) <= pad_width_mm / 2.0 + 1e-9:
                out.append(int(pnodes[j, i]))
    if not out:
        raise NetlistError(f"no package nodes available for VRM pad on side {side}")
    return out
