"""Flat RLC netlist representation.

Nodes are dense integer ids with ground reserved at 0.  Elements are
two-terminal; every element carries a provenance label that encodes its tier
and grid position (``chip_h[12,7]``) and parses back via
``parse_label``.  The line-oriented text export is bit-exact and diffable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import NetlistError

GROUND = 0

RESISTOR = "R"
INDUCTOR = "L"
CAPACITOR = "C"
CURRENT_SOURCE = "I"
VOLTAGE_SOURCE = "V"

_KINDS = (RESISTOR, INDUCTOR, CAPACITOR, CURRENT_SOURCE, VOLTAGE_SOURCE)


@dataclass(frozen=True)
class Node:
    index: int
    tier: str            # board | package_bottom | package_top | chip | vrm_die | internal
    position: tuple | str = "lumped"


@dataclass(frozen=True)
class Element:
    kind: str
    a: int
    b: int
    value: float         # ohms / henries / farads / amperes / volts
    label: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise NetlistError(f"unknown element kind {self.kind!r} ({self.label})")
        if self.a == self.b:
            raise NetlistError(f"element terminals must differ ({self.label})")
        if self.kind in (RESISTOR, INDUCTOR, CAPACITOR) and not self.value > 0:
            raise NetlistError(f"passive element value must be > 0 ({self.label}: {self.value})")


@dataclass
class Netlist:
    nodes: list[Node] = field(default_factory=lambda: [Node(GROUND, "ground")])
    elements: list[Element] = field(default_factory=list)
    probes: dict[str, int] = field(default_factory=dict)   # name -> node index
    sources: list[int] = field(default_factory=list)       # element indices of VRM V-sources
    meta: dict = field(default_factory=dict)

    def add_node(self, tier, position="lumped") -> int:
        idx = len(self.nodes)
        self.nodes.append(Node(idx, tier, position))
        return idx

    def add(self, kind, a, b, value, label) -> int:
        self.elements.append(Element(kind, a, b, value, label))
        return len(self.elements) - 1

    @property
    def node_count(self):
        return len(self.nodes)

    def counts(self):
        out = {k: 0 for k in _KINDS}
        for e in self.elements:
            out[e.kind] += 1
        return out

    def check_connected(self):
        """Every node must reach ground through element terminals."""
        adj = [[] for _ in range(self.node_count)]
        for e in self.elements:
            adj[e.a].append(e.b)
            adj[e.b].append(e.a)
        seen = [False] * self.node_count
        stack = [GROUND]
        seen[GROUND] = True
        while stack:
            n = stack.pop()
            for m in adj[n]:
                if not seen[m]:
                    seen[m] = True
                    stack.append(m)
        floating = [self.nodes[i] for i, s in enumerate(seen) if not s]
        if floating:
            labels = ", ".join(f"{n.tier}{n.position}" for n in floating[:8])
            raise NetlistError(
                f"{len(floating)} node(s) not connected to ground (first: {labels})"
            )


# ---------------------------------------------------------------------------
# elementary parasitic formulas


def wire_resistance(wire, segment_length_um) -> float:
    """Resistance in ohms of one on-chip wire segment: rho * L / (t * w)."""
    if segment_length_um < 0:
        raise ValueError("segment length must be >= 0")
    area_m2 = (wire.thickness_um * 1e-6) * (wire.width_um * 1e-6)
    return wire.resistivity_ohm_m * (segment_length_um * 1e-6) / area_m2


def via_resistance(via) -> float:
    """Resistance in ohms of one via site (count_per_site vias in parallel)."""
    r_m = via.diameter_um * 1e-6 / 2.0
    single = via.resistivity_ohm_m * (via.height_um * 1e-6) / (math.pi * r_m * r_m)
    return single / via.count_per_site


def via_inductance(via) -> float:
    """Inductance in henries of one via site."""
    return via.inductance_per_via_ph * 1e-12 / via.count_per_site


def merged_sheet_resistance(pkg) -> float:
    """Ohms per square of the package P/G planes merged in parallel."""
    thickness_m = pkg.metal_layer_count * pkg.layer_thickness_mm * 1e-3
    return pkg.sheet_resistivity_ohm_m / thickness_m


# ---------------------------------------------------------------------------
# labels

_LABEL_RE = re.compile(r"^(?P<stem>[a-z0-9_]+?)(?:\[(?P<idx>[-0-9,]+)\])?$")

# stem -> tier, for round-tripping labels back to their place in the stack
LABEL_TIERS = {
    "chip_h": "chip", "chip_v": "chip", "load": "chip",
    "chip_decap_esr": "chip", "chip_decap_c": "chip",
    "c4_r": "chip", "c4_l": "chip",
    "pkg_h": "package_top", "pkg_v": "package_top", "pkg_lh": "package_top",
    "pkg_lv": "package_top", "pad": "package_top",
    "pkg_decap_esr": "package_top", "pkg_decap_esl": "package_top",
    "pkg_decap_c": "package_top",
    "tpv_r": "package_bottom", "tpv_l": "package_bottom",
    "solder_r": "package_bottom", "solder_l": "package_bottom",
    "board_r": "board", "board_l": "board",
    "board_decap_esr": "board", "board_decap_esl": "board", "board_decap_c": "board",
    "vrm_src": "vrm_die", "vrm_r": "vrm_die", "vrm_l": "vrm_die",
    "strap_r": "vrm_die", "strap_l": "vrm_die",
    "tsv_r": "vrm_die", "ubump_r": "vrm_die", "ubump_l": "vrm_die",
    "die_c4_r": "vrm_die", "die_c4_l": "vrm_die",
    "die_decap_esr": "vrm_die", "die_decap_esl": "vrm_die",
    "die_decap_c": "vrm_die",
}


def make_label(stem, *indices) -> str:
    if indices:
        return f"{stem}[{','.join(str(i) for i in indices)}]"
    return stem


def parse_label(label):
    """Split an element label into (stem, tier, index tuple or None)."""
    m = _LABEL_RE.match(label)
    if not m:
        raise NetlistError(f"unparseable element label: {label!r}")
    stem = m.group("stem")
    tier = LABEL_TIERS.get(stem)
    if tier is None:
        raise NetlistError(f"label stem {stem!r} has no registered tier: {label!r}")
    idx = m.group("idx")
    indices = tuple(int(t) for t in idx.split(",")) if idx else None
    return stem, tier, indices


# ---------------------------------------------------------------------------
# text export: one element per line "kind a b value label"


def netlist_to_text(net: Netlist) -> str:
    lines = [f"* pdnsim netlist: {net.node_count} nodes, {len(net.elements)} elements"]
    for e in net.elements:
        lines.append(f"{e.kind} {e.a} {e.b} {e.value!r} {e.label}")
    for name, idx in net.probes.items():
        lines.append(f"* probe {name} {idx}")
    return "\n".join(lines) + "\n"


def netlist_from_text(text: str) -> Netlist:
    """Parse the text export back into a netlist (node metadata is not
    preserved; nodes are recreated as bare indices)."""
    net = Netlist()
    max_node = 0
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("*"):
            parts = line.split()
            if len(parts) == 4 and parts[1] == "probe":
                net.probes[parts[2]] = int(parts[3])
            continue
        kind, a, b, value, label = line.split(None, 4)
        a, b = int(a), int(b)
        max_node = max(max_node, a, b)
        net.elements.append(Element(kind, a, b, float(value), label))
    while net.node_count <= max_node:
        net.add_node("unknown")
    net.sources = [i for i, e in enumerate(net.elements) if e.kind == VOLTAGE_SOURCE]
    return net
