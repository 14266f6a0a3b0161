"""Scenario configuration model.

Every physical quantity carries its unit in the field name (``_mm``,
``_nf_per_mm2``, ...).  Table-style parameter sets in this domain mix um, mm,
nF and uF scales, and silent unit mistakes are the dominant failure mode, so
the unit is kept visible end to end: config file keys, dataclass fields and
CSV headers all agree.

All objects are frozen dataclasses; a validated ScenarioConfig is immutable
and safe to share across sweep workers.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# ---------------------------------------------------------------------------
# leaf specs


@dataclass(frozen=True)
class WireSpec:
    """On-chip power grid wire geometry and material."""

    resistivity_ohm_m: float = 17.1e-9
    thickness_um: float = 5.0
    width_um: float = 3.3
    pitch_um: float = 30.0


@dataclass(frozen=True)
class ViaSpec:
    """Vertical via array (TSV or through-package via) at one attach site."""

    resistivity_ohm_m: float = 80e-9
    height_um: float = 50.0
    diameter_um: float = 10.0
    inductance_per_via_ph: float = 20.0
    count_per_site: int = 4


@dataclass(frozen=True)
class BumpSpec:
    """Solder/micro bump array parameters (per-bump lumped values)."""

    diameter_um: float = 40.0
    pitch_um: float = 100.0
    resistance_per_bump_mohm: float = 5.0
    inductance_per_bump_ph: float = 20.0


@dataclass(frozen=True)
class ChipSpec:
    width_mm: float = 10.0
    height_mm: float = 10.0
    supply_voltage_v: float = 1.0
    total_power_w: float = 100.0
    onchip_wire: WireSpec = field(default_factory=WireSpec)
    onchip_decap_density_nf_per_mm2: float = 5.3
    tile_count_x: int = 50
    tile_count_y: int = 50


@dataclass(frozen=True)
class PackageSpec:
    metal_layer_count: int = 10
    layer_thickness_mm: float = 0.010
    package_width_mm: float = 30.0
    package_height_mm: float = 30.0
    # Effective sheet resistivity of one merged P/G plane.  Somewhat above
    # bulk copper: real planes are perforated and shared with signal routing.
    sheet_resistivity_ohm_m: float = 22e-9
    # Effective loop inductance of the package-level current path, expressed
    # per square of lateral plane.  A tightly coupled plane pair; the small
    # value keeps the plane L/R redistribution time constant well inside the
    # settling window.  Calibration knob.
    segment_inductance_ph_per_square: float = 0.18
    grid_pitch_mm: float = 1.0
    # Lateral attach pad width for on-package VRMs (pad spans the facing chip
    # edge by default).
    vrm_pad_width_mm: float = 10.0
    solder_bump: BumpSpec = field(
        default_factory=lambda: BumpSpec(
            diameter_um=500.0,
            pitch_um=1000.0,
            resistance_per_bump_mohm=0.5,
            inductance_per_bump_ph=100.0,
        )
    )
    solder_bump_count: int = 100
    # C4 values are effective per-bump figures for the whole chip attach
    # path (bump + package redistribution + on-chip grid entry), calibrated
    # against the benchmark noise targets rather than bare bump parasitics.
    c4_bump: BumpSpec = field(
        default_factory=lambda: BumpSpec(
            diameter_um=80.0,
            pitch_um=100.0,
            resistance_per_bump_mohm=400.0,
            inductance_per_bump_ph=1000.0,
        )
    )
    through_package_via: ViaSpec | None = field(
        default_factory=lambda: ViaSpec(
            resistivity_ohm_m=17.1e-9,
            height_um=1000.0,
            diameter_um=200.0,
            inductance_per_via_ph=0.05,
            count_per_site=1,
        )
    )
    # Backside VRM feeds the package through a grid of via attach sites
    # spread over the chip footprint projection (n x n sites).
    tpv_sites_per_side: int = 8


@dataclass(frozen=True)
class VrmSpec:
    """Regulator modeled as an ideal source with series parasitics."""

    series_resistance_mohm: float = 0.01
    series_inductance_nh: float = 0.00001
    output_voltage_v: float = 1.0


@dataclass(frozen=True)
class OnPackageVrm:
    """1/2/4 regulator dies beside the chip on the package top."""

    count: int = 4
    gap_mm: float = 1.0

    variant = "on_package"


@dataclass(frozen=True)
class BacksideVrm:
    """One regulator die on the backside of the package, feeding through vias."""

    variant = "backside"


@dataclass(frozen=True)
class ChipOnVrm3D:
    """Processor die stacked on the regulator die (TSV + microbump path)."""

    microbump: BumpSpec = field(
        default_factory=lambda: BumpSpec(
            diameter_um=20.0,
            pitch_um=100.0,
            resistance_per_bump_mohm=120.0,
            inductance_per_bump_ph=770.0,
        )
    )
    vrm_tsv: ViaSpec = field(
        default_factory=lambda: ViaSpec(
            resistivity_ohm_m=80e-9,
            height_um=50.0,
            diameter_um=5.0,
            inductance_per_via_ph=20.0,
            count_per_site=1,
        )
    )
    # Output capacitance of the regulator die itself; its ESR damps the
    # power-on surge at the die distribution node.
    die_decap: DiscreteDecap | None = field(
        default_factory=lambda: DiscreteDecap(
            capacitance_uf=2.0, esr_mohm=0.2, esl_nh=0.00001, tier="package"
        )
    )

    variant = "chip_on_vrm_3d"


VrmPlacement = OnPackageVrm | BacksideVrm | ChipOnVrm3D


@dataclass(frozen=True)
class DiscreteDecap:
    capacitance_uf: float
    esr_mohm: float
    esl_nh: float
    tier: str = "package"  # "package" or "board"
    x: float = 0.5
    y: float = 0.5


def _default_package_decaps():
    # 4x4 grid under the chip footprint projection (chip is centered and
    # spans the middle third of a 30 mm package).
    caps = []
    lo, hi = 0.38, 0.62
    for i in range(4):
        for j in range(4):
            caps.append(
                DiscreteDecap(
                    capacitance_uf=0.005,
                    esr_mohm=10.0,
                    esl_nh=0.0001,
                    tier="package",
                    x=lo + (hi - lo) * i / 3.0,
                    y=lo + (hi - lo) * j / 3.0,
                )
            )
    return tuple(caps)


def _default_board_decaps():
    return tuple(
        DiscreteDecap(capacitance_uf=100.0, esr_mohm=1.0, esl_nh=1.0, tier="board", x=0.5, y=0.5)
        for _ in range(10)
    )


@dataclass(frozen=True)
class DecapPolicy:
    onchip_density_nf_per_mm2: float = 5.3
    # On-chip decap ESR scales inversely with decap area; specified as an
    # ohm*mm^2 product so tiling does not change the chip-total ESR.
    onchip_esr_ohm_mm2: float = 0.02
    package_decaps: tuple[DiscreteDecap, ...] = field(default_factory=_default_package_decaps)
    board_decaps: tuple[DiscreteDecap, ...] = field(default_factory=_default_board_decaps)


@dataclass(frozen=True)
class BoardSpec:
    lumped_resistance_mohm: float = 0.2
    # Board + connector current loop; large enough that the board branch is
    # quiescent on the nanosecond timescale of the step experiment.
    lumped_inductance_nh: float = 500.0


class PowerMap:
    """Per-tile load current density grid in A/mm^2 at nominal supply.

    Immutable; ``densities`` is a read-only (ny, nx) array indexed [j, i]
    with i along x.
    """

    def __init__(self, densities, total_power_w, normalized=False):
        arr = np.array(densities, dtype=float)
        arr.setflags(write=False)
        self.densities = arr
        self.total_power_w = float(total_power_w)
        self.normalized = bool(normalized)

    def __eq__(self, other):
        if not isinstance(other, PowerMap):
            return NotImplemented
        return (
            self.densities.shape == other.densities.shape
            and np.array_equal(self.densities, other.densities)
            and self.total_power_w == other.total_power_w
            and self.normalized == other.normalized
        )

    def __repr__(self):
        return (
            f"PowerMap(shape={self.densities.shape}, total_power_w={self.total_power_w}, "
            f"normalized={self.normalized})"
        )


@dataclass(frozen=True)
class ScenarioConfig:
    chip: ChipSpec = field(default_factory=ChipSpec)
    package: PackageSpec = field(default_factory=PackageSpec)
    board: BoardSpec = field(default_factory=BoardSpec)
    vrm: VrmSpec = field(default_factory=VrmSpec)
    placement: VrmPlacement = field(default_factory=OnPackageVrm)
    decaps: DecapPolicy = field(default_factory=DecapPolicy)
    power_map: PowerMap | None = None


# ---------------------------------------------------------------------------
# built-in power maps

HOTSPOT_BLOCK_CENTERS = ((0.3, 0.3), (0.7, 0.7))
HOTSPOT_BLOCK_FRACTION = 0.2
HOTSPOT_DENSITY_RATIO = 3.0


def builtin_power_map(kind, chip, hotspot_ratio=HOTSPOT_DENSITY_RATIO,
                      block_fraction=HOTSPOT_BLOCK_FRACTION,
                      block_centers=HOTSPOT_BLOCK_CENTERS):
    """Generate a uniform or hotspot current-density map for ``chip``.

    ``hotspot``: background density plus rectangular blocks (each
    ``block_fraction`` of the chip edge in each direction, centered at the
    normalized ``block_centers``) at ``hotspot_ratio`` times the background.
    Both kinds are normalized so tile powers sum to ``chip.total_power_w``.
    """
    nx, ny = chip.tile_count_x, chip.tile_count_y
    if kind == "uniform":
        dens = np.ones((ny, nx))
    elif kind == "hotspot":
        dens = np.ones((ny, nx))
        half = block_fraction / 2.0
        xs = (np.arange(nx) + 0.5) / nx
        ys = (np.arange(ny) + 0.5) / ny
        for cx, cy in block_centers:
            in_x = np.abs(xs - cx) < half
            in_y = np.abs(ys - cy) < half
            dens[np.ix_(in_y, in_x)] = hotspot_ratio
    else:
        raise ValueError(f"unknown builtin power map kind: {kind!r}")
    pm = PowerMap(dens, chip.total_power_w)
    return normalize_power_map(pm, chip)


def normalize_power_map(pm, chip):
    """Rescale densities so the implied total power equals the chip target."""
    nx, ny = chip.tile_count_x, chip.tile_count_y
    tile_area = (chip.width_mm / nx) * (chip.height_mm / ny)
    target_current = chip.total_power_w / chip.supply_voltage_v
    total = float(pm.densities.sum()) * tile_area
    if target_current == 0.0:
        return PowerMap(np.zeros_like(pm.densities), chip.total_power_w, normalized=True)
    if total <= 0.0:
        raise ValidationError(
            ["power_map: all-zero density map cannot be normalized to nonzero total power"]
        )
    return PowerMap(pm.densities * (target_current / total), chip.total_power_w, normalized=True)


# ---------------------------------------------------------------------------
# validation


def _positive(violations, path, value):
    if not value > 0:
        violations.append(f"{path} must be > 0 (got {value})")


def _nonneg(violations, path, value):
    if not value >= 0:
        violations.append(f"{path} must be >= 0 (got {value})")


def _check_wire(v, path, w: WireSpec):
    _positive(v, f"{path}.resistivity_ohm_m", w.resistivity_ohm_m)
    _positive(v, f"{path}.thickness_um", w.thickness_um)
    _positive(v, f"{path}.width_um", w.width_um)
    _positive(v, f"{path}.pitch_um", w.pitch_um)
    if w.width_um >= w.pitch_um:
        v.append(f"{path}.width_um must be < pitch_um")


def _check_via(v, path, s: ViaSpec):
    _positive(v, f"{path}.resistivity_ohm_m", s.resistivity_ohm_m)
    _positive(v, f"{path}.height_um", s.height_um)
    _positive(v, f"{path}.diameter_um", s.diameter_um)
    _positive(v, f"{path}.inductance_per_via_ph", s.inductance_per_via_ph)
    if s.count_per_site < 1:
        v.append(f"{path}.count_per_site must be >= 1")


def _check_bump(v, path, b: BumpSpec):
    _positive(v, f"{path}.diameter_um", b.diameter_um)
    _positive(v, f"{path}.pitch_um", b.pitch_um)
    _positive(v, f"{path}.resistance_per_bump_mohm", b.resistance_per_bump_mohm)
    _positive(v, f"{path}.inductance_per_bump_ph", b.inductance_per_bump_ph)
    if b.diameter_um >= b.pitch_um:
        v.append(f"{path}.diameter_um must be < pitch_um")


def validate_config(config: ScenarioConfig) -> ScenarioConfig:
    """Check every invariant and return a normalized, validated config.

    Collects all violations before raising.  A missing power map defaults to
    the hotspot map; the map is renormalized to the chip's total power.
    Idempotent: re-validating the result returns an equal config.
    """
    v = []
    chip, pkg, board, vrm, plc, dec = (
        config.chip, config.package, config.board, config.vrm,
        config.placement, config.decaps,
    )

    _positive(v, "chip.width_mm", chip.width_mm)
    _positive(v, "chip.height_mm", chip.height_mm)
    _positive(v, "chip.supply_voltage_v", chip.supply_voltage_v)
    _positive(v, "chip.total_power_w", chip.total_power_w)
    _nonneg(v, "chip.onchip_decap_density_nf_per_mm2", chip.onchip_decap_density_nf_per_mm2)
    if chip.tile_count_x < 2 or chip.tile_count_y < 2:
        v.append("chip.tile_count_x/tile_count_y must be >= 2")
    _check_wire(v, "chip.onchip_wire", chip.onchip_wire)

    if pkg.metal_layer_count < 1:
        v.append("package.metal_layer_count must be >= 1")
    _positive(v, "package.layer_thickness_mm", pkg.layer_thickness_mm)
    _positive(v, "package.package_width_mm", pkg.package_width_mm)
    _positive(v, "package.package_height_mm", pkg.package_height_mm)
    _positive(v, "package.sheet_resistivity_ohm_m", pkg.sheet_resistivity_ohm_m)
    _positive(v, "package.segment_inductance_ph_per_square", pkg.segment_inductance_ph_per_square)
    _positive(v, "package.grid_pitch_mm", pkg.grid_pitch_mm)
    _positive(v, "package.vrm_pad_width_mm", pkg.vrm_pad_width_mm)
    _check_bump(v, "package.solder_bump", pkg.solder_bump)
    _check_bump(v, "package.c4_bump", pkg.c4_bump)
    if pkg.through_package_via is not None:
        _check_via(v, "package.through_package_via", pkg.through_package_via)
    if pkg.package_width_mm < chip.width_mm or pkg.package_height_mm < chip.height_mm:
        v.append("package must be at least as large as the chip footprint")

    _nonneg(v, "board.lumped_resistance_mohm", board.lumped_resistance_mohm)
    _nonneg(v, "board.lumped_inductance_nh", board.lumped_inductance_nh)

    _nonneg(v, "vrm.series_resistance_mohm", vrm.series_resistance_mohm)
    _nonneg(v, "vrm.series_inductance_nh", vrm.series_inductance_nh)
    _positive(v, "vrm.output_voltage_v", vrm.output_voltage_v)

    if isinstance(plc, OnPackageVrm):
        if plc.count not in (1, 2, 4):
            v.append("placement.count must be one of 1, 2, 4")
        _positive(v, "placement.gap_mm", plc.gap_mm)
    elif isinstance(plc, BacksideVrm):
        if pkg.through_package_via is None:
            v.append("placement backside requires package.through_package_via")
    elif isinstance(plc, ChipOnVrm3D):
        _check_bump(v, "placement.microbump", plc.microbump)
        _check_via(v, "placement.vrm_tsv", plc.vrm_tsv)
    else:
        v.append(f"unknown placement variant: {plc!r}")

    _nonneg(v, "decaps.onchip_density_nf_per_mm2", dec.onchip_density_nf_per_mm2)
    _positive(v, "decaps.onchip_esr_ohm_mm2", dec.onchip_esr_ohm_mm2)
    for k, d in enumerate(list(dec.package_decaps) + list(dec.board_decaps)):
        path = f"decaps[{k}]"
        _positive(v, f"{path}.capacitance_uf", d.capacitance_uf)
        _nonneg(v, f"{path}.esr_mohm", d.esr_mohm)
        _nonneg(v, f"{path}.esl_nh", d.esl_nh)
        if not (0.0 <= d.x <= 1.0 and 0.0 <= d.y <= 1.0):
            v.append(f"{path}: placement (x, y) must lie in [0, 1]")
        if d.tier not in ("package", "board"):
            v.append(f"{path}.tier must be 'package' or 'board'")

    # C4 pitch must tile the chip footprint within one bump.
    c4 = pkg.c4_bump
    for dim, name in ((chip.width_mm, "width"), (chip.height_mm, "height")):
        n = dim * 1000.0 / c4.pitch_um
        if abs(n - round(n)) > 1.0 and n > 1.0:
            v.append(f"c4 bump pitch does not tile the chip {name} within one bump")

    pm = config.power_map
    if pm is not None:
        if pm.densities.shape != (chip.tile_count_y, chip.tile_count_x):
            v.append(
                f"power_map shape {pm.densities.shape} does not match tile grid "
                f"({chip.tile_count_y}, {chip.tile_count_x})"
            )
        elif np.any(pm.densities < 0):
            v.append("power_map densities must all be >= 0")

    if v:
        raise ValidationError(v)

    # Normalize: decap policy owns the on-chip density; keep the chip mirror
    # field in sync so either entry point reads the same value.
    if chip.onchip_decap_density_nf_per_mm2 != dec.onchip_density_nf_per_mm2:
        chip = dataclasses.replace(
            chip, onchip_decap_density_nf_per_mm2=dec.onchip_density_nf_per_mm2
        )
    if pm is None:
        pm = builtin_power_map("hotspot", chip)
    elif not pm.normalized or pm.total_power_w != chip.total_power_w:
        pm = normalize_power_map(PowerMap(pm.densities, chip.total_power_w), chip)
    return dataclasses.replace(config, chip=chip, power_map=pm)


def total_load_current(config: ScenarioConfig) -> float:
    """Total chip load current in amperes (power / supply voltage)."""
    return config.chip.total_power_w / config.chip.supply_voltage_v


# ---------------------------------------------------------------------------
# benchmark configurations

BENCHMARK_NAMES = ("on_package_1", "on_package_2", "on_package_4", "backside", "chip_on_vrm_3d")


def benchmark_config(name, power_map_kind="hotspot", **overrides) -> ScenarioConfig:
    """One of the five studied VRM placement benchmarks, validated.

    ``on_package_{1,2,4}``, ``backside``, ``chip_on_vrm_3d``.  Field
    overrides apply to the top-level ScenarioConfig.
    """
    placements = {
        "on_package_1": OnPackageVrm(count=1),
        "on_package_2": OnPackageVrm(count=2),
        "on_package_4": OnPackageVrm(count=4),
        "backside": BacksideVrm(),
        "chip_on_vrm_3d": ChipOnVrm3D(),
    }
    if name not in placements:
        raise ValueError(f"unknown benchmark {name!r}; expected one of {BENCHMARK_NAMES}")
    cfg = ScenarioConfig(placement=placements[name], **overrides)
    cfg = dataclasses.replace(cfg, power_map=builtin_power_map(power_map_kind, cfg.chip))
    return validate_config(cfg)


# ---------------------------------------------------------------------------
# serialization

_LEAF_TYPES = {
    "wire": WireSpec,
    "via": ViaSpec,
    "bump": BumpSpec,
}


def _spec_to_dict(obj):
    if obj is None:
        return None
    return {f.name: _field_to_json(getattr(obj, f.name)) for f in dataclasses.fields(obj)}


def _field_to_json(val):
    if dataclasses.is_dataclass(val) and not isinstance(val, type):
        return _spec_to_dict(val)
    if isinstance(val, tuple):
        return [_field_to_json(x) for x in val]
    return val


def config_to_dict(config: ScenarioConfig) -> dict:
    plc = config.placement
    pdict = {"variant": plc.variant}
    pdict.update(_spec_to_dict(plc) or {})
    d = {
        "chip": _spec_to_dict(config.chip),
        "package": _spec_to_dict(config.package),
        "board": _spec_to_dict(config.board),
        "vrm": _spec_to_dict(config.vrm),
        "placement": pdict,
        "decaps": _spec_to_dict(config.decaps),
    }
    if config.power_map is not None:
        d["power_map"] = {
            "densities_a_per_mm2": config.power_map.densities.tolist(),
            "total_power_w": config.power_map.total_power_w,
            "normalized": config.power_map.normalized,
        }
    return d


def _build(cls, data, path):
    kwargs = {}
    names = {f.name: f for f in dataclasses.fields(cls)}
    for key, val in data.items():
        if key not in names:
            raise ValidationError([f"{path}.{key}: unknown field for {cls.__name__}"])
        kwargs[key] = val
    return cls(**kwargs)


def _nested(cls, data, path):
    if data is None:
        return None
    sub = dict(data)
    for f in dataclasses.fields(cls):
        if f.name in sub and isinstance(sub[f.name], dict):
            ftype = {"onchip_wire": WireSpec, "solder_bump": BumpSpec, "c4_bump": BumpSpec,
                     "through_package_via": ViaSpec, "microbump": BumpSpec,
                     "vrm_tsv": ViaSpec, "die_decap": DiscreteDecap}.get(f.name)
            if ftype is not None:
                sub[f.name] = _nested(ftype, sub[f.name], f"{path}.{f.name}")
    return _build(cls, sub, path)


def config_from_dict(d: dict) -> ScenarioConfig:
    """Inverse of config_to_dict.  Does not validate; call validate_config."""
    chip = _nested(ChipSpec, d.get("chip", {}), "chip")
    pkg = _nested(PackageSpec, d.get("package", {}), "package")
    board = _nested(BoardSpec, d.get("board", {}), "board")
    vrm = _nested(VrmSpec, d.get("vrm", {}), "vrm")

    pd = dict(d.get("placement", {"variant": "on_package"}))
    variant = pd.pop("variant", "on_package")
    if variant == "on_package":
        plc = _build(OnPackageVrm, pd, "placement")
    elif variant == "backside":
        plc = _build(BacksideVrm, pd, "placement")
    elif variant == "chip_on_vrm_3d":
        plc = _nested(ChipOnVrm3D, pd, "placement")
    else:
        raise ValidationError([f"placement.variant: unknown variant {variant!r}"])

    dd = dict(d.get("decaps", {}))
    for key in ("package_decaps", "board_decaps"):
        if key in dd:
            dd[key] = tuple(_build(DiscreteDecap, c, f"decaps.{key}") for c in dd[key])
    dec = _build(DecapPolicy, dd, "decaps")

    pm = None
    if "power_map" in d:
        pmd = d["power_map"]
        if "kind" in pmd:
            pm = builtin_power_map(pmd["kind"], chip)
        else:
            pm = PowerMap(
                pmd["densities_a_per_mm2"],
                pmd.get("total_power_w", chip.total_power_w),
                normalized=pmd.get("normalized", False),
            )
    return ScenarioConfig(chip=chip, package=pkg, board=board, vrm=vrm,
                          placement=plc, decaps=dec, power_map=pm)


def config_to_json(config: ScenarioConfig, indent=2) -> str:
    return json.dumps(config_to_dict(config), indent=indent, sort_keys=True) + "\n"


def config_from_json(text: str) -> ScenarioConfig:
    return config_from_dict(json.loads(text))


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_json(fh.read())


def save_config(config: ScenarioConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_to_json(config))


def config_hash(config: ScenarioConfig) -> str:
    """Stable content hash used for sweep provenance."""
    return hashlib.sha256(config_to_json(config).encode()).hexdigest()[:16]
