"""Scenario documents, canned network builders, and metrics serialization.

Scenarios are single JSON documents with a `version` field. Unknown keys
are rejected so that experiment assets stay diff-able and typo-proof.
Two kinds exist: `static` (a fixed set of uplinks for the optimizers) and
`cellular` (a mobile network driven by the frame simulator).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ScenarioError
from .radio import NetworkSnapshot, RadioParams, sinr_for_capacity

__all__ = [
    "LinkSpec",
    "StaticScenario",
    "BsSpec",
    "UeSpec",
    "SimSettings",
    "CellularScenario",
    "load_scenario",
    "loads_scenario",
    "save_scenario",
    "serialize_scenario",
    "two_link",
    "seven_link",
    "randomize_clients",
    "cellular_7x30",
    "cellular_probes",
    "emit_metrics",
    "write_summary",
    "METRICS_COLUMNS",
]

_RADIO_KEYS = {
    "alpha": "alpha",
    "p_circuit_mw": "p_circuit",
    "p_shared_mw": "p_shared",
    "decay": "decay",
    "noise_density_dbm_hz": "noise_density",
    "bandwidth_hz": "bandwidth",
    "carrier_freq_hz": "carrier_freq",
    "p_tx_max_mw": "p_tx_max",
}


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ScenarioError(f"{path}: {message}")


def _no_unknown(doc: dict, allowed, path: str):
    extra = set(doc) - set(allowed)
    _require(not extra, path, f"unknown field(s) {sorted(extra)}")


def _radio_from_doc(doc, path: str) -> RadioParams:
    _require(isinstance(doc, dict), path, "must be an object")
    _no_unknown(doc, _RADIO_KEYS, path)
    kwargs = {attr: doc[key] for key, attr in _RADIO_KEYS.items() if key in doc}
    try:
        return RadioParams(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _radio_to_doc(params: RadioParams) -> dict:
    return {key: getattr(params, attr) for key, attr in _RADIO_KEYS.items()}


@dataclass(frozen=True)
class LinkSpec:
    """One uplink of a static scenario (positions in meters)."""

    client: tuple[float, float]
    serving_bs: int
    n_max: int = 4
    sinr_target: float | None = None
    capacity_bps_hz: float | None = None

    @property
    def rho(self) -> float:
        if self.sinr_target is not None:
            return self.sinr_target
        return sinr_for_capacity(self.capacity_bps_hz)


@dataclass(frozen=True)
class StaticScenario:
    radio: RadioParams
    base_stations: tuple[tuple[float, float], ...]
    links: tuple[LinkSpec, ...]

    def to_snapshot(self) -> NetworkSnapshot:
        return NetworkSnapshot(
            client_pos=[list(l.client) for l in self.links],
            bs_pos=[list(b) for b in self.base_stations],
            serving=[l.serving_bs for l in self.links],
            rho=[l.rho for l in self.links],
            n_max=[l.n_max for l in self.links],
        )


@dataclass(frozen=True)
class BsSpec:
    pos: tuple[float, float]
    range_m: float = 1000.0


@dataclass(frozen=True)
class UeSpec:
    pos: tuple[float, float]
    n_max: int = 8
    traffic: str = "ftp"  # "ftp" | "cbr"
    pinned: bool = False


@dataclass(frozen=True)
class SimSettings:
    """Frame-level simulation knobs; defaults follow the evaluated system."""

    area_m: tuple[float, float] = (4000.0, 4000.0)
    frame_ms: float = 10.0
    t_th_ms: float | None = 20.0  # None disables the staleness fallback
    duration_s: float = 60.0
    speed_mph: tuple[float, float] = (0.0, 70.0)
    scheduler: str = "all_backlogged"  # or "round_robin"
    ftp_capacity_bps_hz: float = 3.6
    cbr_capacity_bps_hz: float = 1.0
    cbr_packet_bytes: int = 1024
    cbr_interval_ms: float = 100.0
    frequency_reuse: int = 1

    def __post_init__(self):
        if self.frame_ms <= 0:
            raise ValueError("frame_ms must be > 0")
        # The staleness threshold may legitimately sit below one frame
        # (0 forces omni every frame); only negatives are rejected.
        if self.t_th_ms is not None and self.t_th_ms < 0:
            raise ValueError("t_th_ms must be >= 0 or null")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be > 0")
        if self.scheduler not in ("all_backlogged", "round_robin"):
            raise ValueError("scheduler must be all_backlogged or round_robin")
        if self.frequency_reuse != 1:
            raise ValueError("only frequency reuse factor 1 is supported")


@dataclass(frozen=True)
class CellularScenario:
    radio: RadioParams
    sim: SimSettings
    seed: int
    base_stations: tuple[BsSpec, ...]
    ues: tuple[UeSpec, ...]


def loads_scenario(text: str):
    """Parse a scenario document from a JSON string."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from None
    _require(isinstance(doc, dict), "$", "must be an object")
    _require("version" in doc, "$", "missing version")
    _require(doc["version"] == 1, "version", f"unsupported version {doc['version']!r}")
    kind = doc.get("kind")
    if kind == "static":
        return _static_from_doc(doc)
    if kind == "cellular":
        return _cellular_from_doc(doc)
    raise ScenarioError(f"kind: must be 'static' or 'cellular', got {kind!r}")


def load_scenario(path):
    """Load and validate a scenario file; errors carry the field path."""
    with open(path, "r", encoding="utf-8") as f:
        return loads_scenario(f.read())


def _static_from_doc(doc) -> StaticScenario:
    _no_unknown(doc, {"version", "kind", "radio", "base_stations", "links"}, "$")
    radio = _radio_from_doc(doc.get("radio", {}), "radio")
    bs_doc = doc.get("base_stations")
    _require(isinstance(bs_doc, list) and bs_doc, "base_stations", "must be a non-empty list")
    stations = []
    for k, b in enumerate(bs_doc):
        _require(
            isinstance(b, list) and len(b) == 2,
            f"base_stations[{k}]",
            "must be an [x, y] pair",
        )
        stations.append((float(b[0]), float(b[1])))
    links_doc = doc.get("links")
    _require(isinstance(links_doc, list) and links_doc, "links", "must be a non-empty list")
    links = []
    for k, l in enumerate(links_doc):
        path = f"links[{k}]"
        _require(isinstance(l, dict), path, "must be an object")
        _no_unknown(
            l, {"client", "serving_bs", "n_max", "sinr_target", "capacity_bps_hz"}, path
        )
        _require(
            isinstance(l.get("client"), list) and len(l["client"]) == 2,
            f"{path}.client",
            "must be an [x, y] pair",
        )
        sb = l.get("serving_bs")
        _require(
            isinstance(sb, int) and 0 <= sb < len(stations),
            f"{path}.serving_bs",
            f"must index base_stations[0..{len(stations) - 1}]",
        )
        n_max = l.get("n_max", 4)
        _require(isinstance(n_max, int) and n_max >= 1, f"{path}.n_max", "must be an integer >= 1")
        has_rho = "sinr_target" in l
        has_cap = "capacity_bps_hz" in l
        _require(
            has_rho != has_cap, path, "needs exactly one of sinr_target / capacity_bps_hz"
        )
        if has_rho:
            _require(l["sinr_target"] > 0, f"{path}.sinr_target", "must be > 0")
        else:
            _require(l["capacity_bps_hz"] > 0, f"{path}.capacity_bps_hz", "must be > 0")
        links.append(
            LinkSpec(
                client=(float(l["client"][0]), float(l["client"][1])),
                serving_bs=sb,
                n_max=n_max,
                sinr_target=float(l["sinr_target"]) if has_rho else None,
                capacity_bps_hz=float(l["capacity_bps_hz"]) if has_cap else None,
            )
        )
    return StaticScenario(radio=radio, base_stations=tuple(stations), links=tuple(links))


def _cellular_from_doc(doc) -> CellularScenario:
    _no_unknown(
        doc, {"version", "kind", "radio", "sim", "seed", "base_stations", "ues"}, "$"
    )
    radio = _radio_from_doc(doc.get("radio", {}), "radio")
    sim_doc = doc.get("sim", {})
    _require(isinstance(sim_doc, dict), "sim", "must be an object")
    sim_keys = {
        "area_m",
        "frame_ms",
        "t_th_ms",
        "duration_s",
        "speed_mph",
        "scheduler",
        "ftp_capacity_bps_hz",
        "cbr_capacity_bps_hz",
        "cbr_packet_bytes",
        "cbr_interval_ms",
        "frequency_reuse",
    }
    _no_unknown(sim_doc, sim_keys, "sim")
    kwargs = dict(sim_doc)
    if "area_m" in kwargs:
        _require(
            isinstance(kwargs["area_m"], list) and len(kwargs["area_m"]) == 2,
            "sim.area_m",
            "must be a [width, height] pair",
        )
        kwargs["area_m"] = tuple(float(v) for v in kwargs["area_m"])
    if "speed_mph" in kwargs:
        _require(
            isinstance(kwargs["speed_mph"], list) and len(kwargs["speed_mph"]) == 2,
            "sim.speed_mph",
            "must be a [low, high] pair",
        )
        kwargs["speed_mph"] = tuple(float(v) for v in kwargs["speed_mph"])
    try:
        sim = SimSettings(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"sim: {exc}") from None
    seed = doc.get("seed", 0)
    _require(isinstance(seed, int), "seed", "must be an integer")
    bs_doc = doc.get("base_stations")
    _require(isinstance(bs_doc, list) and bs_doc, "base_stations", "must be a non-empty list")
    stations = []
    for k, b in enumerate(bs_doc):
        path = f"base_stations[{k}]"
        _require(isinstance(b, dict), path, "must be an object")
        _no_unknown(b, {"pos", "range_m"}, path)
        _require(
            isinstance(b.get("pos"), list) and len(b["pos"]) == 2,
            f"{path}.pos",
            "must be an [x, y] pair",
        )
        rng_m = float(b.get("range_m", 1000.0))
        _require(rng_m > 0, f"{path}.range_m", "must be > 0")
        stations.append(BsSpec(pos=(float(b["pos"][0]), float(b["pos"][1])), range_m=rng_m))
    ue_doc = doc.get("ues")
    _require(isinstance(ue_doc, list) and ue_doc, "ues", "must be a non-empty list")
    ues = []
    for k, u in enumerate(ue_doc):
        path = f"ues[{k}]"
        _require(isinstance(u, dict), path, "must be an object")
        _no_unknown(u, {"pos", "n_max", "traffic", "pinned"}, path)
        _require(
            isinstance(u.get("pos"), list) and len(u["pos"]) == 2,
            f"{path}.pos",
            "must be an [x, y] pair",
        )
        n_max = u.get("n_max", 8)
        _require(isinstance(n_max, int) and n_max >= 1, f"{path}.n_max", "must be an integer >= 1")
        traffic = u.get("traffic", "ftp")
        _require(traffic in ("ftp", "cbr"), f"{path}.traffic", "must be 'ftp' or 'cbr'")
        ues.append(
            UeSpec(
                pos=(float(u["pos"][0]), float(u["pos"][1])),
                n_max=n_max,
                traffic=traffic,
                pinned=bool(u.get("pinned", False)),
            )
        )
    return CellularScenario(
        radio=radio, sim=sim, seed=seed, base_stations=tuple(stations), ues=tuple(ues)
    )


def serialize_scenario(scenario) -> str:
    """Render a scenario back to its canonical JSON document."""
    if isinstance(scenario, StaticScenario):
        doc = {
            "version": 1,
            "kind": "static",
            "radio": _radio_to_doc(scenario.radio),
            "base_stations": [list(b) for b in scenario.base_stations],
            "links": [
                {
                    "client": list(l.client),
                    "serving_bs": l.serving_bs,
                    "n_max": l.n_max,
                    **(
                        {"sinr_target": l.sinr_target}
                        if l.sinr_target is not None
                        else {"capacity_bps_hz": l.capacity_bps_hz}
                    ),
                }
                for l in scenario.links
            ],
        }
    elif isinstance(scenario, CellularScenario):
        doc = {
            "version": 1,
            "kind": "cellular",
            "radio": _radio_to_doc(scenario.radio),
            "sim": {
                "area_m": list(scenario.sim.area_m),
                "frame_ms": scenario.sim.frame_ms,
                "t_th_ms": scenario.sim.t_th_ms,
                "duration_s": scenario.sim.duration_s,
                "speed_mph": list(scenario.sim.speed_mph),
                "scheduler": scenario.sim.scheduler,
                "ftp_capacity_bps_hz": scenario.sim.ftp_capacity_bps_hz,
                "cbr_capacity_bps_hz": scenario.sim.cbr_capacity_bps_hz,
                "cbr_packet_bytes": scenario.sim.cbr_packet_bytes,
                "cbr_interval_ms": scenario.sim.cbr_interval_ms,
                "frequency_reuse": scenario.sim.frequency_reuse,
            },
            "seed": scenario.seed,
            "base_stations": [
                {"pos": list(b.pos), "range_m": b.range_m} for b in scenario.base_stations
            ],
            "ues": [
                {
                    "pos": list(u.pos),
                    "n_max": u.n_max,
                    "traffic": u.traffic,
                    "pinned": u.pinned,
                }
                for u in scenario.ues
            ],
        }
    else:
        raise TypeError(f"not a scenario: {type(scenario).__name__}")
    return json.dumps(doc, indent=2) + "\n"


def save_scenario(scenario, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_scenario(scenario))


# ---------------------------------------------------------------------------
# canned builders


def two_link(
    d11: float,
    d22: float,
    d12: float,
    c1_over_c2: float = 1.0,
    c_total: float = 4.0,
    n_max: int = 4,
    radio: RadioParams | None = None,
) -> StaticScenario:
    """Two side-by-side cells, one uplink each.

    BS1 sits at the origin and BS2 on the x-axis at the separation implied
    by the requested client1 -> BS2 distance (d12 > d11 required); clients
    hang below their stations at their own-link distances, so the implied
    d21 is sqrt(sep^2 + d22^2). Capacities split c_total in the ratio
    c1_over_c2. As d12 grows the links decouple into independent
    single-link problems.
    """
    if min(d11, d22, d12) <= 0:
        raise ValueError("distances must be > 0")
    if d12 <= d11:
        raise ValueError("d12 must exceed d11 (BS separation would collapse)")
    if c1_over_c2 <= 0 or c_total <= 0:
        raise ValueError("capacity ratio and total must be > 0")
    sep = float(np.sqrt(d12**2 - d11**2))
    c1 = c_total * c1_over_c2 / (1.0 + c1_over_c2)
    c2 = c_total / (1.0 + c1_over_c2)
    return StaticScenario(
        radio=radio or RadioParams(),
        base_stations=((0.0, 0.0), (sep, 0.0)),
        links=(
            LinkSpec(client=(0.0, -d11), serving_bs=0, n_max=n_max, capacity_bps_hz=c1),
            LinkSpec(client=(sep, -d22), serving_bs=1, n_max=n_max, capacity_bps_hz=c2),
        ),
    )


def seven_link() -> StaticScenario:
    """Canned seven-cell, seven-uplink network (versioned asset)."""
    text = resources.files("beamadapt.assets").joinpath("seven_link.json").read_text()
    scenario = loads_scenario(text)
    assert isinstance(scenario, StaticScenario)
    return scenario


def randomize_clients(
    scenario: StaticScenario,
    rng: np.random.Generator,
    r_min: float = 50.0,
    r_max: float = 650.0,
) -> StaticScenario:
    """Redraw each client uniformly in an annulus around its own BS.

    Targets, antenna counts, and serving assignments are kept; only the
    client positions move (area-uniform radius sampling).
    """
    links = []
    for l in scenario.links:
        bs = np.asarray(scenario.base_stations[l.serving_bs])
        r = float(np.sqrt(rng.uniform(r_min**2, r_max**2)))
        th = float(rng.uniform(0.0, 2.0 * np.pi))
        pos = bs + r * np.array([np.cos(th), np.sin(th)])
        links.append(
            LinkSpec(
                client=(float(pos[0]), float(pos[1])),
                serving_bs=l.serving_bs,
                n_max=l.n_max,
                sinr_target=l.sinr_target,
                capacity_bps_hz=l.capacity_bps_hz,
            )
        )
    return StaticScenario(
        radio=scenario.radio, base_stations=scenario.base_stations, links=tuple(links)
    )


def _hex_stations(spacing: float, center=(2000.0, 2000.0), range_m: float = 1000.0):
    cx, cy = center
    out = [BsSpec(pos=(cx, cy), range_m=range_m)]
    for a in np.deg2rad([0.0, 60.0, 120.0, 180.0, 240.0, 300.0]):
        out.append(
            BsSpec(
                pos=(cx + spacing * float(np.cos(a)), cy + spacing * float(np.sin(a))),
                range_m=range_m,
            )
        )
    return tuple(out)


def cellular_7x30(
    seed: int,
    n_ues: int = 30,
    n_ftp: int = 8,
    n_max: int = 8,
    range_m: float = 700.0,
    sim: SimSettings | None = None,
    radio: RadioParams | None = None,
) -> CellularScenario:
    """Seven hex-laid Node-Bs (1.5 km spacing) and mobile UEs in 4x4 km.

    Initial UE positions are uniform over the area (seeded); the first
    n_ftp UEs carry FTP, the rest CBR. The default knobs are calibrated
    so the all-omni network stays power-control feasible (its carried
    load then matches the beamsteering policies) while the interference
    margin keeps beamsteering clearly cheaper: serving range 700 m, a
    400 mW cap, FTP at 2.4 b/s/Hz, CBR at 1.0 b/s/Hz in multi-frame
    bursts.
    """
    settings = sim or SimSettings(
        ftp_capacity_bps_hz=2.4,
        cbr_capacity_bps_hz=1.0,
        cbr_packet_bytes=87040,
        cbr_interval_ms=500.0,
    )
    rng = np.random.default_rng(seed)
    w, h = settings.area_m
    ues = []
    for k in range(n_ues):
        pos = (float(rng.uniform(0.0, w)), float(rng.uniform(0.0, h)))
        ues.append(
            UeSpec(pos=pos, n_max=n_max, traffic="ftp" if k < n_ftp else "cbr")
        )
    return CellularScenario(
        radio=radio or RadioParams(p_tx_max=400.0),
        sim=settings,
        seed=seed,
        base_stations=_hex_stations(1500.0, range_m=range_m),
        ues=tuple(ues),
    )


def cellular_probes(
    seed: int,
    probe_distances_m=(360.0, 500.0, 600.0, 760.0),
    n_background: int = 26,
    sim: SimSettings | None = None,
    radio: RadioParams | None = None,
) -> CellularScenario:
    """The seven-cell network with four stationary FTP probes at set distances.

    Probes are the first four UEs, pinned at the given distances from
    four distinct ring Node-Bs (radially outward, away from the hot
    network center); the remaining UEs are mobile background traffic.
    FTP targets sit at 3.6 b/s/Hz so the adaptive size sweeps its whole
    range across the probe distances.
    """
    settings = sim or SimSettings(
        ftp_capacity_bps_hz=3.6,
        cbr_capacity_bps_hz=1.0,
        cbr_packet_bytes=87040,
        cbr_interval_ms=500.0,
    )
    stations = _hex_stations(1500.0, range_m=870.0)
    rng = np.random.default_rng(seed)
    center = np.array([2000.0, 2000.0])
    ues = []
    for k, d in enumerate(probe_distances_m):
        bs = np.asarray(stations[1 + k].pos)
        out_dir = (bs - center) / np.linalg.norm(bs - center)
        pos = bs + d * out_dir
        ues.append(UeSpec(pos=(float(pos[0]), float(pos[1])), traffic="ftp", pinned=True))
    w, h = settings.area_m
    for k in range(n_background):
        pos = (float(rng.uniform(0.0, w)), float(rng.uniform(0.0, h)))
        ues.append(UeSpec(pos=pos, traffic="ftp" if k % 2 == 0 else "cbr"))
    return CellularScenario(
        radio=radio or RadioParams(p_tx_max=400.0),
        sim=settings,
        seed=seed,
        base_stations=stations,
        ues=tuple(ues),
    )


# ---------------------------------------------------------------------------
# metrics emission

METRICS_COLUMNS = (
    "frame",
    "ue_id",
    "p_tx_mw",
    "n",
    "sinr_db",
    "bits",
    "power_mw",
    "csi_age_ms",
    "bs_id",
)


def _record_row(rec):
    transmitting = rec.p_tx_mw is not None
    sinr_db = ""
    if transmitting and rec.sinr > 0:
        sinr_db = 10.0 * np.log10(rec.sinr)
    return (
        rec.frame,
        rec.ue_id,
        rec.p_tx_mw if transmitting else "",
        rec.n if transmitting else "",
        sinr_db,
        rec.bits,
        rec.power_mw,
        "" if rec.csi_age_ms == float("inf") else rec.csi_age_ms,
        rec.bs_id if rec.bs_id is not None else -1,
    )


def emit_metrics(records, fmt: str, path):
    """Write per-frame records as CSV rows or a JSON array.

    Column order is fixed (`METRICS_COLUMNS`); floats use their shortest
    round-trip representation, and fields that do not apply to idle
    frames are left empty (null in JSON).
    """
    import csv

    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(METRICS_COLUMNS)
            for rec in records:
                writer.writerow(_record_row(rec))
    elif fmt == "json":
        rows = []
        for rec in records:
            row = _record_row(rec)
            rows.append(
                {k: (None if v == "" else v) for k, v in zip(METRICS_COLUMNS, row)}
            )
        with open(path, "w", encoding="utf-8") as f:
            json.dump(rows, f, indent=2)
            f.write("\n")
    else:
        raise ValueError(f"unknown metrics format {fmt!r}")


def write_summary(summary: dict, path):
    """Write an aggregate summary as stable, sorted JSON."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
