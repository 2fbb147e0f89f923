"""Frame-based cellular uplink simulation.

Every frame: UEs move (random waypoint), hand off to the nearest in-range
Node-B, traffic sources gate which UEs transmit, each transmitter updates
its (power, size) from the SINR its Node-B measured on its previous
transmission (closed-loop control carrying the local beam adaptation),
CSI older than the staleness threshold forces an omni frame, and all
SINRs are computed jointly across cells (frequency reuse one, so every
cell interferes with every other; co-cell transmissions stay orthogonal).
Idle RF chains draw nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adapt import ClientState, beamadapt_step
from .errors import InfeasibleError
from .radio import (
    RadioParams,
    beam_gain,
    capacity,
    noise_power,
    path_gain,
    sinr_for_capacity,
    transmitter_power,
)
from .scenario import CellularScenario

__all__ = ["Policy", "MetricsRecord", "RunResult", "World", "build_world", "step_frame", "run"]

MPH_TO_MPS = 0.44704


@dataclass(frozen=True)
class Policy:
    """Beam policy of a run: omni, fixed-size, or adaptive-size uplinks."""

    kind: str  # "omni" | "fixed" | "adapt"
    n: int = 1

    def __post_init__(self):
        if self.kind not in ("omni", "fixed", "adapt"):
            raise ValueError("policy kind must be omni, fixed, or adapt")
        if self.n < 1:
            raise ValueError("policy n must be >= 1")

    @staticmethod
    def parse(name: str) -> "Policy":
        """Parse policy names: omni, bs<N> (fixed), ba<N> (adaptive)."""
        low = name.lower()
        if low == "omni":
            return Policy("omni")
        for prefix, kind in (("bs", "fixed"), ("ba", "adapt")):
            if low.startswith(prefix) and low[len(prefix):].isdigit():
                return Policy(kind, int(low[len(prefix):]))
        raise ValueError(f"unknown policy {name!r}")

    def __str__(self):
        if self.kind == "omni":
            return "omni"
        return ("bs" if self.kind == "fixed" else "ba") + str(self.n)


@dataclass(frozen=True)
class MetricsRecord:
    """One UE's telemetry for one frame (fields None when not transmitting)."""

    frame: int
    ue_id: int
    p_tx_mw: float | None
    n: int | None
    sinr: float
    bits: float
    power_mw: float
    csi_age_ms: float
    bs_id: int | None


@dataclass
class _Ue:
    id: int
    pos: np.ndarray
    n_max: int
    traffic: str
    rho: float
    pinned: bool
    # mobility
    target: np.ndarray | None = None
    speed: float = 0.0
    # link state
    serving: int | None = None
    p_tx: float = 1.0
    n: int = 1
    last_sinr: float | None = None
    csi_age_ms: float = math.inf
    # traffic state
    pending_bits: float = 0.0
    next_packet_ms: float = 0.0
    # accumulators
    energy_mj: float = 0.0


@dataclass
class World:
    params: RadioParams
    settings: "object"
    policy: Policy
    bs_pos: np.ndarray  # (K, 2)
    bs_range: np.ndarray  # (K,)
    ues: list
    rng: np.random.Generator
    frame: int = 0
    rr_counters: np.ndarray = field(default=None)  # per-BS round-robin cursor
    last_forced_omni: list = field(default_factory=list)

    def __post_init__(self):
        if self.rr_counters is None:
            self.rr_counters = np.zeros(len(self.bs_pos), dtype=int)


def build_world(scenario: CellularScenario, policy: Policy) -> World:
    """Materialize the mutable simulation state for one run.

    All randomness flows from one generator seeded by the scenario, and
    the draw order is policy-independent, so runs under different
    policies share identical mobility and traffic timelines.
    """
    s = scenario.sim
    rng = np.random.default_rng(scenario.seed)
    rho_by_class = {
        "ftp": sinr_for_capacity(s.ftp_capacity_bps_hz),
        "cbr": sinr_for_capacity(s.cbr_capacity_bps_hz),
    }
    ues = []
    for k, spec in enumerate(scenario.ues):
        ues.append(
            _Ue(
                id=k,
                pos=np.array(spec.pos, dtype=float),
                n_max=spec.n_max,
                traffic=spec.traffic,
                rho=float(rho_by_class[spec.traffic]),
                pinned=spec.pinned,
            )
        )
    world = World(
        params=scenario.radio,
        settings=s,
        policy=policy,
        bs_pos=np.array([b.pos for b in scenario.base_stations], dtype=float),
        bs_range=np.array([b.range_m for b in scenario.base_stations], dtype=float),
        ues=ues,
        rng=rng,
    )
    for ue in ues:
        _new_waypoint(world, ue)
    return world


def _new_waypoint(world: World, ue: _Ue):
    # draws happen for pinned UEs too, keeping the stream layout uniform
    w, h = world.settings.area_m
    target = world.rng.uniform((0.0, 0.0), (w, h))
    lo, hi = world.settings.speed_mph
    speed = world.rng.uniform(lo, hi) * MPH_TO_MPS
    if not ue.pinned:
        ue.target = target
        ue.speed = speed


def _move(world: World, ue: _Ue, dt_s: float):
    if ue.pinned or ue.target is None:
        return
    delta = ue.target - ue.pos
    dist = float(np.hypot(delta[0], delta[1]))
    step = ue.speed * dt_s
    if step >= dist or dist == 0.0:
        ue.pos = ue.target.copy()
        _new_waypoint(world, ue)
    else:
        ue.pos = ue.pos + delta * (step / dist)


def _handoff(world: World, ue: _Ue):
    d = np.hypot(world.bs_pos[:, 0] - ue.pos[0], world.bs_pos[:, 1] - ue.pos[1])
    nearest = int(np.argmin(d))
    serving = nearest if d[nearest] <= world.bs_range[nearest] else None
    if serving != ue.serving:
        # new cell (or coverage loss): the old CSI and SINR report are void
        ue.serving = serving
        ue.last_sinr = None
        ue.csi_age_ms = math.inf
        ue.n = 1


def _candidate_bounds(world: World, ue: _Ue, stale: bool) -> tuple[int, int]:
    policy = world.policy
    if policy.kind == "omni":
        return 1, 1
    if stale:
        return 1, 1
    cap = min(policy.n, ue.n_max)
    if policy.kind == "fixed":
        return cap, cap
    return 1, cap  # adaptive: the simulator re-bases from one every frame


def _open_loop_power(world: World, ue: _Ue) -> float:
    d = float(np.hypot(*(world.bs_pos[ue.serving] - ue.pos)))
    p = ue.rho * noise_power(world.params) / path_gain(d, world.params)
    return float(min(p, world.params.p_tx_max))


def step_frame(world: World) -> list[MetricsRecord]:
    """Advance one frame; returns the per-UE metrics records."""
    s = world.settings
    params = world.params
    frame_s = s.frame_ms / 1000.0
    t_ms = world.frame * s.frame_ms

    for ue in world.ues:
        _move(world, ue, frame_s)
    for ue in world.ues:
        _handoff(world, ue)
        if ue.csi_age_ms != math.inf:
            ue.csi_age_ms += s.frame_ms

    # traffic arrivals and gating
    backlogged: list[_Ue] = []
    for ue in world.ues:
        if ue.traffic == "cbr":
            while ue.next_packet_ms <= t_ms:
                ue.pending_bits += 8.0 * s.cbr_packet_bytes
                ue.next_packet_ms += s.cbr_interval_ms
        if ue.serving is None:
            continue
        if ue.traffic == "ftp" or ue.pending_bits > 0:
            backlogged.append(ue)

    if s.scheduler == "round_robin":
        transmitters: list[_Ue] = []
        by_bs: dict[int, list[_Ue]] = {}
        for ue in backlogged:
            by_bs.setdefault(ue.serving, []).append(ue)
        for bs_id, group in sorted(by_bs.items()):
            group.sort(key=lambda u: u.id)
            pick = group[world.rr_counters[bs_id] % len(group)]
            world.rr_counters[bs_id] += 1
            transmitters.append(pick)
    else:
        transmitters = backlogged

    forced_omni = []
    for ue in transmitters:
        t_th = s.t_th_ms
        stale = t_th is not None and ue.csi_age_ms > t_th
        if ue.last_sinr is None:
            # first uplink toward this Node-B: no measurement, no CSI
            ue.p_tx = _open_loop_power(world, ue)
            ue.n = 1
        else:
            lo, hi = _candidate_bounds(world, ue, stale)
            # the state carries the configuration that produced the last
            # measurement; candidate bounds are applied separately
            state = ClientState(p_tx=ue.p_tx, n=ue.n, n_max=ue.n_max, rho=ue.rho)
            try:
                new = beamadapt_step(state, ue.last_sinr, params, min_n=lo, max_n=hi)
                ue.p_tx, ue.n = new.p_tx, new.n
            except InfeasibleError:
                ue.p_tx, ue.n = params.p_tx_max, hi
        if stale and world.policy.kind != "omni" and ue.last_sinr is not None:
            forced_omni.append(ue.id)

    # joint SINR across all cells; co-cell transmissions are orthogonal
    sinr_by_id: dict[int, float] = {}
    if transmitters:
        pos = np.array([ue.pos for ue in transmitters])
        serving = np.array([ue.serving for ue in transmitters], dtype=int)
        p = np.array([ue.p_tx for ue in transmitters])
        sizes = np.array([ue.n for ue in transmitters], dtype=int)
        rx = world.bs_pos[serving]
        delta = rx[:, None, :] - pos[None, :, :]
        dist = np.hypot(delta[..., 0], delta[..., 1])
        ang = np.arctan2(delta[..., 1], delta[..., 0])
        look = np.array([ang[i, i] for i in range(len(transmitters))])
        offs = ang - look[None, :]
        gains = beam_gain(sizes[None, :], offs) * path_gain(dist, params)
        weighted = gains * p[None, :]
        other_cell = serving[:, None] != serving[None, :]
        signal = np.diag(weighted)
        interference = np.where(other_cell, weighted, 0.0).sum(axis=1)
        sinr = signal / (noise_power(params) + interference)
        for ue, s_i in zip(transmitters, sinr):
            sinr_by_id[ue.id] = float(s_i)

    records = []
    bw_frame = params.bandwidth * frame_s
    tx_ids = set(sinr_by_id)
    for ue in world.ues:
        if ue.id in tx_ids:
            s_i = sinr_by_id[ue.id]
            # the bearer is provisioned for the UE's target rate; SINR
            # beyond rho buys headroom, not extra bits
            link_bits = bw_frame * capacity(min(s_i, ue.rho))
            if ue.traffic == "cbr":
                bits = min(ue.pending_bits, link_bits)
                ue.pending_bits -= bits
            else:
                bits = link_bits
            draw = float(transmitter_power(ue.p_tx, ue.n, params))
            ue.energy_mj += draw * frame_s
            age = ue.csi_age_ms
            ue.last_sinr = s_i
            ue.csi_age_ms = 0.0  # this frame carried training symbols
            records.append(
                MetricsRecord(
                    frame=world.frame,
                    ue_id=ue.id,
                    p_tx_mw=ue.p_tx,
                    n=ue.n,
                    sinr=s_i,
                    bits=bits,
                    power_mw=draw,
                    csi_age_ms=age,
                    bs_id=ue.serving,
                )
            )
        else:
            records.append(
                MetricsRecord(
                    frame=world.frame,
                    ue_id=ue.id,
                    p_tx_mw=None,
                    n=None,
                    sinr=0.0,
                    bits=0.0,
                    power_mw=0.0,
                    csi_age_ms=ue.csi_age_ms,
                    bs_id=ue.serving,
                )
            )
    world.frame += 1
    world.last_forced_omni = forced_omni
    return records


@dataclass
class RunResult:
    """Aggregates of one (scenario, policy, seed) run."""

    policy: str
    frames: int
    n_ues: int
    total_bits: float
    transmit_frames: int
    forced_omni_frames: int
    mean_power_mw: float
    mean_power_by_class: dict
    size_histograms: np.ndarray  # (n_ues, n_top) transmit-frame counts
    mean_distance_m: np.ndarray  # (n_ues,) mean serving distance over tx frames
    energy_mj: np.ndarray  # (n_ues,)
    records: list | None = None

    def summary(self) -> dict:
        by_class = {k: float(v) for k, v in self.mean_power_by_class.items()}
        return {
            "policy": self.policy,
            "frames": self.frames,
            "ues": self.n_ues,
            "total_bits": float(self.total_bits),
            "transmit_frames": self.transmit_frames,
            "forced_omni_frames": self.forced_omni_frames,
            "mean_transmit_power_mw": float(self.mean_power_mw),
            "mean_transmit_power_mw_by_class": by_class,
            "size_histograms": self.size_histograms.tolist(),
            "mean_distance_m": [
                float(v) if np.isfinite(v) else None for v in self.mean_distance_m
            ],
            "energy_mj": [float(v) for v in self.energy_mj],
        }


def run(
    scenario: CellularScenario,
    policy: Policy | str,
    duration_s: float | None = None,
    store_records: bool = False,
) -> RunResult:
    """Simulate the scenario under one policy and aggregate the metrics.

    Mean transmit power averages the transmitter draw over transmitting
    (UE, frame) pairs only; idle frames contribute nothing.
    """
    if isinstance(policy, str):
        policy = Policy.parse(policy)
    world = build_world(scenario, policy)
    s = scenario.sim
    frames = int(round((duration_s or s.duration_s) * 1000.0 / s.frame_ms))
    n_ues = len(world.ues)
    n_top = max(ue.n_max for ue in world.ues)
    class_power = {"ftp": 0.0, "cbr": 0.0}
    class_frames = {"ftp": 0, "cbr": 0}
    hist = np.zeros((n_ues, n_top), dtype=np.int64)
    dist_sum = np.zeros(n_ues)
    dist_cnt = np.zeros(n_ues, dtype=np.int64)
    total_bits = 0.0
    power_sum = 0.0
    tx_frames = 0
    forced = 0
    all_records = [] if store_records else None
    traffic = {ue.id: ue.traffic for ue in world.ues}

    for _ in range(frames):
        records = step_frame(world)
        forced += len(world.last_forced_omni)
        for rec in records:
            total_bits += rec.bits
            if rec.p_tx_mw is None:
                continue
            tx_frames += 1
            power_sum += rec.power_mw
            cls = traffic[rec.ue_id]
            class_power[cls] += rec.power_mw
            class_frames[cls] += 1
            hist[rec.ue_id, rec.n - 1] += 1
            ue = world.ues[rec.ue_id]
            d = float(np.hypot(*(world.bs_pos[rec.bs_id] - ue.pos)))
            dist_sum[rec.ue_id] += d
            dist_cnt[rec.ue_id] += 1
        if all_records is not None:
            all_records.extend(records)

    with np.errstate(invalid="ignore"):
        mean_dist = np.where(dist_cnt > 0, dist_sum / np.maximum(dist_cnt, 1), np.nan)
    return RunResult(
        policy=str(policy),
        frames=frames,
        n_ues=n_ues,
        total_bits=total_bits,
        transmit_frames=tx_frames,
        forced_omni_frames=forced,
        mean_power_mw=power_sum / tx_frames if tx_frames else 0.0,
        mean_power_by_class={
            k: (class_power[k] / class_frames[k] if class_frames[k] else 0.0)
            for k in class_power
        },
        size_histograms=hist,
        mean_distance_m=mean_dist,
        energy_mj=np.array([ue.energy_mj for ue in world.ues]),
        records=all_records,
    )
