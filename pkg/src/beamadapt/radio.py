"""Physical-layer model: beam gain, propagation, noise, SINR, capacity, power.

All power quantities are in mW, distances in meters, angles in radians.
The transmit array is a uniform linear array with half-wavelength spacing,
electronically steered at its serving base station; with that spacing the
element phase progression is pi * k * sin(offset), so the carrier frequency
never enters the gain expression and is carried only as scenario metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "RadioParams",
    "BeamPattern",
    "NetworkSnapshot",
    "Solution",
    "beam_gain",
    "path_gain",
    "noise_power",
    "client_power",
    "transmitter_power",
    "capacity",
    "sinr_for_capacity",
    "gain_matrix",
    "sinr_from_gains",
    "sinr_vector",
]


@dataclass(frozen=True)
class RadioParams:
    """Physical constants of the radio and propagation model.

    alpha            power-amplifier overhead factor (dimensionless)
    p_circuit        per-RF-chain circuit power, mW
    p_shared         shared circuitry (synthesizer etc.), mW
    decay            path-loss exponent
    noise_density    receiver thermal noise density, dBm/Hz
    bandwidth        channel bandwidth, Hz
    carrier_freq     carrier frequency, Hz (metadata; gain model is
                     wavelength-normalized)
    p_tx_max         per-client transmit power cap, mW
    """

    alpha: float = 1.875
    p_circuit: float = 48.2
    p_shared: float = 50.0
    decay: float = 4.0
    noise_density: float = -170.0
    bandwidth: float = 5e6
    carrier_freq: float = 2e9
    p_tx_max: float = 250.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.p_circuit <= 0:
            raise ValueError("p_circuit must be > 0")
        if self.p_shared < 0:
            raise ValueError("p_shared must be >= 0")
        if self.decay < 2:
            raise ValueError("decay must be >= 2")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.p_tx_max <= 0:
            raise ValueError("p_tx_max must be > 0")

    def noise_power(self) -> float:
        """Thermal noise over the full bandwidth, mW."""
        return noise_power(self)


@dataclass(frozen=True)
class BeamPattern:
    """A client's transmit configuration.

    p_tx      total transmit power, mW (> 0)
    n         beamsteering size = number of active chains (integer >= 1)
    look_dir  azimuth of the intended receiver, radians
    """

    p_tx: float
    n: int
    look_dir: float = 0.0

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise ValueError("beamsteering size n must be a positive integer")
        if self.p_tx <= 0:
            raise ValueError("p_tx must be > 0")


def beam_gain(n, offset):
    """Array gain of an n-element half-wavelength ULA at an angular offset.

    G(n, offset) = (1/n) * |sum_{k=0}^{n-1} exp(i*pi*k*sin(offset))|^2,
    evaluated through the closed form sin(n*x)^2 / (n*sin(x)^2) with
    x = pi*sin(offset)/2. G(n, 0) = n exactly; the pattern is symmetric
    about the look direction and mirrored front-to-back.

    Accepts scalars or broadcastable arrays; n must be integer >= 1.
    """
    n_arr = np.asarray(n)
    if np.any(n_arr < 1):
        raise ValueError("beamsteering size n must be >= 1")
    offset = np.asarray(offset, dtype=float)
    x = 0.5 * np.pi * np.sin(offset)
    sin_x = np.sin(x)
    # sin(x) = 0 only at offset = 0 (mod pi) within |sin(offset)| <= 1;
    # there the coherent sum gives exactly n.
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.sin(n_arr * x) / sin_x
        gain = ratio * ratio / n_arr
    gain = np.where(np.abs(sin_x) < 1e-12, n_arr, gain)
    if gain.ndim == 0:
        return float(gain)
    return gain


def path_gain(distance, params: RadioParams):
    """Large-scale channel gain (d_ref / d)^decay with d_ref = 1 m."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be > 0")
    g = d ** (-params.decay)
    if g.ndim == 0:
        return float(g)
    return g


def noise_power(params: RadioParams) -> float:
    """Receiver thermal noise over the channel bandwidth, mW."""
    noise_dbm = params.noise_density + 10.0 * math.log10(params.bandwidth)
    return 10.0 ** (noise_dbm / 10.0)


def transmitter_power(p_tx, n, params: RadioParams):
    """Total transmitter draw (1+alpha)*p_tx + n*p_circuit + p_shared, mW.

    Vectorized over p_tx and n.
    """
    return (1.0 + params.alpha) * np.asarray(p_tx, dtype=float) + (
        np.asarray(n) * params.p_circuit + params.p_shared
    )


def client_power(pattern: BeamPattern, params: RadioParams) -> float:
    """Total power drawn by a client transmitting with `pattern`, mW."""
    return float(transmitter_power(pattern.p_tx, pattern.n, params))


def capacity(sinr):
    """Shannon spectral efficiency log2(1 + sinr), b/s/Hz."""
    s = np.asarray(sinr, dtype=float)
    if np.any(s < 0):
        raise ValueError("sinr must be >= 0")
    c = np.log2(1.0 + s)
    if c.ndim == 0:
        return float(c)
    return c


def sinr_for_capacity(cap):
    """Inverse of `capacity`: the SINR needed for `cap` b/s/Hz."""
    c = np.asarray(cap, dtype=float)
    s = np.exp2(c) - 1.0
    if s.ndim == 0:
        return float(s)
    return s


@dataclass(frozen=True, eq=False)
class NetworkSnapshot:
    """Geometry and per-link state of an uplink network at one instant.

    Link i is client i transmitting to base station `serving[i]`. Arrays
    are frozen by convention (never mutated in place).

    client_pos  (M, 2) client coordinates, m
    bs_pos      (K, 2) base-station coordinates, m
    serving     (M,) index into bs_pos per client
    rho         (M,) SINR targets (dimensionless)
    n_max       (M,) antenna counts per client
    patterns    optional per-link BeamPattern tuple (required by sinr_vector)
    """

    client_pos: np.ndarray
    bs_pos: np.ndarray
    serving: np.ndarray
    rho: np.ndarray
    n_max: np.ndarray
    patterns: tuple[BeamPattern, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "client_pos", np.asarray(self.client_pos, dtype=float))
        object.__setattr__(self, "bs_pos", np.asarray(self.bs_pos, dtype=float))
        object.__setattr__(self, "serving", np.asarray(self.serving, dtype=int))
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        object.__setattr__(self, "n_max", np.asarray(self.n_max, dtype=int))
        m = self.client_pos.shape[0]
        if self.client_pos.ndim != 2 or self.client_pos.shape[1] != 2:
            raise ValueError("client_pos must have shape (M, 2)")
        if self.bs_pos.ndim != 2 or self.bs_pos.shape[1] != 2:
            raise ValueError("bs_pos must have shape (K, 2)")
        for name in ("serving", "rho", "n_max"):
            if getattr(self, name).shape != (m,):
                raise ValueError(f"{name} must have shape (M,)")
        if np.any(self.serving < 0) or np.any(self.serving >= self.bs_pos.shape[0]):
            raise ValueError("serving indices out of range")
        if np.any(self.rho <= 0):
            raise ValueError("SINR targets rho must be > 0")
        if np.any(self.n_max < 1):
            raise ValueError("n_max must be >= 1")
        if self.patterns is not None and len(self.patterns) != m:
            raise ValueError("patterns length must equal number of links")
        # reject co-located client/BS pairs up front
        d = np.hypot(
            self.client_pos[:, None, 0] - self.bs_pos[None, :, 0],
            self.client_pos[:, None, 1] - self.bs_pos[None, :, 1],
        )
        if np.any(d <= 0):
            raise ValueError("client and base station positions must not coincide")

    @property
    def n_links(self) -> int:
        return self.client_pos.shape[0]

    def rx_pos(self) -> np.ndarray:
        """Receiver (serving BS) position per link, (M, 2)."""
        return self.bs_pos[self.serving]

    def link_distances(self) -> np.ndarray:
        """Own-link distances d_ii, (M,)."""
        delta = self.rx_pos() - self.client_pos
        return np.hypot(delta[:, 0], delta[:, 1])

    def look_dirs(self) -> np.ndarray:
        """Azimuth from each client toward its serving BS, (M,)."""
        delta = self.rx_pos() - self.client_pos
        return np.arctan2(delta[:, 1], delta[:, 0])

    def with_patterns(self, patterns) -> "NetworkSnapshot":
        return replace(self, patterns=tuple(patterns))

    def subset(self, indices) -> "NetworkSnapshot":
        """Sub-network restricted to the given link indices."""
        idx = np.asarray(indices, dtype=int)
        pats = None
        if self.patterns is not None:
            pats = tuple(self.patterns[i] for i in idx)
        return NetworkSnapshot(
            client_pos=self.client_pos[idx],
            bs_pos=self.bs_pos,
            serving=self.serving[idx],
            rho=self.rho[idx],
            n_max=self.n_max[idx],
            patterns=pats,
        )


@dataclass(frozen=True, eq=False)
class Solution:
    """Per-link operating point produced by a solver.

    p_tx           (M,) transmit powers, mW
    sizes          (M,) beamsteering sizes
    sinrs          (M,) resulting SINRs
    network_power  total transmitter draw over all links, mW
    """

    p_tx: np.ndarray
    sizes: np.ndarray
    sinrs: np.ndarray
    network_power: float

    def __post_init__(self):
        object.__setattr__(self, "p_tx", np.asarray(self.p_tx, dtype=float))
        object.__setattr__(self, "sizes", np.asarray(self.sizes, dtype=int))
        object.__setattr__(self, "sinrs", np.asarray(self.sinrs, dtype=float))


def _geometry(snapshot: NetworkSnapshot, look_dirs: np.ndarray | None = None):
    """Cross distances and angular offsets for every (link, client) pair.

    Returns (dist, offset) where entry [i, j] refers to client j as seen
    from link i's receiving BS: dist is client_j -> rx_i in meters and
    offset is the angle between client j's direction to rx_i and client
    j's own look direction (toward its serving BS unless overridden).
    """
    rx = snapshot.rx_pos()  # (M, 2)
    delta = rx[:, None, :] - snapshot.client_pos[None, :, :]  # (M, M, 2)
    dist = np.hypot(delta[..., 0], delta[..., 1])
    ang = np.arctan2(delta[..., 1], delta[..., 0])  # from client j toward rx_i
    look = snapshot.look_dirs() if look_dirs is None else np.asarray(look_dirs, dtype=float)
    offset = ang - look[None, :]
    offset = (offset + np.pi) % (2.0 * np.pi) - np.pi
    return dist, offset


def gain_matrix(
    snapshot: NetworkSnapshot,
    sizes,
    params: RadioParams,
    look_dirs: np.ndarray | None = None,
) -> np.ndarray:
    """Effective channel gains A[i, j] from client j to link i's receiver.

    A[i, j] = beam_gain(n_j, offset_ji) * path_gain(d_ji) where offset_ji
    is measured from client j's look direction (toward its own serving BS
    unless `look_dirs` overrides it). Diagonal entries are the own-link
    gains n_i * path_gain(d_ii).
    """
    dist, offset = _geometry(snapshot, look_dirs)
    n_row = np.asarray(sizes, dtype=int)[None, :]
    return beam_gain(n_row, offset) * path_gain(dist, params)


def sinr_from_gains(gains: np.ndarray, p_tx, noise: float) -> np.ndarray:
    """Per-link SINR given the effective gain matrix and a power vector."""
    p = np.asarray(p_tx, dtype=float)
    signal = np.diag(gains) * p
    interference = gains @ p - signal
    return signal / (noise + interference)


def sinr_vector(snapshot: NetworkSnapshot, params: RadioParams) -> np.ndarray:
    """Per-link SINRs for the snapshot's beam patterns.

    Signal of link i uses client i's gain at zero offset; interference
    from client j uses j's gain at its angular offset toward link i's
    receiving BS, including the ULA's mirror lobe.
    """
    if snapshot.patterns is None:
        raise ValueError("snapshot has no beam patterns")
    sizes = np.array([pat.n for pat in snapshot.patterns], dtype=int)
    look = np.array([pat.look_dir for pat in snapshot.patterns], dtype=float)
    p = np.array([pat.p_tx for pat in snapshot.patterns], dtype=float)
    gains = gain_matrix(snapshot, sizes, params, look_dirs=look)
    return sinr_from_gains(gains, p, noise_power(params))
