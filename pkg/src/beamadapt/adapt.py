"""Distributed selection of transmit power and beamsteering size.

Each client only ever sees its own measured SINR. Per update it rescales
its radiated-power product to close the gap to its target and then picks
the cheapest admissible beamsteering size for that product. Iterating
synchronous rounds of this update over all clients drives the network to
its targets; the classic fixed-size power-control iteration and the
single-link closed form are provided as baselines.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InfeasibleError, NonConvergedError
from .radio import (
    NetworkSnapshot,
    RadioParams,
    Solution,
    gain_matrix,
    noise_power,
    path_gain,
    sinr_for_capacity,
    sinr_from_gains,
    transmitter_power,
)

__all__ = [
    "ClientState",
    "IterationTrace",
    "AdaptResult",
    "beamadapt_step",
    "beamadapt_solve",
    "single_link_opt",
    "foschini_miljanic_solve",
]

DEFAULT_EPSILON_REL = 1e-3
DEFAULT_MAX_ITERS = 100


@dataclass(frozen=True)
class ClientState:
    """One client's view of its own link.

    p_tx       current transmit power, mW
    n          current beamsteering size
    n_max      antenna count
    rho        SINR target
    last_sinr  most recent measured SINR (None before the first report)
    """

    p_tx: float
    n: int
    n_max: int
    rho: float
    last_sinr: float | None = None

    def __post_init__(self):
        if not (1 <= self.n <= self.n_max):
            raise ValueError("n must lie in [1, n_max]")
        if self.p_tx <= 0:
            raise ValueError("p_tx must be > 0")
        if self.rho <= 0:
            raise ValueError("rho must be > 0")


@dataclass(frozen=True, eq=False)
class IterationTrace:
    """Per-round history of a distributed solve.

    Row k holds the state after k update rounds (row 0 is the initial
    configuration); `sinr` is the SINR measured with that row's patterns
    and `capped` flags clients that had to fall back to the power cap.
    """

    p_tx: np.ndarray  # (rounds+1, M)
    sizes: np.ndarray  # (rounds+1, M)
    sinr: np.ndarray  # (rounds+1, M)
    power: np.ndarray  # (rounds+1, M)
    capped: np.ndarray  # (rounds+1, M) bool

    @property
    def rounds(self) -> int:
        return self.p_tx.shape[0] - 1


@dataclass(frozen=True, eq=False)
class AdaptResult:
    solution: Solution
    trace: IterationTrace
    iterations: int


def beamadapt_step(
    state: ClientState,
    measured_sinr: float,
    params: RadioParams,
    min_n: int | None = None,
    max_n: int | None = None,
) -> ClientState:
    """One local update of (p_tx, n) from the client's measured SINR.

    Candidate sizes n' span [min_n, max_n] (defaults: [state.n, state.n_max],
    the monotone rule used inside a solve). Every candidate keeps the
    radiated-power product on target, p'*n' = p*n*rho/S, and the cheapest
    candidate under the transmitter power model wins; ties go to the
    smaller size. Candidates needing more than p_tx_max are disqualified;
    if none survive an InfeasibleError is raised rather than clamping.
    """
    if measured_sinr <= 0:
        raise ValueError("measured_sinr must be > 0")
    lo = state.n if min_n is None else int(min_n)
    hi = state.n_max if max_n is None else min(int(max_n), state.n_max)
    if not (1 <= lo <= hi):
        raise ValueError(f"invalid candidate size range [{lo}, {hi}]")
    product = state.p_tx * state.n * state.rho / measured_sinr
    sizes = np.arange(lo, hi + 1)
    p = product / sizes
    admissible = p <= params.p_tx_max
    if not np.any(admissible):
        raise InfeasibleError(
            f"target needs {p[-1]:.4g} mW at n={hi}, above cap {params.p_tx_max:g} mW"
        )
    cost = np.where(admissible, transmitter_power(p, sizes, params), np.inf)
    k = int(np.argmin(cost))  # first minimum -> smaller n on ties
    return replace(state, p_tx=float(p[k]), n=int(sizes[k]), last_sinr=measured_sinr)


def _initial_power(snapshot: NetworkSnapshot, params: RadioParams) -> np.ndarray:
    """Default start: power meeting rho with an omni pattern, no interference."""
    own_gain = path_gain(snapshot.link_distances(), params)
    return np.minimum(snapshot.rho * noise_power(params) / own_gain, params.p_tx_max)


def beamadapt_solve(
    snapshot: NetworkSnapshot,
    params: RadioParams,
    epsilon_rel: float = DEFAULT_EPSILON_REL,
    max_iters: int = DEFAULT_MAX_ITERS,
    p_init: np.ndarray | None = None,
) -> AdaptResult:
    """Run synchronous rounds of the local update until all targets hold.

    Every round, each client applies `beamadapt_step` against the SINR
    produced by the previous round's full pattern vector; sizes start at
    one and never decrease. Convergence requires |S_i - rho_i| <=
    epsilon_rel * rho_i for every link. At least one update round always
    runs, so an initial power vector that already meets the targets still
    gets optimized. Raises NonConvergedError (trace attached) after
    max_iters rounds.
    """
    m = snapshot.n_links
    rho = snapshot.rho
    noise = noise_power(params)
    p = np.array(
        _initial_power(snapshot, params) if p_init is None else p_init, dtype=float
    )
    if p.shape != (m,) or np.any(p <= 0):
        raise ValueError("p_init must be a positive vector of length M")
    sizes = np.ones(m, dtype=int)
    states = [
        ClientState(p_tx=float(p[i]), n=1, n_max=int(snapshot.n_max[i]), rho=float(rho[i]))
        for i in range(m)
    ]

    trace_p, trace_n, trace_s, trace_w, trace_c = [], [], [], [], []

    def measure():
        gains = gain_matrix(snapshot, sizes, params)
        return sinr_from_gains(gains, p, noise)

    sinr = measure()
    trace_p.append(p.copy())
    trace_n.append(sizes.copy())
    trace_s.append(sinr.copy())
    trace_w.append(np.asarray(transmitter_power(p, sizes, params)))
    trace_c.append(np.zeros(m, dtype=bool))

    converged = False
    iterations = 0
    for _ in range(max_iters):
        capped = np.zeros(m, dtype=bool)
        for i in range(m):
            try:
                states[i] = beamadapt_step(states[i], float(sinr[i]), params)
            except InfeasibleError:
                # cap reached: transmit flat out with all chains; the run
                # will surface as non-convergence if this persists
                states[i] = replace(
                    states[i],
                    p_tx=params.p_tx_max,
                    n=states[i].n_max,
                    last_sinr=float(sinr[i]),
                )
                capped[i] = True
        p = np.array([s.p_tx for s in states])
        sizes = np.array([s.n for s in states], dtype=int)
        iterations += 1
        sinr = measure()
        trace_p.append(p.copy())
        trace_n.append(sizes.copy())
        trace_s.append(sinr.copy())
        trace_w.append(np.asarray(transmitter_power(p, sizes, params)))
        trace_c.append(capped)
        if np.all(np.abs(sinr - rho) <= epsilon_rel * rho):
            converged = True
            break

    trace = IterationTrace(
        p_tx=np.array(trace_p),
        sizes=np.array(trace_n),
        sinr=np.array(trace_s),
        power=np.array(trace_w),
        capped=np.array(trace_c),
    )
    if not converged:
        worst = float(np.max(np.abs(sinr - rho) / rho))
        raise NonConvergedError(
            f"no convergence after {iterations} rounds (worst gap {worst:.3g})",
            iterations=iterations,
            worst_gap=worst,
            trace=trace,
        )
    total = float(np.sum(transmitter_power(p, sizes, params)))
    solution = Solution(p_tx=p, sizes=sizes, sinrs=sinr, network_power=total)
    return AdaptResult(solution=solution, trace=trace, iterations=iterations)


def single_link_opt(
    required_capacity: float,
    distance: float,
    n_max: int,
    params: RadioParams,
) -> tuple[float, int]:
    """Cheapest (p_tx, n) delivering the capacity over an isolated link.

    The omni requirement P_O follows from inverting the capacity formula;
    the transmitter cost (1+alpha)*P_O/n + n*p_circuit + p_shared is
    convex in n with continuous minimum sqrt((1+alpha)*P_O/p_circuit),
    so the best admissible integer is the cheaper of its floor/ceil
    clamped into the feasible range.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    rho = sinr_for_capacity(required_capacity)
    if rho <= 0:
        raise ValueError("required_capacity must be > 0")
    p_omni = rho * noise_power(params) / path_gain(distance, params)
    n_lo = max(1, int(np.ceil(p_omni / params.p_tx_max - 1e-12)))
    if n_lo > n_max:
        raise InfeasibleError(
            f"capacity {required_capacity:g} b/s/Hz needs {p_omni / n_max:.4g} mW "
            f"even at n={n_max}, above cap {params.p_tx_max:g} mW"
        )
    n_star = np.sqrt((1.0 + params.alpha) * p_omni / params.p_circuit)
    cands = {min(max(int(np.floor(n_star)), n_lo), n_max),
             min(max(int(np.ceil(n_star)), n_lo), n_max)}
    best = min(
        sorted(cands),
        key=lambda nn: float(transmitter_power(p_omni / nn, nn, params)),
    )
    return float(p_omni / best), int(best)


def foschini_miljanic_solve(
    snapshot: NetworkSnapshot,
    sizes,
    params: RadioParams,
    epsilon_rel: float = 1e-12,
    max_iters: int = 20_000,
) -> Solution:
    """Distributed fixed-size power control p <- p * rho / S.

    Starting below the fixed point (zero-interference powers), the
    iteration increases monotonically to the unique solution on feasible
    instances; powers escaping past the cap indicate infeasibility and
    raise NonConvergedError.
    """
    sizes = np.asarray(sizes, dtype=int)
    gains = gain_matrix(snapshot, sizes, params)
    noise = noise_power(params)
    rho = snapshot.rho
    p = rho * noise / np.diag(gains)
    sinr = sinr_from_gains(gains, p, noise)
    for k in range(1, max_iters + 1):
        p = p * rho / sinr
        if np.any(p > params.p_tx_max):
            raise NonConvergedError(
                f"powers diverged past the {params.p_tx_max:g} mW cap after {k} rounds",
                iterations=k,
                worst_gap=float(np.max(np.abs(sinr - rho) / rho)),
            )
        sinr = sinr_from_gains(gains, p, noise)
        if np.all(np.abs(sinr - rho) <= epsilon_rel * rho):
            total = float(np.sum(transmitter_power(p, sizes, params)))
            return Solution(p_tx=p, sizes=sizes, sinrs=sinr, network_power=total)
    raise NonConvergedError(
        f"no convergence after {max_iters} rounds",
        iterations=max_iters,
        worst_gap=float(np.max(np.abs(sinr - rho) / rho)),
    )
