"""Ground-truth solvers: fixed-size power solves, feasibility analysis,
exhaustive joint optimization over beamsteering-size vectors, and the
concurrent-links counting experiment.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError
from .radio import (
    NetworkSnapshot,
    RadioParams,
    Solution,
    _geometry,
    beam_gain,
    gain_matrix,
    noise_power,
    path_gain,
    sinr_from_gains,
    transmitter_power,
)

__all__ = [
    "FeasibilityReport",
    "solve_power_for_sizes",
    "check_feasibility",
    "solve_exact",
    "max_feasible_links",
]

# Largest linear-solve residual tolerated before a fixed-size solve is
# considered numerically unsound.
_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class FeasibilityReport:
    """Verdict for a fixed-size SINR-target system.

    feasible         radius < 1 with a positive power vector within cap
    spectral_radius  radius of D*F (normalized cross-gain matrix)
    p_tx             solving power vector when feasible, else None
    """

    feasible: bool
    spectral_radius: float
    p_tx: np.ndarray | None = None


def _system_matrices(snapshot, sizes, params):
    """Equality-constrained power-control system for fixed sizes.

    Returns (gains, coupling, rhs) where coupling = D*F holds the
    target-normalized cross gains and rhs = D*u the normalized noise,
    so the power vector solves (I - coupling) p = rhs.
    """
    gains = gain_matrix(snapshot, sizes, params)
    own = np.diag(gains)
    d = snapshot.rho / own
    coupling = d[:, None] * gains
    np.fill_diagonal(coupling, 0.0)
    rhs = d * noise_power(params)
    return gains, coupling, rhs


def _spectral_radius(coupling: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(coupling))))


def solve_power_for_sizes(
    snapshot: NetworkSnapshot, sizes, params: RadioParams
) -> Solution:
    """Exact power vector meeting every SINR target with the given sizes.

    Sets all SINR constraints to equality and solves the linear system
    (I - D F) p = D u. Raises InfeasibleError (with the spectral radius
    of D F) when the system has no positive solution or the solution
    violates the per-client power cap.
    """
    sizes = np.asarray(sizes, dtype=int)
    if sizes.shape != (snapshot.n_links,):
        raise ValueError("sizes must have one entry per link")
    if np.any(sizes < 1) or np.any(sizes > snapshot.n_max):
        raise ValueError("sizes must lie in [1, n_max] per link")
    gains, coupling, rhs = _system_matrices(snapshot, sizes, params)
    eye = np.eye(snapshot.n_links)
    try:
        p = np.linalg.solve(eye - coupling, rhs)
    except np.linalg.LinAlgError:
        radius = _spectral_radius(coupling)
        raise InfeasibleError(
            f"singular power-control system (spectral radius {radius:.6g})",
            spectral_radius=radius,
        )
    if np.any(p <= 0):
        radius = _spectral_radius(coupling)
        raise InfeasibleError(
            f"SINR targets unattainable: spectral radius {radius:.6g} >= 1",
            spectral_radius=radius,
        )
    if np.any(p > params.p_tx_max):
        radius = _spectral_radius(coupling)
        raise InfeasibleError(
            f"required power {p.max():.4g} mW exceeds cap {params.p_tx_max:g} mW",
            spectral_radius=radius,
        )
    residual = np.max(np.abs((eye - coupling) @ p - rhs))
    if residual > _RESIDUAL_TOL * max(1.0, float(np.max(np.abs(rhs)))):
        raise ArithmeticError(f"linear solve residual {residual:.3g} too large")
    sinrs = sinr_from_gains(gains, p, noise_power(params))
    total = float(np.sum(transmitter_power(p, sizes, params)))
    return Solution(p_tx=p, sizes=sizes, sinrs=sinrs, network_power=total)


def check_feasibility(
    snapshot: NetworkSnapshot, sizes, params: RadioParams
) -> FeasibilityReport:
    """Spectral-radius feasibility verdict for a fixed size vector."""
    sizes = np.asarray(sizes, dtype=int)
    _, coupling, rhs = _system_matrices(snapshot, sizes, params)
    radius = _spectral_radius(coupling)
    if radius >= 1.0:
        return FeasibilityReport(False, radius)
    p = np.linalg.solve(np.eye(snapshot.n_links) - coupling, rhs)
    ok = bool(np.all(p > 0) and np.all(p <= params.p_tx_max))
    return FeasibilityReport(ok, radius, p if ok else None)


def _batched_powers(snapshot, size_vectors, params):
    """Solve the fixed-size system for every candidate size vector.

    Returns (p, ok) with p of shape (C, M); rows where the solve is
    singular or unusable have ok = False.
    """
    m = snapshot.n_links
    n_top = int(np.max(snapshot.n_max))
    dist, offset = _geometry(snapshot)
    pathg = path_gain(dist, params)
    # per-size column gains: col[s-1, i, j] = G(s, offset_ij) * pathg_ij
    col = np.empty((n_top, m, m))
    for s in range(1, n_top + 1):
        col[s - 1] = beam_gain(s, offset) * pathg
    rows = np.arange(m)
    a_stack = col[size_vectors[:, None, :] - 1, rows[None, :, None], rows[None, None, :]]
    own = a_stack[:, rows, rows]  # (C, M)
    d = snapshot.rho[None, :] / own
    coupling = d[:, :, None] * a_stack
    coupling[:, rows, rows] = 0.0
    rhs = d * noise_power(params)
    eye = np.eye(m)
    systems = eye[None, :, :] - coupling
    ok = np.ones(size_vectors.shape[0], dtype=bool)
    try:
        p = np.linalg.solve(systems, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        # rare singular candidates: fall back to row-by-row solves
        p = np.full((size_vectors.shape[0], m), np.nan)
        for c in range(size_vectors.shape[0]):
            try:
                p[c] = np.linalg.solve(systems[c], rhs[c])
            except np.linalg.LinAlgError:
                ok[c] = False
    bad = ~np.isfinite(p).all(axis=1)
    ok &= ~bad
    return p, ok


def solve_exact(
    snapshot: NetworkSnapshot,
    params: RadioParams,
    max_candidates: int = 2_000_000,
) -> Solution:
    """Exhaustive joint optimum over all per-link beamsteering sizes.

    Enumerates every size vector in prod_i [1, n_max_i], solves each
    fixed-size system exactly, and returns the feasible solution with
    minimum network power (ties broken by lexicographically smallest
    size vector). Cost grows as the product of the n_max values.
    """
    n_max = snapshot.n_max
    count = int(np.prod(n_max.astype(np.int64)))
    if count > max_candidates:
        raise ValueError(
            f"{count} size vectors exceed the enumeration budget {max_candidates}"
        )
    size_vectors = np.array(
        list(itertools.product(*[range(1, int(nm) + 1) for nm in n_max])), dtype=int
    )
    p, ok = _batched_powers(snapshot, size_vectors, params)
    with np.errstate(invalid="ignore"):
        feasible = ok & np.all(p > 0, axis=1) & np.all(p <= params.p_tx_max, axis=1)
    if not np.any(feasible):
        raise InfeasibleError("no beamsteering size vector admits the SINR targets")
    powers = np.full(size_vectors.shape[0], np.inf)
    powers[feasible] = np.sum(
        transmitter_power(p[feasible], size_vectors[feasible], params), axis=1
    )
    best = int(np.argmin(powers))  # first minimum = lexicographically smallest
    # authoritative re-solve with residual and feasibility checks
    return solve_power_for_sizes(snapshot, size_vectors[best], params)


def max_feasible_links(
    snapshot: NetworkSnapshot,
    sinr_target: float,
    n: int,
    p_tx: float,
    params: RadioParams,
) -> int:
    """Size of the largest link subset meeting `sinr_target` concurrently.

    Every candidate client transmits with the same fixed power and the
    same beamsteering size; a subset is feasible when all of its links
    reach the target with interference from the other subset members.
    Feasible subsets are downward closed, so the search walks subset
    sizes from largest to smallest and stops at the first hit.
    """
    m = snapshot.n_links
    if m == 0:
        return 0
    if sinr_target <= 0:
        raise ValueError("sinr_target must be > 0")
    if p_tx <= 0 or p_tx > params.p_tx_max:
        raise ValueError("p_tx must be in (0, p_tx_max]")
    sizes = np.full(m, int(n))
    gains = gain_matrix(snapshot, sizes, params)
    noise = noise_power(params)
    signal = np.diag(gains) * p_tx
    for k in range(m, 0, -1):
        for combo in itertools.combinations(range(m), k):
            idx = np.array(combo)
            sub = gains[np.ix_(idx, idx)]
            interference = sub.sum(axis=1) * p_tx - signal[idx]
            if np.all(signal[idx] / (noise + interference) >= sinr_target):
                return k
    return 0
