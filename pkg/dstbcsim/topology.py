#!/usr/bin/env python3
"""
Network geometry, large-scale fading, AP clustering and pilot assignment
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .config import DerivedConstants, SystemConfig
from .errors import ConfigError, PlacementError

MAX_PLACEMENT_DRAWS = 10 ** 6
PLACEMENT_STALL_LIMIT = 2_000
PLACEMENT_BATCH = 512


@dataclass
class NetworkRealization:
    """AP/UE geometry and association for one Monte Carlo setup"""
    ap_pos: np.ndarray        # (L, 2) meters
    ue_pos: np.ndarray        # (K, 2) meters
    beta: np.ndarray          # (K, L) linear large-scale gain
    a: np.ndarray             # (K, L) serving indicators in {0, 1}
    row_map: np.ndarray       # (K, L) codeword row m(l, k) in 1..L_k, 0 when not serving
    pilot_group: np.ndarray   # (K,) pilot group index

    @property
    def L(self) -> int:
        return self.ap_pos.shape[0]

    @property
    def K(self) -> int:
        return self.ue_pos.shape[0]

    def serving_aps(self, k: int) -> np.ndarray:
        """Serving APs of UE k ordered by codeword row (strongest first)"""
        serving = np.flatnonzero(self.a[k])
        return serving[np.argsort(self.row_map[k, serving], kind='stable')]

    def served_ues(self, l: int) -> np.ndarray:
        """UEs served by AP l, in index order"""
        return np.flatnonzero(self.a[:, l])


def _relocation_sweep(rng: np.random.Generator, points: np.ndarray, area_side_m: float,
                      d_min: float) -> int:
    """
    One hard-disk Monte Carlo sweep: every accepted point in random order
    proposes a local move and keeps it only if the hard core still holds.
    Moves points in place; returns the number of proposals.
    """
    d_min_sq = d_min * d_min
    n = points.shape[0]
    for i in rng.permutation(n):
        proposal = points[i] + rng.uniform(-d_min / 2, d_min / 2, size=2)
        if np.any(proposal < 0.0) or np.any(proposal >= area_side_m):
            continue
        gaps = np.delete(points, i, axis=0) - proposal
        if n == 1 or np.min(np.einsum('ij,ij->i', gaps, gaps)) >= d_min_sq:
            points[i] = proposal
    return n


def place_aps_hcpp(rng: np.random.Generator, L: int, area_side_m: float, d_min: float,
                   max_draws: int = MAX_PLACEMENT_DRAWS,
                   stall_limit: int = PLACEMENT_STALL_LIMIT) -> np.ndarray:
    """
    Dart-throwing hard-core placement: uniform candidates are accepted only if
    they keep a distance of at least d_min to every accepted point.

    With d_min = sqrt(A/L) sequential dart throwing alone jams a few points
    short of L. After stall_limit consecutive rejections the accepted points
    are shuffled by one relocation sweep, which opens room for the next dart.
    Every candidate and proposal counts against max_draws.
    """
    if L < 1:
        return np.zeros((0, 2))

    points = np.empty((L, 2))
    count = 0
    draws = 0
    rejections = 0
    d_min_sq = d_min * d_min

    while draws < max_draws:
        if rejections >= stall_limit:
            draws += _relocation_sweep(rng, points[:count], area_side_m, d_min)
            rejections = 0
            continue

        n = min(PLACEMENT_BATCH, max_draws - draws, stall_limit - rejections)
        batch = rng.uniform(0.0, area_side_m, size=(n, 2))
        if count:
            gaps = batch[:, np.newaxis, :] - points[np.newaxis, :count, :]
            free = np.min(np.einsum('ijk,ijk->ij', gaps, gaps), axis=1) >= d_min_sq
        else:
            free = np.ones(n, dtype=bool)

        if not free.any():
            draws += n
            rejections += n
            continue

        first = int(np.argmax(free))
        draws += first + 1
        points[count] = batch[first]
        count += 1
        rejections = 0
        if count == L:
            return points.copy()

    raise PlacementError(count, L, draws)


def place_ues_uniform(rng: np.random.Generator, K: int, area_side_m: float) -> np.ndarray:
    """K independent uniform points in the square"""
    return rng.uniform(0.0, area_side_m, size=(K, 2))


def distances_3d(ap_pos: np.ndarray, ue_pos: np.ndarray, height_offset_m: float) -> np.ndarray:
    """(K, L) distances including the antenna height difference"""
    planar = ue_pos[:, np.newaxis, :] - ap_pos[np.newaxis, :, :]
    return np.sqrt(np.sum(planar ** 2, axis=-1) + height_offset_m ** 2)


def large_scale_fading(rng: np.random.Generator, ap_pos: np.ndarray, ue_pos: np.ndarray,
                       cfg: SystemConfig) -> np.ndarray:
    """UMi log-distance path loss plus i.i.d. log-normal shadowing, linear scale"""
    d3 = distances_3d(ap_pos, ue_pos, cfg.h_ap_m - cfg.h_ue_m)
    shadowing = cfg.shadow_sigma_dB * rng.standard_normal(d3.shape)
    beta_dB = cfg.pathloss_intercept_dB - cfg.pathloss_slope_dB * np.log10(d3) + shadowing
    return 10 ** (beta_dB / 10)


def cluster_aps(beta: np.ndarray, L_k: int):
    """
    Serve each UE by its L_k strongest APs.

    Returns (a, row_map): the indicator matrix and the codeword row assigned
    to each serving AP (1 = strongest). Ties go to the lowest AP index.
    """
    K, L = beta.shape
    if L_k > L:
        raise ConfigError(f"L_k={L_k} exceeds the number of APs ({L})", 'L_k')

    order = np.argsort(-beta, axis=1, kind='stable')[:, :L_k]
    a = np.zeros((K, L), dtype=np.int8)
    row_map = np.zeros((K, L), dtype=np.int64)
    ues = np.arange(K)[:, np.newaxis]
    a[ues, order] = 1
    row_map[ues, order] = np.arange(1, L_k + 1)
    return a, row_map


def assign_pilots(beta: np.ndarray, a: np.ndarray, tau_p: int, N_UE: int,
                  rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Greedy pilot-group assignment.

    UEs are visited in random order (index order without rng). The first
    tau_p / N_UE get distinct groups; every later UE joins the group with the
    least summed gain at its strongest serving AP.
    """
    K = beta.shape[0]
    n_groups = tau_p // N_UE
    order = rng.permutation(K) if rng is not None else np.arange(K)
    pilot_group = np.full(K, -1, dtype=np.int64)

    for position, k in enumerate(order):
        if position < n_groups:
            pilot_group[k] = position
            continue

        serving = np.flatnonzero(a[k])
        candidates = serving if serving.size else np.arange(beta.shape[1])
        strongest = candidates[np.argmax(beta[k, candidates])]

        contamination = np.zeros(n_groups)
        assigned = pilot_group >= 0
        np.add.at(contamination, pilot_group[assigned], beta[assigned, strongest])
        pilot_group[k] = int(np.argmin(contamination))

    return pilot_group


def build_network(rng: np.random.Generator, cfg: SystemConfig,
                  const: DerivedConstants) -> NetworkRealization:
    """Draw one complete setup: placement, fading, clusters and pilots"""
    ap_pos = place_aps_hcpp(rng, cfg.L, cfg.area_side_m, const.d_min_m)
    ue_pos = place_ues_uniform(rng, cfg.K, cfg.area_side_m)
    beta = large_scale_fading(rng, ap_pos, ue_pos, cfg)
    a, row_map = cluster_aps(beta, cfg.L_k)
    pilot_group = assign_pilots(beta, a, cfg.tau_p, cfg.N_UE, rng)
    return NetworkRealization(ap_pos, ue_pos, beta, a, row_map, pilot_group)


def geometry_rows(network: NetworkRealization, setup_id: int) -> List[dict]:
    """Flat rows describing AP and UE coordinates of one setup"""
    rows = []
    for entity, positions in (('ap', network.ap_pos), ('ue', network.ue_pos)):
        for index, (x, y) in enumerate(positions):
            rows.append({'setup_id': setup_id, 'entity': entity, 'id': index,
                         'x_m': float(x), 'y_m': float(y)})
    return rows
