"""Network instances, Rician channel sampling, and sample-size rules.

A network instance is a K-link single-input single-output interference
channel: link k's receiver hears transmitter j through a random gain
``g[k, j]``.  Only the gain distribution (Rician fading over a fixed
geometry) is assumed known; algorithms downstream consume i.i.d. sampled
gain matrices rather than instantaneous channel state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import SeedRecord, as_seed_record, make_rng
from .validation import check_gain_samples, check_per_link

PATHLOSS_EXPONENT = 4.0


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class GeometryConfig:
    """Layout and radio parameters used when generating instances.

    Transmitters fall uniformly in a square of side ``square_side_km``;
    each receiver falls uniformly (by area) in the annulus of radii
    ``rx_min_m``..``rx_max_m`` around its transmitter.  dB quantities are
    converted to linear scale at ingestion; every downstream computation
    is linear.
    """

    square_side_km: float = 2.0
    rx_min_m: float = 10.0
    rx_max_m: float = 400.0
    sinr_target_db: float = 2.0
    noise_power_db: float = -90.0
    budget_margin: float = 3.0
    kappa: float = 100.0

    def __post_init__(self):
        if self.square_side_km <= 0 or self.rx_min_m <= 0 or self.rx_max_m <= self.rx_min_m:
            raise ValueError("geometry bounds must be positive with rx_min_m < rx_max_m")
        if self.budget_margin <= 0:
            raise ValueError("budget_margin must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")


@dataclass(frozen=True)
class NetworkInstance:
    """Immutable K-link interference network.

    ``dist[k, j]`` is the transmitter-j to receiver-k distance in meters.
    ``gamma`` (SINR targets), ``eta`` (noise powers), and ``pbar`` (power
    budgets) are linear-scale per-link vectors.  Positions are optional;
    when present they are consistent with ``dist``.  ``dist`` itself may be
    omitted for geometry-free instances built around externally supplied
    gain samples (channel sampling then being unavailable).
    """

    K: int
    gamma: np.ndarray
    eta: np.ndarray
    pbar: np.ndarray
    kappa: float
    dist: np.ndarray | None = None
    tx_pos: np.ndarray | None = None
    rx_pos: np.ndarray | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        for name in ("gamma", "eta", "pbar"):
            arr = check_per_link(name, getattr(self, name), self.K)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.dist is not None:
            dist = np.asarray(self.dist, dtype=float)
            if dist.shape != (self.K, self.K):
                raise ValueError(f"dist must have shape ({self.K}, {self.K})")
            if not np.all(np.isfinite(dist)) or np.any(dist <= 0):
                raise ValueError("dist must be finite and strictly positive")
            dist.setflags(write=False)
            object.__setattr__(self, "dist", dist)
        for name in ("tx_pos", "rx_pos"):
            pos = getattr(self, name)
            if pos is not None:
                pos = np.asarray(pos, dtype=float)
                if pos.shape != (self.K, 2):
                    raise ValueError(f"{name} must have shape ({self.K}, 2)")
                pos.setflags(write=False)
                object.__setattr__(self, name, pos)
        if self.tx_pos is not None and self.rx_pos is not None and self.dist is not None:
            d = np.linalg.norm(self.rx_pos[:, None, :] - self.tx_pos[None, :, :], axis=2)
            if not np.allclose(d, self.dist, rtol=1e-9, atol=1e-9):
                raise ValueError("dist is inconsistent with tx_pos/rx_pos")


@dataclass(frozen=True)
class GainSampleSet:
    """N sampled K x K gain matrices plus the seed that produced them."""

    N: int
    gains: np.ndarray
    seed: SeedRecord = field(default_factory=lambda: SeedRecord(0))

    def __post_init__(self):
        gains = check_gain_samples(self.gains)
        if gains.shape[0] != self.N:
            raise ValueError(f"gains has {gains.shape[0]} samples, expected N={self.N}")
        gains.setflags(write=False)
        object.__setattr__(self, "gains", gains)

    @property
    def K(self) -> int:
        return self.gains.shape[1]


def generate_instance(K: int, rng_seed, geometry_cfg: GeometryConfig | None = None) -> NetworkInstance:
    """Draw a random network instance.

    Receiver positions are rejection-sampled inside the annulus around
    their transmitter, giving a uniform-by-area distribution.  The power
    budget of link k is ``budget_margin`` times the power that meets its
    SINR target interference-free over the pure line-of-sight gain
    ``1 / d[k, k]**4`` (the kappa -> infinity channel).
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    geo = geometry_cfg or GeometryConfig()
    rng = make_rng(rng_seed)

    side_m = geo.square_side_km * 1000.0
    tx = rng.uniform(0.0, side_m, size=(K, 2))
    rx = np.empty((K, 2))
    for k in range(K):
        while True:
            offset = rng.uniform(-geo.rx_max_m, geo.rx_max_m, size=2)
            r = math.hypot(offset[0], offset[1])
            if geo.rx_min_m <= r <= geo.rx_max_m:
                break
        rx[k] = tx[k] + offset

    dist = np.linalg.norm(rx[:, None, :] - tx[None, :, :], axis=2)
    gamma = np.full(K, db_to_linear(geo.sinr_target_db))
    eta = np.full(K, db_to_linear(geo.noise_power_db))
    # interference-free minimum power at the deterministic LOS gain
    p_floor = gamma * eta * np.diagonal(dist) ** PATHLOSS_EXPONENT
    pbar = geo.budget_margin * p_floor
    return NetworkInstance(
        K=K, gamma=gamma, eta=eta, pbar=pbar, kappa=geo.kappa,
        dist=dist, tx_pos=tx, rx_pos=rx,
    )


def sample_gains(inst: NetworkInstance, N: int, rng_seed) -> GainSampleSet:
    """Draw N i.i.d. gain matrices from the instance's Rician model.

    Each entry is ``|sqrt(kappa/(kappa+1)) + sqrt(1/(kappa+1)) * z|^2 / d**4``
    with z standard Gaussian, drawn independently per (sample, k, j).
    ``kappa == inf`` collapses to the deterministic line-of-sight gain.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if inst.dist is None:
        raise ValueError("instance has no distance matrix; cannot sample gains")
    rec = as_seed_record(rng_seed)
    rng = make_rng(rec)
    path = inst.dist ** -PATHLOSS_EXPONENT

    if np.isinf(inst.kappa):
        gains = np.broadcast_to(path, (N, inst.K, inst.K)).copy()
        return GainSampleSet(N=N, gains=gains, seed=rec)

    los = math.sqrt(inst.kappa / (inst.kappa + 1.0))
    scatter = math.sqrt(1.0 / (inst.kappa + 1.0))
    z = rng.standard_normal((N, inst.K, inst.K))
    fading = (los + scatter * z) ** 2
    # a diagonal fading of exactly zero is a measure-zero degenerate draw
    idx = np.arange(inst.K)
    while True:
        dead = fading[:, idx, idx] == 0.0
        if not dead.any():
            break
        n_sel, k_sel = np.nonzero(dead)
        fading[n_sel, k_sel, k_sel] = (los + scatter * rng.standard_normal(n_sel.size)) ** 2
    return GainSampleSet(N=N, gains=fading * path, seed=rec)


def subset_instance(inst: NetworkInstance, S) -> NetworkInstance:
    """Restrict an instance to the links in S (sorted index order)."""
    S = np.asarray(S, dtype=np.intp)
    return NetworkInstance(
        K=int(S.size),
        gamma=inst.gamma[S],
        eta=inst.eta[S],
        pbar=inst.pbar[S],
        kappa=inst.kappa,
        dist=None if inst.dist is None else inst.dist[np.ix_(S, S)],
        tx_pos=None if inst.tx_pos is None else inst.tx_pos[S],
        rx_pos=None if inst.rx_pos is None else inst.rx_pos[S],
    )


def subset_samples(samples: GainSampleSet, S) -> GainSampleSet:
    S = np.asarray(S, dtype=np.intp)
    return GainSampleSet(N=samples.N, gains=samples.gains[np.ix_(np.arange(samples.N), S, S)],
                         seed=samples.seed)


def sample_size_constant_power(K: int, eps: float, delta: float) -> int:
    """Samples needed so a constant-power witness certifies the chance constraint.

    Grows linearly in K and in 1/eps.  Clamped below at 1: a sample
    approximation needs at least one sample.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    log_term = math.log(1.0 / delta)
    inner = K - 1 + log_term + math.sqrt(2.0 * (K - 1) * log_term + log_term**2)
    return max(1, math.ceil(inner / eps))


def sample_size_adaptive_power(eps: float, delta: float) -> int:
    """Samples needed when powers adapt per sample.

    Independent of K; grows as 1/eps**2.  Clamped below at 1.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return max(1, math.ceil(-2.0 / (eps**2 * math.log(delta))))
