"""Sampling policies over class pairs and the online-game regret simulator.

The sampling distribution is the scaled softmax of the gain matrix with
negative entries masked out; greedy (argmax) and uniform are its s -> inf
and s = 0 limits.  The simulator plays these policies against synthetic gain
sequences and reports measured average regret against the best fixed pair
in hindsight, together with the proved bound: 2 log K / (s T) when the
cumulative sum includes the current round's observed gains, and
2 sqrt(log K) / sqrt(T) for the Hedge-style variant that only uses past
rounds (its temperature is then log(1 + 2 sqrt(log K / T))).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SelMixError
from .gain import GainMatrix

POLICY_KINDS = ("selmix_hedge", "selmix_hedge_variant", "uniform", "fixed", "greedy")
GAIN_GENERATORS = ("constant", "iid_uniform", "alternating", "anticorrelated", "spiky")


@dataclass(frozen=True)
class MixPolicy:
    """Probability distribution over the K x K class pairs."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", p)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise SelMixError("policy must be a square matrix")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise SelMixError("policy entries must be nonnegative and sum to 1")

    def entropy(self) -> float:
        p = self.probs[self.probs > 0]
        return float(-(p * np.log(p)).sum())


def selmix_distribution(g: GainMatrix, s: float, mask_negative: bool = True) -> MixPolicy:
    """softmax(s * G) over pairs, optionally restricted to nonnegative gains.

    If masking leaves nothing (every gain negative) the softmax falls back
    to the full matrix so the least-bad pairs still dominate.
    """
    if s < 0:
        raise SelMixError("s must be nonnegative")
    values = g.values
    keep = values >= 0.0
    if not (mask_negative and keep.any()):
        keep = np.ones_like(values, dtype=bool)
    scaled = np.where(keep, s * values, -np.inf)
    flat = scaled.reshape(-1)
    shifted = flat - flat.max()
    e = np.where(np.isneginf(shifted), 0.0, np.exp(shifted))
    return MixPolicy((e / e.sum()).reshape(values.shape))


def greedy_distribution(g: GainMatrix) -> MixPolicy:
    """One-hot on the argmax gain; ties go to the smallest (i, j) row-major."""
    k = g.values.shape[0]
    probs = np.zeros(k * k)
    probs[int(np.argmax(g.values))] = 1.0
    return MixPolicy(probs.reshape(k, k))


def uniform_distribution(k: int) -> MixPolicy:
    return MixPolicy(np.full((k, k), 1.0 / (k * k)))


def sample_pair(policy: MixPolicy, rng: np.random.Generator) -> tuple[int, int]:
    """Inverse-CDF draw over the flattened row-major cells."""
    cdf = np.cumsum(policy.probs.reshape(-1))
    idx = int(np.searchsorted(cdf, rng.random(), side="right"))
    idx = min(idx, policy.probs.size - 1)
    return divmod(idx, policy.probs.shape[1])


@dataclass(frozen=True)
class OnlineGameConfig:
    """One simulated online game against a synthetic gain sequence."""

    K: int
    T: int
    s: float = 10.0
    gain_generator: str = "iid_uniform"
    policy_kind: str = "selmix_hedge"
    seed: int = 0
    fixed_pair: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.K < 1 or self.T < 1:
            raise SelMixError("K and T must be >= 1")
        if self.policy_kind not in POLICY_KINDS:
            raise SelMixError(f"unknown policy kind {self.policy_kind!r}")
        if self.gain_generator not in GAIN_GENERATORS:
            raise SelMixError(f"unknown gain generator {self.gain_generator!r}")
        if self.s <= 0:
            raise SelMixError("s must be positive")


def _generate_gains(cfg: OnlineGameConfig, rng: np.random.Generator) -> np.ndarray:
    """Synthetic gain sequences, shape (T, K, K), all values in [0, 1]
    except ``spiky`` which deliberately overshoots to exercise clamping."""
    t, k = cfg.T, cfg.K
    if cfg.gain_generator == "constant":
        return np.full((t, k, k), 0.5)
    if cfg.gain_generator == "iid_uniform":
        return rng.random((t, k, k))
    if cfg.gain_generator == "alternating":
        steps = np.arange(t)[:, None, None]
        cells = (np.arange(k)[:, None] + np.arange(k)[None, :])[None, :, :]
        return ((steps + cells) % 2).astype(np.float64)
    if cfg.gain_generator == "anticorrelated":
        # reward the currently-trailing cells: leaders (cumsum above the
        # median) get 0 this round, trailers get 1
        gains = np.empty((t, k, k))
        cum = np.zeros((k, k))
        for step in range(t):
            med = np.median(cum)
            gains[step] = np.where(cum <= med, 1.0, 0.0)
            cum += gains[step]
        return gains
    # spiky: iid in [-2, 2], out of range on purpose
    return rng.random((t, k, k)) * 4.0 - 2.0


def _policy_sequence(cfg: OnlineGameConfig, gains: np.ndarray) -> np.ndarray:
    """Per-round pair distributions, shape (T, K*K)."""
    t, k = cfg.T, cfg.K
    cells = k * k
    flat = gains.reshape(t, cells)
    if cfg.policy_kind == "uniform":
        return np.full((t, cells), 1.0 / cells)
    if cfg.policy_kind == "fixed":
        i, j = cfg.fixed_pair
        if not (0 <= i < k and 0 <= j < k):
            raise SelMixError("fixed pair out of range")
        probs = np.zeros((t, cells))
        probs[:, i * k + j] = 1.0
        return probs
    if cfg.policy_kind == "greedy":
        probs = np.zeros((t, cells))
        probs[np.arange(t), np.argmax(flat, axis=1)] = 1.0
        return probs
    cum = np.cumsum(flat, axis=0)
    if cfg.policy_kind == "selmix_hedge":
        scores = cfg.s * cum                      # includes the current round
    else:
        s_var = np.log(1.0 + 2.0 * np.sqrt(np.log(max(k, 2)) / t))
        past = np.vstack([np.zeros(cells), cum[:-1]])
        scores = s_var * past                     # Hedge: past rounds only
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def run_online_game(cfg: OnlineGameConfig) -> dict:
    """Play one seeded game and report measured regret against the bound.

    Gains outside the admissible range ([0, 1] for the variant policy,
    [-1, 1] otherwise) are clamped and counted in ``clamped_rounds``.
    """
    gen_ss, play_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    gains = _generate_gains(cfg, np.random.default_rng(gen_ss))
    lo = 0.0 if cfg.policy_kind == "selmix_hedge_variant" else -1.0
    out_of_range = (gains < lo) | (gains > 1.0)
    clamped_rounds = int(out_of_range.any(axis=(1, 2)).sum())
    gains = np.clip(gains, lo, 1.0)

    probs = _policy_sequence(cfg, gains)
    flat = gains.reshape(cfg.T, -1)
    rng = np.random.default_rng(play_ss)
    # row-wise inverse-CDF sampling of one cell per round
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(cfg.T)
    chosen = np.minimum((cdf < u[:, None]).sum(axis=1), flat.shape[1] - 1)
    realized = flat[np.arange(cfg.T), chosen]

    avg_policy = float(realized.mean())
    avg_expected = float((probs * flat).sum(axis=1).mean())
    avg_best_fixed = float(flat.mean(axis=0).max())
    log_k = np.log(max(cfg.K, 2))
    if cfg.policy_kind == "selmix_hedge":
        bound = 2.0 * log_k / (cfg.s * cfg.T)
    elif cfg.policy_kind == "selmix_hedge_variant":
        bound = 2.0 * np.sqrt(log_k) / np.sqrt(cfg.T)
    else:
        bound = float("nan")
    return {
        "K": cfg.K,
        "T": cfg.T,
        "policy": cfg.policy_kind,
        "generator": cfg.gain_generator,
        "seed": cfg.seed,
        "avg_gain_policy": avg_policy,
        "avg_gain_policy_expected": avg_expected,
        "avg_gain_best_fixed": avg_best_fixed,
        "regret": avg_best_fixed - avg_policy,
        "regret_expected": avg_best_fixed - avg_expected,
        "bound": bound,
        "clamped_rounds": clamped_rounds,
    }
