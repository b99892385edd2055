"""Fine-tuning loop: validation pass, multiplier refresh, gain matrix,
pair-sampling policy, mixup SGD block, and pseudo-label refresh.

Each cycle measures the hard confusion matrix on the validation split,
refreshes the Lagrange multipliers from it, builds the gain matrix, and
turns it into the pair-sampling distribution.  The following n SGD steps
draw (Y1, Y2) from that distribution, pick X1 uniformly from the labeled
class-Y1 pool and X2 from the pseudo-labeled (ssl) or labeled (supervised)
class-Y2 pool, and descend the mixup loss at the scheduled learning rate.
Runs are bitwise deterministic for a given (config, seed): the root seed
spawns independent streams for pair sampling, beta draws, batch element
choice, and data shuffling, so toggling one consumer leaves the others
unchanged.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .classifier import (
    CentroidSet,
    LinearModel,
    MixupSample,
    batch_logits,
    class_centroids,
    sgd_mixup_step,
    softmax,
)
from .data import FeatureDataset
from .errors import SelMixError
from .gain import GainMatrix, gain_matrix
from .metrics import (
    MetricSpec,
    evaluate_metric,
    model_confusion,
    update_lagrange,
)
from .policy import MixPolicy, greedy_distribution, selmix_distribution, uniform_distribution

MAX_PAIR_RESAMPLES = 100


@dataclass(frozen=True)
class TrainerConfig:
    """Knobs of one fine-tuning run.

    Defaults follow the published recipe: gain scaling s = 10, batch 64,
    cosine schedule; sgd_steps_per_cycle = 50 matches the one-validation-
    every-50-steps cadence.  ``policy`` swaps the sampling distribution for
    the uniform or greedy baseline while keeping everything else fixed.
    """

    metric: MetricSpec
    cycles: int = 50
    sgd_steps_per_cycle: int = 50
    batch_size: int = 64
    lr: float = 0.2
    lr_schedule: str = "cosine"
    s: float = 10.0
    beta_min: float = 0.5
    mode: str = "supervised"
    seed: int = 0
    mask_negative: bool = True
    policy: str = "selmix"

    def __post_init__(self):
        if self.cycles < 1:
            raise SelMixError("cycles must be >= 1")
        # n = 0 is allowed: a pure evaluation pass that leaves the model alone
        if self.sgd_steps_per_cycle < 0:
            raise SelMixError("sgd_steps_per_cycle must be >= 0")
        if self.batch_size < 1:
            raise SelMixError("batch_size must be >= 1")
        if self.lr < 0:
            raise SelMixError("lr must be nonnegative")
        if self.lr_schedule not in ("constant", "cosine"):
            raise SelMixError("lr_schedule must be 'constant' or 'cosine'")
        if not 0.0 <= self.beta_min <= 1.0:
            raise SelMixError("beta_min must lie in [0, 1]")
        if self.mode not in ("supervised", "ssl"):
            raise SelMixError("mode must be 'supervised' or 'ssl'")
        if self.policy not in ("selmix", "uniform", "greedy"):
            raise SelMixError("policy must be 'selmix', 'uniform', or 'greedy'")
        if self.s <= 0:
            raise SelMixError("s must be positive")

    @property
    def beta_bar(self) -> float:
        """Deterministic representative of beta ~ U[beta_min, 1]."""
        return 0.5 * (1.0 + self.beta_min)


@dataclass
class CycleRecord:
    t: int
    psi: float
    recalls: list[float]
    coverages: list[float]
    lambdas: list[float]
    gain_max: float
    gain_min: float
    policy_entropy: float
    wall_ms: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "t": self.t,
                "psi": self.psi,
                "recalls": self.recalls,
                "coverages": self.coverages,
                "lambdas": self.lambdas,
                "gain_max": self.gain_max,
                "gain_min": self.gain_min,
                "policy_entropy": self.policy_entropy,
                "wall_ms": self.wall_ms,
            }
        )


@dataclass
class RunHistory:
    records: list[CycleRecord] = field(default_factory=list)
    sgd_steps: int = 0
    pair_resamples: int = 0
    pseudo_empty_resamples: int = 0
    final_psi: float = float("nan")
    wall_ms_total: float = 0.0

    def to_jsonl(self) -> str:
        return "\n".join(r.to_json() for r in self.records) + "\n"


def cosine_lr(base: float, step: int, total: int) -> float:
    """Half-cosine ramp from base (step 0) to 0 (step == total)."""
    if total < 1 or not 0 <= step <= total:
        raise SelMixError("need 0 <= step <= total and total >= 1")
    return base * 0.5 * (1.0 + np.cos(np.pi * step / total))


def refresh_pseudo_labels(model: LinearModel, unlabeled: FeatureDataset) -> FeatureDataset:
    """Assign every sample the argmax class of its logits (ties to the
    smallest index) and rebuild the per-class index sets."""
    preds = np.argmax(batch_logits(model, unlabeled.features), axis=1)
    return unlabeled.with_labels(preds)


def pretrain_erm(
    train: FeatureDataset,
    dim: int,
    num_classes: int,
    steps: int = 300,
    lr: float = 0.5,
    batch_size: int = 64,
    seed: int = 0,
    logit_adjust: float = 0.0,
) -> LinearModel:
    """Softmax-CE SGD warm start on the (imbalanced) training split.

    With ``logit_adjust=0`` this is plain ERM and yields the head-biased
    classifier the fine-tuning stage is meant to repair.  A positive value
    adds that multiple of log class priors to the logits inside the loss
    (logit-adjusted training), giving the debiased starting point the
    fine-tuning recipe assumes.  Deterministic given seed.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5E1F)))
    w = np.zeros((dim, num_classes))
    shift = logit_adjust * np.log(train.priors()) if logit_adjust else 0.0
    for _ in range(steps):
        idx = rng.integers(0, train.n, size=batch_size)
        x = train.features[idx]
        p = softmax(x @ w + shift, axis=1)
        p[np.arange(batch_size), train.labels[idx]] -= 1.0
        w -= lr * (x.T @ p) / batch_size
    return LinearModel(w)


def _draw_pairs(
    policy: MixPolicy,
    count: int,
    rng: np.random.Generator,
    first_nonempty: np.ndarray,
    second_nonempty: np.ndarray,
    history: RunHistory,
) -> tuple[np.ndarray, np.ndarray]:
    """Batch of (Y1, Y2) pairs with resampling when a drawn class pool is
    empty: Y1 retries are capped, Y2 retries (pseudo-label collapse) are
    counted and retried generously."""
    k = policy.probs.shape[0]
    cdf = np.cumsum(policy.probs.reshape(-1))
    flat = np.minimum(np.searchsorted(cdf, rng.random(count), side="right"), k * k - 1)
    y1, y2 = np.divmod(flat, k)
    for n in range(count):
        tries_first = 0
        tries_second = 0
        while not (first_nonempty[y1[n]] and second_nonempty[y2[n]]):
            if not first_nonempty[y1[n]]:
                tries_first += 1
                history.pair_resamples += 1
                if tries_first > MAX_PAIR_RESAMPLES:
                    raise SelMixError(f"class {y1[n]} has no labeled samples to mix")
            else:
                tries_second += 1
                history.pseudo_empty_resamples += 1
                if tries_second > 10 * MAX_PAIR_RESAMPLES:
                    raise SelMixError("pseudo-labeled pools collapsed; cannot draw a pair")
            idx = min(int(np.searchsorted(cdf, rng.random(), side="right")), k * k - 1)
            y1[n], y2[n] = divmod(idx, k)
    return y1, y2


def _cycle_policy(cfg: TrainerConfig, gains: GainMatrix) -> MixPolicy:
    if cfg.policy == "uniform":
        return uniform_distribution(gains.values.shape[0])
    if cfg.policy == "greedy":
        return greedy_distribution(gains)
    return selmix_distribution(gains, cfg.s, cfg.mask_negative)


def run_selmix(
    config: TrainerConfig,
    train: FeatureDataset,
    unlabeled: FeatureDataset | None,
    validation: FeatureDataset,
    init: LinearModel,
) -> tuple[LinearModel, RunHistory]:
    """Run the full fine-tuning loop and return (final model, history).

    The recorded wall_ms field is kept at 0.0 so history files are byte
    reproducible across runs; real timing goes to ``history.wall_ms_total``
    only.
    """
    k = validation.num_classes
    if np.any(validation.class_counts() == 0):
        missing = int(np.flatnonzero(validation.class_counts() == 0)[0])
        raise SelMixError(f"class {missing} absent from validation set")
    if config.mode == "ssl" and unlabeled is None:
        raise SelMixError("ssl mode requires an unlabeled set")
    if init.classes != k or init.dim != train.dim:
        raise SelMixError("init model shape does not match the data")

    started = time.perf_counter()
    ss = np.random.SeedSequence(config.seed)
    pair_rng, beta_rng, elem_rng, _shuffle_rng = (np.random.default_rng(s) for s in ss.spawn(4))

    model = init
    # frozen features: validation centroids never move, compute them once
    centroids: CentroidSet = class_centroids(validation)
    second_pool = train
    if config.mode == "ssl":
        second_pool = refresh_pseudo_labels(model, unlabeled)

    history = RunHistory()
    train_idx = train.class_indices()
    total_steps = max(config.cycles * config.sgd_steps_per_cycle, 1)
    spec = config.metric
    global_step = 0

    # gradient-input smoothing: half a count keeps collapsed prediction
    # columns visible to the reparameterized gradient (recorded metrics and
    # multipliers still use the exact confusion matrix)
    grad_floor = 0.5 / validation.n

    for t in range(1, config.cycles + 1):
        confusion = model_confusion(model, validation)
        lam = update_lagrange(spec, confusion)
        psi = evaluate_metric(spec, confusion, lam)
        grad_input = confusion.with_floor(grad_floor).with_clamped_diagonal()
        gains = gain_matrix(model, centroids, grad_input, spec, lam, config.beta_bar)
        policy = _cycle_policy(config, gains)
        history.records.append(
            CycleRecord(
                t=t,
                psi=float(psi),
                recalls=[float(r) for r in confusion.recalls()],
                coverages=[float(c) for c in confusion.coverages()],
                lambdas=[float(v) for v in lam.lambdas],
                gain_max=float(gains.values.max()),
                gain_min=float(gains.values.min()),
                policy_entropy=policy.entropy(),
                wall_ms=0.0,
            )
        )

        second_idx = second_pool.class_indices()
        first_nonempty = np.array([idx.size > 0 for idx in train_idx])
        second_nonempty = np.array([idx.size > 0 for idx in second_idx])
        for _ in range(config.sgd_steps_per_cycle):
            y1, y2 = _draw_pairs(
                policy, config.batch_size, pair_rng, first_nonempty, second_nonempty, history
            )
            u1, u2 = elem_rng.random(config.batch_size), elem_rng.random(config.batch_size)
            betas = beta_rng.uniform(config.beta_min, 1.0, size=config.batch_size)
            batch = []
            for n in range(config.batch_size):
                pool1, pool2 = train_idx[y1[n]], second_idx[y2[n]]
                x1 = train.features[pool1[int(u1[n] * pool1.size)]]
                x2 = second_pool.features[pool2[int(u2[n] * pool2.size)]]
                batch.append(MixupSample(x1, x2, int(y1[n]), float(betas[n])))
            lr = config.lr
            if config.lr_schedule == "cosine":
                lr = cosine_lr(config.lr, global_step, total_steps)
            model = sgd_mixup_step(model, batch, lr)
            global_step += 1
            history.sgd_steps += 1

        if config.mode == "ssl":
            second_pool = refresh_pseudo_labels(model, unlabeled)

    final_conf = model_confusion(model, validation)
    history.final_psi = float(
        evaluate_metric(spec, final_conf, update_lagrange(spec, final_conf))
    )
    history.wall_ms_total = (time.perf_counter() - started) * 1000.0
    return model, history
