"""Confusion-matrix construction, objective evaluation, analytic gradients
through the softmax reparameterization, and Lagrange-multiplier schedules.

The confusion matrix C is K x K with C[i, j] the joint probability of true
class i and predicted class j, so row i sums to the class prior pi_i.  For
differentiation C is reparameterized row-wise as C_i = pi_i * softmax(Ct_i)
with an unconstrained matrix Ct; every objective here has a gradient w.r.t.
Ct that is expressible purely in terms of C:

    dC[i,l]/dCt[i,j] = C[i,j] - C[i,j]^2 / pi_i   (l == j)
                     = -C[i,l] C[i,j] / pi_i      (l != j)

(diagonal denominator pi_i, not pi_i^2 -- the chain rule through the row
softmax fixes it, and the finite-difference tests pin it down).  Lagrange
multipliers are treated as constants during differentiation and refreshed
once per validation cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .classifier import LinearModel, batch_logits, softmax
from .data import FeatureDataset
from .errors import DataError, SelMixError

MEAN_RECALL = "mean_recall"
G_MEAN = "g_mean"
H_MEAN = "h_mean"
MIN_RECALL = "min_recall"
MIN_RECALL_HEAD_TAIL = "min_recall_head_tail"
MEAN_RECALL_COVERAGE = "mean_recall_coverage"
H_MEAN_COVERAGE = "h_mean_coverage"
MEAN_RECALL_COVERAGE_HEAD_TAIL = "mean_recall_coverage_head_tail"
H_MEAN_COVERAGE_HEAD_TAIL = "h_mean_coverage_head_tail"

METRIC_KINDS = (
    MEAN_RECALL,
    G_MEAN,
    H_MEAN,
    MIN_RECALL,
    MIN_RECALL_HEAD_TAIL,
    MEAN_RECALL_COVERAGE,
    H_MEAN_COVERAGE,
    MEAN_RECALL_COVERAGE_HEAD_TAIL,
    H_MEAN_COVERAGE_HEAD_TAIL,
)
HEAD_TAIL_KINDS = (
    MIN_RECALL_HEAD_TAIL,
    MEAN_RECALL_COVERAGE_HEAD_TAIL,
    H_MEAN_COVERAGE_HEAD_TAIL,
)
COVERAGE_KINDS = (
    MEAN_RECALL_COVERAGE,
    H_MEAN_COVERAGE,
    MEAN_RECALL_COVERAGE_HEAD_TAIL,
    H_MEAN_COVERAGE_HEAD_TAIL,
)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Joint (true, predicted) probability matrix with its row priors."""

    entries: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.entries, dtype=np.float64)
        pi = np.asarray(self.priors, dtype=np.float64)
        object.__setattr__(self, "entries", c)
        object.__setattr__(self, "priors", pi)
        k = pi.shape[0]
        if c.shape != (k, k):
            raise SelMixError("entries must be K x K matching priors")
        if np.any(c < -1e-12) or np.any(pi <= 0):
            raise SelMixError("entries must be nonnegative and priors positive")
        if abs(c.sum() - 1.0) > 1e-9:
            raise SelMixError("confusion entries must sum to 1")
        if np.max(np.abs(c.sum(axis=1) - pi)) > 1e-9:
            raise SelMixError("row sums must equal priors")
        if abs(pi.sum() - 1.0) > 1e-9:
            raise SelMixError("priors must sum to 1")

    @property
    def k(self) -> int:
        return self.priors.shape[0]

    def recalls(self) -> np.ndarray:
        return np.diag(self.entries) / self.priors

    def coverages(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def with_clamped_diagonal(self, eps: float = 1e-12) -> "ConfusionMatrix":
        """Copy with diagonal entries floored at eps (degenerate-recall guard
        before gradient calls; the perturbation stays inside the 1e-9
        invariant tolerance)."""
        c = self.entries.copy()
        idx = np.arange(self.k)
        c[idx, idx] = np.maximum(c[idx, idx], eps)
        return ConfusionMatrix(c, self.priors)

    def with_floor(self, eps: float) -> "ConfusionMatrix":
        """Copy with every entry floored at eps and rows rescaled back to
        their priors.

        The row softmax parameterization has a vanishing gradient wherever
        an entry is exactly zero, so a class whose prediction column
        collapses would otherwise stop producing any restoring signal.
        Flooring at a fraction of one count keeps that signal alive without
        visibly distorting the estimate."""
        if eps <= 0:
            return self
        c = np.maximum(self.entries, eps)
        c *= (self.priors / c.sum(axis=1))[:, None]
        return ConfusionMatrix(c, self.priors)


@dataclass(frozen=True)
class MetricSpec:
    """Which objective to optimize, with its relaxation constants.

    ``head_set`` (for the head/tail variants) defaults to all but the last
    ceil(K/10) classes; the complement is the tail.
    """

    kind: str
    omega: float = 40.0
    alpha: float = 0.95
    lambda_max: float = 100.0
    tau: float = 0.01
    head_set: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise SelMixError(f"unknown metric kind {self.kind!r}")
        if self.omega <= 0 or self.lambda_max <= 0 or self.tau <= 0:
            raise SelMixError("omega, lambda_max, tau must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise SelMixError("alpha must lie in (0, 1]")
        if self.head_set is not None:
            object.__setattr__(self, "head_set", tuple(sorted(set(self.head_set))))

    def head_tail(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """(head, tail) index arrays; the default tail is the last ceil(K/10)
        classes (least frequent under the long-tailed ordering)."""
        if self.head_set is None:
            head = np.arange(k - ceil(k / 10))
        else:
            head = np.asarray(self.head_set, dtype=np.int64)
            if head.size and (head.min() < 0 or head.max() >= k):
                raise SelMixError("head_set indices out of range")
        tail = np.setdiff1d(np.arange(k), head)
        if self.kind in HEAD_TAIL_KINDS and (head.size == 0 or tail.size == 0):
            raise SelMixError("head_set must be a nonempty proper subset for head/tail kinds")
        return head, tail


@dataclass(frozen=True)
class LagrangeState:
    """Multiplier vector: simplex weights for min-recall kinds, clamped
    nonnegative penalties for coverage kinds, empty otherwise."""

    lambdas: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "lambdas", np.asarray(self.lambdas, dtype=np.float64))


def neutral_lagrange(spec: MetricSpec, k: int) -> LagrangeState:
    """State usable before the first update: uniform simplex for min-recall
    kinds, zeros for coverage kinds, empty for unconstrained kinds."""
    if spec.kind == MIN_RECALL:
        return LagrangeState(np.full(k, 1.0 / k))
    if spec.kind == MIN_RECALL_HEAD_TAIL:
        return LagrangeState(np.full(2, 0.5))
    if spec.kind in (MEAN_RECALL_COVERAGE, H_MEAN_COVERAGE):
        return LagrangeState(np.zeros(k))
    if spec.kind in (MEAN_RECALL_COVERAGE_HEAD_TAIL, H_MEAN_COVERAGE_HEAD_TAIL):
        return LagrangeState(np.zeros(2))
    return LagrangeState()


def validate_lagrange(spec: MetricSpec, lam: LagrangeState, k: int) -> None:
    lams = lam.lambdas
    if spec.kind in (MIN_RECALL, MIN_RECALL_HEAD_TAIL):
        size = k if spec.kind == MIN_RECALL else 2
        if lams.shape != (size,) or np.any(lams < -1e-12) or abs(lams.sum() - 1.0) > 1e-9:
            raise SelMixError("min-recall multipliers must lie on the simplex")
    elif spec.kind in COVERAGE_KINDS:
        size = 2 if spec.kind in HEAD_TAIL_KINDS else k
        if lams.shape != (size,) or np.any(lams < -1e-12) or np.any(lams > spec.lambda_max + 1e-9):
            raise SelMixError("coverage multipliers must lie in [0, lambda_max]")


def confusion_from_predictions(labels, predictions, num_classes: int) -> ConfusionMatrix:
    """Empirical hard confusion matrix: entries[i, j] = #\\{y=i, yhat=j\\} / N."""
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    if labels.size == 0:
        raise DataError("empty evaluation set")
    if labels.shape != predictions.shape:
        raise DataError("labels and predictions must have the same length")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise DataError("label outside [0, K)")
    if predictions.min() < 0 or predictions.max() >= num_classes:
        raise DataError("prediction outside [0, K)")
    counts = np.bincount(labels * num_classes + predictions, minlength=num_classes**2)
    entries = counts.reshape(num_classes, num_classes) / labels.size
    priors = entries.sum(axis=1)
    for i in range(num_classes):
        if priors[i] == 0:
            raise DataError(f"class {i} absent from evaluation set")
    return ConfusionMatrix(entries, priors)


def model_confusion(model: LinearModel, features: FeatureDataset) -> ConfusionMatrix:
    """Hard confusion of the model's argmax predictions on a labeled set."""
    return confusion_from_predictions(
        features.labels, np.argmax(batch_logits(model, features.features), axis=1),
        features.num_classes,
    )


def soft_confusion(model: LinearModel, features: FeatureDataset) -> ConfusionMatrix:
    """Surrogate confusion with softmax probabilities replacing the argmax
    indicator; smooth in W, used by the finite-difference gain oracle."""
    if features.n == 0:
        raise DataError("empty evaluation set")
    probs = softmax(batch_logits(model, features.features), axis=1)
    k = features.num_classes
    entries = np.zeros((k, k))
    for i, idx in enumerate(features.class_indices()):
        if idx.size == 0:
            raise DataError(f"class {i} absent from evaluation set")
        entries[i] = probs[idx].sum(axis=0)
    entries /= features.n
    return ConfusionMatrix(entries, entries.sum(axis=1))


def unconstrained_to_confusion(c_tilde: np.ndarray, priors: np.ndarray) -> ConfusionMatrix:
    """Map an unconstrained matrix back through C_i = pi_i * softmax(Ct_i)."""
    c_tilde = np.asarray(c_tilde, dtype=np.float64)
    priors = np.asarray(priors, dtype=np.float64)
    if not np.all(np.isfinite(c_tilde)):
        raise SelMixError("unconstrained matrix must be finite")
    if np.any(priors <= 0) or abs(priors.sum() - 1.0) > 1e-9:
        raise SelMixError("priors must be positive and sum to 1")
    entries = priors[:, None] * softmax(c_tilde, axis=1)
    return ConfusionMatrix(entries, priors)


def _group_coverages(c: ConfusionMatrix, head: np.ndarray, tail: np.ndarray) -> np.ndarray:
    cov = c.coverages()
    return np.array([cov[head].mean(), cov[tail].mean()])


def evaluate_metric(spec: MetricSpec, c: ConfusionMatrix, lam: LagrangeState) -> float:
    """psi(C) for the given kind, with the current multipliers plugged in.

    G-mean and H-mean return their limit value 0 when any diagonal entry is
    zero instead of dividing by zero.
    """
    validate_lagrange(spec, lam, c.k)
    rec = c.recalls()
    k = c.k

    def base(kind: str) -> float:
        if kind == MEAN_RECALL:
            return float(rec.mean())
        if kind == G_MEAN:
            if np.any(rec <= 0):
                return 0.0
            return float(np.exp(np.log(rec).mean()))
        if kind == H_MEAN:
            if np.any(rec <= 0):
                return 0.0
            return float(k / np.sum(1.0 / rec))
        raise SelMixError(kind)

    if spec.kind in (MEAN_RECALL, G_MEAN, H_MEAN):
        return base(spec.kind)
    if spec.kind == MIN_RECALL:
        return float(lam.lambdas @ rec)
    if spec.kind == MIN_RECALL_HEAD_TAIL:
        head, tail = spec.head_tail(k)
        return float(lam.lambdas @ [rec[head].mean(), rec[tail].mean()])
    target = spec.alpha / k
    if spec.kind in (MEAN_RECALL_COVERAGE, H_MEAN_COVERAGE):
        kind = MEAN_RECALL if spec.kind == MEAN_RECALL_COVERAGE else H_MEAN
        return base(kind) + float(lam.lambdas @ (c.coverages() - target))
    head, tail = spec.head_tail(k)
    kind = MEAN_RECALL if spec.kind == MEAN_RECALL_COVERAGE_HEAD_TAIL else H_MEAN
    return base(kind) + float(lam.lambdas @ (_group_coverages(c, head, tail) - target))


def _dpsi_dc(spec: MetricSpec, c: ConfusionMatrix, lam: LagrangeState) -> np.ndarray:
    """Partial derivatives of psi w.r.t. the confusion entries themselves
    (multipliers held constant)."""
    k = c.k
    rec = c.recalls()
    diag = np.diag(c.entries)
    out = np.zeros((k, k))
    idx = np.arange(k)

    def add_base(kind: str) -> None:
        if kind == MEAN_RECALL:
            out[idx, idx] += 1.0 / (k * c.priors)
        elif kind == G_MEAN:
            psi = np.exp(np.log(rec).mean())
            out[idx, idx] += psi / (k * diag)
        elif kind == H_MEAN:
            psi = k / np.sum(1.0 / rec)
            out[idx, idx] += psi**2 * c.priors / (k * diag**2)

    if spec.kind in (G_MEAN, H_MEAN, H_MEAN_COVERAGE, H_MEAN_COVERAGE_HEAD_TAIL):
        if np.any(diag <= 0):
            raise SelMixError("metric gradient undefined at zero recall")
    if spec.kind in (MEAN_RECALL, G_MEAN, H_MEAN):
        add_base(spec.kind)
    elif spec.kind == MIN_RECALL:
        out[idx, idx] += lam.lambdas / c.priors
    elif spec.kind == MIN_RECALL_HEAD_TAIL:
        head, tail = spec.head_tail(k)
        out[head, head] += lam.lambdas[0] / (head.size * c.priors[head])
        out[tail, tail] += lam.lambdas[1] / (tail.size * c.priors[tail])
    elif spec.kind in (MEAN_RECALL_COVERAGE, H_MEAN_COVERAGE):
        add_base(MEAN_RECALL if spec.kind == MEAN_RECALL_COVERAGE else H_MEAN)
        out += lam.lambdas[None, :]
    else:
        add_base(MEAN_RECALL if spec.kind == MEAN_RECALL_COVERAGE_HEAD_TAIL else H_MEAN)
        head, tail = spec.head_tail(k)
        out[:, head] += lam.lambdas[0] / head.size
        out[:, tail] += lam.lambdas[1] / tail.size
    return out


def metric_grad_unconstrained(
    spec: MetricSpec, c: ConfusionMatrix, lam: LagrangeState
) -> np.ndarray:
    """d psi / d Ct through the row-softmax reparameterization.

    Every row of the result sums to 0 (psi is invariant to constant shifts
    of a Ct row).
    """
    validate_lagrange(spec, lam, c.k)
    p = _dpsi_dc(spec, c, lam)
    # row-wise: Ct_ij gradient = C_ij * (P_ij - sum_l P_il C_il / pi_i)
    weighted = (p * c.entries).sum(axis=1) / c.priors
    return c.entries * (p - weighted[:, None])


def update_lagrange(spec: MetricSpec, c: ConfusionMatrix) -> LagrangeState:
    """Momentum-free multiplier refresh.

    Min-recall kinds: softmax(-omega * recall), concentrating on the worst
    classes.  Coverage kinds: lambda_j = max(0, lambda_max * (1 -
    exp((cov_j - alpha/K) / tau))), clamped at zero exactly when the
    constraint is met.
    """
    rec = c.recalls()
    k = c.k
    if spec.kind == MIN_RECALL:
        return LagrangeState(softmax(-spec.omega * rec))
    if spec.kind == MIN_RECALL_HEAD_TAIL:
        head, tail = spec.head_tail(k)
        return LagrangeState(softmax(-spec.omega * np.array([rec[head].mean(), rec[tail].mean()])))
    if spec.kind in COVERAGE_KINDS:
        if spec.kind in HEAD_TAIL_KINDS:
            head, tail = spec.head_tail(k)
            cov = _group_coverages(c, head, tail)
        else:
            cov = c.coverages()
        slack = (cov - spec.alpha / k) / spec.tau
        lam = spec.lambda_max * (1.0 - np.exp(np.minimum(slack, 0.0)))
        return LagrangeState(np.where(slack >= 0.0, 0.0, lam))
    return LagrangeState()
