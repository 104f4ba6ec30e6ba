"""Bernoulli Naive Bayes and L2 logistic regression over binary token features."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from .errors import NoDataError, ParameterError, TrainingError, ValidationError

LR_GRAD_TOL = 1e-6
LR_MAX_ITER = 1000
# Newton polish builds a dense (V+1)^2 Hessian; skip it for wide problems.
_NEWTON_LIMIT = 2048


@dataclass(frozen=True)
class BinaryDocument:
    """A set of distinct token features with a binary label."""

    features: frozenset[str]
    label: int


def _check_corpus(docs: Sequence[BinaryDocument]) -> None:
    if not docs:
        raise NoDataError("empty training corpus")
    labels = {doc.label for doc in docs}
    if not labels <= {0, 1}:
        raise ValidationError("document labels must be 0 or 1")
    if len(labels) < 2:
        raise TrainingError("training corpus must contain both classes")


def _vocabulary(docs: Sequence[BinaryDocument]) -> tuple[str, ...]:
    vocab: set[str] = set()
    for doc in docs:
        vocab.update(doc.features)
    return tuple(sorted(vocab))


@dataclass(frozen=True)
class NBModel:
    """Bernoulli Naive Bayes with additive smoothing.

    ``log_feature_on[c, f]`` and ``log_feature_off[c, f]`` are the per-class
    log probabilities of feature f being present or absent; per class and
    feature they exponentiate and sum to one.
    """

    vocab: tuple[str, ...]
    feature_index: dict[str, int]
    log_prior: np.ndarray
    log_feature_on: np.ndarray
    log_feature_off: np.ndarray
    off_mass: np.ndarray
    alpha: float


def train_bernoulli_nb(docs: Sequence[BinaryDocument], alpha: float = 1.0) -> NBModel:
    """Estimate P(feature on | class) = (count_on + alpha) / (n_class + 2 alpha)."""
    if alpha <= 0:
        raise ParameterError("smoothing pseudocount must be positive")
    _check_corpus(docs)
    vocab = _vocabulary(docs)
    index = {f: i for i, f in enumerate(vocab)}
    n_class = np.zeros(2)
    on_counts = np.zeros((2, len(vocab)))
    for doc in docs:
        n_class[doc.label] += 1
        for f in doc.features:
            on_counts[doc.label, index[f]] += 1
    p_on = (on_counts + alpha) / (n_class[:, None] + 2.0 * alpha)
    log_on = np.log(p_on)
    log_off = np.log1p(-p_on)
    return NBModel(
        vocab=vocab,
        feature_index=index,
        log_prior=np.log(n_class / n_class.sum()),
        log_feature_on=log_on,
        log_feature_off=log_off,
        off_mass=log_off.sum(axis=1),
        alpha=float(alpha),
    )


def nb_posterior(model: NBModel, features: Iterable[str]) -> float:
    """P(y=1 | features), computed in log space over the full vocabulary.

    Absent vocabulary features contribute their off probability; features
    unseen at training time are ignored.
    """
    present = [model.feature_index[f] for f in set(features) if f in model.feature_index]
    joint = model.log_prior + model.off_mass
    if present:
        joint = joint + (model.log_feature_on[:, present] - model.log_feature_off[:, present]).sum(axis=1)
    return float(np.exp(joint[1] - np.logaddexp(joint[0], joint[1])))


@dataclass(frozen=True)
class LRModel:
    """Logistic regression over binary features with an unpenalized intercept."""

    vocab: tuple[str, ...]
    feature_index: dict[str, int]
    weights: np.ndarray
    intercept: float
    l2_strength: float

    def decision(self, features: Iterable[str]) -> float:
        present = [self.feature_index[f] for f in set(features) if f in self.feature_index]
        return float(self.intercept + self.weights[present].sum())

    def predict(self, features: Iterable[str]) -> float:
        z = self.decision(features)
        return float(np.exp(z - np.logaddexp(0.0, z)))


def nb_to_logistic(model: NBModel) -> LRModel:
    """Express a Naive Bayes posterior as the equivalent log-linear model."""
    llr_on = model.log_feature_on[1] - model.log_feature_on[0]
    llr_off = model.log_feature_off[1] - model.log_feature_off[0]
    weights = llr_on - llr_off
    intercept = (model.log_prior[1] - model.log_prior[0]) + (model.off_mass[1] - model.off_mass[0])
    return LRModel(
        vocab=model.vocab,
        feature_index=model.feature_index,
        weights=weights,
        intercept=float(intercept),
        l2_strength=0.0,
    )


def _design_matrix(docs: Sequence[BinaryDocument], index: dict[str, int]) -> sp.csr_matrix:
    rows: list[int] = []
    cols: list[int] = []
    for r, doc in enumerate(docs):
        for f in doc.features:
            col = index.get(f)
            if col is not None:
                rows.append(r)
                cols.append(col)
    data = np.ones(len(rows))
    return sp.csr_matrix((data, (rows, cols)), shape=(len(docs), len(index)))


def train_logistic_regression(
    docs: Sequence[BinaryDocument],
    l2_strength: float = 1.0,
    grad_tol: float = LR_GRAD_TOL,
    max_iter: int = LR_MAX_ITER,
) -> LRModel:
    """Maximize the summed log likelihood minus (l2_strength/2) * ||w||^2.

    The intercept is unpenalized.  Optimization runs until the penalized
    gradient infinity norm drops below ``grad_tol`` or the iteration cap is
    reached; hitting the cap warns rather than fails.
    """
    if l2_strength < 0:
        raise ParameterError("regularization strength must be nonnegative")
    _check_corpus(docs)
    vocab = _vocabulary(docs)
    index = {f: i for i, f in enumerate(vocab)}
    x = _design_matrix(docs, index)
    y = np.array([doc.label for doc in docs], dtype=float)
    num_features = len(vocab)

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        w = theta[:num_features]
        b = theta[num_features]
        z = x @ w + b
        mu = np.exp(z - np.logaddexp(0.0, z))
        value = -np.sum(y * z - np.logaddexp(0.0, z)) + 0.5 * l2_strength * np.dot(w, w)
        if not np.isfinite(value):
            raise TrainingError("logistic regression objective became non-finite")
        grad = np.append(x.T @ (mu - y) + l2_strength * w, np.sum(mu - y))
        return value, grad

    result = minimize(
        objective,
        np.zeros(num_features + 1),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": grad_tol / 2.0, "ftol": 1e-16},
    )
    theta = result.x
    iterations = int(result.nit)

    # L-BFGS can declare convergence on flat relative reductions while the
    # gradient still sits just above the target; finish with damped Newton
    # steps whenever the dense Hessian is affordable.
    def newton_step(current: np.ndarray) -> np.ndarray:
        w = current[:num_features]
        b = current[num_features]
        z = x @ w + b
        mu = np.exp(z - np.logaddexp(0.0, z))
        d = mu * (1.0 - mu)
        xd = x.multiply(d[:, None])
        hess = np.empty((num_features + 1, num_features + 1))
        hess[:num_features, :num_features] = (xd.T @ x).toarray() + l2_strength * np.eye(num_features)
        edge = np.asarray(xd.sum(axis=0)).ravel()
        hess[:num_features, num_features] = edge
        hess[num_features, :num_features] = edge
        hess[num_features, num_features] = d.sum()
        return np.linalg.solve(hess, objective(current)[1])

    if num_features <= _NEWTON_LIMIT:
        while iterations < max_iter and np.max(np.abs(objective(theta)[1])) >= grad_tol:
            value = objective(theta)[0]
            step = newton_step(theta)
            scale = 1.0
            candidate = theta - step
            while objective(candidate)[0] > value and scale > 1e-8:
                scale /= 2.0
                candidate = theta - scale * step
            theta = candidate
            iterations += 1

    grad_norm = float(np.max(np.abs(objective(theta)[1])))
    if grad_norm >= grad_tol:
        warnings.warn(
            f"logistic regression stopped after {iterations} iterations with "
            f"penalized-gradient norm {grad_norm:.2e} >= {grad_tol:.0e}",
            stacklevel=2,
        )
    return LRModel(
        vocab=vocab,
        feature_index=index,
        weights=theta[:num_features].copy(),
        intercept=float(theta[num_features]),
        l2_strength=float(l2_strength),
    )


class BinaryMetrics(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    f1: float


def evaluate_binary(predictions: Sequence[float], gold: Sequence[int]) -> BinaryMetrics:
    """Accuracy, precision, recall, and F1 with predictions thresholded at 0.5.

    Precision and recall default to 0 when undefined, and F1 is 0 whenever
    precision + recall is 0.
    """
    preds = np.asarray(predictions, dtype=float)
    truth = np.asarray(gold, dtype=float)
    if preds.size == 0:
        raise NoDataError("no predictions to evaluate")
    if preds.shape != truth.shape:
        raise ValidationError("predictions and gold labels differ in length")
    hard = preds >= 0.5
    pos = truth == 1.0
    tp = float(np.sum(hard & pos))
    fp = float(np.sum(hard & ~pos))
    fn = float(np.sum(~hard & pos))
    accuracy = float(np.mean(hard == pos))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return BinaryMetrics(accuracy, precision, recall, f1)


class GridResult(NamedTuple):
    value: float
    model: object
    score: float


def grid_select(
    candidates: Sequence[float],
    trainer: Callable[[float], object],
    metric: Callable[[object], float],
) -> GridResult:
    """Train one model per candidate and return the metric argmax.

    Exact ties on the metric resolve toward the smaller candidate value.
    """
    if not candidates:
        raise ParameterError("hyperparameter grid is empty")
    best: GridResult | None = None
    for value in candidates:
        model = trainer(value)
        score = metric(model)
        if best is None or score > best.score or (score == best.score and value < best.value):
            best = GridResult(value=value, model=model, score=score)
    return best
