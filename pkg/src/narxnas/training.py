"""Gradient training of fixed-architecture genomes.

Training is series-parallel (teacher forcing): the delayed outputs fed to the
network are taken from the target sequence, so every one-step prediction is
independent and the whole sample set is processed as one batch.  Fitness is
still measured in free-run mode by :mod:`narxnas.fitness`.

Three trainers are provided: Levenberg-Marquardt, Levenberg-Marquardt with a
fixed L2 weight penalty standing in for Bayesian regularisation, and
Moller's scaled conjugate gradient.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .genome import Genome, random_genome


class TrainerKind(enum.Enum):
    LEVENBERG_MARQUARDT = "lm"
    BAYESIAN_REGULARIZATION = "br"
    SCALED_CONJUGATE_GRADIENT = "scg"


@dataclass(frozen=True)
class TrainSpec:
    kind: TrainerKind = TrainerKind.LEVENBERG_MARQUARDT
    max_epochs: int = 200
    loss_tolerance: float = 0.0
    damping_init: float = 1e-3
    l2_strength: float = 1e-4
    min_improvement: float = 1e-9
    patience: int = 10

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if self.loss_tolerance < 0 or self.damping_init <= 0 or self.l2_strength < 0:
            raise ValueError("tolerances and damping must be positive")

    @classmethod
    def from_config(cls, config, kind: TrainerKind | None = None) -> "TrainSpec":
        return cls(kind or TrainerKind(config.trainer), max_epochs=config.maxEpochs,
                   damping_init=config.dampingInit, l2_strength=config.l2Strength,
                   min_improvement=config.lossTol)


class TrainResult(NamedTuple):
    genome: Genome
    loss: float
    diverged: bool
    history: list


def regressors(dataset, du: int, dy: int) -> np.ndarray:
    """Teacher-forcing input matrix, one row ``[u(k)..u(k-du), y(k-1)..y(k-dy)]`` per sample."""
    u = np.asarray(dataset.inputs, dtype=np.float64)
    y = np.asarray(dataset.targets, dtype=np.float64)
    n = u.size
    if n <= max(du, dy):
        raise ValueError(f"dataset of {n} samples too short for du={du}, dy={dy}")
    up = np.concatenate([np.full(du, dataset.nominal_input), u])
    yp = np.concatenate([np.full(dy, dataset.nominal_output), y])
    cols = [up[du - i:du - i + n] for i in range(du + 1)]
    cols += [yp[dy - j:dy - j + n] for j in range(1, dy + 1)]
    return np.column_stack(cols)


def _forward(genome: Genome, x: np.ndarray):
    acts = [x]
    a = x
    for w in genome.hidden:
        a = np.tanh(a @ w[:, :-1].T + w[:, -1])
        acts.append(a)
    y = a @ genome.output[:-1] + genome.output[-1]
    return y, acts


def predict_one_step(genome: Genome, dataset) -> np.ndarray:
    y, _ = _forward(genome, regressors(dataset, genome.du, genome.dy))
    return y


def _with_ones(a: np.ndarray) -> np.ndarray:
    return np.hstack([a, np.ones((a.shape[0], 1))])


def residuals_and_jacobian(genome: Genome, x: np.ndarray, target: np.ndarray):
    """One-step residuals and their Jacobian w.r.t. ``genome.flat``.

    Rows are samples; columns follow the flat weight order.  Obtained by a
    reverse sweep from the output neuron back to the first hidden layer.
    """
    y, acts = _forward(genome, x)
    r = y - target
    n = x.shape[0]
    blocks = [_with_ones(acts[-1])]
    delta = genome.output[:-1][None, :] * (1.0 - acts[-1] ** 2)
    for li in range(len(genome.hidden) - 1, -1, -1):
        prev = _with_ones(acts[li])
        blocks.append((delta[:, :, None] * prev[:, None, :]).reshape(n, -1))
        if li > 0:
            delta = (delta @ genome.hidden[li][:, :-1]) * (1.0 - acts[li] ** 2)
    return r, np.hstack(blocks[::-1])


def teacher_forcing_loss_and_gradient(genome: Genome, dataset):
    """Mean squared one-step error and its gradient (aligned with ``genome.flat``)."""
    x = regressors(dataset, genome.du, genome.dy)
    return _loss_grad(genome, x, np.asarray(dataset.targets, dtype=np.float64))


def _loss_grad(genome: Genome, x: np.ndarray, target: np.ndarray):
    y, acts = _forward(genome, x)
    n = x.shape[0]
    r = y - target
    loss = float(r @ r) / n
    e = (2.0 / n) * r
    grads = [np.append(e @ acts[-1], e.sum())]
    delta = e[:, None] * genome.output[:-1][None, :] * (1.0 - acts[-1] ** 2)
    for li in range(len(genome.hidden) - 1, -1, -1):
        a = acts[li]
        gw = delta.T @ a
        gb = delta.sum(axis=0)
        grads.append(np.hstack([gw, gb[:, None]]).ravel())
        if li > 0:
            delta = (delta @ genome.hidden[li][:, :-1]) * (1.0 - a ** 2)
    return loss, np.concatenate(grads[::-1])


def levenberg_marquardt(residual_jac: Callable, theta0, max_epochs: int = 200,
                        damping: float = 1e-3, loss_tolerance: float = 0.0,
                        min_improvement: float = 1e-9, patience: int = 10,
                        damping_max: float = 1e10):
    """Minimise ``sum(r**2)`` for ``r, J = residual_jac(theta)``.

    Damping is divided by 10 after an accepted step and multiplied by 10
    after a rejected one.  Returns ``(theta, objective, history, diverged)``
    where ``history`` holds the objective after every accepted step.
    """
    theta = np.array(theta0, dtype=np.float64)
    r, jac = residual_jac(theta)
    obj = float(r @ r)
    history = [obj]
    if not np.isfinite(obj):
        return theta, obj, history, True
    mu = damping
    eye = np.eye(theta.size)
    for _ in range(max_epochs):
        if obj <= loss_tolerance:
            break
        g = jac.T @ r
        h = jac.T @ jac
        accepted = False
        while mu <= damping_max:
            try:
                step = np.linalg.solve(h + mu * eye, -g)
            except np.linalg.LinAlgError:
                mu *= 10
                continue
            cand = theta + step
            r_new, jac_new = residual_jac(cand)
            obj_new = float(r_new @ r_new)
            if np.isfinite(obj_new) and obj_new < obj:
                theta, r, jac, obj = cand, r_new, jac_new, obj_new
                mu = max(mu / 10, 1e-20)
                accepted = True
                break
            mu *= 10
        if not accepted:
            break
        history.append(obj)
        if len(history) > patience and history[-patience - 1] - obj < min_improvement:
            break
    return theta, obj, history, False


def scaled_conjugate_gradient(loss_grad: Callable, theta0, max_epochs: int = 200,
                              loss_tolerance: float = 0.0, min_improvement: float = 1e-9,
                              patience: int = 10, sigma0: float = 5e-5, lambda0: float = 5e-7):
    """Moller's scaled conjugate gradient on ``loss, grad = loss_grad(theta)``.

    Returns ``(theta, loss, history, diverged)``; ``history`` holds the loss
    after every accepted step.
    """
    w = np.array(theta0, dtype=np.float64)
    e, g = loss_grad(w)
    history = [e]
    if not np.isfinite(e):
        return w, e, history, True
    r = -g
    p = r.copy()
    lam, lam_bar = lambda0, 0.0
    success = True
    n_params = w.size
    delta = 0.0
    for k in range(1, max_epochs + 1):
        if e <= loss_tolerance:
            break
        p2 = float(p @ p)
        if p2 == 0.0:
            break
        if success:
            sigma = sigma0 / np.sqrt(p2)
            _, g_sigma = loss_grad(w + sigma * p)
            delta = float(p @ (g_sigma - g)) / sigma
        delta += (lam - lam_bar) * p2
        if delta <= 0:
            lam_bar = 2.0 * (lam - delta / p2)
            delta = -delta + lam * p2
            lam = lam_bar
        mu = float(p @ r)
        alpha = mu / delta
        w_new = w + alpha * p
        e_new, g_new = loss_grad(w_new)
        if not np.isfinite(e_new):
            return w, e, history, True
        comparison = 2.0 * delta * (e - e_new) / (mu * mu) if mu != 0 else -1.0
        if comparison >= 0 and e_new <= e:
            w, e, g = w_new, e_new, g_new
            r_new = -g
            lam_bar = 0.0
            success = True
            if k % n_params == 0:
                p = r_new.copy()
            else:
                beta = (float(r_new @ r_new) - float(r_new @ r)) / mu
                p = r_new + beta * p
            r = r_new
            if comparison >= 0.75:
                lam *= 0.25
            history.append(e)
            if len(history) > patience and history[-patience - 1] - e < min_improvement:
                break
        else:
            lam_bar = lam
            success = False
        if comparison < 0.25:
            lam += delta * (1.0 - comparison) / p2
        if not np.isfinite(lam) or lam > 1e50:
            break
    return w, e, history, False


def train(genome: Genome, dataset, spec: TrainSpec = TrainSpec(),
          rng: np.random.Generator | None = None) -> TrainResult:
    """Fit the genome's weights to the dataset; the architecture is unchanged.

    The trainers are deterministic given the starting weights; ``rng`` is
    accepted for interface symmetry with the randomised initialisers.
    """
    x = regressors(dataset, genome.du, genome.dy)
    target = np.asarray(dataset.targets, dtype=np.float64)
    n = x.shape[0]
    theta0 = genome.flat

    if spec.kind is TrainerKind.SCALED_CONJUGATE_GRADIENT:
        theta, _, history, diverged = scaled_conjugate_gradient(
            lambda th: _loss_grad(genome.with_flat(th), x, target), theta0,
            max_epochs=spec.max_epochs, loss_tolerance=spec.loss_tolerance,
            min_improvement=spec.min_improvement, patience=spec.patience)
    else:
        reg = spec.l2_strength if spec.kind is TrainerKind.BAYESIAN_REGULARIZATION else 0.0
        sq = np.sqrt(reg * n)
        eye = np.eye(theta0.size) * sq

        def residual_jac(th):
            r, jac = residuals_and_jacobian(genome.with_flat(th), x, target)
            if reg > 0:
                r = np.concatenate([r, sq * th])
                jac = np.vstack([jac, eye])
            return r, jac

        theta, _, history, diverged = levenberg_marquardt(
            residual_jac, theta0, max_epochs=spec.max_epochs, damping=spec.damping_init,
            loss_tolerance=spec.loss_tolerance * n, min_improvement=spec.min_improvement * n,
            patience=spec.patience)
        history = [h / n for h in history]
    trained = genome.with_flat(theta)
    loss, _ = _loss_grad(trained, x, target)
    return TrainResult(trained, loss, diverged or not np.isfinite(loss), history)


def train_from_scratch(layer_sizes, du: int, dy: int, dataset, spec: TrainSpec,
                       rng: np.random.Generator, min_w: float = -1.0,
                       max_w: float = 1.0) -> TrainResult:
    """Random initial weights in ``[min_w, max_w]`` followed by :func:`train`."""
    return train(random_genome(rng, layer_sizes, du, dy, min_w, max_w), dataset, spec, rng)
