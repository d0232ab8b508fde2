"""Gaussian MLP policy with a hand-derived PPO clipped-surrogate gradient.

The network is stored as one flat weight vector so evolution strategies can
perturb and recombine it directly; layer k contributes a (fan_in, fan_out)
weight block followed by a fan_out bias, in order.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from mtrbench.errors import UpdateRejectedError


logger = logging.getLogger(__name__)

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def n_weights(layer_sizes: Sequence[int]) -> int:
    return sum((fan_in + 1) * fan_out for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]))


@dataclass(frozen=True, eq=False)
class PolicyNet:
    layer_sizes: Tuple[int, ...]
    weights: np.ndarray
    log_std: np.ndarray

    def __post_init__(self) -> None:
        if len(self.layer_sizes) < 2:
            raise ValueError("layer_sizes needs an input and an output size")
        if self.weights.shape != (n_weights(self.layer_sizes),):
            raise ValueError(
                f"weights has length {self.weights.size}, expected {n_weights(self.layer_sizes)}"
            )
        if self.log_std.shape != (self.layer_sizes[-1],):
            raise ValueError("log_std must have one entry per action dimension")
        if np.any(self.log_std < LOG_STD_MIN) or np.any(self.log_std > LOG_STD_MAX):
            raise ValueError(f"log_std must lie in [{LOG_STD_MIN}, {LOG_STD_MAX}]")

    def layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        out = []
        offset = 0
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            w = self.weights[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out)
            offset += fan_in * fan_out
            b = self.weights[offset : offset + fan_out]
            offset += fan_out
            out.append((w, b))
        return out

    def with_params(self, weights: np.ndarray, log_std: np.ndarray) -> "PolicyNet":
        return PolicyNet(
            self.layer_sizes,
            np.asarray(weights, dtype=float),
            np.clip(np.asarray(log_std, dtype=float), LOG_STD_MIN, LOG_STD_MAX),
        )

    @property
    def flat(self) -> np.ndarray:
        """Weights and log_std as one vector."""
        return np.concatenate([self.weights, self.log_std])


def init_policy(
    layer_sizes: Sequence[int],
    rng: np.random.Generator,
    log_std: float = 0.0,
    output_scale: float = 0.01,
) -> PolicyNet:
    parts = []
    sizes = list(layer_sizes)
    for idx, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        scale = 1.0 / np.sqrt(fan_in)
        if idx == len(sizes) - 2:
            scale *= output_scale
        parts.append((rng.standard_normal((fan_in, fan_out)) * scale).ravel())
        parts.append(np.zeros(fan_out))
    return PolicyNet(tuple(sizes), np.concatenate(parts), np.full(sizes[-1], float(log_std)))


def _forward(net: PolicyNet, states: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    h = np.atleast_2d(np.asarray(states, dtype=float))
    activations = [h]
    layers = net.layers()
    for w, b in layers[:-1]:
        h = np.tanh(h @ w + b)
        activations.append(h)
    w, b = layers[-1]
    return h @ w + b, activations


def policy_forward(net: PolicyNet, state: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Return (action mean, action std); batched when ``state`` is 2-D."""
    mean, _ = _forward(net, state)
    std = np.exp(net.log_std)
    if np.ndim(state) == 1:
        return mean[0], std
    return mean, std


def log_prob(mean: np.ndarray, log_std: np.ndarray, actions: np.ndarray) -> np.ndarray:
    z = (actions - mean) / np.exp(log_std)
    return (-0.5 * z**2 - log_std - _HALF_LOG_2PI).sum(axis=-1)


def sample_action(net: PolicyNet, state: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, float]:
    mean, std = policy_forward(net, state)
    action = mean + std * rng.standard_normal(mean.shape)
    return action, float(log_prob(mean, net.log_std, action))


@dataclass(frozen=True)
class Rollout:
    states: np.ndarray
    actions: np.ndarray
    log_prob_old: np.ndarray
    rewards: np.ndarray

    def __post_init__(self) -> None:
        if len(self.rewards) == 0:
            raise ValueError("rollout is empty")

    @classmethod
    def from_steps(cls, steps: Sequence[Tuple[np.ndarray, np.ndarray, float, float]]) -> "Rollout":
        states, actions, logp, rewards = zip(*steps)
        return cls(np.array(states, dtype=float), np.array(actions, dtype=float), np.array(logp), np.array(rewards))

    def __len__(self) -> int:
        return len(self.rewards)


def surrogate_loss(net: PolicyNet, rollout: Rollout, clip_eps: float) -> float:
    return loss_and_grad(net, rollout, clip_eps)[0]


def loss_and_grad(net: PolicyNet, rollout: Rollout, clip_eps: float) -> Tuple[float, np.ndarray]:
    """Clipped surrogate loss and its gradient with respect to ``net.flat``."""
    n = len(rollout)
    advantages = rollout.rewards - rollout.rewards.mean()
    mean, activations = _forward(net, rollout.states)
    logp = log_prob(mean, net.log_std, rollout.actions)
    ratio = np.exp(logp - rollout.log_prob_old)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantages
    loss = -float(np.minimum(unclipped, clipped).mean())

    # d loss / d logp: only samples where the unclipped term is the minimum carry gradient.
    dlogp = np.where(unclipped <= clipped, -advantages * ratio / n, 0.0)

    inv_var = np.exp(-2.0 * net.log_std)
    diff = rollout.actions - mean
    grad_log_std = (dlogp[:, None] * (diff**2 * inv_var - 1.0)).sum(axis=0)
    delta = dlogp[:, None] * diff * inv_var

    grads = []
    layers = net.layers()
    for k in range(len(layers) - 1, -1, -1):
        w, _ = layers[k]
        h_in = activations[k]
        grads.append((h_in.T @ delta, delta.sum(axis=0)))
        if k > 0:
            delta = (delta @ w.T) * (1.0 - h_in**2)
    flat = [part for gw, gb in reversed(grads) for part in (gw.ravel(), gb)]
    return loss, np.concatenate(flat + [grad_log_std])


def ppo_update(net: PolicyNet, rollout: Rollout, lr: float, clip_eps: float) -> PolicyNet:
    """One gradient-descent step on the clipped surrogate."""
    loss, grad = loss_and_grad(net, rollout, clip_eps)
    if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
        raise UpdateRejectedError(f"non-finite PPO loss or gradient (loss={loss})")
    step = net.flat - lr * grad
    split = net.weights.size
    return net.with_params(step[:split], step[split:])


def numerical_gradient(net: PolicyNet, rollout: Rollout, clip_eps: float, h: float = 1e-5) -> np.ndarray:
    base = net.flat
    split = net.weights.size
    grad = np.zeros_like(base)
    for i in range(base.size):
        values = []
        for sign in (1.0, -1.0):
            nudged = base.copy()
            nudged[i] += sign * h
            shifted = PolicyNet(net.layer_sizes, nudged[:split], nudged[split:])
            values.append(surrogate_loss(shifted, rollout, clip_eps))
        grad[i] = (values[0] - values[1]) / (2.0 * h)
    return grad


def gradient_check(net: PolicyNet, rollout: Rollout, clip_eps: float = 0.2, h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients."""
    _, analytic = loss_and_grad(net, rollout, clip_eps)
    numeric = numerical_gradient(net, rollout, clip_eps, h)
    scale = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / scale))


def random_rollout(net: PolicyNet, n: int, rng: np.random.Generator, logp_jitter: float = 0.3) -> Rollout:
    """Synthetic rollout with old log-probs jittered so some ratios leave the clip band."""
    states = rng.uniform(-1.0, 1.0, size=(n, net.layer_sizes[0]))
    mean, std = policy_forward(net, states)
    actions = mean + std * rng.standard_normal(mean.shape)
    logp = log_prob(mean, net.log_std, actions) + logp_jitter * rng.standard_normal(n)
    return Rollout(states, actions, logp, rng.standard_normal(n))
