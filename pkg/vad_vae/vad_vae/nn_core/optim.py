"""
Adam with decoupled weight decay and a linear warm-up of the learning rate.
"""

from dataclasses import dataclass, field

import numpy as np

import vad_vae
from vad_vae.vad_vae.tensor import DTYPE


@dataclass
class AdamState:
	lr: float
	"""Peak learning rate."""

	warmup_ratio: float = 0.2
	"""Fraction of the total steps spent ramping the learning rate up from 0."""

	weight_decay: float = 0.01
	"""Decoupled decay coefficient (applied as w -= lr * weight_decay * w)."""

	betas: tuple = (0.9, 0.999)
	eps: float = 1e-8
	step: int = 0
	m: dict = field(default_factory=dict)
	v: dict = field(default_factory=dict)


def warmup_learning_rate(step, peak, warmup_steps):
	"""peak * min(step / warmup_steps, 1); constant peak when there is no warm-up."""
	if warmup_steps <= 0:
		return peak
	return peak * min(step / warmup_steps, 1.0)


def adam_step(state, params, total_steps):
	"""Apply one AdamW update to `params` from their accumulated grads.

	Parameters without a grad are treated as having a zero gradient, so weight
	decay still applies to them. Parameter data is replaced by new arrays.

	Args:
		state: AdamState, updated in place
		params: dict name -> Tensor
		total_steps: Planned number of steps, sets the warm-up length
	"""
	warmup_steps = int(round(state.warmup_ratio * total_steps))
	state.step += 1
	lr = warmup_learning_rate(state.step, state.lr, warmup_steps)
	beta1, beta2 = state.betas

	if all(p.grad is None or not np.any(p.grad) for p in params.values()):
		vad_vae.logger("optim").warning(f"AdamW step {state.step} with all-zero gradients (was backward called?)")

	correction1 = 1.0 - beta1**state.step
	correction2 = 1.0 - beta2**state.step
	for name, param in params.items():
		grad = param.grad if param.grad is not None else np.zeros_like(param.data)
		m = state.m.get(name)
		v = state.v.get(name)
		if m is None:
			m = np.zeros_like(param.data, dtype=DTYPE)
			v = np.zeros_like(param.data, dtype=DTYPE)
		m = beta1 * m + (1.0 - beta1) * grad
		v = beta2 * v + (1.0 - beta2) * grad * grad
		state.m[name] = m
		state.v[name] = v
		update = (m / correction1) / (np.sqrt(v / correction2) + state.eps)
		param.data = param.data - lr * (update + state.weight_decay * param.data)
	return lr


class AdamW:
	"""Binds an AdamState to a fixed set of named parameters."""

	def __init__(self, params, lr, warmup_ratio=0.2, weight_decay=0.01):
		self.params = dict(params)
		self.state = AdamState(lr=lr, warmup_ratio=warmup_ratio, weight_decay=weight_decay)

	def step(self, total_steps):
		return adam_step(self.state, self.params, total_steps)

	def zero_grad(self):
		for param in self.params.values():
			param.grad = None
