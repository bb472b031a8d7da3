"""
Central finite-difference checks of tape gradients.
"""

from dataclasses import dataclass, field

import numpy as np

from vad_vae.vad_vae.tensor.tensor import Tape, backward, no_grad, use_tape


@dataclass
class GradcheckResult:
	ok: bool
	max_abs_error: float
	max_rel_error: float
	failures: list = field(default_factory=list)


def numerical_gradient(fn, inputs, eps=1e-5):
	"""d fn(*inputs) / d input by central differences, one array per input.

	`fn` must return a scalar Tensor. Input data is swapped for perturbed
	copies and restored afterwards.
	"""
	grads = []
	with no_grad():
		for tensor in inputs:
			original = tensor.data
			grad = np.zeros_like(original)
			for i in range(original.size):
				bumped = original.copy()
				bumped.flat[i] += eps
				tensor.data = bumped
				upper = fn(*inputs).item()
				bumped = original.copy()
				bumped.flat[i] -= eps
				tensor.data = bumped
				lower = fn(*inputs).item()
				grad.flat[i] = (upper - lower) / (2.0 * eps)
			tensor.data = original
			grads.append(grad)
	return grads


def analytic_gradient(fn, inputs):
	"""Gradients of fn(*inputs) from a fresh tape."""
	for tensor in inputs:
		tensor.grad = None
	with use_tape(Tape()):
		loss = fn(*inputs)
		backward(loss)
	return [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]


def check_gradients(fn, inputs, eps=1e-5, rtol=1e-5, atol=1e-7):
	"""Compare tape gradients with central differences.

	An element passes when |analytic - numeric| <= atol, or when the relative
	error |analytic - numeric| / max(|analytic|, |numeric|) is below rtol.

	Args:
		fn: Callable taking the input tensors and returning a scalar Tensor
		inputs: Tensors with requires_grad=True
		eps: Finite-difference step
		rtol: Relative tolerance
		atol: Absolute tolerance near zero

	Returns:
		GradcheckResult: ok flag, worst errors and the failing (input, index) pairs
	"""
	analytic = analytic_gradient(fn, inputs)
	numeric = numerical_gradient(fn, inputs, eps)
	max_abs = 0.0
	max_rel = 0.0
	failures = []
	for position, (a, n) in enumerate(zip(analytic, numeric, strict=True)):
		diff = np.abs(a - n)
		scale = np.maximum(np.abs(a), np.abs(n))
		rel = np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), 0.0)
		max_abs = max(max_abs, float(diff.max(initial=0.0)))
		max_rel = max(max_rel, float(np.where(diff > atol, rel, 0.0).max(initial=0.0)))
		bad = (diff > atol) & (rel > rtol)
		failures.extend((position, int(i)) for i in np.flatnonzero(bad))
	return GradcheckResult(ok=not failures, max_abs_error=max_abs, max_rel_error=max_rel, failures=failures)
