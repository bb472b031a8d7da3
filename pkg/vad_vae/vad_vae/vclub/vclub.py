"""
Variational contrastive log-ratio upper bound (vCLUB) on the mutual information
between the Valence, Arousal and Dominance latents.

Each ordered pair (source -> target) has a Gaussian estimator q(y | x) whose mean
and log-variance come from two-layer tanh networks. The estimators are fitted by
maximum likelihood on detached latents; the model minimizes the bound through
frozen estimators.
"""

import math
from dataclasses import dataclass

import numpy as np

import vad_vae
from vad_vae.exceptions import DimensionError, UsageError
from vad_vae.vad_vae.nn_core import AdamW, Linear, Module
from vad_vae.vad_vae.nn_core.layers import add_bias
from vad_vae.vad_vae.tensor import Tape, as_tensor, backward, clamp, detach, matmul, no_grad, use_tape

PAIRS = (("V", "A"), ("V", "D"), ("A", "D"))
LOGVAR_BOUND = 8.0
LOG_2PI = math.log(2.0 * math.pi)


def pair_name(source, target):
	return f"{source}->{target}"


class MLP(Module):
	"""Linear -> tanh -> Linear."""

	def __init__(self, in_features, hidden, out_features, rng):
		self.hidden = Linear(in_features, hidden, rng)
		self.output = Linear(hidden, out_features, rng)

	def __call__(self, x, frozen=False):
		return _linear(self.output, _linear(self.hidden, x, frozen).tanh(), frozen)


def _linear(layer, x, frozen):
	if frozen:
		return add_bias(matmul(x, detach(layer.W)), detach(layer.b))
	return layer(x)


class PairEstimator(Module):
	def __init__(self, source, target, source_dim, target_dim, hidden, rng):
		self.source = source
		self.target = target
		self.source_dim = source_dim
		self.target_dim = target_dim
		self.mean_net = MLP(source_dim, hidden, target_dim, rng)
		self.logvar_net = MLP(source_dim, hidden, target_dim, rng)
		self.optimizer = None

	@property
	def name(self):
		return pair_name(self.source, self.target)

	def conditional(self, x, frozen=False):
		"""Mean and clamped log-variance of q(y | x), each [N x target_dim]."""
		if x.ndim != 2 or x.shape[1] != self.source_dim:
			vad_vae.throw(f"estimator {self.name} expects [N x {self.source_dim}], got {x.shape}", DimensionError)
		return self.mean_net(x, frozen), clamp(self.logvar_net(x, frozen), -LOGVAR_BOUND, LOGVAR_BOUND)

	def attach_optimizer(self, lr):
		"""Plain Adam: no warm-up, no weight decay."""
		self.optimizer = AdamW(self.parameters(), lr=lr, warmup_ratio=0.0, weight_decay=0.0)
		return self.optimizer


def _check_pair(x, y):
	if x.shape[0] != y.shape[0]:
		vad_vae.throw(f"batch sizes differ: {x.shape[0]} and {y.shape[0]}", DimensionError)


def estimator_loglik(est, x, y, frozen=False):
	"""Mean over samples of log q(y_k | x_k), a diagonal Gaussian density."""
	x, y = as_tensor(x), as_tensor(y)
	_check_pair(x, y)
	mean, logvar = est.conditional(x, frozen)
	per_dim = (y - mean).square() * (-logvar).exp() + logvar
	return (per_dim.sum() / x.shape[0] + y.shape[1] * LOG_2PI) * -0.5


def vclub_estimate(est, x, y, frozen=True):
	"""vCLUB: mean_k log q(y_k|x_k) - mean_k mean_l log q(y_l|x_k).

	The all-pairs negative term is expanded over the batch moments of y, so it is
	exact at O(N d) cost. Gradients reach x and y; with `frozen` they never reach
	the estimator's parameters.

	Raises:
		UsageError: If the batch has fewer than two samples
	"""
	x, y = as_tensor(x), as_tensor(y)
	_check_pair(x, y)
	n = x.shape[0]
	if n < 2:
		vad_vae.throw("vCLUB needs at least two samples", UsageError)

	mean, logvar = est.conditional(x, frozen)
	precision = (-logvar).exp()
	positive = ((y - mean).square() * precision).sum() / n
	# mean_l (y_l - m_k)^2 = mean(y^2) - 2 m_k mean(y) + m_k^2
	negative = (
		(precision.mean(axis=0) * y.square().mean(axis=0)).sum()
		- ((precision * mean).mean(axis=0) * y.mean(axis=0)).sum() * 2.0
		+ (precision * mean.square()).sum() / n
	)
	return (negative - positive) * 0.5


def mi_loss(estimators, z):
	"""Sum of the pair vCLUB estimates through frozen estimators.

	Args:
		estimators: dict pair name -> PairEstimator
		z: dict factor -> [N x d] latent tensor
	"""
	total = None
	for est in estimators.values():
		value = vclub_estimate(est, z[est.source], z[est.target], frozen=True)
		total = value if total is None else total + value
	return total


def estimator_update_step(estimators, latents):
	"""One ascent step on estimator_loglik per pair, on detached latents.

	Each estimator runs on its own tape, so the caller's tape is left alone.

	Returns:
		dict: pair name -> log-likelihood before the step
	"""
	logliks = {}
	for name, est in estimators.items():
		if est.optimizer is None:
			vad_vae.throw(f"estimator {name} has no optimizer attached", UsageError)
		x = detach(as_tensor(latents[est.source]))
		y = detach(as_tensor(latents[est.target]))
		est.optimizer.zero_grad()
		with use_tape(Tape()):
			loglik = estimator_loglik(est, x, y)
			backward(-loglik)
		est.optimizer.step(total_steps=1)
		logliks[name] = loglik.item()
	return logliks


def build_estimators(dims, lr, rng, hidden=None, pairs=PAIRS):
	"""One estimator per pair, hidden width `hidden` or twice the source latent size."""
	estimators = {}
	for source, target in pairs:
		est = PairEstimator(source, target, dims[source], dims[target], hidden or 2 * dims[source], rng)
		est.attach_optimizer(lr)
		estimators[est.name] = est
	return estimators


def fit_estimators(estimators, latents, steps, batch_size=None, rng=None):
	"""Run `steps` update steps on fixed latents (full batch, or random minibatches)."""
	n = len(next(iter(latents.values())))
	logliks = {}
	for _ in range(steps):
		if batch_size and batch_size < n:
			index = rng.choice(n, size=batch_size, replace=False)
			batch = {factor: np.asarray(values)[index] for factor, values in latents.items()}
		else:
			batch = latents
		logliks = estimator_update_step(estimators, batch)
	return logliks


@dataclass
class MiReport:
	pairs: dict
	"""pair name -> vCLUB estimate in nats."""

	@property
	def average(self):
		return float(np.mean(list(self.pairs.values()))) if self.pairs else float("nan")

	def to_dict(self):
		return {"pairs": dict(self.pairs), "average": self.average}


def mi_report(estimators, latents):
	"""vCLUB estimate of every pair on `latents` (dict factor -> [N x d] array)."""
	with no_grad():
		return MiReport(
			{
				name: vclub_estimate(est, latents[est.source], latents[est.target]).item()
				for name, est in estimators.items()
			}
		)


def split_latents(latents, rng):
	"""Shuffle the samples once and cut them into a fitting half and a scoring half."""
	n = len(next(iter(latents.values())))
	if n < 4:
		vad_vae.throw(f"a held-out estimate needs at least 4 samples, got {n}", UsageError)
	order = rng.permutation(n)
	halves = order[: n // 2], order[n // 2 :]
	return tuple({factor: np.asarray(values)[index] for factor, values in latents.items()} for index in halves)


def heldout_mi_report(estimators, latents, steps, rng, eval_every=10):
	"""Fit the estimators on one half of `latents` and report vCLUB on the other half.

	Every `eval_every` steps each estimator's log-likelihood on the scoring half
	is checked; the parameters with the best one are restored before reporting.
	On independent factors the estimate stays near zero however long the
	fit runs.

	Args:
		estimators: dict pair name -> PairEstimator with an optimizer attached
		latents: dict factor -> [N x d] array, N >= 4
		steps: update steps on the fitting half
		rng: numpy Generator for the split

	Returns:
		MiReport: estimates on the scoring half
	"""
	fit, held = split_latents(latents, rng)

	def heldout_loglik(est):
		with no_grad():
			return estimator_loglik(est, held[est.source], held[est.target]).item()

	best = {name: (heldout_loglik(est), est.state_dict()) for name, est in estimators.items()}
	for step in range(1, steps + 1):
		estimator_update_step(estimators, fit)
		if step % eval_every and step != steps:
			continue
		for name, est in estimators.items():
			loglik = heldout_loglik(est)
			if loglik > best[name][0]:
				best[name] = (loglik, est.state_dict())
	for name, est in estimators.items():
		est.load_state_dict(best[name][1])
	return mi_report(estimators, held)


# ============================================================================
# GAUSSIAN ORACLES
# ============================================================================


def sample_correlated_gaussians(rho, n, d, rng):
	"""x, y standard normal [n x d], corr(x_j, y_j) = rho, independent across j."""
	x = rng.standard_normal((n, d))
	y = rho * x + math.sqrt(1.0 - rho * rho) * rng.standard_normal((n, d))
	return x, y


def analytic_gaussian_mi(rho, d=1):
	"""-d/2 ln(1 - rho^2)"""
	return -0.5 * d * math.log(1.0 - rho * rho)


def analytic_gaussian_vclub(rho, d=1):
	"""vCLUB of a correlated Gaussian pair with the exact conditional: d rho^2 / (1 - rho^2)."""
	return d * rho * rho / (1.0 - rho * rho)


def analytic_conditional_loglik(rho, d=1):
	"""E log p(y | x) for the correlated Gaussian pair."""
	return -0.5 * d * (LOG_2PI + math.log(1.0 - rho * rho) + 1.0)
