"""
VAD-VAE: an utterance encoder whose output is split into Valence, Arousal,
Dominance and Content Gaussian latents, with sigmoid VAD predictors, an
emotion classifier over the concatenated latents, and a reconstruction decoder.
"""

from dataclasses import dataclass, field

import numpy as np

import vad_vae
from vad_vae.exceptions import DataError, UsageError
from vad_vae.vad_vae.nn_core import (
	Embedding,
	GRUCell,
	Linear,
	Module,
	decode_batch,
	dropout,
	encode_states,
	greedy_decode,
	states_at,
)
from vad_vae.vad_vae.tensor import (
	DTYPE,
	Tensor,
	as_tensor,
	clamp,
	concat,
	no_grad,
	reshape,
	softmax_cross_entropy,
)
from vad_vae.vad_vae.vclub import mi_loss

FACTORS = ("V", "A", "D", "C")
VAD_FACTORS = ("V", "A", "D")
ENTANGLED = "Z"
LOGVAR_BOUND = 8.0


class LatentHead(Module):
	"""Maps the encoder output to the Gaussian posterior parameters of one factor."""

	def __init__(self, factor, in_features, dim, rng):
		self.factor = factor
		self.dim = dim
		self.mu_net = Linear(in_features, dim, rng)
		self.logvar_net = Linear(in_features, dim, rng)

	def __call__(self, r):
		return self.mu_net(r), clamp(self.logvar_net(r), -LOGVAR_BOUND, LOGVAR_BOUND)


@dataclass
class LatentBlock:
	mu: dict
	logvar: dict
	z: dict
	"""factor -> [N x d_R] sample (or mean, with sampling off)."""

	@property
	def factors(self):
		return tuple(self.z)

	def concat(self):
		return concat([self.z[f] for f in self.factors], axis=1)

	def means(self):
		return {f: self.mu[f].numpy() for f in self.factors}


@dataclass
class VadPrediction:
	values: dict
	"""factor -> Tensor [N x 1] in (0, 1)."""

	def as_array(self):
		"""[N x 3] in V, A, D order; NaN for factors that were not predicted."""
		n = next(iter(self.values.values())).shape[0]
		out = np.full((n, 3), np.nan)
		for factor, value in self.values.items():
			out[:, VAD_FACTORS.index(factor)] = value.data[:, 0]
		return out


@dataclass
class LossBreakdown:
	l_erc: float
	total: float
	l_recon: float | None = None
	kl: dict | None = None
	l_info: float | None = None
	l_mi: float | None = None
	weights: dict = field(default_factory=dict)
	loss: Tensor | None = None

	def to_dict(self):
		"""Plain values for logs; components that were not computed are left out."""
		out = {"l_erc": self.l_erc}
		if self.l_recon is not None:
			out["l_recon"] = self.l_recon
		if self.kl is not None:
			out["kl"] = dict(self.kl)
		if self.l_info is not None:
			out["l_info"] = self.l_info
		if self.l_mi is not None:
			out["l_mi"] = self.l_mi
		out["total"] = self.total
		return out

	def weighted_sum(self):
		"""l_erc + mu_e (l_recon + sum alpha_R kl_R) + mu_i l_info + mu_mi l_mi"""
		w = self.weights
		total = self.l_erc
		if self.l_recon is not None:
			total += w["mu_e"] * (self.l_recon + sum(w["alpha"][f] * v for f, v in self.kl.items()))
		if self.l_info is not None:
			total += w["mu_i"] * self.l_info
		if self.l_mi is not None:
			total += w["mu_mi"] * self.l_mi
		return total

	def is_finite(self):
		values = [self.l_erc, self.total, self.l_recon, self.l_info, self.l_mi, *(self.kl or {}).values()]
		return all(np.isfinite(v) for v in values if v is not None)


def reparameterize(mu, logvar, rng):
	"""z = mu + exp(logvar / 2) * eps, eps ~ N(0, I) drawn from `rng` (no gradient)."""
	eps = Tensor._wrap(rng.standard_normal(mu.shape))
	return mu + (logvar * 0.5).exp() * eps


def kl_to_standard_normal(mu, logvar):
	"""KL(N(mu, e^logvar) || N(0, I)) in closed form, summed over dimensions.

	For [N x d] inputs the per-row values are averaged over the batch.
	"""
	kl = (mu.square() + logvar.exp() - logvar - 1.0).sum() * 0.5
	if mu.ndim == 2:
		kl = kl / mu.shape[0]
	return kl


def predict_vad(block, heads, factors=VAD_FACTORS):
	"""sigmoid(z_R W_R + b_R) for each factor R, each reading only its own latent."""
	return VadPrediction({f: heads[f](block.z[f]).sigmoid() for f in factors})


def info_loss(pred, targets, factors=None):
	"""Squared error against the VAD targets, summed over factors and averaged over the batch.

	Args:
		pred: VadPrediction
		targets: [N x 3] array in V, A, D order, values in [0, 1]
		factors: Factors that contribute (default: all predicted ones)

	Raises:
		DataError: If a target is missing or outside [0, 1]
	"""
	factors = tuple(pred.values) if factors is None else tuple(factors)
	targets = np.asarray(targets, dtype=DTYPE)
	columns = [VAD_FACTORS.index(f) for f in factors]
	picked = targets[:, columns]
	if not np.all((picked >= 0.0) & (picked <= 1.0)):
		vad_vae.throw("VAD targets must lie in [0, 1]", DataError)

	loss = None
	for factor, column in zip(factors, columns, strict=True):
		residual = pred.values[factor] - as_tensor(targets[:, column : column + 1])
		term = residual.square().mean()
		loss = term if loss is None else loss + term
	return loss


def classify(block, head):
	"""Emotion logits from the concatenated latent (or any [N x in] tensor)."""
	z = block.concat() if isinstance(block, LatentBlock) else block
	return head(z)


class VadVae(Module):
	def __init__(self, config, vocab_size, n_labels, rng):
		self.config = config
		self.n_labels = n_labels
		self.embedding = Embedding(vocab_size, config.embed, rng)
		self.encoder = GRUCell(config.embed, config.hidden, rng)
		# Encoder output: the state at the <sep> closing the target, then the final state
		self.encoder_width = 2 * config.hidden

		if config.encoder_only:
			self.heads = {}
			self.vad_heads = {}
			self.classifier = Linear(self.encoder_width, n_labels, rng)
			return

		dims = config.latent_dims()
		self.heads = {f: LatentHead(f, self.encoder_width, d, rng) for f, d in dims.items()}
		self.vad_heads = {} if config.entangled_baseline else {f: Linear(dims[f], 1, rng) for f in VAD_FACTORS}
		total = sum(dims.values())
		self.classifier = Linear(total, n_labels, rng)
		if config.uses_decoder():
			self.decoder = GRUCell(config.embed, config.hidden, rng)
			self.init_proj = Linear(total, config.hidden, rng)
			self.out_proj = Linear(config.hidden, vocab_size, rng)

	@property
	def factors(self):
		return tuple(self.heads)

	def encode(self, batch, training=False, rng=None):
		"""Encoder output r [N x 2 hidden]; dropout only while training.

		The first half is the state after the target block's closing <sep>, the
		second the state after the last token of the context window.
		"""
		states = encode_states(self.embedding, self.encoder, batch.tokens, batch.lengths)
		r = concat([states_at(states, batch.target_ends), states_at(states, batch.lengths - 1)], axis=1)
		if training:
			r = dropout(r, self.config.dropout, rng, training)
		return r

	def latents(self, r, sample=False, rng=None):
		mu, logvar, z = {}, {}, {}
		for factor, head in self.heads.items():
			mu[factor], logvar[factor] = head(r)
			z[factor] = reparameterize(mu[factor], logvar[factor], rng) if sample else mu[factor]
		return LatentBlock(mu=mu, logvar=logvar, z=z)

	def encode_latents(self, batch, training=False, rng=None):
		"""(r, LatentBlock); samples and applies dropout only while training."""
		if training and rng is None:
			vad_vae.throw("training forward passes need a random generator", UsageError)
		r = self.encode(batch, training, rng)
		return r, (None if self.config.encoder_only else self.latents(r, sample=training, rng=rng))

	def forward_loss(self, batch, estimators=None, mode="train", rng=None, encoded=None):
		"""Multi-task loss of one batch.

		Args:
			batch: corpus Batch with labels, gold ids and VAD targets
			estimators: vCLUB pair estimators, frozen for this pass (None skips the MI term)
			mode: "train" (sampling and dropout) or "eval" (z = mu, no dropout)
			rng: numpy Generator for sampling and dropout in train mode
			encoded: (r, LatentBlock) already computed for this batch

		Returns:
			LossBreakdown: with the differentiable total in `loss`
		"""
		if mode not in ("train", "eval"):
			vad_vae.throw(f"Unknown mode '{mode}'", UsageError)
		config = self.config
		r, block = encoded or self.encode_latents(batch, mode == "train", rng)

		if config.encoder_only:
			l_erc = softmax_cross_entropy(self.classifier(r), batch.labels)
			return self._breakdown(l_erc, l_erc)

		z = block.concat()
		l_erc = softmax_cross_entropy(classify(z, self.classifier), batch.labels)
		total = l_erc
		l_recon = kl = l_info = l_mi = None

		if config.uses_decoder():
			l_recon = decode_batch(
				self.embedding, self.decoder, self.init_proj, self.out_proj, z, batch.gold, batch.gold_lengths
			)
			kl = {f: kl_to_standard_normal(block.mu[f], block.logvar[f]) for f in block.factors}
			alpha = config.kl_weights()
			elbo = l_recon
			for factor, value in kl.items():
				elbo = elbo + alpha[factor] * value
			total = total + config.mu_e * elbo

		factors = config.supervised_factors()
		if factors:
			l_info = info_loss(predict_vad(block, self.vad_heads, factors), batch.vad_targets)
			total = total + config.mu_i * l_info

		# vCLUB needs two samples; a trailing single-item batch goes without the term
		if config.uses_vclub() and estimators is not None and z.shape[0] >= 2:
			l_mi = mi_loss(estimators, block.z)
			total = total + config.mu_mi * l_mi

		return self._breakdown(total, l_erc, l_recon, kl, l_info, l_mi)

	def _breakdown(self, total, l_erc, l_recon=None, kl=None, l_info=None, l_mi=None):
		config = self.config
		return LossBreakdown(
			l_erc=l_erc.item(),
			total=total.item(),
			l_recon=None if l_recon is None else l_recon.item(),
			kl=None if kl is None else {f: v.item() for f, v in kl.items()},
			l_info=None if l_info is None else l_info.item(),
			l_mi=None if l_mi is None else l_mi.item(),
			weights={"mu_e": config.mu_e, "mu_i": config.mu_i, "mu_mi": config.mu_mi, "alpha": config.kl_weights()},
			loss=total,
		)

	def predict(self, batch):
		"""Evaluation-mode outputs as arrays.

		Returns:
			dict: logits [N x |E|], vad [N x 3] (NaN where not predicted), means {factor: [N x d]}
		"""
		with no_grad():
			r, block = self.encode_latents(batch, training=False)
			if block is None:
				return {"logits": self.classifier(r).numpy(), "vad": np.full((len(batch), 3), np.nan), "means": {}}
			vad = np.full((len(batch), 3), np.nan)
			if self.vad_heads:
				vad = predict_vad(block, self.vad_heads).as_array()
			return {"logits": classify(block, self.classifier).numpy(), "vad": vad, "means": block.means()}

	def reconstruct(self, z_row, tokenizer, max_len=40):
		"""Greedy decoding of one latent vector [d_total]; returns tokens without markers."""
		if not self.config.uses_decoder():
			vad_vae.throw("this model has no decoder", UsageError)
		z = reshape(as_tensor(np.asarray(z_row, dtype=DTYPE)), (1, len(z_row)))
		ids = greedy_decode(
			self.embedding, self.decoder, self.init_proj, self.out_proj, z,
			tokenizer.bos_id, tokenizer.eos_id, max_len,
		)
		return tokenizer.decode(ids)


def split_latent(z_row, dims):
	"""Split a concatenated latent vector by factor sizes."""
	out, start = {}, 0
	for factor, dim in dims.items():
		out[factor] = np.asarray(z_row[start : start + dim])
		start += dim
	return out