"""
Neural building blocks on top of the tensor tape: linear layers, token embeddings,
a gated recurrent cell, dropout, and the sequence encoder / teacher-forced decoder.
"""

import numpy as np

import vad_vae
from vad_vae.exceptions import DimensionError, SchemaError, UsageError
from vad_vae.vad_vae.tensor import (
	DTYPE,
	Tensor,
	as_tensor,
	custom_op,
	matmul,
	no_grad,
	ones,
	parameter,
	reshape,
	slice_axis,
	softmax_cross_entropy,
	take_rows,
	zeros,
)


def uniform_init(rng, shape, fan_in):
	"""uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))"""
	bound = 1.0 / np.sqrt(fan_in)
	return rng.uniform(-bound, bound, size=shape).astype(DTYPE)


class Module:
	"""Collects trainable tensors from attributes, nested modules and dicts of modules."""

	def named_parameters(self, prefix=""):
		for name, value in vars(self).items():
			if isinstance(value, Tensor) and value.requires_grad:
				yield prefix + name, value
			elif isinstance(value, Module):
				yield from value.named_parameters(f"{prefix}{name}.")
			elif isinstance(value, dict):
				for key, item in value.items():
					if isinstance(item, Module):
						yield from item.named_parameters(f"{prefix}{name}.{key}.")

	def parameters(self):
		return dict(self.named_parameters())

	def zero_grad(self):
		for _, param in self.named_parameters():
			param.grad = None

	def state_dict(self):
		return {name: param.data.copy() for name, param in self.named_parameters()}

	def load_state_dict(self, state):
		params = self.parameters()
		missing = sorted(set(params) - set(state))
		if missing:
			vad_vae.throw(f"checkpoint lacks parameters: {', '.join(missing)}", SchemaError)
		for name, param in params.items():
			value = np.asarray(state[name], dtype=DTYPE)
			if value.shape != param.shape:
				vad_vae.throw(f"parameter {name}: checkpoint shape {value.shape}, model shape {param.shape}", SchemaError)
			param.data = value.copy()


# ============================================================================
# LAYERS
# ============================================================================


class Linear(Module):
	def __init__(self, in_features, out_features, rng):
		self.in_features = in_features
		self.out_features = out_features
		self.W = parameter(uniform_init(rng, (in_features, out_features), in_features))
		self.b = parameter(np.zeros(out_features, dtype=DTYPE))

	def __call__(self, x):
		return linear_forward(self, x)


def add_bias(x, b):
	"""x [N x out] + b [out] for every row, as x + ones[N x 1] @ b[1 x out]."""
	return x + matmul(ones((x.shape[0], 1)), reshape(b, (1, b.shape[0])))


def linear_forward(layer, x):
	"""xW + b.

	Raises:
		DimensionError: If x does not have `layer.in_features` columns
	"""
	if x.ndim != 2 or x.shape[1] != layer.in_features:
		vad_vae.throw(f"linear layer expects [N x {layer.in_features}], got {x.shape}", DimensionError)
	return add_bias(matmul(x, layer.W), layer.b)


class Embedding(Module):
	def __init__(self, vocab_size, dim, rng):
		self.vocab_size = vocab_size
		self.dim = dim
		# A one-hot lookup has fan-in 1
		self.table = parameter(uniform_init(rng, (vocab_size, dim), 1))

	def __call__(self, ids):
		return take_rows(self.table, ids)


class GRUCell(Module):
	"""Single-layer gated recurrent unit.

	Gate blocks are laid out [reset | update | candidate] along the columns of
	W_x [in x 3H] and W_h [H x 3H]; the candidate's recurrent term is gated by
	the reset gate after its bias.
	"""

	def __init__(self, input_size, hidden_size, rng):
		self.input_size = input_size
		self.hidden_size = hidden_size
		self.W_x = parameter(uniform_init(rng, (input_size, 3 * hidden_size), input_size))
		self.W_h = parameter(uniform_init(rng, (hidden_size, 3 * hidden_size), hidden_size))
		self.b_x = parameter(np.zeros(3 * hidden_size, dtype=DTYPE))
		self.b_h = parameter(np.zeros(3 * hidden_size, dtype=DTYPE))

	def project_inputs(self, x):
		"""Input contributions of all gates for all steps at once: x W_x + b_x."""
		return add_bias(matmul(x, self.W_x), self.b_x)

	def step(self, gates_x, h):
		"""One recurrence step from pre-projected inputs `gates_x` [N x 3H]."""
		size = self.hidden_size
		gates_h = add_bias(matmul(h, self.W_h), self.b_h)
		reset = (slice_axis(gates_x, 1, 0, size) + slice_axis(gates_h, 1, 0, size)).sigmoid()
		update = (slice_axis(gates_x, 1, size, 2 * size) + slice_axis(gates_h, 1, size, 2 * size)).sigmoid()
		candidate = (slice_axis(gates_x, 1, 2 * size, 3 * size) + reset * slice_axis(gates_h, 1, 2 * size, 3 * size)).tanh()
		return candidate + update * (h - candidate)

	def run(self, gates_x, h0, lengths=None):
		"""All hidden states of a batched recurrence as one tape record.

		Same arithmetic as repeated `step` calls, with the backward pass through
		time done in numpy.

		Args:
			gates_x: Tensor [T*N x 3H] from `project_inputs`, time-major
			h0: Tensor [N x H] initial states
			lengths: true length of each column; finished columns keep their last state

		Returns:
			Tensor: [T*N x H], row t*N + n is the state of column n after step t
		"""
		return gru_recurrence(gates_x, h0, self.W_h, self.b_h, lengths)


def _sigmoid(x):
	return 0.5 * (1.0 + np.tanh(0.5 * x))


def gru_recurrence(gates_x, h0, W_h, b_h, lengths=None):
	h0 = as_tensor(h0)
	batch, size = h0.shape
	if gates_x.shape[0] % batch or gates_x.shape[1] != 3 * size:
		vad_vae.throw(f"recurrence inputs {gates_x.shape} do not match states {h0.shape}", DimensionError)
	steps = gates_x.shape[0] // batch
	gx = gates_x.data.reshape(steps, batch, 3 * size)
	w, b = W_h.data, b_h.data
	if lengths is None:
		active = np.ones((steps, batch, 1), dtype=DTYPE)
	else:
		active = (np.arange(steps)[:, None] < np.asarray(lengths)[None, :]).astype(DTYPE)[:, :, None]

	prev = np.empty((steps, batch, size), dtype=DTYPE)
	states = np.empty_like(prev)
	reset, update, candidate, gh_c = (np.empty_like(prev) for _ in range(4))
	h = h0.data
	for t in range(steps):
		prev[t] = h
		gh = h @ w + b
		reset[t] = _sigmoid(gx[t, :, :size] + gh[:, :size])
		update[t] = _sigmoid(gx[t, :, size : 2 * size] + gh[:, size : 2 * size])
		gh_c[t] = gh[:, 2 * size :]
		candidate[t] = np.tanh(gx[t, :, 2 * size :] + reset[t] * gh_c[t])
		h_new = candidate[t] + update[t] * (h - candidate[t])
		# Finished sequences keep their last state
		h = h_new if active[t].all() else active[t] * h_new + (1.0 - active[t]) * h
		states[t] = h

	def rule(g):
		g = g.reshape(steps, batch, size)
		d_gx = np.empty_like(gx)
		d_w = np.zeros_like(w)
		d_b = np.zeros_like(b)
		carry = np.zeros((batch, size), dtype=DTYPE)
		for t in reversed(range(steps)):
			dh = carry + g[t]
			d_new = active[t] * dh
			d_cand = d_new * (1.0 - update[t])
			d_pre_c = d_cand * (1.0 - candidate[t] ** 2)
			d_pre_r = d_pre_c * gh_c[t] * reset[t] * (1.0 - reset[t])
			d_pre_u = d_new * (prev[t] - candidate[t]) * update[t] * (1.0 - update[t])
			d_gh = np.concatenate([d_pre_r, d_pre_u, d_pre_c * reset[t]], axis=1)
			d_gx[t] = np.concatenate([d_pre_r, d_pre_u, d_pre_c], axis=1)
			d_w += prev[t].T @ d_gh
			d_b += d_gh.sum(axis=0)
			carry = (1.0 - active[t]) * dh + d_new * update[t] + d_gh @ w.T
		return d_gx.reshape(steps * batch, 3 * size), carry, d_w, d_b

	return custom_op(states.reshape(steps * batch, size), (gates_x, h0, W_h, b_h), rule)


def dropout(x, rate, rng, training):
	"""Inverted dropout; identity at evaluation."""
	if not training or rate <= 0:
		return x
	keep = (rng.random(x.shape) >= rate).astype(DTYPE) / (1.0 - rate)
	return x * Tensor._wrap(keep)


# ============================================================================
# SEQUENCES
# ============================================================================


def _time_major(tokens, lengths):
	tokens = np.asarray(tokens, dtype=np.int64)
	if tokens.ndim == 1:
		tokens = tokens[:, None]
	steps, batch = tokens.shape
	lengths = np.full(batch, steps) if lengths is None else np.asarray(lengths, dtype=np.int64)
	return tokens, lengths


def encode_states(embedding, cell, tokens, lengths=None):
	"""Run `cell` left to right over embedded tokens and return every hidden state.

	Args:
		embedding: Embedding shared by encoder and decoder
		cell: GRUCell
		tokens: int array [T x N], time-major, padded after each sequence's end
		lengths: true length of each column (default: all T)

	Returns:
		Tensor: [T*N x H], row t*N + n is column n after token t
	"""
	tokens, lengths = _time_major(tokens, lengths)
	steps, batch = tokens.shape
	if steps == 0 or np.any(lengths < 1):
		vad_vae.throw("cannot encode an empty token sequence", UsageError)
	gates = cell.project_inputs(embedding(tokens.reshape(-1)))
	return cell.run(gates, zeros((batch, cell.hidden_size)), lengths)


def states_at(states, positions):
	"""Hidden state of column n after token positions[n], as [N x H]."""
	positions = np.asarray(positions, dtype=np.int64).reshape(-1)
	batch = positions.size
	steps = states.shape[0] // batch
	if np.any(positions < 0) or np.any(positions >= steps):
		vad_vae.throw(f"positions must lie in [0, {steps}), got {positions.tolist()}", UsageError)
	return take_rows(states, positions * batch + np.arange(batch))


def encode_batch(embedding, cell, tokens, lengths=None):
	"""[N x H] hidden state after each sequence's last real token."""
	tokens, lengths = _time_major(tokens, lengths)
	return states_at(encode_states(embedding, cell, tokens, lengths), lengths - 1)


def encode_sequence(embedding, cell, tokens):
	"""Final hidden state [H] of a single token sequence."""
	tokens = np.asarray(tokens, dtype=np.int64).reshape(-1)
	if tokens.size == 0:
		vad_vae.throw("cannot encode an empty token sequence", UsageError)
	return reshape(encode_batch(embedding, cell, tokens[:, None]), (cell.hidden_size,))


def decode_batch(embedding, cell, init_proj, out_proj, z, gold, lengths=None):
	"""Teacher-forced negative log-likelihood of the gold sequences.

	Each gold column starts with the start-of-sentence token and ends with the
	end-of-sentence token; position t predicts gold[t + 1] from gold[: t + 1].

	Args:
		embedding, cell: Decoder input embedding and recurrent cell
		init_proj: Linear mapping z to the initial hidden state
		out_proj: Linear mapping hidden states to vocabulary logits
		z: Tensor [N x d] latent codes
		gold: int array [T x N] time-major, padded
		lengths: true length of each gold column

	Returns:
		Tensor: scalar, per-sequence mean NLL over predicted positions, averaged over the batch
	"""
	gold, lengths = _time_major(gold, lengths)
	steps, batch = gold.shape
	if steps < 2 or np.any(lengths < 2):
		vad_vae.throw("gold sequences need a start and an end token", UsageError)

	inputs = gold[:-1]
	targets = gold[1:]
	gates = cell.project_inputs(embedding(inputs.reshape(-1)))
	logits = out_proj(cell.run(gates, init_proj(z)))

	positions = np.arange(steps - 1)[:, None]
	predicted = (positions < (lengths - 1)[None, :]).astype(DTYPE)
	weights = predicted / ((lengths - 1)[None, :] * batch)
	return softmax_cross_entropy(logits, targets.reshape(-1), weights.reshape(-1))


def decode_autoregressive(embedding, cell, init_proj, out_proj, z, gold_tokens):
	"""Teacher-forced NLL of one gold sequence, mean over its positions."""
	gold_tokens = np.asarray(gold_tokens, dtype=np.int64).reshape(-1)
	if gold_tokens.size == 0:
		vad_vae.throw("empty gold sequence", UsageError)
	if z.ndim == 1:
		z = reshape(z, (1, z.shape[0]))
	return decode_batch(embedding, cell, init_proj, out_proj, z, gold_tokens[:, None])


def greedy_decode(embedding, cell, init_proj, out_proj, z, start_id, end_id, max_len=40):
	"""Greedy decoding from a single latent code.

	Returns:
		list[int]: generated ids, without the start token and without the end token
	"""
	if z.ndim == 1:
		z = reshape(z, (1, z.shape[0]))
	generated = []
	with no_grad():
		h = init_proj(z)
		token = start_id
		for _ in range(max_len):
			h = cell.step(cell.project_inputs(embedding([token])), h)
			token = int(np.argmax(out_proj(h).data[0]))
			if token == end_id:
				break
			generated.append(token)
	return generated
