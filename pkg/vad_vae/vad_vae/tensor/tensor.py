"""
Dense float64 tensors with tape-based reverse-mode differentiation.

Every differentiable operation appends a record (output, inputs, local gradient rule)
to the active tape of the current thread. `backward` replays the tape in reverse,
so the records are always in topological order. The tape is only cleared by an
explicit `reset`.
"""

import threading
from contextlib import contextmanager

import numpy as np

import vad_vae
from vad_vae.exceptions import DataError, DimensionError, DomainError, NumericError, UsageError

DTYPE = np.float64


# ============================================================================
# TAPE
# ============================================================================


class Record:
	__slots__ = ("backward", "inputs", "output")

	def __init__(self, output, inputs, backward):
		self.output = output
		self.inputs = inputs
		self.backward = backward


class Tape:
	"""Ordered list of recorded operations.

	A tape belongs to one thread; tensors can move between threads but one tape
	must not be driven concurrently.
	"""

	def __init__(self):
		self.records = []
		self.enabled = True

	def record(self, output, inputs, backward):
		self.records.append(Record(output, inputs, backward))

	def reset(self):
		self.records = []

	def __len__(self):
		return len(self.records)


_local = threading.local()


def get_tape():
	"""Get the active tape of the current thread (created on first use)."""
	stack = getattr(_local, "stack", None)
	if not stack:
		_local.stack = stack = [Tape()]
	return stack[-1]


@contextmanager
def use_tape(tape):
	"""Make `tape` the active tape inside the block."""
	get_tape()
	_local.stack.append(tape)
	try:
		yield tape
	finally:
		_local.stack.pop()


@contextmanager
def no_grad():
	"""Stop recording on the active tape inside the block."""
	tape = get_tape()
	previous = tape.enabled
	tape.enabled = False
	try:
		yield
	finally:
		tape.enabled = previous


# ============================================================================
# TENSOR
# ============================================================================


class Tensor:
	"""n-dimensional float64 array that can take part in the tape.

	`data` is replaced, never written in place, so records holding an older array
	stay valid. `grad` has the shape of `data` once backward reached the tensor.
	"""

	__slots__ = ("data", "grad", "name", "requires_grad")
	# Let `ndarray <op> Tensor` fall through to the Tensor's reflected operator
	__array_ufunc__ = None

	def __init__(self, data, requires_grad=False, name=None):
		self.data = np.array(data, dtype=DTYPE)
		self.requires_grad = bool(requires_grad)
		self.grad = None
		self.name = name

	@classmethod
	def _wrap(cls, array, requires_grad=False):
		out = cls.__new__(cls)
		out.data = array if array.dtype == DTYPE else array.astype(DTYPE)
		out.requires_grad = requires_grad
		out.grad = None
		out.name = None
		return out

	@property
	def shape(self):
		return self.data.shape

	@property
	def ndim(self):
		return self.data.ndim

	@property
	def size(self):
		return self.data.size

	def item(self):
		if self.data.size != 1:
			vad_vae.throw(f"item() needs a single element, got shape {self.shape}", UsageError)
		return float(self.data.reshape(-1)[0])

	def numpy(self):
		return self.data.copy()

	def zero_grad(self):
		self.grad = None

	def __repr__(self):
		flag = ", requires_grad=True" if self.requires_grad else ""
		return f"Tensor(shape={self.shape}{flag})"

	def __len__(self):
		return self.shape[0]

	# Operator sugar, all routed through the recorded ops below
	def __add__(self, other):
		return add(self, other)

	def __radd__(self, other):
		return add(other, self)

	def __sub__(self, other):
		return sub(self, other)

	def __rsub__(self, other):
		return sub(other, self)

	def __mul__(self, other):
		return mul(self, other)

	def __rmul__(self, other):
		return mul(other, self)

	def __truediv__(self, other):
		if isinstance(other, Tensor):
			vad_vae.throw("division is only defined by a python scalar", UsageError)
		return mul(self, 1.0 / float(other))

	def __neg__(self):
		return neg(self)

	def __matmul__(self, other):
		return matmul(self, other)

	def __pow__(self, exponent):
		if exponent != 2:
			vad_vae.throw("only square (x ** 2) is supported", UsageError)
		return square(self)

	@property
	def T(self):
		return transpose(self)

	def sum(self, axis=None):
		return reduce_sum(self, axis)

	def mean(self, axis=None):
		return reduce_mean(self, axis)

	def exp(self):
		return exp(self)

	def log(self):
		return log(self)

	def tanh(self):
		return tanh(self)

	def sigmoid(self):
		return sigmoid(self)

	def square(self):
		return square(self)

	def reshape(self, *shape):
		return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], tuple | list) else shape)

	def detach(self):
		return detach(self)

	def backward(self):
		backward(self)


def tensor(data, requires_grad=False, name=None):
	return Tensor(data, requires_grad=requires_grad, name=name)


def parameter(data, name=None):
	"""Trainable leaf tensor."""
	return Tensor(data, requires_grad=True, name=name)


def zeros(shape):
	return Tensor._wrap(np.zeros(shape, dtype=DTYPE))


def ones(shape):
	return Tensor._wrap(np.ones(shape, dtype=DTYPE))


def as_tensor(value):
	if isinstance(value, Tensor):
		return value
	return Tensor._wrap(np.asarray(value, dtype=DTYPE))


def _result(array, inputs, backward_rule):
	"""Wrap `array` and record it when any input needs a gradient."""
	tape = get_tape()
	needs_grad = tape.enabled and any(t.requires_grad for t in inputs)
	out = Tensor._wrap(array, requires_grad=needs_grad)
	if needs_grad:
		tape.record(out, inputs, backward_rule)
	return out


def custom_op(array, inputs, backward_rule):
	"""Record a hand-derived op; `backward_rule(g)` returns one gradient (or None) per input."""
	inputs = tuple(as_tensor(t) for t in inputs)
	return _result(np.asarray(array, dtype=DTYPE), inputs, backward_rule)


# ============================================================================
# ELEMENTWISE
# ============================================================================


def _unbroadcast(grad, shape):
	# Only scalar-with-tensor broadcasting exists
	if grad.shape == shape:
		return grad
	return np.sum(grad).reshape(shape)


def _check_binary(a, b, op_name):
	if a.shape == b.shape:
		return
	# A single-element operand may stand in for a scalar, nothing else broadcasts
	if (a.size == 1 and a.ndim <= b.ndim) or (b.size == 1 and b.ndim <= a.ndim):
		return
	vad_vae.throw(f"{op_name}: shapes {a.shape} and {b.shape} differ", DimensionError)


def add(a, b):
	a, b = as_tensor(a), as_tensor(b)
	_check_binary(a, b, "add")

	def rule(g):
		return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

	return _result(a.data + b.data, (a, b), rule)


def sub(a, b):
	a, b = as_tensor(a), as_tensor(b)
	_check_binary(a, b, "sub")

	def rule(g):
		return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

	return _result(a.data - b.data, (a, b), rule)


def mul(a, b):
	a, b = as_tensor(a), as_tensor(b)
	_check_binary(a, b, "mul")
	a_data, b_data = a.data, b.data

	def rule(g):
		return _unbroadcast(g * b_data, a.shape), _unbroadcast(g * a_data, b.shape)

	return _result(a_data * b_data, (a, b), rule)


def neg(x):
	x = as_tensor(x)
	return _result(-x.data, (x,), lambda g: (-g,))


def exp(x):
	x = as_tensor(x)
	out = np.exp(x.data)
	return _result(out, (x,), lambda g: (g * out,))


def log(x):
	x = as_tensor(x)
	if np.any(x.data <= 0):
		vad_vae.throw(f"log of non-positive input (min {np.min(x.data)})", DomainError)
	x_data = x.data
	return _result(np.log(x_data), (x,), lambda g: (g / x_data,))


def tanh(x):
	x = as_tensor(x)
	out = np.tanh(x.data)
	return _result(out, (x,), lambda g: (g * (1.0 - out * out),))


def sigmoid(x):
	x = as_tensor(x)
	# Written through tanh so large |x| never overflows
	out = 0.5 * (1.0 + np.tanh(0.5 * x.data))
	return _result(out, (x,), lambda g: (g * out * (1.0 - out),))


def square(x):
	x = as_tensor(x)
	x_data = x.data
	return _result(x_data * x_data, (x,), lambda g: (2.0 * g * x_data,))


def clamp(x, low, high):
	"""Clip into [low, high]; the gradient is blocked where the clip is active."""
	x = as_tensor(x)
	inside = (x.data >= low) & (x.data <= high)
	return _result(np.clip(x.data, low, high), (x,), lambda g: (g * inside,))


ELEMENTWISE_OPS = {
	"add": add,
	"sub": sub,
	"mul": mul,
	"exp": exp,
	"log": log,
	"tanh": tanh,
	"sigmoid": sigmoid,
	"square": square,
}


def elementwise(kind, *operands):
	"""Apply the elementwise op named `kind` ("add", "sub", "mul", "exp", "log", "tanh", "sigmoid", "square")."""
	if kind not in ELEMENTWISE_OPS:
		vad_vae.throw(f"Unknown elementwise op '{kind}'", UsageError)
	return ELEMENTWISE_OPS[kind](*operands)


# ============================================================================
# LINEAR ALGEBRA AND SHAPE
# ============================================================================


def matmul(a, b):
	"""Matrix product of a [m x k] and b [k x n]."""
	a, b = as_tensor(a), as_tensor(b)
	if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
		vad_vae.throw(f"matmul: cannot multiply {a.shape} by {b.shape}", DimensionError)
	a_data, b_data = a.data, b.data

	def rule(g):
		return g @ b_data.T, a_data.T @ g

	return _result(a_data @ b_data, (a, b), rule)


def transpose(x):
	x = as_tensor(x)
	if x.ndim != 2:
		vad_vae.throw(f"transpose needs a matrix, got shape {x.shape}", DimensionError)
	return _result(x.data.T.copy(), (x,), lambda g: (g.T,))


def reshape(x, shape):
	x = as_tensor(x)
	shape = tuple(int(s) for s in shape)
	if int(np.prod(shape)) != x.size:
		vad_vae.throw(f"reshape: cannot view {x.shape} as {shape}", DimensionError)
	original = x.shape
	return _result(x.data.reshape(shape), (x,), lambda g: (g.reshape(original),))


def concat(parts, axis=0):
	"""Concatenate tensors along `axis`; the gradient is routed back segment by segment."""
	parts = [as_tensor(p) for p in parts]
	if not parts:
		vad_vae.throw("concat of nothing", UsageError)
	rank = parts[0].ndim
	axis = axis % rank if rank else 0
	for part in parts:
		other = [s for i, s in enumerate(part.shape) if i != axis]
		expected = [s for i, s in enumerate(parts[0].shape) if i != axis]
		if part.ndim != rank or other != expected:
			shapes = ", ".join(str(p.shape) for p in parts)
			vad_vae.throw(f"concat along axis {axis}: extents disagree ({shapes})", DimensionError)
	bounds = np.cumsum([0] + [p.shape[axis] for p in parts])

	def rule(g):
		return tuple(
			np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis) for i in range(len(parts))
		)

	return _result(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), rule)


def slice_axis(x, axis, start, stop):
	"""Take x[start:stop] along `axis`."""
	x = as_tensor(x)
	if axis >= x.ndim:
		vad_vae.throw(f"slice: axis {axis} out of range for shape {x.shape}", DimensionError)
	extent = x.shape[axis]
	if not 0 <= start < stop <= extent:
		vad_vae.throw(f"slice: range [{start}, {stop}) outside extent {extent}", DimensionError)
	index = [slice(None)] * x.ndim
	index[axis] = slice(start, stop)
	index = tuple(index)
	shape = x.shape

	def rule(g):
		full = np.zeros(shape, dtype=DTYPE)
		full[index] = g
		return (full,)

	return _result(x.data[index].copy(), (x,), rule)


def take_rows(table, indices):
	"""Gather rows of a 2-D table; the gradient scatters back to the looked-up rows only."""
	table = as_tensor(table)
	indices = np.asarray(indices, dtype=np.int64).reshape(-1)
	if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
		vad_vae.throw(
			f"row index {int(indices.max())} outside table of {table.shape[0]} rows", DataError
		)
	shape = table.shape

	def rule(g):
		full = np.zeros(shape, dtype=DTYPE)
		np.add.at(full, indices, g)
		return (full,)

	return _result(table.data[indices], (table,), rule)


def detach(x):
	"""Same values, no path back to the ancestors of `x`."""
	x = as_tensor(x)
	return Tensor._wrap(x.data, requires_grad=False)


# ============================================================================
# REDUCTIONS AND LOSSES
# ============================================================================


def _check_axis(x, axis):
	if x.size == 0:
		vad_vae.throw("reduction over an empty tensor", DomainError)
	if axis is not None and not 0 <= axis < x.ndim:
		vad_vae.throw(f"axis {axis} out of range for shape {x.shape}", DimensionError)


def reduce_sum(x, axis=None):
	x = as_tensor(x)
	_check_axis(x, axis)
	shape = x.shape

	def rule(g):
		if axis is None:
			return (np.broadcast_to(g, shape).copy(),)
		return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

	return _result(np.asarray(np.sum(x.data, axis=axis)), (x,), rule)


def reduce_mean(x, axis=None):
	x = as_tensor(x)
	_check_axis(x, axis)
	shape = x.shape
	count = x.size if axis is None else shape[axis]

	def rule(g):
		if axis is None:
			return (np.broadcast_to(g / count, shape).copy(),)
		return (np.broadcast_to(np.expand_dims(g / count, axis), shape).copy(),)

	return _result(np.asarray(np.mean(x.data, axis=axis)), (x,), rule)


REDUCTIONS = {"sum": reduce_sum, "mean": reduce_mean}


def reduction(kind, x, axis=None):
	if kind not in REDUCTIONS:
		vad_vae.throw(f"Unknown reduction '{kind}'", UsageError)
	return REDUCTIONS[kind](x, axis)


def softmax_rows(logits):
	"""Row-wise softmax of a plain array (no tape)."""
	logits = np.asarray(logits, dtype=DTYPE)
	shifted = logits - logits.max(axis=-1, keepdims=True)
	e = np.exp(shifted)
	return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, targets, weights=None):
	"""Cross-entropy of softmax(logits) against class indices or one-hot rows.

	Args:
		logits: Tensor [N x K]
		targets: int array [N] of class indices, or array [N x K] of one-hot rows
		weights: Optional per-row weights [N]; defaults to 1/N (the batch mean)

	Returns:
		Tensor: scalar, sum_i w_i * -sum_j y_ij log softmax(logits)_ij
	"""
	logits = as_tensor(logits)
	if logits.ndim != 2:
		vad_vae.throw(f"logits must be [N x K], got {logits.shape}", DimensionError)
	if not np.all(np.isfinite(logits.data)):
		vad_vae.throw("non-finite logits", NumericError)
	n, k = logits.shape
	targets = np.asarray(targets)
	if targets.ndim == 1:
		targets = targets.astype(np.int64)
		if targets.shape[0] != n:
			vad_vae.throw(f"{targets.shape[0]} targets for {n} rows", DimensionError)
		if targets.size and (targets.min() < 0 or targets.max() >= k):
			vad_vae.throw(f"class index {int(targets.max())} outside {k} classes", UsageError)
		one_hot = np.zeros((n, k), dtype=DTYPE)
		one_hot[np.arange(n), targets] = 1.0
	else:
		one_hot = targets.astype(DTYPE)
		if one_hot.shape != (n, k):
			vad_vae.throw(f"one-hot targets {one_hot.shape} do not match logits {logits.shape}", DimensionError)
	weights = np.full(n, 1.0 / n, dtype=DTYPE) if weights is None else np.asarray(weights, dtype=DTYPE)

	shifted = logits.data - logits.data.max(axis=1, keepdims=True)
	log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
	log_probs = shifted - log_norm
	row_loss = -(one_hot * log_probs).sum(axis=1)
	probs = np.exp(log_probs)

	def rule(g):
		return (g * weights[:, None] * (probs - one_hot),)

	return _result(np.asarray(np.dot(weights, row_loss)), (logits,), rule)


# ============================================================================
# BACKWARD
# ============================================================================


def backward(loss, tape=None):
	"""Accumulate d(loss)/d(leaf) into `grad` of every reachable leaf that requires it.

	Repeated calls without resetting grads accumulate. The tape is left intact.

	Args:
		loss: Scalar tensor
		tape: Tape to replay (default: the active tape)

	Raises:
		UsageError: If `loss` is not a scalar or the tape is empty
		NumericError: If a gradient comes out non-finite
	"""
	tape = tape or get_tape()
	if loss.size != 1:
		vad_vae.throw(f"backward needs a scalar loss, got shape {loss.shape}", UsageError)
	if not tape.records:
		vad_vae.throw("backward on an empty tape", UsageError)

	cotangents = {id(loss): (loss, np.ones_like(loss.data))}
	for record in reversed(tape.records):
		entry = cotangents.pop(id(record.output), None)
		if entry is None:
			continue
		grads = record.backward(entry[1])
		for parent, grad in zip(record.inputs, grads, strict=True):
			if grad is None or not parent.requires_grad:
				continue
			key = id(parent)
			if key in cotangents:
				cotangents[key] = (parent, cotangents[key][1] + grad)
			else:
				cotangents[key] = (parent, grad)

	# What is left has no producing record: the leaves
	for leaf, grad in cotangents.values():
		if not leaf.requires_grad:
			continue
		if not np.all(np.isfinite(grad)):
			vad_vae.throw(f"non-finite gradient reached {leaf.name or leaf}", NumericError)
		grad = np.asarray(grad, dtype=DTYPE).reshape(leaf.shape)
		leaf.grad = grad.copy() if leaf.grad is None else leaf.grad + grad
