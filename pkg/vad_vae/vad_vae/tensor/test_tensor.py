# Copyright (c) 2026, vad_vae contributors
# See license.txt

import math
import unittest

import numpy as np

from vad_vae.exceptions import DataError, DimensionError, DomainError, NumericError, UsageError
from vad_vae.vad_vae.tensor import (
	Tape,
	backward,
	concat,
	detach,
	elementwise,
	matmul,
	no_grad,
	parameter,
	reduce_mean,
	reduce_sum,
	slice_axis,
	softmax_cross_entropy,
	softmax_rows,
	take_rows,
	tensor,
	use_tape,
)
from vad_vae.vad_vae.tensor.gradcheck import check_gradients


def grad_of(fn, *inputs):
	for t in inputs:
		t.grad = None
	with use_tape(Tape()):
		backward(fn(*inputs))
	return [t.grad for t in inputs]


class TestMatmul(unittest.TestCase):
	def test_identity(self):
		out = matmul(tensor([[1.0, 0.0], [0.0, 1.0]]), tensor([[3.0, 4.0], [5.0, 6.0]]))
		np.testing.assert_array_equal(out.data, [[3.0, 4.0], [5.0, 6.0]])

	def test_row_by_column(self):
		out = matmul(tensor([[1.0, 2.0]]), tensor([[3.0], [4.0]]))
		np.testing.assert_array_equal(out.data, [[11.0]])

	def test_gradient_wrt_left(self):
		a = parameter([[1.0, 2.0]])
		b = tensor([[3.0], [4.0]])
		(grad,) = grad_of(lambda a: matmul(a, b).sum(), a)
		np.testing.assert_allclose(grad, [[3.0, 4.0]])

	def test_shape_mismatch_names_both_shapes(self):
		with self.assertRaises(DimensionError) as ctx:
			matmul(tensor(np.ones((2, 3))), tensor(np.ones((2, 3))))
		self.assertIn("(2, 3)", str(ctx.exception))


class TestElementwise(unittest.TestCase):
	def test_sigmoid_values(self):
		self.assertEqual(elementwise("sigmoid", tensor(0.0)).item(), 0.5)
		self.assertAlmostEqual(elementwise("sigmoid", tensor(math.log(3.0))).item(), 0.75, places=12)

	def test_tanh_at_origin(self):
		x = parameter(0.0)
		(grad,) = grad_of(lambda x: elementwise("tanh", x), x)
		self.assertEqual(elementwise("tanh", tensor(0.0)).item(), 0.0)
		self.assertEqual(float(grad), 1.0)

	def test_sigmoid_gradient_at_zero(self):
		x = parameter(0.0)
		(grad,) = grad_of(lambda x: x.sigmoid(), x)
		self.assertAlmostEqual(float(grad), 0.25, places=14)

	def test_power_rule(self):
		x = parameter(3.0)
		(grad,) = grad_of(lambda x: x.square(), x)
		self.assertEqual(float(grad), 6.0)

	def test_log_domain(self):
		with self.assertRaises(DomainError):
			elementwise("log", tensor([1.0, 0.0]))

	def test_shape_mismatch(self):
		with self.assertRaises(DimensionError):
			elementwise("add", tensor([1.0, 2.0]), tensor([1.0, 2.0, 3.0]))

	def test_scalar_broadcast(self):
		x = parameter([[1.0, 2.0], [3.0, 4.0]])
		s = parameter(2.0)
		gx, gs = grad_of(lambda x, s: (x * s).sum(), x, s)
		np.testing.assert_array_equal(gx, np.full((2, 2), 2.0))
		self.assertEqual(float(gs), 10.0)

	def test_unknown_kind(self):
		with self.assertRaises(UsageError):
			elementwise("cube", tensor(1.0))

	def test_finite_differences_all_kinds(self):
		rng = np.random.default_rng(7)
		for _ in range(20):
			a = parameter(rng.uniform(-2, 2, size=(3, 4)))
			b = parameter(rng.uniform(-2, 2, size=(3, 4)))
			positive = parameter(rng.uniform(0.5, 2, size=(3, 4)))
			for kind in ("add", "sub", "mul"):
				result = check_gradients(lambda a, b, kind=kind: elementwise(kind, a, b).sum(), [a, b])
				self.assertTrue(result.ok, f"{kind}: {result}")
			for kind in ("exp", "tanh", "sigmoid", "square"):
				result = check_gradients(lambda a, kind=kind: (elementwise(kind, a) * a).sum(), [a])
				self.assertTrue(result.ok, f"{kind}: {result}")
			result = check_gradients(lambda p: (elementwise("log", p) * p).sum(), [positive])
			self.assertTrue(result.ok, f"log: {result}")


class TestReductions(unittest.TestCase):
	def test_sum(self):
		self.assertEqual(reduce_sum(tensor([1.0, 2.0, 3.0])).item(), 6.0)

	def test_mean_axis(self):
		np.testing.assert_array_equal(reduce_mean(tensor([[1.0, 3.0], [5.0, 7.0]]), axis=0).data, [3.0, 5.0])

	def test_mean_gradient(self):
		x = parameter([1.0, 2.0, 3.0, 4.0])
		(grad,) = grad_of(lambda x: x.mean(), x)
		np.testing.assert_array_equal(grad, [0.25] * 4)

	def test_empty(self):
		with self.assertRaises(DomainError):
			reduce_sum(tensor(np.zeros((0,))))

	def test_axis_out_of_range(self):
		with self.assertRaises(DimensionError):
			reduce_mean(tensor([1.0, 2.0]), axis=1)

	def test_axis_gradients(self):
		rng = np.random.default_rng(3)
		x = parameter(rng.uniform(-2, 2, size=(4, 3)))
		w = tensor(rng.uniform(-2, 2, size=(3,)))
		result = check_gradients(lambda x: (reduce_mean(x, axis=0) * w).sum() + reduce_sum(x, axis=1).square().sum(), [x])
		self.assertTrue(result.ok, result)


class TestSoftmaxCrossEntropy(unittest.TestCase):
	def test_uniform(self):
		loss = softmax_cross_entropy(tensor([[0.0, 0.0]]), [0])
		self.assertAlmostEqual(loss.item(), math.log(2.0), places=12)

	def test_saturated_is_stable(self):
		loss = softmax_cross_entropy(tensor([[100.0, 0.0]]), [0])
		self.assertTrue(np.isfinite(loss.item()))
		self.assertAlmostEqual(loss.item(), 0.0, places=12)

	def test_three_classes(self):
		loss = softmax_cross_entropy(tensor([[1.0, 2.0, 3.0]]), [2])
		self.assertAlmostEqual(loss.item(), 0.40761, places=5)

	def test_one_hot_matches_index(self):
		logits = tensor([[0.3, -1.0, 2.0], [1.0, 1.0, 0.0]])
		by_index = softmax_cross_entropy(logits, [1, 0]).item()
		by_one_hot = softmax_cross_entropy(logits, np.eye(3)[[1, 0]]).item()
		self.assertAlmostEqual(by_index, by_one_hot, places=14)

	def test_gradient_and_properties(self):
		rng = np.random.default_rng(11)
		for _ in range(20):
			logits = parameter(rng.uniform(-2, 2, size=(5, 4)))
			targets = rng.integers(0, 4, size=5)
			self.assertGreaterEqual(softmax_cross_entropy(logits, targets).item(), 0.0)
			np.testing.assert_allclose(softmax_rows(logits.data).sum(axis=1), 1.0, atol=1e-12)
			result = check_gradients(lambda l, t=targets: softmax_cross_entropy(l, t), [logits])
			self.assertTrue(result.ok, result)

	def test_non_finite_logits(self):
		with self.assertRaises(NumericError):
			softmax_cross_entropy(tensor([[np.inf, 0.0]]), [0])

	def test_class_index_out_of_range(self):
		with self.assertRaises(UsageError):
			softmax_cross_entropy(tensor([[0.0, 0.0]]), [2])


class TestConcatSlice(unittest.TestCase):
	def test_concat(self):
		np.testing.assert_array_equal(concat([tensor([1.0, 2.0]), tensor([3.0])]).data, [1.0, 2.0, 3.0])

	def test_round_trip(self):
		a = tensor(np.arange(6.0).reshape(2, 3))
		b = tensor(np.arange(4.0).reshape(2, 2))
		joined = concat([a, b], axis=1)
		np.testing.assert_array_equal(slice_axis(joined, 1, 0, 3).data, a.data)
		np.testing.assert_array_equal(slice_axis(joined, 1, 3, 5).data, b.data)

	def test_gradient_routes_to_segments(self):
		a = parameter([1.0, 2.0])
		b = parameter([3.0])
		ga, gb = grad_of(lambda a, b: concat([a, b]).sum(), a, b)
		np.testing.assert_array_equal(ga, [1.0, 1.0])
		np.testing.assert_array_equal(gb, [1.0])

	def test_extent_mismatch(self):
		with self.assertRaises(DimensionError):
			concat([tensor(np.ones((2, 3))), tensor(np.ones((3, 3)))], axis=1)

	def test_slice_gradient(self):
		x = parameter(np.random.default_rng(0).uniform(-2, 2, size=(4, 5)))
		result = check_gradients(lambda x: slice_axis(x, 1, 1, 4).square().sum(), [x])
		self.assertTrue(result.ok, result)


class TestTakeRows(unittest.TestCase):
	def test_gradient_scatters_to_looked_up_rows(self):
		table = parameter(np.arange(12.0).reshape(4, 3))
		(grad,) = grad_of(lambda t: take_rows(t, [1, 3, 1]).sum(), table)
		np.testing.assert_array_equal(grad[:, 0], [0.0, 2.0, 0.0, 1.0])

	def test_index_out_of_range(self):
		with self.assertRaises(DataError):
			take_rows(tensor(np.ones((2, 2))), [2])


class TestBackward(unittest.TestCase):
	def test_non_scalar_loss(self):
		x = parameter([1.0, 2.0])
		with use_tape(Tape()):
			y = x * 2.0
			with self.assertRaises(UsageError):
				backward(y)

	def test_empty_tape(self):
		with use_tape(Tape()):
			with self.assertRaises(UsageError):
				backward(tensor(1.0))

	def test_repeated_backward_accumulates(self):
		x = parameter(3.0)
		with use_tape(Tape()):
			y = x.square()
			backward(y)
			backward(y)
		self.assertEqual(float(x.grad), 12.0)

	def test_tape_cleared_only_by_reset(self):
		x = parameter(1.0)
		with use_tape(Tape()) as tape:
			backward(x.exp())
			self.assertEqual(len(tape), 1)
			tape.reset()
			self.assertEqual(len(tape), 0)

	def test_no_grad_records_nothing(self):
		x = parameter(1.0)
		with use_tape(Tape()) as tape, no_grad():
			y = x.exp()
			self.assertEqual(len(tape), 0)
			self.assertFalse(y.requires_grad)

	def test_deterministic(self):
		rng = np.random.default_rng(5)
		w = parameter(rng.normal(size=(4, 3)))
		x = tensor(rng.normal(size=(6, 4)))

		def loss(w):
			return softmax_cross_entropy(matmul(x, w).tanh(), [0, 1, 2, 0, 1, 2])

		first = grad_of(loss, w)[0].copy()
		second = grad_of(loss, w)[0].copy()
		self.assertEqual(first.tobytes(), second.tobytes())

	def test_small_network_against_finite_differences(self):
		rng = np.random.default_rng(2)
		w1 = parameter(rng.uniform(-1, 1, size=(2, 3)))
		b1 = parameter(rng.uniform(-1, 1, size=(1,)))
		w2 = parameter(rng.uniform(-1, 1, size=(3, 2)))
		x = tensor(rng.uniform(-2, 2, size=(4, 2)))

		def loss(w1, b1, w2):
			hidden = (matmul(x, w1) + b1).tanh()
			return softmax_cross_entropy(matmul(hidden, w2), [0, 1, 1, 0])

		result = check_gradients(loss, [w1, b1, w2])
		self.assertTrue(result.ok, result)


class TestDetach(unittest.TestCase):
	def test_blocks_gradient(self):
		x = parameter([1.0, 2.0])
		y = parameter([0.5, 0.5])
		gx, gy = grad_of(lambda x, y: (detach(x) * y).sum() + y.sum(), x, y)
		self.assertIsNone(gx)
		np.testing.assert_array_equal(gy, [2.0, 3.0])

	def test_bitwise_equal(self):
		x = parameter(np.random.default_rng(1).normal(size=(3, 3)))
		self.assertEqual(detach(x).data.tobytes(), x.data.tobytes())
		self.assertFalse(detach(x).requires_grad)
