# Copyright (c) 2026, vad_vae contributors
# See license.txt

import math
import unittest

import numpy as np

from vad_vae.config import TrainConfig
from vad_vae.exceptions import DataError
from vad_vae.vad_vae.corpus import SyntheticConfig, build_inputs, build_vocab, collate, generate_synthetic, get_lexicon
from vad_vae.vad_vae.model import (
	LatentBlock,
	VadVae,
	classify,
	info_loss,
	kl_to_standard_normal,
	predict_vad,
	reparameterize,
)
from vad_vae.vad_vae.model.model import LOGVAR_BOUND, VadPrediction
from vad_vae.vad_vae.nn_core import Linear, encode_sequence
from vad_vae.vad_vae.tensor import Tape, backward, no_grad, softmax_rows, tensor, use_tape
from vad_vae.vad_vae.tensor.gradcheck import check_gradients
from vad_vae.vad_vae.vclub import build_estimators, estimator_update_step, mi_loss

LABELS = ("neutral", "frustrated", "sad", "anger", "excited", "happy")


def tiny_setup(n_items=3, **overrides):
	values = {"d_v": 2, "d_a": 2, "d_d": 2, "d_c": 3, "hidden": 6, "embed": 4, "w_past": 1, "w_future": 1}
	values.update(overrides)
	config = TrainConfig(**values)
	dialogues = generate_synthetic(SyntheticConfig(labels=LABELS, n_dialogues=2, min_turns=5, max_turns=5, seed=0))
	tokenizer = build_vocab(dialogues)
	items = build_inputs(dialogues, tokenizer, config, labels=LABELS, lexicon=get_lexicon("iemocap"))
	batch = collate(items[:n_items], tokenizer.pad_id)
	model = VadVae(config, len(tokenizer), len(LABELS), np.random.default_rng(0))
	estimators = build_estimators({"V": 2, "A": 2, "D": 2}, lr=0.01, rng=np.random.default_rng(1))
	return config, model, batch, estimators


class TestReparameterize(unittest.TestCase):
	def test_vanishing_variance(self):
		mu = tensor([0.5, -1.0, 2.0])
		z = reparameterize(mu, tensor([-30.0, -30.0, -30.0]), np.random.default_rng(0))
		eps = np.random.default_rng(0).standard_normal(3)
		self.assertTrue(np.all(np.abs(z.data - mu.data) <= 1e-3 * np.abs(eps)))

	def test_clamped_variance_bounds_the_noise(self):
		mu = tensor(np.zeros(4))
		z = reparameterize(mu, tensor(np.full(4, -LOGVAR_BOUND)), np.random.default_rng(0))
		eps = np.random.default_rng(0).standard_normal(4)
		np.testing.assert_allclose(z.data, math.exp(-LOGVAR_BOUND / 2) * eps)

	def test_sample_statistics(self):
		z = reparameterize(tensor(np.zeros((100000, 2))), tensor(np.zeros((100000, 2))), np.random.default_rng(1))
		self.assertTrue(np.all(np.abs(z.data.mean(axis=0)) < 0.02))
		self.assertTrue(np.all(np.abs(z.data.var(axis=0) - 1.0) < 0.03))

	def test_gradients(self):
		mu = tensor([0.3, -0.2], requires_grad=True)
		logvar = tensor([0.4, -1.0], requires_grad=True)
		with use_tape(Tape()):
			backward(reparameterize(mu, logvar, np.random.default_rng(2)).sum())
		eps = np.random.default_rng(2).standard_normal(2)
		np.testing.assert_array_equal(mu.grad, [1.0, 1.0])
		np.testing.assert_allclose(logvar.grad, 0.5 * np.exp(logvar.data / 2) * eps)


class TestKl(unittest.TestCase):
	def kl(self, mu, logvar):
		return kl_to_standard_normal(tensor(mu), tensor(logvar)).item()

	def test_closed_form_values(self):
		self.assertEqual(self.kl([0.0], [0.0]), 0.0)
		self.assertAlmostEqual(self.kl([1.0], [0.0]), 0.5, places=12)
		self.assertAlmostEqual(self.kl([0.0], [math.log(4)]), 0.5 * (4 - math.log(4) - 1), places=12)
		self.assertAlmostEqual(self.kl([0.0], [math.log(4)]), 0.8069, places=4)

	def test_zero_only_at_prior(self):
		self.assertLess(abs(self.kl(np.zeros(5), np.zeros(5))), 1e-12)
		rng = np.random.default_rng(3)
		for _ in range(20):
			self.assertGreater(self.kl(rng.normal(size=5) * 0.1, rng.normal(size=5) * 0.1), 1e-12)

	def test_batch_average(self):
		mu = np.array([[1.0], [0.0]])
		self.assertAlmostEqual(self.kl(mu, np.zeros((2, 1))), 0.25, places=12)

	def test_monte_carlo_log_ratio(self):
		rng = np.random.default_rng(4)
		for _ in range(20):
			mu = rng.normal(size=2)
			logvar = rng.uniform(-1.5, 1.5, size=2)
			eps = rng.standard_normal((1_000_000, 2))
			z = mu + np.exp(logvar / 2) * eps
			log_ratio = np.sum(-0.5 * logvar - 0.5 * eps**2 + 0.5 * z**2, axis=1)
			standard_error = log_ratio.std() / math.sqrt(len(log_ratio))
			# 4 standard errors keeps the 20 draws jointly at the 3-sigma level
			self.assertLess(abs(log_ratio.mean() - self.kl(mu, logvar)), 4 * standard_error)


class TestHeads(unittest.TestCase):
	def setUp(self):
		self.config, self.model, self.batch, self.estimators = tiny_setup()

	def block(self):
		with no_grad():
			return self.model.encode_latents(self.batch)[1]

	def test_logvar_clamped(self):
		for head in self.model.heads.values():
			head.logvar_net.W.data = head.logvar_net.W.data * 1e4
		for logvar in self.block().logvar.values():
			self.assertLessEqual(np.abs(logvar.data).max(), LOGVAR_BOUND)

	def test_eval_latents_are_means(self):
		block = self.block()
		for factor in block.factors:
			self.assertIs(block.z[factor], block.mu[factor])
		self.assertEqual(block.concat().shape, (3, 2 + 2 + 2 + 3))

	def test_zero_weights_predict_half(self):
		for head in self.model.vad_heads.values():
			head.W.data = np.zeros_like(head.W.data)
		pred = predict_vad(self.block(), self.model.vad_heads)
		np.testing.assert_array_equal(pred.as_array(), np.full((3, 3), 0.5))

	def test_content_does_not_move_vad(self):
		block = self.block()
		before = predict_vad(block, self.model.vad_heads).as_array()
		block.z["C"] = tensor(block.z["C"].data + 10.0)
		np.testing.assert_array_equal(predict_vad(block, self.model.vad_heads).as_array(), before)

	def test_predictions_inside_unit_interval(self):
		pred = predict_vad(self.block(), self.model.vad_heads).as_array()
		self.assertTrue(np.all((pred > 0) & (pred < 1)))

	def test_info_loss_hand_values(self):
		pred = VadPrediction({f: tensor([[0.5]]) for f in ("V", "A", "D")})
		self.assertAlmostEqual(info_loss(pred, [[1.0, 0.0, 0.5]]).item(), 0.5)
		self.assertEqual(info_loss(pred, [[0.5, 0.5, 0.5]]).item(), 0.0)
		with self.assertRaises(DataError):
			info_loss(pred, [[1.2, 0.0, 0.5]])

	def test_zero_classifier_is_uniform(self):
		head = Linear(9, 6, np.random.default_rng(0))
		head.W.data = np.zeros((9, 6))
		probs = softmax_rows(classify(self.block(), head).data)
		np.testing.assert_allclose(probs, np.full((3, 6), 1 / 6))

	def test_classifier_reads_all_latents(self):
		self.assertEqual(self.model.classifier.W.shape, (2 + 2 + 2 + 3, len(LABELS)))


class TestEncoderOutput(unittest.TestCase):
	def test_target_state_then_final_state(self):
		_, model, batch, _ = tiny_setup()
		with no_grad():
			r = model.encode(batch)
			self.assertEqual(r.shape, (3, 12))
			for n, item in enumerate(batch.items):
				through_target = item.token_ids[: item.target_span[1] + 1]
				at_target = encode_sequence(model.embedding, model.encoder, through_target)
				at_end = encode_sequence(model.embedding, model.encoder, item.token_ids)
				np.testing.assert_allclose(r.data[n, :6], at_target.data, atol=1e-12)
				np.testing.assert_allclose(r.data[n, 6:], at_end.data, atol=1e-12)

	def test_future_context_leaves_target_state(self):
		_, model, batch, _ = tiny_setup()
		# Item 0 opens its dialogue, so its prefix up to the closing <sep> is shared with a windowless input
		_, _, windowless, _ = tiny_setup(w_past=0, w_future=0)
		self.assertEqual(batch.items[0].target_span, windowless.items[0].target_span)
		with no_grad():
			with_future = model.encode(batch).data[0, :6]
			without = model.encode(windowless).data[0, :6]
		np.testing.assert_allclose(with_future, without, atol=1e-12)


class TestForwardLoss(unittest.TestCase):
	def test_breakdown_identity(self):
		config, model, batch, estimators = tiny_setup(n_items=4)
		for seed in range(5):
			breakdown = model.forward_loss(batch, estimators, rng=np.random.default_rng(seed))
			self.assertLess(abs(breakdown.total - breakdown.weighted_sum()), 1e-9)
			self.assertTrue(all(v >= 0 for v in breakdown.kl.values()))
			self.assertEqual(set(breakdown.to_dict()), {"l_erc", "l_recon", "kl", "l_info", "l_mi", "total"})

	def test_degenerate_weighting(self):
		_, model, batch, estimators = tiny_setup(mu_e=0.0, mu_i=0.0, mu_mi=0.0)
		breakdown = model.forward_loss(batch, estimators, rng=np.random.default_rng(0))
		self.assertEqual(breakdown.total, breakdown.l_erc)

	def test_eval_is_deterministic(self):
		_, model, batch, estimators = tiny_setup()
		first = model.forward_loss(batch, estimators, mode="eval")
		second = model.forward_loss(batch, estimators, mode="eval")
		self.assertEqual(first.to_dict(), second.to_dict())
		self.assertEqual(model.predict(batch)["logits"].tobytes(), model.predict(batch)["logits"].tobytes())

	def test_info_loss_isolated_from_content(self):
		_, model, batch, _ = tiny_setup()
		model.zero_grad()
		with use_tape(Tape()):
			block = model.encode_latents(batch)[1]
			backward(info_loss(predict_vad(block, model.vad_heads), batch.vad_targets))
		for name, param in model.heads["C"].named_parameters():
			self.assertTrue(param.grad is None or not np.any(param.grad), name)
		self.assertTrue(np.any(model.heads["V"].mu_net.W.grad))

	def test_no_decoder(self):
		config, model, batch, estimators = tiny_setup(no_decoder=True)
		breakdown = model.forward_loss(batch, estimators, rng=np.random.default_rng(0))
		self.assertIsNone(breakdown.l_recon)
		self.assertNotIn("kl", breakdown.to_dict())
		expected = breakdown.l_erc + config.mu_i * breakdown.l_info + config.mu_mi * breakdown.l_mi
		self.assertAlmostEqual(breakdown.total, expected, places=12)
		self.assertFalse(hasattr(model, "decoder"))

	def test_single_factor_ablation(self):
		_, model, batch, _ = tiny_setup(no_v_sup=True)
		breakdown = model.forward_loss(batch, mode="eval")
		with no_grad():
			block = model.encode_latents(batch)[1]
			expected = info_loss(predict_vad(block, model.vad_heads, ("A", "D")), batch.vad_targets).item()
		self.assertAlmostEqual(breakdown.l_info, expected, places=12)

	def test_entangled_baseline(self):
		_, model, batch, _ = tiny_setup(entangled_baseline=True)
		self.assertEqual(model.factors, ("Z",))
		breakdown = model.forward_loss(batch, rng=np.random.default_rng(0))
		self.assertIsNone(breakdown.l_info)
		self.assertIsNone(breakdown.l_mi)
		self.assertEqual(list(breakdown.kl), ["Z"])

	def test_encoder_only(self):
		_, model, batch, estimators = tiny_setup(encoder_only=True)
		breakdown = model.forward_loss(batch, estimators, rng=np.random.default_rng(0))
		self.assertEqual(breakdown.to_dict(), {"l_erc": breakdown.l_erc, "total": breakdown.l_erc})

	def test_estimator_step_leaves_model_alone(self):
		_, model, batch, estimators = tiny_setup()
		before = {name: p.data.tobytes() for name, p in model.named_parameters()}
		estimator_before = estimators["V->A"].mean_net.output.W.data.copy()
		with use_tape(Tape()):
			block = model.encode_latents(batch, training=True, rng=np.random.default_rng(0))[1]
			estimator_update_step(estimators, {f: block.z[f] for f in ("V", "A", "D")})
		for name, p in model.named_parameters():
			self.assertEqual(p.data.tobytes(), before[name], name)
			self.assertIsNone(p.grad, name)
		self.assertFalse(np.array_equal(estimators["V->A"].mean_net.output.W.data, estimator_before))

	def test_mi_loss_reaches_encoder(self):
		_, model, batch, estimators = tiny_setup()
		inputs = [model.encoder.W_h, model.heads["V"].mu_net.W, model.embedding.table]
		result = check_gradients(lambda *_: mi_loss(estimators, model.encode_latents(batch)[1].z), inputs, rtol=1e-4)
		self.assertTrue(result.ok, result)

	def test_full_loss_gradients(self):
		_, model, batch, estimators = tiny_setup()
		inputs = [
			model.encoder.W_h,
			model.heads["V"].mu_net.W,
			model.heads["C"].logvar_net.W,
			model.vad_heads["A"].W,
			model.classifier.W,
			model.decoder.W_x,
			model.init_proj.b,
		]

		def loss(*_):
			return model.forward_loss(batch, estimators, rng=np.random.default_rng(0)).loss

		result = check_gradients(loss, inputs, rtol=1e-4)
		self.assertTrue(result.ok, result)

	def test_latent_block_concat_order(self):
		block = LatentBlock(
			mu={}, logvar={}, z={"V": tensor([[1.0]]), "A": tensor([[2.0]]), "D": tensor([[3.0]]), "C": tensor([[4.0]])}
		)
		np.testing.assert_array_equal(block.concat().data, [[1.0, 2.0, 3.0, 4.0]])
