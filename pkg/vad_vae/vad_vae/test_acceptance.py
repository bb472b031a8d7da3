# Copyright (c) 2026, vad_vae contributors
# See license.txt

"""End-to-end runs on synthetic corpora. Set VAD_VAE_SLOW=1 to run them."""

import math
import os
import tempfile
import unittest
from pathlib import Path

import numpy as np

from vad_vae.config import TrainConfig
from vad_vae.vad_vae.handlers.evaluate import evaluate_checkpoint
from vad_vae.vad_vae.handlers.gen_data import gen_data
from vad_vae.vad_vae.handlers.mi_probe import gaussian_estimates
from vad_vae.vad_vae.handlers.train import train
from vad_vae.vad_vae.metrics import robustness_curve
from vad_vae.vad_vae.model import VAD_FACTORS

SLOW = os.environ.get("VAD_VAE_SLOW") == "1"
SEEDS = (0, 1, 2)
NO_VAD_SUPERVISION = {"no_v_sup": True, "no_a_sup": True, "no_d_sup": True}


class RunCache:
	"""Trains each (overrides, seed) once per corpus and keeps the test reports."""

	def __init__(self, root, paths, base):
		self.root = root
		self.paths = paths
		self.base = base
		self.reports = {}

	def report(self, seed, **overrides):
		config = self.base.replace(seed=seed, **overrides)
		key = config.config_hash()
		if key not in self.reports:
			result = train(
				config, self.paths["train"], self.paths["dev"], self.paths["test"], self.root / "runs", quiet=True
			)
			self.reports[key] = result.test_report
		return self.reports[key]

	def mean_f1(self, **overrides):
		return float(np.mean([self.report(seed, **overrides).weighted_f1 for seed in SEEDS]))


@unittest.skipUnless(SLOW, "slow end-to-end runs")
class TestDefaultConfig(unittest.TestCase):
	@classmethod
	def setUpClass(cls):
		cls.tmp = tempfile.TemporaryDirectory()
		root = Path(cls.tmp.name)
		cls.paths = gen_data(root / "data", n_dialogues=2000, seed=0)
		cls.config = TrainConfig(epochs=10, log_every=500, seed=0)
		cls.result = train(cls.config, cls.paths["train"], cls.paths["dev"], cls.paths["test"], root / "runs", quiet=True)

	@classmethod
	def tearDownClass(cls):
		cls.tmp.cleanup()

	def test_reaches_weighted_f1(self):
		self.assertGreaterEqual(self.result.test_report.weighted_f1, 0.85)

	def test_report_is_complete_and_reproducible(self):
		report = self.result.test_report
		self.assertTrue(all(not report.pearson[f].undefined for f in VAD_FACTORS))
		self.assertTrue(math.isfinite(report.mi_report.average))
		self.assertEqual(evaluate_checkpoint(self.result.checkpoint, self.paths["test"]).to_json(), report.to_json())


@unittest.skipUnless(SLOW, "slow end-to-end runs")
class TestTrends(unittest.TestCase):
	"""Three seeds per setting on a 300-dialogue corpus with a compact model."""

	@classmethod
	def setUpClass(cls):
		cls.tmp = tempfile.TemporaryDirectory()
		root = Path(cls.tmp.name)
		paths = gen_data(root / "data", n_dialogues=300, seed=0, human_vad=True)
		base = TrainConfig(
			d_v=4, d_a=4, d_d=4, d_c=16, hidden=32, embed=16, w_past=1, w_future=1,
			epochs=6, batch_size=8, log_every=100, mi_refit_steps=300,
		)
		cls.runs = RunCache(root, paths, base)
		# Ablation order is compared below the score ceiling
		cls.short_runs = RunCache(root / "short", paths, base.replace(epochs=2))

	@classmethod
	def tearDownClass(cls):
		cls.tmp.cleanup()

	def mean_pearson(self, **overrides):
		return {
			f: float(np.mean([self.runs.report(seed, **overrides).pearson[f].value for seed in SEEDS]))
			for f in VAD_FACTORS
		}

	def test_vad_supervision_makes_latents_informative(self):
		supervised = self.mean_pearson(mu_i=1.0)
		unsupervised = self.mean_pearson(mu_i=0.0)
		for factor in VAD_FACTORS:
			with self.subTest(factor=factor):
				self.assertGreaterEqual(supervised[factor], 0.8)
				self.assertGreaterEqual(supervised[factor] - unsupervised[factor], 0.3)

	def test_mi_penalty_lowers_dependence(self):
		for seed in SEEDS:
			with self.subTest(seed=seed):
				penalized = self.runs.report(seed, mu_i=1.0, mu_mi=0.005).mi_report.average
				free = self.runs.report(seed, mu_i=1.0, mu_mi=0.0).mi_report.average
				self.assertLess(penalized, free)
		cost = self.runs.mean_f1(mu_i=1.0, mu_mi=0.0) - self.runs.mean_f1(mu_i=1.0, mu_mi=0.005)
		self.assertLess(cost, 0.05)

	def test_ablations_lose_f1(self):
		full = self.short_runs.mean_f1()
		self.assertLess(self.short_runs.mean_f1(no_decoder=True), full)
		self.assertLess(self.short_runs.mean_f1(**NO_VAD_SUPERVISION), full)

	def test_disentangled_model_keeps_more_under_label_noise(self):
		def run_f1(variant, fraction, seed):
			overrides = {"label_noise": fraction}
			if variant == "entangled":
				overrides["entangled_baseline"] = True
			return self.runs.report(seed, mu_i=1.0, mu_mi=0.005, **overrides).weighted_f1

		points = robustness_curve(run_f1, fractions=(0.5,), seeds=SEEDS)
		retention = {p.variant: p.retention for p in points if p.fraction == 0.5}
		self.assertGreaterEqual(retention["vad_vae"], retention["entangled"])


@unittest.skipUnless(SLOW, "slow end-to-end runs")
class TestGaussianOracle(unittest.TestCase):
	def test_estimates_order_correlations(self):
		rows = gaussian_estimates(rhos=(0.0, 0.5, 0.9), n=2048, steps=1000, seed=0)
		estimates = [row.estimate_nats for row in rows]
		self.assertLess(abs(estimates[0]), 0.1)
		self.assertLess(estimates[0], estimates[1])
		self.assertLess(estimates[1], estimates[2])
