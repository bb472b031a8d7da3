# Copyright (c) 2026, vad_vae contributors
# See license.txt

import tempfile
import unittest
from pathlib import Path

from vad_vae.config import TrainConfig
from vad_vae.exceptions import ParseError, SchemaError, UsageError


class TestTrainConfig(unittest.TestCase):
	def setUp(self):
		self.tmp = tempfile.TemporaryDirectory()
		self.root = Path(self.tmp.name)

	def tearDown(self):
		self.tmp.cleanup()

	def test_defaults(self):
		config = TrainConfig().validate()
		self.assertEqual((config.mu_e, config.mu_i), (0.8, 1.0))
		self.assertTrue(0.001 <= config.mu_mi <= 0.01)
		self.assertEqual(config.d_v + config.d_a + config.d_d + config.d_c, config.hidden)

	def test_dataset_batch_sizes(self):
		self.assertEqual(TrainConfig.for_dataset("iemocap").batch_size, 4)
		self.assertEqual(TrainConfig.for_dataset("meld").batch_size, 4)
		self.assertEqual(TrainConfig.for_dataset("dailydialog").batch_size, 16)
		with self.assertRaises(UsageError):
			TrainConfig.for_dataset("switchboard")

	def test_file_round_trip(self):
		config = TrainConfig(lr=3e-5, mu_mi=0.001, no_decoder=True, estimator_hidden=12, w_past=-1)
		path = self.root / "config.yaml"
		config.dump(path)
		loaded = TrainConfig.load(path)
		self.assertEqual(loaded, config)
		self.assertEqual(loaded.config_hash(), config.config_hash())

	def test_partial_file_keeps_defaults(self):
		path = self.root / "config.yaml"
		path.write_text("epochs: 2\nseed: 7\n")
		config = TrainConfig.load(path)
		self.assertEqual((config.epochs, config.seed, config.hidden), (2, 7, 128))

	def test_unknown_key(self):
		path = self.root / "config.yaml"
		path.write_text("learning_rate: 0.1\n")
		with self.assertRaises(SchemaError):
			TrainConfig.load(path)

	def test_bad_yaml(self):
		path = self.root / "config.yaml"
		path.write_text("epochs: [1, 2\n")
		with self.assertRaises(ParseError):
			TrainConfig.load(path)

	def test_overrides_are_typed(self):
		config = TrainConfig().apply_overrides(["lr=1e-3", "epochs=3", "no_vclub=true", "dataset=meld"])
		self.assertEqual(config.lr, 1e-3)
		self.assertIsInstance(config.lr, float)
		self.assertEqual(config.epochs, 3)
		self.assertTrue(config.no_vclub)
		self.assertEqual(config.dataset, "meld")

	def test_bad_overrides(self):
		for assignment in ("epochs", "missing=1", "epochs=two", "no_vclub=3"):
			with self.subTest(assignment=assignment), self.assertRaises(UsageError):
				TrainConfig().apply_overrides([assignment])

	def test_validate_ranges(self):
		for overrides in ({"mu_mi": -0.1}, {"warmup_ratio": 1.5}, {"d_v": 0}, {"label_noise": 0.6}, {"w_past": -2}):
			with self.subTest(**overrides), self.assertRaises(UsageError):
				TrainConfig(**overrides).validate()

	def test_hash_tracks_values(self):
		self.assertEqual(TrainConfig().config_hash(), TrainConfig().config_hash())
		self.assertNotEqual(TrainConfig().config_hash(), TrainConfig(mu_mi=0.01).config_hash())
		self.assertEqual(len(TrainConfig().config_hash()), 12)

	def test_run_dir_names_hash_and_seed(self):
		config = TrainConfig(seed=3)
		self.assertEqual(config.run_dir(self.root), self.root / f"{config.config_hash()}-s3")

	def test_ablation_switches(self):
		self.assertEqual(TrainConfig(no_a_sup=True).supervised_factors(), ("V", "D"))
		self.assertEqual(list(TrainConfig(entangled_baseline=True).latent_dims()), ["Z"])
		self.assertFalse(TrainConfig(entangled_baseline=True).uses_vclub())
		self.assertFalse(TrainConfig(encoder_only=True).uses_decoder())
