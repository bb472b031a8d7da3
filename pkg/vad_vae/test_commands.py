# Copyright (c) 2026, vad_vae contributors
# See license.txt

import contextlib
import io
import tempfile
import unittest
from pathlib import Path

from vad_vae import hooks
from vad_vae.commands import build_parser, get_attr, main


def run(*argv):
	out, err = io.StringIO(), io.StringIO()
	with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
		code = main(list(argv))
	return code, out.getvalue(), err.getvalue()


class TestCommands(unittest.TestCase):
	def setUp(self):
		self.tmp = tempfile.TemporaryDirectory()
		self.root = Path(self.tmp.name)

	def tearDown(self):
		self.tmp.cleanup()

	def test_every_hook_resolves(self):
		for command, path in hooks.command_hooks.items():
			self.assertTrue(callable(get_attr(path)), command)

	def test_parser_knows_every_hook(self):
		parser = build_parser()
		for command in hooks.command_hooks:
			self.assertEqual(parser.parse_args(self._minimal_args(command)).command, command)

	def _minimal_args(self, command):
		required = {
			"train": ["--train", "t.jsonl"],
			"eval": ["--checkpoint", "c", "--corpus", "t.jsonl"],
			"gen-data": ["--out-dir", "d"],
			"sweep": ["robustness", "--train", "a", "--dev", "b", "--test", "c", "--out", "o.csv"],
			"mi-probe": [],
			"export-latents": ["--checkpoint", "c", "--corpus", "t.jsonl", "--out", "o.csv"],
			"swap-demo": ["--checkpoint", "c", "--corpus", "t.jsonl", "--source", "a:0", "--donor", "a:1"],
		}
		return [command, *required[command]]

	def test_bad_usage_exits_with_one(self):
		self.assertEqual(run("no-such-command")[0], 1)
		self.assertEqual(run("sweep", "robustness", "--grid", "a,b")[0], 1)

	def test_help_exits_cleanly(self):
		self.assertEqual(run("--help")[0], 0)

	def test_gen_data(self):
		code, out, _ = run("--quiet", "gen-data", "--out-dir", str(self.root / "data"), "--dialogues", "6")
		self.assertEqual(code, 0)
		self.assertIn("train: ", out)
		self.assertTrue((self.root / "data" / "test.jsonl").exists())

	def test_missing_corpus_exits_with_two(self):
		code, _, err = run(
			"--quiet", "train", "--train", str(self.root / "absent.jsonl"), "--out-root", str(self.root / "runs"),
			"--set", "epochs=1",
		)
		self.assertEqual(code, 2)
		self.assertIn("error: ", err)

	def test_bad_override_exits_with_one(self):
		code, _, _ = run("--quiet", "train", "--train", "t.jsonl", "--set", "no_such_key=1")
		self.assertEqual(code, 1)

	def test_missing_checkpoint_exits_with_two(self):
		code, _, _ = run("--quiet", "eval", "--checkpoint", str(self.root / "none.ckpt"), "--corpus", "t.jsonl")
		self.assertEqual(code, 2)

	def test_mi_estimates_command(self):
		out = self.root / "estimates.csv"
		code, printed, _ = run("--quiet", "mi-probe", "--rho", "0,0.5", "--n", "64", "--steps", "3", "--out", str(out))
		self.assertEqual(code, 0)
		self.assertEqual(printed.count("nats"), 2)
		self.assertEqual(out.read_text(encoding="utf-8").splitlines()[0], "pair,estimate_nats,analytic_mi,n_samples")
