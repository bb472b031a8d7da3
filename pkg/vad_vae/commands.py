"""
Command line entry point: `vad-vae <command> ...`.

Subcommands are resolved through `vad_vae.hooks.command_hooks`. Errors raised
with `vad_vae.throw` end the process with the exit code of their class.
"""

import argparse
import importlib
import sys

import vad_vae
from vad_vae import hooks
from vad_vae.config import DATASETS
from vad_vae.exceptions import UsageError, ValidationError


def get_attr(dotted_path):
	"""Resolve "package.module.function" to the function."""
	module_name, _, attr = dotted_path.rpartition(".")
	return getattr(importlib.import_module(module_name), attr)


def _floats(text):
	try:
		return [float(v) for v in text.split(",") if v.strip()]
	except ValueError:
		raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _ints(text):
	try:
		return [int(v) for v in text.split(",") if v.strip()]
	except ValueError:
		raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _add_config_options(parser):
	parser.add_argument("--config", help="YAML config file")
	parser.add_argument("--dataset", choices=DATASETS, help="label set and lexicon (default: iemocap)")
	parser.add_argument(
		"--set", action="append", default=[], metavar="KEY=VALUE", help="override a config value (repeatable)"
	)


def build_parser():
	parser = argparse.ArgumentParser(prog="vad-vae", description=hooks.app_description)
	parser.add_argument("--quiet", action="store_true", help="no progress bars, warnings only")
	sub = parser.add_subparsers(dest="command", required=True)

	p = sub.add_parser("train", help="train a model and keep its best checkpoint")
	_add_config_options(p)
	p.add_argument("--train", required=True, help="training corpus (JSONL)")
	p.add_argument("--dev", help="validation corpus (JSONL)")
	p.add_argument("--test", help="test corpus (JSONL)")
	p.add_argument("--out-root", default="runs", help="parent of the run directory")

	p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
	p.add_argument("--checkpoint", required=True, help="checkpoint file or run directory")
	p.add_argument("--corpus", required=True)
	p.add_argument("--out", help="write the report JSON here")
	p.add_argument("--mi-refit-steps", type=int, help="estimator steps before the MI report")

	p = sub.add_parser("gen-data", help="write a synthetic train/dev/test corpus")
	p.add_argument("--out-dir", required=True)
	p.add_argument("--dataset", choices=DATASETS, default="iemocap")
	p.add_argument("--dialogues", type=int, default=2000)
	p.add_argument("--seed", type=int, default=0)
	p.add_argument("--human-vad", action="store_true", help="attach per-utterance VAD ratings on the 1-5 scale")

	p = sub.add_parser("sweep", help="train a grid of settings and tabulate the results")
	p.add_argument("kind", choices=("context_window", "mi_coefficient", "robustness"))
	_add_config_options(p)
	p.add_argument("--grid", type=_floats, help="comma-separated grid values (default: the kind's grid)")
	p.add_argument("--seeds", type=_ints, default=[0], help="comma-separated seeds")
	p.add_argument("--train", required=True)
	p.add_argument("--dev", required=True)
	p.add_argument("--test", required=True)
	p.add_argument("--out", required=True, help="result CSV")
	p.add_argument("--out-root", default="runs")
	p.add_argument("--workers", type=int, default=1)

	p = sub.add_parser("mi-probe", help="vCLUB estimates on Gaussian oracles or exported latents")
	p.add_argument("--latents", help="latent export CSV (omit for the Gaussian oracle)")
	p.add_argument("--rho", type=_floats, default=[0.0, 0.5, 0.9])
	p.add_argument("--n", type=int, default=2048)
	p.add_argument("--dim", type=int, default=1)
	p.add_argument("--steps", type=int, default=1000)
	p.add_argument("--seed", type=int, default=0)
	p.add_argument("--out", help="result CSV")

	p = sub.add_parser("export-latents", help="write latent means as CSV")
	p.add_argument("--checkpoint", required=True)
	p.add_argument("--corpus", required=True)
	p.add_argument("--out", required=True)

	p = sub.add_parser("swap-demo", help="decode a content latent with another utterance's V/A/D latents")
	p.add_argument("--checkpoint", required=True)
	p.add_argument("--corpus", required=True)
	p.add_argument("--source", required=True, help="utterance id <dialogue id>:<index>")
	p.add_argument("--donor", required=True, help="utterance id <dialogue id>:<index>")
	p.add_argument("--factors", default="V,A,D", help="factors taken from the donor")
	p.add_argument("--max-len", type=int, default=40)
	return parser


def main(argv=None):
	parser = build_parser()
	try:
		args = parser.parse_args(argv)
	except SystemExit as e:
		# argparse exits with 2 on bad usage; usage errors are 1 here
		return 0 if e.code == 0 else UsageError.exit_code

	vad_vae.setup_logging("WARNING" if args.quiet else "INFO")
	handler = get_attr(hooks.command_hooks[args.command])
	try:
		handler(args)
	except ValidationError as e:
		print(f"error: {e}", file=sys.stderr)
		return e.exit_code
	return 0


if __name__ == "__main__":
	sys.exit(main())
