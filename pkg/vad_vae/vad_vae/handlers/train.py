"""
Training runs for the VAD-VAE.

Every iteration first takes one estimator step on the detached latents of the
batch, then one model step on the multi-task loss through the frozen estimators.
Each epoch ends with a validation report; the best checkpoint by validation F1
is kept in the run directory.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

import vad_vae
from vad_vae.config import TrainConfig, resolve_config
from vad_vae.exceptions import FileError, NumericError, SchemaError
from vad_vae.vad_vae.corpus import (
	Tokenizer,
	build_inputs,
	build_vocab,
	count_batches,
	get_lexicon,
	inject_label_noise,
	iter_batches,
	load_corpus,
)
from vad_vae.vad_vae.metrics import evaluate
from vad_vae.vad_vae.model import VAD_FACTORS, VadVae
from vad_vae.vad_vae.nn_core import AdamW, load_checkpoint, save_checkpoint
from vad_vae.vad_vae.tensor import Tape, backward, use_tape
from vad_vae.vad_vae.vclub import build_estimators, estimator_update_step

CHECKPOINT_NAME = "best.ckpt"
LOG_NAME = "train_log.jsonl"

# Independent random streams of one run
MODEL_STREAM = 0
ESTIMATOR_STREAM = 1
STEP_STREAM = 2


@dataclass
class PreparedData:
	labels: tuple
	lexicon: object
	tokenizer: Tokenizer
	train: list
	dev: list = field(default_factory=list)
	test: list = field(default_factory=list)


@dataclass
class StepResult:
	breakdown: object
	estimator_logliks: dict
	lr: float | None = None


@dataclass
class TrainResult:
	run_dir: Path
	checkpoint: Path
	best_epoch: int
	best_f1: float
	history: list
	test_report: object = None


@dataclass
class TrainedModel:
	config: TrainConfig
	model: VadVae
	tokenizer: Tokenizer
	labels: tuple
	lexicon: object


def load_items(path, config, tokenizer, labels, lexicon):
	dialogues = load_corpus(path, labels=labels)
	return build_inputs(dialogues, tokenizer, config, labels=labels, lexicon=lexicon)


def prepare_data(config, train_path, dev_path=None, test_path=None):
	"""Load the splits, add training label noise and build the vocabulary from the training split."""
	lexicon = get_lexicon(config.dataset)
	labels = lexicon.labels
	train_dialogues = load_corpus(train_path, labels=labels)
	if config.label_noise > 0:
		train_dialogues = inject_label_noise(train_dialogues, config.label_noise, config.seed, labels)
	tokenizer = build_vocab(train_dialogues, config.min_freq)
	return PreparedData(
		labels=labels,
		lexicon=lexicon,
		tokenizer=tokenizer,
		train=build_inputs(train_dialogues, tokenizer, config, labels=labels, lexicon=lexicon),
		dev=load_items(dev_path, config, tokenizer, labels, lexicon) if dev_path else [],
		test=load_items(test_path, config, tokenizer, labels, lexicon) if test_path else [],
	)


def build_model(config, vocab_size, n_labels):
	model = VadVae(config, vocab_size, n_labels, np.random.default_rng([config.seed, MODEL_STREAM]))
	estimators = None
	if config.uses_vclub():
		estimators = build_estimators(
			config.latent_dims(),
			lr=config.lr * config.estimator_lr_scale,
			rng=np.random.default_rng([config.seed, ESTIMATOR_STREAM]),
			hidden=config.estimator_hidden,
		)
	return model, estimators


def train_step(model, estimators, optimizer, batch, rng, total_steps):
	"""One iteration: estimator step on detached latents, then a model step.

	A non-finite loss returns before any parameter changes, with `lr` left None.
	"""
	with use_tape(Tape()):
		encoded = model.encode_latents(batch, training=True, rng=rng)
		logliks = {}
		if estimators:
			logliks = estimator_update_step(estimators, {f: encoded[1].z[f] for f in VAD_FACTORS})
		breakdown = model.forward_loss(batch, estimators, rng=rng, encoded=encoded)
		if not breakdown.is_finite():
			return StepResult(breakdown, logliks)
		optimizer.zero_grad()
		backward(breakdown.loss)
	return StepResult(breakdown, logliks, optimizer.step(total_steps))


def checkpoint_extra(config, tokenizer, labels, epoch, dev_f1):
	return {
		"config": asdict(config),
		"vocab": tokenizer.to_list(),
		"labels": list(labels),
		"epoch": epoch,
		"dev_f1": dev_f1,
	}


def _abort(run_dir, epoch, step, message, breakdown=None):
	dump = {"epoch": epoch, "step": step, "message": message}
	if breakdown is not None:
		dump["breakdown"] = breakdown.to_dict()
	with open(run_dir / "abort.json", "w", encoding="utf-8") as f:
		json.dump(dump, f, indent=2, sort_keys=True, default=str)
	vad_vae.log_error(message, "Training aborted")
	vad_vae.throw(f"{message} (diagnostics in {run_dir / 'abort.json'})", NumericError)


class RunLog:
	"""Append-only JSONL training log."""

	def __init__(self, path):
		self.path = Path(path)
		self.path.write_text("", encoding="utf-8")

	def write(self, record):
		with open(self.path, "a", encoding="utf-8") as f:
			f.write(json.dumps(record, sort_keys=True) + "\n")


def train(config, train_path, dev_path=None, test_path=None, out_root="runs", quiet=False):
	"""Train one model and keep its best checkpoint under `config.run_dir(out_root)`.

	Raises:
		NumericError: On a non-finite loss or gradient; `abort.json` holds the diagnostics
	"""
	config = config.validate()
	log = vad_vae.logger("train")
	run_dir = config.run_dir(out_root)
	try:
		run_dir.mkdir(parents=True, exist_ok=True)
	except OSError as e:
		vad_vae.throw(f"cannot create run directory {run_dir}: {e}", FileError)
	config.dump(run_dir / "config.yaml")

	data = prepare_data(config, train_path, dev_path, test_path)
	model, estimators = build_model(config, len(data.tokenizer), len(data.labels))
	optimizer = AdamW(model.parameters(), lr=config.lr, warmup_ratio=config.warmup_ratio, weight_decay=config.weight_decay)
	rng = np.random.default_rng([config.seed, STEP_STREAM])
	total_steps = config.epochs * count_batches(data.train, config.batch_size)
	# Validation skips the estimator refit; the final test report runs it
	dev_config = config.replace(mi_refit_steps=0)

	run_log = RunLog(run_dir / LOG_NAME)
	checkpoint = run_dir / CHECKPOINT_NAME
	history = []
	best_f1, best_epoch, step = -1.0, -1, 0
	log.info(f"training {len(data.train)} utterances for {config.epochs} epochs into {run_dir}")

	for epoch in range(config.epochs):
		batches = iter_batches(data.train, config.batch_size, config.seed, epoch, pad_id=data.tokenizer.pad_id)
		progress = tqdm(
			batches, total=count_batches(data.train, config.batch_size), desc=f"epoch {epoch + 1}", disable=quiet
		)
		for batch in progress:
			step += 1
			try:
				result = train_step(model, estimators, optimizer, batch, rng, total_steps)
			except NumericError as e:
				_abort(run_dir, epoch, step, str(e))
			if result.lr is None:
				_abort(run_dir, epoch, step, "non-finite training loss", result.breakdown)
			if step % config.log_every == 0:
				record = {"kind": "step", "epoch": epoch, "step": step, "lr": result.lr, **result.breakdown.to_dict()}
				if result.estimator_logliks:
					record["estimator_loglik"] = result.estimator_logliks
				run_log.write(record)
			progress.set_postfix(loss=f"{result.breakdown.total:.4f}")

		if data.dev:
			report = evaluate(model, data.dev, data.labels, dev_config, pad_id=data.tokenizer.pad_id)
			f1 = report.primary_f1(config.dataset)
			run_log.write({"kind": "epoch", "epoch": epoch, "step": step, "dev": report.to_dict()})
		else:
			report, f1 = None, float(epoch)
		history.append({"epoch": epoch, "dev_f1": None if report is None else f1})
		if f1 > best_f1:
			best_f1, best_epoch = f1, epoch
			save_checkpoint(
				checkpoint,
				model.state_dict(),
				config.seed,
				config.config_hash(),
				checkpoint_extra(config, data.tokenizer, data.labels, epoch, f1 if report else None),
			)
			log.info(f"epoch {epoch + 1}: new best checkpoint (F1 {f1:.4f})" if report else f"epoch {epoch + 1} saved")

	test_report = None
	if data.test:
		model.load_state_dict(load_checkpoint(checkpoint).parameters)
		test_report = evaluate(model, data.test, data.labels, config, pad_id=data.tokenizer.pad_id)
		test_report.write(run_dir / "test_report.json")
		run_log.write({"kind": "test", "epoch": best_epoch, "test": test_report.to_dict()})

	return TrainResult(
		run_dir=run_dir,
		checkpoint=checkpoint,
		best_epoch=best_epoch,
		best_f1=best_f1 if data.dev else float("nan"),
		history=history,
		test_report=test_report,
	)


def load_trained(path):
	"""Rebuild a trained model from a checkpoint file (or a run directory holding one).

	Raises:
		SchemaError: If the stored configuration does not match the checkpoint
	"""
	path = Path(path)
	if path.is_dir():
		path = path / CHECKPOINT_NAME
	ckpt = load_checkpoint(path)
	for key in ("config", "vocab", "labels"):
		if key not in ckpt.extra:
			vad_vae.throw(f"checkpoint {path} lacks '{key}'", SchemaError)
	config = TrainConfig(**ckpt.extra["config"])
	if config.config_hash() != ckpt.config_hash:
		vad_vae.throw(f"checkpoint {path}: configuration hash mismatch", SchemaError)

	tokenizer = Tokenizer(ckpt.extra["vocab"])
	labels = tuple(ckpt.extra["labels"])
	model = VadVae(config, len(tokenizer), len(labels), np.random.default_rng([config.seed, MODEL_STREAM]))
	model.load_state_dict(ckpt.parameters)
	return TrainedModel(config=config, model=model, tokenizer=tokenizer, labels=labels, lexicon=get_lexicon(config.dataset))


def train_command(args):
	config = resolve_config(args.config, args.dataset, args.set)
	run_dir = config.run_dir(args.out_root)
	run_dir.mkdir(parents=True, exist_ok=True)
	vad_vae.setup_logging("WARNING" if args.quiet else "INFO", run_dir / "train.log")
	result = train(config, args.train, args.dev, args.test, out_root=args.out_root, quiet=args.quiet)
	print(f"run: {result.run_dir}")
	print(f"best epoch: {result.best_epoch + 1}  dev F1: {result.best_f1:.4f}")
	if result.test_report is not None:
		print(f"test F1: {result.test_report.primary_f1(config.dataset):.4f}")
