"""
Evaluation measurements: weighted F1, micro-F1 without the neutral class, Pearson
informativeness of the VAD predictions, the vCLUB independence report, label-noise
retention curves and the latent mean export.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.metrics import f1_score, precision_recall_fscore_support

import vad_vae
from vad_vae.exceptions import FileError, UsageError
from vad_vae.vad_vae.corpus import iter_batches
from vad_vae.vad_vae.model import VAD_FACTORS
from vad_vae.vad_vae.vclub import build_estimators, heldout_mi_report

NEUTRAL = "neutral"
NOISE_FRACTIONS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


@dataclass
class MetricValue:
	"""A score that may be undefined (zero denominator); undefined scores read as 0."""

	value: float
	undefined: bool = False

	def __float__(self):
		return float(self.value)

	def to_dict(self):
		return {"value": self.value, "undefined": self.undefined}


@dataclass
class ClassScore:
	label: str
	precision: float
	recall: float
	f1: float
	support: int


def _check_predictions(preds, golds, labels):
	preds, golds = list(preds), list(golds)
	if not golds:
		vad_vae.throw("cannot score an empty prediction list", UsageError)
	if len(preds) != len(golds):
		vad_vae.throw(f"{len(preds)} predictions for {len(golds)} gold labels", UsageError)
	unknown = sorted((set(preds) | set(golds)) - set(labels), key=str)
	if unknown:
		vad_vae.throw(f"labels outside the label set: {', '.join(map(str, unknown))}", UsageError)
	return preds, golds


def confusion_counts(preds, golds, labels):
	"""label -> (true positives, false positives, false negatives)"""
	preds, golds = _check_predictions(preds, golds, labels)
	counts = {label: [0, 0, 0] for label in labels}
	for pred, gold in zip(preds, golds, strict=True):
		if pred == gold:
			counts[gold][0] += 1
		else:
			counts[pred][1] += 1
			counts[gold][2] += 1
	return {label: tuple(value) for label, value in counts.items()}


def per_class(preds, golds, labels):
	preds, golds = _check_predictions(preds, golds, labels)
	precision, recall, f1, support = precision_recall_fscore_support(
		golds, preds, labels=list(labels), zero_division=0
	)
	return [
		ClassScore(label, float(p), float(r), float(f), int(s))
		for label, p, r, f, s in zip(labels, precision, recall, f1, support, strict=True)
	]


def weighted_f1(preds, golds, labels):
	"""Class F1 averaged with support weights; absent classes score 0.

	Raises:
		UsageError: On empty input, length mismatch or labels outside `labels`
	"""
	preds, golds = _check_predictions(preds, golds, labels)
	return float(f1_score(golds, preds, labels=list(labels), average="weighted", zero_division=0))


def micro_f1_excluding(preds, golds, labels, excluded=NEUTRAL):
	"""Micro-averaged F1 over the confusion counts of every class but `excluded`.

	Gold-`excluded` items count only as false positives of the class predicted
	for them; predicting `excluded` for another gold label is a false negative.
	With no retained gold or no retained prediction the score is 0 and flagged.

	Raises:
		UsageError: If `excluded` is not in `labels`, or as weighted_f1
	"""
	if excluded not in labels:
		vad_vae.throw(f"label '{excluded}' is not in the label set", UsageError)
	preds, golds = _check_predictions(preds, golds, labels)
	counts = confusion_counts(preds, golds, labels)
	tp = sum(c[0] for label, c in counts.items() if label != excluded)
	fp = sum(c[1] for label, c in counts.items() if label != excluded)
	fn = sum(c[2] for label, c in counts.items() if label != excluded)
	if tp + fp == 0 or tp + fn == 0:
		return MetricValue(0.0, undefined=True)
	kept = [label for label in labels if label != excluded]
	return MetricValue(float(f1_score(golds, preds, labels=kept, average="micro", zero_division=0)))


def pearson(x, y):
	"""Pearson correlation; flagged undefined (value 0) for fewer than two points or zero variance."""
	x = np.asarray(x, dtype=np.float64).reshape(-1)
	y = np.asarray(y, dtype=np.float64).reshape(-1)
	if len(x) != len(y):
		vad_vae.throw(f"pearson needs equal lengths, got {len(x)} and {len(y)}", UsageError)
	if len(x) < 2:
		return MetricValue(0.0, undefined=True)
	dx = x - x.mean()
	dy = y - y.mean()
	sxx = float(np.dot(dx, dx))
	syy = float(np.dot(dy, dy))
	if sxx == 0.0 or syy == 0.0:
		return MetricValue(0.0, undefined=True)
	return MetricValue(float(np.dot(dx, dy)) / math.sqrt(sxx * syy))


# ============================================================================
# REPORT
# ============================================================================


@dataclass
class EvalReport:
	weighted_f1: float
	micro_f1_no_neutral: MetricValue | None
	pearson: dict
	"""factor -> MetricValue"""
	mi_report: object = None
	per_class: list = field(default_factory=list)
	n_utterances: int = 0

	def primary_f1(self, dataset):
		"""The score a dataset is reported with: micro-F1 without neutral on DailyDialog."""
		if dataset == "dailydialog" and self.micro_f1_no_neutral is not None:
			return float(self.micro_f1_no_neutral)
		return self.weighted_f1

	def to_dict(self):
		return {
			"n_utterances": self.n_utterances,
			"weighted_f1": self.weighted_f1,
			"micro_f1_no_neutral": None if self.micro_f1_no_neutral is None else self.micro_f1_no_neutral.to_dict(),
			"pearson": {factor: value.to_dict() for factor, value in self.pearson.items()},
			"mi": None if self.mi_report is None else self.mi_report.to_dict(),
			"per_class": [vars(score) for score in self.per_class],
		}

	def to_json(self):
		return json.dumps(self.to_dict(), indent=2, sort_keys=True)

	def write(self, path):
		try:
			with open(path, "w", encoding="utf-8") as f:
				f.write(self.to_json() + "\n")
		except OSError as e:
			vad_vae.log_error(str(e), "Eval report")
			vad_vae.throw(f"cannot write {path}: {e}", FileError)


def collect_outputs(model, items, batch_size=32, pad_id=0):
	"""Evaluation-mode logits, VAD predictions and latent means of `items`, in order.

	Raises:
		UsageError: If there are no items
	"""
	if not items:
		vad_vae.throw("no utterances to evaluate", UsageError)
	logits, vad, means = [], [], {}
	for batch in iter_batches(items, batch_size, shuffle=False, pad_id=pad_id):
		out = model.predict(batch)
		logits.append(out["logits"])
		vad.append(out["vad"])
		for factor, value in out["means"].items():
			means.setdefault(factor, []).append(value)
	return {
		"logits": np.concatenate(logits),
		"vad": np.concatenate(vad),
		"means": {factor: np.concatenate(parts) for factor, parts in means.items()},
	}


def refit_mi_report(means, config):
	"""Fit fresh pair estimators on half of the frozen latent means and report vCLUB on the other half.

	Returns None without all three VAD factors or with fewer than 4 utterances.
	"""
	if any(factor not in means for factor in VAD_FACTORS) or len(means["V"]) < 4:
		return None
	dims = {factor: means[factor].shape[1] for factor in VAD_FACTORS}
	rng = np.random.default_rng(config.seed)
	estimators = build_estimators(
		dims,
		lr=config.lr * config.estimator_lr_scale,
		rng=rng,
		hidden=config.estimator_hidden,
	)
	return heldout_mi_report(estimators, {f: means[f] for f in VAD_FACTORS}, config.mi_refit_steps, rng)


def evaluate(model, items, labels, config, batch_size=32, pad_id=0):
	"""Score a frozen model on model inputs that carry gold emotions and VAD targets.

	Returns:
		EvalReport

	Raises:
		UsageError: If `items` is empty
	"""
	outputs = collect_outputs(model, items, batch_size, pad_id)
	preds = [labels[i] for i in outputs["logits"].argmax(axis=1)]
	golds = [item.emotion for item in items]

	targets = np.array([item.vad_target or (np.nan,) * 3 for item in items], dtype=np.float64)
	correlations = {}
	for column, factor in enumerate(VAD_FACTORS):
		predicted = outputs["vad"][:, column]
		if np.all(np.isnan(predicted)) or np.any(np.isnan(targets[:, column])):
			correlations[factor] = MetricValue(0.0, undefined=True)
		else:
			correlations[factor] = pearson(predicted, targets[:, column])

	report = EvalReport(
		weighted_f1=weighted_f1(preds, golds, labels),
		micro_f1_no_neutral=micro_f1_excluding(preds, golds, labels) if NEUTRAL in labels else None,
		pearson=correlations,
		mi_report=refit_mi_report(outputs["means"], config) if config.mi_refit_steps > 0 else None,
		per_class=per_class(preds, golds, labels),
		n_utterances=len(items),
	)
	vad_vae.logger("metrics").info(f"evaluated {len(items)} utterances: weighted F1 {report.weighted_f1:.4f}")
	return report


# ============================================================================
# LATENTS AND CURVES
# ============================================================================


def latent_header(dims):
	header = ["utterance_id", "dialogue_id", "speaker", "emotion"]
	for factor, dim in dims.items():
		header.extend(f"mu_{factor}_{i}" for i in range(dim))
	return header


def export_latents(model, items, path, batch_size=32, pad_id=0):
	"""Write the evaluation-mode latent means of every item as CSV.

	Raises:
		UsageError: If the model has no factor latents or there are no items
		FileError: If the file cannot be written
	"""
	if not model.factors:
		vad_vae.throw("this model has no latent factors to export", UsageError)
	means = collect_outputs(model, items, batch_size, pad_id)["means"]
	dims = {factor: means[factor].shape[1] for factor in model.factors}
	try:
		with open(path, "w", encoding="utf-8", newline="") as f:
			writer = csv.writer(f)
			writer.writerow(latent_header(dims))
			for row, item in enumerate(items):
				values = [repr(float(v)) for factor in dims for v in means[factor][row]]
				writer.writerow([item.utterance_id, item.dialogue_id, item.speaker, item.emotion, *values])
	except OSError as e:
		vad_vae.log_error(str(e), "Latent export")
		vad_vae.throw(f"cannot write {path}: {e}", FileError)
	return len(items)


@dataclass
class RetentionPoint:
	variant: str
	fraction: float
	f1: float
	"""Mean F1 across seeds."""
	retention: float
	"""Mean of F1(fraction) / F1(0) across seeds."""
	n_seeds: int


def robustness_curve(train_fn, fractions=NOISE_FRACTIONS, seeds=(0,), variants=("vad_vae", "entangled")):
	"""Retention of F1 under label noise for each model variant.

	Args:
		train_fn: Callable (variant, fraction, seed) -> test F1
		fractions: Label-noise fractions; 0 is always run as the reference
		seeds: At least one seed
		variants: Model variant names passed through to `train_fn`

	Returns:
		list[RetentionPoint]: sorted by (variant, fraction)
	"""
	seeds = list(seeds)
	if not seeds:
		vad_vae.throw("the robustness curve needs at least one seed", UsageError)
	fractions = sorted({0.0, *map(float, fractions)})

	points = []
	for variant in sorted(variants):
		scores = {fraction: [train_fn(variant, fraction, seed) for seed in seeds] for fraction in fractions}
		reference = scores[0.0]
		for fraction in fractions:
			ratios = [f1 / base if base > 0 else float("nan") for f1, base in zip(scores[fraction], reference, strict=True)]
			points.append(
				RetentionPoint(variant, fraction, float(np.mean(scores[fraction])), float(np.mean(ratios)), len(seeds))
			)
	return points
