"""
Training configuration: one flat dataclass, stored as a YAML document.
"""

import hashlib
import json
import types
from dataclasses import asdict, dataclass, fields
from dataclasses import replace as dataclass_replace
from pathlib import Path

import yaml

import vad_vae
from vad_vae.exceptions import FileError, ParseError, SchemaError, UsageError

DATASETS = ("iemocap", "meld", "dailydialog")

# Batch sizes are 4 everywhere except DailyDialog
DATASET_BATCH_SIZES = {"iemocap": 4, "meld": 4, "dailydialog": 16}

ALL_CONTEXT = -1


@dataclass
class TrainConfig:
	# Dimensions
	d_v: int = 8
	"""Valence latent size."""

	d_a: int = 8
	"""Arousal latent size."""

	d_d: int = 8
	"""Dominance latent size."""

	d_c: int = 104
	"""Content latent size."""

	hidden: int = 128
	"""Encoder/decoder hidden size."""

	embed: int = 64
	"""Token embedding size (shared by encoder and decoder)."""

	estimator_hidden: int | None = None
	"""Hidden width of the vCLUB estimator networks; None means twice the latent size."""

	# Loss weights
	alpha_v: float = 1.0
	alpha_a: float = 1.0
	alpha_d: float = 1.0
	alpha_c: float = 1.0
	"""Per-factor KL weights inside the ELBO term."""

	mu_e: float = 0.8
	"""Weight of the ELBO term."""

	mu_i: float = 1.0
	"""Weight of the VAD informativeness term."""

	mu_mi: float = 0.005
	"""Weight of the vCLUB independence term."""

	# Context
	w_past: int = 3
	"""Past context window in utterances, -1 for the whole dialogue."""

	w_future: int = 3
	"""Future context window in utterances, -1 for the whole dialogue."""

	max_len: int = 128
	"""Maximum model input length in tokens."""

	# Optimizer
	lr: float = 1e-3
	"""Peak learning rate."""

	warmup_ratio: float = 0.2
	weight_decay: float = 0.01
	dropout: float = 0.1

	estimator_lr_scale: float = 10.0
	"""Estimator learning rate as a multiple of `lr`."""

	# Schedule
	epochs: int = 10
	batch_size: int = 4
	min_freq: int = 1
	"""Minimum token frequency to enter the vocabulary."""

	log_every: int = 50
	"""Write a step record to the training log every this many steps."""

	mi_refit_steps: int = 300
	"""Estimator steps on frozen test latents before an MI report."""

	seed: int = 42
	dataset: str = "iemocap"
	"""Label set and VAD lexicon: iemocap, meld or dailydialog."""

	label_noise: float = 0.0
	"""Fraction of training labels replaced by a different label."""

	# Ablations
	no_vclub: bool = False
	no_decoder: bool = False
	no_v_sup: bool = False
	no_a_sup: bool = False
	no_d_sup: bool = False

	entangled_baseline: bool = False
	"""Single undivided Gaussian latent, no VAD heads and no MI term."""

	encoder_only: bool = False
	"""Classify straight from the encoder output: no latents, decoder, VAD heads or MI term."""

	@classmethod
	def for_dataset(cls, dataset, **overrides):
		"""Defaults for `dataset`, including its batch size."""
		if dataset not in DATASETS:
			vad_vae.throw(f"Unknown dataset '{dataset}' (expected one of {', '.join(DATASETS)})", UsageError)
		values = {"dataset": dataset, "batch_size": DATASET_BATCH_SIZES[dataset]}
		values.update(overrides)
		return cls(**values)

	@classmethod
	def load(cls, path):
		"""Read a YAML config file; missing keys keep their defaults.

		Raises:
			FileError: If the file cannot be read
			ParseError: If it is not valid YAML
			SchemaError: If it is not a mapping of known keys
		"""
		try:
			text = Path(path).read_text(encoding="utf-8")
		except OSError as e:
			vad_vae.throw(f"cannot read config {path}: {e}", FileError)
		try:
			values = yaml.safe_load(text)
		except yaml.YAMLError as e:
			vad_vae.throw(f"config {path} is not valid YAML: {e}", ParseError)

		if values is None:
			values = {}
		if not isinstance(values, dict):
			vad_vae.throw(f"config {path} must be a mapping", SchemaError)
		known = {f.name for f in fields(cls)}
		unknown = sorted(set(values) - known)
		if unknown:
			vad_vae.throw(f"config {path}: unknown keys {', '.join(unknown)}", SchemaError)
		config = cls()
		return config.replace(**{key: _coerce(config, key, value, SchemaError) for key, value in values.items()})

	def dump(self, path):
		path = Path(path)
		path.parent.mkdir(parents=True, exist_ok=True)
		path.write_text(yaml.safe_dump(asdict(self), sort_keys=False), encoding="utf-8")

	def replace(self, **overrides):
		return dataclass_replace(self, **overrides)

	def apply_overrides(self, assignments):
		"""Apply `key=value` strings (values parsed as YAML scalars, typed by the field).

		Raises:
			UsageError: For a malformed assignment or an unknown key
		"""
		known = {f.name for f in fields(self)}
		updates = {}
		for assignment in assignments or ():
			key, sep, text = assignment.partition("=")
			key = key.strip()
			if not sep or not key:
				vad_vae.throw(f"override '{assignment}' is not key=value", UsageError)
			if key not in known:
				vad_vae.throw(f"Unknown config key '{key}'", UsageError)
			updates[key] = _coerce(self, key, yaml.safe_load(text), UsageError)
		return self.replace(**updates)

	def validate(self):
		"""Raises UsageError for the first value out of its range."""
		for name in ("d_v", "d_a", "d_d", "d_c", "hidden", "embed", "epochs", "batch_size", "min_freq", "max_len"):
			if getattr(self, name) < 1:
				vad_vae.throw(f"{name} must be at least 1, got {getattr(self, name)}", UsageError)
		if self.estimator_hidden is not None and self.estimator_hidden < 1:
			vad_vae.throw("estimator_hidden must be at least 1", UsageError)
		for name in ("alpha_v", "alpha_a", "alpha_d", "alpha_c", "mu_e", "mu_i", "mu_mi", "weight_decay"):
			if getattr(self, name) < 0:
				vad_vae.throw(f"{name} must not be negative, got {getattr(self, name)}", UsageError)
		if not 0.0 <= self.warmup_ratio <= 1.0:
			vad_vae.throw(f"warmup_ratio must lie in [0, 1], got {self.warmup_ratio}", UsageError)
		if not 0.0 <= self.dropout < 1.0:
			vad_vae.throw(f"dropout must lie in [0, 1), got {self.dropout}", UsageError)
		if not 0.0 <= self.label_noise <= 0.5:
			vad_vae.throw(f"label_noise must lie in [0, 0.5], got {self.label_noise}", UsageError)
		if self.lr <= 0 or self.estimator_lr_scale <= 0:
			vad_vae.throw("learning rates must be positive", UsageError)
		for name in ("w_past", "w_future"):
			if getattr(self, name) < ALL_CONTEXT:
				vad_vae.throw(f"{name} must be >= 0, or -1 for the whole dialogue", UsageError)
		if self.mi_refit_steps < 0 or self.log_every < 1:
			vad_vae.throw("mi_refit_steps must be >= 0 and log_every >= 1", UsageError)
		if self.dataset not in DATASETS:
			vad_vae.throw(f"Unknown dataset '{self.dataset}'", UsageError)
		if self.entangled_baseline and self.encoder_only:
			vad_vae.throw("entangled_baseline and encoder_only exclude each other", UsageError)
		return self

	def config_hash(self):
		"""First 12 hex digits of the sha256 of the canonical JSON form."""
		canonical = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
		return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

	def run_dir(self, root):
		return Path(root) / f"{self.config_hash()}-s{self.seed}"

	def latent_dims(self):
		"""Latent sizes by factor, in concatenation order."""
		if self.entangled_baseline:
			return {"Z": self.d_v + self.d_a + self.d_d + self.d_c}
		return {"V": self.d_v, "A": self.d_a, "D": self.d_d, "C": self.d_c}

	def kl_weights(self):
		if self.entangled_baseline:
			return {"Z": self.alpha_c}
		return {"V": self.alpha_v, "A": self.alpha_a, "D": self.alpha_d, "C": self.alpha_c}

	def supervised_factors(self):
		"""Factors whose VAD prediction enters the informativeness loss."""
		if self.entangled_baseline or self.encoder_only:
			return ()
		skip = {"V": self.no_v_sup, "A": self.no_a_sup, "D": self.no_d_sup}
		return tuple(factor for factor in ("V", "A", "D") if not skip[factor])

	def uses_decoder(self):
		return not (self.no_decoder or self.encoder_only)

	def uses_vclub(self):
		return not (self.no_vclub or self.entangled_baseline or self.encoder_only)


def _coerce(config, key, value, exc):
	field_type = next(f.type for f in fields(config) if f.name == key)
	allowed = field_type.__args__ if isinstance(field_type, types.UnionType) else (field_type,)
	if value is None:
		if type(None) in allowed:
			return None
		vad_vae.throw(f"{key} may not be empty", exc)
	target = next(t for t in allowed if t is not type(None))
	if target is bool:
		if not isinstance(value, bool):
			vad_vae.throw(f"{key} must be true or false, got {value!r}", exc)
		return value
	if target is int:
		if isinstance(value, bool) or not isinstance(value, int):
			vad_vae.throw(f"{key} must be an integer, got {value!r}", exc)
		return value
	if target is float:
		# YAML 1.1 reads "1e-3" as a string
		if isinstance(value, str):
			try:
				value = float(value)
			except ValueError:
				pass
		if isinstance(value, bool) or not isinstance(value, int | float):
			vad_vae.throw(f"{key} must be a number, got {value!r}", exc)
		return float(value)
	return str(value)


def resolve_config(path=None, dataset=None, assignments=()):
	"""Config for a command: file (or dataset defaults), then `key=value` overrides, validated."""
	if path:
		config = TrainConfig.load(path)
		if dataset:
			config = config.replace(dataset=dataset)
	else:
		config = TrainConfig.for_dataset(dataset or TrainConfig.dataset)
	return config.apply_overrides(assignments).validate()
