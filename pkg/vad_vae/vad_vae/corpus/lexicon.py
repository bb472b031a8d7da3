"""
Emotion-label VAD lexicons: label -> (valence, arousal, dominance) in [0, 1].
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import vad_vae
from vad_vae.exceptions import FileError, ParseError, SchemaError

LEXICON_DIR = Path(__file__).parent / "lexicons"
HEADER = ("label", "valence", "arousal", "dominance")


@dataclass(frozen=True)
class VadLexicon:
	name: str
	entries: dict
	"""label -> (v, a, d), in file order."""

	@property
	def labels(self):
		return tuple(self.entries)

	def __contains__(self, label):
		return label in self.entries

	def __getitem__(self, label):
		return self.entries[label]


def load_lexicon(path, name=None):
	"""Read a tab-separated lexicon with a `label valence arousal dominance` header.

	Raises:
		FileError: If the file cannot be read
		ParseError: For a malformed row (with its line number)
		SchemaError: For a wrong header, a duplicate label or a value outside [0, 1]
	"""
	path = Path(path)
	try:
		with open(path, encoding="utf-8", newline="") as handle:
			rows = list(csv.reader(handle, delimiter="\t"))
	except OSError as e:
		vad_vae.throw(f"cannot read lexicon {path}: {e}", FileError)

	if not rows or tuple(cell.strip().lower() for cell in rows[0]) != HEADER:
		vad_vae.throw(f"{path}: header must be {' '.join(HEADER)}", SchemaError)

	entries = {}
	for line_no, row in enumerate(rows[1:], start=2):
		if not row or not "".join(row).strip():
			continue
		if len(row) != 4:
			vad_vae.throw(f"{path}:{line_no}: expected 4 columns, got {len(row)}", ParseError)
		label = row[0].strip()
		try:
			values = tuple(float(cell) for cell in row[1:])
		except ValueError:
			vad_vae.throw(f"{path}:{line_no}: non-numeric VAD value", ParseError)
		if label in entries:
			vad_vae.throw(f"{path}:{line_no}: duplicate label '{label}'", SchemaError)
		if any(not 0.0 <= v <= 1.0 for v in values):
			vad_vae.throw(f"{path}:{line_no}: VAD values of '{label}' must lie in [0, 1]", SchemaError)
		entries[label] = values
	return VadLexicon(name=name or path.stem, entries=entries)


def write_lexicon(lexicon, path):
	with open(path, "w", encoding="utf-8", newline="") as handle:
		writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
		writer.writerow(HEADER)
		for label, values in lexicon.entries.items():
			writer.writerow([label, *(f"{v:.3f}" for v in values)])


def get_lexicon(name_or_path):
	"""Bundled lexicon by dataset name (iemocap, meld, dailydialog), or a lexicon file path."""
	bundled = LEXICON_DIR / f"{name_or_path}.tsv"
	if bundled.exists():
		return load_lexicon(bundled, name=str(name_or_path))
	return load_lexicon(name_or_path)


def lexicon_targets(lexicon, emotion, vad_override=None):
	"""Supervision triple for an utterance: its own VAD rating when it has one, else its label's.

	Raises:
		SchemaError: If the label has no lexicon entry
	"""
	if vad_override is not None:
		return tuple(float(v) for v in vad_override)
	if emotion not in lexicon:
		vad_vae.throw(f"emotion '{emotion}' missing from lexicon {lexicon.name}", SchemaError)
	return lexicon[emotion]


def rescale_vad(values, low=1.0, high=5.0):
	"""Map ratings on [low, high] linearly onto [0, 1]."""
	return tuple((float(v) - low) / (high - low) for v in values)
