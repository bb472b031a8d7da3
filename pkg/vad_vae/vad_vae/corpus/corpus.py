"""
Dialogue corpora stored as JSON lines, one dialogue per line:

	{"id": "d1", "vad_scale": [1, 5],
	 "utterances": [{"speaker": "A", "text": "...", "emotion": "happy", "vad": [4.5, 3.0, 3.5]}, ...]}

`vad` and `vad_scale` are optional. A `vad` on a [lo, hi] scale is rescaled to [0, 1].
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

import vad_vae
from vad_vae.exceptions import FileError, ParseError, SchemaError, UsageError
from vad_vae.vad_vae.corpus.lexicon import rescale_vad


@dataclass(frozen=True)
class Utterance:
	speaker: str
	tokens: tuple
	emotion: str
	vad_override: tuple | None = None

	@property
	def text(self):
		return " ".join(self.tokens)


@dataclass(frozen=True)
class Dialogue:
	id: str
	utterances: tuple = field(default_factory=tuple)

	def __len__(self):
		return len(self.utterances)

	def relabel(self, index, emotion):
		utterances = list(self.utterances)
		utterances[index] = replace(utterances[index], emotion=emotion)
		return replace(self, utterances=tuple(utterances))


def tokenize_text(text):
	"""Lowercased whitespace tokens."""
	return tuple(text.lower().split())


def count_utterances(dialogues):
	return sum(len(d) for d in dialogues)


def load_corpus(path, labels=None, vad_range=None):
	"""Read and validate a JSONL corpus.

	Args:
		path: Corpus file
		labels: Allowed emotion labels (None accepts any)
		vad_range: Scale (lo, hi) of utterance VAD ratings for dialogues that do not declare `vad_scale`;
			None means they are already on [0, 1]

	Returns:
		list[Dialogue]

	Raises:
		FileError: If the file cannot be read
		ParseError: For a line that is not a JSON object
		SchemaError: For missing fields, unknown emotions or VAD ratings out of range
	"""
	path = Path(path)
	try:
		lines = path.read_text(encoding="utf-8").splitlines()
	except OSError as e:
		vad_vae.throw(f"cannot read corpus {path}: {e}", FileError)

	allowed = None if labels is None else set(labels)
	dialogues = []
	seen = set()
	for line_no, line in enumerate(lines, start=1):
		if not line.strip():
			continue
		try:
			record = json.loads(line)
		except json.JSONDecodeError as e:
			vad_vae.throw(f"{path}:{line_no}: malformed JSON ({e.msg})", ParseError)
		if not isinstance(record, dict):
			vad_vae.throw(f"{path}:{line_no}: expected a JSON object", ParseError)
		dialogue = _parse_dialogue(record, allowed, vad_range, f"{path}:{line_no}")
		if dialogue.id in seen:
			vad_vae.throw(f"{path}:{line_no}: duplicate dialogue id '{dialogue.id}'", SchemaError)
		seen.add(dialogue.id)
		dialogues.append(dialogue)
	return dialogues


def _parse_dialogue(record, allowed, vad_range, where):
	if "id" not in record or not isinstance(record.get("utterances"), list):
		vad_vae.throw(f"{where}: a dialogue needs 'id' and an 'utterances' list", SchemaError)
	if not record["utterances"]:
		vad_vae.throw(f"{where}: dialogue '{record['id']}' has no utterances", SchemaError)
	scale = record.get("vad_scale", vad_range)

	utterances = []
	for index, item in enumerate(record["utterances"]):
		if not isinstance(item, dict) or not {"speaker", "text", "emotion"} <= set(item):
			vad_vae.throw(f"{where}: utterance {index} needs speaker, text and emotion", SchemaError)
		tokens = tokenize_text(str(item["text"]))
		if not tokens:
			vad_vae.throw(f"{where}: utterance {index} has no tokens", SchemaError)
		emotion = str(item["emotion"])
		if allowed is not None and emotion not in allowed:
			vad_vae.throw(f"{where}: utterance {index} has unknown emotion '{emotion}'", SchemaError)

		vad = item.get("vad")
		if vad is not None:
			if not isinstance(vad, list) or len(vad) != 3:
				vad_vae.throw(f"{where}: utterance {index} 'vad' must hold three numbers", SchemaError)
			vad = rescale_vad(vad, *scale) if scale is not None else tuple(float(v) for v in vad)
			if any(not 0.0 <= v <= 1.0 for v in vad):
				vad_vae.throw(f"{where}: utterance {index} VAD {vad} outside [0, 1] after rescaling", SchemaError)
		utterances.append(Utterance(speaker=str(item["speaker"]), tokens=tokens, emotion=emotion, vad_override=vad))
	return Dialogue(id=str(record["id"]), utterances=tuple(utterances))


def write_corpus(dialogues, path, vad_scale=None):
	"""Write dialogues as JSONL.

	VAD overrides are written on [0, 1], or mapped onto `vad_scale` (lo, hi)
	and declared per dialogue.
	"""
	path = Path(path)
	try:
		path.parent.mkdir(parents=True, exist_ok=True)
		with open(path, "w", encoding="utf-8") as handle:
			for dialogue in dialogues:
				utterances = []
				for utt in dialogue.utterances:
					item = {"speaker": utt.speaker, "text": utt.text, "emotion": utt.emotion}
					if utt.vad_override is not None:
						vad = list(utt.vad_override)
						if vad_scale is not None:
							low, high = vad_scale
							vad = [round(low + v * (high - low), 6) for v in vad]
						item["vad"] = vad
					utterances.append(item)
				record = {"id": dialogue.id, "utterances": utterances}
				if vad_scale is not None:
					record["vad_scale"] = list(vad_scale)
				handle.write(json.dumps(record, ensure_ascii=False) + "\n")
	except OSError as e:
		vad_vae.throw(f"cannot write corpus {path}: {e}", FileError)


def split_corpus(dialogues, fractions=(0.8, 0.1, 0.1), seed=0):
	"""Shuffle dialogues with `seed` and cut them into train/dev/test by `fractions`."""
	if len(fractions) != 3 or any(f < 0 for f in fractions) or not np.isclose(sum(fractions), 1.0):
		vad_vae.throw(f"split fractions must be three non-negative numbers summing to 1, got {fractions}", UsageError)
	order = np.random.default_rng(seed).permutation(len(dialogues))
	n_train = int(round(fractions[0] * len(dialogues)))
	n_dev = int(round(fractions[1] * len(dialogues)))
	shuffled = [dialogues[i] for i in order]
	return shuffled[:n_train], shuffled[n_train : n_train + n_dev], shuffled[n_train + n_dev :]
