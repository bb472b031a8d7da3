"""
Model inputs: the target utterance in its dialogue context, and time-major batches of them.

	<cls> [spk u_{i-Wp}] ... [spk u_{i-1}] <sep> spk u_i <sep> [spk u_{i+1}] ... [spk u_{i+Wf}] <eos>
"""

from dataclasses import dataclass

import numpy as np

import vad_vae
from vad_vae.exceptions import DataError, SchemaError, UsageError
from vad_vae.vad_vae.corpus.lexicon import lexicon_targets

ALL_CONTEXT = -1


@dataclass(frozen=True)
class ModelInput:
	dialogue_id: str
	utterance_index: int
	speaker: str
	emotion: str
	token_ids: tuple
	target_span: tuple
	"""[start, end) of the target block (speaker token and words) inside token_ids."""

	gold_ids: tuple
	"""<bos> target words <eos>, the reconstruction target."""

	label_id: int | None = None
	vad_target: tuple | None = None

	@property
	def utterance_id(self):
		return f"{self.dialogue_id}:{self.utterance_index}"


@dataclass
class Batch:
	tokens: np.ndarray
	"""[T x N] padded input ids."""

	lengths: np.ndarray
	gold: np.ndarray
	"""[T' x N] padded gold ids."""

	gold_lengths: np.ndarray
	labels: np.ndarray
	vad_targets: np.ndarray
	"""[N x 3]"""

	items: list
	target_ends: np.ndarray | None = None
	"""[N] position of the <sep> closing each target block."""

	def __len__(self):
		return len(self.items)


def assemble_input(dialogue, target_index, w_past, w_future, tokenizer, max_len=None, labels=None, lexicon=None):
	"""Build the model input for utterance `target_index` of `dialogue`.

	Context windows are clamped at the dialogue boundaries; -1 takes the whole side.
	An input longer than `max_len` loses context tokens from the outermost end
	inward, the side with more context first; the target block is never cut.

	Raises:
		UsageError: For an index out of range or a negative window
		DataError: If the target block alone does not fit into `max_len`
	"""
	if not 0 <= target_index < len(dialogue):
		vad_vae.throw(f"utterance {target_index} outside dialogue '{dialogue.id}' of {len(dialogue)}", UsageError)
	if w_past < ALL_CONTEXT or w_future < ALL_CONTEXT:
		vad_vae.throw(f"context windows must be >= 0 or -1, got {w_past}, {w_future}", UsageError)

	def block(utt):
		return [tokenizer.speaker_id(utt.speaker), *tokenizer.encode(utt.tokens)]

	utterances = dialogue.utterances
	past_start = 0 if w_past == ALL_CONTEXT else max(0, target_index - w_past)
	future_stop = len(utterances) if w_future == ALL_CONTEXT else target_index + 1 + w_future
	past = [tid for utt in utterances[past_start:target_index] for tid in block(utt)]
	future = [tid for utt in utterances[target_index + 1 : future_stop] for tid in block(utt)]
	target = utterances[target_index]
	target_block = block(target)

	fixed = len(target_block) + 4
	if max_len is not None:
		if fixed > max_len:
			vad_vae.throw(
				f"utterance {target_index} of '{dialogue.id}' needs {fixed} tokens, max_len is {max_len}", DataError
			)
		excess = fixed + len(past) + len(future) - max_len
		if excess > 0:
			past, future = _trim_context(past, future, excess)

	token_ids = [tokenizer.cls_id, *past, tokenizer.sep_id, *target_block, tokenizer.sep_id, *future, tokenizer.eos_id]
	span_start = len(past) + 2
	return ModelInput(
		dialogue_id=dialogue.id,
		utterance_index=target_index,
		speaker=target.speaker,
		emotion=target.emotion,
		token_ids=tuple(token_ids),
		target_span=(span_start, span_start + len(target_block)),
		gold_ids=(tokenizer.bos_id, *tokenizer.encode(target.tokens), tokenizer.eos_id),
		label_id=None if labels is None else label_index(labels, target.emotion),
		vad_target=None if lexicon is None else lexicon_targets(lexicon, target.emotion, target.vad_override),
	)


def label_index(labels, emotion):
	labels = list(labels)
	if emotion not in labels:
		vad_vae.throw(f"emotion '{emotion}' is not in the label set {labels}", SchemaError)
	return labels.index(emotion)


def _trim_context(past, future, excess):
	past_keep, future_keep = len(past), len(future)
	for _ in range(excess):
		if past_keep >= future_keep:
			past_keep -= 1
		else:
			future_keep -= 1
	return past[len(past) - past_keep :], future[:future_keep]


def build_inputs(dialogues, tokenizer, config, labels=None, lexicon=None):
	"""Model inputs for every utterance of every dialogue, in corpus order."""
	return [
		assemble_input(
			dialogue, index, config.w_past, config.w_future, tokenizer,
			max_len=config.max_len, labels=labels, lexicon=lexicon,
		)
		for dialogue in dialogues
		for index in range(len(dialogue))
	]


def _pad(sequences, pad_id):
	lengths = np.array([len(s) for s in sequences], dtype=np.int64)
	out = np.full((int(lengths.max()), len(sequences)), pad_id, dtype=np.int64)
	for column, seq in enumerate(sequences):
		out[: len(seq), column] = seq
	return out, lengths


def collate(items, pad_id=0):
	"""Stack model inputs into a time-major padded batch."""
	if not items:
		vad_vae.throw("cannot collate an empty batch", UsageError)
	tokens, lengths = _pad([item.token_ids for item in items], pad_id)
	gold, gold_lengths = _pad([item.gold_ids for item in items], pad_id)
	labels = np.array([-1 if item.label_id is None else item.label_id for item in items], dtype=np.int64)
	vad = np.array([item.vad_target or (np.nan,) * 3 for item in items], dtype=np.float64)
	return Batch(
		tokens=tokens, lengths=lengths, gold=gold, gold_lengths=gold_lengths,
		labels=labels, vad_targets=vad, items=list(items),
		target_ends=np.array([item.target_span[1] for item in items], dtype=np.int64),
	)


def iter_batches(items, batch_size, seed=0, epoch=0, shuffle=True, pad_id=0):
	"""Batches in an order fixed by (seed, epoch)."""
	order = np.arange(len(items))
	if shuffle:
		order = np.random.default_rng([seed, epoch]).permutation(len(items))
	for start in range(0, len(items), batch_size):
		yield collate([items[i] for i in order[start : start + batch_size]], pad_id)


def count_batches(items, batch_size):
	return (len(items) + batch_size - 1) // batch_size
