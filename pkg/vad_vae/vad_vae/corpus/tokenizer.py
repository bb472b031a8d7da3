"""
Whitespace vocabulary with reserved ids for the markers and one token per speaker.
"""

from collections import Counter

import vad_vae
from vad_vae.exceptions import SchemaError, UsageError

PAD = "<pad>"
BOS = "<bos>"
CLS = "<cls>"
SEP = "<sep>"
EOS = "<eos>"
UNK = "<unk>"
SPECIAL_TOKENS = (PAD, BOS, CLS, SEP, EOS, UNK)


def speaker_token(name):
	return f"<spk:{name}>"


class Tokenizer:
	def __init__(self, tokens):
		self.tokens = list(tokens)
		self.index = {token: i for i, token in enumerate(self.tokens)}
		if len(self.index) != len(self.tokens):
			vad_vae.throw("vocabulary contains duplicate tokens", SchemaError)
		missing = [t for t in SPECIAL_TOKENS if t not in self.index]
		if missing:
			vad_vae.throw(f"vocabulary lacks reserved tokens {missing}", SchemaError)

	def __len__(self):
		return len(self.tokens)

	@property
	def pad_id(self):
		return self.index[PAD]

	@property
	def bos_id(self):
		return self.index[BOS]

	@property
	def cls_id(self):
		return self.index[CLS]

	@property
	def sep_id(self):
		return self.index[SEP]

	@property
	def eos_id(self):
		return self.index[EOS]

	@property
	def unk_id(self):
		return self.index[UNK]

	def token_id(self, token):
		return self.index.get(token, self.unk_id)

	def encode(self, tokens):
		"""Ids of `tokens`, out-of-vocabulary words mapped to <unk>."""
		unk = self.unk_id
		return [self.index.get(token, unk) for token in tokens]

	def speaker_id(self, name):
		return self.token_id(speaker_token(name))

	def decode(self, ids):
		return [self.tokens[i] for i in ids]

	def to_list(self):
		return list(self.tokens)


def build_vocab(dialogues, min_freq=1):
	"""Vocabulary of a corpus.

	Order: reserved markers, speaker tokens (sorted by name), then words with
	frequency >= `min_freq` by descending frequency, ties broken lexicographically.

	Raises:
		UsageError: For an empty corpus or min_freq < 1
	"""
	if not dialogues:
		vad_vae.throw("cannot build a vocabulary from an empty corpus", UsageError)
	if min_freq < 1:
		vad_vae.throw(f"min_freq must be at least 1, got {min_freq}", UsageError)

	counts = Counter()
	speakers = set()
	for dialogue in dialogues:
		for utt in dialogue.utterances:
			counts.update(utt.tokens)
			speakers.add(utt.speaker)

	words = sorted((w for w, n in counts.items() if n >= min_freq), key=lambda w: (-counts[w], w))
	return Tokenizer([*SPECIAL_TOKENS, *(speaker_token(s) for s in sorted(speakers)), *words])
