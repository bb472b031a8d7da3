"""
Seeded synthetic dialogue corpora: two speakers, emotion marker words, topics carried between turns.
"""

from dataclasses import dataclass

import numpy as np

import vad_vae
from vad_vae.exceptions import UsageError
from vad_vae.vad_vae.corpus.corpus import Dialogue, Utterance
from vad_vae.vad_vae.corpus.lexicon import rescale_vad

MARKER_WORDS = {
	"neutral": ("okay", "fine", "sure", "alright", "noted", "maybe"),
	"frustrated": ("ugh", "annoying", "stuck", "seriously", "tired", "again"),
	"sad": ("miss", "lonely", "cry", "sorry", "lost", "gloomy"),
	"anger": ("furious", "hate", "shut", "damn", "outrageous", "mad"),
	"excited": ("wow", "amazing", "awesome", "thrilled", "yes", "finally"),
	"happy": ("glad", "lovely", "smile", "nice", "sweet", "great"),
	"joy": ("delighted", "wonderful", "laugh", "cheerful", "sunny", "hooray"),
	"surprise": ("really", "whoa", "unexpected", "suddenly", "what", "unbelievable"),
	"disgust": ("gross", "yuck", "nasty", "filthy", "rotten", "vile"),
	"fear": ("scared", "afraid", "nervous", "panic", "danger", "trembling"),
}

TOPIC_WORDS = (
	"dinner", "work", "car", "movie", "weather", "school", "money", "party",
	"trip", "game", "phone", "doctor", "house", "dog", "train", "music",
)

FILLER_WORDS = ("i", "you", "the", "that", "it", "was", "is", "think", "about", "so", "we", "just")

SPEAKERS = ("A", "B")


@dataclass(frozen=True)
class SyntheticConfig:
	labels: tuple
	n_dialogues: int = 50
	seed: int = 0
	min_turns: int = 5
	max_turns: int = 12
	human_vad: bool = False
	"""Attach a per-utterance VAD rating (jittered around the label's lexicon entry)."""

	vad_jitter: float = 0.2
	"""Standard deviation of the rating jitter on the [1, 5] scale."""


def marker_bank(label):
	return MARKER_WORDS.get(label) or tuple(f"{label}{i}" for i in range(6))


def generate_synthetic(config, lexicon=None):
	"""Generate a corpus that is a pure function of `config`.

	Labels are drawn from a balanced pool over the whole corpus, so label counts
	differ by at most one. Each utterance holds 1-3 markers of its label, filler
	words, and topic words; the first topic word repeats the previous turn's.

	Raises:
		UsageError: For an empty label set, bad turn bounds, or human_vad without a lexicon
	"""
	if not config.labels:
		vad_vae.throw("synthetic corpus needs at least one label", UsageError)
	if not 1 <= config.min_turns <= config.max_turns:
		vad_vae.throw(f"bad turn bounds {config.min_turns}..{config.max_turns}", UsageError)
	if config.human_vad and lexicon is None:
		vad_vae.throw("human_vad needs a lexicon to center the ratings on", UsageError)

	rng = np.random.default_rng(config.seed)
	turns = rng.integers(config.min_turns, config.max_turns + 1, size=config.n_dialogues)
	total = int(turns.sum())
	labels = list(config.labels)
	pool = np.tile(np.arange(len(labels)), -(-total // len(labels)))[:total]
	pool = pool[rng.permutation(total)]

	dialogues = []
	cursor = 0
	for d in range(config.n_dialogues):
		first_speaker = int(rng.integers(0, 2))
		topic = TOPIC_WORDS[int(rng.integers(0, len(TOPIC_WORDS)))]
		utterances = []
		for t in range(int(turns[d])):
			label = labels[int(pool[cursor])]
			cursor += 1
			bank = marker_bank(label)
			markers = [bank[int(i)] for i in rng.integers(0, len(bank), size=int(rng.integers(1, 4)))]
			new_topic = TOPIC_WORDS[int(rng.integers(0, len(TOPIC_WORDS)))]
			fillers = [FILLER_WORDS[int(i)] for i in rng.integers(0, len(FILLER_WORDS), size=int(rng.integers(2, 5)))]
			words = [*fillers, *markers, new_topic]
			words = [topic, *(words[int(i)] for i in rng.permutation(len(words)))]
			topic = new_topic

			vad = None
			if config.human_vad:
				rating = 1.0 + 4.0 * np.asarray(lexicon[label]) + rng.normal(0.0, config.vad_jitter, size=3)
				vad = rescale_vad(np.clip(rating, 1.0, 5.0))
			utterances.append(
				Utterance(
					speaker=SPEAKERS[(first_speaker + t) % 2], tokens=tuple(words), emotion=label, vad_override=vad
				)
			)
		dialogues.append(Dialogue(id=f"syn{config.seed}-{d:05d}", utterances=tuple(utterances)))
	return dialogues
