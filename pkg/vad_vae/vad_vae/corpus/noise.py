"""
Label-noise injection for robustness runs.
"""

import numpy as np

import vad_vae
from vad_vae.exceptions import UsageError
from vad_vae.vad_vae.corpus.corpus import count_utterances


def inject_label_noise(dialogues, fraction, seed, labels):
	"""Replace exactly round(fraction * N) labels with a different, uniformly drawn label.

	Only the given (training) dialogues are touched; the input is not modified.

	Args:
		dialogues: Training dialogues
		fraction: Share of utterances to relabel, in [0, 0.5]
		seed: Seed of the draw
		labels: Label set to draw replacements from

	Returns:
		list[Dialogue]: Relabeled copy
	"""
	if not 0.0 <= fraction <= 0.5:
		vad_vae.throw(f"label noise fraction must lie in [0, 0.5], got {fraction}", UsageError)
	labels = list(labels)
	if len(labels) < 2 and fraction > 0:
		vad_vae.throw("label noise needs at least two labels", UsageError)

	total = count_utterances(dialogues)
	count = int(round(fraction * total))
	if count == 0:
		return list(dialogues)

	rng = np.random.default_rng(seed)
	chosen = set(rng.choice(total, size=count, replace=False).tolist())
	noisy = []
	position = 0
	for dialogue in dialogues:
		for index, utt in enumerate(dialogue.utterances):
			if position in chosen:
				others = [label for label in labels if label != utt.emotion]
				dialogue = dialogue.relabel(index, others[int(rng.integers(0, len(others)))])
			position += 1
		noisy.append(dialogue)
	return noisy
