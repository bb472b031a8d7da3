"""
Latent swap: decode an utterance's content latent with another utterance's
Valence, Arousal and Dominance latents.
"""

import numpy as np

import vad_vae
from vad_vae.exceptions import UsageError
from vad_vae.vad_vae.handlers.train import load_items, load_trained
from vad_vae.vad_vae.metrics import collect_outputs
from vad_vae.vad_vae.model import VAD_FACTORS


def swap_factors(source, donor, factors=VAD_FACTORS):
	"""Copy of the `source` latent dict with `factors` taken from `donor`."""
	unknown = [f for f in factors if f not in VAD_FACTORS]
	if unknown:
		vad_vae.throw(f"only V, A and D can be swapped, got {', '.join(unknown)}", UsageError)
	return {factor: donor[factor] if factor in factors else value for factor, value in source.items()}


def reconstruct_text(model, tokenizer, latents, max_len=40):
	z_row = np.concatenate([latents[factor] for factor in model.factors])
	return " ".join(model.reconstruct(z_row, tokenizer, max_len))


def swap_demo(checkpoint, corpus_path, source_id, donor_id, factors=VAD_FACTORS, max_len=40):
	"""Three labeled lines: the source and donor reconstructions, then the swapped one.

	Utterance ids are "<dialogue id>:<utterance index>".

	Raises:
		UsageError: If an id is not in the corpus or the model cannot decode factor latents
	"""
	trained = load_trained(checkpoint)
	model, tokenizer = trained.model, trained.tokenizer
	if not model.config.uses_decoder() or any(f not in model.factors for f in VAD_FACTORS):
		vad_vae.throw("the swap demo needs a model with V, A, D latents and a decoder", UsageError)

	items = {
		item.utterance_id: item
		for item in load_items(corpus_path, trained.config, tokenizer, trained.labels, trained.lexicon)
	}
	missing = [i for i in (source_id, donor_id) if i not in items]
	if missing:
		vad_vae.throw(f"utterances not in the corpus: {', '.join(missing)}", UsageError)

	means = collect_outputs(model, [items[source_id], items[donor_id]], pad_id=tokenizer.pad_id)["means"]
	source = {factor: values[0] for factor, values in means.items()}
	donor = {factor: values[1] for factor, values in means.items()}
	lines = [
		f"source: {reconstruct_text(model, tokenizer, source, max_len)}",
		f"donor: {reconstruct_text(model, tokenizer, donor, max_len)}",
		f"swapped: {reconstruct_text(model, tokenizer, swap_factors(source, donor, factors), max_len)}",
	]
	return "\n".join(lines)


def swap_demo_command(args):
	factors = tuple(f.strip() for f in args.factors.split(",") if f.strip())
	print(swap_demo(args.checkpoint, args.corpus, args.source, args.donor, factors, args.max_len))
