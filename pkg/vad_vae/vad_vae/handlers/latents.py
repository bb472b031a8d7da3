"""
Latent mean export for external projection tools.
"""

import vad_vae
from vad_vae.vad_vae.handlers.train import load_items, load_trained
from vad_vae.vad_vae.metrics import export_latents


def export_checkpoint_latents(checkpoint, corpus_path, out):
	trained = load_trained(checkpoint)
	items = load_items(corpus_path, trained.config, trained.tokenizer, trained.labels, trained.lexicon)
	count = export_latents(trained.model, items, out, pad_id=trained.tokenizer.pad_id)
	vad_vae.logger("latents").info(f"exported {count} latent rows to {out}")
	return count


def export_latents_command(args):
	count = export_checkpoint_latents(args.checkpoint, args.corpus, args.out)
	print(f"{count} rows written to {args.out}")
