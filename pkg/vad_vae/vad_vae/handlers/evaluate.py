"""
Evaluation of a stored checkpoint on a corpus file.
"""

import vad_vae
from vad_vae.vad_vae.handlers.train import load_items, load_trained
from vad_vae.vad_vae.metrics import evaluate


def evaluate_checkpoint(checkpoint, corpus_path, out=None, mi_refit_steps=None):
	"""Full report, with the MI estimators refit on the corpus latents.

	Raises:
		SchemaError: If the corpus uses labels the checkpoint was not trained on
	"""
	trained = load_trained(checkpoint)
	config = trained.config
	if mi_refit_steps is not None:
		config = config.replace(mi_refit_steps=mi_refit_steps)
	items = load_items(corpus_path, config, trained.tokenizer, trained.labels, trained.lexicon)
	report = evaluate(trained.model, items, trained.labels, config, pad_id=trained.tokenizer.pad_id)
	if out:
		report.write(out)
		vad_vae.logger("evaluate").info(f"report written to {out}")
	return report


def eval_command(args):
	report = evaluate_checkpoint(args.checkpoint, args.corpus, args.out, args.mi_refit_steps)
	print(report.to_json())
