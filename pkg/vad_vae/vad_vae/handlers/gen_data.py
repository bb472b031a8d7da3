"""
Synthetic corpus generation into train/dev/test JSONL files.
"""

from pathlib import Path

import vad_vae
from vad_vae.vad_vae.corpus import SyntheticConfig, generate_synthetic, get_lexicon, split_corpus, write_corpus

SPLITS = ("train", "dev", "test")
HUMAN_VAD_SCALE = (1.0, 5.0)


def gen_data(out_dir, dataset="iemocap", n_dialogues=2000, seed=0, human_vad=False, fractions=(0.8, 0.1, 0.1)):
	"""Write `<out_dir>/{train,dev,test}.jsonl` and return their paths.

	With `human_vad` every utterance carries its own rating, written on the 1-5 scale.
	"""
	lexicon = get_lexicon(dataset)
	config = SyntheticConfig(labels=lexicon.labels, n_dialogues=n_dialogues, seed=seed, human_vad=human_vad)
	dialogues = generate_synthetic(config, lexicon)
	out_dir = Path(out_dir)
	paths = {}
	for name, part in zip(SPLITS, split_corpus(dialogues, fractions, seed), strict=True):
		paths[name] = out_dir / f"{name}.jsonl"
		write_corpus(part, paths[name], vad_scale=HUMAN_VAD_SCALE if human_vad else None)
	vad_vae.logger("gen_data").info(f"wrote {n_dialogues} {dataset} dialogues to {out_dir}")
	return paths


def gen_data_command(args):
	paths = gen_data(args.out_dir, args.dataset, args.dialogues, args.seed, args.human_vad)
	for name, path in paths.items():
		print(f"{name}: {path}")
