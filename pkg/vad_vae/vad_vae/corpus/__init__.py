from vad_vae.vad_vae.corpus.corpus import (
	Dialogue,
	Utterance,
	count_utterances,
	load_corpus,
	split_corpus,
	tokenize_text,
	write_corpus,
)
from vad_vae.vad_vae.corpus.inputs import (
	Batch,
	ModelInput,
	assemble_input,
	build_inputs,
	collate,
	count_batches,
	iter_batches,
	label_index,
)
from vad_vae.vad_vae.corpus.lexicon import (
	VadLexicon,
	get_lexicon,
	lexicon_targets,
	load_lexicon,
	rescale_vad,
	write_lexicon,
)
from vad_vae.vad_vae.corpus.noise import inject_label_noise
from vad_vae.vad_vae.corpus.synthetic import SyntheticConfig, generate_synthetic
from vad_vae.vad_vae.corpus.tokenizer import SPECIAL_TOKENS, Tokenizer, build_vocab, speaker_token
