from vad_vae.vad_vae.nn_core.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from vad_vae.vad_vae.nn_core.layers import (
	Embedding,
	GRUCell,
	Linear,
	Module,
	decode_autoregressive,
	decode_batch,
	dropout,
	encode_batch,
	encode_sequence,
	encode_states,
	greedy_decode,
	gru_recurrence,
	linear_forward,
	states_at,
)
from vad_vae.vad_vae.nn_core.optim import AdamState, AdamW, adam_step, warmup_learning_rate
