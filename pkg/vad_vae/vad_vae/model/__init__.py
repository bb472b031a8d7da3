from vad_vae.vad_vae.model.model import (
	FACTORS,
	VAD_FACTORS,
	LatentBlock,
	LatentHead,
	LossBreakdown,
	VadPrediction,
	VadVae,
	classify,
	info_loss,
	kl_to_standard_normal,
	predict_vad,
	reparameterize,
	split_latent,
)
