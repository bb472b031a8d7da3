from vad_vae.vad_vae.metrics.metrics import (
	NEUTRAL,
	NOISE_FRACTIONS,
	ClassScore,
	EvalReport,
	MetricValue,
	RetentionPoint,
	collect_outputs,
	confusion_counts,
	evaluate,
	export_latents,
	latent_header,
	micro_f1_excluding,
	pearson,
	per_class,
	refit_mi_report,
	robustness_curve,
	weighted_f1,
)
