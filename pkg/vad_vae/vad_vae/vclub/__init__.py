from vad_vae.vad_vae.vclub.vclub import (
	PAIRS,
	MiReport,
	PairEstimator,
	analytic_conditional_loglik,
	analytic_gaussian_mi,
	analytic_gaussian_vclub,
	build_estimators,
	estimator_loglik,
	estimator_update_step,
	fit_estimators,
	heldout_mi_report,
	mi_loss,
	mi_report,
	pair_name,
	sample_correlated_gaussians,
	split_latents,
	vclub_estimate,
)
