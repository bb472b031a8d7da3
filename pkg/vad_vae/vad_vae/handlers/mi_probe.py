"""
Stand-alone vCLUB estimates: correlated Gaussian oracles, or the V/A/D latents of an export.
"""

import csv
from dataclasses import dataclass

import numpy as np

import vad_vae
from vad_vae.exceptions import FileError, ParseError, SchemaError
from vad_vae.vad_vae.model import VAD_FACTORS
from vad_vae.vad_vae.vclub import (
	PairEstimator,
	analytic_gaussian_mi,
	build_estimators,
	fit_estimators,
	heldout_mi_report,
	sample_correlated_gaussians,
	vclub_estimate,
)
from vad_vae.vad_vae.tensor import no_grad

HEADER = ("pair", "estimate_nats", "analytic_mi", "n_samples")
DEFAULT_RHOS = (0.0, 0.5, 0.9)


@dataclass
class EstimateRow:
	pair: str
	estimate_nats: float
	analytic_mi: float | None
	n_samples: int


def gaussian_estimates(rhos=DEFAULT_RHOS, n=2048, dim=1, steps=1000, seed=0, hidden=16, lr=0.02):
	"""Fit an estimator on one sample of each correlated pair and score a fresh sample."""
	rows = []
	for i, rho in enumerate(rhos):
		rng = np.random.default_rng([seed, i])
		x, y = sample_correlated_gaussians(rho, n, dim, rng)
		est = PairEstimator("X", "Y", dim, dim, hidden, rng)
		est.attach_optimizer(lr)
		fit_estimators({est.name: est}, {"X": x, "Y": y}, steps)
		x_test, y_test = sample_correlated_gaussians(rho, n, dim, rng)
		with no_grad():
			value = vclub_estimate(est, x_test, y_test).item()
		rows.append(EstimateRow(f"rho={rho:g}", value, analytic_gaussian_mi(rho, dim), n))
		vad_vae.logger("mi_probe").info(f"rho={rho:g}: vCLUB {value:.4f} nats")
	return rows


def read_latents(path):
	"""factor -> [N x d] array from a latent export CSV (columns mu_<factor>_<i>)."""
	try:
		with open(path, encoding="utf-8", newline="") as f:
			rows = list(csv.reader(f))
	except OSError as e:
		vad_vae.throw(f"cannot read latents {path}: {e}", FileError)
	if not rows:
		vad_vae.throw(f"{path} is empty", SchemaError)

	columns = {}
	for position, name in enumerate(rows[0]):
		if name.startswith("mu_"):
			columns.setdefault(name.split("_")[1], []).append(position)
	try:
		return {
			factor: np.array([[float(row[p]) for p in positions] for row in rows[1:]], dtype=np.float64)
			for factor, positions in columns.items()
		}
	except (ValueError, IndexError) as e:
		vad_vae.throw(f"{path}: malformed latent row ({e})", ParseError)


def latent_estimates(path, steps=300, seed=0, lr=0.01, hidden=None):
	"""vCLUB estimate of each V/A/D pair on exported latent means.

	Estimators are fitted on a random half of the rows and score the other half.
	"""
	latents = read_latents(path)
	missing = [f for f in VAD_FACTORS if f not in latents]
	if missing:
		vad_vae.throw(f"{path} lacks latent columns for {', '.join(missing)}", SchemaError)
	latents = {f: latents[f] for f in VAD_FACTORS}
	dims = {f: value.shape[1] for f, value in latents.items()}
	rng = np.random.default_rng(seed)
	estimators = build_estimators(dims, lr=lr, rng=rng, hidden=hidden)
	report = heldout_mi_report(estimators, latents, steps, rng)
	scored = len(latents["V"]) - len(latents["V"]) // 2
	return [EstimateRow(pair, value, None, scored) for pair, value in report.pairs.items()]


def write_estimates_csv(rows, path):
	try:
		with open(path, "w", encoding="utf-8", newline="") as f:
			writer = csv.writer(f)
			writer.writerow(HEADER)
			for row in rows:
				analytic = "" if row.analytic_mi is None else repr(row.analytic_mi)
				writer.writerow([row.pair, repr(row.estimate_nats), analytic, row.n_samples])
	except OSError as e:
		vad_vae.log_error(str(e), "MI estimates")
		vad_vae.throw(f"cannot write {path}: {e}", FileError)


def mi_probe_command(args):
	if args.latents:
		rows = latent_estimates(args.latents, steps=args.steps, seed=args.seed)
	else:
		rows = gaussian_estimates(args.rho, n=args.n, dim=args.dim, steps=args.steps, seed=args.seed)
	if args.out:
		write_estimates_csv(rows, args.out)
	for row in rows:
		analytic = "" if row.analytic_mi is None else f"  analytic {row.analytic_mi:.4f}"
		print(f"{row.pair}: {row.estimate_nats:.4f} nats{analytic}  (n={row.n_samples})")
