"""
Experiment sweeps: context windows, vCLUB loss weight, and label-noise robustness.

Every grid point is trained once per seed; rows are sorted before writing, so the
CSV does not depend on the order runs finish in.
"""

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import vad_vae
from vad_vae.config import resolve_config
from vad_vae.exceptions import FileError, UsageError
from vad_vae.vad_vae.handlers.train import train
from vad_vae.vad_vae.metrics import NOISE_FRACTIONS, robustness_curve

KINDS = ("context_window", "mi_coefficient", "robustness")
CONTEXT_MODES = ("past", "future", "both")
DEFAULT_GRIDS = {
	"context_window": (0, 1, 2, 5),
	"mi_coefficient": (0.0, 0.001, 0.005, 0.01),
	"robustness": NOISE_FRACTIONS,
}
VARIANTS = ("entangled", "vad_vae")

FIELDS = (
	"kind", "variant", "mode", "value", "seed",
	"f1", "pearson_v", "pearson_a", "pearson_d", "mi_average", "retention", "run_dir",
)


@dataclass
class SweepJob:
	kind: str
	variant: str
	mode: str
	value: float
	seed: int
	config: object
	paths: tuple
	out_root: str


@dataclass
class SweepRow:
	kind: str
	variant: str
	mode: str
	value: float
	seed: int
	f1: float
	pearson_v: float
	pearson_a: float
	pearson_d: float
	mi_average: float | None
	retention: float | None = None
	run_dir: str = ""

	def sort_key(self):
		return (self.kind, self.variant, self.mode, self.value, self.seed)


def context_overrides(mode, window):
	past = window if mode in ("past", "both") else 0
	future = window if mode in ("future", "both") else 0
	return {"w_past": int(past), "w_future": int(future)}


def build_jobs(kind, grid, config, paths, seeds, out_root):
	"""One job per (grid point, mode or variant, seed)."""
	if kind not in KINDS:
		vad_vae.throw(f"Unknown sweep kind '{kind}'", UsageError)
	grid = list(grid)
	if not grid:
		vad_vae.throw("sweep grid is empty", UsageError)
	seeds = list(seeds)
	if not seeds:
		vad_vae.throw("sweep needs at least one seed", UsageError)
	if kind == "robustness" and 0.0 not in map(float, grid):
		vad_vae.throw("a robustness grid must contain 0", UsageError)

	jobs = []
	for seed in seeds:
		for value in grid:
			if kind == "context_window":
				settings = [("vad_vae", mode, context_overrides(mode, value)) for mode in CONTEXT_MODES]
			elif kind == "mi_coefficient":
				settings = [("vad_vae", "", {"mu_mi": float(value)})]
			else:
				settings = [
					(variant, "", {"label_noise": float(value), "entangled_baseline": variant == "entangled"})
					for variant in VARIANTS
				]
			for variant, mode, overrides in settings:
				job_config = config.replace(seed=seed, **overrides).validate()
				jobs.append(SweepJob(kind, variant, mode, float(value), seed, job_config, paths, str(out_root)))
	return jobs


def run_job(job):
	train_path, dev_path, test_path = job.paths
	result = train(job.config, train_path, dev_path, test_path, out_root=job.out_root, quiet=True)
	report = result.test_report
	return SweepRow(
		kind=job.kind,
		variant=job.variant,
		mode=job.mode,
		value=job.value,
		seed=job.seed,
		f1=report.primary_f1(job.config.dataset),
		pearson_v=report.pearson["V"].value,
		pearson_a=report.pearson["A"].value,
		pearson_d=report.pearson["D"].value,
		mi_average=None if report.mi_report is None else report.mi_report.average,
		run_dir=str(result.run_dir),
	)


def add_retention(rows):
	"""Retention of each robustness row against the noise-free run of its variant and seed."""
	f1 = {(row.variant, row.value, row.seed): row.f1 for row in rows}
	for row in rows:
		base = f1[row.variant, 0.0, row.seed]
		row.retention = row.f1 / base if base > 0 else float("nan")
	return rows


def write_rows(rows, path, fields=FIELDS):
	try:
		Path(path).parent.mkdir(parents=True, exist_ok=True)
		with open(path, "w", encoding="utf-8", newline="") as f:
			writer = csv.DictWriter(f, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
			writer.writeheader()
			for row in rows:
				writer.writerow({k: "" if v is None else v for k, v in asdict(row).items()})
	except OSError as e:
		vad_vae.log_error(str(e), "Sweep")
		vad_vae.throw(f"cannot write {path}: {e}", FileError)


def sweep(kind, config, paths, out, grid=None, seeds=(0,), out_root="runs", workers=1):
	"""Train every grid point for every seed and write one sorted CSV row per run.

	Args:
		kind: context_window, mi_coefficient or robustness
		config: Base TrainConfig
		paths: (train, dev, test) corpus paths; the test split is required
		out: CSV path; robustness also writes `<out stem>_retention.csv`
		grid: Grid values (default: the kind's standard grid)
		seeds: Seeds to run every point with
		workers: Parallel training processes

	Returns:
		list[SweepRow]
	"""
	if len(paths) != 3 or not paths[2]:
		vad_vae.throw("sweeps need train, dev and test corpora", UsageError)
	jobs = build_jobs(kind, DEFAULT_GRIDS.get(kind, ()) if grid is None else grid, config, tuple(paths), seeds, out_root)
	vad_vae.logger("sweep").info(f"{kind} sweep: {len(jobs)} runs")

	# Points that resolve to the same configuration (every mode at window 0) train once
	unique = {}
	for job in jobs:
		unique.setdefault(job.config.config_hash(), job)
	if workers > 1:
		with ProcessPoolExecutor(max_workers=workers) as pool:
			results = dict(zip(unique, pool.map(run_job, unique.values()), strict=True))
	else:
		results = {key: run_job(job) for key, job in unique.items()}
	rows = [
		replace(results[job.config.config_hash()], variant=job.variant, mode=job.mode, value=job.value)
		for job in jobs
	]
	rows.sort(key=SweepRow.sort_key)

	if kind == "robustness":
		add_retention(rows)
		f1 = {(row.variant, row.value, row.seed): row.f1 for row in rows}
		curve = robustness_curve(
			lambda variant, fraction, seed: f1[variant, fraction, seed],
			fractions=sorted({row.value for row in rows}),
			seeds=sorted({row.seed for row in rows}),
			variants=VARIANTS,
		)
		out_path = Path(out)
		write_rows(curve, out_path.with_name(f"{out_path.stem}_retention.csv"), ("variant", "fraction", "f1", "retention", "n_seeds"))
	write_rows(rows, out)
	return rows


def sweep_command(args):
	config = resolve_config(args.config, args.dataset, args.set)
	vad_vae.setup_logging("WARNING" if args.quiet else "INFO")
	rows = sweep(
		args.kind, config, (args.train, args.dev, args.test), args.out,
		grid=args.grid, seeds=args.seeds, out_root=args.out_root, workers=args.workers,
	)
	print(f"{len(rows)} rows written to {args.out}")
