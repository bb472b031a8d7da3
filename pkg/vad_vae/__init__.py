__version__ = "0.1.0"

import logging

from vad_vae.exceptions import ValidationError

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def logger(module=None):
	"""Get the package logger, or a child logger for `module`.

	Args:
		module: Short module name, e.g. "train"

	Returns:
		logging.Logger: Logger named `vad_vae` or `vad_vae.<module>`
	"""
	return logging.getLogger(f"vad_vae.{module}" if module else "vad_vae")


def setup_logging(level="INFO", log_file=None):
	"""Install handlers on the package logger (idempotent per destination).

	Args:
		level: Logging level name or number
		log_file: Optional path of a log file (usually inside the run directory)
	"""
	root = logger()
	root.setLevel(level)
	formatter = logging.Formatter(_LOG_FORMAT)

	if not any(isinstance(h, logging.StreamHandler) and not isinstance(h, logging.FileHandler) for h in root.handlers):
		stream = logging.StreamHandler()
		stream.setFormatter(formatter)
		root.addHandler(stream)

	if log_file:
		log_file = str(log_file)
		if not any(isinstance(h, logging.FileHandler) and h.baseFilename == log_file for h in root.handlers):
			file_handler = logging.FileHandler(log_file, encoding="utf-8")
			file_handler.setFormatter(formatter)
			root.addHandler(file_handler)


def log_error(message, title=None):
	"""Log an error with an optional title, the way handlers report failures before re-raising."""
	logger().error(f"{title}: {message}" if title else message)


def throw(message, exc=ValidationError, title=None):
	"""Raise `exc` with `message`.

	Args:
		message: Human readable message
		exc: Exception class to raise (see vad_vae.exceptions)
		title: Optional title, prefixed to the message

	Raises:
		exc: Always
	"""
	raise exc(f"{title}: {message}" if title else message)
