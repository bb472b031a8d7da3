"""
Exceptions raised across vad_vae.

Every exception carries the process exit code the command line maps it to.
"""


class ValidationError(Exception):
	exit_code = 1


class UsageError(ValidationError):
	"""Bad arguments, out-of-range indices, calling things in the wrong order."""

	exit_code = 1


class DimensionError(ValidationError):
	exit_code = 1


class DomainError(ValidationError):
	"""Input outside the mathematical domain of an operation (log of non-positive, empty reduce)."""

	exit_code = 1


class DataError(ValidationError):
	exit_code = 2


class ParseError(DataError):
	exit_code = 2


class SchemaError(DataError):
	exit_code = 2


class FileError(DataError):
	exit_code = 2


class NumericError(ValidationError):
	"""Non-finite values where finite ones are required."""

	exit_code = 3
