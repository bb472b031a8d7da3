"""
Checkpoint container: a JSON header followed by the raw float64 parameter arrays.

Layout:
	8 bytes   magic b"VADVAE\\x00\\x01"
	8 bytes   little-endian header length
	header    UTF-8 JSON (sorted keys): seed, config_hash, tensors [{name, shape, offset, count}], extra
	payload   concatenated little-endian float64 arrays in header order
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import vad_vae
from vad_vae.exceptions import FileError, SchemaError

MAGIC = b"VADVAE\x00\x01"


@dataclass
class Checkpoint:
	parameters: dict
	seed: int
	config_hash: str
	extra: dict = field(default_factory=dict)


def save_checkpoint(path, parameters, seed, config_hash, extra=None):
	"""Write named parameter arrays to `path`.

	The output is a pure function of the arguments, so equal models give equal bytes.
	"""
	entries = []
	chunks = []
	offset = 0
	for name, array in parameters.items():
		array = np.ascontiguousarray(array, dtype="<f8")
		entries.append({"name": name, "shape": list(array.shape), "offset": offset, "count": int(array.size)})
		chunks.append(array.tobytes())
		offset += array.size
	header = json.dumps(
		{"seed": int(seed), "config_hash": config_hash, "tensors": entries, "extra": extra or {}},
		sort_keys=True,
	).encode("utf-8")

	path = Path(path)
	try:
		path.parent.mkdir(parents=True, exist_ok=True)
		with open(path, "wb") as handle:
			handle.write(MAGIC)
			handle.write(struct.pack("<Q", len(header)))
			handle.write(header)
			for chunk in chunks:
				handle.write(chunk)
	except OSError as e:
		vad_vae.log_error(str(e), "Checkpoint Write Error")
		vad_vae.throw(f"cannot write checkpoint {path}: {e}", FileError)


def load_checkpoint(path):
	"""Read a checkpoint written by `save_checkpoint`.

	Raises:
		FileError: If the file cannot be read
		SchemaError: If the file is not a checkpoint or is truncated
	"""
	try:
		raw = Path(path).read_bytes()
	except OSError as e:
		vad_vae.throw(f"cannot read checkpoint {path}: {e}", FileError)

	if raw[: len(MAGIC)] != MAGIC:
		vad_vae.throw(f"{path} is not a vad_vae checkpoint", SchemaError)
	start = len(MAGIC) + 8
	try:
		(header_len,) = struct.unpack("<Q", raw[len(MAGIC) : start])
		header = json.loads(raw[start : start + header_len].decode("utf-8"))
	except (struct.error, UnicodeDecodeError, json.JSONDecodeError):
		vad_vae.throw(f"checkpoint {path} has a damaged header", SchemaError)
	body = raw[start + header_len :]
	payload = np.frombuffer(body[: len(body) - len(body) % 8], dtype="<f8")

	parameters = {}
	for entry in header["tensors"]:
		end = entry["offset"] + entry["count"]
		if end > payload.size:
			vad_vae.throw(f"checkpoint {path} is truncated at {entry['name']}", SchemaError)
		parameters[entry["name"]] = payload[entry["offset"] : end].astype(np.float64).reshape(entry["shape"])
	return Checkpoint(
		parameters=parameters, seed=header["seed"], config_hash=header["config_hash"], extra=header.get("extra", {})
	)
