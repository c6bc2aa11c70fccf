"""Binary persistence for model parameters.

File layout: magic bytes, format version, block count, then one block per
named parameter (name, shape, row-major float64 data), and a trailing
CRC32 of everything before it.  Loading a file whose blocks do not match
the expected architecture raises VersionMismatch rather than silently
reshaping.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .nets import Autoencoder, GatNetwork, ValueHead

MAGIC = b"AMZN"
FORMAT_VERSION = 1


class ModelIOError(Exception):
    pass


class VersionMismatch(ModelIOError):
    pass


class ChecksumMismatch(ModelIOError):
    pass


def save_params(path, blocks: dict[str, np.ndarray]) -> None:
    body = bytearray()
    body += MAGIC
    body += struct.pack("<HI", FORMAT_VERSION, len(blocks))
    for name in sorted(blocks):
        arr = np.ascontiguousarray(blocks[name], dtype=np.float64)
        encoded = name.encode("utf-8")
        body += struct.pack("<H", len(encoded))
        body += encoded
        body += struct.pack("<B", arr.ndim)
        for dim in arr.shape:
            body += struct.pack("<I", dim)
        body += arr.tobytes()
    body += struct.pack("<I", zlib.crc32(bytes(body)))
    with open(path, "wb") as fh:
        fh.write(bytes(body))


def load_params(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + 10:
        raise ModelIOError("file too short to be a model file")
    if raw[: len(MAGIC)] != MAGIC:
        raise ModelIOError("bad magic bytes")
    stored_crc = struct.unpack("<I", raw[-4:])[0]
    if zlib.crc32(raw[:-4]) != stored_crc:
        raise ChecksumMismatch("checksum does not match file contents")
    off = len(MAGIC)
    version, count = struct.unpack_from("<HI", raw, off)
    off += 6
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"format version {version}, expected {FORMAT_VERSION}")
    blocks: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off: off + name_len].decode("utf-8")
        off += name_len
        (ndim,) = struct.unpack_from("<B", raw, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}I", raw, off) if ndim else ()
        off += 4 * ndim
        n_items = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=n_items, offset=off).reshape(shape)
        off += 8 * n_items
        blocks[name] = arr.copy()
    return blocks


@dataclass
class ModelBundle:
    """Every learned component used by the engine, with save/load.

    ae_move / head_move score the movement half of an action; ae_place /
    head_place the arrow half; gat re-ranks candidate nodes over the
    extracted search subgraph.
    """

    ae_move: Autoencoder
    ae_place: Autoencoder
    head_move: ValueHead
    head_place: ValueHead
    gat: GatNetwork

    @classmethod
    def fresh(cls, seed: int = 0) -> "ModelBundle":
        rng = np.random.default_rng(seed)
        return cls(
            ae_move=Autoencoder(rng),
            ae_place=Autoencoder(rng),
            head_move=ValueHead(rng),
            head_place=ValueHead(rng),
            gat=GatNetwork(rng),
        )

    def _blocks(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for label, model in (("ae_move", self.ae_move), ("ae_place", self.ae_place),
                             ("head_move", self.head_move), ("head_place", self.head_place),
                             ("gat", self.gat)):
            for name, p in model.params().items():
                out[f"{label}/{name}"] = p
        return out

    def save(self, path) -> None:
        save_params(path, self._blocks())

    @classmethod
    def load(cls, path) -> "ModelBundle":
        blocks = load_params(path)
        bundle = cls.fresh(seed=0)
        expected = bundle._blocks()
        if set(blocks) != set(expected):
            raise VersionMismatch("parameter blocks do not match the expected architecture")
        for name, live in expected.items():
            stored = blocks[name]
            if stored.shape != live.shape:
                raise VersionMismatch(
                    f"block {name} has shape {stored.shape}, expected {live.shape}")
            live[...] = stored
        return bundle
