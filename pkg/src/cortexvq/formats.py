"""On-disk formats for streams, codebooks and index files.

All binary layouts are little-endian.  Floats in text forms are written with
``repr``, which round-trips float64 exactly.

* Stream CSV: a ``# source=..;seed=..;rate=..`` header, then one sample per line.
* Stream binary: magic ``CVQSTRM1``, uint32 header length, JSON header, float64 samples.
* Codebook (``CVQCBK1``): JSON header {version, kind, depth, dim, K, params,
  normalization, extra} followed by K records.  The text form is one JSON
  document after a magic line; the binary form stores the header like the
  stream binary and the records as a dense float64 matrix.
* Index file: magic ``CVQIDX1`` padded to 8 bytes, then uint32 indices.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .baselines.common import CentroidCodebook
from .baselines.gmm import GaussianMixtureCodebook
from .cortex import Codebook, CortexParams
from .errors import FormatError
from .signals import SampleStream, Source
from .transform import NormalizationSpec

STREAM_MAGIC = b"CVQSTRM1"
CODEBOOK_MAGIC = b"CVQCBK1\x00"
CODEBOOK_TEXT_MAGIC = "CVQCBK1"
INDEX_MAGIC = b"CVQIDX1\x00"
CODEBOOK_VERSION = 1


def _write_header(fh, magic, header):
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    fh.write(magic)
    fh.write(struct.pack("<I", len(blob)))
    fh.write(blob)


def _read_header(buf, magic, what):
    if buf[:len(magic)] != magic:
        raise FormatError(f"not a {what} file (bad magic)")
    pos = len(magic)
    if len(buf) < pos + 4:
        raise FormatError(f"truncated {what} header")
    (n,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    try:
        header = json.loads(buf[pos:pos + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"corrupt {what} header: {exc}") from exc
    return header, pos + n


# streams

def save_stream_csv(stream: SampleStream, path):
    lines = [f"# source={stream.source.value};seed={stream.seed};rate={stream.sample_rate_hz!r}"]
    lines.extend(repr(float(v)) for v in stream.samples)
    Path(path).write_text("\n".join(lines) + "\n")


def load_stream_csv(path) -> SampleStream:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise FormatError("stream CSV must start with a '# source=...' header")
    meta = {}
    for part in text[0][1:].strip().split(";"):
        key, _, value = part.partition("=")
        meta[key.strip()] = value.strip()
    try:
        samples = np.array([float(v) for v in text[1:] if v.strip()], dtype=np.float64)
        return SampleStream(samples, float(meta["rate"]), Source(meta["source"]), int(meta["seed"]))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad stream CSV: {exc}") from exc


def save_stream_binary(stream: SampleStream, path):
    header = {"source": stream.source.value, "seed": int(stream.seed),
              "rate": float(stream.sample_rate_hz), "n": int(stream.samples.size)}
    with open(path, "wb") as fh:
        _write_header(fh, STREAM_MAGIC, header)
        fh.write(stream.samples.astype("<f8").tobytes())


def load_stream_binary(path) -> SampleStream:
    buf = Path(path).read_bytes()
    header, pos = _read_header(buf, STREAM_MAGIC, "stream")
    body = buf[pos:]
    if len(body) != 8 * header["n"]:
        raise FormatError(f"expected {header['n']} samples, found {len(body) / 8:g}")
    samples = np.frombuffer(body, dtype="<f8").astype(np.float64)
    return SampleStream(samples, header["rate"], Source(header["source"]), header["seed"])


# codebooks

def _codebook_header(cb):
    if isinstance(cb, Codebook):
        return {"kind": "cortex", "depth": cb.depth, "dim": 1, "K": cb.K,
                "params": cb.params.to_dict() if cb.params is not None else None,
                "normalization": cb.normalization.to_dict() if cb.normalization is not None else None,
                "extra": {}}, cb.codewords
    if isinstance(cb, CentroidCodebook):
        extra = {"meta": _jsonable(cb.meta)}
        kind = "centroid"
        if isinstance(cb, GaussianMixtureCodebook):
            kind = "gmm"
            extra["weights"] = cb.weights.tolist()
            extra["variances"] = cb.variances.tolist()
        norm = cb.meta.get("normalization")
        return {"kind": kind, "depth": 1, "dim": cb.dim, "K": cb.K, "params": None,
                "normalization": norm, "extra": extra}, cb.centroids
    raise FormatError(f"cannot serialize {type(cb).__name__}")


def _jsonable(meta):
    try:
        json.dumps(meta)
        return meta
    except TypeError:
        return {k: v for k, v in meta.items() if _is_jsonable(v)}


def _is_jsonable(v):
    try:
        json.dumps(v)
        return True
    except TypeError:
        return False


def _codebook_from(header, records):
    if header.get("version", CODEBOOK_VERSION) != CODEBOOK_VERSION:
        raise FormatError(f"unsupported codebook version {header.get('version')}")
    kind = header["kind"]
    records = np.asarray(records, dtype=np.float64)
    if records.shape[0] != header["K"]:
        raise FormatError(f"header says K={header['K']} but {records.shape[0]} records follow")
    if kind == "cortex":
        params = CortexParams.from_dict(header["params"]) if header["params"] else None
        norm = NormalizationSpec.from_dict(header["normalization"]) if header["normalization"] else None
        return Codebook(records.reshape(header["K"], header["depth"]), params, norm)
    extra = header.get("extra", {})
    meta = dict(extra.get("meta", {}))
    if kind == "centroid":
        return CentroidCodebook(records.reshape(header["K"], header["dim"]), meta)
    if kind == "gmm":
        return GaussianMixtureCodebook(records.reshape(header["K"], header["dim"]), meta,
                                       weights=np.asarray(extra["weights"], dtype=np.float64),
                                       variances=np.asarray(extra["variances"], dtype=np.float64))
    raise FormatError(f"unknown codebook kind {kind!r}")


def save_codebook(cb, path, binary=False):
    header, records = _codebook_header(cb)
    header["version"] = CODEBOOK_VERSION
    if binary:
        with open(path, "wb") as fh:
            _write_header(fh, CODEBOOK_MAGIC, header)
            fh.write(np.ascontiguousarray(records, dtype="<f8").tobytes())
        return
    doc = {"header": header,
           "records": [{"index": i, "values": [float(v) for v in row]}
                       for i, row in enumerate(records.tolist())]}
    Path(path).write_text(CODEBOOK_TEXT_MAGIC + "\n" + json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_codebook(path):
    """Load either codebook form; the magic decides which."""
    buf = Path(path).read_bytes()
    if buf.startswith(CODEBOOK_MAGIC):
        header, pos = _read_header(buf, CODEBOOK_MAGIC, "codebook")
        width = header["depth"] if header["kind"] == "cortex" else header["dim"]
        body = buf[pos:]
        if len(body) != 8 * header["K"] * width:
            raise FormatError("codebook record block has the wrong size")
        records = np.frombuffer(body, dtype="<f8").reshape(header["K"], width)
        return _codebook_from(header, records)
    text = buf.decode("utf-8", errors="replace")
    first, _, rest = text.partition("\n")
    if first.strip() != CODEBOOK_TEXT_MAGIC:
        raise FormatError("not a codebook file (bad magic)")
    try:
        doc = json.loads(rest)
    except json.JSONDecodeError as exc:
        raise FormatError(f"corrupt codebook text: {exc}") from exc
    recs = sorted(doc["records"], key=lambda r: r["index"])
    if [r["index"] for r in recs] != list(range(len(recs))):
        raise FormatError("codebook indices must be dense 0..K-1")
    return _codebook_from(doc["header"], [r["values"] for r in recs])


def save_centroids_csv(cb: CentroidCodebook, path):
    lines = [",".join(repr(float(v)) for v in row) for row in cb.centroids]
    Path(path).write_text("\n".join(lines) + "\n")


def load_centroids_csv(path) -> CentroidCodebook:
    rows = [line for line in Path(path).read_text().splitlines() if line.strip()]
    try:
        return CentroidCodebook(np.array([[float(v) for v in r.split(",")] for r in rows]))
    except ValueError as exc:
        raise FormatError(f"bad centroid CSV: {exc}") from exc


# index files

def save_indices(indices, path):
    idx = np.asarray(indices)
    if idx.size and (idx.min() < 0 or idx.max() > 0xFFFFFFFF):
        raise FormatError("indices must fit in uint32")
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(idx.astype("<u4").tobytes())


def load_indices(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if not buf.startswith(INDEX_MAGIC):
        raise FormatError("not an index file (bad magic)")
    body = buf[len(INDEX_MAGIC):]
    if len(body) % 4:
        raise FormatError("index file body is not a whole number of uint32 values")
    return np.frombuffer(body, dtype="<u4").astype(np.int64)
