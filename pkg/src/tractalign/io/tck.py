"""MRtrix ``.tck`` streamline files.

Layout: a text header starting with the line ``mrtrix tracks``, then
``key: value`` lines and a closing ``END`` line.  The ``file: . <offset>``
entry gives the byte offset of the binary payload, a flat run of float
triplets (``datatype`` Float32LE/BE or Float64LE/BE).  A NaN triplet ends
each streamline and an Inf triplet ends the file.
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import (BadMagic, MalformedHeader, MissingOffset,
                          TruncatedPayload, UnknownDatatype)

MAGIC = b"mrtrix tracks"
DATATYPES = {
    "Float32LE": np.dtype("<f4"),
    "Float32BE": np.dtype(">f4"),
    "Float64LE": np.dtype("<f8"),
    "Float64BE": np.dtype(">f8"),
}


@dataclass(eq=False)
class TckFile:
    """Parsed track file.

    ``header`` keeps every ``key: value`` pair in file order (keys may
    repeat).  The ``file``, ``datatype`` and ``count`` entries are rewritten
    by :func:`write_tck` from ``datatype`` and ``streamlines``.
    """
    streamlines: list
    datatype: str = "Float32LE"
    header: list = field(default_factory=list)

    def __post_init__(self):
        if self.datatype not in DATATYPES:
            raise UnknownDatatype(f"unsupported datatype {self.datatype!r}", 0)
        dt = DATATYPES[self.datatype]
        self.streamlines = [np.asarray(s, dtype=dt).reshape(-1, 3)
                            for s in self.streamlines]

    def get(self, key, default=None):
        for k, v in self.header:
            if k == key:
                return v
        return default

    def __eq__(self, other):
        if not isinstance(other, TckFile):
            return NotImplemented
        return (self.datatype == other.datatype
                and _user_header(self.header) == _user_header(other.header)
                and len(self.streamlines) == len(other.streamlines)
                and all(a.shape == b.shape and a.tobytes() == b.tobytes()
                        for a, b in zip(self.streamlines, other.streamlines)))


def _user_header(header):
    return [(k, v) for k, v in header if k not in ("file", "datatype", "count")]


def _parse_header(data):
    nl = data.find(b"\n")
    first = data[:nl if nl >= 0 else len(data)].rstrip(b"\r")
    if first != MAGIC:
        raise BadMagic(f"expected first line {MAGIC!r}, got {first[:40]!r}", 0)
    pos = nl + 1
    header = []
    while True:
        end = data.find(b"\n", pos)
        if end < 0:
            raise MalformedHeader("header is not terminated by an END line", len(data))
        line = data[pos:end].rstrip(b"\r")
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedHeader(f"header line is not UTF-8: {exc}", pos) from None
        if text == "END":
            return header, end + 1
        key, sep, value = text.partition(":")
        if not sep or not key.strip():
            raise MalformedHeader(f"header line {text[:60]!r} is not 'key: value'", pos)
        header.append((key.strip(), value.strip()))
        pos = end + 1


def parse_tck(data):
    """Parse the bytes of a track file into a :class:`TckFile`."""
    header, header_end = _parse_header(data)
    keys = dict(header)
    if "datatype" not in keys:
        raise UnknownDatatype("header has no datatype entry", header_end)
    datatype = keys["datatype"]
    if datatype not in DATATYPES:
        raise UnknownDatatype(f"unsupported datatype {datatype!r}", header_end)
    if "file" not in keys:
        raise MissingOffset("header has no 'file' entry", header_end)
    parts = keys["file"].split()
    if len(parts) != 2 or parts[0] != "." or not parts[1].isdigit():
        raise MissingOffset(f"expected 'file: . <offset>', got {keys['file']!r}",
                            header_end)
    offset = int(parts[1])
    if offset < header_end or offset > len(data):
        raise MissingOffset(
            f"payload offset {offset} lies outside [{header_end}, {len(data)}]",
            header_end)

    dt = DATATYPES[datatype]
    triplet = 3 * dt.itemsize
    n_full = (len(data) - offset) // triplet
    values = np.frombuffer(data, dtype=dt, count=3 * n_full, offset=offset)
    values = values.reshape(-1, 3)
    inf_rows = np.flatnonzero(np.isinf(values).all(axis=1))
    if inf_rows.size == 0:
        raise TruncatedPayload("payload has no Inf terminator", offset + n_full * triplet)
    stop = int(inf_rows[0])
    body = values[:stop]
    sep = np.flatnonzero(np.isnan(body).all(axis=1))
    streamlines, start = [], 0
    for s in sep:
        streamlines.append(body[start:s].copy())
        start = s + 1
    if start < stop:
        raise TruncatedPayload("last streamline is not NaN-terminated",
                               offset + stop * triplet)
    return TckFile(streamlines, datatype, header)


def read_tck(path):
    return parse_tck(Path(path).read_bytes())


def _header_bytes(tck, offset):
    values = {"datatype": tck.datatype, "count": str(len(tck.streamlines)),
              "file": f". {offset}"}
    lines = [MAGIC.decode()]
    written = set()
    for k, v in tck.header:
        if k in values:
            if k in written:
                continue
            v = values[k]
            written.add(k)
        lines.append(f"{k}: {v}")
    lines.extend(f"{k}: {values[k]}" for k in values if k not in written)
    lines.append("END")
    return ("\n".join(lines) + "\n").encode("utf-8")


def serialize_tck(tck):
    offset = 0
    while True:
        head = _header_bytes(tck, offset)
        if len(head) == offset:
            break
        offset = len(head)
    dt = DATATYPES[tck.datatype]
    chunks = []
    nan = np.full((1, 3), np.nan, dtype=dt)
    for s in tck.streamlines:
        chunks.extend([s.astype(dt), nan])
    chunks.append(np.full((1, 3), np.inf, dtype=dt))
    # concatenate drops to native byte order; cast back before writing
    return head + np.concatenate(chunks).astype(dt).tobytes()


def write_tck(tck, path):
    path = Path(path)
    try:
        path.write_bytes(serialize_tck(tck))
    except OSError as exc:
        raise OSError(f"cannot write track file {path}: {exc}") from exc
