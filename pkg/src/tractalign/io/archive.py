"""Versioned JSON bundle archives.

Arrays are stored as ``{"dtype": "<f8", "shape": [...], "data": <base64>}``
with little-endian raw bytes.  Unknown keys are rejected so that files from
a newer schema fail loudly instead of losing data.  See ``docs/archive.md``
for the full schema.
"""
import base64
import csv
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..bundle import Bundle, prepare_fibers, subsample_indices
from ..curves import resample
from ..exceptions import ArchiveError
from ..tangent import BundleCode, make_basis

logger = logging.getLogger(__name__)

FORMAT = "tractalign-bundle"
VERSION = 1
TOP_KEYS = {"format", "version", "name", "fiber_ids", "fibers", "profiles",
            "code", "registration", "provenance"}
CODE_KEYS = {"beta_mu", "A", "basis", "rotations", "gammas", "residuals", "mean"}
BASIS_KEYS = {"requested", "orthonormal", "dropped"}
REGISTRATION_KEYS = {
    "kind", "template", "distance", "mean_term", "coeff_term", "path_length",
    "mean_gamma", "mean_rotation", "rotation", "transported_A", "pairings",
    "pairing_costs", "per_pair_gammas", "per_pair_rotations", "pre_distances",
    "post_distances"}


@dataclass(frozen=True, eq=False)
class BundleArchive:
    bundle: Bundle
    code: BundleCode = None
    registration: dict = None
    mean_info: dict = None


def encode_array(a):
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"dtype": "<f8", "shape": list(a.shape),
            "data": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(obj, where):
    try:
        if set(obj) != {"dtype", "shape", "data"}:
            extra = sorted(set(obj) - {"dtype", "shape", "data"})
            raise ArchiveError(f"{where}: unexpected array field(s) {extra}")
        dt = np.dtype(obj["dtype"])
        if dt.kind != "f" or dt.byteorder == ">":
            raise ArchiveError(f"{where}: unsupported dtype {obj['dtype']!r}")
        raw = base64.b64decode(obj["data"], validate=True)
        return np.frombuffer(raw, dtype=dt).reshape(obj["shape"]).astype(np.float64)
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, ArchiveError):
            raise
        raise ArchiveError(f"{where}: malformed array ({exc})") from None


def _maybe(a):
    return None if a is None else encode_array(a)


def _reject_unknown(obj, allowed, where):
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ArchiveError(f"unknown field {extra[0]!r} in {where}")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return encode_array(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, tuple):
        return list(value)
    return value


def archive_to_dict(archive):
    b = archive.bundle
    out = {
        "format": FORMAT,
        "version": VERSION,
        "name": b.name,
        "fiber_ids": [_jsonable(i) for i in b.fiber_ids],
        "fibers": encode_array(b.fibers),
        "profiles": _maybe(b.profiles),
        "code": None,
        "registration": None,
        "provenance": b.provenance,
    }
    c = archive.code
    if c is not None:
        out["code"] = {
            "beta_mu": encode_array(c.beta_mu),
            "A": encode_array(c.A),
            "basis": {"requested": c.basis.requested,
                      "orthonormal": c.basis.orthonormal,
                      "dropped": list(c.basis.dropped)},
            "rotations": _maybe(c.rotations),
            "gammas": _maybe(c.gammas),
            "residuals": _maybe(c.residuals),
            "mean": archive.mean_info,
        }
    if archive.registration is not None:
        _reject_unknown(archive.registration, REGISTRATION_KEYS, "registration")
        out["registration"] = {k: _jsonable(v) for k, v in archive.registration.items()}
    return out


def dumps(archive):
    return json.dumps(archive_to_dict(archive), indent=1, allow_nan=False) + "\n"


def save_archive(archive, path):
    Path(path).write_text(dumps(archive))


def archive_from_dict(d):
    if not isinstance(d, dict):
        raise ArchiveError("archive root must be a JSON object")
    if d.get("format") != FORMAT:
        raise ArchiveError(f"not a bundle archive (format={d.get('format')!r})")
    if "version" not in d:
        raise ArchiveError("archive has no version field")
    if d["version"] != VERSION:
        raise ArchiveError(f"unsupported archive version {d['version']!r}")
    _reject_unknown(d, TOP_KEYS, "archive")
    for key in ("name", "fibers", "fiber_ids"):
        if key not in d:
            raise ArchiveError(f"archive is missing required field {key!r}")
    fibers = decode_array(d["fibers"], "fibers")
    profiles = decode_array(d["profiles"], "profiles") if d.get("profiles") else None
    fiber_ids = d["fiber_ids"]
    if len(fiber_ids) != len(fibers):
        raise ArchiveError(
            f"{len(fiber_ids)} fiber ids for {len(fibers)} fibers")
    bundle = Bundle(d["name"], fibers, profiles, tuple(fiber_ids),
                    d.get("provenance") or {})

    code = mean_info = None
    if d.get("code") is not None:
        c = d["code"]
        _reject_unknown(c, CODE_KEYS, "code")
        _reject_unknown(c["basis"], BASIS_KEYS, "code.basis")
        beta_mu = decode_array(c["beta_mu"], "code.beta_mu")
        A = decode_array(c["A"], "code.A")
        basis = make_basis(beta_mu, c["basis"]["requested"],
                           c["basis"]["orthonormal"])
        if list(basis.dropped) != list(c["basis"]["dropped"]) or basis.K != A.shape[1]:
            raise ArchiveError(
                "code.basis does not rebuild to the stored coefficient width")
        if A.shape[0] != len(fibers):
            raise ArchiveError(
                f"code.A has {A.shape[0]} rows for {len(fibers)} fibers")
        opt = {k: decode_array(c[k], f"code.{k}") if c.get(k) else None
               for k in ("rotations", "gammas", "residuals")}
        code = BundleCode(beta_mu, A, basis, tuple(fiber_ids), **opt)
        mean_info = c.get("mean")

    registration = None
    if d.get("registration") is not None:
        r = d["registration"]
        _reject_unknown(r, REGISTRATION_KEYS, "registration")
        registration = {k: decode_array(v, f"registration.{k}")
                        if isinstance(v, dict) else v for k, v in r.items()}
    return BundleArchive(bundle, code, registration, mean_info)


def load_archive(path):
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"{path}: not valid JSON ({exc})") from None
    return archive_from_dict(d)


def read_profiles(path):
    """Scalar profiles from CSV, one row per fiber.

    Rows may differ in length (raw streamlines have different point counts),
    so a list of 1-D arrays is returned.
    """
    with open(path, newline="") as fh:
        rows = [np.array([float(x) for x in row], dtype=np.float64)
                for row in csv.reader(fh) if row]
    return rows


def write_profiles(profiles, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in profiles:
            writer.writerow([repr(float(x)) for x in row])


def load_bundle(path, T=100, M=50, seed=0, profiles=None, name=None):
    """Load a ``.tck`` file or bundle archive as an ingest-ready :class:`Bundle`.

    Fibers are subsampled to ``M`` (deterministically from ``seed``; ``None``
    keeps all of them),
    resampled to ``T`` points by arc length and oriented against the first
    kept fiber.  ``profiles`` optionally names a CSV with one row per fiber
    of the source file; profiles are resampled along with their fibers.
    """
    from .tck import read_tck

    path = Path(path)
    raw = path.read_bytes()
    prov = {"source": str(path), "sha256": hashlib.sha256(raw).hexdigest(),
            "resample_T": T, "subsample_M": M, "subsample_seed": seed}
    if path.suffix == ".tck":
        streamlines = [np.asarray(s, dtype=np.float64) for s in read_tck(path).streamlines]
        src_profiles = None
        bundle_name = name or path.stem
    else:
        arch = load_archive(path)
        streamlines = list(arch.bundle.fibers)
        src_profiles = arch.bundle.profiles
        bundle_name = name or arch.bundle.name
    if profiles is not None:
        src_profiles = read_profiles(profiles)
        if len(src_profiles) != len(streamlines):
            raise ArchiveError(
                f"{len(src_profiles)} profile rows for {len(streamlines)} fibers")

    idx = subsample_indices(len(streamlines), len(streamlines) if M is None else M,
                            seed)
    kept = [streamlines[i] for i in idx]
    fibers, flipped = prepare_fibers(kept, T)
    prof = None
    if src_profiles is not None:
        prof = []
        for i, flip, s in zip(idx, flipped, kept):
            p = np.asarray(src_profiles[i], dtype=np.float64)
            p = _resample_profile(s, p, T)
            prof.append(p[::-1] if flip else p)
        prof = np.array(prof)
    prov["indices"] = [int(i) for i in idx]
    prov["flipped"] = [int(i) for i in np.flatnonzero(flipped)]
    return Bundle(bundle_name, fibers, prof, tuple(int(i) for i in idx), prov)


def _resample_profile(streamline, profile, T):
    """Bring a profile onto the ``T``-point arc-length grid of its fiber.

    A profile with one value per streamline point is interpolated along arc
    length; one already holding ``T`` values is kept as is.
    """
    if len(profile) != len(streamline):
        if len(profile) == T:
            return profile
        raise ArchiveError(
            f"profile has {len(profile)} values for a {len(streamline)}-point "
            f"fiber (expected {len(streamline)} or {T})")
    seg = np.linalg.norm(np.diff(streamline, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    return np.interp(np.linspace(0.0, cum[-1], T), cum, profile)


def bundle_from_tck(tck, T=100, name="bundle", source=None):
    """Bundle holding every streamline of ``tck``, without reordering.

    Streamlines that already have ``T`` points are stored verbatim, others
    are resampled by arc length.  The header and datatype are kept in the
    provenance so :func:`bundle_to_tck` can restore them.
    """
    fibers = np.array([s.astype(np.float64) if len(s) == T else resample(s, T)
                       for s in tck.streamlines]).reshape(-1, T, 3)
    prov = {"source": source, "resample_T": T, "tck_datatype": tck.datatype,
            "tck_header": [list(kv) for kv in tck.header]}
    return Bundle(name, fibers, None, None, prov)


def bundle_to_tck(bundle):
    from .tck import TckFile

    prov = bundle.provenance
    datatype = prov.get("tck_datatype", "Float64LE")
    header = [tuple(kv) for kv in prov.get("tck_header", [])]
    return TckFile(list(bundle.fibers), datatype, header)
