"""Batch command-line front end.

Subcommands: ``synth``, ``convert``, ``mean``, ``register`` and ``eval``.
Data go to files in the output directory, logs to standard error.  Exit
status is 0 on success, 1 on a runtime failure and 2 on a usage error.
"""
import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .estimators import BundleRegistration, code_bundle
from .exceptions import PairMismatch, TractAlignError
from .io.archive import (BundleArchive, bundle_from_tck, bundle_to_tck,
                         load_archive, load_bundle, save_archive,
                         write_profiles)
from .io.synthetic import SynthSpec, synth_bundle
from .io.tck import read_tck, write_tck
from .metrics import compare_alignments, profile_variability, warp_profile
from .registration import gamma_deviation

logger = logging.getLogger("tractalign")

SUBCOMMANDS = ("synth", "convert", "mean", "register", "eval")
DISTANCE_COLUMNS = ("pair_id", "tract_name", "distance", "mean_term",
                    "coeff_term", "mean_gamma_deviation", "status")


class UsageError(Exception):
    """Invalid configuration; reported with exit status 2."""


@dataclass
class RunConfig:
    """Resolved settings of one command run (written as ``run_config.json``)."""
    subcommand: str
    inputs: list = field(default_factory=list)
    template: str = None
    out: str = "out"
    T: int = 100
    M: int = 50
    K: int = None
    transport: str = "exact"
    path_rescale: bool = False
    raw_basis: bool = False
    seed: int = 0
    jobs: int = 1
    profiles: list = field(default_factory=list)
    count: int = 1
    tck: bool = False
    synth: dict = field(default_factory=dict)

    def transport_mode(self):
        """``("exact", None)`` or ``("stepwise", k)``."""
        if self.transport == "exact":
            return "exact", None
        mode, _, k = self.transport.partition(":")
        return mode, int(k) if k else 10

    def validate(self):
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if self.T < 3:
            raise UsageError(f"T must be >= 3, got {self.T}")
        if self.M is not None and self.M < 1:
            raise UsageError(f"M must be >= 1, got {self.M}")
        if self.K is not None and self.K < 1:
            raise UsageError(f"K must be >= 1, got {self.K}")
        if self.jobs < 1:
            raise UsageError(f"jobs must be >= 1, got {self.jobs}")
        if self.count < 1:
            raise UsageError(f"count must be >= 1, got {self.count}")
        mode, _, k = self.transport.partition(":")
        if mode == "exact" and not k:
            pass
        elif mode == "stepwise" and (not k or (k.isdigit() and int(k) >= 2)):
            pass
        else:
            raise UsageError(
                f"transport must be 'exact' or 'stepwise:<k>' with k >= 2, "
                f"got {self.transport!r}")
        needs_inputs = {"convert": "at least one", "mean": "exactly one",
                        "register": "at least one", "eval": "at least one"}
        if self.subcommand in needs_inputs and not self.inputs:
            raise UsageError(f"{self.subcommand} needs {needs_inputs[self.subcommand]} input")
        if self.subcommand == "mean" and len(self.inputs) != 1:
            raise UsageError("mean takes exactly one input bundle")
        if self.subcommand == "register" and not self.template:
            raise UsageError("register needs --template")
        if self.profiles and len(self.profiles) != len(self.inputs):
            raise UsageError(
                f"{len(self.profiles)} profile files for {len(self.inputs)} inputs")
        for p in [*self.inputs, *self.profiles, *([self.template] if self.template else [])]:
            if not Path(p).exists():
                raise UsageError(f"input not found: {p}")
        if self.subcommand == "synth":
            try:
                SynthSpec(**self.synth).validate()
            except TypeError as exc:
                raise UsageError(f"bad synth parameter: {exc}") from None
            except TractAlignError as exc:
                raise UsageError(str(exc)) from None
        return self

    def registration(self):
        mode, k = self.transport_mode()
        return BundleRegistration(
            basis_size=self.K, orthonormal=not self.raw_basis, transport=mode,
            transport_steps=k or 10,
            rescale="path" if self.path_rescale else "norm")


# -- argument parsing -------------------------------------------------------

_SYNTH_FLAGS = {
    "shape": str, "n_fibers": int, "n_samples": int, "length": float,
    "displacement": float, "rotation": float, "translation": float,
    "warp": float, "extent_jitter": float, "flip_fraction": float,
    "profile_noise": float, "name": str,
}


def build_parser():
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields; "
                        "explicit flags take precedence")
    common.add_argument("-o", "--out", default=S, help="output directory")
    common.add_argument("--T", type=int, default=S, help="samples per fiber (100)")
    common.add_argument("--M", type=int, default=S, help="fibers per bundle (50)")
    common.add_argument("--K", type=int, default=S, help="basis size (min(M, 20))")
    common.add_argument("--transport", default=S, help="exact | stepwise:<k>")
    common.add_argument("--path-rescale", action="store_true", default=S,
                        help="stepwise transport rescales to the geodesic length")
    common.add_argument("--raw-basis", action="store_true", default=S,
                        help="skip orthonormalization of the tangent basis")
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("-j", "--jobs", type=int, default=S,
                        help="parallel subject jobs (register)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog="tractalign", description="Elastic fiber-bundle coding and registration.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic bundles")
    for name, typ in _SYNTH_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest="synth_" + name,
                       type=typ, default=S)
    p.add_argument("--with-profiles", dest="synth_profiles", action="store_true",
                   default=S, help="generate FA-like profiles")
    p.add_argument("--count", type=int, default=S, help="number of bundles")
    p.add_argument("--tck", action="store_true", default=S,
                   help="also write .tck files and profile CSVs")

    p = sub.add_parser("convert", parents=[common], help="convert .tck <-> archive")
    p.add_argument("inputs", nargs="*", default=S)

    for name, text in (("mean", "compute a bundle mean and code"),
                       ("register", "register subjects to a template")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("inputs", nargs="*", default=S)
        p.add_argument("--profiles", nargs="+", default=S,
                       help="profile CSV per input, in input order")
        if name == "register":
            p.add_argument("--template", default=S, required=True)

    p = sub.add_parser("eval", parents=[common],
                       help="Hausdorff report over register outputs")
    p.add_argument("inputs", nargs="*", default=S,
                   help="register output directories")
    return parser


def resolve_config(args):
    values = {}
    if args.config:
        try:
            values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(values, dict):
            raise UsageError("config file must hold a JSON object")
    synth = dict(values.get("synth", {}))
    known = {f.name for f in fields(RunConfig)}
    for key, value in vars(args).items():
        if key.startswith("synth_"):
            synth[key[len("synth_"):]] = value
        elif key in known:
            values[key] = value
    values["subcommand"] = args.subcommand
    values["synth"] = synth
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"unknown config field {unknown[0]!r}")
    return RunConfig(**values).validate()


def write_run_config(cfg, out):
    (out / "run_config.json").write_text(
        json.dumps(asdict(cfg), indent=1, sort_keys=True) + "\n")


# -- subcommands ------------------------------------------------------------

def cmd_synth(cfg, out):
    spec = SynthSpec(**cfg.synth)
    width = max(3, len(str(cfg.count - 1)))
    for i in range(cfg.count):
        stem = f"{spec.name}_{i:0{width}d}"
        bundle = synth_bundle(spec, seed=cfg.seed + i)
        save_archive(BundleArchive(bundle), out / f"{stem}.json")
        if cfg.tck:
            write_tck(bundle_to_tck(bundle), out / f"{stem}.tck")
            if bundle.profiles is not None:
                write_profiles(bundle.profiles, out / f"{stem}_profiles.csv")
        logger.info("wrote %s", stem)
    return 0


def cmd_convert(cfg, out):
    for path in map(Path, cfg.inputs):
        if path.suffix == ".tck":
            bundle = bundle_from_tck(read_tck(path), cfg.T, path.stem, str(path))
            save_archive(BundleArchive(bundle), out / f"{path.stem}.json")
        else:
            write_tck(bundle_to_tck(load_archive(path).bundle), out / f"{path.stem}.tck")
        logger.info("converted %s", path)
    return 0


def _mean_info(mean):
    return {"iterations": mean.iterations, "converged": mean.converged,
            "final_gradient_norm": mean.final_gradient_norm,
            "objective": list(mean.objective)}


def cmd_mean(cfg, out):
    from .plots import plot_gammas, plot_profiles

    bundle = load_bundle(cfg.inputs[0], cfg.T, cfg.M, cfg.seed,
                         profiles=cfg.profiles[0] if cfg.profiles else None)
    reg = cfg.registration()
    mean, code = code_bundle(bundle, reg.basis_size, reg.orthonormal)
    logger.info("%s: mean after %d iterations (|grad| %.2e)", bundle.name,
                mean.iterations, mean.final_gradient_norm)
    save_archive(BundleArchive(bundle, code, None, _mean_info(mean)),
                 out / f"{bundle.name}.json")
    plot_gammas(mean.gammas, out / f"{bundle.name}_gammas.svg",
                title=f"{bundle.name}: warps to the mean")
    if bundle.profiles is not None:
        after = np.array([warp_profile(p, g)
                          for p, g in zip(bundle.profiles, mean.gammas)])
        write_profiles(after, out / f"{bundle.name}_profiles_aligned.csv")
        plot_profiles(bundle.profiles, after, out / f"{bundle.name}_profiles.svg")
        if len(after) > 1:
            logger.info("profile variability %.5f -> %.5f",
                        profile_variability(bundle.profiles),
                        profile_variability(after))
    return 0


def _load_template(cfg):
    path = Path(cfg.template)
    if path.suffix != ".tck":
        arch = load_archive(path)
        if arch.code is not None:
            return arch.bundle, arch.code, arch.mean_info
    bundle = load_bundle(path, cfg.T, cfg.M, cfg.seed)
    mean, code = code_bundle(bundle, cfg.K, not cfg.raw_basis)
    return bundle, code, _mean_info(mean)


def _pair_ids(inputs):
    ids, seen = [], {}
    for path in inputs:
        stem = Path(path).stem
        seen[stem] = seen.get(stem, 0) + 1
        ids.append(stem if seen[stem] == 1 else f"{stem}_{seen[stem]}")
    return ids


def _register_one(job):
    """Register one subject and write its archives.  Runs in a worker."""
    cfg, reg, pair_id, path, profiles, pair_dir = job
    from .plots import plot_gammas

    tract = reg.template_.name
    try:
        subject = load_bundle(path, cfg.T, cfg.M, cfg.seed, profiles=profiles)
        r = reg.register(subject)
        pair_dir.mkdir(parents=True, exist_ok=True)
        s, h = r.soft, r.hard
        tname = reg.template_.name
        save_archive(BundleArchive(
            r.rigid, r.code, {"kind": "rigid", "template": tname},
            _mean_info(r.mean)), pair_dir / "rigid.json")
        soft_bundle = r.rigid.replace(fibers=s.fibers, profiles=None)
        save_archive(BundleArchive(soft_bundle, None, {
            "kind": "soft", "template": tname, "distance": s.distance,
            "mean_term": s.mean_term, "coeff_term": s.coeff_term,
            "path_length": s.path_length, "mean_gamma": s.mean_gamma,
            "mean_rotation": s.mean_rotation, "rotation": s.rotation,
            "transported_A": s.transported_A}), pair_dir / "soft.json")
        hard_bundle = r.rigid.replace(fibers=h.warped_fibers, profiles=None)
        save_archive(BundleArchive(hard_bundle, None, {
            "kind": "hard", "template": tname,
            "pairings": [int(j) for j in h.pairings],
            "pairing_costs": h.pairing_costs,
            "per_pair_gammas": h.per_pair_gammas,
            "per_pair_rotations": h.per_pair_rotations,
            "pre_distances": h.pre_distances,
            "post_distances": h.post_distances}), pair_dir / "hard.json")
        plot_gammas(h.per_pair_gammas, pair_dir / "gammas.svg",
                    title=f"{pair_id} to {tname}", highlight=s.mean_gamma)
        return {"pair_id": pair_id, "tract_name": tract,
                "distance": repr(s.distance), "mean_term": repr(s.mean_term),
                "coeff_term": repr(s.coeff_term),
                "mean_gamma_deviation": repr(gamma_deviation(s.mean_gamma)),
                "status": "ok"}
    except (TractAlignError, OSError, ValueError) as exc:
        logger.error("%s failed: %s", pair_id, exc)
        return {"pair_id": pair_id, "tract_name": tract, "distance": "",
                "mean_term": "", "coeff_term": "", "mean_gamma_deviation": "",
                "status": f"error: {type(exc).__name__}: {exc}"}


def cmd_register(cfg, out):
    template, code, info = _load_template(cfg)
    save_archive(BundleArchive(template, code, None, info), out / "template.json")
    reg = cfg.registration().fit(template, code=code)
    profiles = cfg.profiles or [None] * len(cfg.inputs)
    jobs = [(cfg, reg, pid, path, prof, out / pid) for pid, path, prof
            in zip(_pair_ids(cfg.inputs), cfg.inputs, profiles)]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(jobs))) as pool:
            rows = list(pool.map(_register_one, jobs))
    else:
        rows = [_register_one(job) for job in jobs]
    with open(out / "distances.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, DISTANCE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    failed = [r["pair_id"] for r in rows if r["status"] != "ok"]
    if failed:
        logger.error("%d of %d subjects failed: %s", len(failed), len(rows),
                     ", ".join(failed))
        return 1
    return 0


def cmd_eval(cfg, out):
    from .plots import plot_hausdorff_bars

    rigid, soft = [], []
    for d in map(Path, cfg.inputs):
        dist = d / "distances.csv"
        if not dist.exists():
            raise PairMismatch(f"{d} has no distances.csv; is it a register output?")
        template = load_archive(d / "template.json").bundle
        with open(dist, newline="") as fh:
            rows = [r for r in csv.DictReader(fh) if r["status"] == "ok"]
        for r in rows:
            pid, tract = r["pair_id"], r["tract_name"]
            try:
                rb = load_archive(d / pid / "rigid.json").bundle
                sb = load_archive(d / pid / "soft.json").bundle
            except FileNotFoundError as exc:
                raise PairMismatch(f"pair {pid!r} is incomplete: {exc}") from None
            rigid.append((pid, tract, rb.fibers, template.fibers))
            soft.append((pid, tract, sb.fibers, template.fibers))
    if not rigid:
        raise PairMismatch("no registered pairs found")
    report = compare_alignments(rigid, soft)
    report.write_csv(out / "report.csv")
    summary = report.summary()
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    plot_hausdorff_bars(summary, out / "hausdorff.svg")
    for tract, s in summary.items():
        logger.info("%s: rigid %.3f, soft %.3f (n=%d)", tract, s["rigid_mean"],
                    s["soft_mean"], s["n"])
    return 0


COMMANDS = {"synth": cmd_synth, "convert": cmd_convert, "mean": cmd_mean,
            "register": cmd_register, "eval": cmd_eval}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
        level=logging.DEBUG if args.verbose > 1 else
        logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = resolve_config(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_run_config(cfg, out)
        return COMMANDS[cfg.subcommand](cfg, out)
    except (TractAlignError, OSError, ValueError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
