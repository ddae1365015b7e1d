"""Seeded synthetic tract generator for tests and acceptance runs.

A backbone curve is built from its turning angles, so a "warp" of the
backbone moves where it bends (a genuine shape change, not just a new
parameterization).  Fibers are the backbone plus a smooth displacement in
the normal plane, optionally trimmed at the ends, then resampled by arc
length.  Synthetic FA-like profiles are bumps at fixed backbone positions,
so trimming and displacement shift them along each fiber.
"""
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.spatial.transform import Rotation

from ..bundle import Bundle
from ..curves import grid, resample
from ..exceptions import BadSpec

SHAPES = ("arc", "c_shape", "helix")
_FINE = 2001


@dataclass(frozen=True)
class SynthSpec:
    """Generator parameters.  Magnitudes of zero disable a perturbation.

    displacement : per-fiber normal offset scale, in length units
    rotation : whole-bundle rotation angle, radians
    translation : whole-bundle shift, length units
    warp : backbone bend relocation strength, in [0, 1)
    extent_jitter : maximal fraction trimmed from each fiber end, in [0, 0.5)
    flip_fraction : probability of storing a fiber in reverse order
    """
    shape: str = "c_shape"
    n_fibers: int = 50
    n_samples: int = 100
    length: float = 100.0
    displacement: float = 0.0
    rotation: float = 0.0
    translation: float = 0.0
    warp: float = 0.0
    extent_jitter: float = 0.0
    flip_fraction: float = 0.0
    profiles: bool = False
    profile_noise: float = 0.0
    name: str = "synthetic"

    def validate(self):
        if self.shape not in SHAPES:
            raise BadSpec(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if self.n_fibers < 1 or self.n_samples < 3:
            raise BadSpec("need n_fibers >= 1 and n_samples >= 3")
        for key in ("length", "displacement", "rotation", "translation",
                    "warp", "extent_jitter", "flip_fraction", "profile_noise"):
            value = getattr(self, key)
            if not np.isfinite(value) or value < 0:
                raise BadSpec(f"{key} must be a finite value >= 0, got {value}")
        if self.length == 0:
            raise BadSpec("length must be positive")
        if self.warp >= 1:
            raise BadSpec(f"warp must be < 1, got {self.warp}")
        if self.extent_jitter >= 0.5:
            raise BadSpec(f"extent_jitter must be < 0.5, got {self.extent_jitter}")
        if self.flip_fraction > 1:
            raise BadSpec(f"flip_fraction must be <= 1, got {self.flip_fraction}")
        return self


def _turning_angles(shape, s):
    if shape == "arc":
        return 0.6 * np.pi * s, np.zeros_like(s)
    if shape == "c_shape":
        return np.pi * (3 * s**2 - 2 * s**3), 0.15 * np.sin(np.pi * s)
    return 3 * np.pi * s, np.full_like(s, 0.35)


def backbone(shape, length=100.0, warp=0.0, n=_FINE):
    """Backbone points and unit tangents at ``n`` uniform arc-length samples.

    ``warp`` in (-1, 1) moves the bends towards one end.
    """
    s = grid(n)
    u = s + warp * np.sin(np.pi * s) / np.pi
    theta, psi = _turning_angles(shape, u)
    tangent = np.column_stack(
        [np.cos(theta) * np.cos(psi), np.sin(theta) * np.cos(psi), np.sin(psi)])
    pts = length * cumulative_trapezoid(tangent, s, axis=0, initial=0.0)
    return pts, tangent


def _normal_frame(tangent):
    ref = np.array([0.0, 0.0, 1.0])
    n1 = ref - (tangent @ ref)[:, None] * tangent
    n1 /= np.linalg.norm(n1, axis=1)[:, None]
    return n1, np.cross(tangent, n1)


def fa_profile(s):
    """Synthetic FA along the backbone: two bumps over a plateau."""
    return (0.45 + 0.2 * np.exp(-0.5 * ((s - 0.35) / 0.05) ** 2)
            + 0.1 * np.exp(-0.5 * ((s - 0.7) / 0.04) ** 2))


def synth_bundle(spec=None, seed=0, **overrides):
    """Generate a :class:`~tractalign.bundle.Bundle` from ``spec``.

    Keyword overrides replace individual :class:`SynthSpec` fields.  The
    output is a deterministic function of ``(spec, seed)``.
    """
    spec = SynthSpec(**{**asdict(spec or SynthSpec()), **overrides}).validate()
    rng = np.random.default_rng(seed)
    warp = spec.warp * rng.choice([-1.0, 1.0])
    pts, tangent = backbone(spec.shape, spec.length, warp)
    n1, n2 = _normal_frame(tangent)
    s = grid(_FINE)
    modes = np.column_stack([np.ones_like(s), np.sin(np.pi * s), np.cos(np.pi * s)])

    fibers, profiles = [], []
    for _ in range(spec.n_fibers):
        c = rng.standard_normal((2, 3)) / np.sqrt(3.0)
        d1, d2 = spec.displacement * (modes @ c[0]), spec.displacement * (modes @ c[1])
        curve = pts + d1[:, None] * n1 + d2[:, None] * n2
        lo = rng.uniform(0, spec.extent_jitter) if spec.extent_jitter else 0.0
        hi = 1.0 - (rng.uniform(0, spec.extent_jitter) if spec.extent_jitter else 0.0)
        keep = (s >= lo) & (s <= hi)
        # Carry the backbone position along so profiles follow the resampling.
        aug = resample_with_position(curve[keep], s[keep], spec.n_samples)
        fiber, pos = aug[:, :3], aug[:, 3]
        profile = fa_profile(pos)
        if spec.profile_noise:
            profile = profile + spec.profile_noise * rng.standard_normal(len(pos))
        if spec.flip_fraction and rng.uniform() < spec.flip_fraction:
            fiber, profile = fiber[::-1], profile[::-1]
        fibers.append(fiber)
        profiles.append(profile)
    fibers = np.array(fibers)

    if spec.rotation:
        axis = rng.standard_normal(3)
        R = Rotation.from_rotvec(spec.rotation * axis / np.linalg.norm(axis)).as_matrix()
        center = fibers.reshape(-1, 3).mean(axis=0)
        fibers = (fibers - center) @ R.T + center
    if spec.translation:
        shift = rng.standard_normal(3)
        fibers = fibers + spec.translation * shift / np.linalg.norm(shift)

    return Bundle(
        name=spec.name,
        fibers=fibers,
        profiles=np.array(profiles) if spec.profiles else None,
        provenance={"source": "synthetic", "spec": asdict(spec), "seed": seed,
                    "resample_T": spec.n_samples},
    )


def resample_with_position(curve, s, T):
    """Arc-length resample ``curve`` while interpolating the scalar ``s``."""
    out = resample(curve, T)
    seg = np.linalg.norm(np.diff(curve, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    pos = np.interp(grid(T) * cum[-1], cum, s)
    return np.column_stack([out, pos])
