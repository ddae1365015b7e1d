"""Reading and writing bundles: TCK streamlines, JSON archives, profile CSVs
and the synthetic generator."""
from .archive import (BundleArchive, bundle_from_tck, bundle_to_tck,
                      load_archive, load_bundle, read_profiles, save_archive,
                      write_profiles)
from .synthetic import SynthSpec, synth_bundle
from .tck import TckFile, read_tck, write_tck

__all__ = [
    "BundleArchive", "SynthSpec", "bundle_from_tck", "bundle_to_tck", "TckFile", "load_archive", "load_bundle",
    "read_profiles", "read_tck", "save_archive", "synth_bundle",
    "write_profiles", "write_tck",
]
