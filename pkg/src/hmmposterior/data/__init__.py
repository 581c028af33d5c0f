"""Bundled example series and fitted model files.

Two classical count series ship with the package, each with the published
two-state Poisson model fitted to it:

  fetal-lamb   fetal lamb movement counts per 5-second interval
  earthquakes  annual counts of major world earthquakes, 1900-2006

See README.md in this directory for provenance notes.
"""

from __future__ import annotations

from pathlib import Path

_HERE = Path(__file__).parent

_ALIASES = {
    ("fetal-lamb", "obs"): "fetal_lamb.csv",
    ("fetal-lamb", "model"): "fetal_lamb_model.txt",
    ("earthquakes", "obs"): "earthquakes.csv",
    ("earthquakes", "model"): "earthquakes_model.txt",
}


def fixture_path(name: str, kind: str) -> Path:
    """Path of a bundled fixture; kind is 'obs' or 'model'."""
    try:
        return _HERE / _ALIASES[(name, kind)]
    except KeyError:
        raise KeyError(f"no bundled {kind} fixture named {name!r}") from None


def fixture_names() -> tuple[str, ...]:
    return ("fetal-lamb", "earthquakes")
