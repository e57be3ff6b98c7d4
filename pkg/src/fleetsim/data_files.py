"""Access to the bundled example scenario files."""

from importlib import resources
from pathlib import Path


def bundled(name: str) -> Path:
    """Filesystem path of a file shipped in the package data directory."""
    path = Path(str(resources.files("fleetsim").joinpath("data", name)))
    if not path.exists():
        raise FileNotFoundError(f"no bundled data file named {name!r}")
    return path
