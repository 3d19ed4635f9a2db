"""Access to files bundled under quadgen/data."""

from importlib import resources


def data_path(name):
    """Filesystem path of a packaged data file."""
    path = resources.files("quadgen") / "data" / name
    if not path.is_file():
        raise FileNotFoundError(f"no packaged data file named {name!r}")
    return str(path)
