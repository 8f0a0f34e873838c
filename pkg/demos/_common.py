import sys
from pathlib import Path


def out_dir(name):
    """Output folder: first CLI argument, else demos/out/<name>."""
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "out"
    path = root / name
    path.mkdir(parents=True, exist_ok=True)
    return path
