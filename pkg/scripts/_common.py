"""Shared helpers for the experiment scripts."""

import argparse
from pathlib import Path

from mpdosim.harness import to_json


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out", type=Path, default=None, help="write JSON here instead of stdout")
    return p


def emit(doc, out) -> None:
    text = to_json(doc)
    if out is None:
        print(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
