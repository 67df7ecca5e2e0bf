"""Bundled scheme configs."""

from __future__ import annotations

from importlib import resources

__all__ = ["names", "text", "load"]


def names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir() if p.name.endswith(".json"))


def text(name: str) -> str:
    path = resources.files(__name__) / f"{name}.json"
    if not path.is_file():
        raise KeyError(f"no bundled config named '{name}'; available: {', '.join(names())}")
    return path.read_text(encoding="utf-8")


def load(name: str):
    from ..scheme import load_scheme
    return load_scheme(text(name))
