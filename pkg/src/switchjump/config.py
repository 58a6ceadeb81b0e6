"""Flat key-value configuration files with dotted sections.

Format: one `key = value` per line, `#` comments, blank lines ignored.  Keys
are dotted paths (sim.dt, model.delta); values are parsed as int, float, bool
or string.  No nesting beyond the dotted names.
"""

from __future__ import annotations

import hashlib
from typing import Optional

from .errors import ConfigurationError

__all__ = ["parse_config", "load_config", "config_hash", "canonical_text",
           "coerce", "split_section"]


def coerce(raw: str):
    """int if it looks like one, then float, then bool, else the raw string."""
    s = raw.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse flat dotted-key config text into an ordered dict of scalars."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(
                f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ConfigurationError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = coerce(value)
    return out


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text, source=path)


def split_section(config: dict, section: str) -> dict:
    """Sub-dict of keys under `section.`, with the prefix stripped."""
    prefix = section + "."
    return {k[len(prefix):]: v for k, v in config.items() if k.startswith(prefix)}


def canonical_text(config: dict) -> str:
    """Sorted `key=value` lines; the basis for the provenance hash."""
    return "\n".join(f"{k}={config[k]!r}" for k in sorted(config))


def config_hash(config: dict, seed: Optional[int] = None) -> str:
    """Short stable hash of the canonical config text plus the effective seed."""
    payload = canonical_text(config) + f"\nseed={seed}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]
