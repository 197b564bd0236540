"""JSON system descriptions (format 1).

A description names a block algebra, a partial automorphism on it, and
optionally integer weights for a circle action::

    {
      "format": 1,
      "name": "shift-c3",
      "block_sizes": [1, 1, 1],
      "source": [0, 1],
      "target": [1, 2],
      "block_map": [[0, 1], [1, 2]],
      "unitaries": {"0": [[[1, 0]]]},
      "weights": [[0], [0], [0]]
    }

Complex entries are ``[re, im]`` pairs and block indices are 0-based.
Missing unitaries default to the identity.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .core import DEFAULT_TOL, FdAlgebra, Ideal, PartialAutomorphism
from .structure import CircleAction

FORMAT = 1
REQUIRED = ("format", "block_sizes", "source", "target", "block_map")
OPTIONAL = ("name", "description", "unitaries", "weights")


class DescriptionError(ValueError):
    """Malformed or invalid system description; the message carries a location."""


@dataclass(frozen=True, eq=False)
class SystemDescription:
    name: str
    description: str
    block_sizes: tuple[int, ...]
    source: tuple[int, ...]
    target: tuple[int, ...]
    block_map: tuple[tuple[int, int], ...]
    unitaries: dict = field(default_factory=dict)
    weights: tuple[tuple[int, ...], ...] | None = None
    fingerprint: str = ""

    @property
    def algebra(self) -> FdAlgebra:
        return FdAlgebra(self.block_sizes)

    def system(self, tol: float = DEFAULT_TOL) -> PartialAutomorphism:
        alg = self.algebra
        return PartialAutomorphism(Ideal(alg, frozenset(self.source)),
                                   Ideal(alg, frozenset(self.target)),
                                   dict(self.block_map), dict(self.unitaries), tol)

    def action(self) -> CircleAction | None:
        return None if self.weights is None else CircleAction(self.algebra, self.weights)


def _where(text: str, origin: str, key: str) -> str:
    """origin:line:col of the first occurrence of a key, or just origin."""
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if not m:
        return origin
    line = text.count("\n", 0, m.start()) + 1
    col = m.start() - (text.rfind("\n", 0, m.start()) + 1) + 1
    return f"{origin}:{line}:{col}"


def _int_list(value, what: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool)
                                              for x in value):
        raise ValueError(f"{what} must be a list of integers")
    return tuple(value)


def _complex_matrix(value, n: int, block: int) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ValueError(f"unitary for block {block} is not a numeric array") from None
    if arr.shape != (n, n, 2):
        raise ValueError(f"unitary for block {block} must be {n} x {n} entries of [re, im], "
                         f"got array of shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def parse_description(text: str, origin: str = "<input>",
                      tol: float = DEFAULT_TOL) -> SystemDescription:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise DescriptionError(f"{origin}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise DescriptionError(f"{origin}: top level must be an object")
    unknown = sorted(set(raw) - set(REQUIRED) - set(OPTIONAL))
    if unknown:
        raise DescriptionError(f"{_where(text, origin, unknown[0])}: unknown field(s) {unknown}")
    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        raise DescriptionError(f"{origin}: missing field(s) {missing}")
    if raw["format"] != FORMAT:
        raise DescriptionError(f"{_where(text, origin, 'format')}: unsupported format "
                               f"{raw['format']!r} (expected {FORMAT})")

    current = "block_sizes"
    try:
        sizes = _int_list(raw["block_sizes"], "block_sizes")
        if any(n < 1 for n in sizes):
            raise ValueError("block sizes must be positive")
        current = "source"
        source = _int_list(raw["source"], "source")
        current = "target"
        target = _int_list(raw["target"], "target")
        for what, blocks in (("source", source), ("target", target)):
            current = what
            if len(set(blocks)) != len(blocks):
                raise ValueError(f"{what} lists a block twice")
            bad = [i for i in blocks if not 0 <= i < len(sizes)]
            if bad:
                raise ValueError(f"{what} blocks {bad} out of range 0..{len(sizes) - 1}")
        current = "block_map"
        pairs = raw["block_map"]
        if not isinstance(pairs, list) or not all(
                isinstance(p, list) and len(p) == 2 and all(isinstance(x, int) for x in p)
                for p in pairs):
            raise ValueError("block_map must be a list of [source_block, target_block] pairs")
        bmap = tuple((int(i), int(j)) for i, j in pairs)
        current = "unitaries"
        units = {}
        for key, mat in (raw.get("unitaries") or {}).items():
            if not key.isdigit() or int(key) not in dict(bmap):
                raise ValueError(f"unitary given for block {key!r}, which is not in the block map")
            i = int(key)
            units[i] = _complex_matrix(mat, sizes[i], i)
        current = "weights"
        weights = None
        if raw.get("weights") is not None:
            w = raw["weights"]
            if not isinstance(w, list) or len(w) != len(sizes):
                raise ValueError(f"weights must list one integer vector per block ({len(sizes)})")
            weights = tuple(_int_list(ws, f"weights of block {i}") for i, ws in enumerate(w))
            for i, (ws, n) in enumerate(zip(weights, sizes)):
                if len(ws) != n:
                    raise ValueError(f"block {i} has size {n} but {len(ws)} weights")
        current = "block_map"
        desc = SystemDescription(
            name=str(raw.get("name", origin)),
            description=str(raw.get("description", "")),
            block_sizes=sizes, source=source, target=target, block_map=bmap,
            unitaries=units, weights=weights,
            fingerprint=hashlib.sha256(json.dumps(raw, sort_keys=True,
                                                  separators=(",", ":")).encode()).hexdigest())
        # the partial automorphism does the size, bijection and unitarity checks
        current = "unitaries" if units else "block_map"
        desc.system(tol)
    except ValueError as e:
        raise DescriptionError(f"{_where(text, origin, current)}: {current}: {e}") from None
    return desc


# ---------------------------------------------------------------- gallery
def _gallery_dir():
    return resources.files("covalg") / "gallery"


def gallery_index() -> dict:
    """Bundled systems and the commands each one is expected to pass."""
    return json.loads((_gallery_dir() / "index.json").read_text())


def gallery_names() -> list[str]:
    return sorted(gallery_index())


def gallery_text(name: str) -> str:
    if name not in gallery_index():
        raise DescriptionError(f"unknown gallery system {name!r}; available: "
                               f"{', '.join(gallery_names())}")
    return (_gallery_dir() / f"{name}.json").read_text()


def load_description(path: str, tol: float = DEFAULT_TOL) -> SystemDescription:
    """Read a file, or a bundled system given as ``gallery:NAME``."""
    if path.startswith("gallery:"):
        name = path.split(":", 1)[1]
        return parse_description(gallery_text(name), f"{name}.json", tol)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise DescriptionError(f"{path}: {e.strerror}") from None
    return parse_description(text, path, tol)
