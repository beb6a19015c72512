"""Deposition sections: the SECT text format, a procedural generator, and datasets.

A section is a binary occupancy grid naming the pixels where material must be
deposited. Sections come either from ``.sect`` files (externally rasterized
part slices) or from the procedural generator below.

SECT format: line 1 is ``<width> <height>``, followed by ``height`` rows of
``width`` characters from {0,1}; row 0 is the top of the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class SectionError(ValueError):
    """Invalid section data or SECT text."""


@dataclass(frozen=True)
class Section:
    """Binary occupancy grid of desired deposition pixels."""

    mask: np.ndarray  # bool, shape (height, width)
    name: str = "section"

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        object.__setattr__(self, "mask", mask)
        if mask.ndim != 2:
            raise SectionError(f"mask must be 2-D, got shape {mask.shape}")
        h, w = mask.shape
        if h < 2 or w < 2:
            raise SectionError(f"section must be at least 2x2, got {w}x{h}")

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def n_pixels(self) -> int:
        """Number of desired deposition pixels."""
        return int(self.mask.sum())

    def __eq__(self, other):
        if not isinstance(other, Section):
            return NotImplemented
        return self.name == other.name and np.array_equal(self.mask, other.mask)


@dataclass
class SectionDataset:
    """Ordered, uniquely named collection of sections."""

    sections: list[Section]
    source: str = "generated"  # "files" or "generated"

    def __post_init__(self):
        if not self.sections:
            raise SectionError("dataset must contain at least one section")
        names = [s.name for s in self.sections]
        if len(set(names)) != len(names):
            raise SectionError("section names must be unique")

    def __len__(self) -> int:
        return len(self.sections)

    def __iter__(self):
        return iter(self.sections)


def parse_section(text: str, name: str = "section") -> Section:
    """Parse SECT text into a Section.

    Raises SectionError with a line number on malformed input.
    """
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise SectionError("line 1: missing '<width> <height>' header")
    header = lines[0].split()
    if len(header) != 2:
        raise SectionError(f"line 1: expected '<width> <height>', got {lines[0]!r}")
    try:
        width, height = int(header[0]), int(header[1])
    except ValueError:
        raise SectionError(f"line 1: non-integer dimensions {lines[0]!r}") from None
    body = [ln for ln in lines[1:] if ln.strip() != ""]
    if len(body) != height:
        raise SectionError(
            f"line {len(lines)}: expected {height} rows, got {len(body)}"
        )
    rows = []
    for i, ln in enumerate(body):
        row = ln.strip()
        lineno = i + 2
        if len(row) != width:
            raise SectionError(
                f"line {lineno}: row length {len(row)} != width {width}"
            )
        bad = set(row) - {"0", "1"}
        if bad:
            raise SectionError(
                f"line {lineno}: invalid characters {sorted(bad)!r}"
            )
        rows.append([c == "1" for c in row])
    mask = np.array(rows, dtype=bool)
    if not mask.any():
        raise SectionError("section has zero desired pixels")
    return Section(mask=mask, name=name)


def serialize_section(section: Section) -> str:
    """Canonical SECT text: '1'/'0' rows, LF newlines, trailing newline."""
    lines = [f"{section.width} {section.height}"]
    for row in section.mask:
        lines.append("".join("1" if v else "0" for v in row))
    return "\n".join(lines) + "\n"


def generate_section(
    rng: np.random.Generator,
    grid_size: int = 32,
    shape_count_range: tuple[int, int] = (1, 3),
    shape_kinds: tuple[str, ...] = ("rectangle", "ellipse"),
    name: str = "generated",
) -> Section:
    """Random section: union of axis-aligned rectangles/ellipses clipped to the grid.

    Regenerates on an empty result so the invariant of >= 1 desired pixel holds.
    """
    if grid_size < 4:
        raise SectionError(f"grid_size must be >= 4, got {grid_size}")
    lo, hi = shape_count_range
    while True:
        mask = np.zeros((grid_size, grid_size), dtype=bool)
        for _ in range(int(rng.integers(lo, hi + 1))):
            kind = shape_kinds[int(rng.integers(len(shape_kinds)))]
            r0, c0 = rng.integers(0, grid_size, size=2)
            rh = int(rng.integers(2, max(3, grid_size // 2 + 1)))
            rw = int(rng.integers(2, max(3, grid_size // 2 + 1)))
            if kind == "rectangle":
                mask[r0 : min(grid_size, r0 + rh), c0 : min(grid_size, c0 + rw)] = True
            elif kind == "ellipse":
                rr, cc = np.ogrid[:grid_size, :grid_size]
                ell = ((rr - r0) / max(1, rh)) ** 2 + ((cc - c0) / max(1, rw)) ** 2 <= 1.0
                mask |= ell
            else:
                raise SectionError(f"unknown shape kind {kind!r}")
        if mask.any():
            return Section(mask=mask, name=name)


def generate_dataset(
    rng: np.random.Generator,
    count: int,
    grid_size: int = 32,
    shape_kinds: tuple[str, ...] = ("rectangle", "ellipse"),
) -> SectionDataset:
    sections = [
        generate_section(rng, grid_size, shape_kinds=shape_kinds, name=f"gen{i:04d}")
        for i in range(count)
    ]
    return SectionDataset(sections=sections, source="generated")


def sample(dataset: SectionDataset, rng: np.random.Generator) -> Section:
    """Uniformly pick one section from the dataset."""
    return dataset.sections[int(rng.integers(len(dataset)))]


def load_directory(path: str | Path) -> SectionDataset:
    """Read all ``*.sect`` files in a directory, sorted by filename."""
    path = Path(path)
    files = sorted(path.glob("*.sect"))
    if not files:
        raise SectionError(f"no .sect files in {path}")
    sections = [parse_section(f.read_text(), name=f.stem) for f in files]
    return SectionDataset(sections=sections, source="files")


def save_dataset(dataset: SectionDataset, path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for s in dataset.sections:
        (path / f"{s.name}.sect").write_text(serialize_section(s))
