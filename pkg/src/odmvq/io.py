"""On-disk formats.

* Bands are binary PGM (P5, 8- or 16-bit); plain P2 is also read.
* A multiband image is a small text header (``.mbi``) listing its band files.
* Label maps are PGMs with one grey level per class.
* Codebooks are versioned plain text, one ``centroid`` line per class.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .core import Codebook, ContractError, LabelMap, MultibandImage

__all__ = [
    "FormatError",
    "read_pgm",
    "write_pgm",
    "ingest",
    "save_image",
    "write_labels",
    "read_labels",
    "write_codebook",
    "read_codebook",
]

MBI_MAGIC = "odmvq-multiband 1"
CODEBOOK_MAGIC = "odmvq-codebook 1"


class FormatError(ContractError):
    """Unreadable, unsupported or inconsistent file."""


def _tokens(buf: bytes, count: int, pos: int):
    out = []
    while len(out) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        out.append(buf[start:pos])
    return out, pos


def read_pgm(path) -> tuple:
    """Return ``(array, maxval)`` for a P5 or P2 greymap."""
    buf = Path(path).read_bytes()
    magic = buf[:2]
    if magic not in (b"P5", b"P2"):
        raise FormatError(f"{path}: unsupported format (expected PGM P5/P2)")
    (w, h, maxval), pos = _tokens(buf, 3, 2)
    width, height, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval < 65536:
        raise FormatError(f"{path}: invalid maxval {maxval}")
    if magic == b"P2":
        values, _ = _tokens(buf, width * height, pos)
        data = np.array([int(v) for v in values], dtype=np.int64)
    else:
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        n = width * height
        raw = buf[pos:pos + n * dtype.itemsize]
        if len(raw) != n * dtype.itemsize:
            raise FormatError(f"{path}: truncated pixel data")
        data = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    return data.reshape(height, width), maxval


def write_pgm(path, array, maxval: int = 255) -> None:
    array = np.asarray(array)
    if array.ndim != 2:
        raise FormatError("PGM data must be two-dimensional")
    if array.min() < 0 or array.max() > maxval:
        raise FormatError("PGM values out of range")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = f"P5\n{array.shape[1]} {array.shape[0]}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + array.astype(dtype).tobytes())


def _read_mbi(path: Path) -> list:
    lines = [ln.strip() for ln in path.read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != MBI_MAGIC:
        raise FormatError(f"{path}: not a multiband header")
    return [path.parent / ln.split(None, 1)[1] for ln in lines[1:] if ln.startswith("band ")]


def ingest(paths) -> MultibandImage:
    """Stack greyscale bands (or a ``.mbi`` header) into a normalised multiband image.

    Integer intensities are divided by each file's maxval.
    """
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    files = []
    for p in map(Path, paths):
        files.extend(_read_mbi(p) if p.suffix == ".mbi" else [p])
    if not files:
        raise FormatError("no band files given")
    bands = []
    for f in files:
        data, maxval = read_pgm(f)
        bands.append(data / maxval)
    shapes = {b.shape for b in bands}
    if len(shapes) != 1:
        raise FormatError(f"band dimensions differ: {sorted(shapes)}")
    return MultibandImage(np.stack(bands, axis=-1))


def save_image(path, image: MultibandImage, maxval: int = 65535) -> list:
    """Write ``path`` (a ``.mbi`` header) plus one PGM per band; returns all files written."""
    path = Path(path)
    written = []
    names = []
    for b in range(image.bands):
        band_path = path.with_name(f"{path.stem}_b{b}.pgm")
        write_pgm(band_path, np.rint(image.data[:, :, b] * maxval).astype(np.int64), maxval)
        names.append(band_path.name)
        written.append(band_path)
    header = [MBI_MAGIC, f"height {image.height}", f"width {image.width}", f"bands {image.bands}",
              f"maxval {maxval}"] + [f"band {n}" for n in names]
    path.write_text("\n".join(header) + "\n")
    return [path] + written


def write_labels(path, labels: LabelMap) -> None:
    top = int(labels.labels.max()) if labels.labels.size else 0
    if top > 65535:
        raise FormatError("too many classes for a PGM label map")
    write_pgm(path, labels.labels, 255 if top <= 255 else 65535)


def read_labels(path) -> LabelMap:
    data, _ = read_pgm(path)
    return LabelMap(data)


def write_codebook(path, codebook: Codebook, meta: dict | None = None) -> None:
    lines = [CODEBOOK_MAGIC, f"classes {codebook.size}", f"bands {codebook.dim}"]
    for key, value in (meta or {}).items():
        lines.append(f"meta {key} {value}")
    for row in codebook.centroids:
        lines.append("centroid " + " ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_codebook(path) -> tuple:
    """Return ``(codebook, meta)``."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0] != CODEBOOK_MAGIC:
        raise FormatError(f"{path}: not a codebook file")
    meta, rows, header = {}, [], {}
    for ln in lines[1:]:
        key, _, rest = ln.partition(" ")
        if key == "centroid":
            rows.append([float(v) for v in rest.split()])
        elif key == "meta":
            k, _, v = rest.partition(" ")
            meta[k] = v
        elif key in ("classes", "bands"):
            header[key] = int(rest)
    book = Codebook(np.array(rows))
    if header.get("classes", book.size) != book.size or header.get("bands", book.dim) != book.dim:
        raise FormatError(f"{path}: header does not match centroid rows")
    return book, meta
