"""PGM image I/O, mini-MIAS annotation parsing, and ROI extraction.

Images are plain 2-D uint8 numpy arrays (row-major, top-left origin).
The annotation index uses the mini-MIAS text format, one record per
line: ``ref tissue abnormality [severity x y radius]``. Annotation
coordinates use a bottom-left origin and are flipped on conversion to
image coordinates.

All functions here are pure and safe to call concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BadMagicError,
    CenterOutOfBoundsError,
    MalformedLineError,
    MaxvalUnsupportedError,
    TruncatedDataError,
)

TISSUE_CLASSES = ("F", "G", "D")
ABNORMALITY_CLASSES = ("CALC", "CIRC", "SPIC", "MISC", "ARCH", "ASYM", "NORM")
SEVERITY_CLASSES = ("B", "M")

_WHITESPACE = frozenset(b" \t\n\r\x0b\x0c")


def as_gray_image(arr) -> np.ndarray:
    """Validate and return *arr* as a 2-D uint8 image.

    Accepts any integer array with values in [0, 255]; rejects empty or
    non-2-D input.
    """
    a = np.asarray(arr)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D image, got shape {a.shape}")
    if a.dtype == np.uint8:
        return a
    if not np.issubdtype(a.dtype, np.integer):
        raise ValueError(f"expected integer pixel values, got dtype {a.dtype}")
    if a.size and (a.min() < 0 or a.max() > 255):
        raise ValueError("pixel values outside [0, 255]")
    return a.astype(np.uint8)


# ---------------------------------------------------------------------------
# PGM codec
# ---------------------------------------------------------------------------

def _header_fields(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read *count* whitespace-delimited header fields, honoring ``#`` comments.

    Returns the fields and the offset one byte past the single whitespace
    character that terminates the last field (where a P5 raster begins).
    """
    fields: list[bytes] = []
    i, n = 0, len(data)
    while len(fields) < count:
        while i < n and data[i] in _WHITESPACE:
            i += 1
        if i < n and data[i] == 0x23:  # '#'
            while i < n and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < n and data[i] not in _WHITESPACE and data[i] != 0x23:
            i += 1
        if i == start:
            raise TruncatedDataError("header ended early")
        fields.append(data[start:i])
    if i < n and data[i] in _WHITESPACE:
        i += 1
    return fields, i


def _header_int(field: bytes, what: str) -> int:
    try:
        return int(field)
    except ValueError:
        raise TruncatedDataError(f"non-numeric {what} field {field!r}") from None


def decode_pgm(data: bytes) -> np.ndarray:
    """Decode a binary (P5) or ASCII (P2) PGM byte stream.

    Header comments are allowed; maxval must not exceed 255. Raises
    ``BadMagicError``, ``TruncatedDataError``, or ``MaxvalUnsupportedError``.
    """
    if len(data) < 2 or data[:2] not in (b"P2", b"P5"):
        raise BadMagicError(f"not a P2/P5 PGM stream (starts with {data[:2]!r})")
    magic = data[:2]
    fields, pos = _header_fields(data, 4)
    if fields[0] != magic:
        raise BadMagicError(f"malformed magic token {fields[0]!r}")
    width = _header_int(fields[1], "width")
    height = _header_int(fields[2], "height")
    maxval = _header_int(fields[3], "maxval")
    if maxval > 255:
        raise MaxvalUnsupportedError(f"maxval {maxval} > 255 not supported")
    if width < 1 or height < 1 or maxval < 1:
        raise TruncatedDataError(
            f"invalid header: width={width} height={height} maxval={maxval}")
    n = width * height
    if magic == b"P5":
        raster = data[pos:pos + n]
        if len(raster) < n:
            raise TruncatedDataError(f"raster has {len(raster)} of {n} bytes")
        return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()
    # P2: whitespace-separated ASCII samples (comments tolerated)
    samples, _ = _header_fields_all(data[pos:], n)
    values = [_header_int(tok, "sample") for tok in samples]
    arr = np.array(values, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() > maxval):
        raise TruncatedDataError("sample value outside [0, maxval]")
    return arr.astype(np.uint8).reshape(height, width)


def _header_fields_all(data: bytes, count: int) -> tuple[list[bytes], int]:
    try:
        return _header_fields(data, count)
    except TruncatedDataError:
        raise TruncatedDataError(f"fewer than {count} ASCII samples") from None


def encode_pgm(img) -> bytes:
    """Encode an image as canonical binary PGM (P5, maxval 255).

    ``decode_pgm(encode_pgm(x))`` reproduces every pixel of ``x`` exactly.
    """
    a = as_gray_image(img)
    h, w = a.shape
    return b"P5\n%d %d\n255\n" % (w, h) + a.tobytes()


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_pgm(f.read())


def write_pgm(path, img) -> None:
    with open(path, "wb") as f:
        f.write(encode_pgm(img))


# ---------------------------------------------------------------------------
# mini-MIAS annotation index
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MiasRecord:
    """One annotation line: reference id, tissue class, abnormality,
    optional severity and optional circle geometry (bottom-left origin)."""

    ref_id: str
    tissue: str                      # F | G | D
    abnormality: str                 # CALC | CIRC | SPIC | MISC | ARCH | ASYM | NORM
    severity: Optional[str] = None   # B | M
    center_x: Optional[int] = None
    center_y: Optional[int] = None
    radius: Optional[int] = None

    @property
    def has_geometry(self) -> bool:
        return self.radius is not None


def parse_mias_index(text: str) -> list[MiasRecord]:
    """Parse the annotation index; returns records in input order.

    Any malformed line aborts the whole parse with ``MalformedLineError``
    (no silent skipping). Blank lines are ignored. Grammar per line:

        ref tissue NORM
        ref tissue abnormality [severity [x y radius]]
    """
    records: list[MiasRecord] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 3:
            raise MalformedLineError(lineno, f"expected at least 3 fields, got {len(tokens)}")
        ref, tissue, abnorm = tokens[0], tokens[1], tokens[2]
        if tissue not in TISSUE_CLASSES:
            raise MalformedLineError(lineno, f"unknown tissue class {tissue!r}")
        if abnorm not in ABNORMALITY_CLASSES:
            raise MalformedLineError(lineno, f"unknown abnormality {abnorm!r}")
        if abnorm == "NORM":
            if len(tokens) != 3:
                raise MalformedLineError(lineno, "NORM lines carry no further fields")
            records.append(MiasRecord(ref, tissue, abnorm))
            continue
        if len(tokens) == 3:
            records.append(MiasRecord(ref, tissue, abnorm))
            continue
        severity = tokens[3]
        if severity not in SEVERITY_CLASSES:
            raise MalformedLineError(lineno, f"unknown severity {severity!r}")
        if len(tokens) == 4:
            records.append(MiasRecord(ref, tissue, abnorm, severity))
            continue
        if len(tokens) != 7:
            raise MalformedLineError(lineno, f"expected 3, 4, or 7 fields, got {len(tokens)}")
        try:
            x, y, r = int(tokens[4]), int(tokens[5]), int(tokens[6])
        except ValueError:
            raise MalformedLineError(lineno, "geometry fields must be integers") from None
        if x < 0 or y < 0:
            raise MalformedLineError(lineno, "negative center coordinates")
        if r <= 0:
            raise MalformedLineError(lineno, f"radius must be positive, got {r}")
        records.append(MiasRecord(ref, tissue, abnorm, severity, x, y, r))
    return records


def mias_to_image_y(y_annot: int, image_height: int) -> int:
    """Convert a bottom-left-origin annotation row to a top-left-origin row."""
    return image_height - 1 - y_annot


# ---------------------------------------------------------------------------
# ROI extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoiSpec:
    """Square crop request around a mass center, in image (top-left) coords."""

    center_x: int
    center_y: int
    radius: int
    margin_factor: float = 1.5

    @classmethod
    def from_mias(cls, record: MiasRecord, image_height: int,
                  margin_factor: float = 1.5) -> "RoiSpec":
        """Build a spec from an annotation record, flipping the y origin."""
        if not record.has_geometry:
            raise ValueError(f"record {record.ref_id} has no circle geometry")
        return cls(record.center_x, mias_to_image_y(record.center_y, image_height),
                   record.radius, margin_factor)


@dataclass(frozen=True)
class RoiCrop:
    """A crop plus its offset, so masks map back to full-image coordinates."""

    image: np.ndarray
    x0: int
    y0: int

    @property
    def width(self) -> int:
        return self.image.shape[1]

    @property
    def height(self) -> int:
        return self.image.shape[0]


def extract_roi(img, roi: RoiSpec) -> RoiCrop:
    """Crop the square of side ``2 * radius * margin_factor`` around the center,
    clamped to the image bounds."""
    a = as_gray_image(img)
    if roi.radius <= 0:
        raise ValueError(f"radius must be positive, got {roi.radius}")
    if roi.margin_factor < 1.0:
        raise ValueError(f"margin_factor must be >= 1, got {roi.margin_factor}")
    h, w = a.shape
    if not (0 <= roi.center_x < w and 0 <= roi.center_y < h):
        raise CenterOutOfBoundsError(
            f"center ({roi.center_x}, {roi.center_y}) outside {w}x{h} image")
    half = int(np.floor(roi.radius * roi.margin_factor + 0.5))
    x0 = max(0, roi.center_x - half)
    x1 = min(w, roi.center_x + half)
    y0 = max(0, roi.center_y - half)
    y1 = min(h, roi.center_y + half)
    return RoiCrop(a[y0:y1, x0:x1].copy(), x0, y0)
