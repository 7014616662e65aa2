"""Deterministic baseline sequential JFIF encoder with fixed standard tables.

Hand-rolled so the compression-ratio metric is bit-reproducible: system
codecs differ in subsampling defaults, Huffman optimization and DCT
rounding, which would make encoded sizes platform-dependent. The output is
ISO/IEC 10918-1 baseline sequential with a JFIF 1.01 header, the Annex K
quantization and Huffman tables (scaled by the usual quality formula), no
restart markers, and byte-identical output for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pixel import check_rgb

SUBSAMPLING_MODES = ("4:4:4", "4:2:0")

# ISO/IEC 10918-1 Annex K.1 base quantization tables (natural order).
BASE_LUMA_QUANT = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)

BASE_CHROMA_QUANT = np.array(
    [
        [17, 18, 24, 47, 99, 99, 99, 99],
        [18, 21, 26, 66, 99, 99, 99, 99],
        [24, 26, 56, 99, 99, 99, 99, 99],
        [47, 66, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
    ],
    dtype=np.int64,
)

# Zigzag scan: position k in the scan -> row-major coefficient index.
ZIGZAG = np.array(
    [
        0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5,
        12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28,
        35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
        58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
    ],
    dtype=np.int64,
)

# Annex K.3 Huffman table specifications: (code counts per length 1..16, symbols).
_DC_LUMA_SPEC = (
    (0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0),
    tuple(range(12)),
)
_DC_CHROMA_SPEC = (
    (0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0),
    tuple(range(12)),
)
_AC_LUMA_SPEC = (
    (0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D),
    (
        0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
        0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08, 0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
        0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
        0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
        0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
        0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
        0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
        0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
        0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
        0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
        0xF9, 0xFA,
    ),
)
_AC_CHROMA_SPEC = (
    (0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77),
    (
        0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71,
        0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xA1, 0xB1, 0xC1, 0x09, 0x23, 0x33, 0x52, 0xF0,
        0x15, 0x62, 0x72, 0xD1, 0x0A, 0x16, 0x24, 0x34, 0xE1, 0x25, 0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26,
        0x27, 0x28, 0x29, 0x2A, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48,
        0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68,
        0x69, 0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
        0x88, 0x89, 0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5,
        0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3,
        0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA,
        0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
        0xF9, 0xFA,
    ),
)


def _build_codes(spec) -> dict[int, tuple[int, int]]:
    """Annex C code assignment: symbol -> (code, bit length)."""
    counts, symbols = spec
    codes: dict[int, tuple[int, int]] = {}
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(counts[length - 1]):
            codes[symbols[k]] = (code, length)
            code += 1
            k += 1
        code <<= 1
    return codes


_DC_LUMA_CODES = _build_codes(_DC_LUMA_SPEC)
_DC_CHROMA_CODES = _build_codes(_DC_CHROMA_SPEC)
_AC_LUMA_CODES = _build_codes(_AC_LUMA_SPEC)
_AC_CHROMA_CODES = _build_codes(_AC_CHROMA_SPEC)

# Orthonormal 1-D DCT-II basis; the 2-D block transform is C @ block @ C.T.
_DCT_BASIS = np.array(
    [
        [
            math.sqrt((1.0 if u == 0 else 2.0) / 8.0) * math.cos((2 * x + 1) * u * math.pi / 16.0)
            for x in range(8)
        ]
        for u in range(8)
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class JpegSettings:
    """Encoder knobs: integer quality 1-100 and chroma subsampling mode."""

    quality: int = 95
    subsampling: str = "4:4:4"

    def __post_init__(self):
        if not 1 <= self.quality <= 100:
            raise ValueError(f"quality must be in [1, 100], got {self.quality}")
        if self.subsampling not in SUBSAMPLING_MODES:
            raise ValueError(f"subsampling must be one of {SUBSAMPLING_MODES}, got {self.subsampling!r}")


@dataclass(frozen=True)
class QuantTables:
    luma: np.ndarray
    chroma: np.ndarray

    def __post_init__(self):
        for name in ("luma", "chroma"):
            t = np.asarray(getattr(self, name))
            if t.shape != (8, 8):
                raise ValueError(f"{name} table must be 8x8, got {t.shape}")
            if t.min() < 1 or t.max() > 255:
                raise ValueError(f"{name} table entries must be in [1, 255]")


def scale_quant_tables(quality: int) -> QuantTables:
    """Scale the Annex K base tables by the conventional quality curve.

    scale = 5000/quality below 50, else 200 - 2*quality; each entry becomes
    clamp(floor((base * scale + 50) / 100), 1, 255). Quality 50 reproduces
    the base tables; quality 100 degenerates to all-ones.
    """
    if not 1 <= int(quality) <= 100:
        raise ValueError(f"quality must be in [1, 100], got {quality}")
    quality = int(quality)
    scale = 5000 // quality if quality < 50 else 200 - 2 * quality

    def apply(base: np.ndarray) -> np.ndarray:
        return np.clip((base * scale + 50) // 100, 1, 255).astype(np.int64)

    return QuantTables(luma=apply(BASE_LUMA_QUANT), chroma=apply(BASE_CHROMA_QUANT))


class _BitWriter:
    """MSB-first bit packer with 0xFF byte stuffing."""

    def __init__(self):
        self.out = bytearray()
        self.acc = 0
        self.nbits = 0

    def put(self, code: int, length: int):
        self.acc = (self.acc << length) | code
        self.nbits += length
        while self.nbits >= 8:
            self.nbits -= 8
            byte = (self.acc >> self.nbits) & 0xFF
            self.out.append(byte)
            if byte == 0xFF:
                self.out.append(0x00)
        self.acc &= (1 << self.nbits) - 1

    def flush(self):
        if self.nbits:
            # Pad the final partial byte with 1-bits.
            pad = 8 - self.nbits
            self.put((1 << pad) - 1, pad)


def _rgb_to_ycbcr(img: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """BT.601 full-range conversion, kept in float64 until the DCT."""
    r = img[:, :, 0].astype(np.float64)
    g = img[:, :, 1].astype(np.float64)
    b = img[:, :, 2].astype(np.float64)
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    return (
        np.clip(y, 0.0, 255.0),
        np.clip(cb, 0.0, 255.0),
        np.clip(cr, 0.0, 255.0),
    )


def _pad_to(plane: np.ndarray, multiple: int) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return plane
    return np.pad(plane, ((0, ph), (0, pw)), mode="edge")


def _quantized_zigzag_blocks(plane: np.ndarray, qtable: np.ndarray) -> tuple[np.ndarray, int, int]:
    """Split a padded plane into 8x8 blocks; DCT, quantize, zigzag.

    Returns (blocks, rows, cols) with blocks of shape (rows*cols, 64) in
    raster block order. The DCT uses fixed-order einsum contractions so the
    arithmetic never routes through a BLAS with platform-dependent
    summation order.
    """
    h, w = plane.shape
    rows, cols = h // 8, w // 8
    blocks = plane.reshape(rows, 8, cols, 8).swapaxes(1, 2).reshape(-1, 8, 8) - 128.0
    t1 = np.einsum("ux,nxy->nuy", _DCT_BASIS, blocks, optimize=False)
    coeffs = np.einsum("nuy,vy->nuv", t1, _DCT_BASIS, optimize=False)
    scaled = coeffs / qtable[None, :, :].astype(np.float64)
    quantized = (np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)).astype(np.int32)
    return quantized.reshape(-1, 64)[:, ZIGZAG], rows, cols


def _amplitude_bits(value: int) -> tuple[int, int]:
    """(category size, amplitude code) per the baseline magnitude coding."""
    size = abs(value).bit_length()
    if value >= 0:
        return size, value
    return size, value + (1 << size) - 1


def _encode_block(writer: _BitWriter, zz: np.ndarray, prev_dc: int, dc_codes, ac_codes) -> int:
    dc = int(zz[0])
    size, amp = _amplitude_bits(dc - prev_dc)
    code, length = dc_codes[size]
    writer.put(code, length)
    if size:
        writer.put(amp, size)

    ac = zz[1:]
    nonzero = np.nonzero(ac)[0]
    last = int(nonzero[-1]) + 1 if nonzero.size else 0
    run = 0
    for k in range(last):
        v = int(ac[k])
        if v == 0:
            run += 1
            continue
        while run > 15:
            code, length = ac_codes[0xF0]
            writer.put(code, length)
            run -= 16
        size, amp = _amplitude_bits(v)
        code, length = ac_codes[(run << 4) | size]
        writer.put(code, length)
        writer.put(amp, size)
        run = 0
    if last < 63:
        code, length = ac_codes[0x00]
        writer.put(code, length)
    return dc


def _segment(marker: int, payload: bytes) -> bytes:
    return bytes([0xFF, marker]) + (len(payload) + 2).to_bytes(2, "big") + payload


def _headers(width: int, height: int, tables: QuantTables, settings: JpegSettings) -> bytes:
    out = bytearray()
    out += b"\xff\xd8"  # SOI
    out += _segment(0xE0, b"JFIF\x00" + b"\x01\x01" + b"\x00" + b"\x00\x01\x00\x01" + b"\x00\x00")
    luma_zz = bytes(int(v) for v in tables.luma.reshape(64)[ZIGZAG])
    chroma_zz = bytes(int(v) for v in tables.chroma.reshape(64)[ZIGZAG])
    out += _segment(0xDB, b"\x00" + luma_zz + b"\x01" + chroma_zz)

    luma_sampling = 0x11 if settings.subsampling == "4:4:4" else 0x22
    sof = bytearray()
    sof += b"\x08" + height.to_bytes(2, "big") + width.to_bytes(2, "big") + b"\x03"
    sof += bytes([1, luma_sampling, 0])
    sof += bytes([2, 0x11, 1])
    sof += bytes([3, 0x11, 1])
    out += _segment(0xC0, bytes(sof))

    for table_class, table_id, (counts, symbols) in (
        (0, 0, _DC_LUMA_SPEC),
        (1, 0, _AC_LUMA_SPEC),
        (0, 1, _DC_CHROMA_SPEC),
        (1, 1, _AC_CHROMA_SPEC),
    ):
        payload = bytes([(table_class << 4) | table_id]) + bytes(counts) + bytes(symbols)
        out += _segment(0xC4, payload)

    sos = bytes([3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0])
    out += _segment(0xDA, sos)
    return bytes(out)


def encode(img: np.ndarray, settings: JpegSettings = JpegSettings()) -> bytes:
    """Encode an RGB image as a baseline sequential JFIF byte stream."""
    img = check_rgb(img)
    height, width = img.shape[0], img.shape[1]
    tables = scale_quant_tables(settings.quality)
    y, cb, cr = _rgb_to_ycbcr(img)

    writer = _BitWriter()
    if settings.subsampling == "4:4:4":
        zz = [
            _quantized_zigzag_blocks(_pad_to(plane, 8), table)[0]
            for plane, table in ((y, tables.luma), (cb, tables.chroma), (cr, tables.chroma))
        ]
        codes = [
            (_DC_LUMA_CODES, _AC_LUMA_CODES),
            (_DC_CHROMA_CODES, _AC_CHROMA_CODES),
            (_DC_CHROMA_CODES, _AC_CHROMA_CODES),
        ]
        prev = [0, 0, 0]
        for i in range(zz[0].shape[0]):
            for comp in range(3):
                prev[comp] = _encode_block(writer, zz[comp][i], prev[comp], *codes[comp])
    else:
        y_pad = _pad_to(y, 16)
        pad_h, pad_w = y_pad.shape[0] - cb.shape[0], y_pad.shape[1] - cb.shape[1]
        cb_pad = np.pad(cb, ((0, pad_h), (0, pad_w)), mode="edge")
        cr_pad = np.pad(cr, ((0, pad_h), (0, pad_w)), mode="edge")
        # Chroma is decimated by averaging each 2x2 cell of the padded grid.
        half_h, half_w = y_pad.shape[0] // 2, y_pad.shape[1] // 2
        cb_sub = cb_pad.reshape(half_h, 2, half_w, 2).mean(axis=(1, 3))
        cr_sub = cr_pad.reshape(half_h, 2, half_w, 2).mean(axis=(1, 3))

        zz_y, rows_y, cols_y = _quantized_zigzag_blocks(y_pad, tables.luma)
        zz_cb, rows_c, cols_c = _quantized_zigzag_blocks(cb_sub, tables.chroma)
        zz_cr, _, _ = _quantized_zigzag_blocks(cr_sub, tables.chroma)
        prev = [0, 0, 0]
        for mr in range(rows_y // 2):
            for mc in range(cols_y // 2):
                for dy, dx in ((0, 0), (0, 1), (1, 0), (1, 1)):
                    idx = (2 * mr + dy) * cols_y + (2 * mc + dx)
                    prev[0] = _encode_block(writer, zz_y[idx], prev[0], _DC_LUMA_CODES, _AC_LUMA_CODES)
                cidx = mr * cols_c + mc
                prev[1] = _encode_block(writer, zz_cb[cidx], prev[1], _DC_CHROMA_CODES, _AC_CHROMA_CODES)
                prev[2] = _encode_block(writer, zz_cr[cidx], prev[2], _DC_CHROMA_CODES, _AC_CHROMA_CODES)

    writer.flush()
    return _headers(width, height, tables, settings) + bytes(writer.out) + b"\xff\xd9"


def compression_ratio(img: np.ndarray, settings: JpegSettings = JpegSettings()) -> float:
    """Raw in-memory size (3 * H * W bytes) over the encoded byte length.

    Lower means the image carries more incompressible fine detail.
    """
    img = check_rgb(img)
    raw_size = 3 * img.shape[0] * img.shape[1]
    return raw_size / len(encode(img, settings))
