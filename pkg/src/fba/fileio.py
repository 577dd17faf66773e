"""Bit-exact file formats: PFM float maps, FBAF multi-channel floats, PNGs.

PFM carries one float32 channel ("Pf", dims line, negative scale marking
little-endian, rows stored bottom-up). FBAF is the multi-channel container
for everything PFM cannot carry (6-channel trimap encodings, 3-channel
float layers): a 17-byte header (magic "FBAF", version byte, width, height,
channels as little-endian u32) followed by the planar row-major top-down
float32 payload. Both formats round-trip float32 data bitwise.

PNG is used for integer images: 8-bit RGB for composites, 8- or 16-bit
grayscale for mattes, 0/128/255 trimaps (see the trimap module).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .core import ColorMap, FileFormatError, PixelMap, PredictionSet

FBAF_MAGIC = b"FBAF"
FBAF_VERSION = 1

ALPHA_FILE = "alpha.pfm"
FG_FILE = "fg.fbaf"
BG_FILE = "bg.fbaf"


def write_pfm(path, img: PixelMap) -> None:
    """Grayscale PFM, little-endian, rows bottom-up."""
    data = img.data.astype("<f4")
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{img.width} {img.height}\n-1.0\n".encode("ascii"))
        fh.write(np.flipud(data).tobytes())


def read_pfm(path) -> PixelMap:
    with open(path, "rb") as fh:
        magic = _read_token(fh)
        if magic == b"PF":
            raise FileFormatError("color PFM not supported here; expected grayscale 'Pf'")
        if magic != b"Pf":
            raise FileFormatError(f"not a PFM file (magic {magic!r})")
        try:
            width = int(_read_token(fh))
            height = int(_read_token(fh))
            scale = float(_read_token(fh))
        except ValueError as exc:
            raise FileFormatError(f"malformed PFM header: {exc}") from exc
        if width <= 0 or height <= 0:
            raise FileFormatError(f"bad PFM dimensions {width}x{height}")
        count = width * height
        payload = fh.read(4 * count)
        if len(payload) != 4 * count:
            raise FileFormatError(
                f"PFM payload truncated: expected {4 * count} bytes, got {len(payload)}"
            )
        dtype = "<f4" if scale < 0 else ">f4"
        rows = np.frombuffer(payload, dtype=dtype).reshape(height, width)
        return PixelMap(np.flipud(rows).astype(np.float32))


def _read_token(fh) -> bytes:
    """Whitespace-delimited header token."""
    token = b""
    while True:
        ch = fh.read(1)
        if not ch:
            raise FileFormatError("unexpected end of PFM header")
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def write_fbaf(path, data: np.ndarray) -> None:
    """(channels, height, width) float32 array, planar top-down."""
    arr = np.ascontiguousarray(data, dtype="<f4")
    if arr.ndim != 3:
        raise FileFormatError(f"FBAF payload must be (c, h, w), got shape {arr.shape}")
    c, h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(FBAF_MAGIC)
        fh.write(struct.pack("<BIII", FBAF_VERSION, w, h, c))
        fh.write(arr.tobytes())


def read_fbaf(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(17)
        if len(header) != 17 or header[:4] != FBAF_MAGIC:
            raise FileFormatError(f"not an FBAF file: {path}")
        version, w, h, c = struct.unpack("<BIII", header[4:])
        if version != FBAF_VERSION:
            raise FileFormatError(f"unsupported FBAF version {version}")
        if w == 0 or h == 0 or c == 0:
            raise FileFormatError(f"bad FBAF dimensions {c}x{h}x{w}")
        count = c * h * w
        payload = fh.read(4 * count + 1)
        if len(payload) != 4 * count:
            raise FileFormatError(
                f"FBAF payload length mismatch: header says {4 * count} bytes, "
                f"got {len(payload)}"
            )
    return np.frombuffer(payload, dtype="<f4").reshape(c, h, w).astype(np.float32)


def read_color_fbaf(path) -> ColorMap:
    arr = read_fbaf(path)
    if arr.shape[0] != 3:
        raise FileFormatError(f"expected 3 channels in {path}, got {arr.shape[0]}")
    return ColorMap(arr)


def write_image_png(path, img: ColorMap) -> None:
    """8-bit RGB with round-to-nearest quantization."""
    arr = np.clip(img.to_interleaved().astype(np.float64), 0.0, 1.0)
    Image.fromarray((arr * 255.0).round().astype(np.uint8), mode="RGB").save(path, format="PNG")


def read_image_png(path) -> ColorMap:
    try:
        img = Image.open(path)
    except OSError as exc:
        raise FileFormatError(f"cannot open image: {exc}") from exc
    with img:
        if img.mode != "RGB":
            raise FileFormatError(f"expected an 8-bit RGB PNG, got mode {img.mode!r}")
        arr = np.asarray(img, dtype=np.float32) / 255.0
    return ColorMap.from_interleaved(arr)


def write_alpha_png(path, alpha: PixelMap, bits: int = 8) -> None:
    arr = np.clip(alpha.data.astype(np.float64), 0.0, 1.0)
    if bits == 8:
        Image.fromarray((arr * 255.0).round().astype(np.uint8), mode="L").save(path, format="PNG")
    elif bits == 16:
        Image.fromarray((arr * 65535.0).round().astype(np.uint16)).save(path, format="PNG")
    else:
        raise FileFormatError(f"alpha PNG depth must be 8 or 16, got {bits}")


def read_alpha_png(path) -> PixelMap:
    try:
        img = Image.open(path)
    except OSError as exc:
        raise FileFormatError(f"cannot open matte image: {exc}") from exc
    with img:
        if img.mode == "L":
            return PixelMap(np.asarray(img, dtype=np.float32) / 255.0)
        if img.mode in ("I", "I;16"):
            return PixelMap(np.asarray(img, dtype=np.float32) / 65535.0)
        raise FileFormatError(f"expected a grayscale PNG matte, got mode {img.mode!r}")


def read_alpha_map(path) -> PixelMap:
    """Dispatch on extension: .pfm float map or grayscale .png."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pfm":
        return read_pfm(path)
    if suffix == ".png":
        return read_alpha_png(path)
    raise FileFormatError(f"matte files must be .pfm or .png, got {path}")


def read_color_map(path) -> ColorMap:
    """Dispatch on extension: 3-channel .fbaf or 8-bit RGB .png."""
    suffix = Path(path).suffix.lower()
    if suffix == ".fbaf":
        return read_color_fbaf(path)
    if suffix == ".png":
        return read_image_png(path)
    raise FileFormatError(f"color files must be .fbaf or .png, got {path}")


def write_color_map(path, img: ColorMap) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".fbaf":
        write_fbaf(path, img.data)
    elif suffix == ".png":
        write_image_png(path, img)
    else:
        raise FileFormatError(f"color files must be .fbaf or .png, got {path}")


def load_prediction_dir(directory) -> PredictionSet:
    """alpha.pfm + fg.fbaf + bg.fbaf in one directory."""
    d = Path(directory)
    for name in (ALPHA_FILE, FG_FILE, BG_FILE):
        if not (d / name).is_file():
            raise FileFormatError(f"prediction directory {d} is missing {name}")
    return PredictionSet(
        alpha=read_pfm(d / ALPHA_FILE),
        fg=read_color_fbaf(d / FG_FILE),
        bg=read_color_fbaf(d / BG_FILE),
    )


def save_prediction_dir(directory, pred: PredictionSet, force: bool = False) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    targets = {ALPHA_FILE: None, FG_FILE: None, BG_FILE: None}
    if not force:
        for name in targets:
            if (d / name).exists():
                raise FileExistsError(f"{d / name} exists; pass force to overwrite")
    write_pfm(d / ALPHA_FILE, pred.alpha)
    write_fbaf(d / FG_FILE, pred.fg.data)
    write_fbaf(d / BG_FILE, pred.bg.data)


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
