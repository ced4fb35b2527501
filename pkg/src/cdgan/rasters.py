"""Flat binary raster format with a JSON sidecar.

The portable format is band-sequential (all of band 0, then band 1, ...),
row-major within a band, little-endian, with a sidecar ``<path>.json``
holding ``{"width", "height", "bands", "dtype", "order"}`` plus optional
provenance. Two dtypes are supported: ``f32`` for imagery and score maps,
``u8`` for masks and change maps. TIFF import through Pillow is provided
as a convenience for externally produced imagery.
"""

import json
from pathlib import Path

import numpy as np

from .errors import BadMask, UnsupportedFormat

_DTYPES = {"f32": np.dtype("<f4"), "u8": np.dtype("u1")}


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_raster(path, array, provenance=None):
    """Write an (H, W) or (H, W, B) array in the portable format.

    uint8 arrays are stored as ``u8``, everything else as ``f32``.
    """
    arr = np.asarray(array)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise UnsupportedFormat(f"expected 2-d or 3-d array, got {arr.ndim}-d")
    dtype = "u8" if arr.dtype == np.uint8 else "f32"
    bsq = np.ascontiguousarray(np.moveaxis(arr, 2, 0).astype(_DTYPES[dtype], copy=False))
    path = Path(path)
    path.write_bytes(bsq.tobytes())
    meta = {
        "width": int(arr.shape[1]),
        "height": int(arr.shape[0]),
        "bands": int(arr.shape[2]),
        "dtype": dtype,
        "order": "bsq",
    }
    if provenance:
        meta["provenance"] = provenance
    sidecar_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path


def read_raster(path):
    """Read a portable raster back as an (H, W, B) array.

    Falls back to the TIFF reader for ``.tif``/``.tiff`` paths. Raises
    UNSUPPORTED_FORMAT on anything else.
    """
    path = Path(path)
    if path.suffix.lower() in (".tif", ".tiff"):
        return read_tiff(path)
    side = sidecar_path(path)
    if not path.exists() or not side.exists():
        raise UnsupportedFormat(f"missing raster or sidecar for {path}")
    meta = json.loads(side.read_text())
    for key in ("width", "height", "bands", "dtype", "order"):
        if key not in meta:
            raise UnsupportedFormat(f"sidecar {side} lacks '{key}'")
    if meta["order"] != "bsq":
        raise UnsupportedFormat(f"unsupported band order {meta['order']!r}")
    if meta["dtype"] not in _DTYPES:
        raise UnsupportedFormat(f"unsupported dtype {meta['dtype']!r}")
    h, w, b = int(meta["height"]), int(meta["width"]), int(meta["bands"])
    dtype = _DTYPES[meta["dtype"]]
    raw = np.frombuffer(path.read_bytes(), dtype=dtype)
    if raw.size != h * w * b:
        raise UnsupportedFormat(
            f"{path}: expected {h * w * b} values, file holds {raw.size}"
        )
    return np.moveaxis(raw.reshape(b, h, w), 0, 2).copy()


def read_sidecar(path) -> dict:
    return json.loads(sidecar_path(path).read_text())


def read_tiff(path):
    """Best-effort TIFF import via Pillow; returns (H, W, B) float32."""
    try:
        from PIL import Image

        with Image.open(path) as img:
            arr = np.asarray(img)
    except Exception as exc:
        raise UnsupportedFormat(f"cannot read {path} as TIFF: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise UnsupportedFormat(f"{path}: unsupported TIFF layout {arr.shape}")
    return arr.astype(np.float32)


def read_mask(path):
    """Read a mask raster; any nonzero pixel counts as changed.

    Returns an (H, W) uint8 array with values in {0, 1}.
    """
    arr = read_raster(path)
    if arr.shape[2] != 1:
        raise BadMask(f"mask must be single-band, got {arr.shape[2]} bands")
    return (arr[:, :, 0] != 0).astype(np.uint8)


def write_mask(path, mask, provenance=None):
    """Write a {0,1} mask as an 8-bit raster using 0/255."""
    mask = np.asarray(mask)
    return write_raster(path, (mask != 0).astype(np.uint8) * 255, provenance=provenance)


def write_png(path, array):
    """Write a grayscale preview PNG, min-max stretched to 0..255."""
    from PIL import Image

    arr = np.asarray(array, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    lo, hi = float(arr.min()), float(arr.max())
    if hi > lo:
        arr = (arr - lo) / (hi - lo)
    else:
        arr = np.zeros_like(arr)
    Image.fromarray((arr * 255.0 + 0.5).astype(np.uint8)).save(path)
    return Path(path)
