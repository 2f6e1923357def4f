"""Volume I/O: a single-file NIfTI-1 subset and raw arrays with a text header."""
from __future__ import annotations

import gzip
import os
import struct

import numpy as np

from ..errors import (DataError, DimensionMismatchError, TruncatedFileError,
                      UnsupportedFormatError)
from ..volume import GridGeometry, ImageVolume, RoiMask

NIFTI_DTYPES = {2: np.dtype("<u1"), 4: np.dtype("<i2"), 16: np.dtype("<f4")}
NIFTI_CODES = {np.dtype("uint8"): 2, np.dtype("int16"): 4, np.dtype("float32"): 16}
RAW_DTYPES = {"uint8": "<u1", "int16": "<i2", "float32": "<f4", "float64": "<f8"}


def _read_bytes(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise TruncatedFileError(f"{path}: corrupt gzip stream ({exc})") from None
    return raw


def _quaternion_matrix(b, c, d):
    a = np.sqrt(max(0.0, 1.0 - (b * b + c * c + d * d)))
    return np.array([
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
    ])


def _axis_aligned(M, path):
    off = M - np.diag(np.diag(M))
    if np.any(np.abs(off) > 1e-6 * max(1.0, np.abs(M).max())) or np.any(np.abs(np.diag(M)) < 1e-12):
        raise UnsupportedFormatError(f"{path}: only axis-aligned orientations are supported")
    return np.diag(M)


def read_nifti(path) -> ImageVolume:
    raw = _read_bytes(path)
    if len(raw) < 348:
        raise TruncatedFileError(f"{path}: file shorter than a NIfTI-1 header")
    if struct.unpack("<i", raw[:4])[0] != 348:
        if struct.unpack(">i", raw[:4])[0] == 348:
            raise UnsupportedFormatError(f"{path}: big-endian NIfTI is not supported")
        raise UnsupportedFormatError(f"{path}: not a NIfTI-1 file")
    if raw[344:347] != b"n+1":
        raise UnsupportedFormatError(f"{path}: only single-file NIfTI-1 ('n+1') is supported")
    dim = struct.unpack("<8h", raw[40:56])
    datatype, = struct.unpack("<h", raw[70:72])
    pixdim = struct.unpack("<8f", raw[76:108])
    vox_offset, scl_slope, scl_inter = struct.unpack("<3f", raw[108:120])
    qform_code, sform_code = struct.unpack("<2h", raw[252:256])
    qb, qc, qd, qx, qy, qz = struct.unpack("<6f", raw[256:280])
    srow = np.array(struct.unpack("<12f", raw[280:328]), dtype=float).reshape(3, 4)

    nd = dim[0]
    if not 2 <= nd <= 7 or any(d > 1 for d in dim[4:nd + 1]):
        raise UnsupportedFormatError(f"{path}: only 2D or 3D volumes are supported (dim={dim[:nd + 1]})")
    nx, ny = dim[1], dim[2]
    nz = dim[3] if nd >= 3 else 1
    if min(nx, ny, nz) < 1:
        raise DataError(f"{path}: invalid dimensions {dim[1:4]}")
    if datatype not in NIFTI_DTYPES:
        raise UnsupportedFormatError(f"{path}: unsupported NIfTI datatype code {datatype}")
    dt = NIFTI_DTYPES[datatype]
    start = int(vox_offset) if vox_offset >= 348 else 352
    n = nx * ny * nz
    need = start + n * dt.itemsize
    if len(raw) < need:
        raise TruncatedFileError(f"{path}: payload has {len(raw) - start} bytes, expected {n * dt.itemsize}")
    data = np.frombuffer(raw, dtype=dt, count=n, offset=start).reshape(nz, ny, nx)

    spacing = np.array([abs(p) if p else 1.0 for p in pixdim[1:4]])
    origin = np.zeros(3)
    if sform_code > 0:
        diag = _axis_aligned(srow[:, :3], path)
        origin = srow[:, 3].copy()
    elif qform_code > 0:
        qfac = -1.0 if pixdim[0] < 0 else 1.0
        R = _quaternion_matrix(qb, qc, qd) @ np.diag([pixdim[1], pixdim[2], pixdim[3] * qfac])
        diag = _axis_aligned(R, path)
        origin = np.array([qx, qy, qz], dtype=float)
    else:
        diag = spacing
    # flip reversed axes so spacing is positive; world positions are unchanged
    vals = data.astype(np.float64)
    for ax, step in enumerate(diag):
        if step < 0:
            vals = np.flip(vals, axis=2 - ax)
            origin[ax] += step * (vals.shape[2 - ax] - 1)
    spacing = np.abs(diag)

    if scl_slope not in (0.0,) and np.isfinite(scl_slope) and not (scl_slope == 1 and scl_inter == 0):
        vals = vals * scl_slope + (scl_inter if np.isfinite(scl_inter) else 0.0)
        if dt.kind in "iu" and float(scl_slope).is_integer() and float(scl_inter).is_integer():
            vals = np.round(vals)
    geo = GridGeometry((nx, ny, nz), tuple(spacing), tuple(origin))
    return ImageVolume(geo, np.ascontiguousarray(vals))


def write_nifti(path, vol, dtype="float32"):
    """Write an ImageVolume or RoiMask as single-file NIfTI-1 (gzip when the name ends in .gz)."""
    dt = np.dtype(dtype)
    if dt not in NIFTI_CODES:
        raise UnsupportedFormatError(f"cannot write NIfTI datatype {dtype}")
    g = vol.geometry
    data = vol.data if isinstance(vol, ImageVolume) else vol.labels
    arr = np.ascontiguousarray(data, dtype=dt.newbyteorder("<"))
    hdr = bytearray(352)
    struct.pack_into("<i", hdr, 0, 348)
    struct.pack_into("<8h", hdr, 40, 3, *g.dims, 1, 1, 1, 1)
    struct.pack_into("<2h", hdr, 70, NIFTI_CODES[dt], dt.itemsize * 8)
    struct.pack_into("<8f", hdr, 76, 1.0, *g.spacing, 0, 0, 0, 0)
    struct.pack_into("<3f", hdr, 108, 352.0, 1.0, 0.0)
    struct.pack_into("<b", hdr, 123, 2)       # xyzt_units: mm
    struct.pack_into("<2h", hdr, 252, 0, 1)
    srow = np.zeros((3, 4))
    srow[:, :3] = np.diag(g.spacing)
    srow[:, 3] = g.origin
    struct.pack_into("<12f", hdr, 280, *srow.ravel())
    hdr[344:348] = b"n+1\x00"
    payload = bytes(hdr) + arr.tobytes()
    opener = gzip.open if str(path).endswith(".gz") else open
    try:
        with opener(path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from None


# ------------------------------------------------------------ raw + header

def read_raw(path) -> ImageVolume:
    """Text header (``key = value``: dims, spacing, origin, dtype, data_file) plus raw little-endian data."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read header {path}: {exc}") from None
    h = {}
    for ln in lines:
        ln = ln.split("#", 1)[0].strip()
        if ln:
            if "=" not in ln:
                raise UnsupportedFormatError(f"{path}: bad header line {ln!r}")
            k, v = ln.split("=", 1)
            h[k.strip().lower()] = v.strip()
    for k in ("dims", "dtype", "data_file"):
        if k not in h:
            raise UnsupportedFormatError(f"{path}: header lacks '{k}'")
    try:
        dims = tuple(int(t) for t in h["dims"].split())
        spacing = tuple(float(t) for t in h.get("spacing", "1 1 1").split())
        origin = tuple(float(t) for t in h.get("origin", "0 0 0").split())
    except ValueError:
        raise UnsupportedFormatError(f"{path}: non-numeric geometry in header") from None
    if len(dims) == 2:
        dims = dims + (1,)
    if len(dims) != 3 or len(spacing) != 3 or len(origin) != 3:
        raise UnsupportedFormatError(f"{path}: dims, spacing and origin need 3 values")
    if h["dtype"] not in RAW_DTYPES:
        raise UnsupportedFormatError(f"{path}: unsupported dtype {h['dtype']}")
    dt = np.dtype(RAW_DTYPES[h["dtype"]])
    data_path = os.path.join(os.path.dirname(os.path.abspath(path)), h["data_file"])
    raw = _read_bytes(data_path)
    n = int(np.prod(dims))
    if len(raw) < n * dt.itemsize:
        raise TruncatedFileError(f"{data_path}: {len(raw)} bytes, expected {n * dt.itemsize}")
    if len(raw) > n * dt.itemsize:
        raise DimensionMismatchError(f"{data_path}: {len(raw)} bytes exceed dims {dims}")
    arr = np.frombuffer(raw, dtype=dt).reshape(dims[::-1]).astype(np.float64)
    return ImageVolume(GridGeometry(dims, spacing, origin), arr)


def write_raw(path, vol, dtype="float32"):
    if dtype not in RAW_DTYPES:
        raise UnsupportedFormatError(f"unsupported dtype {dtype}")
    g = vol.geometry
    data = vol.data if isinstance(vol, ImageVolume) else vol.labels
    base = os.path.splitext(os.path.basename(path))[0] + ".raw"
    data_path = os.path.join(os.path.dirname(os.path.abspath(path)), base)
    try:
        with open(data_path, "wb") as fh:
            fh.write(np.ascontiguousarray(data, dtype=RAW_DTYPES[dtype]).tobytes())
        with open(path, "w") as fh:
            fh.write(f"dims = {' '.join(str(d) for d in g.dims)}\n")
            fh.write(f"spacing = {' '.join(repr(s) for s in g.spacing)}\n")
            fh.write(f"origin = {' '.join(repr(o) for o in g.origin)}\n")
            fh.write(f"dtype = {dtype}\ndata_file = {base}\n")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from None


# ---------------------------------------------------------------- dispatch

def detect_format(path):
    p = str(path).lower()
    if p.endswith((".nii", ".nii.gz")):
        return "nifti1"
    if p.endswith((".rhdr", ".hdr.txt", ".txt")):
        return "raw"
    raise UnsupportedFormatError(f"cannot tell the format of {path} (use .nii, .nii.gz or .rhdr)")


def load_volume(path, fmt=None) -> ImageVolume:
    fmt = fmt or detect_format(path)
    if fmt == "nifti1":
        return read_nifti(path)
    if fmt == "raw":
        return read_raw(path)
    raise UnsupportedFormatError(f"unknown volume format {fmt!r}")


def load_mask(path, geometry: GridGeometry = None, fmt=None) -> RoiMask:
    """Mask volume; any non-zero voxel is in the ROI. Geometry must match the image if given."""
    vol = load_volume(path, fmt)
    if geometry is not None:
        if tuple(vol.geometry.dims) != tuple(geometry.dims):
            raise DimensionMismatchError(
                f"{path}: mask dims {vol.geometry.dims} differ from image dims {geometry.dims}")
        if not vol.geometry.same_as(geometry):
            raise DimensionMismatchError(f"{path}: mask spacing/origin differ from the image")
    return RoiMask(vol.geometry, vol.data != 0)


def save_volume(path, vol, dtype="float32", fmt=None):
    fmt = fmt or detect_format(path)
    if fmt == "nifti1":
        return write_nifti(path, vol, dtype)
    return write_raw(path, vol, dtype)
