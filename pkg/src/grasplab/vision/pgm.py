"""16-bit binary PGM I/O for depth maps.

Encoding: P5, maxval 65535, one sample per pixel, big-endian as the format
requires, with 1 unit = 1 mm of depth.  Values outside [0, 65.535 m] are
clipped on write.
"""

import numpy as np

from grasplab.errors import FormatError
from grasplab.vision.depth import DepthImage

MAXVAL = 65535
MM_PER_UNIT = 1.0


def write_pgm16(path, image: DepthImage):
    """Write a depth image as a 16-bit PGM, millimeter units."""
    mm = np.rint(image.data * 1000.0 / MM_PER_UNIT)
    samples = np.clip(mm, 0, MAXVAL).astype(">u2")
    header = f"P5\n{image.width} {image.height}\n{MAXVAL}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(samples.tobytes())


def _read_tokens(data, count, path):
    """Pull ``count`` whitespace-separated header tokens, skipping # comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise FormatError("truncated PGM header", path=path)
        ch = data[pos:pos + 1]
        if ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    return tokens, pos + 1  # header ends with a single whitespace byte


def read_pgm16(path) -> DepthImage:
    """Read a binary PGM written by :func:`write_pgm16` back into meters."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise FormatError("not a binary PGM (missing P5 magic)", path=path)
    tokens, offset = _read_tokens(data[2:], 3, path)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FormatError(f"bad PGM header token: {exc}", path=path) from exc
    if width < 1 or height < 1:
        raise FormatError("PGM dimensions must be positive", path=path)
    if maxval != MAXVAL:
        raise FormatError(f"expected 16-bit PGM (maxval {MAXVAL}), got {maxval}", path=path)
    body = data[2 + offset:]
    need = width * height * 2
    if len(body) < need:
        raise FormatError(f"PGM body too short: {len(body)} < {need} bytes", path=path)
    samples = np.frombuffer(body[:need], dtype=">u2").reshape(height, width)
    return DepthImage(width, height, samples.astype(np.float64) * MM_PER_UNIT / 1000.0)
