"""Grayscale image I/O (binary PGM) and quality metrics.

Images are 2D float64 arrays of shape (height, width), row-major, with
pixel values nominally in [0, 255].  Intermediate solver iterates may leave
that range; quantization back to 8 bit happens only when a file is written.
"""

import numpy as np

PEAK = 255.0
PSNR_SENTINEL = 99.0  # reported when MSE is exactly zero, keeps traces finite


class PgmError(ValueError):
    """Raised for malformed or unsupported PGM files."""


def load_pgm(path):
    """Read a binary 8-bit grayscale PGM (magic "P5", maxval 255).

    Parameters
    ----------
    path : str or Path
        File to read.

    Returns
    -------
    ndarray
        float64 image of shape (height, width), values in [0, 255].
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"P2":
        raise PgmError("unsupported PGM variant (ASCII 'P2'; only binary 'P5' is read)")
    if raw[:2] != b"P5":
        raise PgmError("malformed header: missing 'P5' magic")
    # Header: three whitespace-separated tokens (width, height, maxval),
    # then exactly one whitespace byte before the payload.
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos] in b" \t\r\n":
            pos += 1
        start = pos
        while pos < len(raw) and raw[pos] not in b" \t\r\n":
            pos += 1
        if start == pos:
            raise PgmError("malformed header: truncated before payload")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace separating maxval from payload
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise PgmError(f"malformed header: non-numeric field {exc}") from None
    if width <= 0 or height <= 0:
        raise PgmError("malformed header: nonpositive dimensions")
    if maxval != 255:
        raise PgmError(f"maxval must be 255, got {maxval}")
    payload = raw[pos : pos + width * height]
    if len(payload) < width * height:
        raise PgmError(
            f"truncated payload: expected {width * height} bytes, got {len(payload)}"
        )
    data = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    return data.reshape(height, width)


def save_pgm(image, path):
    """Write a binary P5 PGM with maxval 255.

    Pixels are clamped to [0, 255] and rounded half-up, so writing and
    re-reading an integer-valued in-range image is lossless.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {image.shape}")
    height, width = image.shape
    quantized = np.floor(np.clip(image, 0.0, PEAK) + 0.5).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (width, height))
        fh.write(quantized.tobytes())


def psnr(reference, test):
    """Peak signal-to-noise ratio in dB, 10*log10(255^2 / MSE).

    Returns the sentinel 99.0 dB when the images are identical (MSE = 0).
    """
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if reference.shape != test.shape:
        raise ValueError(
            f"dimension mismatch: {reference.shape} vs {test.shape}"
        )
    mse = np.mean((reference - test) ** 2)
    if mse == 0.0:
        return PSNR_SENTINEL
    return float(10.0 * np.log10(PEAK * PEAK / mse))
