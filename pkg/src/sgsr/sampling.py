"""Block-based Gaussian random measurement of images.

One seeded random projection matrix is shared by all 32x32 blocks.  Its rows
are orthonormalized, so the forward operator has unit spectral norm and
forward(adjoint(b)) == b; this keeps the recovery iteration stable at unit
step size.  Randomness comes from numpy's PCG64 generator (ziggurat normal
variates), which is reproducible for a fixed seed.
"""

import struct
from dataclasses import dataclass, replace

import numpy as np

BLOCK_EDGE = 32
BLOCK_LEN = BLOCK_EDGE * BLOCK_EDGE

MEAS_MAGIC = b"SGSRM1\0"
_HEADER = struct.Struct("<IIIIQd")  # width, height, block_edge, m_b, seed, ratio


class MeasurementFileError(ValueError):
    """Raised for malformed measurement files."""


@dataclass(frozen=True)
class MeasurementOperator:
    """Shared per-block projection: an (m_b, 1024) matrix with orthonormal rows."""

    width: int
    height: int
    m_b: int
    ratio: float
    seed: int
    matrix: np.ndarray

    @property
    def blocks_x(self):
        return self.width // BLOCK_EDGE

    @property
    def blocks_y(self):
        return self.height // BLOCK_EDGE

    @property
    def n_blocks(self):
        return self.blocks_x * self.blocks_y


@dataclass(frozen=True)
class MeasurementVector:
    """Per-block measurements in block-raster order, plus the sampling header."""

    width: int
    height: int
    block_edge: int
    m_b: int
    seed: int
    ratio: float
    values: np.ndarray

    def __post_init__(self):
        expected = self.m_b * (self.width // self.block_edge) * (self.height // self.block_edge)
        if self.values.shape != (expected,):
            raise ValueError(
                f"measurement length {self.values.shape} inconsistent with header "
                f"(expected {expected})"
            )


def measurements_per_block(ratio):
    """Number of rows kept per block: round-half-up of ratio * 1024."""
    return int(np.floor(ratio * BLOCK_LEN + 0.5))


def build_operator(seed, ratio, image_width, image_height):
    """Build the seeded block measurement operator.

    Draws an (m_b, 1024) matrix of i.i.d. standard normal entries from
    PCG64(seed) and orthonormalizes its rows (QR with the positive-diagonal
    sign convention, i.e. the Gram-Schmidt result).  Deterministic per seed.

    Parameters
    ----------
    seed : int
        64-bit generator seed.
    ratio : float
        Measurement ratio in (0, 1]; m_b = round(ratio * 1024).
    image_width, image_height : int
        Image dimensions, each a multiple of 32.
    """
    if image_width % BLOCK_EDGE or image_height % BLOCK_EDGE:
        raise ValueError(
            f"dimensions must be multiples of {BLOCK_EDGE}, "
            f"got {image_width}x{image_height}"
        )
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    m_b = measurements_per_block(ratio)
    for attempt in range(3):
        # Sub-seeding via the seed sequence (seed, attempt); attempt 0 is the
        # normal path, redraws only on (astronomically unlikely) rank loss.
        rng = np.random.Generator(np.random.PCG64([seed, attempt]))
        gaussian = rng.standard_normal((m_b, BLOCK_LEN))
        q, r = np.linalg.qr(gaussian.T)
        diag = np.diag(r)
        if np.min(np.abs(diag)) > 1e-12 * np.max(np.abs(diag)):
            phi = (q * np.sign(diag)).T
            return MeasurementOperator(
                width=image_width,
                height=image_height,
                m_b=m_b,
                ratio=ratio,
                seed=seed,
                matrix=phi,
            )
    raise ValueError("rank-deficient Gaussian draw three times in a row")


def _as_blocks(op, image):
    """Raster-ordered 32x32 blocks, each flattened row-major: (n_blocks, 1024)."""
    by, bx = op.blocks_y, op.blocks_x
    return (
        image.reshape(by, BLOCK_EDGE, bx, BLOCK_EDGE)
        .transpose(0, 2, 1, 3)
        .reshape(by * bx, BLOCK_LEN)
    )


def _from_blocks(op, blocks):
    by, bx = op.blocks_y, op.blocks_x
    return (
        blocks.reshape(by, bx, BLOCK_EDGE, BLOCK_EDGE)
        .transpose(0, 2, 1, 3)
        .reshape(op.height, op.width)
    )


def forward(op, image):
    """Project each block: b = concat over blocks of matrix @ block_pixels."""
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (op.height, op.width):
        raise ValueError(
            f"image shape {image.shape} does not match operator grid "
            f"({op.height}, {op.width})"
        )
    values = (_as_blocks(op, image) @ op.matrix.T).ravel()
    return MeasurementVector(
        width=op.width,
        height=op.height,
        block_edge=BLOCK_EDGE,
        m_b=op.m_b,
        seed=op.seed,
        ratio=op.ratio,
        values=values,
    )


def _check_header(op, meas):
    if (
        meas.width != op.width
        or meas.height != op.height
        or meas.block_edge != BLOCK_EDGE
        or meas.m_b != op.m_b
        or meas.seed != op.seed
    ):
        raise ValueError("measurement header does not match operator")


def adjoint(op, meas):
    """Exact transpose of forward: scatter matrix.T @ b_block into the raster."""
    _check_header(op, meas)
    per_block = meas.values.reshape(op.n_blocks, op.m_b)
    return _from_blocks(op, per_block @ op.matrix)


def residual_measurements(meas, values):
    """Same header as ``meas`` carrying different values (e.g. Ax - b)."""
    return replace(meas, values=values)


def save_measurements(meas, path):
    """Write the binary measurement file (magic, LE header, LE float64 payload)."""
    with open(path, "wb") as fh:
        fh.write(MEAS_MAGIC)
        fh.write(
            _HEADER.pack(
                meas.width, meas.height, meas.block_edge, meas.m_b, meas.seed, meas.ratio
            )
        )
        fh.write(meas.values.astype("<f8").tobytes())


def load_measurements(path):
    """Read a measurement file written by save_measurements; exact round-trip."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[: len(MEAS_MAGIC)] != MEAS_MAGIC:
        raise MeasurementFileError("unrecognized measurement file (bad magic)")
    offset = len(MEAS_MAGIC)
    if len(raw) < offset + _HEADER.size:
        raise MeasurementFileError("truncated header")
    width, height, block_edge, m_b, seed, ratio = _HEADER.unpack_from(raw, offset)
    if block_edge != BLOCK_EDGE:
        raise MeasurementFileError(f"unsupported block edge {block_edge}")
    if width % block_edge or height % block_edge or width == 0 or height == 0:
        raise MeasurementFileError("header dimensions not multiples of the block edge")
    expected = m_b * (width // block_edge) * (height // block_edge)
    payload = raw[offset + _HEADER.size :]
    if len(payload) < expected * 8:
        raise MeasurementFileError(
            f"truncated payload: expected {expected} values, got {len(payload) // 8}"
        )
    if len(payload) > expected * 8:
        raise MeasurementFileError("oversized payload")
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return MeasurementVector(
        width=width,
        height=height,
        block_edge=block_edge,
        m_b=m_b,
        seed=seed,
        ratio=ratio,
        values=values,
    )
