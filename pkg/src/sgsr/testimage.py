"""Deterministic synthetic grayscale scenes for demos and tests.

The scene mixes the structures recovery cares about: smooth shading, sharp
curved edges, and repeating diagonal texture, with the same local statistics
at every supported size (features use absolute pixel units and tile on a
fixed grid).  Values are integers in [0, 255] so PGM round trips are exact.
"""

import numpy as np


def make_test_image(width=256, height=256):
    """Integer-valued float64 scene of the given size (multiples of 32)."""
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)

    # Slowly varying illumination with non-commensurate periods.
    img = 128.0 + 52.0 * np.sin(2 * np.pi * x / 173.0) * np.cos(2 * np.pi * y / 211.0)

    # Diagonal stripe texture, wavelength ~6.7 px; repeats everywhere, so
    # every textured patch has many near-identical nonlocal matches.
    img += 26.0 * np.sin(2 * np.pi * (2.0 * x + 3.0 * y) / 24.0)

    # One dark disc per 64x64 tile: repeated sharp curved edges.
    cx = np.abs((x % 64.0) - 32.0)
    cy = np.abs((y % 64.0) - 32.0)
    radius = np.hypot(cx, cy)
    img -= 58.0 * (radius < 18.0)
    img += 34.0 * (radius < 9.0)

    return np.floor(np.clip(img, 0.0, 255.0) + 0.5)
