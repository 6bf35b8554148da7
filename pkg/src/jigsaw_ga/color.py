"""sRGB to normalized CIELAB conversion.

All piece comparisons in this package run on CIELAB values rescaled to
[0, 1]: L* is divided by 100, a* and b* are shifted from [-128, 127]
into the unit interval. The rescaling is affine, so it changes no
argmin/argmax decision made on edge distances.
"""

import numpy as np

# sRGB -> XYZ linear map and D65 reference white (IEC 61966-2-1).
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])

# CIE Lab cube-root domain threshold (6/29)^3 and linear-segment slope.
_LAB_EPS = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0

#: Normalized value that a* = b* = 0 (neutral gray) maps to.
AB_MIDPOINT = 128.0 / 255.0


def srgb_to_normalized_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert an sRGB image to CIELAB with every channel in [0, 1].

    Accepts uint8 in [0, 255] or floats already in [0, 1], shape (..., 3).
    Returns float64 of the same shape: L*/100, (a*+128)/255, (b*+128)/255,
    clipped to [0, 1].
    """
    arr = np.asarray(rgb)
    if arr.ndim < 1 or arr.shape[-1] != 3:
        raise ValueError(f"expected (..., 3) RGB array, got shape {arr.shape}")
    if arr.dtype == np.uint8:
        srgb = arr.astype(np.float64) / 255.0
    else:
        srgb = np.clip(arr.astype(np.float64), 0.0, 1.0)

    linear = np.where(
        srgb <= 0.04045,
        srgb / 12.92,
        ((srgb + 0.055) / 1.055) ** 2.4,
    )
    xyz = linear @ _RGB_TO_XYZ.T
    ratio = xyz / _D65_WHITE
    f = np.where(
        ratio > _LAB_EPS,
        np.cbrt(ratio),
        (_LAB_KAPPA * ratio + 16.0) / 116.0,
    )
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]

    lab = np.empty_like(srgb)
    lab[..., 0] = 116.0 * fy - 16.0
    lab[..., 1] = 500.0 * (fx - fy)
    lab[..., 2] = 200.0 * (fy - fz)

    lab[..., 0] /= 100.0
    lab[..., 1] = (lab[..., 1] + 128.0) / 255.0
    lab[..., 2] = (lab[..., 2] + 128.0) / 255.0
    return np.clip(lab, 0.0, 1.0)
