"""Polarimetric magnitude/phase to 3-channel features."""

import numpy as np

from .errors import DataFormatError, ParameterError


def sar_to_3channel(magnitude, phase):
    """Map magnitude M and phase P to (M, (M cos P + 1)/2, (M sin P + 1)/2).

    Magnitude is clipped to [0, 1] before the trigonometric channels are
    formed, so all three outputs land in [0, 1]. Inputs may have any common
    shape; channels are stacked on a new trailing axis.
    """
    M = np.asarray(magnitude, dtype=np.float64)
    P = np.asarray(phase, dtype=np.float64)
    if M.shape != P.shape:
        raise ParameterError(
            "magnitude shape %s does not match phase shape %s" % (M.shape, P.shape)
        )
    if not np.isfinite(M).all():
        raise DataFormatError("non-finite magnitude value")
    if not np.isfinite(P).all():
        raise DataFormatError("non-finite phase value")
    M = np.clip(M, 0.0, 1.0)
    return np.stack(
        [M, 0.5 * (M * np.cos(P) + 1.0), 0.5 * (M * np.sin(P) + 1.0)], axis=-1
    )
