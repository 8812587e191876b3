"""dB/linear conversions shared across the package."""

import numpy as np


def db2pow(x):
    """Convert a dB value (scalar or array) to a linear power ratio."""
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0) if np.ndim(x) else 10.0 ** (float(x) / 10.0)


def pow2db(x):
    """Convert a linear power ratio to dB."""
    return 10.0 * (np.log10(np.asarray(x, dtype=float)) if np.ndim(x) else np.log10(float(x)))
