import numpy as np


def fmt_float(x):
    """Shortest round-trip decimal, never in exponent form (``0.0`` -> ``0``)."""
    return np.format_float_positional(float(x), unique=True, trim="-")
