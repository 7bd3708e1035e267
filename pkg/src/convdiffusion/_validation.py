"""Input validation helpers used at public entry points."""

import numbers

import numpy as np

from .exceptions import DimensionMismatch, HaloTooShallow, NonPositiveSpacing


def check_finite(values, name="values"):
    values = np.asarray(values, dtype=float)
    if not np.isfinite(values).all():
        bad = np.argwhere(~np.isfinite(values))[0]
        # stored [j, i]; report (i, j)
        raise ValueError(f"{name} contains a non-finite value at (i, j) = "
                         f"({bad[-1]}, {bad[0] if values.ndim > 1 else 0})")
    return values


def check_spacing(*spacings):
    for h in spacings:
        if not isinstance(h, numbers.Real) or not np.isfinite(h) or h <= 0:
            raise NonPositiveSpacing(f"cell width must be positive, got {h!r}")


def check_same_shape(*fields):
    first = fields[0]
    for other in fields[1:]:
        if other.values.shape != first.values.shape or other.halo != first.halo:
            raise DimensionMismatch(
                f"fields differ: {first.values.shape}/halo {first.halo} vs "
                f"{other.values.shape}/halo {other.halo}")


def check_halo(field, required):
    if field.halo < required:
        raise HaloTooShallow(
            f"field halo {field.halo} < {required} required by the filter")


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    return float(value)


def check_choice(value, name, choices):
    if value not in choices:
        raise ValueError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value
