"""Field validators shared by the config dataclasses"""

import math
import numbers

from advsyn.exceptions import ConfigValidationError


def _require_number(value, key):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ConfigValidationError(key, value, 'must be a number')
    if not math.isfinite(value):
        raise ConfigValidationError(key, value, 'must be finite')


def validate_positive_int(value, key):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigValidationError(key, value, 'must be an integer')
    if value < 1:
        raise ConfigValidationError(key, value, 'must be >= 1')


def validate_non_negative_int(value, key):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigValidationError(key, value, 'must be an integer')
    if value < 0:
        raise ConfigValidationError(key, value, 'must be >= 0')


def validate_positive_float(value, key):
    _require_number(value, key)
    if value <= 0:
        raise ConfigValidationError(key, value, 'must be > 0')


def validate_non_negative_float(value, key):
    _require_number(value, key)
    if value < 0:
        raise ConfigValidationError(key, value, 'must be >= 0')


def validate_fraction(value, key, low_open=False, high_open=False):
    """Validate value lies in the unit interval, with optionally open ends"""
    _require_number(value, key)

    if value < 0 or (low_open and value == 0) or value > 1 or (high_open and value == 1):
        interval = '{}0, 1{}'.format('(' if low_open else '[', ')' if high_open else ']')
        raise ConfigValidationError(key, value, 'must be in {}'.format(interval))


def validate_choice(value, key, choices):
    if value not in choices:
        raise ConfigValidationError(key, value, 'must be one of {}'.format(', '.join(repr(c) for c in choices)))
