"""Utility functions"""

import dataclasses
import os

from advsyn.exceptions import UnknownParameter

#: Thread-count variables read by OpenMP, OpenBLAS and MKL when numpy first loads
SERIAL_ENV = ('OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS')


def get_recursive_subclasses(cls):
    """Return list of all subclasses for a class, including subclasses of direct subclasses"""
    return cls.__subclasses__() + [g for s in cls.__subclasses__() for g in get_recursive_subclasses(s)]


def build_type_map(base_class, attribute):
    """Create mapping from the string (or tuple of strings) class attribute to every subclass of base_class

    Args:
        base_class (type): Root class, not included in the mapping itself
        attribute (str): Name of the class attribute holding the registered name(s)

    Raises:
        ValueError: If a subclass declares a non-string name, or two subclasses claim the same name
    """
    mapping = {}

    for cls in get_recursive_subclasses(base_class):
        names = getattr(cls, attribute, None)
        if not names:
            continue

        if isinstance(names, str):
            names = (names,)
        elif not isinstance(names, tuple):
            raise ValueError('{} must be str or tuple, cannot understand type "{}" on class "{}"'.format(
                attribute,
                type(names),
                cls
            ))

        for name in names:
            if name in mapping and mapping[name] is not cls:
                raise ValueError('"{}" registered by both {} and {}'.format(name, mapping[name], cls))
            mapping[name] = cls

    return mapping


def dataclass_from_dict(cls, raw, owner=None):
    """Instantiate dataclass cls from a mapping of field values

    Raises:
        UnknownParameter: If raw holds a key that is not a field of cls, with similar field names
    """
    names = [f.name for f in dataclasses.fields(cls)]
    for key in raw:
        if key not in names:
            raise UnknownParameter(owner or cls.__name__, key, names)
    return cls(**raw)


def pin_threads():
    """Limit native thread pools to one thread; only effective before numpy is imported"""
    for name in SERIAL_ENV:
        os.environ[name] = '1'
