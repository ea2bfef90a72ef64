"""
This module contains some general purpose utility functions used in ftsdos.
"""

import os
import hashlib
import json
import logging
import tempfile
import contextlib

import numpy as np

logger = logging.getLogger(__name__)


def sliding(vals):
    """
    Yield three values in a sliding window along an iterable.

    :param vals: Iterable to iterate over
    :return: Generator of tuples
    """
    it = iter(vals)
    prev = None
    try:
        current = next(it)
    except StopIteration:
        return
    for nxt in it:
        yield (prev, current, nxt)
        prev = current
        current = nxt
    yield (prev, current, None)


def tolerance(value, rel=1e-6):
    """
    Comparison tolerance used by the bound checks.

    :param value: Reference value or numpy array the tolerance is scaled by
    :param rel: Relative tolerance
    :return: rel * max(1, |value|)
    """
    return rel * np.maximum(1., np.abs(value))


@contextlib.contextmanager
def atomic_write(name, mode="w"):
    """
    Open a temporary file next to name and move it into place on success.

    Readers never see a partially written file.  If the body raises, the
    temporary file is removed and name is left untouched.

    :param name: Final file name
    :param mode: File mode, "w" or "wb"
    """
    directory = os.path.dirname(os.path.abspath(name))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(name))
    try:
        with os.fdopen(fd, mode) as f:
            yield f
        os.replace(tmp_name, name)
    except BaseException:
        try:
            os.remove(tmp_name)
        except OSError:
            pass
        raise


def canonical_hash(obj):
    """
    Return the hex sha256 digest of the canonical JSON form of obj.

    Dictionary keys are sorted so the digest does not depend on insertion order.

    :param obj: JSON serialisable object
    :return: Hex digest string
    """
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def format_float(val):
    """
    Format a float so that it survives a text round trip exactly.

    :param val: Value to format
    :return: String with 17 significant digits
    """
    return "{0:.17g}".format(val)


class SimpleEnum(object):
    class Enum(object):
        def __iter__(self):
            return iter(self.members)

        def __contains__(self, key):
            return key in self.members

        def __len__(self):
            return len(self.members)

        def __getitem__(self, key):
            return getattr(self, key)

        def as_dict(self):
            return {key: getattr(self, key).value for key in self.members}

        def lookup(self, key):
            """
            Find an item by key, accepting hyphens in place of underscores.

            :param key: Item key, any case
            :return: EnumItem
            """
            norm = str(key).strip().lower().replace("-", "_")
            if norm not in self.members:
                raise KeyError("'{0}' is not one of {1}".format(key, ", ".join(sorted(self.members))))
            return getattr(self, norm)

    class EnumItem(object):
        def __init__(self, enum_name, key, value=None):
            self.enum_name = enum_name
            self.key = key
            if value is None:
                self.value = key
                self._default_value = True
            else:
                self.value = value
                self._default_value = False

        def __repr__(self):
            if self._default_value:
                return "<{0}: {1}>".format(self.enum_name, self.key)
            else:
                return "<{0}: {1} - {2}>".format(self.enum_name, self.key, self.value)

        def __str__(self):
            return str(self.key)

        def __hash__(self):
            return hash(repr(self))

        def __eq__(self, other):
            """
            Compare enums by key rather than by value.

            :param other: RHS enum
            :return: Whether EnumValues are equal by key
            """
            if not isinstance(other, SimpleEnum.EnumItem):
                return NotImplemented
            if self.enum_name != other.enum_name:
                raise TypeError("Cannot compare values from different enums")
            return self.key == other.key

    @classmethod
    def enum(cls, name, keys=list(), values=None):
        def returner(val):
            return lambda _: val
        enum_cls = type(name, (cls.Enum,), {})

        keys = list(keys)
        if values is None:
            for key in keys:
                prop = property(returner(cls.EnumItem(name, key)))
                setattr(enum_cls, key, prop)
        else:
            for key, value in zip(keys, values):
                prop = property(returner(cls.EnumItem(name, key, value)))
                setattr(enum_cls, key, prop)

        setattr(enum_cls, "members", property(returner(set(keys))))
        return enum_cls()

    @classmethod
    def enum_from_dict(cls, name, key_val_dict):
        return cls.enum(name, key_val_dict.keys(), key_val_dict.values())
