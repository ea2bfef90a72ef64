"""
Module containing the family of class-K functions used by Lyapunov certificates.

A class-K function maps [0, R) to [0, inf), is continuous, strictly increasing and zero at zero.
"""
import abc

import numpy as np
from scipy import interpolate, optimize

from ftsdos.util import SimpleEnum


class ClassKForms(object):
    """
    Class holding list of all defined class-K function families.

    Creating an instance causes the Enum of families to be updated with
    all new subclasses of ClassKFn.  The classes may then be accessed by name,
    either as attributes or using square brackets.
    """
    FormsEnum = SimpleEnum.enum("FormsEnum")

    @classmethod
    def _refresh(cls):
        """
        Update the families Enum to include all new subclasses of ClassKFn.
        """
        enum_dict = cls.FormsEnum.as_dict()
        for subclass in ClassKFn.__subclasses__():
            name = subclass.__name__
            if name not in cls.FormsEnum:
                enum_dict[name] = subclass

        cls.FormsEnum = SimpleEnum.enum_from_dict("FormsEnum", enum_dict)

    def __init__(self):
        type(self)._refresh()

    def __getattr__(self, item):
        return type(self).FormsEnum[item].value

    def __getitem__(self, item):
        return getattr(self, item)

    def __repr__(self):
        return "<ClassKForms: {0} defined>".format(len(self))

    def __len__(self):
        return len(type(self).FormsEnum)

    def __contains__(self, item):
        return item in type(self).FormsEnum

    def create(self, name, *params):
        """
        Build a class-K function from its family name and numeric parameters.

        :param name: Family name, e.g. PowerLaw
        :param params: Parameters passed to the family's from_params
        :return: ClassKFn instance
        """
        matches = [key for key in type(self).FormsEnum if key.lower() == str(name).lower()]
        if not matches:
            raise ValueError("Unknown class-K family '{0}'".format(name))
        return self[matches[0]].from_params(*params)


class ClassKFn(object, metaclass=abc.ABCMeta):
    """
    Parent class of any class-K function family.

    New families must define __call__, inverse, params and from_params.
    """
    @abc.abstractmethod
    def __call__(self, r):
        """
        Evaluate the function.

        :param r: Non-negative radius, scalar or numpy array
        :return: Function value with the same shape as r
        """
        pass

    @abc.abstractmethod
    def inverse(self, v):
        """
        Evaluate the inverse function.

        :param v: Value in the range of the function
        :return: Radius r with f(r) = v
        """
        pass

    @property
    @abc.abstractmethod
    def params(self):
        """
        Numeric parameters that reproduce this function through from_params.
        """
        pass

    @classmethod
    @abc.abstractmethod
    def from_params(cls, *params):
        pass

    @property
    def form(self):
        return type(self).__name__

    def describe(self):
        return {"form": self.form, "params": [float(p) for p in self.params]}

    @staticmethod
    def _check_radius(r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("Class-K functions are only defined for non-negative radius")
        return r

    def __repr__(self):
        return "<{0}: {1}>".format(self.form, ", ".join("{0:g}".format(p) for p in self.params))


class PowerLaw(ClassKFn):
    """
    f(r) = k r^p with k > 0 and p > 0.
    """
    __slots__ = ["k", "p"]

    def __init__(self, k, p):
        if not k > 0 or not p > 0:
            raise ValueError("PowerLaw requires positive coefficient and exponent, got k={0}, p={1}".format(k, p))
        self.k = float(k)
        self.p = float(p)

    def __call__(self, r):
        r = self._check_radius(r)
        return self.k * np.power(r, self.p)

    def inverse(self, v):
        v = self._check_radius(v)
        return np.power(v / self.k, 1. / self.p)

    @property
    def params(self):
        return (self.k, self.p)

    @classmethod
    def from_params(cls, *params):
        if len(params) != 2:
            raise ValueError("PowerLaw takes two parameters: coefficient and exponent")
        return cls(*params)


class Tabulated(ClassKFn):
    """
    Monotone piecewise cubic interpolation of sampled (r, f(r)) pairs.

    The first sample must be (0, 0) and both columns strictly increasing.
    Evaluation beyond the last tabulated radius raises ValueError.
    """
    __slots__ = ["radii", "values", "_interp"]

    def __init__(self, radii, values):
        radii = np.asarray(radii, dtype=float)
        values = np.asarray(values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or len(radii) < 2:
            raise ValueError("Tabulated requires two equal length sequences of at least two samples")
        if radii[0] != 0 or values[0] != 0:
            raise ValueError("Tabulated class-K function must start at (0, 0)")
        if np.any(np.diff(radii) <= 0) or np.any(np.diff(values) <= 0):
            raise ValueError("Tabulated class-K function must be strictly increasing")
        self.radii = radii
        self.values = values
        self._interp = interpolate.PchipInterpolator(radii, values, extrapolate=False)

    def __call__(self, r):
        r = self._check_radius(r)
        if np.any(r > self.radii[-1]):
            raise ValueError("Radius beyond tabulated domain [0, {0}]".format(self.radii[-1]))
        return self._interp(r)

    def inverse(self, v):
        v = self._check_radius(v)
        if np.any(v > self.values[-1]):
            raise ValueError("Value beyond tabulated range [0, {0}]".format(self.values[-1]))

        def invert(val):
            if val == 0:
                return 0.
            return optimize.bisect(lambda r: float(self._interp(r)) - val, 0., self.radii[-1], xtol=1e-12)

        if v.ndim == 0:
            return invert(float(v))
        return np.vectorize(invert, otypes=[float])(v)

    @property
    def params(self):
        return tuple(np.column_stack((self.radii, self.values)).ravel())

    @classmethod
    def from_params(cls, *params):
        if len(params) % 2:
            raise ValueError("Tabulated takes pairs of radius and value")
        pairs = np.reshape(np.asarray(params, dtype=float), (-1, 2))
        return cls(pairs[:, 0], pairs[:, 1])


def eval_classk(f, r):
    """
    Evaluate a class-K function at a radius.

    :param f: ClassKFn instance
    :param r: Non-negative radius
    :return: f(r) as float
    """
    if r < 0:
        raise ValueError("Negative radius {0}".format(r))
    return float(f(r))
