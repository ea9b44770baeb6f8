# see LICENSE
"""Small numeric and formatting helpers shared by every module"""

import numpy as np


def as_vector3(v, name="vector"):
    """
    Converts ``v`` to a finite float array of shape (3,)

    :param v: anything ``numpy.asarray`` understands
    :param name: name used in the error message
    :type name: str

    :raise ValueError: ``v`` is not a finite 3-vector

    :rtype: numpy.ndarray
    """
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError("%s must have 3 entries, got %d" % (name, arr.size))

    if not np.all(np.isfinite(arr)):
        raise ValueError("%s must be finite: %s" % (name, arr))

    return arr


def frozen(arr):
    """Returns ``arr`` as a read-only float array"""
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def skew(v):
    """
    Returns the skew-symmetric matrix of ``v``

    ``skew(a) @ b`` equals ``numpy.cross(a, b)``. A stack of vectors of
    shape (n, 3) gives a stack of matrices of shape (n, 3, 3).
    """
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def symmetrize(P):
    """Returns the symmetric part of ``P``"""
    return 0.5 * (P + P.T)


def fmt_sig(value, digits=9):
    """
    Formats ``value`` with ``digits`` significant digits

    >>> fmt_sig(1.0 / 3.0)
    '0.333333333'
    """
    return "%.*g" % (digits, value)


def round_sig(value, digits=9):
    """Rounds ``value`` to ``digits`` significant digits"""
    return float(fmt_sig(value, digits))
