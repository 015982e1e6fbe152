"""Deterministic special functions and summation helpers.

``erfc`` is a pure-Python port of the SunPro/FreeBSD ``s_erf.c`` rational
approximations, so results do not depend on the platform libm.

    Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.

    Developed at SunPro, a Sun Microsystems, Inc. business.
    Permission to use, copy, modify, and distribute this
    software is freely granted, provided that this notice
    is preserved.
"""

from __future__ import annotations

import math
import struct

__all__ = ["erfc", "KahanSum"]

_ERX = 8.45062911510467529297e-01

# erf on [0, 0.84375]
_PP = (1.28379167095512558561e-01, -3.25042107247001499370e-01,
       -2.84817495755985104766e-02, -5.77027029648944159157e-03,
       -2.37630166566501626084e-05)
_QQ = (1.0, 3.97917223959155352819e-01, 6.50222499887672944485e-02,
       5.08130628187576562776e-03, 1.32494738004321644526e-04,
       -3.96022827877536812320e-06)

# erf on [0.84375, 1.25]
_PA = (-2.36211856075265944077e-03, 4.14856118683748331666e-01,
       -3.72207876035701323847e-01, 3.18346619901161753674e-01,
       -1.10894694282396677476e-01, 3.54783043256182359371e-02,
       -2.16637559486879084300e-03)
_QA = (1.0, 1.06420880400844228286e-01, 5.40397917702171048937e-01,
       7.18286544141962662868e-02, 1.26171219808761642112e-01,
       1.36370839120290507362e-02, 1.19844998467991074170e-02)

# erfc on [1.25, 1/0.35]
_RA = (-9.86494403484714822705e-03, -6.93858572707181764372e-01,
       -1.05586262253232909814e01, -6.23753324503260060396e01,
       -1.62396669462573470355e02, -1.84605092906711035994e02,
       -8.12874355063065934246e01, -9.81432934416914548592e00)
_SA = (1.0, 1.96512716674392571292e01, 1.37657754143519042600e02,
       4.34565877475229228821e02, 6.45387271733267880336e02,
       4.29008140027567833386e02, 1.08635005541779435134e02,
       6.57024977031928170135e00, -6.04244152148580987438e-02)

# erfc on [1/0.35, 28]
_RB = (-9.86494292470009928597e-03, -7.99283237680523006574e-01,
       -1.77579549177547519889e01, -1.60636384855821916062e02,
       -6.37566443368389627722e02, -1.02509513161107724954e03,
       -4.83519191608651397019e02)
_SB = (1.0, 3.03380607434824582924e01, 3.25792512996573918826e02,
       1.53672958608443695994e03, 3.19985821950859553908e03,
       2.55305040643316442583e03, 4.74528541206955367215e02,
       -2.24409524465858183362e01)


def _poly(coef: tuple[float, ...], x: float) -> float:
    acc = 0.0
    for c in reversed(coef):
        acc = acc * x + c
    return acc


def _clear_low_word(x: float) -> float:
    (bits,) = struct.unpack("<Q", struct.pack("<d", x))
    return struct.unpack("<d", struct.pack("<Q", bits & 0xFFFFFFFF00000000))[0]


def erfc(x: float) -> float:
    """Complementary error function, max error below one ulp on (-inf, 26].

    Checked against 50-digit mpmath in the test suite: relative error
    stays under 1e-14 wherever the result is a normal float.
    """
    x = float(x)
    if math.isnan(x):
        return x
    ax = abs(x)
    if ax < 0.84375:
        if ax < 2.0**-56:
            return 1.0 - x
        z = x * x
        y = _poly(_PP, z) / _poly(_QQ, z)
        if x < 0.25:
            return 1.0 - (x + x * y)
        r = x * y + (x - 0.5)
        return 0.5 - r
    if ax < 1.25:
        s = ax - 1.0
        pq = _poly(_PA, s) / _poly(_QA, s)
        if x >= 0.0:
            return (1.0 - _ERX) - pq
        return 1.0 + (_ERX + pq)
    if ax < 28.0:
        if x < -6.0:
            return 2.0
        s = 1.0 / (ax * ax)
        if ax < 1.0 / 0.35:
            rs = _poly(_RA, s) / _poly(_SA, s)
        else:
            rs = _poly(_RB, s) / _poly(_SB, s)
        z = _clear_low_word(ax)
        r = math.exp(-z * z - 0.5625) * math.exp((z - ax) * (z + ax) + rs)
        if x > 0.0:
            return r / ax
        return 2.0 - r / ax
    return 0.0 if x > 0.0 else 2.0


class KahanSum:
    """Neumaier's variant of compensated summation."""

    __slots__ = ("total", "_comp")

    def __init__(self) -> None:
        self.total = 0.0
        self._comp = 0.0

    def add(self, x: float) -> None:
        t = self.total + x
        if abs(self.total) >= abs(x):
            self._comp += (self.total - t) + x
        else:
            self._comp += (x - t) + self.total
        self.total = t

    @property
    def value(self) -> float:
        return self.total + self._comp
