"""Modified spherical Bessel functions in exponentially scaled form.

Everything here works with the scaled pair

    si_l(z) = exp(-z) * i_l(z),      sk_l(z) = exp(+z) * k_l(z),

so that products i_l * k_l, i_l' * k_l' etc. can be formed for z up to
several hundred without overflow (the plain functions grow/decay like
exp(+-z)).  Derivatives use

    i_l'(z) = i_{l-1}(z) - (l+1)/z * i_l(z)        (i_0' = i_1)
    k_l'(z) = -k_{l-1}(z) - (l+1)/z * k_l(z)       (k_{-1} = k_0)

which hold verbatim for the scaled functions when both sides carry the
same exponential factor.

Evaluation strategy:
  * k_l: closed forms for l = 0, 1 and upward recurrence (k grows with
    l, so upward is stable for every z).
  * i_l: closed forms propagated upward for l <= 5 when z is large
    enough that the hyperbolic expressions do not cancel; a power
    series for small z; Miller's downward recurrence normalized by the
    closed form of i_0 when l is large compared to z.

The Wronskian identity  i_l(z) k_l'(z) - i_l'(z) k_l(z) = -pi/(2 z^2)
is preserved by the scaling and is used as the acceptance check for the
recurrences.
"""

from __future__ import annotations

import math

_PI_HALF = math.pi / 2.0


def _si_series(l: int, z: float) -> float:
    # i_l(z) = z^l/(2l+1)!! * sum_m (z^2/2)^m / (m! prod_j (2l+2j+1))
    dfact = 1.0
    for j in range(1, 2 * l + 2, 2):
        dfact *= j
    term = 1.0
    total = 1.0
    m = 0
    while True:
        m += 1
        term *= (z * z / 2.0) / (m * (2 * l + 2 * m + 1))
        total += term
        if term < 1e-18 * total or m > 60:
            break
    return math.exp(-z) * z**l / dfact * total


def _si_pair_closed(z: float) -> tuple[float, float]:
    # scaled i_0, i_1 without cancellation: expm1 keeps small z exact
    e2 = -math.expm1(-2.0 * z)          # 1 - exp(-2z)
    si0 = e2 / (2.0 * z)
    # i_1 = cosh/z - sinh/z^2 ; scaled: ((1+exp(-2z))/2)/z - ((1-exp(-2z))/2)/z^2
    si1 = (2.0 - e2) / (2.0 * z) - e2 / (2.0 * z * z)
    return si0, si1


def spherical_i_scaled(l: int, z: float) -> float:
    """exp(-z) * i_l(z) for l >= 0, z > 0."""
    if z <= 0.0:
        raise ValueError("z must be positive")
    if l < 0:
        raise ValueError("l must be >= 0")
    if z < max(0.5, 0.28 * l):
        return _si_series(l, z)
    if z >= 2.0 * l:
        # upward from the closed forms; benign only when z is not small
        # compared to the order (otherwise catastrophic cancellation)
        f_prev, f = _si_pair_closed(z)
        if l == 0:
            return f_prev
        for ll in range(1, l):
            f_prev, f = f, f_prev - (2 * ll + 1) / z * f
        return f
    return _spherical_i_miller(l, z)


def _spherical_i_miller(l: int, z: float) -> float:
    # downward recurrence from a trial seed, normalized by closed i_0
    l_start = l + 20 + int(math.sqrt(40.0 * l))
    f_up = 0.0
    f = 1e-290
    target = 0.0
    for ll in range(l_start, 0, -1):
        f_down = f_up + (2 * ll + 1) / z * f
        f_up, f = f, f_down
        if ll - 1 == l:
            target = f
        if abs(f) > 1e250:
            f_up *= 1e-250
            f *= 1e-250
            target *= 1e-250
    si0, _ = _si_pair_closed(z)
    return target * (si0 / f)


def spherical_k_scaled(l: int, z: float) -> float:
    """exp(+z) * k_l(z) for l >= 0, z > 0."""
    if z <= 0.0:
        raise ValueError("z must be positive")
    if l < 0:
        raise ValueError("l must be >= 0")
    sk0 = _PI_HALF / z
    if l == 0:
        return sk0
    sk1 = _PI_HALF * (z + 1.0) / (z * z)
    f_prev, f = sk0, sk1
    for ll in range(1, l):
        f_prev, f = f, f_prev + (2 * ll + 1) / z * f
    return f


def spherical_i_scaled_d(l: int, z: float) -> float:
    """exp(-z) * i_l'(z)."""
    if l == 0:
        return spherical_i_scaled(1, z)
    return spherical_i_scaled(l - 1, z) - (l + 1) / z * spherical_i_scaled(l, z)


def spherical_k_scaled_d(l: int, z: float) -> float:
    """exp(+z) * k_l'(z)."""
    prev = spherical_k_scaled(l - 1, z) if l >= 1 else spherical_k_scaled(0, z)
    return -prev - (l + 1) / z * spherical_k_scaled(l, z)


def wronskian_residual(l: int, z: float) -> float:
    """i_l k_l' - i_l' k_l + pi/(2 z^2), which should vanish.

    Returned relative to pi/(2 z^2) so a healthy evaluation gives
    values at rounding level for any z.
    """
    w = (spherical_i_scaled(l, z) * spherical_k_scaled_d(l, z)
         - spherical_i_scaled_d(l, z) * spherical_k_scaled(l, z))
    ref = _PI_HALF / (z * z)
    return (w + ref) / ref
