"""Independent reference values, computed without the spectral code path."""

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc


def gaussian_quartic(sigma0, A0, power=0, t_max=1.0):
    """int_0^t_max int |T_t f|^4 t^power dx dt for f = A0 exp(-x^2 / sigma0).

    With sigma(t) = sigma0 + 4it, |T_t f|^2 = |A0|^2 |sigma0| / |sigma| exp(-2 Re(1/sigma) x^2),
    so the x-integral is elementary and the t-integral is left to adaptive quadrature.
    """
    s0 = complex(sigma0)

    def integrand(t):
        s = s0 + 4j * t
        return (abs(A0) ** 4 * abs(s0) ** 2 / abs(s) ** 2) * math.sqrt(math.pi / (4.0 * (1.0 / s).real)) * t**power

    val, _ = quad(integrand, 0.0, t_max, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def normalized_amplitude(sigma0):
    """|A0| making A0 exp(-x^2/sigma0) a unit vector."""
    s0 = complex(sigma0)
    return (2.0 * s0.real / (abs(s0) ** 2 * math.pi)) ** 0.25


def gaussian_sextic_full_line(sigma0=1.0):
    """int_R int_R |T_t f|^6 dx dt for the unit chirped Gaussian exp(-x^2 / sigma0).

    For sigma0 = 1 this is S1^6 = 12^(-1/2).
    """
    s0 = complex(sigma0)
    a6 = normalized_amplitude(s0) ** 6

    def integrand(t):
        s = s0 + 4j * t
        return a6 * (abs(s0) / abs(s)) ** 3 * math.sqrt(math.pi / (6.0 * (1.0 / s).real))

    # the integrand peaks where Im sigma(t) = 0
    t0 = -s0.imag / 4.0
    left, _ = quad(integrand, -math.inf, t0, epsabs=0.0, epsrel=1e-12, limit=400)
    right, _ = quad(integrand, t0, math.inf, epsabs=0.0, epsrel=1e-12, limit=400)
    return left + right


def gaussian_tail(s, sigma=1.0):
    """alpha(s) for the unit Gaussian exp(-x^2 / sigma), sigma real."""
    return np.sqrt(erfc(np.sqrt(2.0 / sigma) * np.asarray(s)))


def fourier_bilinear_full_time(kgrid, dk, fh1, fh2, floor=1e-30):
    """int_R int |T_t f1 T_t f2|^2 dx dt = int int |fh1(k1) fh2(k2)|^2 / (2 |k1 - k2|) dk1 dk2.

    Samples below ``floor`` times the peak density are dropped.
    """
    a = np.abs(fh1) ** 2
    b = np.abs(fh2) ** 2
    keep_a = a > floor * a.max()
    keep_b = b > floor * b.max()
    d = np.abs(kgrid[keep_a][:, None] - kgrid[keep_b][None, :])
    return dk * dk * float(np.sum(a[keep_a][:, None] * b[keep_b][None, :] / (2.0 * d)))


def position_bilinear_full_time(xgrid, dx, f1, f2, floor=1e-30):
    """int_R int |T_t f1 T_t f2|^2 |t|^-1 dx dt = int int |f1(y1) f2(y2)|^2 / |y1 - y2| dy1 dy2."""
    a = np.abs(f1) ** 2
    b = np.abs(f2) ** 2
    keep_a = a > floor * a.max()
    keep_b = b > floor * b.max()
    d = np.abs(xgrid[keep_a][:, None] - xgrid[keep_b][None, :])
    return dx * dx * float(np.sum(a[keep_a][:, None] * b[keep_b][None, :] / d))
