"""Dirichlet heat kernels on [0, 1] and [0, inf), derivatives and bound checks.

The compact kernel is the method-of-images series

    H(t, x, y) = (4 pi t)^(-1/2) * sum_n [exp(-(x-y+2n)^2/4t) - exp(-(x+y+2n)^2/4t)],

truncated at |n| <= n_images; the half-line kernel G keeps only the n = 0
pair, and G_r(t, x, y) = exp(-r(x-y)) G(t, x, y) is its exponentially
weighted variant.  ``verify_kernel_bounds`` checks numerically that the
weighted derivative integral sup_x int exp(-r(x-y)) |dK/dy| dy stays of
order 1/sqrt(t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import NonPositiveTime, QuadratureFailure

#: image-series truncation adequate for t <= 1 at tolerance 1e-12
DEFAULT_N_IMAGES = 8


def suggest_n_images(t_max: float) -> int:
    """Series truncation rule: tail terms decay like exp(-n^2/t)."""
    return max(DEFAULT_N_IMAGES, math.ceil(4.0 * math.sqrt(max(t_max, 0.0))))


def _check_time(t):
    if np.any(np.asarray(t) <= 0.0):
        raise NonPositiveTime("heat kernel requires t > 0")


def free_kernel(t, x, y):
    """Whole-line Gaussian heat kernel (the n = 0 image term)."""
    _check_time(t)
    t, x, y = np.broadcast_arrays(*map(np.asarray, (t, x, y)))
    return np.exp(-((x - y) ** 2) / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)


def mirror_kernel(t, x, y):
    """Gaussian centred at the reflection -y (the subtracted image)."""
    _check_time(t)
    t, x, y = np.broadcast_arrays(*map(np.asarray, (t, x, y)))
    return np.exp(-((x + y) ** 2) / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)


def eval_G(t, x, y):
    """Dirichlet heat kernel on the half-line."""
    return free_kernel(t, x, y) - mirror_kernel(t, x, y)


def eval_G_r(t, x, y, r: float):
    """Exponentially weighted half-line kernel exp(-r(x-y)) G(t,x,y)."""
    t, x, y = np.broadcast_arrays(*map(np.asarray, (t, x, y)))
    return np.exp(-r * (x - y)) * eval_G(t, x, y)


def eval_H(t, x, y, n_images: int = DEFAULT_N_IMAGES):
    """Dirichlet heat kernel on [0, 1] via a truncated image series."""
    _check_time(t)
    t, x, y = np.broadcast_arrays(*map(np.asarray, (t, x, y)))
    acc = np.zeros(np.broadcast(t, x, y).shape)
    inv4t = 1.0 / (4.0 * t)
    for n in range(-n_images, n_images + 1):
        acc = acc + np.exp(-((x - y + 2.0 * n) ** 2) * inv4t)
        acc = acc - np.exp(-((x + y + 2.0 * n) ** 2) * inv4t)
    return acc / np.sqrt(4.0 * np.pi * t)


def deriv_y(kernel_kind: str, t, x, y, n_images: int = DEFAULT_N_IMAGES):
    """Spatial derivative dK/dy of H or G, term-by-term analytic."""
    _check_time(t)
    if kernel_kind not in ("H", "G"):
        raise ValueError(f"kernel_kind must be 'H' or 'G', got {kernel_kind!r}")
    t, x, y = np.broadcast_arrays(*map(np.asarray, (t, x, y)))
    shifts = range(-n_images, n_images + 1) if kernel_kind == "H" else (0,)
    acc = np.zeros(np.broadcast(t, x, y).shape)
    inv4t = 1.0 / (4.0 * t)
    inv2t = 1.0 / (2.0 * t)
    for n in shifts:
        u = x - y + 2.0 * n
        v = x + y + 2.0 * n
        acc = acc + u * inv2t * np.exp(-(u * u) * inv4t)
        acc = acc + v * inv2t * np.exp(-(v * v) * inv4t)
    return acc / np.sqrt(4.0 * np.pi * t)


def mass_G(t, x):
    """Closed form of int_0^inf G(t, x, y) dy = erf(x / (2 sqrt(t)))."""
    _check_time(t)
    return erf(np.asarray(x) / (2.0 * np.sqrt(np.asarray(t))))


def adaptive_trapezoid(fn, a: float, b: float, rel_tol: float = 1e-9,
                       n0: int = 64, max_doublings: int = 18) -> float:
    """Trapezoid rule with interval halving until successive estimates agree.

    fn must accept a vector of abscissae.  Raises QuadratureFailure if the
    refinement budget is exhausted before the relative tolerance is met.
    """
    if b <= a:
        return 0.0
    xs = np.linspace(a, b, n0 + 1)
    fx = fn(xs)
    h = (b - a) / n0
    est = h * (0.5 * fx[0] + fx[1:-1].sum() + 0.5 * fx[-1])
    n = n0
    for _ in range(max_doublings):
        mids = (xs[:-1] + xs[1:]) / 2.0
        mid_sum = fn(mids).sum()
        new_est = 0.5 * est + 0.5 * h * mid_sum
        n *= 2
        h *= 0.5
        xs = np.linspace(a, b, n + 1)
        if abs(new_est - est) <= rel_tol * max(abs(new_est), 1e-300):
            return float(new_est)
        est = new_est
    raise QuadratureFailure(
        f"trapezoid refinement did not converge to rel_tol={rel_tol} "
        f"within {max_doublings} doublings"
    )


def weighted_deriv_integral(t: float, x: float, r: float, kernel_kind: str = "G",
                            n_images: int = DEFAULT_N_IMAGES,
                            rel_tol: float = 1e-9) -> float:
    """int exp(-r(x-y)) |dK/dy|(t, x, y) dy over the kernel's domain."""
    _check_time(t)
    if kernel_kind == "G":
        # Gaussian tails: beyond this window the integrand is negligible
        width = 12.0 * math.sqrt(t) + 12.0 * t * abs(r)
        a, b = max(0.0, x - width), x + width
    else:
        a, b = 0.0, 1.0

    def integrand(ys):
        return np.exp(-r * (x - ys)) * np.abs(deriv_y(kernel_kind, t, x, ys, n_images))

    return adaptive_trapezoid(integrand, a, b, rel_tol=rel_tol)


@dataclass
class BoundReport:
    """Result of a kernel-estimate sweep over a time range."""

    estimate_name: str
    t_values: list
    sup_value: float      # max over t of sup_x of the integral
    scaled_sup: float     # max over t of sqrt(t) * sup_x of the integral
    bounded: bool

    def to_json_dict(self) -> dict:
        return {
            "estimate_name": self.estimate_name,
            "t_values": list(map(float, self.t_values)),
            "sup_value": float(self.sup_value),
            "scaled_sup": float(self.scaled_sup),
            "bounded": bool(self.bounded),
        }


def verify_kernel_bounds(t_values, x_values, r: float = 0.0,
                         kernel_kind: str = "G",
                         n_images: int = DEFAULT_N_IMAGES) -> BoundReport:
    """Sweep sup_x int exp(-r(x-y))|dK/dy| dy over t and report sqrt(t)-scaling.

    The estimate is declared bounded when sqrt(t) * value stays within a
    factor 10 of its smallest sampled value across the whole t range.
    """
    t_values = [float(t) for t in t_values]
    if min(t_values) <= 0.0:
        raise NonPositiveTime("bound sweep requires t_min > 0")
    sup_per_t = []
    for t in t_values:
        vals = [weighted_deriv_integral(t, float(x), r, kernel_kind, n_images)
                for x in x_values]
        sup_per_t.append(max(vals))
    scaled = [math.sqrt(t) * v for t, v in zip(t_values, sup_per_t)]
    finite = all(math.isfinite(v) for v in scaled)
    bounded = finite and max(scaled) <= 10.0 * max(min(scaled), 1e-300)
    name = f"{kernel_kind}_deriv_weighted_r={r:g}"
    return BoundReport(estimate_name=name, t_values=t_values,
                       sup_value=max(sup_per_t), scaled_sup=max(scaled),
                       bounded=bounded)
