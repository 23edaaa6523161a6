"""Neumann heat kernel on [0,1] for d/dt = (1/2) d^2/dr^2, by images.

The kernel is the Gaussian of variance t (diffusivity 1/2 is fixed here,
once, for the whole package) summed over the reflections of the source
point across both endpoints:

    G_t(r, y) = sum_k [ phi_t(r - y - 2k) + phi_t(r + y - 2k) ]

Profiles are piecewise constant, so the action of the kernel reduces to a
matrix on cell masses whose entries are double integrals of Gaussians over
cell pairs.  Those are evaluated in closed form through the iterated
antiderivative of the normal CDF; nothing here is quadrature.  The matrix
depends only on (t, number of cells) and is Toeplitz + Hankel, so it is
assembled from O(M) special-function calls and cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import hankel, toeplitz
from scipy.special import ndtr

from reswalk.profiles import MacroProfile

__all__ = ["KernelParams", "kernel_value", "convolve", "image_count", "cell_transfer"]

DEFAULT_TAIL_TOL = 1e-14

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelParams:
    """Evaluation parameters: time, number of image pairs, truncation target.

    ``image_count`` K means source images 2k +/- y for k in [-K, K]; it is
    picked so the first neglected Gaussian, at distance at least 2K-1 from
    any point of [0,1], stays below ``tail_tol``.
    """

    time: float
    image_count: int
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if not self.time > 0:
            raise ValueError(f"time must be positive, got {self.time}")
        if self.image_count < 1:
            raise ValueError("need at least one image pair")


def image_count(t: float, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Smallest K with exp(-(2K-1)^2 / (2t)) < tail_tol."""
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")
    k = 1
    while math.exp(-((2 * k - 1) ** 2) / (2.0 * t)) >= tail_tol:
        k += 1
    return k


def params_for(t: float, tail_tol: float = DEFAULT_TAIL_TOL) -> KernelParams:
    return KernelParams(t, image_count(t, tail_tol), tail_tol)


def kernel_value(t: float, r, rp, tail_tol: float = DEFAULT_TAIL_TOL):
    """Pointwise G_t(r, rp); symmetric in (r, rp); accepts arrays."""
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    kmax = image_count(t, tail_tol)
    ks = 2.0 * np.arange(-kmax, kmax + 1)
    args = np.stack([r[..., None] - rp[..., None] - ks,
                     r[..., None] + rp[..., None] - ks])
    total = np.sum(np.exp(-args ** 2 / (2.0 * t)), axis=(0, -1)) / (_SQRT_2PI * math.sqrt(t))
    return float(total) if total.ndim == 0 else total


def _cdf_antideriv(x: np.ndarray, s: float) -> np.ndarray:
    """W with W'(x) = Phi(x/s): W(x) = s * [z*Phi(z) + phi(z)], z = x/s."""
    z = x / s
    return s * (z * ndtr(z) + np.exp(-z * z / 2.0) / _SQRT_2PI)


def _boundary_point_masses(t: float, kmax: int, cells: int, at_one: bool) -> np.ndarray:
    """Per-cell masses of the kernel started from the boundary atom (0 or 1).

    The two image families coincide at a boundary source, which doubles
    every term; that factor is what keeps the boundary atom at unit mass.
    """
    s = math.sqrt(t)
    edges = np.arange(cells + 1) / cells
    shift = 1.0 if at_one else 0.0
    ks = 2.0 * np.arange(-kmax, kmax + 1) + shift
    cdf = ndtr((edges[:, None] - ks[None, :]) / s)  # (M+1, n_images)
    return 2.0 * np.sum(cdf[1:] - cdf[:-1], axis=1)


def _transfer_arrays(t: float, cells: int, tail_tol: float):
    s = math.sqrt(t)
    m = cells
    kmax = image_count(t, tail_tol)
    edges = np.arange(m + 1) / m

    # Double integrals over cell pairs collapse to second differences of W
    # along the Toeplitz diagonal (i - j, direct images) and the Hankel
    # anti-diagonal (i + j, reflected images).
    diff_pts = np.arange(-m - 1, m + 2) / m      # (i-j)/m for i-j in [-m-1, m+1]
    sum_pts = np.arange(0, 2 * m + 3) / m        # (i+j)/m for i+j in [0, 2m+2]
    direct = np.zeros(2 * m + 3)
    reflect = np.zeros(2 * m + 3)
    for k in range(-kmax, kmax + 1):
        direct += _cdf_antideriv(diff_pts - 2.0 * k, s)
        reflect += _cdf_antideriv(sum_pts - 2.0 * k, s)
    ddirect = direct[2:] - 2.0 * direct[1:-1] + direct[:-2]     # index i-j+m
    dreflect = reflect[2:] - 2.0 * reflect[1:-1] + reflect[:-2]  # index i+j

    # mass -> mass matrix: out cell i gets D[i,j]/w of in cell j's mass
    dmat = toeplitz(ddirect[m:2 * m], ddirect[m::-1][:m]) + \
        hankel(dreflect[:m], dreflect[m - 1:2 * m - 1])
    transfer = dmat * m  # divide by cell width

    # the second differences of W cancel catastrophically for wide kernels,
    # leaving ~1e-13 column-sum dust; rescale so conservation is exact
    transfer /= transfer.sum(axis=0)
    atom0 = _boundary_point_masses(t, kmax, m, at_one=False)
    atom1 = _boundary_point_masses(t, kmax, m, at_one=True)
    atom0 /= atom0.sum()
    atom1 /= atom1.sum()
    return transfer, atom0, atom1


_TRANSFER_CACHE: dict = {}


def cell_transfer(t: float, cells: int, tail_tol: float = DEFAULT_TAIL_TOL):
    """(mass matrix, atom-at-0 masses, atom-at-1 masses) for time t.

    The matrix maps input cell masses to output cell masses; its columns
    sum to 1 up to the image truncation, so total mass is conserved.
    """
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")
    key = (float(t), int(cells), float(tail_tol))
    if key not in _TRANSFER_CACHE:
        if len(_TRANSFER_CACHE) > 64:
            _TRANSFER_CACHE.clear()
        _TRANSFER_CACHE[key] = _transfer_arrays(t, cells, tail_tol)
    return _TRANSFER_CACHE[key]


def convolve(t: float, u: MacroProfile, tail_tol: float = DEFAULT_TAIL_TOL) -> MacroProfile:
    """Evolve a profile by time t of Neumann heat flow.

    The atom at 0 is smeared into the density (output atom is 0); each
    input cell's mass is redistributed with exact per-cell integrals.
    """
    transfer, atom0, _ = cell_transfer(t, u.cells, tail_tol)
    out_masses = transfer @ u.cell_masses()
    if u.atom_mass != 0.0:
        out_masses = out_masses + u.atom_mass * atom0
    dens = out_masses * u.cells
    if u.validate:
        # analytic entries are non-negative; shave float dust
        dens = np.maximum(dens, 0.0)
    return MacroProfile(0.0, dens, validate=u.validate)
