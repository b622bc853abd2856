"""
Periodic grids and spectral calculus on the torus [-1, 1]^d.

Fields are plain numpy arrays:

- scalar fields have shape ``grid.shape``;
- vector fields have shape ``(d, *grid.shape)``;
- symmetric tensor fields store only the upper triangle, shape
  ``(d*(d+1)//2, *grid.shape)``, component order (0,0), (0,1), ..., (d-1,d-1).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


def sym_ncomp(d):
    return d * (d + 1) // 2


def sym_pairs(d):
    """Index pairs (i, j), i <= j, in packed storage order."""
    return [(i, j) for i in range(d) for j in range(i, d)]


def sym_index(i, j, d):
    if i > j:
        i, j = j, i
    return sym_pairs(d).index((i, j))


def sym_pack(full):
    """Pack a ``(d, d, ...)`` array into upper-triangle storage."""
    d = full.shape[0]
    return np.stack([full[i, j] for i, j in sym_pairs(d)])


def sym_unpack(packed, d):
    """Expand packed storage into a full ``(d, d, ...)`` array."""
    full = np.empty((d, d) + packed.shape[1:], dtype=packed.dtype)
    for c, (i, j) in enumerate(sym_pairs(d)):
        full[i, j] = packed[c]
        full[j, i] = packed[c]
    return full


def sym_trace(packed, d):
    return sum(packed[sym_index(i, i, d)] for i in range(d))


def sym_frobenius(packed, d):
    sq = 0.0
    for c, (i, j) in enumerate(sym_pairs(d)):
        sq = sq + (1.0 if i == j else 2.0) * packed[c] ** 2
    return np.sqrt(sq)


def sym_identity(d, shape, scale=1.0):
    out = np.zeros((sym_ncomp(d),) + tuple(shape))
    for i in range(d):
        out[sym_index(i, i, d)] = scale
    return out


def sym_outer(u, w=None):
    """Symmetrized outer product ½(u⊗w + w⊗u) (u⊗u when w is None)."""
    d = u.shape[0]
    if w is None:
        return np.stack([u[i] * u[j] for i, j in sym_pairs(d)])
    return np.stack([0.5 * (u[i] * w[j] + w[i] * u[j]) for i, j in sym_pairs(d)])


def is_traceless(packed, d, rtol=1e-12):
    tr = np.abs(sym_trace(packed, d))
    return bool(np.all(tr <= rtol * (sym_frobenius(packed, d) + 1.0)))


@dataclass(frozen=True)
class TorusGrid:
    """Uniform collocated grid on the flat torus ``[-1, 1]^d``.

    Parameters
    ----------
    d : int
        Spatial dimension, 2 or 3.
    n : int
        Points per axis, a power of two, at least 8.
    """

    d: int
    n: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")

    @property
    def h(self):
        return 2.0 / self.n

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def volume(self):
        return 2.0 ** self.d

    @property
    def cell_volume(self):
        return self.h ** self.d

    @cached_property
    def x(self):
        """Coordinate arrays, one per axis, each of shape ``self.shape``."""
        x1 = -1.0 + self.h * np.arange(self.n)
        return np.array(np.meshgrid(*([x1] * self.d), indexing="ij"))

    @cached_property
    def _int_modes(self):
        # integer mode numbers for the rfftn layout; last axis is halved
        full = np.fft.fftfreq(self.n, d=1.0 / self.n)
        half = np.fft.rfftfreq(self.n, d=1.0 / self.n)
        axes = [full] * (self.d - 1) + [half]
        return np.meshgrid(*axes, indexing="ij")

    @cached_property
    def wavenumbers(self):
        """Angular wavenumbers pi*k per axis; Nyquist zeroed (odd derivatives)."""
        ks = []
        for kk in self._int_modes:
            k = np.pi * kk
            k = np.where(np.abs(kk) == self.n // 2, 0.0, k)
            ks.append(k)
        return ks

    @cached_property
    def dealias_mask(self):
        """2/3-rule mask: keep modes with every |k_axis| <= n/3."""
        kc = self.n // 3
        keep = np.ones(self._int_modes[0].shape, dtype=bool)
        for kk in self._int_modes:
            keep &= np.abs(kk) <= kc
        return keep

    @cached_property
    def _tail_mask(self):
        kc = self.n // 3
        kmax = np.max(np.abs(np.array(self._int_modes)), axis=0)
        return self.dealias_mask & (kmax > (2 * kc) // 3)

    # transforms -------------------------------------------------------
    def fft(self, f):
        return np.fft.rfftn(f, axes=tuple(range(-self.d, 0)))

    def ifft(self, fh):
        return np.fft.irfftn(fh, s=self.shape, axes=tuple(range(-self.d, 0)))

    def filter(self, f):
        """Apply the 2/3-rule truncation to a field (any leading component axes)."""
        return self.ifft(self.fft(f) * self.dealias_mask)

    # derivatives --------------------------------------------------------
    def diff(self, f, axis, dealias=False):
        fh = self.fft(f) * (1j * self.wavenumbers[axis])
        if dealias:
            fh = fh * self.dealias_mask
        return self.ifft(fh)

    def grad(self, f, dealias=False):
        fh = self.fft(f)
        mask = self.dealias_mask if dealias else 1.0
        return np.stack([self.ifft(1j * k * fh * mask) for k in self.wavenumbers])

    def div(self, v, dealias=False):
        vh = self.fft(v)
        out = sum(1j * self.wavenumbers[i] * vh[i] for i in range(self.d))
        if dealias:
            out = out * self.dealias_mask
        return self.ifft(out)

    def tensor_div(self, S, dealias=False):
        """Row divergence ``(div S)_i = sum_j d_j S_ij`` of a packed symmetric tensor."""
        Sh = self.fft(S)
        mask = self.dealias_mask if dealias else 1.0
        out = []
        for i in range(self.d):
            acc = sum(1j * self.wavenumbers[j] * Sh[sym_index(i, j, self.d)]
                      for j in range(self.d))
            out.append(self.ifft(acc * mask))
        return np.stack(out)

    def laplacian(self, f):
        # consistent with div(grad f): the Nyquist mode is annihilated
        k2 = sum(k ** 2 for k in self.wavenumbers)
        return self.ifft(-k2 * self.fft(f))

    # quadrature -----------------------------------------------------------
    def integrate(self, f):
        """Trapezoidal (= spectral) quadrature over the torus, last d axes."""
        return self.cell_volume * np.sum(f, axis=tuple(range(-self.d, 0)))

    def fourier_coefficients(self, f):
        """Normalized complex Fourier coefficients c_k (full fftn layout)."""
        return np.fft.fftn(f, axes=tuple(range(-self.d, 0))) / self.n ** self.d

    def tail_fraction(self, *fields):
        """Share of fluctuation energy in the outer third of the retained band."""
        tail = 0.0
        total = 0.0
        for f in fields:
            p = np.abs(self.fft(f)) ** 2
            # rfft halves the last axis; weight interior columns twice
            w = np.full(p.shape[-1], 2.0)
            w[0] = 1.0
            if self.n % 2 == 0:
                w[-1] = 1.0
            p = p * w
            zero = (slice(None),) * (p.ndim - self.d) + (0,) * self.d
            p[zero] = 0.0
            total += float(np.sum(p))
            tail += float(np.sum(p[..., self._tail_mask]))
        if total <= 1e-300:
            return 0.0
        return tail / total

    def evaluate_at(self, f, points):
        """Evaluate the trigonometric interpolant of ``f`` at off-grid points.

        ``points`` has shape ``(npts, d)``; the result has shape ``(npts,)``.
        """
        c = self.fourier_coefficients(f)
        kk = np.meshgrid(*([np.fft.fftfreq(self.n, d=1.0 / self.n)] * self.d), indexing="ij")
        kk = np.stack([k.ravel() for k in kk], axis=1)
        phase = np.exp(1j * np.pi * (np.asarray(points) + 1.0) @ kk.T)
        return np.real(phase @ c.ravel())


def pointwise_norm(f, grid):
    """|f| pointwise: abs for scalars, Euclidean norm over the leading axis for vectors."""
    f = np.asarray(f)
    if f.ndim == grid.d:
        return np.abs(f)
    return np.sqrt(np.sum(f ** 2, axis=0))


def lp_norm(f, grid, p=2):
    """Lᵖ norm on the torus by trapezoidal quadrature.

    Vector fields use the pointwise Euclidean norm. ``p = np.inf`` gives the
    sup over grid points.
    """
    a = pointwise_norm(f, grid)
    if np.isinf(p):
        return float(np.max(a))
    if p < 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    return float(grid.integrate(a ** p) ** (1.0 / p))


def sobolev_norm(f, grid, k):
    """W^{k,2} norm computed from Fourier coefficients.

    Uses the weight ``sum_{j<=k} |xi|^{2j}``, i.e. the sum of squared L² norms
    of the full derivative tensors of order 0..k.
    """
    if k < 0 or int(k) != k:
        raise ValueError(f"Sobolev index must be a nonnegative integer, got {k}")
    f = np.asarray(f)
    c = grid.fourier_coefficients(f)
    kk = np.meshgrid(*([np.pi * np.fft.fftfreq(grid.n, d=1.0 / grid.n)] * grid.d),
                     indexing="ij")
    xi2 = sum(q ** 2 for q in kk)
    w = sum(xi2 ** j for j in range(int(k) + 1))
    power = np.abs(c) ** 2
    if f.ndim > grid.d:
        power = np.sum(power, axis=tuple(range(f.ndim - grid.d)))
    return float(np.sqrt(grid.volume * np.sum(w * power)))


@dataclass
class FlowState:
    """Density and momentum on a grid at a given time."""

    grid: TorusGrid
    rho: np.ndarray
    m: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.m = np.asarray(self.m, dtype=float)
        if self.rho.shape != self.grid.shape:
            raise ValueError(f"density shape {self.rho.shape} != grid {self.grid.shape}")
        if self.m.shape != (self.grid.d,) + self.grid.shape:
            raise ValueError(f"momentum shape {self.m.shape} does not match grid")

    @property
    def u(self):
        return self.m / self.rho

    @classmethod
    def constant(cls, grid, rho, m, time=0.0):
        rho_f = np.full(grid.shape, float(rho))
        m_f = np.stack([np.full(grid.shape, float(mi)) for mi in m])
        return cls(grid, rho_f, m_f, time)
