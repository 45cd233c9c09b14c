"""Matricizations of 4-d monochromatic tensors and the masked measurement
operator built on top of them.

A monochromatic slice lives on the acquisition grid ``(rx, ry, sx, sy)``.
Two unfoldings into a matrix are supported; both index maps are zero-based
with the fastest-varying index first, and they are frozen here because the
whole test-suite depends on them:

    srcpair   row = rx + ry * n_rx      col = sx + sy * n_sx
    recsrcx   row = ry + sy * n_ry      col = rx + sx * n_rx

"srcpair" is the acquisition layout itself (receivers on rows, sources on
columns); removing a source empties a whole column.  "recsrcx" mixes source
and receiver indices across rows and columns, which is what gives coherent
data a fast-decaying singular spectrum while scattering the missing entries.

The measurement operator composes the mask with the change of unfolding:
``measure(Z) = mask * to_acquisition(Z)``.  Because the re-unfolding is a
pure permutation and the mask a coordinate projection, the operator norm is
at most 1, with equality whenever the mask is nonempty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import SamplingMask
from .volume import AxisLayoutError, ComplexVolume, FrequencySlice, SPATIAL_AXES

MODE_SRC_PAIR = "srcpair"
MODE_REC_SRC_X = "recsrcx"
MODES = (MODE_SRC_PAIR, MODE_REC_SRC_X)


@dataclass(frozen=True)
class Matricization:
    """Unfolding of an ``(n_rx, n_ry, n_sx, n_sy)`` tensor into a matrix."""

    mode: str
    n_rx: int
    n_ry: int
    n_sx: int
    n_sy: int

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        for e in self.extents:
            if e < 1:
                raise ValueError("all extents must be positive")

    @property
    def extents(self) -> tuple:
        return (self.n_rx, self.n_ry, self.n_sx, self.n_sy)

    @property
    def shape(self) -> tuple:
        """(rows, cols) of the unfolded matrix."""
        if self.mode == MODE_SRC_PAIR:
            return (self.n_rx * self.n_ry, self.n_sx * self.n_sy)
        return (self.n_ry * self.n_sy, self.n_rx * self.n_sx)

    def unfold(self, tensor: np.ndarray) -> np.ndarray:
        tensor = np.asarray(tensor)
        if tensor.shape != self.extents:
            raise AxisLayoutError(
                f"tensor shape {tensor.shape} does not match extents {self.extents}"
            )
        if self.mode == MODE_SRC_PAIR:
            # (ry, rx, sy, sx) in C order makes rx/sx the fast indices.
            return tensor.transpose(1, 0, 3, 2).reshape(self.shape)
        return tensor.transpose(3, 1, 2, 0).reshape(self.shape)

    def fold(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix)
        if matrix.shape != self.shape:
            raise AxisLayoutError(
                f"matrix shape {matrix.shape} does not match unfolding {self.shape}"
            )
        if self.mode == MODE_SRC_PAIR:
            interim = matrix.reshape(self.n_ry, self.n_rx, self.n_sy, self.n_sx)
            return interim.transpose(1, 0, 3, 2)
        interim = matrix.reshape(self.n_sy, self.n_ry, self.n_sx, self.n_rx)
        return interim.transpose(3, 1, 2, 0)


def spatial_block(vol: ComplexVolume) -> np.ndarray:
    """The 4-d spatial array of a one-bin volume, in (rx, ry, sx, sy) order."""
    missing = [a for a in SPATIAL_AXES if not vol.has_axis(a)]
    if missing:
        raise AxisLayoutError(f"volume lacks spatial axes {missing}")
    spectral = [a for a in vol.axes if a not in SPATIAL_AXES]
    arr = vol.reordered(tuple(spectral) + SPATIAL_AXES).data
    return arr.reshape(arr.shape[-4:])


def unfold(tensor: np.ndarray, matricization: Matricization) -> np.ndarray:
    return matricization.unfold(tensor)


def fold(matrix: np.ndarray, matricization: Matricization) -> np.ndarray:
    return matricization.fold(matrix)


def _mask_matrix(mask: SamplingMask) -> np.ndarray:
    """Mask grid in acquisition (srcpair) matrix layout."""
    if mask.grid.ndim == 2:
        return mask.grid
    if mask.grid.ndim == 4:
        m = Matricization(MODE_SRC_PAIR, *mask.grid.shape)
        return m.unfold(mask.grid)
    raise ValueError(f"cannot lay out a {mask.grid.ndim}-d mask as a matrix")


def apply_sampling(mask: SamplingMask, data: np.ndarray) -> np.ndarray:
    """Zero every entry outside the observed set.  Idempotent, self-adjoint."""
    omega = _mask_matrix(mask)
    data = np.asarray(data)
    if data.shape != omega.shape:
        raise ValueError(f"data shape {data.shape} != mask shape {omega.shape}")
    return np.where(omega, data, 0)


class MeasurementOp:
    """Sampling-plus-transform operator from factor domain to data domain.

    ``forward`` maps a factor-domain matrix (the chosen unfolding, shape
    ``factor_shape``) to the masked acquisition-layout matrix (shape
    ``data_shape``); ``adjoint`` is its exact adjoint.  With no
    matricization (2-d masks), the transform is the identity and the
    operator is the bare coordinate projection.
    """

    def __init__(self, mask: SamplingMask, matricization: Matricization | None = None):
        self.mask = mask
        self.matricization = matricization
        if matricization is None:
            if mask.grid.ndim != 2:
                raise ValueError("a 4-d mask requires a matricization")
            self._acq = None
            self.factor_shape = mask.grid.shape
            self.data_shape = mask.grid.shape
        else:
            if mask.grid.ndim != 4 or mask.grid.shape != matricization.extents:
                raise ValueError(
                    f"mask grid {mask.grid.shape} does not match "
                    f"matricization extents {matricization.extents}"
                )
            self._acq = Matricization(MODE_SRC_PAIR, *matricization.extents)
            self.factor_shape = matricization.shape
            self.data_shape = self._acq.shape
        self.observed = _mask_matrix(mask)

    def to_acquisition(self, Z: np.ndarray) -> np.ndarray:
        """Transform only (no masking): factor domain -> acquisition layout."""
        Z = np.asarray(Z)
        if Z.shape != self.factor_shape:
            raise ValueError(f"expected factor shape {self.factor_shape}, got {Z.shape}")
        if self.matricization is None:
            return Z
        return self._acq.unfold(self.matricization.fold(Z))

    def from_acquisition(self, W: np.ndarray) -> np.ndarray:
        """Transform only: acquisition layout -> factor domain."""
        W = np.asarray(W)
        if W.shape != self.data_shape:
            raise ValueError(f"expected data shape {self.data_shape}, got {W.shape}")
        if self.matricization is None:
            return W
        return self.matricization.unfold(self._acq.fold(W))

    def forward(self, Z: np.ndarray) -> np.ndarray:
        return np.where(self.observed, self.to_acquisition(Z), 0)

    def adjoint(self, W: np.ndarray) -> np.ndarray:
        W = np.asarray(W)
        if W.shape != self.data_shape:
            raise ValueError(f"expected data shape {self.data_shape}, got {W.shape}")
        return self.from_acquisition(np.where(self.observed, W, 0))

    def hermitian_flip(self) -> "_HermitianFlip":
        """View of the operator acting on conjugate-transposed arguments.

        Solving the R-factor subproblem reuses the L-factor solver through
        this view: ||A(L R^H) - b|| equals ||flip(R L^H) - b^H||.
        """
        return _HermitianFlip(self)


class _HermitianFlip:
    """Conjugate-transpose view of a measurement operator."""

    def __init__(self, base):
        self.base = base
        self.factor_shape = base.factor_shape[::-1]
        self.data_shape = base.data_shape[::-1]

    def forward(self, V: np.ndarray) -> np.ndarray:
        return self.base.forward(np.conj(V).T).conj().T

    def adjoint(self, W: np.ndarray) -> np.ndarray:
        return self.base.adjoint(np.conj(W).T).conj().T

    def hermitian_flip(self):
        return self.base


def singular_decay(slice_or_matrix) -> np.ndarray:
    """Singular values sorted descending and normalized by the largest.

    Dense SVD; diagnostics only, never called from solver paths.
    """
    if isinstance(slice_or_matrix, FrequencySlice):
        X = slice_or_matrix.data
    else:
        X = np.asarray(slice_or_matrix)
    if X.ndim != 2 or X.size == 0:
        raise ValueError("singular_decay expects a nonempty matrix")
    s = np.linalg.svd(X, compute_uv=False)
    if s[0] > 0:
        s = s / s[0]
    return s
