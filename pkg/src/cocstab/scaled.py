"""Overflow-safe matrices stored as (unit-norm factor, log-scale accumulator).

Long products of d x d matrices over- or underflow double precision after a
few hundred factors.  A ScaledMatrix keeps the represented matrix as
``exp(logscale) * unit`` where ``unit`` has spectral norm in [1/2, 2], so
products of millions of factors stay representable and the log of the
operator norm is available exactly as ``logscale + log ||unit||``.

The exactly-zero matrix is carried with a ``-inf`` log-norm sentinel that
propagates absorbingly through products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Rescale only when the unit factor's norm leaves this band; within the band
# the logscale accumulator is untouched and stays exact.
_BAND_LO = 0.5
_BAND_HI = 2.0


def spectral_norm(matrix: np.ndarray) -> float:
    """Largest singular value (the operator norm used throughout)."""
    if matrix.size == 1:
        return abs(float(matrix.reshape(())))
    return float(np.linalg.norm(matrix, 2))


def spectral_radius(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


@dataclass(frozen=True)
class ScaledMatrix:
    """A d x d matrix represented as exp(logscale) * unit."""

    unit: np.ndarray
    logscale: float

    @staticmethod
    def identity(dim: int) -> "ScaledMatrix":
        return ScaledMatrix(np.eye(dim), 0.0)

    @staticmethod
    def zero(dim: int) -> "ScaledMatrix":
        return ScaledMatrix(np.zeros((dim, dim)), float("-inf"))

    @staticmethod
    def from_matrix(matrix: np.ndarray) -> "ScaledMatrix":
        matrix = np.asarray(matrix, dtype=float)
        nrm = spectral_norm(matrix)
        if nrm == 0.0:
            return ScaledMatrix.zero(matrix.shape[0])
        if _BAND_LO <= nrm <= _BAND_HI:
            return ScaledMatrix(matrix.copy(), 0.0)
        return ScaledMatrix(matrix / nrm, float(np.log(nrm)))

    @property
    def dim(self) -> int:
        return self.unit.shape[0]

    @property
    def is_zero(self) -> bool:
        return not np.any(self.unit)

    @property
    def log_norm(self) -> float:
        """log of the spectral norm; -inf for the zero matrix."""
        if self.is_zero:
            return float("-inf")
        return self.logscale + float(np.log(spectral_norm(self.unit)))

    @property
    def log_spectral_radius(self) -> float:
        if self.is_zero:
            return float("-inf")
        rho = spectral_radius(self.unit)
        if rho == 0.0:
            return float("-inf")
        return self.logscale + float(np.log(rho))

    def to_matrix(self) -> np.ndarray:
        if self.is_zero:
            return np.zeros_like(self.unit)
        return np.exp(self.logscale) * self.unit

    def left_multiply(self, factor: np.ndarray) -> "ScaledMatrix":
        """Return factor @ self, renormalized.  New factors enter on the left."""
        if self.is_zero:
            return ScaledMatrix.zero(self.dim)
        product = np.asarray(factor, dtype=float) @ self.unit
        return _renormalized(product, self.logscale)

    def matmul(self, other: "ScaledMatrix") -> "ScaledMatrix":
        """Return self @ other, renormalized."""
        if self.is_zero or other.is_zero:
            return ScaledMatrix.zero(self.dim)
        product = self.unit @ other.unit
        return _renormalized(product, self.logscale + other.logscale)

    def __matmul__(self, other: "ScaledMatrix") -> "ScaledMatrix":
        return self.matmul(other)

    def apply(self, vector: np.ndarray) -> tuple[np.ndarray, float]:
        """Return (unit vector, log magnitude) of self @ vector."""
        vector = np.asarray(vector, dtype=float)
        vnorm = float(np.linalg.norm(vector))
        if vnorm == 0.0 or self.is_zero:
            return np.zeros_like(vector), float("-inf")
        image = self.unit @ (vector / vnorm)
        inorm = float(np.linalg.norm(image))
        if inorm == 0.0:
            return np.zeros_like(vector), float("-inf")
        return image / inorm, self.logscale + float(np.log(vnorm)) + float(np.log(inorm))


def _renormalized(matrix: np.ndarray, logscale: float) -> ScaledMatrix:
    nrm = spectral_norm(matrix)
    if nrm == 0.0:
        return ScaledMatrix.zero(matrix.shape[0])
    if _BAND_LO <= nrm <= _BAND_HI:
        return ScaledMatrix(matrix, logscale)
    return ScaledMatrix(matrix / nrm, logscale + float(np.log(nrm)))


def relative_difference(a: ScaledMatrix, b: ScaledMatrix) -> float:
    """||a - b|| / max(||a||, ||b||), computed without leaving log scale range.

    Returns 0 when both are zero; +inf when exactly one is zero.
    """
    if a.is_zero and b.is_zero:
        return 0.0
    if a.is_zero or b.is_zero:
        return float("inf")
    ref = max(a.log_norm, b.log_norm)
    am = np.exp(a.logscale - ref) * a.unit
    bm = np.exp(b.logscale - ref) * b.unit
    return spectral_norm(am - bm)
