"""Interpolation data: points and tangential directions."""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ValidationError


@dataclass(frozen=True)
class InterpolationData:
    """Right data ``(sigma_j, b_j)`` and left data ``(mu_i, c_i)``.

    `right_dirs` is ``m x n_p`` (column j is ``b_j``), `left_dirs` is
    ``n_q x p`` (row i is ``c_i``). Either may be ``None`` for block mode,
    in which case the directions are identity blocks.
    """

    right_points: np.ndarray
    left_points: np.ndarray
    right_dirs: np.ndarray = None
    left_dirs: np.ndarray = None

    def __post_init__(self):
        sig = np.atleast_1d(np.asarray(self.right_points, dtype=complex))
        mu = np.atleast_1d(np.asarray(self.left_points, dtype=complex))
        object.__setattr__(self, "right_points", sig)
        object.__setattr__(self, "left_points", mu)
        if self.right_dirs is not None:
            b = np.asarray(self.right_dirs)
            if b.ndim == 1:
                b = b.reshape(1, -1)
            if b.shape[1] != sig.size:
                raise DimensionMismatch(
                    f"{sig.size} right points but {b.shape[1]} directions")
            if np.any(np.linalg.norm(b, axis=0) == 0):
                raise ValidationError("zero right direction")
            object.__setattr__(self, "right_dirs", b)
        if self.left_dirs is not None:
            c = np.asarray(self.left_dirs)
            if c.ndim == 1:
                c = c.reshape(-1, 1)
            if c.shape[0] != mu.size:
                raise DimensionMismatch(
                    f"{mu.size} left points but {c.shape[0]} directions")
            if np.any(np.linalg.norm(c, axis=1) == 0):
                raise ValidationError("zero left direction")
            object.__setattr__(self, "left_dirs", c)

    @classmethod
    def symmetric(cls, points, right_dirs=None, left_dirs=None):
        """Same points on both sides, as IRKA uses."""
        return cls(points, points, right_dirs, left_dirs)

    @property
    def r(self):
        return self.right_points.size

    @property
    def is_block(self):
        return self.right_dirs is None and self.left_dirs is None

    def normalized(self):
        """Copy with unit-norm directions."""
        b, c = self.right_dirs, self.left_dirs
        if b is not None:
            b = b / np.linalg.norm(b, axis=0, keepdims=True)
        if c is not None:
            c = c / np.linalg.norm(c, axis=1, keepdims=True)
        return InterpolationData(self.right_points, self.left_points, b, c)

    def right_matrices(self, m):
        """``(S_b, L_b)``; block mode expands to ``diag(sigma) kron I_m``."""
        if self.right_dirs is None:
            S = np.kron(np.diag(self.right_points), np.eye(m))
            L = np.kron(np.ones((1, self.right_points.size)), np.eye(m))
            return S, L.astype(complex)
        return np.diag(self.right_points), self.right_dirs.astype(complex)

    def left_matrices(self, p):
        """``(S_c, L_c)`` with ``L_c`` stacking the rows ``c_i``."""
        if self.left_dirs is None:
            S = np.kron(np.diag(self.left_points), np.eye(p))
            L = np.kron(np.ones((self.left_points.size, 1)), np.eye(p))
            return S, L.astype(complex)
        return np.diag(self.left_points), self.left_dirs.astype(complex)
