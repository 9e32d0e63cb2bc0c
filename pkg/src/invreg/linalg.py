"""Dense linear-algebra primitives.

Kronecker products, column-stacking vectorization, commutation permutations,
Cholesky-backed SPD solves, matrix-normal sampling, chi-square quantiles and
ellipsoids. Everything downstream is written against these routines so the
numerical conventions (column-stacking vec, covariance-form ellipsoid shape)
are fixed in exactly one place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import brentq
from scipy.special import gammainc, gammaln, ndtri

from .exceptions import SingularMatrixError
from .validation import as_matrix, as_vector, check_spd

__all__ = [
    "kron",
    "vec",
    "unvec",
    "CommutationMatrix",
    "commutation_matrix",
    "sample_matrix_normal",
    "chi2_quantile",
    "spd_cholesky",
    "spd_solve",
    "spd_inverse",
    "spd_logdet",
    "Ellipsoid",
    "ellipsoid_volume",
]


# ---------------------------------------------------------------------------
# Kronecker products and vectorization
# ---------------------------------------------------------------------------

def kron(a, b) -> np.ndarray:
    """Kronecker product of two matrices.

    Block structure: the (i, j) block of the result is ``a[i, j] * b``.
    Satisfies the mixed-product property kron(a, b) @ kron(c, d) =
    kron(a @ c, b @ d) whenever the factors conform.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    return np.kron(a, b)


def vec(m) -> np.ndarray:
    """Stack the columns of a matrix into one vector (column-stacking order)."""
    m = as_matrix(m, "m")
    return m.reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`: rebuild a ``rows x cols`` matrix from a vector."""
    v = as_vector(v, "v")
    if v.shape[0] != rows * cols:
        raise ValueError(
            f"cannot reshape a vector of length {v.shape[0]} into {rows}x{cols}"
        )
    return v.reshape((rows, cols), order="F")


@dataclass(frozen=True)
class CommutationMatrix:
    """Permutation sending vec(M) to vec(M.T) for ``rows x cols`` matrices.

    Stored as an index array and applied in O(rows*cols); the dense matrix is
    materialized only on explicit request. The inverse equals the transpose
    and is the commutation permutation with the dimensions swapped.
    """

    rows: int
    cols: int
    perm: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")
        idx = np.arange(self.rows * self.cols)
        # Output slot a = j + cols*i holds input slot i + rows*j, i.e. the
        # (i, j) entry of M read in the transposed layout.
        perm = (idx // self.cols) + self.rows * (idx % self.cols)
        object.__setattr__(self, "perm", perm)

    @property
    def dim(self) -> int:
        return self.rows * self.cols

    def apply(self, v) -> np.ndarray:
        """Return the permuted vector, vec(M.T) given v = vec(M)."""
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.dim:
            raise ValueError(f"vector length {v.shape[0]} != {self.dim}")
        return v[self.perm]

    def apply_to_rows(self, m) -> np.ndarray:
        """Left-multiply: returns T @ m without densifying T."""
        m = np.asarray(m, dtype=float)
        return m[self.perm]

    def apply_to_cols(self, m) -> np.ndarray:
        """Right-multiply: returns m @ T without densifying T."""
        m = np.asarray(m, dtype=float)
        return m[:, np.argsort(self.perm)]

    def transpose(self) -> "CommutationMatrix":
        """The inverse permutation (= the commutation with swapped dims)."""
        return CommutationMatrix(self.cols, self.rows)

    def dense(self) -> np.ndarray:
        """Materialize the permutation as a 0/1 matrix (explicit request only)."""
        return np.eye(self.dim)[self.perm]


def commutation_matrix(rows: int, cols: int) -> CommutationMatrix:
    """Commutation permutation for ``rows x cols`` matrices."""
    return CommutationMatrix(rows, cols)


# ---------------------------------------------------------------------------
# SPD factorizations
# ---------------------------------------------------------------------------

def spd_cholesky(s, name: str = "matrix"):
    """Cholesky factorization of an SPD matrix, raising a named error on failure."""
    s = check_spd(s, name)
    try:
        return cho_factor(s, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"{name} is not positive definite: {exc}") from exc


def spd_solve(s, b, name: str = "matrix") -> np.ndarray:
    """Solve s @ x = b for SPD s via Cholesky."""
    factor = spd_cholesky(s, name)
    b = np.asarray(b, dtype=float)
    return cho_solve(factor, b, check_finite=False)


def spd_inverse(s, name: str = "matrix") -> np.ndarray:
    """Inverse of an SPD matrix via Cholesky, symmetrized."""
    s = check_spd(s, name)
    inv = spd_solve(s, np.eye(s.shape[0]), name)
    return (inv + inv.T) / 2.0


def spd_logdet(s, name: str = "matrix") -> float:
    """Log-determinant of an SPD matrix via Cholesky."""
    factor, _ = spd_cholesky(s, name)
    return float(2.0 * np.sum(np.log(np.diag(factor))))


# ---------------------------------------------------------------------------
# Matrix-normal sampling
# ---------------------------------------------------------------------------

def sample_matrix_normal(mean, row_cov, col_cov, rng: np.random.Generator) -> np.ndarray:
    """Draw one matrix-normal sample with separable covariance.

    Returns mean + chol(row_cov) @ Z @ chol(col_cov).T with Z iid standard
    normal, so vec of the sample has covariance kron(col_cov, row_cov) under
    column stacking.
    """
    mean = as_matrix(mean, "mean")
    r, c = mean.shape
    row_cov = check_spd(row_cov, "row_cov")
    col_cov = check_spd(col_cov, "col_cov")
    if row_cov.shape[0] != r:
        raise ValueError(f"row_cov must be {r}x{r}, got {row_cov.shape}")
    if col_cov.shape[0] != c:
        raise ValueError(f"col_cov must be {c}x{c}, got {col_cov.shape}")
    lu, _ = spd_cholesky(row_cov, "row_cov")
    lv, _ = spd_cholesky(col_cov, "col_cov")
    lu = np.tril(lu)
    lv = np.tril(lv)
    z = rng.standard_normal((r, c))
    return mean + lu @ z @ lv.T


# ---------------------------------------------------------------------------
# Chi-square quantiles
# ---------------------------------------------------------------------------

def _chi2_cdf(x: float, df: int) -> float:
    # Regularized lower incomplete gamma is the chi-square CDF.
    return float(gammainc(df / 2.0, x / 2.0))


def chi2_quantile(df: int, p: float) -> float:
    """Inverse CDF of the chi-square distribution.

    Root-find on the regularized incomplete gamma with a Wilson-Hilferty
    starting point, absolute tolerance 1e-10.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    df = int(df)
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    # Wilson-Hilferty: the cube-root of a chi-square is close to normal.
    z = float(ndtri(p))
    guess = df * (1.0 - 2.0 / (9.0 * df) + z * np.sqrt(2.0 / (9.0 * df))) ** 3
    hi = max(guess, 1.0)
    while _chi2_cdf(hi, df) <= p:
        hi *= 2.0
    return float(
        brentq(lambda x: _chi2_cdf(x, df) - p, 0.0, hi, xtol=1e-10, rtol=8.9e-16)
    )


# ---------------------------------------------------------------------------
# Ellipsoids
# ---------------------------------------------------------------------------

@dataclass
class Ellipsoid:
    """Region {y : (y - center)' shape^-1 (y - center) <= radius2}.

    The covariance-form ``shape`` is stored; its Cholesky factor is computed
    lazily at the first membership test and cached.
    """

    center: np.ndarray
    shape: np.ndarray
    radius2: float

    def __post_init__(self) -> None:
        self.center = as_vector(self.center, "center")
        k = self.center.shape[0]
        self.shape = check_spd(self.shape, "shape")
        if self.shape.shape[0] != k:
            raise ValueError(f"shape must be {k}x{k}, got {self.shape.shape}")
        self.radius2 = float(self.radius2)
        if self.radius2 <= 0:
            raise ValueError(f"radius2 must be positive, got {self.radius2}")
        self._factor = None

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def _shape_factor(self):
        if self._factor is None:
            self._factor = spd_cholesky(self.shape, "shape")
        return self._factor

    def statistic(self, y) -> float:
        """Quadratic form (y - center)' shape^-1 (y - center)."""
        y = as_vector(y, "y", length=self.dim)
        z = y - self.center
        return float(z @ cho_solve(self._shape_factor(), z, check_finite=False))

    def contains(self, y) -> bool:
        return self.statistic(y) <= self.radius2

    def volume(self) -> float:
        return ellipsoid_volume(self)

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "shape": self.shape.tolist(),
            "radius2": self.radius2,
        }


def ellipsoid_volume(e: Ellipsoid) -> float:
    """Lebesgue volume of the ellipsoid.

    volume = pi^(k/2) / Gamma(k/2 + 1) * radius2^(k/2) * det(shape)^(1/2),
    evaluated in log space for stability at large k.
    """
    k = e.dim
    logdet = spd_logdet(e.shape, "shape")
    log_vol = (
        0.5 * k * np.log(np.pi * e.radius2)
        - gammaln(0.5 * k + 1.0)
        + 0.5 * logdet
    )
    return float(np.exp(log_vol))
