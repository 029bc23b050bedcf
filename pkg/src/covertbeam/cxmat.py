"""Dense complex linear algebra helpers.

Everything operates on plain ``numpy`` arrays: vectors are 1-D complex arrays,
Hermitian matrices are 2-D complex arrays.  The module provides the few
primitives the rest of the package is built on: conjugate outer products,
Hermitian eigendecomposition, orthogonal-complement projectors and the
complex-to-real symmetric embedding used by the conic solver.
"""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidInputError

__all__ = [
    "outer",
    "eig_hermitian",
    "null_projector",
    "real_embed",
    "real_extract",
    "herm",
    "hermiticity_error",
    "require_hermitian",
]

# Relative Hermitian-symmetry tolerance for input validation.
HERM_TOL = 1e-12


def herm(m: np.ndarray) -> np.ndarray:
    """Symmetrize a nearly-Hermitian matrix: (M + M^H) / 2."""
    m = np.asarray(m, dtype=complex)
    return 0.5 * (m + m.conj().T)


def hermiticity_error(m: np.ndarray) -> float:
    """Max-entry deviation of M from its Hermitian part."""
    m = np.asarray(m, dtype=complex)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def require_hermitian(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate Hermitian symmetry (relative to scale) and return the symmetrized matrix."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 0.0)
    if hermiticity_error(m) > HERM_TOL * scale * m.shape[0]:
        raise InvalidInputError(f"{name} is not Hermitian within tolerance")
    return herm(m)


def outer(v: np.ndarray) -> np.ndarray:
    """Conjugate outer product v v^H (PSD, rank <= 1)."""
    v = np.asarray(v, dtype=complex).ravel()
    return np.outer(v, v.conj())


def eig_hermitian(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with the real eigenvalues sorted in
    descending order and the matching orthonormal eigenvectors as columns.
    Raises :class:`InvalidInputError` for inputs that are not Hermitian within
    tolerance.
    """
    m = require_hermitian(m, "eig_hermitian input")
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def null_projector(columns: list[np.ndarray] | np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the orthogonal complement of span(columns).

    Built from an orthonormal basis of the column span (modified Gram-Schmidt
    with one re-orthogonalization pass; vectors whose residual norm falls below
    1e-12 of their original norm are treated as dependent and dropped), so the
    result is an exact projector even for non-orthogonal inputs: P = P^H,
    P^2 = P and P @ c = 0 for every input column c.
    """
    cols = [np.asarray(c, dtype=complex).ravel() for c in columns]
    if not cols:
        raise InvalidInputError("null_projector requires at least one column")
    dim = cols[0].size
    if any(c.size != dim for c in cols):
        raise InvalidInputError("null_projector columns must share one dimension")

    basis: list[np.ndarray] = []
    for c in cols:
        nrm0 = np.linalg.norm(c)
        if nrm0 == 0.0:
            continue
        u = c.copy()
        for _ in range(2):  # re-orthogonalize once for numerical safety
            for b in basis:
                u = u - (b.conj() @ u) * b
        nrm = np.linalg.norm(u)
        if nrm < 1e-12 * nrm0:
            continue  # linearly dependent on earlier columns
        basis.append(u / nrm)

    p = np.eye(dim, dtype=complex)
    for b in basis:
        p -= np.outer(b, b.conj())
    return herm(p)


def real_embed(m: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re M, -Im M], [Im M, Re M]] of a Hermitian M.

    The embedding doubles every eigenvalue's multiplicity, so M is PSD exactly
    when its embedding is PSD; this is what lets the interior-point solver run
    in real arithmetic.
    """
    m = np.asarray(m, dtype=complex)
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


def real_extract(s: np.ndarray) -> np.ndarray:
    """Inverse of :func:`real_embed` with symmetrization.

    Averages the two diagonal blocks and antisymmetrizes the off-diagonal
    blocks, so near-embeddings (e.g. solver iterates) map to the closest
    Hermitian matrix.
    """
    s = np.asarray(s, dtype=float)
    n2 = s.shape[0]
    if n2 % 2:
        raise InvalidInputError("real_extract expects an even-dimensional matrix")
    n = n2 // 2
    a, b = s[:n, :n], s[:n, n:]
    c, d = s[n:, :n], s[n:, n:]
    re = 0.5 * (a + d)
    im = 0.5 * (c - b)
    return herm(re + 1j * im)
