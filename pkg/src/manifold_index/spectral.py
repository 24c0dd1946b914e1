"""Sparse symmetric generalized eigensolver for the operator pair (W, A).

Solves W phi = lambda A phi for the p algebraically smallest eigenpairs.
A is positive diagonal, so the problem maps to the ordinary symmetric one
C y = lambda y with C = A^{-1/2} W A^{-1/2} and phi = A^{-1/2} y; the
A-inner product of the phi's is the plain inner product of the y's, which
keeps the returned basis A-orthonormal for free.

Two production paths plus one verification path:

* dense path (n <= 300 by default): LAPACK's generalized symmetric-definite
  driver on the materialized pair.
* iterative path: Lanczos on C with full reorthogonalization, random
  restarts on breakdown (so later steps can pick up remaining eigenspace
  directions, including copies of repeated eigenvalues), and adaptive
  extension of the factorization until the requested pairs meet the
  residual tolerance.  At desk scale the basis may grow to n columns, at
  which point the factorization is exact.
* dense_oracle: an independent check that scales W by A^{-1/2} explicitly
  and calls the dense ordinary eigensolver; used by tests against both
  production paths.

Eigenvector signs are fixed so the entry of largest magnitude is positive;
downstream extrema detection is sign-invariant, this only stabilizes logs
and golden files.  For repeated eigenvalues any A-orthonormal basis of the
eigenspace is a valid answer.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import ConvergenceError, ParameterError, SizeError
from .manifold import MassMatrix, WeightMatrix

DENSE_CUTOFF = 300
ORACLE_GUARD = 2000

RESIDUAL_RTOL = 1e-8
_BREAKDOWN = 1e-13


@dataclass(frozen=True)
class EigenBasis:
    """Ascending eigenpairs: values[i] with column vectors[:, i]."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if self.vectors.shape[1] != len(self.values):
            raise ParameterError("vectors must have one column per eigenvalue")
        if np.any(np.diff(self.values) < 0):
            raise ParameterError("eigenvalues must be ascending")

    @property
    def count(self) -> int:
        return len(self.values)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def residuals(w: WeightMatrix, a: MassMatrix, basis: EigenBasis) -> np.ndarray:
    """Relative residuals ||W phi - lambda A phi|| / max(1, ||W phi||) per pair."""
    wphi = w.entries @ basis.vectors
    aphi = a.diag[:, None] * basis.vectors
    num = np.linalg.norm(wphi - basis.values[None, :] * aphi, axis=0)
    den = np.maximum(1.0, np.linalg.norm(wphi, axis=0))
    return num / den


def _check_pair(w: WeightMatrix, a: MassMatrix) -> int:
    n = w.n
    if a.n != n:
        raise ParameterError(f"W is {n}x{n} but A has {a.n} entries")
    return n


def dense_oracle(w: WeightMatrix, a: MassMatrix) -> EigenBasis:
    """All n eigenpairs via the explicit A^{-1/2} transform and a dense
    ordinary symmetric solve.  Verification path only; guarded at n <= 2000."""
    n = _check_pair(w, a)
    if n > ORACLE_GUARD:
        raise SizeError(f"dense oracle limited to n <= {ORACLE_GUARD}, got {n}")
    d = 1.0 / np.sqrt(a.diag)
    c = (d[:, None] * w.entries.toarray()) * d[None, :]
    values, y = np.linalg.eigh(c)
    phi = d[:, None] * y
    phi /= np.sqrt(a.diag @ (phi * phi))[None, :]
    return EigenBasis(values=values, vectors=_fix_signs(phi))


def _solve_dense(w: WeightMatrix, a: MassMatrix, p: int) -> EigenBasis:
    # LAPACK generalized driver; eigenvectors come back A-orthonormal.
    values, phi = sla.eigh(
        w.entries.toarray(), np.diag(a.diag), subset_by_index=(0, p - 1)
    )
    return EigenBasis(values=values, vectors=_fix_signs(phi))


def _lanczos_smallest(
    matvec,
    n: int,
    p: int,
    tol: float,
    max_steps: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Full-reorthogonalization Lanczos; returns the p smallest Ritz pairs.

    On breakdown (invariant subspace exhausted) a fresh random direction is
    injected with zero coupling, which turns T block-diagonal and lets the
    iteration pick up remaining eigenspace dimensions, including copies of
    repeated eigenvalues.  The factorization is checked at geometrically
    spaced checkpoints and extended until the p smallest Ritz residual
    bounds pass ``tol``; small problems simply run to exhaustion, where the
    factorization is exact.
    """
    m_max = min(max_steps, n)
    big_q = np.zeros((n, m_max))
    alphas = np.zeros(m_max)
    betas = np.zeros(m_max)

    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    beta_prev = 0.0
    m = 0
    checkpoint = m_max if m_max <= 160 else min(m_max, max(2 * p + 32, 48))

    while m < m_max:
        big_q[:, m] = q
        u = matvec(q)
        alphas[m] = q @ u
        r = u - alphas[m] * q
        if m > 0 and beta_prev != 0.0:
            r -= beta_prev * big_q[:, m - 1]
        # two reorthogonalization passes keep the basis orthonormal to ~eps
        for _ in range(2):
            r -= big_q[:, : m + 1] @ (big_q[:, : m + 1].T @ r)
        beta = float(np.linalg.norm(r))
        m += 1
        exhausted = False
        if beta < _BREAKDOWN:
            betas[m - 1] = 0.0
            r = rng.standard_normal(n)
            for _ in range(2):
                r -= big_q[:, :m] @ (big_q[:, :m].T @ r)
            beta = float(np.linalg.norm(r))
            if beta < _BREAKDOWN:
                exhausted = True  # numerically spanned all of R^n
            else:
                q = r / beta
                beta_prev = 0.0
        else:
            betas[m - 1] = beta
            q = r / beta
            beta_prev = beta

        if exhausted or m == m_max or m == checkpoint:
            if m >= p:
                theta, s = sla.eigh_tridiagonal(alphas[:m], betas[: m - 1])
                bound = np.abs(betas[m - 1] * s[m - 1, :p]) if not exhausted else np.zeros(p)
                scale = max(1.0, float(np.max(np.abs(theta))))
                if exhausted or m == m_max or np.all(bound <= tol * scale):
                    y = big_q[:, :m] @ s[:, :p]
                    y /= np.linalg.norm(y, axis=0)[None, :]
                    return theta[:p], y
            if exhausted:
                break
            checkpoint = min(m_max, int(checkpoint * 1.5) + 16)

    raise ConvergenceError(
        f"Lanczos exhausted {m} steps without producing {p} eigenpairs"
    )


def solve_generalized(
    w: WeightMatrix,
    a: MassMatrix,
    p: int,
    method: str = "auto",
    tol: float = 1e-10,
    max_steps: int | None = None,
    seed: int = 0,
) -> EigenBasis:
    """The p algebraically smallest eigenpairs of W phi = lambda A phi,
    ascending and A-orthonormal.

    ``method`` is ``auto`` (dense below n=300, Lanczos above), ``dense`` or
    ``lanczos``.  Raises ConvergenceError when the iterative path cannot
    push all requested pairs under the residual contract within
    ``max_steps`` Lanczos steps (default: n).
    """
    n = _check_pair(w, a)
    if not 1 <= p <= n:
        raise ParameterError(f"p must satisfy 1 <= p <= n, got p={p}, n={n}")
    if method not in ("auto", "dense", "lanczos"):
        raise ParameterError(f"unknown method {method!r}")
    if method == "auto":
        method = "dense" if n <= DENSE_CUTOFF else "lanczos"

    if method == "dense":
        basis = _solve_dense(w, a, p)
    else:
        d = 1.0 / np.sqrt(a.diag)
        entries = w.entries

        def matvec(v):
            return d * (entries @ (d * v))

        rng = np.random.default_rng(seed)
        theta, y = _lanczos_smallest(
            matvec, n, p, tol, n if max_steps is None else max_steps, rng
        )
        phi = d[:, None] * y
        phi /= np.sqrt(a.diag @ (phi * phi))[None, :]
        order = np.argsort(theta, kind="stable")
        basis = EigenBasis(values=theta[order], vectors=_fix_signs(phi[:, order]))

    res = residuals(w, a, basis)
    worst = float(res.max())
    if worst > RESIDUAL_RTOL:
        raise ConvergenceError("eigenpairs failed the residual contract", worst)
    return basis


def dump_eigenbasis(basis: EigenBasis, path) -> None:
    """CSV dump: ``index,eigenvalue,phi_1..phi_n`` with one row per pair."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "eigenvalue"] + [f"phi_{i + 1}" for i in range(basis.n)])
        for i in range(basis.count):
            writer.writerow([i, repr(float(basis.values[i]))]
                            + [repr(float(x)) for x in basis.vectors[:, i]])
