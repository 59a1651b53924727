"""Fourier-multiplier symbols and Galerkin matrices on the flat torus.

All operators act on ``L^2(T^n) (x) C^r`` and are represented in the basis
``e_k (x) f_a`` with ``k`` running over a :class:`FrequencyLattice` in its
canonical order; block ``(k', k)`` of a matrix is ``r x r``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .lattice import FrequencyLattice
from .potentials import Potential, coefficient_table, integrate_negative_part

MAX_DENSE_ROWS = 8000
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MultiplierSymbol:
    """Symbol ``sigma(xi)`` of a Fourier multiplier, evaluated at ``xi = 2 pi k``.

    kind
        ``"homogeneous"``: ``|xi|^s A``;
        ``"bessel"``: ``(1 + |xi|^2)^{s/2} A``;
        ``"angular"``: ``|xi|^s sum_alpha C_alpha w^alpha`` with ``w = xi/|xi|``.

    Homogeneous and angular kinds vanish at ``xi = 0`` (Moore-Penrose
    convention on the kernel of the Laplacian).
    """

    n: int
    s: float
    kind: str = "homogeneous"
    matrix: np.ndarray | None = None
    angular_terms: dict = field(default_factory=dict)
    r: int = 1

    def __post_init__(self):
        if self.kind not in ("homogeneous", "bessel", "angular"):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "angular":
            if not self.angular_terms:
                raise ValueError("angular symbol needs at least one term")
            terms = {}
            for alpha, c in self.angular_terms.items():
                alpha = tuple(int(a) for a in alpha)
                if len(alpha) != self.n or min(alpha) < 0:
                    raise ValueError(f"bad multi-index {alpha}")
                terms[alpha] = np.atleast_2d(np.asarray(c, dtype=complex))
            r = next(iter(terms.values())).shape[0]
            object.__setattr__(self, "angular_terms", terms)
            object.__setattr__(self, "r", r)
            object.__setattr__(self, "matrix", None)
        else:
            m = np.eye(self.r, dtype=complex) if self.matrix is None else np.atleast_2d(np.asarray(self.matrix, dtype=complex))
            object.__setattr__(self, "matrix", m)
            object.__setattr__(self, "r", m.shape[0])

    @property
    def order(self) -> float:
        return self.s

    @property
    def homogeneous(self) -> bool:
        return self.kind != "bessel"

    @property
    def is_scalar(self) -> bool:
        """True when the symbol is a scalar function times the identity."""
        if self.kind == "angular":
            return False
        return bool(np.array_equal(self.matrix, self.matrix[0, 0] * np.eye(self.r)))

    def angular_part(self, w: np.ndarray) -> np.ndarray:
        """Matrix factor at unit covectors ``w`` (shape (N, n)) -> (N, r, r)."""
        w = np.atleast_2d(w)
        if self.kind != "angular":
            return np.broadcast_to(self.matrix, (w.shape[0], self.r, self.r)).copy()
        out = np.zeros((w.shape[0], self.r, self.r), dtype=complex)
        for alpha, c in self.angular_terms.items():
            mono = np.prod(w ** np.asarray(alpha), axis=1)
            out += mono[:, None, None] * c[None]
        return out

    def at_xi(self, xi) -> np.ndarray:
        """Evaluate at real covectors ``xi`` of shape (N, n) -> (N, r, r)."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        norm = np.linalg.norm(xi, axis=1)
        if self.kind == "bessel":
            radial = (1.0 + norm**2) ** (self.s / 2.0)
            return radial[:, None, None] * self.matrix[None]
        zero = norm == 0
        safe = np.where(zero, 1.0, norm)
        radial = np.where(zero, 0.0, safe**self.s)
        w = xi / safe[:, None]
        return radial[:, None, None] * self.angular_part(w)

    def principal(self, w) -> np.ndarray:
        """Principal symbol on the unit cosphere."""
        w = np.atleast_2d(np.asarray(w, dtype=float))
        return self.angular_part(w)

    def radial_values(self, lattice: FrequencyLattice) -> np.ndarray:
        """Scalar radial factor at ``xi = 2 pi k`` for every lattice mode."""
        norm = 2.0 * np.pi * np.sqrt(lattice.norms_squared.astype(float))
        if self.kind == "bessel":
            return (1.0 + norm**2) ** (self.s / 2.0)
        safe = np.where(norm == 0, 1.0, norm)
        return np.where(norm == 0, 0.0, safe**self.s)

    def adjoint(self) -> "MultiplierSymbol":
        if self.kind == "angular":
            terms = {a: c.conj().T for a, c in self.angular_terms.items()}
            return MultiplierSymbol(self.n, self.s, "angular", angular_terms=terms)
        return MultiplierSymbol(self.n, self.s, self.kind, matrix=self.matrix.conj().T)

    def same_as(self, other: "MultiplierSymbol", tol: float = 1e-14) -> bool:
        if (self.n, self.s, self.kind, self.r) != (other.n, other.s, other.kind, other.r):
            return False
        if self.kind == "angular":
            keys = set(self.angular_terms) | set(other.angular_terms)
            z = np.zeros((self.r, self.r))
            return all(np.allclose(self.angular_terms.get(a, z), other.angular_terms.get(a, z), rtol=0, atol=tol)
                       for a in keys)
        return bool(np.allclose(self.matrix, other.matrix, rtol=0, atol=tol))

    def describe(self) -> dict:
        d = {"kind": self.kind, "s": self.s, "n": self.n, "r": self.r}
        if self.kind == "angular":
            d["terms"] = {str(a): c.tolist() for a, c in self.angular_terms.items()}
        elif not np.array_equal(self.matrix, np.eye(self.r)):
            d["matrix"] = np.asarray(self.matrix).tolist()
        return d


def laplacian_power(n: int, s: float, r: int = 1) -> MultiplierSymbol:
    """Symbol of ``Delta^{s/2}`` (also ``|D|^s`` for a Dirac-type operator)."""
    return MultiplierSymbol(n, s, "homogeneous", matrix=np.eye(r))


def bessel_power(n: int, s: float, r: int = 1) -> MultiplierSymbol:
    """Symbol of ``(1 + Delta)^{s/2}``."""
    return MultiplierSymbol(n, s, "bessel", matrix=np.eye(r))


def evaluate_symbol(sigma: MultiplierSymbol, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    single = k.ndim == 1
    out = sigma.at_xi(2.0 * np.pi * np.atleast_2d(k))
    return out[0] if single else out


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    lattice: FrequencyLattice
    r: int
    matrix: np.ndarray
    hermitian: bool
    provenance: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def block(self, kp, k) -> np.ndarray:
        i = self.lattice.index_of(kp) * self.r
        j = self.lattice.index_of(k) * self.r
        return self.matrix[i:i + self.r, j:j + self.r]


def _check_dense(lat: FrequencyLattice, r: int):
    rows = lat.count * r
    if rows > MAX_DENSE_ROWS:
        raise ValueError(f"dense assembly of {rows} rows exceeds the cap {MAX_DENSE_ROWS}")


def _difference_index(lat: FrequencyLattice) -> np.ndarray:
    # flat index of k' - k into a (4K+1)^n table centred at 2K
    side = 4 * lat.K + 1
    idx = np.zeros((lat.count, lat.count), dtype=np.int64)
    for i in range(lat.n):
        col = lat.modes[:, i]
        idx = idx * side + (col[:, None] - col[None, :] + 2 * lat.K)
    return idx


def convolution_blocks(u: Potential, lat: FrequencyLattice) -> tuple[np.ndarray, float]:
    """Blocks ``u_hat(k' - k)`` as an (N, N, r, r) array, plus coefficient accuracy."""
    table = coefficient_table(u, lat)
    flat = table.blocks.reshape(-1, u.r, u.r)
    return flat[_difference_index(lat)], table.accuracy


def _to_matrix(blocks: np.ndarray) -> np.ndarray:
    N, _, r, _ = blocks.shape
    return np.ascontiguousarray(blocks.transpose(0, 2, 1, 3).reshape(N * r, N * r))


def _symbol_blocks(sigma: MultiplierSymbol, lat: FrequencyLattice) -> np.ndarray:
    return sigma.at_xi(2.0 * np.pi * lat.modes.astype(float))


def build_qup(Q: MultiplierSymbol, u: Potential, P: MultiplierSymbol, lat: FrequencyLattice) -> TruncatedOperator:
    """Galerkin matrix of ``Q u P``: block ``(k', k) = Q(2 pi k') u_hat(k' - k) P(2 pi k)``."""
    if not (Q.n == P.n == u.n == lat.n):
        raise ValueError("dimension mismatch between symbols, potential and lattice")
    if not (Q.r == P.r == u.r):
        raise ValueError("rank mismatch between symbols and potential")
    _check_dense(lat, u.r)
    blocks, acc = convolution_blocks(u, lat)
    if Q.is_scalar and P.is_scalar:
        q = Q.radial_values(lat) * Q.matrix[0, 0]
        p = P.radial_values(lat) * P.matrix[0, 0]
        blocks = blocks * (q[:, None] * p[None, :])[:, :, None, None]
    else:
        qb = _symbol_blocks(Q, lat)
        pb = _symbol_blocks(P, lat)
        blocks = np.einsum("iab,ijbc,jcd->ijad", qb, blocks, pb, optimize=True)
    matrix = _to_matrix(blocks)
    hermitian = Q.same_as(P.adjoint()) and u.hermitian
    prov = {
        "operator": "QuP",
        "Q": Q.describe(),
        "P": P.describe(),
        "potential": type(u).__name__,
        "K": lat.K,
        "n": lat.n,
        "r": u.r,
        "coefficient_accuracy": acc,
    }
    return TruncatedOperator(lat, u.r, matrix, hermitian, prov)


def build_schrodinger(h: float, V: Potential, lat: FrequencyLattice) -> TruncatedOperator:
    """Galerkin matrix of ``h^n Delta^{n/2} + V``."""
    if h <= 0:
        raise ValueError("h must be positive")
    if not V.hermitian:
        raise ValueError("Schroedinger potential must be Hermitian")
    _check_dense(lat, V.r)
    blocks, acc = convolution_blocks(V, lat)
    matrix = _to_matrix(blocks)
    kinetic = kinetic_diagonal(h, lat)
    matrix[np.diag_indices_from(matrix)] += np.repeat(kinetic, V.r)
    prov = {"operator": "schrodinger", "h": h, "K": lat.K, "n": lat.n, "r": V.r, "coefficient_accuracy": acc}
    return TruncatedOperator(lat, V.r, matrix, True, prov)


def kinetic_diagonal(h: float, lat: FrequencyLattice) -> np.ndarray:
    """``h^n |2 pi k|^n`` for every lattice mode."""
    n = lat.n
    norm = 2.0 * np.pi * np.sqrt(lat.norms_squared.astype(float))
    return h**n * norm**n


def zero_mode_projector(lat: FrequencyLattice, r: int = 1) -> TruncatedOperator:
    """Orthogonal projection onto the constants (``ker Delta``) tensor ``C^r``."""
    dim = lat.count * r
    if dim > MAX_DENSE_ROWS:
        raise ValueError(f"dense assembly of {dim} rows exceeds the cap {MAX_DENSE_ROWS}")
    matrix = np.zeros((dim, dim), dtype=complex)
    z = lat.index_of((0,) * lat.n) * r
    matrix[z:z + r, z:z + r] = np.eye(r)
    return TruncatedOperator(lat, r, matrix, True, {"operator": "zero_mode_projector"})


def borderline_term(V: Potential, m: int | None = None, tol: float = 1e-10) -> int:
    """Number of positive eigenvalues of the compression of ``V_-`` to the constants.

    That compression is the ``r x r`` matrix ``int V_-(x) dx``.
    """
    mat, _ = integrate_negative_part(V, m)
    mat = (mat + mat.conj().T) / 2
    lam = np.linalg.eigvalsh(mat)
    return int(np.sum(lam > tol * (1.0 + np.abs(lam).max(initial=0.0))))


# ---------------------------------------------------------------------------
# binary dump: header then row-major little-endian complex128

_MAGIC = b"TWOPMAT1"
_HEADER = struct.Struct("<8sQqqq")


def dump_matrix(op: TruncatedOperator, path) -> None:
    """Write ``op.matrix`` with a header ``(magic, dim, K, n, r)``."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, op.dim, op.lattice.K, op.lattice.n, op.r))
        fh.write(np.ascontiguousarray(op.matrix, dtype="<c16").tobytes())


def load_matrix(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, dim, K, n, r = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ValueError("not a matrix dump")
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != dim * dim:
        raise ValueError(f"truncated dump: expected {dim * dim} entries, found {data.size}")
    return {"dim": dim, "K": K, "n": n, "r": r}, data.reshape(dim, dim)
