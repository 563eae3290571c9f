"""Systematic (n, m) MDS storage layer.

A database of k files is striped across n nodes so that any m node
shares recover everything.  Layout conventions used throughout:

* File ``k`` (1-based) is a matrix of shape ``(stripes*(n-m), m)``;
  within a stripe, entry ``(j, i)`` is the j-th symbol of the piece of
  the file held by systematic node ``i``.
* Node vectors are laid out stripe-major, then file-major, then row:
  index ``(s*k_files + (k-1))*(n-m) + (j-1)`` holds the (stripe s,
  file k, row j) slot.
* Node and file indices are 1-based at API boundaries, 0-based inside
  arrays; this is the single place the mapping is defined.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from . import fields
from .errors import BadShareCount, DimensionMismatch, FieldTooSmall, InvalidParams
from .fields import FieldMatrix, PrimeField


@dataclass(frozen=True)
class StorageParams:
    """Shape of one storage instance.

    q: prime field modulus
    n: number of storage nodes
    m: code dimension (any m shares reconstruct the database)
    k: number of files
    stripes: independent (n-m) x m blocks per file
    """

    q: int
    n: int
    m: int
    k: int
    stripes: int = 1

    def __post_init__(self):
        if not fields.is_prime(self.q):
            raise InvalidParams(f"q={self.q} is not prime")
        if not 1 <= self.m < self.n:
            raise InvalidParams(f"need 1 <= m < n, got m={self.m}, n={self.n}")
        if self.k < 1:
            raise InvalidParams(f"need k >= 1 files, got {self.k}")
        if self.stripes < 1:
            raise InvalidParams(f"need stripes >= 1, got {self.stripes}")

    @property
    def field(self) -> PrimeField:
        return PrimeField(self.q)

    @property
    def rows_per_stripe(self) -> int:
        return self.n - self.m

    @property
    def file_rows(self) -> int:
        return self.stripes * (self.n - self.m)

    @property
    def file_len(self) -> int:
        """Symbols per file: stripes * (n-m) * m."""
        return self.stripes * (self.n - self.m) * self.m

    @property
    def node_len(self) -> int:
        """Symbols stored per node."""
        return self.stripes * self.k * (self.n - self.m)

    @property
    def query_len(self) -> int:
        """Length of one query vector (per stripe): (n-m) * k."""
        return (self.n - self.m) * self.k


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Systematic m x n generator [ I | P ] of the storage code."""

    matrix: FieldMatrix

    @property
    def m(self) -> int:
        return self.matrix.rows

    @property
    def n(self) -> int:
        return self.matrix.cols

    @property
    def q(self) -> int:
        return self.matrix.field.q

    @property
    def parity(self) -> np.ndarray:
        """The m x (n-m) parity block P."""
        return self.matrix.array[:, self.m:]

    def column(self, node_index: int) -> np.ndarray:
        """Generator column for a 1-based node index."""
        return self.matrix.array[:, node_index - 1]

    def is_systematic(self) -> bool:
        eye = np.eye(self.m, dtype=np.int64)
        return bool(np.array_equal(self.matrix.array[:, : self.m], eye))

    def __eq__(self, other):
        if not isinstance(other, GeneratorMatrix):
            return NotImplemented
        return self.matrix == other.matrix

    def __hash__(self):
        return hash(self.matrix)


def _cauchy_parity(field: PrimeField, m: int, n: int) -> np.ndarray:
    # Row tags 0..m-1 and column tags m..n-1 are distinct mod q whenever
    # q >= n, so every denominator x_i - y_j is nonzero and every square
    # submatrix of the block is itself Cauchy, hence nonsingular.
    q = field.q
    p = np.zeros((m, n - m), dtype=np.int64)
    for i in range(m):
        for j in range(n - m):
            p[i, j] = field.inv((i - (m + j)) % q)
    return p


@lru_cache(maxsize=None)
def build_generator(params: StorageParams) -> GeneratorMatrix:
    """Build the systematic generator: repetition for m=1, Cauchy otherwise.

    Raises FieldTooSmall when m >= 2 and q < n, where the Cauchy block
    cannot be formed.  The MDS property is re-verified before returning.
    """
    field = params.field
    m, n = params.m, params.n
    if m == 1:
        arr = np.ones((1, n), dtype=np.int64)
    else:
        if params.q < n:
            raise FieldTooSmall(
                f"q={params.q} < n={params.n}: cannot place {n} distinct field elements"
            )
        arr = np.concatenate(
            [np.eye(m, dtype=np.int64), _cauchy_parity(field, m, n)], axis=1
        )
    g = GeneratorMatrix(FieldMatrix(field, arr))
    assert is_mds(g), "constructed generator failed MDS verification"
    return g


def is_mds(g: GeneratorMatrix) -> bool:
    """Exhaustively check that every choice of m columns has rank m."""
    arr = g.matrix.array
    q = g.q
    for cols in combinations(range(g.n), g.m):
        if fields.rank_of(arr[:, cols], q) != g.m:
            return False
    return True


@dataclass(frozen=True, eq=False)
class Database:
    """k files over F_q, each a (stripes*(n-m)) x m matrix."""

    params: StorageParams
    files: np.ndarray  # shape (k, stripes*(n-m), m)

    def __post_init__(self):
        p = self.params
        arr = np.asarray(self.files, dtype=np.int64) % p.q
        if arr.shape != (p.k, p.file_rows, p.m):
            raise DimensionMismatch(
                f"files shape {arr.shape} != {(p.k, p.file_rows, p.m)}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "files", arr)

    @classmethod
    def zeros(cls, params: StorageParams) -> "Database":
        return cls(params, np.zeros((params.k, params.file_rows, params.m), dtype=np.int64))

    @classmethod
    def random(cls, params: StorageParams, rng: np.random.Generator) -> "Database":
        shape = (params.k, params.file_rows, params.m)
        return cls(params, rng.integers(0, params.q, size=shape, dtype=np.int64))

    def file(self, k: int) -> np.ndarray:
        """File matrix for 1-based file index k."""
        return self.files[k - 1]

    def slot_matrix(self) -> np.ndarray:
        """All (stripe, file, row) slots as rows, in node-vector order."""
        p = self.params
        # (k, stripes, n-m, m) -> (stripes, k, n-m, m) -> (slots, m)
        return (
            self.files.reshape(p.k, p.stripes, p.rows_per_stripe, p.m)
            .transpose(1, 0, 2, 3)
            .reshape(p.node_len, p.m)
        )

    @classmethod
    def from_slot_matrix(cls, params: StorageParams, slots: np.ndarray) -> "Database":
        p = params
        files = (
            np.asarray(slots, dtype=np.int64)
            .reshape(p.stripes, p.k, p.rows_per_stripe, p.m)
            .transpose(1, 0, 2, 3)
            .reshape(p.k, p.file_rows, p.m)
        )
        return cls(params, files)

    def __eq__(self, other):
        if not isinstance(other, Database):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.files, other.files)


@dataclass(frozen=True, eq=False)
class NodeData:
    """Coded share held by one node (1-based node_index)."""

    node_index: int
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.int64)
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __eq__(self, other):
        if not isinstance(other, NodeData):
            return NotImplemented
        return self.node_index == other.node_index and np.array_equal(self.values, other.values)


def encode(db: Database, g: GeneratorMatrix) -> tuple[NodeData, ...]:
    """Encode the database into n node shares.

    Node n's slot value is the inner product of generator column n with
    the m systematic symbols of that slot, so systematic nodes hold raw
    file columns.
    """
    p = db.params
    if (g.m, g.n, g.q) != (p.m, p.n, p.q):
        raise DimensionMismatch(
            f"generator is ({g.m},{g.n}) over F_{g.q}, params want ({p.m},{p.n}) over F_{p.q}"
        )
    shares = (db.slot_matrix() @ g.matrix.array) % p.q  # (slots, n)
    return tuple(NodeData(n + 1, shares[:, n]) for n in range(p.n))


def reconstruct(params: StorageParams, shares: Sequence[NodeData], g: GeneratorMatrix) -> Database:
    """Rebuild the database from any m distinct node shares."""
    if (g.m, g.n, g.q) != (params.m, params.n, params.q):
        raise DimensionMismatch(
            f"generator is ({g.m},{g.n}) over F_{g.q}, params want ({params.m},{params.n}) over F_{params.q}"
        )
    if len(shares) != params.m:
        raise BadShareCount(f"need exactly m={params.m} shares, got {len(shares)}")
    idx = [s.node_index for s in shares]
    if len(set(idx)) != len(idx):
        raise BadShareCount(f"duplicate node indices in {idx}")
    if not all(1 <= i <= params.n for i in idx):
        raise BadShareCount(f"node indices out of range in {idx}")
    for s in shares:
        if s.values.shape != (params.node_len,):
            raise DimensionMismatch(
                f"share from node {s.node_index} has length {s.values.shape}, want {params.node_len}"
            )
    cols = g.matrix.array[:, [i - 1 for i in idx]]  # m x m
    inv = fields.invert(cols, params.q)
    stacked = np.stack([s.values for s in shares], axis=1)  # (slots, m) = W @ cols
    slots = (stacked @ inv) % params.q
    return Database.from_slot_matrix(params, slots)


def smallest_admissible_prime(n: int, m: int) -> int:
    """Smallest prime q for which build_generator(q, n, m, ...) succeeds."""
    q = 2 if m == 1 else n
    while not fields.is_prime(q):
        q += 1
    return q
