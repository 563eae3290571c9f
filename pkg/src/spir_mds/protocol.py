"""Single-round symmetric private retrieval over the coded storage layer.

One round, for a requested file ``theta``:

* The user draws ``m`` uniform mask vectors per stripe and sends each
  node ``m`` query vectors; selected (node, vector) pairs additionally
  carry a unit vector that points at one row of the requested file.
* Every node returns one inner product per query vector, blinded by a
  coded share of the node-shared randomness matrix ``S``.
* The user solves one linear system per stripe whose unknowns are the
  m^2 masked products ``X[i][t] = <U_t, D_i> + S[i][t]`` plus the
  (n-m)*m symbols of the requested file.

Unit placement comes in two regimes.  With few parity nodes
(``n - m <= m``) every file row rides on a systematic node, staggered
cyclically so each node sees the same number of raised vectors.  With
many parity nodes (``n - m > m``) the first ``beta = (n-m) mod m`` rows
stay on systematic nodes and the remaining rows are fetched from parity
nodes in groups of m, every node of a group raising the same vector;
the last ``beta`` parity nodes receive plain masks only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import fields
from .errors import (
    DecodeFailure,
    DimensionMismatch,
    FieldTooSmall,
    InvalidParams,
    SingularSystem,
    TooFewFiles,
)
from .storage import Database, GeneratorMatrix, NodeData, StorageParams, build_generator, encode, is_mds

# Disjoint seed domains so user, node, and database randomness never collide
# even when callers reuse one literal seed value.
USER_SEED_DOMAIN = 1
NODE_SEED_DOMAIN = 2
DB_SEED_DOMAIN = 3


def user_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([USER_SEED_DOMAIN, seed])


def node_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([NODE_SEED_DOMAIN, seed])


def db_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([DB_SEED_DOMAIN, seed])


@dataclass(frozen=True)
class QueryPlan:
    """Which (node, vector) pairs carry a unit, and for which file row.

    ``unit_rows[node-1][t-1]`` is the 1-based file row riding on query
    vector t at that node, or None for a plain mask vector.
    """

    case: str  # "case1" (n-m <= m) or "case2" (n-m > m)
    alpha: int
    beta: int
    n: int
    m: int
    unit_rows: tuple[tuple[Optional[int], ...], ...]

    def unit_row(self, node_index: int, t: int) -> Optional[int]:
        return self.unit_rows[node_index - 1][t - 1]

    def units(self):
        """Iterate (node_index, t, row) over all placements."""
        for node0, per_vec in enumerate(self.unit_rows):
            for t0, row in enumerate(per_vec):
                if row is not None:
                    yield node0 + 1, t0 + 1, row

    @property
    def unit_count(self) -> int:
        return sum(1 for _ in self.units())


def _staggered_vector_index(i: int, s: int, m: int) -> int:
    # Row s at systematic node i rides vector ((i + s - 2) mod m) + 1,
    # wrapping so node m's last unit lands back on vector 1.
    return ((i + s - 2) % m) + 1


@lru_cache(maxsize=None)
def make_query_plan(params: StorageParams) -> QueryPlan:
    """Unit placement table for these parameters (theta-independent)."""
    if params.k < 2:
        raise TooFewFiles(
            f"symmetric retrieval needs k >= 2 files, got k={params.k}"
        )
    n, m = params.n, params.m
    parity_rows = n - m
    rows: list[list[Optional[int]]] = [[None] * m for _ in range(n)]
    if parity_rows <= m:
        case, alpha, beta = "case1", 0, parity_rows
        for i in range(1, m + 1):
            for s in range(1, parity_rows + 1):
                rows[i - 1][_staggered_vector_index(i, s, m) - 1] = s
    else:
        case = "case2"
        beta = parity_rows % m
        alpha = (parity_rows - beta) // m
        for i in range(1, m + 1):
            for s in range(1, beta + 1):
                rows[i - 1][_staggered_vector_index(i, s, m) - 1] = s
        for grp in range(1, alpha + 1):
            for offset in range(1, m + 1):
                node = grp * m + offset
                for t in range(1, m + 1):
                    rows[node - 1][t - 1] = beta + (grp - 1) * m + t
    plan = QueryPlan(case, alpha, beta, n, m, tuple(tuple(r) for r in rows))
    assert plan.unit_count == parity_rows * m
    return plan


def unit_mask(params: StorageParams, plan: QueryPlan, theta: int, node_index: int) -> np.ndarray:
    """(m, query_len) 0/1 array of the unit vectors raised at one node.

    The row index is offset into file theta's block of the query vector.
    """
    mask = np.zeros((params.m, params.query_len), dtype=np.int64)
    base = (theta - 1) * params.rows_per_stripe
    for t in range(1, params.m + 1):
        row = plan.unit_row(node_index, t)
        if row is not None:
            mask[t - 1, base + row - 1] = 1
    return mask


@dataclass(frozen=True, eq=False)
class QuerySet:
    """Mask vectors and the per-node queries derived from them."""

    theta: int
    u: np.ndarray  # (stripes, m, query_len) uniform masks
    per_node: np.ndarray  # (n, stripes, m, query_len)

    def node_query(self, node_index: int) -> np.ndarray:
        return self.per_node[node_index - 1]

    def __eq__(self, other):
        if not isinstance(other, QuerySet):
            return NotImplemented
        return (
            self.theta == other.theta
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.per_node, other.per_node)
        )


@dataclass(frozen=True, eq=False)
class CommonRandomness:
    """Node-shared m x m uniform matrix per stripe, hidden from the user."""

    values: np.ndarray  # (stripes, m, m); values[s, i-1, t-1] blinds X[i][t]

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.int64).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def sample(cls, params: StorageParams, rng: np.random.Generator) -> "CommonRandomness":
        shape = (params.stripes, params.m, params.m)
        return cls(rng.integers(0, params.q, size=shape, dtype=np.int64))

    @classmethod
    def zeros(cls, params: StorageParams) -> "CommonRandomness":
        return cls(np.zeros((params.stripes, params.m, params.m), dtype=np.int64))

    @classmethod
    def partial(cls, params: StorageParams, free_symbols: int, rng: np.random.Generator) -> "CommonRandomness":
        """Only the first ``free_symbols`` entries (row-major) are random."""
        total = params.stripes * params.m * params.m
        if not 0 <= free_symbols <= total:
            raise InvalidParams(f"partial randomness count {free_symbols} not in [0, {total}]")
        flat = np.zeros(total, dtype=np.int64)
        flat[:free_symbols] = rng.integers(0, params.q, size=free_symbols, dtype=np.int64)
        return cls(flat.reshape(params.stripes, params.m, params.m))

    def __eq__(self, other):
        if not isinstance(other, CommonRandomness):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class AnswerSet:
    """One field element per (node, stripe, query vector)."""

    per_node: np.ndarray  # (n, stripes, m)

    def node_answer(self, node_index: int) -> np.ndarray:
        return self.per_node[node_index - 1]

    def __eq__(self, other):
        if not isinstance(other, AnswerSet):
            return NotImplemented
        return np.array_equal(self.per_node, other.per_node)


@dataclass(frozen=True, eq=False)
class Transcript:
    """User-side record of one complete round."""

    params: StorageParams
    generator: GeneratorMatrix
    theta: int
    query_set: QuerySet
    answer_set: AnswerSet
    decoded_file: np.ndarray
    download_count: int
    randomness_count: int


def gen_queries(
    params: StorageParams,
    g: GeneratorMatrix,
    theta: int,
    user_seed: int = 0,
    *,
    rng: Optional[np.random.Generator] = None,
    u_override: Optional[np.ndarray] = None,
) -> QuerySet:
    """Draw the mask vectors and attach unit vectors per the plan.

    ``u_override`` is a test hook that pins the masks to given values.
    """
    if not 1 <= theta <= params.k:
        raise InvalidParams(f"theta={theta} not in [1, {params.k}]")
    if (g.m, g.n, g.q) != (params.m, params.n, params.q):
        raise DimensionMismatch("generator does not match params")
    plan = make_query_plan(params)
    shape = (params.stripes, params.m, params.query_len)
    if u_override is not None:
        u = np.asarray(u_override, dtype=np.int64) % params.q
        if u.shape != shape:
            raise DimensionMismatch(f"u_override shape {u.shape} != {shape}")
    else:
        if rng is None:
            rng = user_rng(user_seed)
        u = rng.integers(0, params.q, size=shape, dtype=np.int64)
    per_node = np.empty((params.n,) + shape, dtype=np.int64)
    for node in range(1, params.n + 1):
        mask = unit_mask(params, plan, theta, node)  # (m, query_len)
        per_node[node - 1] = (u + mask[None, :, :]) % params.q
    return QuerySet(theta, u, per_node)


def encode_randomness(s: CommonRandomness, g: GeneratorMatrix) -> np.ndarray:
    """(stripes, n, m) blinding terms: column t of S encoded by the code.

    Row n is what node n adds to its t-th inner product, so parity
    answers equal the code applied to the masked systematic products.
    """
    return np.einsum("sit,in->snt", s.values, g.matrix.array) % g.q


def gen_answer(
    node_index: int,
    query: np.ndarray,
    d: NodeData,
    s: CommonRandomness,
    g: GeneratorMatrix,
) -> np.ndarray:
    """Answers of one node: inner products plus coded blinding.

    The signature is the isolation contract: a node sees its index, its
    own query, its own share, and the shared randomness, nothing else.
    """
    query = np.asarray(query, dtype=np.int64)
    stripes, m, qlen = query.shape
    if d.values.size != stripes * qlen:
        raise DimensionMismatch(
            f"node {node_index}: share length {d.values.size} != stripes*query_len {stripes * qlen}"
        )
    data = d.values.reshape(stripes, qlen)
    blind = encode_randomness(s, g)  # (stripes, n, m)
    raw = np.einsum("stq,sq->st", query, data)
    return (raw + blind[:, node_index - 1, :]) % g.q


def _x_col(i: int, t: int, m: int) -> int:
    return (t - 1) * m + (i - 1)


def _w_col(row: int, i: int, m: int) -> int:
    return m * m + (row - 1) * m + (i - 1)


@lru_cache(maxsize=None)
def decode_system(params: StorageParams, g: GeneratorMatrix) -> np.ndarray:
    """The n*m x n*m coefficient matrix tying answers to unknowns.

    Equation order is node-major then vector index; unknown order is the
    m^2 masked products (column-major) followed by the (n-m)*m file
    symbols (row-major).  The matrix is theta-independent: changing
    theta only relabels which file block the unit offsets point into.
    """
    plan = make_query_plan(params)
    n, m = params.n, params.m
    size = n * m
    a = np.zeros((size, size), dtype=np.int64)
    for node in range(1, n + 1):
        col = g.column(node)  # length m
        for t in range(1, m + 1):
            eq = (node - 1) * m + (t - 1)
            row = plan.unit_row(node, t)
            if node <= m:
                a[eq, _x_col(node, t, m)] = 1
                if row is not None:
                    a[eq, _w_col(row, node, m)] = 1
            else:
                for i in range(1, m + 1):
                    a[eq, _x_col(i, t, m)] = col[i - 1]
                if row is not None:
                    for i in range(1, m + 1):
                        a[eq, _w_col(row, i, m)] = col[i - 1]
    a %= params.q
    a.flags.writeable = False
    return a


@lru_cache(maxsize=None)
def decode_matrix_inverse(params: StorageParams, g: GeneratorMatrix) -> np.ndarray:
    """Exact inverse of the decode system; SingularSystem means a bad plan."""
    inv = fields.invert(decode_system(params, g), params.q)
    inv.flags.writeable = False
    return inv


def column_systems(params: StorageParams, g: GeneratorMatrix) -> list[np.ndarray]:
    """Per query-vector index, the m x m system solving that masked column.

    Rows are the plain equations available for the column: unit rows of
    the identity for plain systematic nodes and generator columns for
    plain parity nodes.  Each must be square and nonsingular for the
    scheme to decode.
    """
    plan = make_query_plan(params)
    out = []
    for t in range(1, params.m + 1):
        rows = []
        for node in range(1, params.n + 1):
            if plan.unit_row(node, t) is not None:
                continue
            if node <= params.m:
                e = np.zeros(params.m, dtype=np.int64)
                e[node - 1] = 1
                rows.append(e)
            else:
                rows.append(g.column(node))
        out.append(np.array(rows, dtype=np.int64) % params.q)
    return out


def decode(
    params: StorageParams,
    g: GeneratorMatrix,
    theta: int,
    query_set: QuerySet,
    answer_set: AnswerSet,
) -> np.ndarray:
    """Recover file theta from the full answer set.

    Returns the (stripes*(n-m), m) file matrix.  The query set is
    cross-checked against the plan so a corrupted transcript fails loud.
    """
    plan = make_query_plan(params)
    if query_set.theta != theta:
        raise InvalidParams(f"query set was built for theta={query_set.theta}, not {theta}")
    expected = np.stack(
        [
            (query_set.u + unit_mask(params, plan, theta, node)[None, :, :]) % params.q
            for node in range(1, params.n + 1)
        ]
    )
    if not np.array_equal(expected, query_set.per_node):
        raise InvalidParams("per-node queries inconsistent with masks and plan")
    inv = decode_matrix_inverse(params, g)
    n, m = params.n, params.m
    # b[(node-1)*m + (t-1)] per stripe
    b = answer_set.per_node.transpose(1, 0, 2).reshape(params.stripes, n * m)
    x = (b @ inv.T) % params.q  # (stripes, n*m)
    w = x[:, m * m:].reshape(params.stripes, params.rows_per_stripe, m)
    return w.reshape(params.file_rows, m)


def run_round(
    params: StorageParams,
    db: Database,
    theta: int,
    user_seed: int = 0,
    node_seed: int = 0,
    *,
    generator: Optional[GeneratorMatrix] = None,
    u_override: Optional[np.ndarray] = None,
    s_override: Optional[CommonRandomness] = None,
) -> Transcript:
    """End-to-end round: encode, query, answer each node in isolation, decode.

    Raises DecodeFailure if the decoded file differs from the stored one
    (which would indicate a construction bug, not user error).
    """
    g = generator if generator is not None else build_generator(params)
    query_set = gen_queries(params, g, theta, user_seed, u_override=u_override)
    s = s_override if s_override is not None else CommonRandomness.sample(params, node_rng(node_seed))
    nodes = encode(db, g)
    answers = np.stack(
        [
            gen_answer(i, query_set.node_query(i), nodes[i - 1], s, g)
            for i in range(1, params.n + 1)
        ]
    )
    answer_set = AnswerSet(answers)
    decoded = decode(params, g, theta, query_set, answer_set)
    if not np.array_equal(decoded, db.file(theta)):
        raise DecodeFailure(f"decoded file {theta} differs from stored contents")
    return Transcript(
        params=params,
        generator=g,
        theta=theta,
        query_set=query_set,
        answer_set=answer_set,
        decoded_file=decoded,
        download_count=params.stripes * params.n * params.m,
        randomness_count=params.stripes * params.m * params.m,
    )


_SEARCH_BUDGET = 1 << 20


@lru_cache(maxsize=None)
def find_decodable_generator(params: StorageParams) -> GeneratorMatrix:
    """Deterministic generator search for fields below the Cauchy threshold.

    Tries the standard construction first.  Otherwise scans all parity
    blocks in lexicographic order and returns the first MDS one; if no
    MDS code exists at this field size (possible: four pairwise
    independent columns cannot fit in F_2^2), it falls back to the first
    block whose retrieval system is invertible, which is all the
    protocol itself requires.
    """
    try:
        return build_generator(params)
    except FieldTooSmall:
        pass
    m, n, q = params.m, params.n, params.q
    width = m * (n - m)
    space = q ** width
    if space > _SEARCH_BUDGET:
        raise FieldTooSmall(
            f"generator search space {q}^{width} exceeds budget for q={q} < n={n}"
        )
    field = params.field
    eye = np.eye(m, dtype=np.int64)
    fallback = None
    for idx in range(space):
        digits = np.array(
            [(idx // q ** (width - 1 - pos)) % q for pos in range(width)], dtype=np.int64
        )
        parity = digits.reshape(m, n - m)
        # Any zero parity column kills both MDS and decode-solvability.
        if np.any(np.all(parity == 0, axis=0)):
            continue
        g = GeneratorMatrix(fields.FieldMatrix(field, np.concatenate([eye, parity], axis=1)))
        if is_mds(g):
            return g
        if fallback is None and _decode_solvable(params, g):
            fallback = g
    if fallback is not None:
        return fallback
    raise FieldTooSmall(f"no workable systematic generator exists for {params}")


def _decode_solvable(params: StorageParams, g: GeneratorMatrix) -> bool:
    try:
        decode_matrix_inverse(params, g)
    except SingularSystem:
        return False
    return True


def generator_for(params: StorageParams, mode: str = "cauchy") -> GeneratorMatrix:
    """Generator selection used by the harness: 'cauchy' or 'search'."""
    if mode == "cauchy":
        return build_generator(params)
    if mode == "search":
        return find_decodable_generator(params)
    raise InvalidParams(f"unknown generator mode {mode!r}")
