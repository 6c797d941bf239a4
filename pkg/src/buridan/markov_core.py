"""Column-stochastic transition matrices and their stationary vectors.

The transition matrix follows the column convention: ``A[j, i]`` is the
probability of moving from state ``i`` to state ``j`` in one unit step, so a
state distribution evolves as ``p_next = A @ p``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Tuple

import numpy as np

from .errors import DegenerateChainError, InvalidParametersError, NonConvergenceError, UnsupportedSizeError

Pair = Tuple[int, int]

COLUMN_SUM_TOL = 1e-12
DEGENERATE_MINOR_TOL = 1e-14


def pair_key(i: int, j: int) -> str:
    return f"{i}{j}"


def parse_pair_key(key: str) -> Pair:
    if len(key) != 2 or not key.isdigit():
        raise InvalidParametersError(f"parameter key must be two digits, got {key!r}")
    return int(key[0]), int(key[1])


@dataclass(frozen=True)
class TauMatrix:
    """Per-step switching probabilities ``tau[(i, j)]`` for ``i != j``.

    Entries may be ``nan`` to mark an estimate that could not be formed
    (a state that was never visited). Such a matrix is a valid report value
    but cannot be turned into a transition matrix.
    """

    n_states: int
    tau: Mapping[Pair, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_states < 2:
            raise InvalidParametersError("need at least two states")
        full = {}
        for (i, j), value in dict(self.tau).items():
            if i == j or not (0 <= i < self.n_states and 0 <= j < self.n_states):
                raise InvalidParametersError(f"invalid transition index ({i}, {j})")
            value = float(value)
            if not math.isnan(value) and not 0.0 <= value <= 1.0:
                raise InvalidParametersError(f"tau_{i}{j}={value} outside [0, 1]")
            full[(i, j)] = value
        for i, j in self.pairs():
            full.setdefault((i, j), 0.0)
        for i in range(self.n_states):
            budget = sum(v for (a, _), v in full.items() if a == i and not math.isnan(v))
            if budget > 1.0 + COLUMN_SUM_TOL:
                raise InvalidParametersError(
                    f"switching probabilities out of state {i} sum to {budget} > 1"
                )
        object.__setattr__(self, "tau", dict(sorted(full.items())))

    def pairs(self) -> Iterator[Pair]:
        for i in range(self.n_states):
            for j in range(self.n_states):
                if i != j:
                    yield i, j

    def __getitem__(self, pair: Pair) -> float:
        return self.tau[pair]

    @property
    def has_missing(self) -> bool:
        return any(math.isnan(v) for v in self.tau.values())

    def exit_probability(self, i: int) -> float:
        return sum(self.tau[(i, j)] for j in range(self.n_states) if j != i)

    def to_dict(self) -> Dict[str, float | None]:
        return {pair_key(i, j): (None if math.isnan(v) else v) for (i, j), v in self.tau.items()}

    @classmethod
    def from_dict(cls, values: Mapping[str, float | None], n_states: int | None = None) -> "TauMatrix":
        parsed = {parse_pair_key(k): (math.nan if v is None else float(v)) for k, v in values.items()}
        if n_states is None:
            n_states = 1 + max(max(p) for p in parsed) if parsed else 2
        return cls(n_states, parsed)

    @classmethod
    def two_state(cls, tau01: float, tau10: float) -> "TauMatrix":
        return cls(2, {(0, 1): tau01, (1, 0): tau10})


def build_transition_matrix(params: TauMatrix) -> np.ndarray:
    """Column-stochastic matrix with ``A[j, i] = tau_ij`` and diagonal ``1 - sum_j tau_ij``."""
    if params.has_missing:
        raise InvalidParametersError("cannot build a transition matrix with missing entries")
    n = params.n_states
    A = np.zeros((n, n))
    for (i, j), value in params.tau.items():
        A[j, i] = value
    for i in range(n):
        A[i, i] = 1.0 - A[:, i].sum()
    return A


def validate_column_stochastic(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidParametersError("transition matrix must be square")
    if np.any(A < -COLUMN_SUM_TOL) or np.any(A > 1 + COLUMN_SUM_TOL):
        raise InvalidParametersError("transition matrix entries must lie in [0, 1]")
    if np.any(np.abs(A.sum(axis=0) - 1.0) > COLUMN_SUM_TOL * max(1, A.shape[0])):
        raise InvalidParametersError("transition matrix columns must sum to 1")
    return A


def _minor_det(M: np.ndarray, k: int) -> float:
    keep = [i for i in range(M.shape[0]) if i != k]
    sub = M[np.ix_(keep, keep)]
    m = sub.shape[0]
    if m == 1:
        return float(sub[0, 0])
    if m == 2:
        return float(sub[0, 0] * sub[1, 1] - sub[0, 1] * sub[1, 0])
    # LAPACK getrf: LU with partial pivoting
    return float(np.linalg.det(sub))


def stationary_minor_determinant(matrix) -> np.ndarray:
    """Stationary vector from the principal minors of ``A - I``.

    Coordinate ``k`` is proportional to ``det`` of ``A - I`` with row and
    column ``k`` removed. All minors share the sign ``(-1)**(n-1)``, so
    absolute values are normalized to sum to one.
    """
    A = validate_column_stochastic(matrix)
    n = A.shape[0]
    if n < 2:
        raise InvalidParametersError("need at least two states")
    M = A - np.eye(n)
    dets = np.array([_minor_det(M, k) for k in range(n)])
    if np.all(np.abs(dets) < DEGENERATE_MINOR_TOL):
        raise DegenerateChainError("all principal minors vanish; stationary vector is not unique")
    v = np.abs(dets)
    return v / v.sum()


def stationary_power_iteration(matrix, tol: float = 1e-14, max_iter: int = 1_000_000) -> np.ndarray:
    """Iterate ``p <- A p`` from the uniform vector until the sup-norm step is below ``tol``."""
    A = validate_column_stochastic(matrix)
    n = A.shape[0]
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = A @ p
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - p)) < tol:
            return nxt
        p = nxt
    raise NonConvergenceError(f"power iteration did not converge in {max_iter} iterations")


# Exact sparse polynomials: monomial (sorted tuple of variable ids) -> int coefficient.
Poly = Dict[Tuple[int, ...], int]


def _poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(sorted(ma + mb))
            out[m] = out.get(m, 0) + ca * cb
    return {m: c for m, c in out.items() if c != 0}


def _poly_add(a: Poly, b: Poly, sign: int = 1) -> Poly:
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, 0) + sign * c
    return {m: c for m, c in out.items() if c != 0}


def _permutation_sign(perm: Tuple[int, ...]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def symbolic_minor_polynomials(n: int) -> Tuple[Dict[Pair, int], list]:
    """Expand every principal minor of the symbolic ``A - I`` exactly.

    Returns the variable numbering ``{(i, j): id}`` and a list of ``n``
    polynomials, one per removed index.
    """
    var = {pair: idx for idx, pair in enumerate((i, j) for i in range(n) for j in range(n) if i != j)}
    # entry (row r, col c) of A - I
    entry: Dict[Pair, Poly] = {}
    for r in range(n):
        for c in range(n):
            if r == c:
                entry[(r, c)] = {(var[(r, j)],): -1 for j in range(n) if j != r}
            else:
                entry[(r, c)] = {(var[(c, r)],): 1}
    polys = []
    for k in range(n):
        keep = [i for i in range(n) if i != k]
        det: Poly = {}
        for perm in itertools.permutations(range(n - 1)):
            term: Poly = {(): _permutation_sign(perm)}
            for row, col in enumerate(perm):
                term = _poly_mul(term, entry[(keep[row], keep[col])])
            det = _poly_add(det, term)
        polys.append(det)
    return var, polys


def count_stationary_monomials(n: int) -> int:
    """Number of monomials in one coordinate of the minor-determinant stationary vector.

    Raises ``AssertionError`` if the exact expansion has a coefficient other
    than ``(-1)**(n-1)``, or if coordinates disagree on the count.
    """
    if not 2 <= n <= 5:
        raise UnsupportedSizeError(f"exact expansion supported for 2 <= n <= 5, got {n}")
    _, polys = symbolic_minor_polynomials(n)
    expected_sign = (-1) ** (n - 1)
    counts = set()
    for poly in polys:
        bad = [c for c in poly.values() if c != expected_sign]
        assert not bad, f"coefficients {set(bad)} differ from {expected_sign}"
        counts.add(len(poly))
    assert len(counts) == 1, f"coordinates disagree on monomial count: {counts}"
    return counts.pop()
