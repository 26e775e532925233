"""Integer machinery behind the bound on mutually unbiased PCG measurements.

For a dimensionality parameter d with smallest prime factor p, at most p + 1
periodic coarse-grained measurements can be pairwise mutually unbiased. The
search here builds multiplier families column by column and is used as a
brute-force oracle for that bound.
"""
import logging
import math
from typing import Dict, List, Optional, Tuple

from pcgmum.models.schemas import FamilyWitness, MultiplierMatrix
from pcgmum.utils.errors import DomainError, SearchSpaceError

MAX_TRIAL_DIVISION = 10 ** 9
DEFAULT_MAX_NODES = 50_000_000


def _check_dimension(d: int) -> None:
    if not isinstance(d, int) or isinstance(d, bool):
        raise DomainError(f"dimension must be an integer, got {d!r}")
    if d < 2:
        raise DomainError(f"dimension must be at least 2, got {d}", d=d)
    if d > MAX_TRIAL_DIVISION:
        raise DomainError(f"dimension {d} is beyond trial-division scale", d=d)


def smallest_prime_factor(d: int) -> int:
    _check_dimension(d)
    if d % 2 == 0:
        return 2
    for candidate in range(3, math.isqrt(d) + 1, 2):
        if d % candidate == 0:
            return candidate
    return d


def is_prime(n: int) -> bool:
    return n >= 2 and smallest_prime_factor(n) == n


def factorize(d: int) -> List[Tuple[int, int]]:
    """Prime factorization as (prime, exponent) pairs, ascending"""
    factors: List[Tuple[int, int]] = []
    remaining = d
    while remaining > 1:
        p = smallest_prime_factor(remaining)
        exponent = 0
        while remaining % p == 0:
            remaining //= p
            exponent += 1
        factors.append((p, exponent))
    return factors


def r_max(d: int) -> int:
    """Largest number of mutually unbiased PCG measurements for dimension d"""
    return smallest_prime_factor(d) + 1


def classify_dimension(d: int) -> Dict[str, object]:
    """Behaviour class of d: prime (discrete), prime power (different),
    even (continuous) or general composite (sub-discrete)."""
    factors = factorize(d)
    p = factors[0][0]
    if len(factors) == 1 and factors[0][1] == 1:
        kind, behaviour = "prime", "discrete"
    elif p == 2:
        kind, behaviour = "even", "continuous"
    elif len(factors) == 1:
        kind, behaviour = "prime-power", "different"
    else:
        kind, behaviour = "composite", "sub-discrete"
    return {"d": d, "p": p, "r_max": p + 1, "kind": kind, "behaviour": behaviour}


def mod_inverse(m: int, p: int) -> int:
    if not is_prime(p):
        raise DomainError(f"modulus {p} is not prime", m=m, p=p)
    if m % p == 0:
        raise DomainError(f"{m} has no inverse modulo {p}", m=m, p=p)
    return pow(m, -1, p)


def coprime_with_dimension(m: int, d: int) -> bool:
    if m < 1:
        raise DomainError(f"multiplier must be positive, got {m}", m=m)
    _check_dimension(d)
    return math.gcd(m, d) == 1


def coprime_by_scan(m: int, d: int) -> bool:
    """Literal form of the condition: m*n/d is not an integer for n = 1..d-1"""
    return all((m * n) % d != 0 for n in range(1, d))


def consistent_family(m_matrix: MultiplierMatrix) -> bool:
    """True iff m[j][1] m[k][0] - m[j][0] m[k][1] = m[j][k] m[1][0] for all
    j > k > 1 and every entry is coprime with d."""
    d, m = m_matrix.d, m_matrix.m
    if any(not coprime_with_dimension(entry, d) for _, _, entry in m_matrix.pairs()):
        return False
    for j in range(3, m_matrix.R):
        for k in range(2, j):
            if m[j][1] * m[k][0] - m[j][0] * m[k][1] != m[j][k] * m[1][0]:
                return False
    return True


class _FamilySearch:
    """Depth-first construction of multiplier families.

    Rows j >= 2 are chosen as pairs (m[j][0], m[j][1]); the remaining entries
    m[j][k] follow from the integer constraints and must be positive integers
    within the bound and coprime with d.
    """

    def __init__(self, d: int, m_bound: int, pruned: bool, max_nodes: int):
        self.d = d
        self.m_bound = m_bound
        self.pruned = pruned
        self.max_nodes = max_nodes
        self.p = smallest_prime_factor(d)
        self.values = [m for m in range(1, m_bound + 1) if math.gcd(m, d) == 1]
        self.nodes = 0
        self.best_rows: List[List[int]] = []
        self.best_m10: Optional[int] = None

    def _tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise SearchSpaceError(
                f"search over d={self.d}, m_bound={self.m_bound} exceeded {self.max_nodes} nodes",
                d=self.d, m_bound=self.m_bound, max_nodes=self.max_nodes
            )

    def _derive(self, m10: int, rows: List[List[int]], m_j0: int, m_j1: int) -> Optional[List[int]]:
        # rows[i] is the full row of direction i + 2
        row = [m_j0, m_j1]
        for k_row in rows:
            numerator = m_j1 * k_row[0] - m_j0 * k_row[1]
            if numerator <= 0 or numerator % m10:
                return None
            m_jk = numerator // m10
            if m_jk > self.m_bound or math.gcd(m_jk, self.d) != 1:
                return None
            row.append(m_jk)
        return row

    def _chi(self, row: List[int]) -> int:
        return (row[0] * pow(row[1], -1, self.p)) % self.p

    def _extend(self, m10: int, rows: List[List[int]], classes: set) -> bool:
        self._tick()
        if len(rows) > len(self.best_rows):
            self.best_rows = [list(row) for row in rows]
            self.best_m10 = m10
        if self.pruned and len(rows) == self.p - 1:
            return True
        for m_j0 in self.values:
            for m_j1 in self.values:
                row = self._derive(m10, rows, m_j0, m_j1)
                if row is None:
                    continue
                chi = self._chi(row)
                if self.pruned and chi in classes:
                    continue
                rows.append(row)
                classes.add(chi)
                done = self._extend(m10, rows, classes)
                rows.pop()
                classes.discard(chi)
                if done:
                    return True
        return False

    def run(self) -> FamilyWitness:
        for m10 in self.values:
            if self._extend(m10, [], set()):
                break
        return FamilyWitness(
            d=self.d,
            m_bound=self.m_bound,
            R=2 + len(self.best_rows),
            pruned=self.pruned,
            nodes=self.nodes,
            matrix=self._matrix()
        )

    def _matrix(self) -> Optional[MultiplierMatrix]:
        if self.best_m10 is None:
            return None
        m = [[], [self.best_m10]]
        m.extend(list(row) for row in self.best_rows)
        return MultiplierMatrix(d=self.d, m=m)


def find_max_family(
    d: int,
    m_bound: int,
    pruned: bool = True,
    max_nodes: int = DEFAULT_MAX_NODES
) -> FamilyWitness:
    """Largest consistent family with entries in [1, m_bound], with a witness.

    The congruence-class pruning (distinct chi_k = m[k][0] * inv(m[k][1]) mod p)
    only cuts the search; pruned=False enumerates every family for
    cross-validation at small d.
    """
    _check_dimension(d)
    if m_bound < 1:
        raise DomainError(f"m_bound must be positive, got {m_bound}", m_bound=m_bound)
    search = _FamilySearch(d, m_bound, pruned, max_nodes)
    witness = search.run()
    logging.info(
        f"Family search d={d} m_bound={m_bound} pruned={pruned}: R={witness.R} "
        f"after {witness.nodes} nodes (bound {r_max(d)})"
    )
    if witness.R > r_max(d):
        logging.error(f"Family search exceeded the bound for d={d}: {witness}")
    return witness


def search_max_family(
    d: int,
    m_bound: int,
    pruned: bool = True,
    max_nodes: int = DEFAULT_MAX_NODES
) -> int:
    return find_max_family(d, m_bound, pruned=pruned, max_nodes=max_nodes).R
