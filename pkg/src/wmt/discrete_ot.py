"""Exact discrete Kantorovich solver.

The solver is a primal transportation simplex on the bipartite graph
(rows = source atoms, columns = target atoms): northwest-corner start,
dual potentials propagated over the basis tree, and Bland's smallest-
index anti-cycling rule for both the entering and the leaving arc.
This keeps the output a deterministic vertex of the transportation
polytope, which downstream code relies on (plans stay sparse, repeated
runs are bit-identical).

`brute_force_ot` is an independent oracle for tests: permutation
enumeration for uniform equal-size inputs, otherwise exhaustive
enumeration of all spanning-tree vertices of the polytope.  It is
intentionally naive and only accepts up to 6 atoms per side.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadParameter, DimensionMismatch, SolverFailure, TooLarge
from .measures import DiscreteMeasure

#: plan entries below this are stored as exact zeros
SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class Coupling:
    """Nonnegative m x n transport plan between two atom clouds."""

    entries: np.ndarray
    source_atoms: np.ndarray
    target_atoms: np.ndarray
    cost_exponent: float

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2:
            raise BadParameter(f"coupling entries must be a matrix, got shape {entries.shape}")
        if entries.shape != (self.source_atoms.shape[0], self.target_atoms.shape[0]):
            raise BadParameter(
                f"entries shape {entries.shape} does not match "
                f"{self.source_atoms.shape[0]} sources / {self.target_atoms.shape[0]} targets"
            )
        if np.any(entries < 0.0):
            raise BadParameter("coupling entries must be nonnegative")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "cost_exponent", float(self.cost_exponent))

    @property
    def shape(self):
        return self.entries.shape

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)


@dataclass(frozen=True)
class TransportCost:
    """Optimal transport functional value and the induced distance value**(1/p)."""

    value: float
    distance: float


def cost_matrix(x: np.ndarray, y: np.ndarray, p: float) -> np.ndarray:
    """Pairwise costs ||x_i - y_j||^p."""
    diff = x[:, None, :] - y[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    if p == 2.0:
        return sq
    if p == 1.0:
        return np.sqrt(sq)
    return sq ** (p / 2.0)


def _northwest_corner(a, b):
    """Initial basic feasible solution; returns (flows, basis mask)."""
    m, n = len(a), len(b)
    flows = np.zeros((m, n))
    basis = np.zeros((m, n), dtype=bool)
    a = a.copy()
    b = b.copy()
    i = j = 0
    while True:
        t = max(0.0, min(a[i], b[j]))
        flows[i, j] = t
        basis[i, j] = True
        a[i] -= t
        b[j] -= t
        if i == m - 1 and j == n - 1:
            break
        # staircase walk: always lands on (m-1, n-1) with m+n-1 cells
        if i < m - 1 and (a[i] <= b[j] or j == n - 1):
            i += 1
        else:
            j += 1
    return flows, basis


def _tree_adjacency(basis):
    """Adjacency lists over nodes 0..m-1 (rows) and m..m+n-1 (columns)."""
    m, n = basis.shape
    adj = [[] for _ in range(m + n)]
    ii, jj = np.nonzero(basis)
    for i, j in zip(ii.tolist(), jj.tolist()):
        adj[i].append(m + j)
        adj[m + j].append(i)
    return adj


def _duals(basis, costs):
    """Potentials u, v with u_i + v_j = c_ij on every basic cell."""
    m, n = basis.shape
    adj = _tree_adjacency(basis)
    u = np.zeros(m)
    v = np.zeros(n)
    seen = np.zeros(m + n, dtype=bool)
    seen[0] = True
    stack = [0]
    while stack:
        node = stack.pop()
        for other in adj[node]:
            if seen[other]:
                continue
            seen[other] = True
            if node < m:
                v[other - m] = costs[node, other - m] - u[node]
            else:
                u[other] = costs[other, node - m] - v[node - m]
            stack.append(other)
    if not seen.all():
        raise SolverFailure("basis is not a spanning tree")
    return u, v


def _tree_path(basis, start, goal):
    """Node path from `start` to `goal` through the basis tree."""
    m = basis.shape[0]
    adj = _tree_adjacency(basis)
    parent = {start: None}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for other in adj[node]:
            if other not in parent:
                parent[other] = node
                stack.append(other)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def _solve_tree_flows(basis, a, b):
    """Recompute basic flows exactly from the marginals by leaf elimination."""
    m, n = basis.shape
    flows = np.zeros((m, n))
    margin = np.concatenate([a, b]).astype(float)
    adj = {node: set(nbrs) for node, nbrs in enumerate(_tree_adjacency(basis))}
    degree = {node: len(nbrs) for node, nbrs in adj.items()}
    leaves = [node for node, deg in degree.items() if deg == 1]
    while leaves:
        node = leaves.pop()
        if degree[node] != 1:
            continue
        other = next(iter(adj[node]))
        amount = margin[node]
        if node < m:
            flows[node, other - m] = amount
        else:
            flows[other, node - m] = amount
        margin[other] -= amount
        margin[node] = 0.0
        adj[other].discard(node)
        adj[node].clear()
        degree[node] = 0
        degree[other] -= 1
        if degree[other] == 1:
            leaves.append(other)
    return flows


def _transportation_simplex(costs, a, b):
    """Minimize <costs, x> over the transportation polytope; returns flows."""
    m, n = costs.shape
    flows, basis = _northwest_corner(a, b)
    scale = max(1.0, float(np.abs(costs).max()))
    tol = 1e-11 * scale
    max_iter = 200 * (m + n) ** 2 + 2000

    for _ in range(max_iter):
        u, v = _duals(basis, costs)
        reduced = costs - u[:, None] - v[None, :]
        reduced[basis] = 0.0
        candidates = np.flatnonzero(reduced.ravel() < -tol)
        if candidates.size == 0:
            flows = _solve_tree_flows(basis, a, b)
            np.clip(flows, 0.0, None, out=flows)
            flows[~basis] = 0.0
            return flows
        enter = int(candidates[0])  # Bland: smallest flat index
        ei, ej = divmod(enter, n)

        # the unique cycle: entering arc plus the tree path col -> row
        path = _tree_path(basis, m + ej, ei)
        cycle = [(ei, ej, +1)]
        sign = -1
        for k in range(len(path) - 1):
            node, nxt = path[k], path[k + 1]
            if node < m:
                cell = (node, nxt - m)
            else:
                cell = (nxt, node - m)
            cycle.append((cell[0], cell[1], sign))
            sign = -sign

        minus = [(i, j) for i, j, s in cycle if s < 0]
        theta = min(flows[i, j] for i, j in minus)
        leave = min((i, j) for i, j in minus if flows[i, j] <= theta)
        for i, j, s in cycle:
            flows[i, j] = max(0.0, flows[i, j] + s * theta)
        flows[ei, ej] = theta
        basis[ei, ej] = True
        basis[leave] = False
        flows[leave] = 0.0
    raise SolverFailure(f"pivot limit exceeded on a {m}x{n} instance")


def solve_kantorovich(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0):
    """Optimal coupling and cost between two discrete measures.

    The returned plan is a vertex of the transportation polytope,
    feasible to ~1e-15 and deterministic for identical inputs; entries
    below 1e-12 are pruned to exact zeros.
    """
    if mu.dim != nu.dim:
        raise DimensionMismatch(f"source dim {mu.dim} != target dim {nu.dim}")
    if p < 1.0:
        raise BadParameter(f"cost exponent must satisfy p >= 1, got {p}")
    costs = cost_matrix(mu.atoms, nu.atoms, p)
    flows = _transportation_simplex(costs, mu.weights, nu.weights)
    flows[flows < SUPPORT_TOL] = 0.0
    value = float(np.sum(flows * costs))
    coupling = Coupling(flows, mu.atoms, nu.atoms, p)
    return coupling, TransportCost(value, value ** (1.0 / p))


def wasserstein_distance(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> float:
    """W_p distance; shorthand for solve_kantorovich(...)[1].distance."""
    _, cost = solve_kantorovich(mu, nu, p)
    return cost.distance


# -- brute-force oracle -------------------------------------------------------


def _spanning_trees(m, n):
    """Yield all spanning trees of K_{m,n} as lists of (row, col) cells."""
    edges = [(i, j) for i in range(m) for j in range(n)]
    target = m + n - 1
    parent = list(range(m + n))

    # no path compression: the union below must be undoable by resetting
    # a single parent entry when the recursion backtracks
    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    chosen = []

    def recurse(k):
        if len(chosen) == target:
            yield list(chosen)
            return
        if len(edges) - k < target - len(chosen):
            return
        i, j = edges[k]
        ri, rj = find(i), find(m + j)
        if ri != rj:
            parent[ri] = rj
            chosen.append((i, j))
            yield from recurse(k + 1)
            chosen.pop()
            parent[ri] = ri
        yield from recurse(k + 1)

    yield from recurse(0)


def _tree_flow_cost(cells, costs, a, b):
    """Flow on a spanning tree; returns its cost or None if infeasible."""
    m, n = costs.shape
    margin = np.concatenate([a, b]).astype(float)
    adj = {node: {} for node in range(m + n)}
    for i, j in cells:
        adj[i][m + j] = (i, j)
        adj[m + j][i] = (i, j)
    leaves = [node for node in adj if len(adj[node]) == 1]
    cost = 0.0
    while leaves:
        node = leaves.pop()
        if len(adj[node]) != 1:
            continue
        other, (i, j) = next(iter(adj[node].items()))
        flow = margin[node]
        if flow < -1e-12:
            return None
        cost += costs[i, j] * flow
        margin[other] -= flow
        margin[node] = 0.0
        del adj[other][node]
        adj[node].clear()
        if len(adj[other]) == 1:
            leaves.append(other)
    return cost


def brute_force_ot(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0) -> TransportCost:
    """Provably optimal transport cost by exhaustive search (test oracle).

    Uniform weights with equal sizes go through permutation
    enumeration (Birkhoff vertices); everything else enumerates every
    spanning-tree vertex of the transportation polytope.  The general
    path is exponential: fast for m + n <= 9, minutes near 6x6.
    """
    if mu.size > 6 or nu.size > 6:
        raise TooLarge(f"brute force limited to 6 atoms per side, got {mu.size}x{nu.size}")
    if mu.dim != nu.dim:
        raise DimensionMismatch(f"source dim {mu.dim} != target dim {nu.dim}")
    m, n = mu.size, nu.size
    costs = cost_matrix(mu.atoms, nu.atoms, p)

    uniform = (
        m == n
        and np.allclose(mu.weights, 1.0 / m, atol=1e-12, rtol=0.0)
        and np.allclose(nu.weights, 1.0 / n, atol=1e-12, rtol=0.0)
    )
    if uniform:
        best = min(
            sum(costs[i, pi] for i, pi in enumerate(perm))
            for perm in itertools.permutations(range(n))
        ) / m
    else:
        best = math.inf
        for cells in _spanning_trees(m, n):
            cost = _tree_flow_cost(cells, costs, mu.weights, nu.weights)
            if cost is not None and cost < best:
                best = cost
    return TransportCost(float(best), float(best) ** (1.0 / p))
