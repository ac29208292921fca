"""Gibbs distribution of the ferromagnetic Ising model and its partial order.

Configurations assign +1/-1 to every vertex. Throughout, a configuration on
n vertices is bit-encoded as an integer code in [0, 2^n): bit v set means
sigma(v) = +1. This lets the exact engines index arrays directly.

All weights are accumulated in log-space; the partition function uses
log-sum-exp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .graph import Graph

__all__ = [
    "beta_c",
    "weight",
    "log_weight",
    "GibbsTable",
    "gibbs_exact",
    "conditional_marginal",
    "leq",
    "encode_spins",
    "decode_spins",
    "enumerate_up_sets",
    "stochastically_dominates",
]

UPSET_TOL = 1e-10
ENUM_LIMIT = 20


def beta_c(d: int) -> float:
    """Tree uniqueness threshold: the solution of (d-1) tanh(beta) = 1."""
    if d <= 2:
        raise ValueError(f"beta_c undefined for d={d}: tanh(beta)=1 forces beta=inf")
    return float(np.arctanh(1.0 / (d - 1)))


def encode_spins(spins) -> int:
    """Bit-encode a +/-1 spin vector (bit v set iff spins[v] = +1)."""
    code = 0
    for v, s in enumerate(spins):
        if s > 0:
            code |= 1 << v
    return code


def decode_spins(code: int, n: int) -> np.ndarray:
    """Inverse of encode_spins; returns an int8 array of +/-1."""
    bits = (code >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def _agreement_sum(G: Graph, codes: np.ndarray) -> np.ndarray:
    """Sum over edges of sigma(u)*sigma(w) for each encoded configuration."""
    total = np.zeros(len(codes), dtype=np.int64)
    for u, w in G.edges:
        disagree = ((codes >> u) ^ (codes >> w)) & 1
        total += 1 - 2 * disagree
    return total


def log_weight(G: Graph, beta: float, spins) -> float:
    code = np.array([encode_spins(spins)], dtype=np.int64)
    return float(beta * _agreement_sum(G, code)[0])


def weight(G: Graph, beta: float, spins) -> float:
    """Unnormalized Gibbs weight exp(beta * sum_edges sigma(u) sigma(w))."""
    return float(np.exp(log_weight(G, beta, spins)))


@dataclass(frozen=True)
class GibbsTable:
    """Exact Gibbs distribution over all 2^n encoded configurations."""

    probs: np.ndarray
    logZ: float

    def __post_init__(self):
        s = float(self.probs.sum())
        if abs(s - 1.0) > 1e-12:
            raise ValueError(f"Gibbs table sums to {s}, not 1")


def gibbs_exact(G: Graph, beta: float, limit: int = ENUM_LIMIT) -> GibbsTable:
    """Enumerate mu(sigma) = exp(beta * agreements) / Z for every sigma."""
    if G.n > limit:
        raise ValueError(f"n={G.n} exceeds enumeration limit {limit}")
    codes = np.arange(1 << G.n, dtype=np.int64)
    logw = beta * _agreement_sum(G, codes).astype(np.float64)
    logZ = float(logsumexp(logw))
    return GibbsTable(probs=np.exp(logw - logZ), logZ=logZ)


def _component_of(G: Graph, v: int, blocked: frozenset) -> list[int]:
    """Connected component of v in G with `blocked` vertices removed."""
    seen = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for w in G.adjacency[u]:
            if w not in seen and w not in blocked:
                seen.add(w)
                stack.append(w)
    return sorted(seen)


def _tree_marginal(G: Graph, beta: float, v: int, comp: list[int],
                   boundary: dict) -> float:
    """Exact root marginal on a tree component via bottom-up message passing.

    Clamped neighbors outside the component act as local fields. Messages
    are normalized at every step to avoid under/overflow on deep trees.
    """
    comp_set = set(comp)
    field = {}
    for u in comp:
        field[u] = beta * sum(boundary[w] for w in G.adjacency[u] if w in boundary)

    # iterative post-order rooted at v
    parent = {v: None}
    order = [v]
    stack = [v]
    while stack:
        u = stack.pop()
        for w in G.adjacency[u]:
            if w in comp_set and w not in parent:
                parent[w] = u
                order.append(w)
                stack.append(w)
    # message[u] = (m(parent=+), m(parent=-)) from subtree at u
    msg = {}
    for u in reversed(order):
        children = [w for w in order if parent.get(w) == u]
        logm_child_plus = sum(np.log(msg[w][0]) for w in children)
        logm_child_minus = sum(np.log(msg[w][1]) for w in children)
        if u == v:
            lp = field[u] + logm_child_plus
            lm = -field[u] + logm_child_minus
            return float(1.0 / (1.0 + np.exp(lm - lp)))
        # sum over u's spin for each parent spin
        to_plus = (np.exp(beta + field[u] + logm_child_plus)
                   + np.exp(-beta - field[u] + logm_child_minus))
        to_minus = (np.exp(-beta + field[u] + logm_child_plus)
                    + np.exp(beta - field[u] + logm_child_minus))
        z = to_plus + to_minus
        msg[u] = (to_plus / z, to_minus / z)
    raise AssertionError("unreachable")


def _enum_marginal(G: Graph, beta: float, v: int, comp: list[int],
                   boundary: dict) -> float:
    """Exact marginal by vectorized enumeration of the free component."""
    k = len(comp)
    if k > ENUM_LIMIT:
        raise ValueError(f"free region of size {k} exceeds limit {ENUM_LIMIT}")
    pos = {u: i for i, u in enumerate(comp)}
    codes = np.arange(1 << k, dtype=np.int64)
    logw = np.zeros(1 << k, dtype=np.float64)
    comp_set = set(comp)
    for u in comp:
        su = 2 * ((codes >> pos[u]) & 1) - 1
        # clamped field from boundary neighbors
        h = sum(boundary[w] for w in G.adjacency[u] if w in boundary)
        if h:
            logw += beta * h * su
        for w in G.adjacency[u]:
            if w in comp_set and w > u:
                sw = 2 * ((codes >> pos[w]) & 1) - 1
                logw += beta * su * sw
    logw -= logw.max()
    wts = np.exp(logw)
    plus = (codes >> pos[v]) & 1 == 1
    return float(wts[plus].sum() / wts.sum())


def conditional_marginal(G: Graph, beta: float, v: int, boundary: dict) -> float:
    """Probability that sigma(v) = + under mu conditioned on the boundary.

    `boundary` maps vertices to +/-1 spins; v must not be in it. Every
    unfixed vertex is marginalized exactly. Only the connected component of
    v in the graph minus the boundary matters: the rest factors out of the
    conditional. Tree components use exact message passing; general
    components fall back to enumeration (free region at most 2^20 states).
    """
    if v in boundary:
        raise ValueError(f"vertex {v} is fixed by the boundary")
    blocked = frozenset(boundary)
    comp = _component_of(G, v, blocked)
    n_edges = sum(1 for u, w in G.edges if u in comp and w in comp)
    if n_edges == len(comp) - 1:
        return _tree_marginal(G, beta, v, comp, boundary)
    return _enum_marginal(G, beta, v, comp, boundary)


def leq(sigma, tau) -> bool:
    """Coordinatewise partial order: sigma <= tau."""
    a = np.asarray(sigma)
    b = np.asarray(tau)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    return bool(np.all(a <= b))


def code_leq(x: int, y: int) -> bool:
    """Encoded-configuration order: x <= y iff x's plus-set is inside y's."""
    return (x & ~y) == 0


def enumerate_up_sets(n: int) -> list[frozenset]:
    """All upward-closed subsets of the configuration lattice on n spins.

    Returned as frozensets of encoded configurations, including the empty
    set and the full space. Counts follow the Dedekind numbers, hence the
    n <= 4 bound.
    """
    if n > 4:
        raise ValueError("up-set enumeration limited to n <= 4")
    size = 1 << n
    codes = range(size)
    # up_mask[x]: bitmask over codes of everything >= x
    up_mask = [sum(1 << y for y in codes if code_leq(x, y)) for x in codes]
    out = []
    for mask in range(1 << size):
        required = 0
        for x in codes:
            if (mask >> x) & 1:
                required |= up_mask[x]
        if required & ~mask == 0:
            out.append(frozenset(x for x in codes if (mask >> x) & 1))
    return out


def stochastically_dominates(nu1, nu2, n: int, tol: float = UPSET_TOL) -> bool:
    """True iff nu1 gives every up-set at least as much mass as nu2.

    Both arguments are length-2^n probability vectors indexed by encoded
    configurations. Equivalent to the increasing-function definition since
    up-set indicators generate the increasing cone.
    """
    nu1 = np.asarray(nu1, dtype=np.float64)
    nu2 = np.asarray(nu2, dtype=np.float64)
    if abs(nu1.sum() - 1.0) > tol or abs(nu2.sum() - 1.0) > tol:
        raise ValueError("inputs must be normalized distributions")
    for U in enumerate_up_sets(n):
        idx = sorted(U)
        if nu1[idx].sum() < nu2[idx].sum() - tol:
            return False
    return True
