"""Single-step kernels: Glauber, block, Swendsen-Wang, isolated-vertex,
monotone-SW, and their censored variants.

All step functions are pure given (configuration, StepDraws). Randomness
consumption is fixed (see randomness module): this makes trajectories
bit-reproducible and lets the same code drive grand couplings.

Component spin draws use the component's smallest vertex's stream so that
cluster steps are independent of component discovery order. The percolation
tie r(e) = p is resolved as "keep".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .ising import conditional_marginal
from .randomness import StepDraws, sequential_draws

__all__ = [
    "DynamicsSpec",
    "ComponentPartition",
    "agreeing_edges",
    "percolate",
    "components",
    "sw_step",
    "iv_step",
    "msw_step",
    "msw_step_alt",
    "glauber_step",
    "block_step",
    "Stepper",
    "run_chain",
]

KINDS = ("glauber", "block", "sw", "iv", "msw")


@dataclass(frozen=True)
class DynamicsSpec:
    """Chain selector: kind, optional blocks, optional censor set A.

    censor=None means the uncensored chain (A = V). SW has no censored
    variant and rejects a censor set.
    """

    kind: str
    blocks: tuple[frozenset, ...] | None = None
    censor: frozenset | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dynamics kind {self.kind!r}")
        if self.kind == "block":
            if not self.blocks:
                raise ValueError("block dynamics needs a nonempty block list")
        elif self.blocks is not None:
            raise ValueError(f"{self.kind} dynamics takes no blocks")
        if self.kind == "sw" and self.censor is not None:
            raise ValueError("no censoring is defined for SW dynamics")

    def validate_for(self, G: Graph):
        if self.blocks is not None:
            union = set().union(*self.blocks)
            if union != set(range(G.n)):
                raise ValueError("blocks must cover every vertex")
            for b in self.blocks:
                if len(b) > 20:
                    raise ValueError("block too large for exact conditional sampling")
        if self.censor is not None and not all(0 <= v < G.n for v in self.censor):
            raise ValueError("censor set out of range")

    def censor_set(self, G: Graph) -> frozenset:
        return self.censor if self.censor is not None else frozenset(range(G.n))

    def is_monotone(self) -> bool:
        return self.kind in ("glauber", "block", "iv", "msw")

    def to_json(self) -> str:
        obj = {"kind": self.kind}
        if self.blocks is not None:
            obj["blocks"] = [sorted(b) for b in self.blocks]
        if self.censor is not None:
            obj["censor"] = sorted(self.censor)
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str) -> "DynamicsSpec":
        obj = json.loads(text)
        blocks = obj.get("blocks")
        censor = obj.get("censor")
        return cls(
            kind=obj["kind"],
            blocks=tuple(frozenset(b) for b in blocks) if blocks is not None else None,
            censor=frozenset(censor) if censor is not None else None,
        )


@dataclass
class ComponentPartition:
    """Connected components of (V, F)."""

    comp_id: np.ndarray            # component id per vertex
    members: list[list[int]]       # vertex lists, keyed by id
    sizes: np.ndarray

    @property
    def count(self) -> int:
        return len(self.members)


def agreeing_edges(G: Graph, spins) -> np.ndarray:
    """Boolean mask over edge indices of the monochromatic edges E(sigma)."""
    spins = np.asarray(spins)
    u, w = G.endpoint_arrays()
    return spins[u] == spins[w]


def percolate(G: Graph, spins, beta: float, edge_uniforms) -> np.ndarray:
    """Keep each agreeing edge iff r(e) <= p, p = 1 - exp(-2 beta).

    At beta = 0 the kept set is always empty (p = 0; the inclusive tie
    rule applies only to positive p, so r(e) = 0 does not sneak an edge in).
    """
    p = 1.0 - np.exp(-2.0 * beta)
    if p <= 0.0:
        return np.zeros(G.m, dtype=bool)
    return agreeing_edges(G, spins) & (np.asarray(edge_uniforms) <= p)


def components(G: Graph, F_mask) -> ComponentPartition:
    """Connected components of the subgraph (V, F) via union-find."""
    parent = list(range(G.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, keep in enumerate(F_mask):
        if keep:
            u, w = G.edges[i]
            ru, rw = find(u), find(w)
            if ru != rw:
                parent[max(ru, rw)] = min(ru, rw)

    roots = {}
    comp_id = np.empty(G.n, dtype=np.int64)
    members: list[list[int]] = []
    for v in range(G.n):
        r = find(v)
        if r not in roots:
            roots[r] = len(members)
            members.append([])
        comp_id[v] = roots[r]
        members[comp_id[v]].append(v)
    sizes = np.array([len(ms) for ms in members], dtype=np.int64)
    return ComponentPartition(comp_id=comp_id, members=members, sizes=sizes)


def sw_step(G: Graph, beta: float, spins, draws: StepDraws) -> np.ndarray:
    """Swendsen-Wang: percolate, then recolor every component uniformly."""
    F = percolate(G, spins, beta, draws.edge_uniforms)
    parts = components(G, F)
    out = np.empty(G.n, dtype=np.int8)
    for ms in parts.members:
        out[ms] = draws.vertex_spins[ms[0]]
    return out


def iv_step(G: Graph, beta: float, spins, draws: StepDraws,
            A: frozenset | None = None) -> np.ndarray:
    """Isolated-vertex step: resample only size-1 components inside A."""
    spins = np.asarray(spins, dtype=np.int8)
    F = percolate(G, spins, beta, draws.edge_uniforms)
    u, w = G.endpoint_arrays()
    deg = np.zeros(G.n, dtype=np.int64)
    np.add.at(deg, u[F], 1)
    np.add.at(deg, w[F], 1)
    isolated = deg == 0
    if A is not None:
        mask = np.zeros(G.n, dtype=bool)
        mask[sorted(A)] = True
        isolated &= mask
    out = spins.copy()
    out[isolated] = draws.vertex_spins[isolated]
    return out


def msw_step(G: Graph, beta: float, spins, draws: StepDraws,
             A: frozenset | None = None) -> np.ndarray:
    """Monotone SW: a component C inside A is recolored with prob 2^-(|C|-1).

    The accept draw uses u_t at the component's smallest vertex, the new
    spin s_t at the same vertex.
    """
    spins = np.asarray(spins, dtype=np.int8)
    F = percolate(G, spins, beta, draws.edge_uniforms)
    parts = components(G, F)
    out = spins.copy()
    for ms in parts.members:
        if A is not None and any(v not in A for v in ms):
            continue
        lead = ms[0]
        if draws.vertex_uniforms[lead] < 2.0 ** (1 - len(ms)):
            out[ms] = draws.vertex_spins[lead]
    return out


def msw_step_alt(G: Graph, beta: float, spins, draws: StepDraws,
                 A: frozenset | None = None) -> np.ndarray:
    """Monotone SW via the per-vertex form: draw a spin for every vertex and
    recolor a component iff all its draws agree.

    Distributionally identical to msw_step (agreement probability of a
    size-k component is exactly 2^-(k-1)); this is the form whose shared
    randomness yields a monotone grand coupling.
    """
    spins = np.asarray(spins, dtype=np.int8)
    F = percolate(G, spins, beta, draws.edge_uniforms)
    parts = components(G, F)
    out = spins.copy()
    s = draws.vertex_spins
    for ms in parts.members:
        if A is not None and any(v not in A for v in ms):
            continue
        first = s[ms[0]]
        if all(s[v] == first for v in ms[1:]):
            out[ms] = first
    return out


def glauber_step(G: Graph, beta: float, spins, draws: StepDraws) -> np.ndarray:
    """Heat-bath single-site update at a uniformly chosen vertex.

    The threshold form (set + iff u_t(v) <= conditional plus-probability)
    is the standard monotone grand coupling for Glauber.
    """
    spins = np.asarray(spins, dtype=np.int8)
    v = draws.vertex_index(G.n)
    S = int(sum(spins[u] for u in G.adjacency[v]))
    p_plus = 1.0 / (1.0 + np.exp(-2.0 * beta * S))
    out = spins.copy()
    out[v] = 1 if draws.vertex_uniforms[v] <= p_plus else -1
    return out


def block_step(G: Graph, beta: float, spins, blocks, draws: StepDraws,
               A: frozenset | None = None) -> np.ndarray:
    """Heat-bath block update: resample A int B_k from the exact conditional.

    The block vertices are updated sequentially in increasing index order,
    each from its exact conditional given the already-updated prefix and
    everything outside the free set (remaining free vertices are
    marginalized). The threshold form makes this the monotone grand
    coupling from the proofs.
    """
    spins = np.asarray(spins, dtype=np.int8)
    k = draws.block_index(len(blocks))
    free = sorted(blocks[k] if A is None else (blocks[k] & A))
    out = spins.copy()
    if not free:
        return out
    remaining = set(free)
    for v in free:
        remaining.discard(v)
        boundary = {u: int(out[u]) for u in range(G.n) if u not in remaining and u != v}
        p_plus = conditional_marginal(G, beta, v, boundary)
        out[v] = 1 if draws.vertex_uniforms[v] <= p_plus else -1
    return out


class Stepper:
    """Precompiled step function for one (graph, beta, spec) triple."""

    def __init__(self, G: Graph, beta: float, spec: DynamicsSpec):
        spec.validate_for(G)
        self.G = G
        self.beta = beta
        self.spec = spec
        self.A = spec.censor if spec.censor is not None else None

    def step(self, spins, draws: StepDraws) -> np.ndarray:
        kind = self.spec.kind
        if kind == "sw":
            return sw_step(self.G, self.beta, spins, draws)
        if kind == "iv":
            return iv_step(self.G, self.beta, spins, draws, self.A)
        if kind == "msw":
            return msw_step_alt(self.G, self.beta, spins, draws, self.A)
        if kind == "glauber":
            return glauber_step(self.G, self.beta, spins, draws)
        if kind == "block":
            return block_step(self.G, self.beta, spins, self.spec.blocks,
                              draws, self.A)
        raise AssertionError(kind)


def run_chain(G: Graph, beta: float, spec: DynamicsSpec, steps: int, seed: int,
              start=None, collect_every: int = 0, collect_after: int = 0):
    """Advance a single chain; optionally collect states.

    Returns (final_state, collected) where collected holds a copy of the
    state every `collect_every` steps (after the step) once at least
    `collect_after` steps have run, or [] when collect_every is 0.
    """
    stepper = Stepper(G, beta, spec)
    rng = np.random.default_rng(np.random.SeedSequence((0xD1CE, seed)))
    spins = (np.full(G.n, 1, dtype=np.int8) if start is None
             else np.asarray(start, dtype=np.int8).copy())
    collected = []
    for t in range(steps):
        draws = sequential_draws(rng, G.n, G.m)
        spins = stepper.step(spins, draws)
        if collect_every and t + 1 > collect_after \
                and (t + 1 - collect_after) % collect_every == 0:
            collected.append(spins.copy())
    return spins, collected
