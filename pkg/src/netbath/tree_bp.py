"""Exact cavity message passing on explicit finite chains and trees.

Messages flow leaf-to-root: a leaf presents the free-branch kernel
``(C^2/2) G0``, an internal node sums its children's single-branch messages
and pushes the aggregate through the single-edge update.  On a regular tree
with branching b = n-1 the root aggregate after d levels equals the d-th
iterate of the uniform scalar map with degree n; the message the root would
send to a virtual parent is one further update and is what the resolvent
oracle reproduces.

Message passing on trees is exact; these routines make no approximation
beyond floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SizeError
from .laplace import CavityKernel, closed_form_fixed_point, g0_laplace, uniform_map
from .model import ModelParams, derive_params, fixed_point_exists

#: Refuse to build trees larger than this (2**20 nodes) by default.
NODE_CAP = 1 << 20


@dataclass
class TreeGraph:
    """Rooted tree with breadth-first node numbering (root = 0).

    ``parent[v]`` is -1 for the root; ``levels[k]`` lists the node ids at
    depth k.
    """

    parent: np.ndarray
    levels: list[np.ndarray]
    branching: int
    depth: int

    def __post_init__(self):
        self.parent = np.asarray(self.parent, dtype=np.int64)

    @property
    def n_nodes(self) -> int:
        return self.parent.size

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Directed (child, parent) pairs."""
        return [(v, int(self.parent[v])) for v in range(self.n_nodes)
                if self.parent[v] >= 0]

    def children(self) -> list[list[int]]:
        out = [[] for _ in range(self.n_nodes)]
        for v in range(self.n_nodes):
            p = int(self.parent[v])
            if p >= 0:
                out[p].append(v)
        return out


def build_tree(branching: int, depth: int, node_cap: int = NODE_CAP) -> TreeGraph:
    """Regular rooted tree: every node down to level depth-1 has ``branching`` children."""
    if branching < 1:
        raise DomainError(f"branching must be >= 1, got {branching}")
    if depth < 0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    if branching == 1:
        n_nodes = depth + 1
    else:
        n_nodes = (branching ** (depth + 1) - 1) // (branching - 1)
    if n_nodes > node_cap:
        raise SizeError(f"tree would have {n_nodes} nodes, cap is {node_cap}")
    parent = np.full(n_nodes, -1, dtype=np.int64)
    levels = [np.array([0], dtype=np.int64)]
    next_id = 1
    for _ in range(depth):
        prev = levels[-1]
        count = prev.size * branching
        ids = np.arange(next_id, next_id + count, dtype=np.int64)
        parent[ids] = np.repeat(prev, branching)
        levels.append(ids)
        next_id += count
    return TreeGraph(parent=parent, levels=levels, branching=branching,
                     depth=depth)


def build_chain(depth: int, node_cap: int = NODE_CAP) -> TreeGraph:
    """Chain of depth edges (depth+1 nodes), root at one end."""
    return build_tree(1, depth, node_cap=node_cap)


def _upward_messages(tree: TreeGraph, params: ModelParams, grid,
                     mode: str = "laplace") -> np.ndarray:
    """m-type message each node sends toward its parent, per grid point.

    Vectorized level by level; entry [v, j] is the message from v on edge
    (v, parent(v)) at grid[j] (for the root: toward a virtual parent).
    ``mode="fourier"`` evaluates on the imaginary axis, where the bare
    response is (2/m)/(omega^2 - nu^2) and finite trees have real messages
    with poles at the subtree mode frequencies.  Pole hits are recorded as
    nan rather than aborting the sweep.
    """
    grid = np.asarray(grid, dtype=float)
    if mode == "laplace":
        g0 = np.atleast_1d(np.asarray(g0_laplace(params, grid), dtype=float))
    elif mode == "fourier":
        g0 = (2.0 / params.m) / (params.omega_sq - grid**2)
    else:
        raise DomainError(f"unknown sweep mode {mode!r}")
    msgs = np.zeros((tree.n_nodes, grid.size))
    agg = np.zeros_like(msgs)
    c_half = params.C**2 / 2.0
    for level in reversed(tree.levels):
        prod = g0[None, :] * agg[level]
        denom = 1.0 - prod
        bad = np.abs(denom) < 1e-14 * np.maximum(1.0, np.abs(prod))
        with np.errstate(divide="ignore", invalid="ignore"):
            msgs[level] = c_half * g0[None, :] / denom
        msgs[level][bad] = np.nan
        parents = tree.parent[level]
        has_parent = parents >= 0
        if np.any(has_parent):
            np.add.at(agg, parents[has_parent], msgs[level][has_parent])
    return msgs, agg


def sweep_messages(tree: TreeGraph, params: ModelParams, lambda_grid) -> dict:
    """Leaf-to-root pass; returns {(child, parent): m-type CavityKernel}.

    Grid points where a pole was encountered are flagged on the kernel and
    carry nan values; only those points are lost, not the sweep.
    """
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    msgs, _ = _upward_messages(tree, params, lambda_grid)
    out = {}
    for child, parent in tree.edges:
        vals = msgs[child]
        flags = ~np.isfinite(vals)
        out[(child, parent)] = CavityKernel(
            grid=lambda_grid, values=np.where(flags, np.nan, vals),
            mode="laplace", role="kI", message_type="m",
            flags=flags if flags.any() else None)
    return out


def root_aggregate(tree: TreeGraph, params: ModelParams, lambda_grid) -> np.ndarray:
    """n-type kernel at the root: sum of its children's m-type messages."""
    _, agg = _upward_messages(tree, params, np.asarray(lambda_grid, dtype=float))
    return agg[0]


def root_output_message(tree: TreeGraph, params: ModelParams, lambda_grid) -> np.ndarray:
    """m-type message the root would send to a virtual parent.

    One single-edge update applied to the root aggregate; the kernel the
    whole tree presents as an environment, and the quantity the corner
    resolvent of the tree matrix reproduces.
    """
    msgs, _ = _upward_messages(tree, params, np.asarray(lambda_grid, dtype=float))
    return msgs[0]


def edge_noise_gain(tree: TreeGraph, params: ModelParams, nu_grid) -> dict:
    """Per-edge noise-kernel gain on a Fourier grid, by the stationary rule.

    Each edge multiplies its noise component pointwise by ``4 |kI_edge|^2 /
    C^2``, with the edge's dissipation message taken from a Fourier-mode
    sweep.  Finite trees have real messages with poles at subtree mode
    frequencies; those grid points come back nan.  This is the single-branch
    gain: summing the n-1 branches at a node makes the aggregate per-sweep
    gain (n-1) times larger, so deep below the root the per-edge value
    approaches :func:`~netbath.laplace.real_multiplier` / (n-1) outside the
    band.  Time-domain noise kernels on trees are out of scope here; the
    finite-window machinery covers them.
    """
    nu_grid = np.asarray(nu_grid, dtype=float)
    msgs, _ = _upward_messages(tree, params, nu_grid, mode="fourier")
    if params.C == 0:
        return {edge: np.zeros(nu_grid.size) for edge in tree.edges}
    out = {}
    for child, parent in tree.edges:
        out[(child, parent)] = 4.0 * msgs[child] ** 2 / params.C**2
    return out


def _downward_messages(tree: TreeGraph, params: ModelParams, lambda_grid,
                       up: np.ndarray) -> np.ndarray:
    """m-type message each node receives from its parent (root row stays 0)."""
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    g0 = np.atleast_1d(np.asarray(g0_laplace(params, lambda_grid), dtype=float))
    down = np.zeros_like(up)
    c_half = params.C**2 / 2.0
    children = tree.children()
    for level in tree.levels:
        for p in level:
            kids = children[p]
            if not kids:
                continue
            total = up[kids].sum(axis=0) + down[p]
            for v in kids:
                upstream = total - up[v]
                prod = g0 * upstream
                denom = 1.0 - prod
                bad = np.abs(denom) < 1e-14 * np.maximum(1.0, np.abs(prod))
                with np.errstate(divide="ignore", invalid="ignore"):
                    down[v] = c_half * g0 / denom
                down[v][bad] = np.nan
    return down


def output_environment(tree: TreeGraph, params: ModelParams, node: int,
                       lambda_grid) -> CavityKernel:
    """Effective-environment kernel at a node: sum over ALL incident messages.

    Degree-n sum (children plus parent side), obtained from the upward sweep
    plus a root-to-leaf re-rooting pass.  An isolated node sees a zero
    kernel.
    """
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    up, _ = _upward_messages(tree, params, lambda_grid)
    down = _downward_messages(tree, params, lambda_grid, up)
    children = tree.children()
    total = np.zeros(lambda_grid.size)
    for v in children[node]:
        total = total + up[v]
    if tree.parent[node] >= 0:
        total = total + down[node]
    flags = ~np.isfinite(total)
    return CavityKernel(grid=lambda_grid, values=total, mode="laplace",
                        role="kI", message_type="n",
                        flags=flags if flags.any() else None)


def depth_convergence(params: ModelParams, branching: int, max_depth: int,
                      lam: float) -> np.ndarray:
    """Residuals |k^(d) - k*| of the root aggregate over depth d = 0..max_depth.

    The regular-tree root aggregate at depth d equals the d-th iterate of the
    uniform map with degree branching+1 starting from zero, so the residual
    sequence is computed from the scalar recursion directly.  Requires the
    fixed point to exist at ``lam``.
    """
    n = branching + 1
    params_n = params if params.n == n else derive_params(
        n, params.omega0, params.C, params.m)
    if not fixed_point_exists(params_n, lam):
        raise DomainError("no fixed point at this lambda; depth convergence "
                          "is undefined")
    k_star = closed_form_fixed_point(params_n, lam)
    residuals = np.empty(max_depth + 1)
    k = 0.0
    residuals[0] = abs(k - k_star)
    for d in range(1, max_depth + 1):
        k = uniform_map(k, params_n, lam)
        residuals[d] = abs(k - k_star)
    return residuals
