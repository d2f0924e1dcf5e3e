"""Density evolution over the coupled super-frame: per-position erasure
probabilities driven by the terminated chain structure, and the resulting
threshold in offered traffic.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import CoupledTopology, DeResult, ThresholdResult, build_topology
from .de_block import BlockDeConfig, ThresholdBracketError, bisect_load

_DEFAULT_CFG = BlockDeConfig()


@dataclass(frozen=True, eq=False)
class CoupledDeState:
    """One iterate of the coupled recursion.

    p[j] is the erasure probability leaving frame position j+1 (0-indexed
    array over the m_f positions). q_msgs[i, k] is the message from user type
    i+1 toward its k-th frame, i.e. toward position bn_neighbors[i][k].
    """

    p: np.ndarray
    q_msgs: np.ndarray

    @classmethod
    def initial(cls, topo: CoupledTopology) -> "CoupledDeState":
        return cls(p=np.ones(topo.m_f), q_msgs=np.ones((topo.l, topo.d)))

    @property
    def max_p(self) -> float:
        return float(self.p.max())


@lru_cache(maxsize=64)
def _topo_arrays(topo: CoupledTopology):
    # 0-indexed position matrix (l, d): row i lists the frames of type i+1
    frames = np.array(topo.bn_neighbors, dtype=np.int64) - 1
    delta = np.array(topo.delta, dtype=np.float64)
    return frames, frames.ravel(), delta


def de_coupled_step(state: CoupledDeState, topo: CoupledTopology, g: float) -> CoupledDeState:
    """One parallel (flooding) update: all type->frame messages from the
    previous p, then the per-frame uniform average, then the new p."""
    frames, flat, delta = _topo_arrays(topo)
    w = state.p[frames]  # (l, d) previous p seen by each type
    # product over the window excluding each entry, via prefix/suffix products
    left = np.ones_like(w)
    np.cumprod(w[:, :-1], axis=1, out=left[:, 1:])
    right = np.ones_like(w)
    np.cumprod(w[:, :0:-1], axis=1, out=right[:, -2::-1])
    q_msgs = left * right
    q_sum = np.zeros(topo.m_f)
    np.add.at(q_sum, flat, q_msgs.ravel())
    q = q_sum / delta
    p = -np.expm1(-g * delta * q)
    return CoupledDeState(p=p, q_msgs=q_msgs)


def de_coupled_run(
    topo: CoupledTopology,
    g: float,
    cfg: BlockDeConfig = _DEFAULT_CFG,
    record_trace: bool = False,
) -> DeResult:
    """Iterate from the all-ones profile until every position's erasure
    probability is below target_p, progress stalls, or the iteration cap hits.
    final_p is the worst (max) position."""
    if g < 0.0:
        raise ValueError(f"offered traffic must be >= 0, got {g}")
    state = CoupledDeState.initial(topo)
    trace: list[tuple[np.ndarray, np.ndarray]] | None = [] if record_trace else None
    for it in range(1, cfg.max_iters + 1):
        new = de_coupled_step(state, topo, g)
        if trace is not None:
            q_per_pos = np.zeros(topo.m_f)
            frames, flat, delta = _topo_arrays(topo)
            np.add.at(q_per_pos, flat, new.q_msgs.ravel())
            trace.append((q_per_pos / delta, new.p.copy()))
        progress = float(np.max(np.abs(state.p - new.p)))
        state = new
        if state.max_p <= cfg.target_p:
            return DeResult(True, state.max_p, it, tuple(trace) if trace is not None else None)
        if progress < cfg.stall_eps:
            return DeResult(False, state.max_p, it, tuple(trace) if trace is not None else None)
    return DeResult(False, state.max_p, cfg.max_iters, tuple(trace) if trace is not None else None)


def coupled_threshold(
    d: int,
    l: int = 200,
    cfg: BlockDeConfig = _DEFAULT_CFG,
    bisect_tol: float = 1e-4,
) -> ThresholdResult:
    """Bisection on [0, 1.2] with coupled-DE convergence as the predicate.

    The default bisect_tol is looser than the block one because each coupled
    run costs m_f positions per iteration and near-threshold runs are long.
    """
    if d < 2:
        raise ValueError(f"threshold search needs d >= 2, got {d}")
    if l < 1:
        raise ValueError(f"chain length must be >= 1, got {l}")
    topo = build_topology(l, d)
    lo, hi, evals = bisect_load(
        lambda g: de_coupled_run(topo, g, cfg).converged, 0.0, 1.2, bisect_tol
    )
    return ThresholdResult(0.5 * (lo + hi), lo, hi, hi - lo, evals)


def termination_adjusted_load(g: float, l: int, d: int) -> float:
    """Offered traffic recomputed against all m_f = l+d-1 frames, counting the
    termination frames that admit no new arrivals. The arrival-rate definition
    g is the reporting convention everywhere else; this accessor only makes
    the (small, O(d/l)) termination rate loss visible."""
    return g * l / (l + d - 1)
