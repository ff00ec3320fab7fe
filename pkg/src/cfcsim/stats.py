"""Success probabilities of the Zeno and chained-Zeno schemes.

``p_a`` is the probability, given answer ``a``, that every post-selection
succeeds, the switch readout names ``a`` and the flux check passes (the
computer region is never entered in the surviving branch). Both schemes are
evaluated with transfer matrices built from the simulator's own step blocks,
so a full 50 x 50 scan stays fast.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .histories import EPS_CANCEL
from .protocols import (
    ChainedZenoParams,
    ProtocolError,
    block_matrix,
    chained_parts,
    zeno_block,
)


@dataclass(frozen=True)
class ZenoStats:
    scheme: str
    N: int
    N_prime: int | None
    p0: float
    p1: float

    @property
    def total(self) -> float:
        return self.p0 + self.p1

    def to_dict(self) -> dict:
        out = asdict(self)
        out["p0_plus_p1"] = self.total
        return out


def _check_count(name: str, value) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ProtocolError(f"{name} must be an integer >= 1, got {value!r}")
    return int(value)


def _diag_mask(width: int, conditions) -> np.ndarray:
    """0/1 vector selecting basis states that satisfy ``conditions``."""
    idx = np.arange(2**width)
    keep = np.ones(2**width, dtype=bool)
    for q, v in conditions:
        keep &= ((idx >> (width - q)) & 1) == v
    return keep.astype(float)


@lru_cache(maxsize=None)
def _zeno_block(N: int, answer: int) -> np.ndarray:
    return block_matrix(zeno_block(N, answer), 2)


def _zeno_run(N: int, answer: int) -> tuple[np.ndarray, float]:
    """Final state and largest computer-exit magnitude for the plain scheme."""
    block = _zeno_block(N, answer)
    exit_mask = _diag_mask(2, ((1, 1),))
    v = np.zeros(4, dtype=complex)
    v[0] = 1
    worst = 0.0
    for _ in range(N):
        v = block @ v
        worst = max(worst, float(np.linalg.norm(exit_mask * v)))
    return v, worst


def zeno_probabilities(N: int) -> ZenoStats:
    """Plain Zeno scheme: switch reads 0 means "not 0", switch reads 1 means 0.

    Reading 1 is only reachable through the running computer, so the flux
    check zeroes ``p0``.
    """
    N = _check_count("N", N)
    probs = {}
    for answer, indicator in ((0, 1), (1, 0)):
        final, worst = _zeno_run(N, answer)
        p = float(np.sum(np.abs(final) ** 2 * _diag_mask(2, ((1, indicator),))))
        probs[answer] = p if worst < EPS_CANCEL else 0.0
    return ZenoStats("zeno", N, None, probs[0], probs[1])


@lru_cache(maxsize=None)
def _chained_blocks(N: int, answer: int) -> tuple[np.ndarray, np.ndarray]:
    """``B^N`` and the stack of computer-exit maps ``E B^k`` for k = 1..N."""
    params = ChainedZenoParams(N, 1, answer)
    _, blocks, _ = chained_parts(params)
    block = block_matrix(blocks[0], 3)
    exit_mask = _diag_mask(3, ((1, 1), (2, 1)))
    powers = []
    acc = np.eye(8, dtype=complex)
    for _ in range(N):
        acc = block @ acc
        powers.append(exit_mask[:, None] * acc)
    return acc, np.stack(powers)


def chained_run(params: ChainedZenoParams) -> tuple[np.ndarray, float, float]:
    """Final state plus the largest dark-path and computer-exit magnitudes."""
    if params.fourth_register != "none":
        raise ProtocolError("transfer-matrix runs support the three-qubit protocol only")
    head, _, tail = chained_parts(params)
    head_m = block_matrix(head, 3)
    tail_m = block_matrix(tail, 3)
    sub, exits = _chained_blocks(params.N, params.answer)
    dark_mask = _diag_mask(3, ((1, 1), (2, 0)))
    v = np.zeros(8, dtype=complex)
    v[0] = 1
    dark = exit_ = 0.0
    for _ in range(params.cycles or params.N_prime):
        w = head_m @ v
        exit_ = max(exit_, float(np.max(np.linalg.norm(exits @ w, axis=1))))
        w = sub @ w
        dark = max(dark, float(np.linalg.norm(dark_mask * w)))
        v = tail_m @ w
    return v, dark, exit_


def chained_probabilities(N: int, N_prime: int) -> ZenoStats:
    """Chained scheme: the final switch reading names the answer directly."""
    N, N_prime = _check_count("N", N), _check_count("N_prime", N_prime)
    probs = {}
    for answer in (0, 1):
        final, dark, exit_ = chained_run(ChainedZenoParams(N, N_prime, answer))
        p = float(np.sum(np.abs(final) ** 2 * _diag_mask(3, ((1, answer),))))
        probs[answer] = p if min(dark, exit_) < EPS_CANCEL else 0.0
    return ZenoStats("chained", N, N_prime, probs[0], probs[1])


def scan(scheme: str, max_N: int, max_N_prime: int = 1) -> list[ZenoStats]:
    """Rows sorted by N then N'; the plain scheme ignores ``max_N_prime``."""
    max_N = _check_count("max_N", max_N)
    if scheme == "zeno":
        return [zeno_probabilities(n) for n in range(1, max_N + 1)]
    if scheme == "chained":
        max_N_prime = _check_count("max_N_prime", max_N_prime)
        return [chained_probabilities(n, m) for n in range(1, max_N + 1) for m in range(1, max_N_prime + 1)]
    raise ValueError(f"unknown scheme {scheme!r}; expected 'zeno' or 'chained'")


__all__ = ["ZenoStats", "chained_probabilities", "chained_run", "scan", "zeno_probabilities"]
