"""Deterministic weight normalization and cap enforcement.

The portfolio crew proposes weights; this code makes them publishable.
Weights above the per-position cap are clipped with the excess spread
proportionally across uncapped names; sector shares above their cap are
scaled down the same way.  The two passes iterate to a joint fixed point
because redistribution can create new breaches.
"""
from __future__ import annotations

from typing import Mapping

from ..errors import InfeasibleAllocation
from .types import AllocationCaps, CAP_TOL, StageBounds

_EPS = 1e-15
_MAX_ROUNDS = 200


def _clip_to_cap(weights: dict[str, float], cap: float) -> dict[str, float]:
    w = dict(weights)
    for _ in range(len(w) + 1):
        over = [s for s in w if w[s] > cap + _EPS]
        if not over:
            return w
        excess = sum(w[s] - cap for s in over)
        for s in over:
            w[s] = cap
        under = [s for s in w if w[s] < cap - _EPS]
        if not under:
            raise InfeasibleAllocation(
                f"cannot place {excess:.6f} excess weight: every position "
                f"sits at the {cap} cap"
            )
        pool = sum(w[s] for s in under)
        for s in under:
            w[s] += excess * (w[s] / pool)
    raise InfeasibleAllocation(f"per-position cap {cap} did not converge")


def _sector_shares(weights: Mapping[str, float], sectors: Mapping[str, str]) -> dict[str, float]:
    shares: dict[str, float] = {}
    for symbol, weight in weights.items():
        shares[sectors[symbol]] = shares.get(sectors[symbol], 0.0) + weight
    return shares


def normalize_weights(
    raw: Mapping[str, float],
    sectors: Mapping[str, str],
    caps: AllocationCaps,
) -> dict[str, float]:
    """Scale raw weights to sum 1 and enforce position and sector caps."""
    if not raw:
        raise InfeasibleAllocation("no positions to normalize")
    if min(raw.values()) <= 0.0:
        bad = sorted(s for s, w in raw.items() if w <= 0.0)
        raise InfeasibleAllocation(f"non-positive raw weights for: {', '.join(bad)}")
    if len(raw) * caps.max_weight < 1.0 - CAP_TOL:
        raise InfeasibleAllocation(
            f"{len(raw)} positions cannot sum to 1.0 under a {caps.max_weight} "
            f"per-position cap"
        )
    total = sum(raw.values())
    w = {s: v / total for s, v in raw.items()}

    for _ in range(_MAX_ROUNDS):
        w = _clip_to_cap(w, caps.max_weight)
        shares = _sector_shares(w, sectors)
        heavy = [s for s in shares if shares[s] > caps.max_sector_share + _EPS]
        if not heavy:
            break
        excess = 0.0
        for sector in heavy:
            scale = caps.max_sector_share / shares[sector]
            for symbol in w:
                if sectors[symbol] == sector:
                    excess += w[symbol] * (1.0 - scale)
                    w[symbol] *= scale
        light = [
            symbol for symbol in w
            if sectors[symbol] not in heavy and w[symbol] < caps.max_weight - _EPS
        ]
        if not light:
            raise InfeasibleAllocation(
                "sector caps leave nowhere to place excess weight"
            )
        pool = sum(w[s] for s in light)
        for symbol in light:
            w[symbol] += excess * (w[symbol] / pool)
    else:
        raise InfeasibleAllocation("cap enforcement did not converge")

    total = sum(w.values())
    w = {s: v / total for s, v in w.items()}
    _verify(w, sectors, caps)
    return w


def _verify(w: Mapping[str, float], sectors: Mapping[str, str], caps: AllocationCaps) -> None:
    if abs(sum(w.values()) - 1.0) > 1e-12:
        raise InfeasibleAllocation(f"normalized weights sum to {sum(w.values())!r}")
    over = sorted(s for s in w if w[s] > caps.max_weight + CAP_TOL)
    if over:
        raise InfeasibleAllocation(
            f"positions above the {caps.max_weight} cap after normalization: "
            f"{', '.join(over)}"
        )
    shares = _sector_shares(w, sectors)
    heavy = sorted(s for s in shares if shares[s] > caps.max_sector_share + CAP_TOL)
    if heavy:
        raise InfeasibleAllocation(
            f"sectors above the {caps.max_sector_share} cap after "
            f"normalization: {', '.join(heavy)}"
        )


def select_positions(
    candidates: list[Mapping],
    *,
    bounds: StageBounds,
) -> list[Mapping]:
    """Trim an over-long candidate list, or refuse one that is too short.

    Candidates arrive ordered by the crew's preference; trimming keeps
    the front of the list.
    """
    if len(candidates) < bounds.positions_min:
        raise InfeasibleAllocation(
            f"only {len(candidates)} portfolio candidates survive, need at "
            f"least {bounds.positions_min}"
        )
    return list(candidates[:bounds.positions_max])
