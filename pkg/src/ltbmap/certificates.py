from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

CLAIMS = (
    "thm1_case1",
    "thm1_case2",
    "thm2",
    "growth_corollary",
    "monotonicity_corollary",
    "prop6_box",
    "zlambda_bounds",
)


@dataclass(frozen=True)
class BoundCertificate:
    """Outcome of checking an inequality pointwise along a sampled interval.

    ``verdict`` is true exactly when ``worst_margin >= 0``. A certificate whose
    hypotheses fail is returned with ``applicable=False`` and a NaN margin.
    """

    claim_id: str
    constants: dict[str, float]
    interval: tuple[float, float]
    verdict: bool
    worst_margin: float
    applicable: bool = True
    notes: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.claim_id not in CLAIMS:
            raise ValueError(f"unknown claim {self.claim_id!r}")
        if self.verdict != (self.worst_margin >= 0):
            raise ValueError("verdict must equal worst_margin >= 0")

    @classmethod
    def from_margins(
        cls,
        claim_id: str,
        constants: dict[str, float],
        interval: tuple[float, float],
        margins: Iterable[float] | np.ndarray,
        notes: Iterable[str] = (),
    ) -> "BoundCertificate":
        worst = float(np.min(np.asarray(list(margins) if not isinstance(margins, np.ndarray) else margins)))
        return cls(claim_id, dict(constants), tuple(map(float, interval)), bool(worst >= 0), worst, True, tuple(notes))

    @classmethod
    def not_applicable(
        cls,
        claim_id: str,
        reason: str,
        interval: tuple[float, float],
        constants: dict[str, float] | None = None,
    ) -> "BoundCertificate":
        return cls(claim_id, dict(constants or {}), tuple(map(float, interval)), False, float("nan"), False, (reason,))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["interval"] = list(self.interval)
        out["notes"] = list(self.notes)
        if not np.isfinite(self.worst_margin):
            out["worst_margin"] = None
        return out
