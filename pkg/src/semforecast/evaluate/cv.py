"""Time-slice (rolling forecast origin) cross-validation folds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import PlanError


@dataclass(frozen=True)
class CvPlan:
    """Fold geometry. ``initial``/``validation`` of None use the defaults:
    half the rows for the first training window and equal validation windows
    over the rest (any remainder goes to the initial window)."""

    folds: int = 10
    initial: int | None = None
    validation: int | None = None
    expanding: bool = True

    def _geometry(self, n: int):
        init, val = self.initial, self.validation
        if init is None and val is None:
            val = (n - n // 2) // self.folds
            init = n - self.folds * val
        elif init is None:
            init = n - self.folds * val
        elif val is None:
            val = (n - init) // self.folds
        if val < 1 or init < 1 or init + self.folds * val > n:
            return None
        return init, val

    def min_rows(self) -> int:
        if self.initial is not None and self.validation is not None:
            return self.initial + self.folds * self.validation
        m = 1
        while self._geometry(m) is None:
            m += 1
        return m

    def resolve(self, n: int) -> tuple[int, int]:
        """Return ``(initial, validation)`` window lengths for ``n`` rows."""
        if self.folds < 1:
            raise PlanError("need at least one fold")
        geom = self._geometry(n)
        if geom is None:
            raise PlanError(f"infeasible plan: {self.folds} folds over {n} rows; "
                            f"the minimal feasible row count is {self.min_rows()}")
        return geom


class Fold(NamedTuple):
    train: np.ndarray
    val: np.ndarray


def time_slice_folds(n: int, plan: CvPlan = CvPlan()) -> list[Fold]:
    """Fold ``k`` trains on ``[0, init + k*val)`` and validates on the next ``val`` rows.

    With ``expanding=False`` the training window keeps length ``init`` and
    rolls forward instead.
    """
    init, val = plan.resolve(n)
    folds = []
    for k in range(plan.folds):
        end = init + k * val
        start = 0 if plan.expanding else k * val
        folds.append(Fold(np.arange(start, end), np.arange(end, end + val)))
    return folds
