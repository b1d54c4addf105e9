"""Residual reports shared by every identity checker."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping


def _flatten(params: Mapping[str, Any]) -> dict:
    out = {}
    for key, val in params.items():
        if isinstance(val, complex):
            out[f"{key}_re"] = val.real
            out[f"{key}_im"] = val.imag
        else:
            out[key] = val
    return out


@dataclass(frozen=True)
class IdentityCase:
    """A named identity together with the parameters of one instance."""

    name: str
    params: tuple = ()

    @classmethod
    def make(cls, name: str, **params) -> "IdentityCase":
        return cls(name, tuple(params.items()))

    def as_dict(self) -> dict:
        return dict(self.params)

    def flat(self) -> dict:
        """Parameters with complex values split into ``_re``/``_im`` columns."""
        return _flatten(self.as_dict())

    def __getitem__(self, key):
        return self.as_dict()[key]


@dataclass(frozen=True)
class ResidualReport:
    """Outcome of comparing two independently computed members of an identity.

    ``status`` is ``"pass"`` iff ``abs_residual <= tol_used + sum(tail_bounds)``.
    An infinite tail bound certifies nothing and fails.
    """

    lhs: complex
    rhs: complex
    tol_used: float
    tail_bounds: tuple = (0.0, 0.0)
    case: IdentityCase = field(default_factory=lambda: IdentityCase("anonymous"))
    notes: tuple = ()

    @property
    def abs_residual(self) -> float:
        return abs(complex(self.lhs) - complex(self.rhs))

    @property
    def rel_residual(self) -> float:
        scale = max(abs(complex(self.lhs)), abs(complex(self.rhs)))
        return self.abs_residual / scale if scale > 0 else self.abs_residual

    @property
    def tail_bound(self) -> float:
        return float(sum(self.tail_bounds))

    @property
    def status(self) -> str:
        res = self.abs_residual
        if not (math.isfinite(res) and math.isfinite(self.tail_bound)):
            return "fail"
        return "pass" if res <= self.tol_used + self.tail_bound else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_row(self) -> dict:
        lhs, rhs = complex(self.lhs), complex(self.rhs)
        row = {"identity": self.case.name}
        row.update(self.case.flat())
        row.update(
            lhs_re=lhs.real,
            lhs_im=lhs.imag,
            rhs_re=rhs.real,
            rhs_im=rhs.imag,
            abs_residual=self.abs_residual,
            rel_residual=self.rel_residual,
            tail_bound=self.tail_bound,
            tol=self.tol_used,
            status=self.status,
        )
        return row
