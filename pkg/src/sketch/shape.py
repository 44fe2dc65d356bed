"""Tensor shapes with an optional symbolic batch dimension."""
from __future__ import annotations

from dataclasses import dataclass

# Symbolic batch marker; only ever legal as the first dimension.
BATCH = "B"


@dataclass(frozen=True)
class Shape:
    """A tensor shape. ``dims[0]`` may be the symbolic batch marker ``"B"``;
    every other entry is a concrete positive integer."""

    dims: tuple

    def __post_init__(self):
        dims = tuple(self.dims)
        object.__setattr__(self, "dims", dims)
        for i, d in enumerate(dims):
            if d == BATCH:
                if i != 0:
                    raise ValueError("batch marker only allowed as first dim")
                continue
            if not isinstance(d, int) or isinstance(d, bool) or d < 1:
                raise ValueError(f"shape dims must be positive ints, got {d!r}")

    @property
    def batched(self) -> bool:
        return bool(self.dims) and self.dims[0] == BATCH

    @property
    def rank(self) -> int:
        return len(self.dims)

    def with_batch(self, batch: int) -> tuple[int, ...]:
        """Concrete dims with the symbolic batch bound to ``batch``."""
        if self.batched:
            return (batch,) + self.dims[1:]
        return self.dims

    def to_json(self) -> list:
        return list(self.dims)

    @classmethod
    def from_json(cls, dims: list) -> "Shape":
        return cls(tuple(dims))

    def __str__(self) -> str:
        return "(" + ", ".join(str(d) for d in self.dims) + ")"


def batched(*tail: int) -> Shape:
    """Shorthand for a shape (B, *tail)."""
    return Shape((BATCH, *tail))
