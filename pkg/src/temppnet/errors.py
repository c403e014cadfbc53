"""Exception hierarchy shared by the engine, the pipeline and the CLI."""

from __future__ import annotations


class TempPNetError(Exception):
    """Root of every error raised deliberately by this package."""


class ShapeError(TempPNetError, ValueError):
    def __init__(self, op_kind: str, *shapes: tuple[int, ...], detail: str = "") -> None:
        self.op_kind = op_kind
        self.shapes = shapes
        rendered = " vs ".join(str(tuple(s)) for s in shapes)
        message = f"{op_kind}: incompatible shapes {rendered}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class DataValidationError(TempPNetError, ValueError):
    """Malformed corpus lines, invalid records or out-of-range arguments."""


class NumericalError(TempPNetError, FloatingPointError):
    pass


class CheckpointError(TempPNetError):
    pass
