"""TempPNet: interpretable temporal prototype network for walking-test sensor sequences."""

__version__ = "0.1.0"

__all__: list[str] = [
    "autodiff",
    "evaluation",
    "interpret",
    "methods",
    "model",
    "sensors",
    "synth",
]
