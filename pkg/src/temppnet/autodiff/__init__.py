"""Reverse-mode automatic differentiation over float64 numpy arrays."""

from temppnet.autodiff.tensor import Graph, Node, Tensor, as_tensor, backward, grad_enabled, no_grad

__all__ = [
    "Graph",
    "Node",
    "Tensor",
    "as_tensor",
    "backward",
    "grad_enabled",
    "no_grad",
]
