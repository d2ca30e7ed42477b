"""Reverse-mode automatic differentiation engine"""

from advsyn.core.tensor import Tensor, Tape, Node, Gradients, backward, no_grad, active_tape
from advsyn.core.rng import Rng, STREAMS

__all__ = [
    'Tensor',
    'Tape',
    'Node',
    'Gradients',
    'backward',
    'no_grad',
    'active_tape',
    'Rng',
    'STREAMS',
]
