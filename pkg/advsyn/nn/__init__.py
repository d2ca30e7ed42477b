"""Layers, parameters, losses and optimization"""

from advsyn.nn.network import NetworkSpec, Network
from advsyn.nn.params import ParamStore, init_weights
from advsyn.nn.optim import AdamState, adam_step
from advsyn.nn.losses import (
    gan_value,
    discriminator_loss,
    generator_loss,
    binary_cross_entropy,
    l2_penalty,
)

__all__ = [
    'NetworkSpec',
    'Network',
    'ParamStore',
    'init_weights',
    'AdamState',
    'adam_step',
    'gan_value',
    'discriminator_loss',
    'generator_loss',
    'binary_cross_entropy',
    'l2_penalty',
]
