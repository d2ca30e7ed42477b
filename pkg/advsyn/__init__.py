"""Tumor image synthesis with a DC-GAN and CNN classification on a small reverse-mode autodiff engine

Kept free of numpy imports so ``advsyn --strict-serial`` can pin thread pools before they load.
"""

import logging

from advsyn.utils.version import get_package_version

__version__ = get_package_version()

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())
