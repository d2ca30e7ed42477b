"""``python -m advsyn`` and the ``advsyn`` console script"""

import sys

from advsyn.utils import pin_threads


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    # Must run before numpy loads its BLAS
    if '--strict-serial' in argv:
        pin_threads()

    from advsyn.cli import main as run

    return run(argv)


if __name__ == '__main__':
    sys.exit(main())
