from importlib.metadata import version, PackageNotFoundError


def get_package_version():
    """Get advsyn package version

    Returns:
         str: Installed advsyn package version, or 0.0.0.dev if not fully installed
    """
    try:
        return version(__name__.split('.')[0])
    except PackageNotFoundError:
        return '0.0.0.dev'
