from setuptools import setup, find_packages


def parse_requirements(requirement_file):
    with open(requirement_file) as f:
        return f.readlines()


with open('./README.rst') as f:
    long_description = f.read()


setup(
    version="0.3.0",
    name="advsyn",
    packages=find_packages(exclude=('tests', 'tests.*', 'functional_tests', 'functional_tests.*')),
    description="DC-GAN tumor image synthesis and CNN classification on a small autodiff engine",
    long_description=long_description,
    license='AGPLv3',
    python_requires='>=3.8',
    install_requires=parse_requirements('./requirements.txt'),
    setup_requires=[
        'pytest-runner'
    ],
    tests_require=parse_requirements('./test-requirements.txt'),
    entry_points={
        'console_scripts': [
            'advsyn=advsyn.__main__:main',
        ]
    },
    classifiers=[
        "License :: OSI Approved :: GNU Affero General Public License v3",
        "Development Status :: 3 - Alpha",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Image Recognition"
    ]
)
