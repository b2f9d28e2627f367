from setuptools import setup, find_packages

setup(
    name="drift_ensemble",
    version="0.1",
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "numpy>=1.26",
        "scipy>=1.14",
        "pandas>=2.2",
        "PyYAML>=6.0",
        "sentry-sdk>=2.12",
    ],
    entry_points={
        "console_scripts": ["drift-ensemble=drift_ensemble.cli:main"],
    },
)
