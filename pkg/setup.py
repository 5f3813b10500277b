from pathlib import Path

from setuptools import find_packages, setup

HERE = Path(__file__).parent


def _requirements():
    lines = (HERE / "requirements.txt").read_text().splitlines()
    return [line.strip() for line in lines if line.strip() and not line.startswith("#")]


setup(
    name="boxball",
    version="0.1.0",
    description="Box-ball system dynamics, soliton linearization and Monte Carlo checks",
    packages=find_packages(exclude=["tests", "examples*"]),
    python_requires=">=3.9",
    install_requires=[r for r in _requirements() if not r.startswith(("pytest", "hypothesis"))],
    extras_require={"test": [r for r in _requirements() if r.startswith(("pytest", "hypothesis"))]},
    entry_points={"console_scripts": ["boxball=boxball.cli:main"]},
)
