from setuptools import setup, find_packages

setup(
    name="gaussian_phase",
    version="1.0.0",
    packages=find_packages(exclude=["tests", "examples*"]),
    install_requires=[
        "numpy>=1.24.3",
        "scipy>=1.10.0",
        "pydantic>=1.10,<2",
        "python-dotenv==0.19.0",
        "tenacity>=8.0.1",
    ],
    extras_require={
        "test": ["pytest>=7.0.1"],
    },
    entry_points={
        "console_scripts": [
            "gaussian-phase=gaussian_phase.main:run",
        ],
    },
)
