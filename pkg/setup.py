from setuptools import setup, find_packages

setup(
    name="speckill",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "numpy",
        "pandas",
        "mpmath",
        "sympy",
        "networkx",
        "pytest",
    ],
    entry_points={
        "console_scripts": [
            "speckill=speckill.cli:main",
            "killer-certify=speckill.cli:killer_certify",
            "killer-probe=speckill.cli:killer_probe",
            "cover-analyze=speckill.cli:cover_analyze",
            "cover-pb=speckill.cli:cover_pb",
            "bound-propagate=speckill.cli:bound_propagate",
        ],
    },
)
