from setuptools import setup

setup(
    name="mabfws",
    version="0.1.0",
    description="Decentralized privacy-preserving multi-agent planner with novelty-bounded best-first width search",
    packages=["mabfws", "mabfws.bfws_lib"],
    package_dir={"mabfws": "."},
    install_requires=[
        "pycryptodome",
        "tabulate",
    ],
    extras_require={"test": ["pytest"]},
    python_requires=">=3.8",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
    ],
)
