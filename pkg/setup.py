from setuptools import setup, find_packages
import probpts


setup(
    name="probpts",
    version=probpts.__version__,
    license="BSD",
    description="Probabilistic points-to analysis for fork-join programs.",
    packages=find_packages(exclude=("tests",)),
    package_data={"probpts": ["py.typed"]},
    install_requires=[
        "aiohttp>=3.4,<4",
        "lark>=1.1,<2",
    ],
    extras_require={
        "test": [
            "hypothesis>=6",
        ],
    },
    entry_points={
        "console_scripts": ["probpts=probpts.__main__:main"],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: BSD License",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Topic :: Software Development :: Compilers",
    ],
)
