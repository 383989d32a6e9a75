import setuptools

with open("README.md", "r") as file:
    long_description = file.read()

with open("requirements.txt") as file:
    requirements = file.read()

setuptools.setup(
    name="mixflow.py",
    version="0.2.0",
    author="mixflow.py contributors",
    description="Isothermal incompressible multicomponent mixtures: thermodynamics, closures and a 1D solver",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="MIT",
    packages=setuptools.find_packages(exclude=("unit-test", "doc-examples")),
    classifiers=[
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "License :: OSI Approved :: MIT License",
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Physics",
        "Operating System :: POSIX",
        "Operating System :: MacOS :: MacOS X",
        "Operating System :: Microsoft :: Windows",
    ],
    include_package_data=True,
    package_data={"mixflowpy": ["mixflowpy.env"]},
    python_requires='>=3.9',
    install_requires=requirements,
    extras_require={
        "test": ["pytest>=6.2", "hypothesis>=6.0"]
    },
    entry_points={
        "console_scripts": ["mixflowpy = mixflowpy.cli:main"]
    }
)
