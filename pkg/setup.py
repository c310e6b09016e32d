"""Setup script for the dualmln inference engine."""

import os
import re

from setuptools import find_packages, setup

# Load version using safer approach without exec
version_file_path = "dualmln/version.py"
version = "0.0.0"  # Default version

if os.path.exists(version_file_path):
    with open(version_file_path, encoding="utf-8") as f:
        version_match = re.search(
            r"__version__\s*=\s*['\"]([^'\"]+)['\"]", f.read()
        )
        if version_match:
            version = version_match.group(1)

with open("README.md", encoding="utf-8") as f:
    long_description = f.read()

setup(
    name="dualmln",
    version=version,
    description="Markov logic inference by dual decomposition over specialized tasks",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="AGPL-3.0-or-later",
    package_dir={"": "dualmln"},
    packages=find_packages(where="dualmln", exclude=["tests", "tests.*"]),
    py_modules=["manage", "version"],
    include_package_data=True,
    # Dependency management is handled via pip-tools and requirements/*.in files.
    # Do not add dependencies here; use requirements/requirements.in and pip-compile.
    install_requires=[
        "Django>=5.0.0,<5.3.0",
        "matplotlib>=3.10.0,<4.0.0",
        "networkx>=3.2,<4.0",
        "numpy>=1.26.0,<3.0.0",
        "pyparsing>=3.1.0,<4.0.0",
        "python-dotenv>=1.0.0,<2.0.0",
        "scipy>=1.11.0,<2.0.0",
        "sentry-sdk>=2.27.0,<3.0.0",
    ],
    extras_require={
        "dev": [
            "bandit>=1.7.5",
            "django-stubs>=4.2.7",
            "isort>=5.13.2",
            "mypy>=1.7.1",
            "ruff>=0.4.0",
        ],
        "test": [
            "pytest>=7.4.3",
            "pytest-cov>=4.1.0",
            "pytest-django>=4.7.0",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Framework :: Django",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: GNU Affero General Public License v3",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    python_requires=">=3.10",
    entry_points={
        "console_scripts": [
            "dualmln-manage=manage:main",
        ],
    },
)
