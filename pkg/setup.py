from setuptools import setup, find_packages

setup(
    name="manifold_reach_package",
    version="0.1.0",
    description="Learned Hamilton-Jacobi reachability on constraint manifolds with safe multi-agent receding-horizon planning",
    author="Manifold Reach developers",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "attrs==25.3.0",
        "click==8.2.1",
        "colorama==0.4.6",
        "filelock==3.18.0",
        "fsspec==2025.5.1",
        "Jinja2==3.1.6",
        "MarkupSafe==3.0.2",
        "mpmath==1.3.0",
        "networkx==3.4.2",
        "numpy==2.2.6",
        "packaging==25.0",
        "pandas==2.2.3",
        "python-dateutil==2.9.0.post0",
        "pytz==2025.2",
        "scipy==1.15.3",
        "simplejson==3.20.2",
        "six==1.17.0",
        "sympy==1.14.0",
        "torch==2.7.1",
        "tqdm==4.67.1",
        "typing_extensions==4.14.0",
        "tzdata==2025.2"
    ],
    extras_require={
        "tests": [
            "hypothesis==6.135.0",
            "sortedcontainers==2.4.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "manifold-reach=manifold_reach_package.cli:main",
        ],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.10",
)
