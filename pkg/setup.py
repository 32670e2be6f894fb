from setuptools import setup, find_packages

setup(
    name="homcell",
    version="0.1.0",
    packages=find_packages(include=["homcell", "homcell.*"]),
    package_data={"homcell": ["schemas/*.json"]},
    python_requires=">=3.9",
    install_requires=["numpy", "scipy", "jsonschema", "matplotlib"],
    entry_points={"console_scripts": ["homcell=homcell.cli:main"]},
)
