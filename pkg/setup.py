"""
Setup script for dstbcsim
This file is kept for backward compatibility with tools that don't support pyproject.toml
"""
from setuptools import setup

setup()
