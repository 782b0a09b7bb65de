#!/usr/bin/env python3
"""
dstbcsim - Main module entry point

This module allows the package to be executed as a module with:
python -m dstbcsim
"""

from .main import main

if __name__ == "__main__":
    main()
