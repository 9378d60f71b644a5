#!/usr/bin/env python
"""
zkmap - Main Entry Point
"""

import os
import sys

if __name__ == "__main__":
    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

    from ui.cli import main

    main()
