"""
CLI Channel Entry Point

Allows running the channel as a module:
    python -m channels.cli
"""
import sys

from dotenv import load_dotenv

from . import main

if __name__ == "__main__":
    load_dotenv()
    sys.exit(main())
