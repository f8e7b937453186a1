#!/usr/bin/env python3
"""
Results Ledger Reset Script

Drops all tables and recreates them based on current model definitions.
Use this during development when you modify models.

Usage:
    python reset_db.py

WARNING: This will DELETE every stored run!
"""
import sys

from dotenv import load_dotenv

from database.engine import Base, get_engine

# Import all models to ensure they're registered with Base.metadata
# This is required for create_all() to know about all tables
from database.models import EpochLog, ExperimentRun, RepetitionResult  # noqa: F401


def reset_db() -> None:
    """Drop all tables and recreate them."""
    print("=" * 50)
    print("LupiSeg Results Ledger Reset")
    print("=" * 50)

    engine = get_engine()
    print("\n[1/2] Dropping all tables...")
    Base.metadata.drop_all(engine)
    print("      Done.")

    print("\n[2/2] Creating all tables...")
    Base.metadata.create_all(engine)
    print("      Done.")

    print("\n" + "=" * 50)
    print("Ledger reset complete!")
    print("Tables created:")
    for table in Base.metadata.tables:
        print(f"  - {table}")
    print("=" * 50)


if __name__ == "__main__":
    load_dotenv()
    # Confirm if running interactively
    if sys.stdin.isatty():
        response = input("\nThis will DELETE all stored runs. Continue? [y/N]: ")
        if response.lower() != "y":
            print("Aborted.")
            sys.exit(0)

    reset_db()
