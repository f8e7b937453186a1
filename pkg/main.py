"""
LupiSeg - Main Entry Point

Command-line entry point for the privileged-information segmentation
pipeline: synthetic data, patch extraction, enhancement, training,
evaluation, the experimentation map and reports.

RUNNING:
========
    python main.py --config configs/desk.yaml synth
    python main.py --config configs/desk.yaml extract
    python main.py --config configs/desk.yaml enhance
    python main.py --config configs/desk.yaml run-map
    python main.py report --metrics runs/<run>/metrics.json --format csv

See docs/cli.md for every flag.

ENVIRONMENT:
============
Optional:
    - LUPISEG_RUNS_DIR: Root of the run directories (default: runs)
    - LUPISEG_DATABASE_URL: Results ledger (defaults to SQLite under runs/)
    - LUPISEG_LOG_LEVEL: Log level (default: INFO)
    - LUPISEG_WORKERS: Worker processes for extraction and run-map (default: core count)
"""
import sys

from dotenv import load_dotenv

# Load environment variables before settings are read
load_dotenv()

from channels.cli import main  # noqa: E402


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
