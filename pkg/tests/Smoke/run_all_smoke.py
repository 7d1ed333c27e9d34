"""
Run all ersa-lab smoke tests in one command.

Usage:
    python -m tests.Smoke.run_all_smoke
"""

from tests.Smoke.cli_smoke_test import main as cli_main
from tests.Smoke.library_smoke_test import main as library_main


def main() -> None:
    library_main()
    cli_main()
    print("\n✅ All smoke tests completed successfully.")


if __name__ == "__main__":
    main()
