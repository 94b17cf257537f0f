"""Shared paths and the golden-file comparator for the plots tests.

Fixture CSVs under ``fixtures/`` are genuine gibbsched outputs (see the
README for the commands that regenerate them); goldens under ``golden/``
freeze the figure data built from those fixtures. Set
``PLOTS_UPDATE_GOLDENS=1`` to rewrite the goldens after an intentional
change, then review the diff.
"""
import json
import os
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def check_golden(name: str, data: dict) -> None:
    """Assert that data matches the frozen golden JSON byte-for-value."""
    path = GOLDEN / f"{name}.json"
    if os.environ.get("PLOTS_UPDATE_GOLDENS") == "1":
        path.write_text(json.dumps(data, indent=2) + "\n")
    expected = json.loads(path.read_text())
    assert json.loads(json.dumps(data)) == expected
