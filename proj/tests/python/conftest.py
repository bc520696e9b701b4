import os
import shutil
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[2]


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("CPSI_CLI") or shutil.which("cpsi")
    if not path:
        candidate = ROOT / "build" / "cpsi"
        path = str(candidate) if candidate.exists() else None
    if not path:
        pytest.skip("cpsi executable not found")
    return path


@pytest.fixture(scope="session")
def schema():
    import json

    return json.loads((ROOT / "docs" / "report.schema.json").read_text())
