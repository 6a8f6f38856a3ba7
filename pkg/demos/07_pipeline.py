"""End-to-end run of the bundled configuration through the CLI entry point.

Copies the bundled data to a temporary directory, runs every model stage,
and prints the AICc comparison from report.json.
"""

import json
import shutil
import tempfile
from importlib import resources
from pathlib import Path

from spatialhet.pipeline.cli import main

data = resources.files("spatialhet") / "data"
with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    for name in ("synthetic_400.csv", "synthetic_400_adjacency.csv", "synthetic_400_run.toml"):
        shutil.copy(data / name, tmp / name)
    code = main(["run", str(tmp / "synthetic_400_run.toml"), "--output-dir", str(tmp / "out")])
    report = json.loads((tmp / "out" / "report.json").read_text())
    print("exit code", code)
    print("files:", sorted(p.name for p in (tmp / "out").iterdir()))
    for row in report["model_comparison"]:
        print(f"{row['rank']}. {row['model']:10s} AICc {row['aicc']:.1f}")
