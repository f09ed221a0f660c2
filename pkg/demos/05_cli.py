# coding: utf-8

# # Running the command line tool
#
# Each run is one JSON config. Reports land in the output directory as
# report.json plus CSV tables.

import json
import tempfile
from pathlib import Path

from semival.cli import main

here = Path(__file__).parent / "configs"
out = Path(tempfile.mkdtemp())

for command, config, extra in [
    ("value", "value.json", []),
    ("range", "range.json", []),
    ("game", "game_cost.json", ["--oracle"]),
    ("filter-flips", "filter_flips.json", []),
]:
    code = main([command, "--config", str(here / config), "--out", str(out / command), *extra])
    print(command, "exit code", code)

report = json.loads((out / "game" / "report.json").read_text())
block = report["games"][0]
print("cost-ratio search:", block["result"]["best"], "oracle agrees:", block["oracle"]["oracle_agreement"])
print("flip fraction:", json.loads((out / "filter-flips" / "report.json").read_text())["flip_fraction"])
