#!/usr/bin/env python3
# Copyright 2026 The balpack Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Runs a small pipeline and validates its report against the JSON schema."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main(argv):
  if len(argv) != 3:
    print("usage: check_report_schema.py <balpack> <schema.json>", file=sys.stderr)
    return 2
  tool, schema_path = argv[1], Path(argv[2])
  schema = json.loads(schema_path.read_text())
  jsonschema.Draft202012Validator.check_schema(schema)
  validator = jsonschema.Draft202012Validator(schema)

  runs = [
      ["--n", "4000", "--vocab-size", "120", "--seed", "3"],
      ["--n", "2500", "--vocab-size", "80", "--seed", "9", "--replacement", "--mode", "sum",
       "--strategy", "ffd", "--max-sources-per-pack", "1"],
  ]
  failures = 0
  with tempfile.TemporaryDirectory() as tmp:
    for i, extra in enumerate(runs):
      out = Path(tmp) / f"run{i}"
      proc = subprocess.run([tool, "pipeline", "--output", str(out)] + extra,
                            capture_output=True, text=True)
      if proc.returncode != 0:
        print(f"pipeline {extra} failed: {proc.stderr}", file=sys.stderr)
        failures += 1
        continue
      report = json.loads((out / "report.json").read_text())
      errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
      for e in errors:
        print(f"run{i}: {'/'.join(map(str, e.path))}: {e.message}", file=sys.stderr)
      failures += bool(errors)
      if report["num_sampled"] != report["balanced"]["num_samples"]:
        print(f"run{i}: num_sampled disagrees with balanced.num_samples", file=sys.stderr)
        failures += 1
      print(f"run{i}: {'ok' if not errors else 'invalid'}")
  return 1 if failures else 0


if __name__ == "__main__":
  sys.exit(main(sys.argv))
