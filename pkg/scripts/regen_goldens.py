#!/usr/bin/env python3
"""Regenerate the golden files under tests/goldens/.

Run from the repository root after an intentional format or fixture change;
inspect the diff before committing.
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from hamflow import build_case_study, default_case_study_costs, serialize_instance
from hamflow import expansion, hamiltonian

from conftest import micro_instance

GOLDENS = ROOT / "tests" / "goldens"


def main() -> int:
    GOLDENS.mkdir(parents=True, exist_ok=True)

    inst = build_case_study(default_case_study_costs())
    (GOLDENS / "case_study.json").write_text(serialize_instance(inst), encoding="utf-8")

    model = expansion.expand_model(micro_instance())
    (GOLDENS / "micro_model_dump.json").write_text(expansion.dump_model_json(model),
                                                   encoding="utf-8")
    h = hamiltonian.compile_hamiltonian(model)
    with (GOLDENS / "micro_hamiltonian.txt").open("w", encoding="utf-8", newline="\n") as fh:
        hamiltonian.export_hamiltonian(h, fh)

    for name in ("case_study.json", "micro_model_dump.json", "micro_hamiltonian.txt"):
        print(f"wrote {GOLDENS / name}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
