"""Run every CLI command that applies to each bundled fixture and tabulate
the exit statuses.  Reports go to ``--outdir`` (default ``runs/``)."""

from __future__ import annotations

import argparse
import contextlib
import io
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from edskit.cli import main as eds
from edskit.specfile import load_system_spec

STATUS = {0: "ok", 1: "fail", 2: "indeterminate", 3: "usage"}


@dataclass
class RunConfig:
    outdir: str = "runs"
    seed: int = 0
    timestamp: str = "1970-01-01T00:00:00+00:00"


def commands_for(spec) -> list[str]:
    cmds = []
    if spec.has_system:
        cmds += ["check", "prolong"]
        if spec.invariants_F and spec.invariants_G and len(spec.invariants_F) == len(spec.G):
            cmds.append("symmetries")
        if spec.lift_start:
            cmds.append("lift")
    if spec.frame:
        cmds.append("reciprocal")
    return cmds


def run(cfg: RunConfig) -> list[dict]:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for path in sorted((resources.files("edskit") / "fixtures").iterdir()):
        if not path.name.endswith(".eds"):
            continue
        spec = load_system_spec(str(path))
        for cmd in commands_for(spec):
            report = out / f"{spec.name}.{cmd}.json"
            buf = io.StringIO()
            with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(io.StringIO()):
                code = eds([cmd, str(path), "--json", "--seed", str(cfg.seed), "--timestamp", cfg.timestamp])
            report.write_text(buf.getvalue())
            digest = json.loads(buf.getvalue())["digest"][:12] if buf.getvalue() else "-"
            rows.append({"fixture": spec.name, "command": cmd, "status": STATUS[code], "digest": digest})
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default=RunConfig.outdir)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    rows = run(RunConfig(outdir=a.outdir, seed=a.seed))
    width = max(len(r["fixture"]) for r in rows)
    for r in rows:
        print(f"{r['fixture']:<{width}}  {r['command']:<11} {r['status']:<14} {r['digest']}")


if __name__ == "__main__":
    main()
