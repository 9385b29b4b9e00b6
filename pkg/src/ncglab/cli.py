"""Command-line runner: ``ncglab --config cfg.json --out dir`` or ``ncglab [--json]`` to list suites.

Exit codes: 0 when every check passes, 2 when any check fails, 1 on a
configuration or usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .suites import SUITES, ConfigError, build_checks

log = logging.getLogger("ncglab")

CSV_COLUMNS = ["suite", "check", "value_re", "value_im", "oracle_re", "oracle_im",
               "residual", "tolerance", "pass"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ncglab", description="Run index-theory experiment suites.")
    p.add_argument("--config", type=Path, help="JSON experiment config; without it the suites are listed")
    p.add_argument("--out", type=Path, default=Path("."), help="directory for report.json and report.csv")
    p.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--jobs", type=int, default=None, help="parallel checks (default: $NCG_JOBS or 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def list_suites(as_json: bool = False) -> str:
    catalog = [{"name": s.name, "params": s.params, "tolerances": s.tolerances,
                "model": s.model, "certifies": s.certifies} for s in SUITES.values()]
    if as_json:
        return json.dumps(catalog, indent=2, sort_keys=True)
    lines = []
    for s in catalog:
        lines.append(s["name"])
        lines.append(f"  params:    {json.dumps(s['params'], sort_keys=True)}")
        lines.append(f"  certifies: {s['certifies']}")
    return "\n".join(lines)


def load_config(path: Path, seed: int | None = None) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("name", "suite", "model"):
        if key not in cfg:
            raise ConfigError(f"config is missing {key!r}")
    if not isinstance(cfg["name"], str):
        raise ConfigError("name must be a string")
    if cfg["suite"] not in SUITES:
        raise ConfigError(f"unknown suite {cfg['suite']!r}; choose from {sorted(SUITES)}")
    if not isinstance(cfg["model"], dict):
        raise ConfigError("model must be an object")
    cfg.setdefault("params", {})
    cfg.setdefault("tolerances", {})
    if not isinstance(cfg["params"], dict) or not isinstance(cfg["tolerances"], dict):
        raise ConfigError("params and tolerances must be objects")
    for k, v in cfg["tolerances"].items():
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            raise ConfigError(f"tolerance {k!r} must be a positive number, got {v!r}")
    if seed is not None:
        cfg["seed"] = seed
    cfg.setdefault("seed", 0)
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool):
        raise ConfigError("seed must be an integer")
    return cfg


def _execute(check, suite, tolerance):
    try:
        report = check.run()
    except Exception as exc:  # a failing check is recorded, the run goes on
        log.warning("check %s failed: %s", check.name, exc)
        return {"suite": suite, "check": check.name, "value": None, "oracle": None,
                "residual": None, "tolerance": tolerance, "pass": False,
                "error": f"{type(exc).__name__}: {exc}", "report": None}
    ok = report.residual is not None and math.isfinite(report.residual) and report.residual <= tolerance
    return {"suite": suite, "check": check.name, "value": report.value, "oracle": report.oracle,
            "residual": report.residual, "tolerance": tolerance, "pass": bool(ok),
            "error": None, "report": report.to_dict()}


def run(cfg: dict, out: Path, jobs: int = 1) -> list[dict]:
    suite = SUITES[cfg["suite"]]
    tolerances = {**suite.tolerances, **cfg["tolerances"]}
    checks = build_checks(cfg["suite"], cfg["model"], cfg["params"], cfg["seed"])
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = list(pool.map(lambda c: _execute(c, cfg["suite"], tolerances[c.tolerance_key]), checks))
    rows.sort(key=lambda r: r["check"])
    out.mkdir(parents=True, exist_ok=True)
    _write_json(cfg, rows, out / "report.json")
    _write_csv(rows, out / "report.csv")
    return rows


def _parts(z):
    return ("", "") if z is None else (repr(z.real), repr(z.imag))


def _write_json(cfg, rows, path):
    doc = {"name": cfg["name"], "suite": cfg["suite"], "model": cfg["model"], "seed": cfg["seed"],
           "params": cfg["params"], "tolerances": cfg["tolerances"],
           "all_pass": all(r["pass"] for r in rows),
           "checks": [{**{k: v for k, v in r.items() if k not in ("value", "oracle")},
                       "value": None if r["value"] is None else [r["value"].real, r["value"].imag],
                       "oracle": None if r["oracle"] is None else [r["oracle"].real, r["oracle"].imag]}
                      for r in rows]}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_csv(rows, path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r["suite"], r["check"], *_parts(r["value"]), *_parts(r["oracle"]),
                    "" if r["residual"] is None else repr(r["residual"]),
                    repr(r["tolerance"]), "true" if r["pass"] else "false"])
    path.write_text(buf.getvalue())


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.config is None:
        print(list_suites(args.json))
        return 0
    jobs = args.jobs
    if jobs is None:
        try:
            jobs = int(os.environ.get("NCG_JOBS", "1"))
        except ValueError:
            print("ncglab: error: NCG_JOBS must be an integer", file=sys.stderr)
            return 1
    try:
        cfg = load_config(args.config, args.seed)
        rows = run(cfg, args.out, jobs)
    except ConfigError as exc:
        print(f"ncglab: config error: {exc}", file=sys.stderr)
        return 1
    failed = [r["check"] for r in rows if not r["pass"]]
    if args.json:
        print(json.dumps({"name": cfg["name"], "checks": len(rows), "failed": failed}, sort_keys=True))
    else:
        print(f"{cfg['name']}: {len(rows) - len(failed)}/{len(rows)} checks passed")
        for name in failed:
            print(f"  FAIL {name}")
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
