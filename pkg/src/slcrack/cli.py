"""Command-line front end: ``slcrack run|compare-loads|mesh-info <config>``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import app, export
from .config import ConfigError, load_config


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", type=Path, help="flat key=value configuration file")
    common.add_argument("--output-dir", type=Path, default=None, help="overrides output_dir from the config")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweep points")
    common.add_argument("--seed", type=int, default=None,
                        help="reserved for randomised property checks; solves are deterministic")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="slcrack", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the configured case or sweep")
    sub.add_parser("compare-loads", parents=[common], help="compare uniform, slope and sine loads")
    info = sub.add_parser("mesh-info", parents=[common], help="print mesh statistics")
    info.add_argument("--vtk", type=Path, default=None, help="also write the mesh as legacy VTK")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "mesh-info":
            mesh = app.plate_mesh(cfg)
            for k, v in app.mesh_summary(mesh).items():
                print(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}")
            if args.vtk:
                export.write_mesh_vtk(args.vtk, mesh)
            return 0

        if args.command == "run":
            outcome = app.run(cfg, args.output_dir, args.threads)
            for r in outcome.results:
                print(f"{app.signature(r.material, r.load)} status={r.status} "
                      f"iterations={r.state.iterations if r.state else 0}")
            print(f"manifest={outcome.manifest}")
            return 0 if outcome.ok else 1

        result = app.compare_loads(cfg, args.output_dir, args.threads)
        for (fiber, s, kind), v in result.peaks.items():
            print(f"fiber={fiber.value} sigma_T={s:g} load={kind.value} "
                  f"peak_sigma_yy={v['peak_sigma_yy']:.6e} peak_eps_yy={v['peak_eps_yy']:.6e} status={v['status']}")
        print(f"manifest={result.manifest}")
        return 0 if result.ok else 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
