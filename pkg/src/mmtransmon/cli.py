"""Command line entry point: ``mmtransmon run|list|emit|assign``.

Exit codes: 0 success, 1 invalid input (config, usage), 2 runtime failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness
from .experiments import ResourceError
from .fitting import FitError
from .freqplan import DEFAULT_TOLERANCE, assign_features
from .lindblad import IntegrationError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mmtransmon", description="72 GHz transmon simulation and calibration runs")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--output-root", default=None,
                   help=f"overrides ${harness.OUTPUT_ENV} for relative output directories")

    sub.add_parser("list", help="list registered experiments")

    e = sub.add_parser("emit", help="write plot data for a persisted record")
    e.add_argument("record", help="record.json or its directory")
    e.add_argument("--format", default="csv", choices=harness.FORMATS)
    e.add_argument("--out", default=None)

    a = sub.add_parser("assign", help="assign observed spectral features to harmonics")
    a.add_argument("observed", help="text file with one frequency (GHz) per line")
    a.add_argument("--resonators", required=True, help="comma-separated GHz")
    a.add_argument("--qubits", required=True, help="comma-separated GHz")
    a.add_argument("--harmonics", default="5,6,7")
    a.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    return p


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            print("\n".join(harness.list_experiments()))
        elif args.command == "run":
            rec = harness.run(args.config, args.output_root)
            for f in rec.files:
                print(f)
            print(f"{rec.experiment}: config {rec.config_hash[:12]}, "
                  f"{rec.wall_time:.2f} s", file=sys.stderr)
        elif args.command == "emit":
            for f in harness.emit_plotdata(args.record, args.format, args.out):
                print(f)
        elif args.command == "assign":
            observed = np.loadtxt(args.observed, comments="#", ndmin=1)
            done, left = assign_features(observed, _floats(args.resonators), _floats(args.qubits),
                                         tuple(int(n) for n in _floats(args.harmonics)),
                                         args.tolerance)
            print("observed_GHz,source,index,n,predicted_GHz,residual_GHz")
            for f in done:
                print(f"{f.observed_f!r},{f.source},{f.index},{f.harmonic_n},"
                      f"{f.predicted_f!r},{f.residual!r}")
            for f in left:
                print(f"{f!r},unmatched,,,,")
    except harness.ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (ResourceError, IntegrationError, FitError, OSError, ValueError, RuntimeError) as e:
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
