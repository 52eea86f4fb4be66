"""Command-line experiment runner.

    mmtls fig2     [--trials 100] [--no-impulses]
    mmtls spectrum [--isr_db 40 --snr_db 20] [--single-trial]
    mmtls compare  [--snr-points 0,10,20,30] [--impulse_prob 0.05]
    mmtls sweep    [--isr-points 20,25,30,35,40]

Every subcommand accepts ``--config PATH``, ``--seed``, ``--trials``,
``--jobs``, ``--out`` and one ``--key value`` flag per scenario-file key;
flags override the file.  Output is a CSV whose leading ``#`` lines hold the
effective configuration and seed, plus a ``<out>.cfg`` echo of the same
configuration in scenario-file form.

Exit status: 0 on success, 2 for a bad configuration, 3 when the output
cannot be written.
"""

from __future__ import annotations

import argparse
import enum
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, experiments
from .core_filters import Algorithm
from .config import KEYS, Config, ConfigError, apply, parse_config

EXIT_CONFIG = 2
EXIT_OUTPUT = 3


class Kind(enum.Enum):
    FIG2_IMPULSE = "fig2"
    SPECTRUM = "spectrum"
    NMSD_COMPARE = "compare"
    SWEEP = "sweep"


ESTIMATORS = {
    Kind.FIG2_IMPULSE: ("lms", "tls", "mtls"),
    Kind.SPECTRUM: ("mmtls",),
    Kind.NMSD_COMPARE: ("mmse", "mtls", "mmtls"),
    Kind.SWEEP: ("mtls", "mmtls"),
}
DEFAULT_TRIALS = {Kind.FIG2_IMPULSE: 100, Kind.SPECTRUM: 100, Kind.NMSD_COMPARE: 200, Kind.SWEEP: 100}


@dataclass(frozen=True)
class ExperimentSpec:
    kind: Kind
    config: Config
    trials: int
    output_path: Path
    estimators: tuple[str, ...] = ()
    jobs: int = 1
    # subcommand-specific knobs; these are echoed into the CSV header
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs", "must be >= 1")
        unknown = set(self.estimators) - set(ESTIMATORS[self.kind])
        if unknown:
            raise ConfigError("estimators", f"{sorted(unknown)} not available for {self.kind.value}")


def _points(text: str, key: str) -> tuple[float, ...]:
    try:
        pts = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(key, f"expected a comma-separated list of numbers, got {text!r}") from None
    if not pts:
        raise ConfigError(key, "empty list")
    return pts


def _fig2_mu(config: Config):
    """Shared step unless ``mu`` is set; three values map to LMS, TLS, MTLS."""
    if not config.is_set("mu"):
        return experiments.FIG2_MU
    if len(config.mu) == 1:
        return config.mu[0]
    if len(config.mu) == 3:
        return dict(zip(Algorithm, config.mu))
    raise ConfigError("mu", "fig2 takes one step size or three (LMS, TLS, MTLS)")


def compute(spec: ExperimentSpec) -> dict[str, np.ndarray]:
    cfg, opt = spec.config, spec.options
    if spec.kind is Kind.FIG2_IMPULSE:
        res = experiments.fig2_curves(spec.trials, cfg.scenario.seed, _fig2_mu(cfg),
                                      impulses=opt.get("impulses", True), jobs=spec.jobs)
        return res.columns()
    if spec.kind is Kind.SPECTRUM:
        return experiments.spectrum(cfg, spec.trials, spec.jobs, n_eval=opt.get("eval_len", 8192),
                                    segment_len=opt.get("segment_len", 256),
                                    overlap=opt.get("overlap", 0.5)).columns()
    if spec.kind is Kind.NMSD_COMPARE:
        return experiments.compare_snr(cfg, spec.trials, opt.get("snr_points", experiments.SNR_POINTS),
                                       spec.jobs)
    return experiments.sweep_isr(cfg, spec.trials, opt.get("isr_points", experiments.ISR_POINTS),
                                 spec.jobs)


def _select(columns: dict, kind: Kind, estimators) -> dict:
    if not estimators:
        return columns
    drop = set(ESTIMATORS[kind]) - set(estimators)
    return {k: v for k, v in columns.items() if not set(k.split("_")) & drop}


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".10g")


def render_csv(spec: ExperimentSpec, columns: dict[str, np.ndarray]) -> str:
    lines = [f"# mmtls {__version__} {spec.kind.value}",
             f"# seed = {spec.config.scenario.seed}",
             f"# trials = {spec.trials}"]
    for k, v in spec.options.items():
        lines.append(f"# {k} = {_fmt_option(v)}")
    lines += [f"# {line}" for line in spec.config.echo()]
    lines.append(",".join(columns))
    rows = zip(*columns.values())
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _fmt_option(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


PLOT_TEMPLATE = '''"""Plot {csv} (generated by mmtls {kind})."""
import matplotlib.pyplot as plt
import numpy as np

with open({csv!r}) as fh:
    meta = sum(1 for line in fh if line.startswith("#"))
data = np.genfromtxt({csv!r}, delimiter=",", names=True, skip_header=meta)
x = data.dtype.names[0]
fig, ax = plt.subplots()
for name in data.dtype.names[1:]:
    ax.plot(data[x], data[name], label=name)
ax.set_xlabel(x)
ax.set_ylabel("dB")
ax.grid(True)
ax.legend()
fig.savefig({png!r}, dpi=150)
'''


def _check_writable(path: Path):
    parent = path.parent if str(path.parent) else Path(".")
    if path.is_dir() or not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write {path}")
    if path.exists() and not os.access(path, os.W_OK):
        raise OSError(f"cannot write {path}")


def run_experiment(spec: ExperimentSpec, plot_script: Path | None = None) -> int:
    """Run ``spec`` and write its CSV, config echo and optional plot script."""
    try:
        _check_writable(spec.output_path)
        if plot_script is not None:
            _check_writable(plot_script)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    try:
        columns = _select(compute(spec), spec.kind, spec.estimators)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        spec.output_path.write_text(render_csv(spec, columns))
        spec.output_path.with_suffix(".cfg").write_text("\n".join(spec.config.echo()) + "\n")
        if plot_script is not None:
            png = str(spec.output_path.with_suffix(".png"))
            plot_script.write_text(PLOT_TEMPLATE.format(csv=str(spec.output_path), png=png,
                                                        kind=spec.kind.value))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario file (key = value lines)")
    common.add_argument("--trials", type=int, help="Monte-Carlo trials")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (output does not depend on it)")
    common.add_argument("--out", type=Path, help="CSV output path (default <subcommand>.csv)")
    common.add_argument("--plot-script", type=Path, help="also write a matplotlib script for the CSV")
    common.add_argument("--estimators", help="comma-separated subset of estimator columns to keep")
    keys = common.add_argument_group("scenario overrides")
    for key in KEYS:
        flags = [f"--{key}"]
        if "_" in key:
            flags.append(f"--{key.replace('_', '-')}")
        keys.add_argument(*flags, dest=f"key_{key}", metavar="VALUE")

    parser = argparse.ArgumentParser(prog="mmtls", description="m-MTLS experiment runner")
    parser.add_argument("--version", action="version", version=f"mmtls {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    fig2 = sub.add_parser("fig2", parents=[common], help="LMS/TLS/MTLS learning curves with impulses")
    fig2.add_argument("--no-impulses", action="store_true", help="drop the output impulses")
    spec = sub.add_parser("spectrum", parents=[common], help="receiver PSD before and after SIC")
    spec.add_argument("--single-trial", action="store_true", help="one trial instead of the average")
    spec.add_argument("--segment-len", type=int, default=256, help="Welch segment length")
    spec.add_argument("--overlap", type=float, default=0.5, help="Welch segment overlap fraction")
    spec.add_argument("--eval-len", type=int, default=8192, help="held-out samples per trial")
    cmp_ = sub.add_parser("compare", parents=[common], help="terminal RT NMSD against SNR")
    cmp_.add_argument("--snr-points", default="0,10,20,30")
    sweep = sub.add_parser("sweep", parents=[common], help="terminal RT NMSD against ISR")
    sweep.add_argument("--isr-points", default="20,25,30,35,40")
    return parser


def spec_from_args(args) -> tuple[ExperimentSpec, Path | None]:
    kind = Kind(args.command)
    config = parse_config(args.config) if args.config is not None else Config()
    overrides = [(k, getattr(args, f"key_{k}")) for k in KEYS if getattr(args, f"key_{k}") is not None]
    config = apply(config, overrides)
    trials = args.trials if args.trials is not None else DEFAULT_TRIALS[kind]
    options = {}
    if kind is Kind.FIG2_IMPULSE:
        options["impulses"] = not args.no_impulses
        mu = _fig2_mu(config)
        options["fig2_mu"] = tuple(mu.values()) if isinstance(mu, dict) else (mu,)
    elif kind is Kind.SPECTRUM:
        if args.single_trial:
            trials = 1
        if args.segment_len < 2 or args.eval_len < args.segment_len:
            raise ConfigError("segment-len", "need 2 <= segment-len <= eval-len")
        if not 0.0 <= args.overlap < 1.0:
            raise ConfigError("overlap", "must lie in [0, 1)")
        options.update(segment_len=args.segment_len, overlap=args.overlap, eval_len=args.eval_len)
    elif kind is Kind.NMSD_COMPARE:
        options["snr_points"] = _points(args.snr_points, "snr-points")
    elif kind is Kind.SWEEP:
        options["isr_points"] = _points(args.isr_points, "isr-points")
    estimators = tuple(e.strip().lower() for e in args.estimators.split(",")) if args.estimators else ()
    out = args.out if args.out is not None else Path(f"{kind.value}.csv")
    spec = ExperimentSpec(kind, config, trials, out, estimators, args.jobs, options)
    return spec, args.plot_script


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec, plot_script = spec_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(spec, plot_script)


if __name__ == "__main__":
    sys.exit(main())
