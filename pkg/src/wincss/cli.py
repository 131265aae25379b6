"""Experiment runner: ``wincss {windows,rip,leakage,subspaces,bounds,recover}``.

Every table is written as CSV or JSON with the full run configuration
embedded, so ``--config <previous output>`` replays a run exactly.
Exit codes: 0 success, 2 invalid arguments, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from wincss import block_model, measurement, recovery, spectrum_core, window_lab
from wincss.window_lab import NAMED_KINDS, generate_window

EXIT_INVALID = 2
EXIT_IO = 3
SIG_DIGITS = 12

OUTPUT_SCHEMA = {
    "type": "object",
    "required": ["command", "config", "seed", "rows"],
    "properties": {
        "command": {"type": "string"},
        "config": {"type": "object"},
        "seed": {"type": "integer"},
        "summary": {"type": "object"},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": {"type": ["number", "string", "integer", "boolean"]},
            },
        },
    },
}

# flags that never change the numbers and are not replayed from --config
_OUTPUT_KEYS = ("out", "format", "plot", "config", "command")


class UsageError(ValueError):
    pass


def _round(value):
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {value} in output table")
    return float(f"{value:.{SIG_DIGITS}g}")


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def render(command: str, config: dict, rows: List[dict], fmt: str, summary: Optional[dict] = None) -> str:
    rows = [{k: _round(v) for k, v in row.items()} for row in rows]
    summary = {k: _round(v) for k, v in (summary or {}).items()}
    if fmt == "json":
        doc = {"command": command, "config": config, "seed": config["seed"], "summary": summary, "rows": rows}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# command: {command}\n")
    buf.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    buf.write(f"# seed: {config['seed']}\n")
    if summary:
        buf.write(f"# summary: {json.dumps(summary, sort_keys=True)}\n")
    if rows:
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row.values()])
    return buf.getvalue()


def read_table(text: str) -> dict:
    """Parse a CSV or JSON output back into ``{"config", "seed", "summary", "rows"}``."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return json.loads(stripped)
    meta = {"summary": {}}
    body = []
    for line in text.splitlines(keepends=True):
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = value.strip() if key == "command" else json.loads(value)
        else:
            body.append(line)
    rows = []
    for raw in csv.DictReader(io.StringIO("".join(body))):
        rows.append({k: _parse_cell(v) for k, v in raw.items()})
    meta["rows"] = rows
    return meta


def _parse_cell(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text in ("True", "False"):
        return text == "True"
    return text


# --- commands ---------------------------------------------------------------

def _windows(args) -> List[window_lab.Window]:
    return [generate_window(k, args.n) for k in args.windows]


def _nze_tone(args) -> spectrum_core.MultiToneSpec:
    return spectrum_core.MultiToneSpec.from_bins(args.n, args.tone_bins)


def cmd_windows(args):
    tones = _nze_tone(args)
    rows = []
    for w in _windows(args):
        metrics = window_lab.window_metrics(w, tones, args.threshold_db)
        rows.append({
            "window": w.kind.label,
            "ezc": metrics.ezc,
            "wsc": metrics.wsc,
            "nze": metrics.nze,
            "continuity": metrics.continuity.value,
            "bc": window_lab.boundary_continuous(w.kind),
        })
    plot = None
    if args.plot:
        plot = lambda path: _plot_windows(_windows(args), path)
    return rows, {}, plot


def cmd_rip(args):
    if args.m > args.n or args.k > args.m:
        raise UsageError("need k <= M <= N")
    ens = measurement.sample_ensemble(args.m, args.n, args.seed)
    rows = []
    for w in _windows(args):
        op = measurement.compose_windowed(ens, w)
        est = measurement.rip_empirical(op, args.k, args.trials, args.seed, args.delta_ref)
        rows.append({
            "window": w.kind.label,
            "wsc": window_lab.wsc(w),
            "ul_ref": est.theoretical_lower,
            "ub_ref": est.theoretical_upper,
            "ul_exp": est.empirical_lower,
            "ub_exp": est.empirical_upper,
            "midpoint": est.midpoint,
            "mean_ratio": est.mean_ratio,
            "mean_w2": float(np.mean(w.coefficients ** 2)),
        })
    plot = (lambda path: _plot_rip(rows, path)) if args.plot else None
    return rows, {}, plot


def cmd_leakage(args):
    rows = []
    worst = 0.0
    for n in args.lengths:
        grid = spectrum_core.SamplingGrid(1.0, n)
        freq = args.tone_bin * grid.bin_width * (n / args.lengths[0])
        delta = spectrum_core.mismatch_delta(freq, grid)
        closed = spectrum_core.leakage_magnitude(1.0, delta, n)
        direct = np.abs(spectrum_core.dft(spectrum_core.complex_tone(1.0, freq, grid), fast=False))
        worst = max(worst, float(np.max(np.abs(closed - direct))) / n)
        for k in range(n):
            rows.append({"n": n, "bin": k, "frequency": k / n, "closed_form": closed[k],
                         "dft_magnitude": direct[k], "normalized": direct[k] / n})
    summary = {"max_abs_error_over_n": worst}
    plot = (lambda path: _plot_leakage(rows, args.lengths, path)) if args.plot else None
    return rows, summary, plot


def cmd_subspaces(args):
    rows = []
    for b in range(1, args.max_block + 1):
        if args.components * b > args.n:
            break
        prof = block_model.freq_distribution_profile(args.n, args.components, b)
        for c, p, cnt in zip(prof.group_counts, prof.probabilities, prof.counts):
            rows.append({"block_size": b, "groups": c, "ln_count": cnt.ln_value, "probability": p})
    plot = (lambda path: _plot_subspaces(rows, path)) if args.plot else None
    return rows, {}, plot


def _bound_spec(args) -> spectrum_core.MultiToneSpec:
    return spectrum_core.MultiToneSpec.from_bins(args.n, args.tone_bins, noise_std=args.noise_std)


def cmd_bounds(args):
    spec = _bound_spec(args)
    inputs = block_model.BoundInputs(args.ric, args.ensemble_constant, args.confidence)
    rows = []
    for w in _windows(args):
        res = block_model.pipeline_bound(spec, w, args.floor_db, inputs, args.seed)
        kc = res.blocks.kc_params()
        rows.append({
            "window": w.kind.label,
            "nonzeros": kc.total_nonzeros,
            "blocks": kc.block_count,
            "ln_subspaces": res.count.ln_value,
            "sample_bound": res.measurements,
            "asymptotic": block_model.sample_bound_asymptotic(kc.signal_length, kc.total_nonzeros, kc.block_count),
        })
    plot = (lambda path: _plot_bars(rows, "sample_bound", "measurements M", path)) if args.plot else None
    return rows, {}, plot


def cmd_recover(args):
    spec = _bound_spec(args)
    rows = []
    for w in _windows(args):
        table = recovery.measurement_sweep(spec, w, args.floor_db, args.m_grid, args.trials, args.seed)
        for r in table.rows:
            rows.append({"window": table.window, "m": r.measurements, "successes": r.successes,
                         "trials": r.trials, "rate": r.rate})
    summary = {"success_nmse": recovery.SUCCESS_NMSE}
    plot = (lambda path: _plot_sweep(rows, path)) if args.plot else None
    return rows, summary, plot


# --- plots ------------------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "wincss"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save(fig, path: Path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    import matplotlib.pyplot as plt

    plt.close(fig)


def _plot_windows(windows, path):
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for w in windows:
        n = w.length
        ax1.plot(np.arange(n) / (n - 1), w.coefficients, label=w.kind.label)
        pad = np.abs(np.fft.fftshift(np.fft.fft(w.coefficients, 16 * n)))
        db = 20 * np.log10(np.maximum(pad / pad.max(), 1e-12))
        bins = (np.arange(pad.size) - pad.size // 2) / 16
        keep = np.abs(bins) <= 20
        ax2.plot(bins[keep], db[keep], label=w.kind.label)
    ax1.axvline(window_lab.EDGE_FRACTION, color="k", lw=0.5, ls="--")
    ax1.set_xlabel("normalized time")
    ax2.set_xlabel("bins")
    ax2.set_ylabel("dB")
    ax2.set_ylim(-140, 5)
    ax1.legend(fontsize=7)
    _save(fig, path)


def _plot_rip(rows, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, r in enumerate(rows):
        ax.plot([i - 0.1, i - 0.1], [r["ul_ref"], r["ub_ref"]], "b-", lw=3)
        ax.plot([i + 0.1, i + 0.1], [r["ul_exp"], r["ub_exp"]], "r-", lw=3)
    ax.set_xticks(range(len(rows)), [r["window"] for r in rows])
    ax.set_ylabel("||Theta x||^2 / ||x||^2")
    _save(fig, path)


def _plot_leakage(rows, lengths, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    for n in lengths:
        sub = [r for r in rows if r["n"] == n]
        f = [r["frequency"] for r in sub]
        ax.plot(f, [r["closed_form"] / n for r in sub], label=f"closed form N={n}")
        ax.plot(f, [r["normalized"] for r in sub], ".", ms=2, label=f"DFT N={n}")
    ax.set_xlabel("normalized frequency")
    ax.legend(fontsize=7)
    _save(fig, path)


def _plot_subspaces(rows, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    for c in sorted({r["groups"] for r in rows}):
        sub = [r for r in rows if r["groups"] == c]
        ax.plot([r["block_size"] for r in sub], [r["probability"] for r in sub], label=f"C={c}")
    ax.set_xlabel("block size")
    ax.set_ylabel("probability")
    ax.legend()
    _save(fig, path)


def _plot_bars(rows, key, label, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar([r["window"] for r in rows], [r[key] for r in rows])
    ax.set_ylabel(label)
    _save(fig, path)


def _plot_sweep(rows, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    for name in dict.fromkeys(r["window"] for r in rows):
        sub = [r for r in rows if r["window"] == name]
        ax.plot([r["m"] for r in sub], [r["rate"] for r in sub], "o-", label=name)
    ax.set_xlabel("M")
    ax.set_ylabel("success rate")
    ax.legend()
    _save(fig, path)


# --- argument parsing -------------------------------------------------------

def _window_list(text: str) -> List[str]:
    names = [t.strip().lower() for t in text.split(",") if t.strip()]
    for name in names:
        window_lab.WindowKind.parse(name)
    return names


def _float_list(text: str) -> List[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> List[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _common(p: argparse.ArgumentParser, windows: str, n: int):
    p.add_argument("--window", "--windows", "-w", dest="windows", type=_window_list, default=_window_list(windows),
                   help="comma-separated window kinds (gaussian:<sigma> allowed)")
    p.add_argument("--n", type=int, default=n, help="record length N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="output table path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--plot", action="store_true", help="also write <out>.svg")
    p.add_argument("--config", type=Path, default=None, help="replay the config embedded in a previous output")


COMMANDS: Dict[str, Callable] = {
    "windows": cmd_windows,
    "rip": cmd_rip,
    "leakage": cmd_leakage,
    "subspaces": cmd_subspaces,
    "bounds": cmd_bounds,
    "recover": cmd_recover,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wincss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    all_windows = ",".join(NAMED_KINDS)

    p = sub.add_parser("windows", help="window metrics table (EZC, WSC, NZE, continuity)")
    _common(p, all_windows, 1024)
    p.add_argument("--threshold-db", type=float, default=window_lab.DEFAULT_NZE_THRESHOLD_DB)
    p.add_argument("--tone-bins", type=_float_list, default=[100.5], help="NZE test tones, in bins")

    p = sub.add_parser("rip", help="windowed RIP intervals")
    _common(p, all_windows, 1024)
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--delta-ref", type=float, default=measurement.DEFAULT_DELTA_REF)

    p = sub.add_parser("leakage", help="closed-form leakage vs direct DFT")
    _common(p, "rectangular", 64)
    p.add_argument("--lengths", type=_int_list, default=None, help="record lengths (default: N and 4N)")
    p.add_argument("--tone-bin", type=float, default=10.3, help="tone position in bins of the first length")

    p = sub.add_parser("subspaces", help="frequency-distribution probabilities")
    _common(p, "rectangular", 100)
    p.add_argument("--components", type=int, default=2)
    p.add_argument("--max-block", type=int, default=10)

    for name, help_text, n in (("bounds", "sample bound per window", 1024),
                               ("recover", "Block-OMP success vs M", 256)):
        p = sub.add_parser(name, help=help_text)
        _common(p, all_windows if name == "bounds" else "blackman,rectangular", n)
        p.add_argument("--floor-db", type=float, default=-50.0)
        p.add_argument("--tone-bins", type=_float_list, default=None,
                       help="tone positions in bins (default scales with N)")
        p.add_argument("--noise-std", type=float, default=0.0)
        if name == "bounds":
            p.add_argument("--ric", type=float, default=0.5)
            p.add_argument("--ensemble-constant", type=float, default=1.0)
            p.add_argument("--confidence", type=float, default=0.0)
        else:
            p.add_argument("--m-grid", type=_int_list, default=None, help="ascending M values")
            p.add_argument("--trials", type=int, default=20)
            p.add_argument("--m", type=int, default=None, help="single M (shorthand for --m-grid)")
    return parser


def _finalize(args) -> dict:
    """Fill data-dependent defaults; return the replayable config."""
    if getattr(args, "lengths", "absent") is None:
        args.lengths = [args.n, 4 * args.n]
    if hasattr(args, "tone_bins") and args.tone_bins is None:
        args.tone_bins = [args.n * f for f in (0.1182, 0.2736, 0.3941)]
    if hasattr(args, "m_grid"):
        m = getattr(args, "m", None)
        if args.m_grid is None:
            args.m_grid = [m] if m else sorted({max(4, args.n * i // 8) for i in range(1, 9)})
        if hasattr(args, "m"):
            del args.m
    return {k: v for k, v in sorted(vars(args).items()) if k not in _OUTPUT_KEYS}


def _load_config(path: Path) -> dict:
    try:
        return read_table(path.read_text())["config"]
    except OSError:
        raise
    except (ValueError, KeyError) as exc:
        raise UsageError(f"{path}: no embedded config ({exc})") from exc


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config is not None:
            for key, value in _load_config(args.config).items():
                setattr(args, key, value)
        config = _finalize(args)
        rows, summary, plot = COMMANDS[args.command](args)
        text = render(args.command, config, rows, args.format, summary)
    except OSError as exc:
        print(f"wincss: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"wincss: invalid argument: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        if args.out is None:
            sys.stdout.write(text)
        else:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        if plot is not None:
            target = args.out.with_suffix(".svg") if args.out else Path(f"{args.command}.svg")
            plot(target)
    except OSError as exc:
        print(f"wincss: I/O error writing {exc.filename or args.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
