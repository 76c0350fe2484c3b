"""Command-line entry point: ``nsmimo simulate | stats | sweep``.

Exit status is 0 when every output was written and validated, 2 for
configuration or usage errors and 3 for unreadable or inconsistent input
files.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cir import ChannelSimulator, CirRecord, transfer_function
from . import stats as st
from .record_io import (RecordFormatError, RunManifest, read_record, write_events_csv, write_record,
                        write_record_csv, write_table_csv)
from .scenario import ConfigError, apply_overrides, is_numeric_key, loads_config, resolve_key

log = logging.getLogger("nsmimo")

JOBS_ENV = "NSMIMO_JOBS"


class CliError(Exception):
    def __init__(self, message: str, status: int = 2):
        super().__init__(message)
        self.status = status


def default_jobs() -> int:
    value = os.environ.get(JOBS_ENV, "1")
    try:
        jobs = int(value)
    except ValueError:
        raise CliError(f"{JOBS_ENV} must be an integer, got {value!r}") from None
    return max(jobs, 1)


def _parse_assignments(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise CliError(f"expected KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", 3) from None


def _map(fn, jobs: int, tasks):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        futures = [pool.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _simulate_one(text: str, realization: int, outdir: str, fmt: str) -> list[str]:
    cfg = loads_config(text)
    sim = ChannelSimulator(cfg, realization)
    record = sim.evaluate()
    out = Path(outdir)
    stem = f"realization_{realization:04d}"
    if fmt == "binary":
        path = write_record(out / f"{stem}.cir", record, text)
        back, back_text = read_record(path)
        if not back.identical(record) or back_text != text:
            raise CliError(f"{path}: read-back differs from the simulated record", 3)
    else:
        path = write_record_csv(out / f"{stem}.csv", record)
    events = write_events_csv(out / f"{stem}_events.csv", sim.events)
    return [str(path), str(events)]


def cmd_simulate(args) -> int:
    started = time.time()
    text = _read_text(args.config)
    overrides = _parse_assignments(args.set)
    if args.seed is not None:
        overrides["simulation.seed"] = str(args.seed)
    if args.realizations is not None:
        overrides["simulation.realizations"] = str(args.realizations)
    text = apply_overrides(text, overrides)
    cfg = loads_config(text)
    outdir = Path(args.output)
    tasks = [(text, r, str(outdir), args.format) for r in range(cfg.realizations)]
    log.info("simulating %d realization(s), %d snapshots each", cfg.realizations, cfg.n_snapshots)
    paths = [p for group in _map(_simulate_one, args.jobs, tasks) for p in group]
    manifest = RunManifest(
        command_line=list(args.argv), fingerprint=cfg.fingerprint, seed=cfg.seed, version=__version__,
        started=_dt.datetime.fromtimestamp(started, _dt.timezone.utc).isoformat(),
        wall_clock_seconds=0.0,
    )
    for p in paths:
        manifest.add_output(p)
    manifest.wall_clock_seconds = round(time.time() - started, 3)
    manifest.write(outdir / "manifest.json")
    print(f"wrote {len(paths)} file(s) and manifest.json to {outdir}")
    return 0


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

def _load_records(paths) -> tuple[list[CirRecord], str]:
    records, texts = [], []
    for p in paths:
        try:
            rec, text = read_record(p)
        except OSError as exc:
            raise CliError(f"cannot read {p}: {exc.strerror}", 3) from None
        except RecordFormatError as exc:
            raise CliError(str(exc), 3) from None
        records.append(rec)
        texts.append(text)
    if len({r.fingerprint for r in records}) > 1:
        raise CliError("records come from different configurations (fingerprint mismatch)", 3)
    return records, texts[0]


def _theory_config(records, text):
    if not text:
        raise CliError("--theoretical needs records that embed their configuration", 3)
    cfg = loads_config(text)
    if cfg.fingerprint != records[0].fingerprint:
        raise CliError("embedded configuration does not match the record fingerprint", 3)
    return cfg


def _ensembles(records, cfg, snapshot: int):
    return [ChannelSimulator(cfg, rec.realization).rays(int(rec.steps[snapshot])) for rec in records]


def _complex_columns(name, values):
    v = np.asarray(values, dtype=complex)
    return {f"{name}_re": v.real, f"{name}_im": v.imag, f"{name}_abs": np.abs(v)}


def _write_columns(path, columns: dict, comments=()):
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    rows = (tuple(a[i].item() for a in arrays) for i in range(len(arrays[0])))
    write_table_csv(path, names, rows, comments)


def _stats_acf(args, records, text, psd: bool):
    curve = st.acf_empirical(records, args.start, args.max_lag, args.rx, args.tx)
    cols = {"lag": curve.lags, **_complex_columns("empirical", curve.values)}
    theory = None
    if args.theoretical:
        cfg = _theory_config(records, text)
        theory = st.acf_theoretical(_ensembles(records, cfg, args.start), curve.lags, cfg)
        cols.update(_complex_columns("theoretical", theory.values))
    if not psd:
        return cols
    spec = st.doppler_psd(curve, args.window, args.n_fft)
    cols = {"frequency": spec.lags, "empirical": spec.values}
    if theory is not None:
        cols["theoretical"] = st.doppler_psd(theory, args.window, args.n_fft).values
    return cols


def _stats_ccf(args, records, text):
    curve = st.ccf_empirical(records, args.snapshot, args.tx, args.normalization)
    cols = {"spacing": curve.lags, **_complex_columns("empirical", curve.values)}
    if curve.half_width is not None:
        cols["ci95_half_width"] = curve.half_width
    if args.theoretical:
        cfg = _theory_config(records, text)
        rx = records[0].rx_positions
        axis = rx[-1] - rx[0]
        norm = np.linalg.norm(axis)
        axis = axis / norm if norm > 0 else np.array([0.0, 1.0, 0.0])
        theory = st.ccf_theoretical(_ensembles(records, cfg, args.snapshot), curve.lags, axis)
        cols.update(_complex_columns("theoretical", theory.values))
    return cols


def _levels(spec: str | None) -> np.ndarray:
    if spec is None:
        return np.geomspace(0.01, 3.0, 60)
    try:
        return np.array([float(x) for x in spec.split(",")])
    except ValueError:
        raise CliError(f"--levels must be comma-separated numbers, got {spec!r}") from None


def _stats_lcr(args, records, text, afd: bool):
    r = _levels(args.levels)
    envs = [st.first_path_envelope(rec, args.rx, args.tx) for rec in records]
    dt = float((records[0].steps[1] - records[0].steps[0]) * records[0].sample_interval)
    fn = st.afd_empirical if afd else st.lcr_empirical
    cols = {"level": r, "empirical": fn(envs, dt, r)}
    if args.theoretical:
        cfg = _theory_config(records, text)
        ens = _ensembles(records[:1], cfg, args.snapshot)[0]
        moments = st.spectral_moments_from_rays(ens)
        K = cfg.scenario.rice_factor_K
        cols["theoretical"] = (st.afd_theoretical if afd else st.lcr_theoretical)(r, moments, K)
    return cols


def _stats_stationarity(args, records):
    results = [st.stationary_interval(rec, args.n_pdp, args.c_thresh, args.bin_width, args.rule, args.max_lag)
               for rec in records]
    intervals = np.concatenate([res.intervals for res in results])
    x, p = st.ccdf(intervals)
    comments = [f"drops={intervals.size}", f"c_thresh={args.c_thresh}", f"n_pdp={args.n_pdp}",
                f"interval_80pct={st.ccdf_quantile(intervals, 0.8)!r}",
                f"interval_60pct={st.ccdf_quantile(intervals, 0.6)!r}"]
    return {"interval": x, "ccdf": p}, comments


def _stats_transfer(args, records):
    if args.f_step <= 0 or args.f_stop < args.f_start:
        raise CliError("need f_step > 0 and f_stop >= f_start")
    freqs = np.arange(args.f_start, args.f_stop + 0.5 * args.f_step, args.f_step)
    rec = records[0]
    snaps = np.arange(0, rec.n_snapshots, args.stride)
    # Coefficients are baseband, so the phase uses the offset from the carrier.
    H = transfer_function(rec, freqs - rec.carrier_frequency, snaps)[args.rx, args.tx]  # (F, T)
    tt, ff = np.meshgrid(rec.times[snaps], freqs, indexing="ij")
    Ht = H.T
    return {"time": tt.ravel(), "frequency": ff.ravel(), **_complex_columns("H", Ht.ravel())}


def cmd_stats(args) -> int:
    records, text = _load_records(args.records)
    comments = [f"fingerprint={records[0].fingerprint}", f"records={len(records)}"]
    kind = args.stat
    if kind == "acf":
        cols = _stats_acf(args, records, text, psd=False)
    elif kind == "psd":
        cols = _stats_acf(args, records, text, psd=True)
    elif kind == "ccf":
        cols = _stats_ccf(args, records, text)
    elif kind in ("lcr", "afd"):
        cols = _stats_lcr(args, records, text, afd=kind == "afd")
    elif kind == "stationarity":
        cols, extra = _stats_stationarity(args, records)
        comments += extra
    else:
        cols = _stats_transfer(args, records)
    _write_columns(args.output, cols, comments)
    print(f"wrote {args.output}")
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _sweep_point(text: str, realization: int, params: dict, record_path: str | None) -> np.ndarray:
    cfg = loads_config(text)
    record = ChannelSimulator(cfg, realization).evaluate()
    if record_path:
        write_record(record_path, record, text)
    res = st.stationary_interval(record, params["n_pdp"], params["c_thresh"], params["bin_width"], params["rule"],
                                 params["max_lag"])
    return res.intervals


def cmd_sweep(args) -> int:
    started = time.time()
    key, _, values = args.vary.partition("=")
    key = key.strip()
    resolve_key(key)
    if not is_numeric_key(key):
        raise CliError(f"--vary needs a numeric configuration key, {key!r} is not numeric")
    try:
        values = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"--vary values must be numbers: {args.vary!r}") from None
    if not values:
        raise CliError("--vary needs at least one value")
    base = _read_text(args.config)
    fixed = _parse_assignments(args.set)
    if args.realizations is not None:
        fixed["simulation.realizations"] = str(args.realizations)
    base_cfg = loads_config(apply_overrides(base, fixed))
    outdir = Path(args.output)
    params = {"n_pdp": args.n_pdp, "c_thresh": args.c_thresh, "bin_width": args.bin_width, "rule": args.rule,
              "max_lag": args.max_lag}
    texts, tasks, owners = [], [], []
    for i, v in enumerate(values):
        seed = base_cfg.seed if args.common_seed else base_cfg.seed + i
        ov = dict(fixed)
        ov[key] = repr(v)
        ov["simulation.seed"] = str(seed)
        text = apply_overrides(base, ov)
        cfg = loads_config(text)
        texts.append((v, seed, cfg))
        for r in range(cfg.realizations):
            path = str(outdir / f"point_{i:02d}" / f"realization_{r:04d}.cir") if args.keep_records else None
            tasks.append((text, r, params, path))
            owners.append(i)
    results = _map(_sweep_point, args.jobs, tasks)
    manifest = RunManifest(command_line=list(args.argv), fingerprint=base_cfg.fingerprint, seed=base_cfg.seed,
                           version=__version__,
                           started=_dt.datetime.fromtimestamp(started, _dt.timezone.utc).isoformat(),
                           wall_clock_seconds=0.0)
    summary = []
    for i, (v, seed, cfg) in enumerate(texts):
        iv = np.concatenate([res for res, o in zip(results, owners) if o == i])
        x, p = st.ccdf(iv)
        path = outdir / f"ccdf_{i:02d}.csv"
        write_table_csv(path, ["interval", "ccdf"], zip(x.tolist(), p.tolist()),
                        [f"{key}={v!r}", f"seed={seed}", f"fingerprint={cfg.fingerprint}"])
        manifest.add_output(path)
        summary.append((v, seed, iv.size, *(st.ccdf_quantile(iv, q) for q in (0.8, 0.6, 0.5, 0.2))))
        if args.keep_records:
            for rp in sorted((outdir / f"point_{i:02d}").glob("*.cir")):
                manifest.add_output(rp)
    spath = outdir / "summary.csv"
    write_table_csv(spath, [key, "seed", "drops", "interval_80pct", "interval_60pct", "interval_50pct",
                            "interval_20pct"], [tuple(float(x) if isinstance(x, (float, np.floating)) else x
                                                      for x in row) for row in summary])
    manifest.add_output(spath)
    manifest.wall_clock_seconds = round(time.time() - started, 3)
    manifest.write(outdir / "manifest.json")
    for row in summary:
        print(f"{key}={row[0]:g}: 80% stationary interval {row[3] * 1e3:.3f} ms over {row[2]} drops")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsmimo", description="Non-stationary wideband MIMO channel simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    jobs_help = f"parallel worker processes (default: ${JOBS_ENV} or 1)"

    p = sub.add_parser("simulate", help="simulate channel records from a config file")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--realizations", type=int)
    p.add_argument("--format", choices=("binary", "csv"), default="binary")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    p.add_argument("--jobs", type=int, default=None, help=jobs_help)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stats", help="statistics of simulated records, written as CSV")
    p.add_argument("stat", choices=("acf", "ccf", "psd", "lcr", "afd", "stationarity", "transfer"))
    p.add_argument("records", nargs="+", help="binary record files from one configuration")
    p.add_argument("-o", "--output", required=True, help="output CSV path")
    p.add_argument("--theoretical", action="store_true", help="add the closed-form curve")
    p.add_argument("--rx", type=int, default=0, help="receive element")
    p.add_argument("--tx", type=int, default=0, help="transmit element")
    p.add_argument("--start", type=int, default=0, help="acf/psd: first snapshot index")
    p.add_argument("--max-lag", type=int, default=None, help="acf/psd/stationarity: largest lag in snapshots")
    p.add_argument("--snapshot", type=int, default=0, help="ccf/lcr/afd: snapshot for the closed form")
    p.add_argument("--normalization", choices=("ensemble", "per-sample"), default="ensemble")
    p.add_argument("--window", choices=("hann", "rectangular"), default="hann")
    p.add_argument("--n-fft", type=int, default=None)
    p.add_argument("--levels", help="lcr/afd: comma-separated normalized thresholds")
    p.add_argument("--n-pdp", type=int, default=10)
    p.add_argument("--c-thresh", type=float, default=0.8)
    p.add_argument("--bin-width", type=float, default=5e-9, help="delay bin in seconds")
    p.add_argument("--rule", choices=("first-crossing", "max"), default="first-crossing")
    p.add_argument("--f-start", type=float, default=1990e6)
    p.add_argument("--f-stop", type=float, default=2010e6)
    p.add_argument("--f-step", type=float, default=0.1e6)
    p.add_argument("--stride", type=int, default=1, help="transfer: every n-th snapshot")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep", help="stationarity CCDFs over one varied config key")
    p.add_argument("config")
    p.add_argument("--vary", required=True, metavar="KEY=V1,V2,...")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--realizations", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--common-seed", action="store_true", help="use the base seed at every point")
    p.add_argument("--keep-records", action="store_true")
    p.add_argument("--n-pdp", type=int, default=10)
    p.add_argument("--c-thresh", type=float, default=0.8)
    p.add_argument("--bin-width", type=float, default=5e-9)
    p.add_argument("--rule", choices=("first-crossing", "max"), default="first-crossing")
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None, help=jobs_help)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = ["nsmimo", *argv]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if getattr(args, "jobs", 1) is None:
            args.jobs = default_jobs()
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.status
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RecordFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
