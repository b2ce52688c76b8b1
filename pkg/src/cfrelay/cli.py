"""Command-line front end: flat key=value config in, outage CSV and manifest out.

Config keys (one per line, ``#`` starts a comment)::

    users, relays, sigma_h2, sigma_f2, sigma_g2, target_rate
    snr_t_db, snr_r_db      # pin one SNR; the other follows the grid
    snr, trials, seed, schemes, paired

Manifests use the same format, so a manifest can be fed back as ``--config``
to regenerate its CSV.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import os
import re
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .channel import NetworkConfig, db_to_linear
from .schemes import SCHEME_TAGS, InvariantViolation
from .simrunner import OutagePoint, SweepSpec, estimate_outage

__all__ = ["ConfigError", "parse_config", "parse_snr_grid", "format_csv", "format_manifest",
           "run", "main"]

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INVARIANT = 0, 2, 3, 4
CSV_HEADER = "scheme,snr_db,trials,outages,outage_prob,ci95_low,ci95_high"
DEFAULT_SNR = "0:2:30"
DEFAULT_TRIALS = 10_000

_NET_KEYS = {
    "users": "num_users",
    "relays": "num_relays",
    "sigma_h2": "var_h",
    "sigma_f2": "var_f",
    "sigma_g2": "var_g",
    "target_rate": "target_rate",
}
_INT_KEYS = {"users", "relays", "trials", "seed", "master_seed"}
_SWEEP_KEYS = {"snr", "snr_points", "trials", "seed", "master_seed", "schemes", "paired"}
_INFO_KEYS = {"tool_version", "timestamp_utc", "config_path", "sweep"}
_ALL_KEYS = set(_NET_KEYS) | {"snr_t_db", "snr_r_db"} | _SWEEP_KEYS | _INFO_KEYS
_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")


class ConfigError(ValueError):
    """Bad configuration; ``key`` and ``line`` locate the problem when known."""

    def __init__(self, msg, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {msg}" if where else msg)
        self.key, self.line = key, line


def _number(text, key, line):
    if not _NUMBER.fullmatch(text):
        raise ConfigError(f"not a decimal number: {text!r}", key, line)
    if key in _INT_KEYS:
        v = float(text)
        if v != int(v):
            raise ConfigError(f"expected an integer, got {text!r}", key, line)
        return int(text) if re.fullmatch(r"[+-]?\d+", text) else int(v)
    return float(text)


def _bool(text, key=None, line=None):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}", key, line)


def parse_snr_grid(text: str) -> tuple[float, ...]:
    """``start:step:stop`` (inclusive) in dB, or a comma-separated list."""
    text = text.strip()
    if ":" not in text:
        try:
            return tuple(float(t) for t in text.split(","))
        except ValueError:
            raise ConfigError(f"bad SNR list {text!r}") from None
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"SNR grid must be start:step:stop, got {text!r}")
    try:
        start, step, stop = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad SNR grid {text!r}") from None
    if not step > 0 or stop < start:
        raise ConfigError(f"SNR grid needs step > 0 and stop >= start, got {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 10) for i in range(n))


def parse_schemes(text: str) -> tuple[str, ...]:
    text = text.strip()
    if text == "all":
        return SCHEME_TAGS
    tags = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [t for t in tags if t not in SCHEME_TAGS]
    if bad or not tags:
        raise ConfigError(f"unknown scheme tag(s) {bad}; choose from {', '.join(SCHEME_TAGS)} or all")
    return tags


def _entries(text: str):
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected key = value", line=lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError("unknown key", key, lineno)
        if key in seen:
            raise ConfigError(f"duplicate key (first on line {seen[key][1]})", key, lineno)
        if not value:
            raise ConfigError("missing value", key, lineno)
        seen[key] = (value, lineno)
    return seen


def parse_config(text: str) -> tuple[NetworkConfig, SweepSpec]:
    """Parse key=value text into a network and a sweep; empty text gives the defaults."""
    entries = _entries(text)
    net = {}
    for key, field in _NET_KEYS.items():
        if key in entries:
            value, line = entries[key]
            v = _number(value, key, line)
            if key.startswith("sigma") and not v > 0:
                raise ConfigError("variance must be positive", key, line)
            if key == "target_rate" and not v > 0:
                raise ConfigError("target rate must be positive", key, line)
            if key in ("users", "relays") and v < 1:
                raise ConfigError("must be at least 1", key, line)
            net[field] = v
    L = net.get("num_users", 2)
    M = net.get("num_relays", 3)
    if M < L:
        key = "relays" if "relays" in entries else "users"
        raise ConfigError(f"relays ({M}) must be >= users ({L})", key, entries[key][1])

    pinned = {}
    for key in ("snr_t_db", "snr_r_db"):
        if key in entries:
            value, line = entries[key]
            pinned[key] = _number(value, key, line)
    if len(pinned) == 2:
        raise ConfigError("pin at most one of snr_t_db / snr_r_db; the other follows the grid",
                          "snr_r_db", entries["snr_r_db"][1])
    sweep = "both"
    if "snr_t_db" in pinned:
        net["snr_t"], sweep = db_to_linear(pinned["snr_t_db"]), "snr_r"
    elif "snr_r_db" in pinned:
        net["snr_r"], sweep = db_to_linear(pinned["snr_r_db"]), "snr_t"
    if "sweep" in entries and entries["sweep"][0] != sweep:
        raise ConfigError(f"inconsistent with pinned SNR keys (expected {sweep})", "sweep",
                          entries["sweep"][1])
    try:
        cfg = NetworkConfig(**net)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    if "snr" in entries and "snr_points" in entries:
        raise ConfigError("give either snr or snr_points", "snr_points", entries["snr_points"][1])
    grid_key = "snr_points" if "snr_points" in entries else "snr"
    grid_text, grid_line = entries.get(grid_key, (DEFAULT_SNR, None))
    try:
        points = parse_snr_grid(grid_text)
    except ConfigError as exc:
        raise ConfigError(str(exc), grid_key, grid_line) from None
    if "seed" in entries and "master_seed" in entries:
        raise ConfigError("give either seed or master_seed", "master_seed",
                          entries["master_seed"][1])
    seed_key = "master_seed" if "master_seed" in entries else "seed"
    seed = 0
    if seed_key in entries:
        seed = _number(entries[seed_key][0], seed_key, entries[seed_key][1])
    trials = DEFAULT_TRIALS
    if "trials" in entries:
        trials = _number(entries["trials"][0], "trials", entries["trials"][1])
    schemes = SCHEME_TAGS
    if "schemes" in entries:
        try:
            schemes = parse_schemes(entries["schemes"][0])
        except ConfigError as exc:
            raise ConfigError(str(exc), "schemes", entries["schemes"][1]) from None
    paired = True
    if "paired" in entries:
        paired = _bool(entries["paired"][0], "paired", entries["paired"][1])
    try:
        spec = SweepSpec(points, trials, seed, schemes, paired, sweep)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, spec


def _g(x: float) -> str:
    return f"{x:.6g}"


def format_csv(points: list[OutagePoint]) -> str:
    rows = [CSV_HEADER]
    for p in points:
        rows.append(",".join([p.scheme, _g(p.snr_db), str(p.trials), str(p.outages),
                              _g(p.outage_prob), _g(p.ci95_low), _g(p.ci95_high)]))
    return "\n".join(rows) + "\n"


def format_manifest(cfg: NetworkConfig, spec: SweepSpec, config_path: str | None,
                    timestamp: str) -> str:
    lines = [f"# reproduce with: cfrelay --config <this file> --out <csv>"]
    if config_path is not None:
        lines.append(f"config_path = {config_path}")
    lines += [
        f"users = {cfg.num_users}",
        f"relays = {cfg.num_relays}",
        f"sigma_h2 = {cfg.var_h!r}",
        f"sigma_f2 = {cfg.var_f!r}",
        f"sigma_g2 = {cfg.var_g!r}",
        f"target_rate = {cfg.target_rate!r}",
    ]
    if spec.sweep == "snr_r":
        lines.append(f"snr_t_db = {10 * math.log10(cfg.snr_t)!r}")
    elif spec.sweep == "snr_t":
        lines.append(f"snr_r_db = {10 * math.log10(cfg.snr_r)!r}")
    lines += [
        f"sweep = {spec.sweep}",
        f"snr_points = {','.join(repr(p) for p in spec.snr_db_points)}",
        f"trials = {spec.trials}",
        f"schemes = {','.join(spec.schemes)}",
        f"paired = {str(spec.paired).lower()}",
        f"tool_version = {__version__}",
        f"master_seed = {spec.master_seed}",
        f"timestamp_utc = {timestamp}",
    ]
    return "\n".join(lines) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cfrelay", description="Outage probability of "
                                "compute-and-forward relaying strategies versus SNR.")
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--schemes", help=f"comma list of {','.join(SCHEME_TAGS)} or 'all'")
    p.add_argument("--snr", help=f"dB grid start:step:stop (default {DEFAULT_SNR})")
    p.add_argument("--trials", type=int, help=f"trials per SNR point (default {DEFAULT_TRIALS})")
    p.add_argument("--seed", type=int, help="64-bit master seed (default 0)")
    p.add_argument("--out", default="outage.csv", help="CSV path; manifest goes next to it")
    p.add_argument("--threads", default="1", help="worker processes, or 'auto'")
    p.add_argument("--paired", help="same channel draws for all schemes (default true)")
    p.add_argument("--quiet", action="store_true", help="no progress on stderr")
    return p


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest")


def run(args) -> int:
    """Execute one sweep from parsed (or raw list) arguments; returns the exit code."""
    if not isinstance(args, argparse.Namespace):
        try:
            args = _build_parser().parse_args(args)
        except SystemExit as exc:
            return EXIT_CONFIG if exc.code else EXIT_OK
    err = sys.stderr

    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot read config {args.config}: {exc.strerror}", file=err)
            return EXIT_IO
    try:
        cfg, spec = parse_config(text)
        changes = {}
        if args.schemes is not None:
            changes["schemes"] = parse_schemes(args.schemes)
        if args.snr is not None:
            changes["snr_db_points"] = parse_snr_grid(args.snr)
        if args.trials is not None:
            changes["trials"] = args.trials
        if args.seed is not None:
            changes["master_seed"] = args.seed
        if args.paired is not None:
            changes["paired"] = _bool(args.paired, "--paired")
        spec = replace(spec, **changes)
        threads = args.threads
        if threads != "auto":
            if not threads.isdigit() or int(threads) < 1:
                raise ConfigError(f"--threads must be a positive integer or 'auto', got {threads!r}")
            threads = int(threads)
    except ValueError as exc:
        prefix = f"{args.config}: " if args.config else ""
        print(f"error: {prefix}{exc}", file=err)
        return EXIT_CONFIG

    out = Path(args.out)
    if not out.parent.is_dir() or (out.exists() and not os.access(out, os.W_OK)) \
            or not os.access(out.parent, os.W_OK):
        print(f"error: cannot write to {out}", file=err)
        return EXIT_IO

    def progress(done, total):
        if not args.quiet:
            print(f"\r{done}/{total} chunks", end="" if done < total else "\n", file=err)

    try:
        points = estimate_outage(cfg, spec, workers=threads, progress=progress)
    except InvariantViolation as exc:
        print(f"error: internal invariant violated: {exc}", file=err)
        return EXIT_INVARIANT

    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_csv(points))
        with open(manifest_path(out), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_manifest(cfg, spec, args.config, stamp))
    except OSError as exc:
        print(f"error: cannot write results: {exc.strerror}", file=err)
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else list(argv))


if __name__ == "__main__":
    sys.exit(main())
