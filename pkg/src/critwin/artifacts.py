"""Deterministic on-disk artifacts: CSV traces and the run manifest.

All CSVs are plain text, `\n` newlines, no locale formatting; reals carry 17
significant digits so re-runs are byte-identical.  The manifest lists every
output file with its SHA-256 digest.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

__all__ = [
    "TOOL_VERSION",
    "write_trace_csv",
    "write_cousin_csv",
    "write_walk_csv",
    "write_path_csv",
    "write_hitting_csv",
    "write_deterministic_csv",
    "write_sweep_csv",
    "sha256_file",
    "write_manifest",
]

TOOL_VERSION = "critwin 0.1.0"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_lines(path: Path, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def write_trace_csv(path, Z, C) -> None:
    """Height-profile trace: one `h,Z,C` row per height."""
    _write_lines(
        Path(path), "h,Z,C", (f"{h},{int(z)},{int(c)}" for h, (z, c) in enumerate(zip(Z, C)))
    )


def write_cousin_csv(path, csn, K) -> None:
    """Cousin series: `j,csn,K` with K(j) the cumulative sum below j."""
    _write_lines(
        Path(path),
        "j,csn,K",
        (f"{j},{int(c)},{int(K[j])}" for j, c in enumerate(csn)),
    )


def write_walk_csv(path, X) -> None:
    _write_lines(Path(path), "i,X", (f"{i},{int(x)}" for i, x in enumerate(X)))


def write_path_csv(path, dt, Z, C) -> None:
    """Continuum path: `t,Z,C` with 17-significant-digit reals."""
    _write_lines(
        Path(path),
        "t,Z,C",
        (
            f"{_fmt(i * dt)},{_fmt(z)},{_fmt(c)}"
            for i, (z, c) in enumerate(zip(Z, C))
        ),
    )


def write_hitting_csv(path, times, truncated) -> None:
    _write_lines(
        Path(path),
        "replicate,T,truncated",
        (
            f"{r},{_fmt(t)},{int(tr)}"
            for r, (t, tr) in enumerate(zip(times, truncated))
        ),
    )


def write_deterministic_csv(path, t_grid, limit) -> None:
    """Deterministic curves on a grid: `t,f,c,z,K`."""
    rows = (
        f"{_fmt(t)},{_fmt(limit.f(t))},{_fmt(limit.c(t))},{_fmt(limit.z(t))},{_fmt(limit.k_limit(t))}"
        for t in t_grid
    )
    _write_lines(Path(path), "t,f,c,z,K", rows)


def write_sweep_csv(path, sweep) -> None:
    _write_lines(
        Path(path),
        "n,quantity,sup_value",
        (f"{n},{quantity},{_fmt(v)}" for n, quantity, v in sweep.rows()),
    )


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(out_dir, command: str, config: dict, outputs, duration_s: float) -> Path:
    """Manifest JSON naming every output with its digest; returns its path."""
    out_dir = Path(out_dir)
    manifest = {
        "tool": TOOL_VERSION,
        "command": command,
        "config": config,
        "duration_s": duration_s,
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
    }
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
