"""Result files and run manifests.

Every file is written to a temporary sibling and renamed into place, so a
reader never sees a partial file. Floats are written with ``repr`` (shortest
round-trip form), independent of locale.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__, _kernels
from .errors import TokencycleError


class OutputError(TokencycleError):
    exit_code = 4


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from None
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return atomic_write_text(path, csv_text(header, rows))


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n")


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def write_manifest(
    out_dir,
    command: str,
    inputs: Sequence,
    outputs: Sequence[Path],
    started: str,
    **run_fields,
) -> Path:
    """Record what is needed to reproduce the run: input digests, seed,
    trial count, tool version and kernel backend."""
    manifest = {
        "command": command,
        "inputs": [{"path": str(p), "digest": file_digest(p)} for p in inputs],
        "tool_version": __version__,
        "kernel_backend": _kernels.BACKEND,
        "started": started,
        "finished": utc_now(),
        "outputs": sorted(Path(p).name for p in outputs),
        **run_fields,
    }
    return write_json(Path(out_dir) / "manifest.json", manifest)


# --- table writers -------------------------------------------------------------


def trial_rows(outcomes, input_names: Sequence[str]):
    for o in outcomes:
        yield [o.trial_index, *(o.sampled_values[k] for k in input_names), o.net_benefit,
               o.recycling_volume, o.token_revenue, o.op_cost, o.env_benefit, o.clamp_count]


def trials_header(input_names: Sequence[str]) -> list[str]:
    return ["trial_index", *input_names, "net_benefit", "recycling_volume", "token_revenue",
            "op_cost", "env_benefit", "clamp_count"]


HISTOGRAM_HEADER = ["bin_lo", "bin_hi", "count"]
SWEEP_HEADER = ["parameter_value", "mean", "std", "p5", "p95"]
PAIRED_HEADER = ["trial_index", "tv_draw", "participation_tok", "net_tok", "net_sub", "delta"]
TRAJECTORY_HEADER = ["t", "efficiency", "waste", "utility", "participation", "token_value",
                     "recycling_volume", "op_cost", "env_benefit", "token_revenue", "net_benefit", "flags"]


def trajectory_rows(points):
    for p in points:
        yield [p.t, p.efficiency, p.waste, p.utility, p.participation, p.token_value, p.recycling_volume,
               p.op_cost, p.env_benefit, p.token_revenue, p.net_benefit, ";".join(sorted(p.clamp_flags))]


def format_summary(summary, title: str = "net benefit") -> str:
    std = f"{summary.sample_std:.6g}" if summary.std_defined else "undefined (n=1)"
    lines = [
        f"{title}",
        f"  n      {summary.n}",
        f"  mean   {summary.mean:.6g}",
        f"  std    {std}",
        f"  min    {summary.min:.6g}",
        f"  p5     {summary.p5:.6g}",
        f"  p50    {summary.p50:.6g}",
        f"  p95    {summary.p95:.6g}",
        f"  max    {summary.max:.6g}",
        f"  clamps {summary.total_clamp_events}",
    ]
    return "\n".join(lines)
