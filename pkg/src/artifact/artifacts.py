"""Artifact writers: CSV with a metadata comment line, stable JSON, static SVG."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

VERSION = "0.1.0"


def config_hash(config: dict) -> str:
    text = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def meta_block(config: dict, seed: int, command: str) -> dict:
    return {"command": command, "config_hash": config_hash(config), "seed": seed, "version": VERSION}


def write_csv(path: Path, header: list[str], rows, meta: dict) -> Path:
    """UTF-8 CSV; the first line is a '#' comment carrying the metadata, then the header row."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("# " + " ".join(f"{k}={meta[k]}" for k in sorted(meta)) + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([_fmt(v) for v in r])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict, meta: dict) -> Path:
    path = Path(path)
    body = {"meta": meta, **_jsonable(payload)}
    path.write_text(json.dumps(body, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return path


def write_svg(path: Path, meta: dict, points=None, polylines=(), size=(640, 480), pad: float = 0.05,
              title: str = "") -> Path:
    """Scatter points (dots) and polylines in the complex plane, equal aspect."""
    pts = np.zeros(0, complex) if points is None else np.asarray(points, complex).ravel()
    lines = [np.asarray(p, complex) for p in polylines]
    every = np.concatenate([pts] + lines) if (len(pts) or lines) else np.array([0j])
    x0, x1 = every.real.min(), every.real.max()
    y0, y1 = every.imag.min(), every.imag.max()
    span = max(x1 - x0, y1 - y0, 1e-9) * (1 + 2 * pad)
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    W, H = size
    scale = min(W, H) / span

    def xy(z):
        return (W / 2 + (z.real - cx) * scale, H / 2 - (z.imag - cy) * scale)

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">',
           "<metadata>" + json.dumps(meta, sort_keys=True) + "</metadata>",
           f'<rect width="{W}" height="{H}" fill="white"/>']
    if title:
        out.append(f'<text x="8" y="16" font-size="12" font-family="sans-serif">{title}</text>')
    for line in lines:
        coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in map(xy, line))
        out.append(f'<polyline points="{coords}" fill="none" stroke="#1f4e9e" stroke-width="1"/>')
    for z in pts:
        a, b = xy(z)
        out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="1.2" fill="#b02a2a"/>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
