"""Batch command-line driver.

    artifact <command> [--config FILE] [--beta B --delta D ...] [--out DIR]

Commands: spectrum, dos, potential, levelcurve, eigvec, transfer, resolvent,
fredholm, verify.  Flags override keys read from the config file, which holds
flat ``key = value`` lines.  Exit codes: 0 success, 2 invalid configuration,
3 numerical failure (a diagnostic ``error.json`` is written).
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import artifacts, checks, diffsys, eigenmode, fredholm, numlin, spectral
from .rotation_algebra import GOLDEN

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
COMMANDS = ("spectrum", "dos", "potential", "levelcurve", "eigvec", "transfer", "resolvent",
            "fredholm", "verify")
NEEDS_GOLDEN = ("potential", "levelcurve", "eigvec", "resolvent", "fredholm", "verify")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    alpha: str = "golden"
    beta: float = 2.0
    delta: float = 1.5
    gamma: float = 1.0
    N: int = 100
    phases: int = 16
    phase_samples: int = 256
    seed: int = 0
    out: str = "out"
    chi_re: float | None = None
    chi_im: float = 0.0
    z_re: float = 0.7
    z_im: float = 0.4
    theta: float = 0.3
    steps: int = 40
    p_max: int = 5
    q_max: int = 5
    window: int = 60
    grid: int = 121
    quick: bool = False

    def alpha_value(self) -> float:
        if self.alpha == "golden":
            return GOLDEN
        p, q = self.alpha.split("/")
        return int(p) / int(q)

    def validate(self, command: str) -> "RunConfig":
        if self.alpha != "golden":
            parts = self.alpha.split("/")
            if len(parts) != 2 or not all(s.strip().lstrip("-").isdigit() for s in parts) or int(parts[1]) <= 0:
                raise ConfigError(f"alpha must be 'golden' or a convergent 'p/q', got {self.alpha!r}")
            if command in NEEDS_GOLDEN:
                raise ConfigError(f"{command} needs an irrational alpha (use alpha = golden)")
        if not self.beta > 1:
            raise ConfigError("beta must exceed 1")
        if not self.delta >= 1:
            raise ConfigError("delta must be >= 1")
        if not (1 / self.beta < self.gamma < self.beta):
            raise ConfigError("gamma must lie in the annulus 1/beta < gamma < beta")
        if self.N < 3 or self.phases < 1 or self.phase_samples < 4 or self.steps < 1:
            raise ConfigError("N >= 3, phases >= 1, phase_samples >= 4 and steps >= 1 are required")
        if self.window < 10 or self.grid < 11 or self.p_max < 0 or self.q_max < 0:
            raise ConfigError("window >= 10, grid >= 11 and non-negative p_max, q_max are required")
        if command in ("eigvec", "fredholm") and self.delta <= 1:
            raise ConfigError(f"{command} needs delta > 1")
        return self

    def hashable(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        return d


def _coerce(name: str, raw):
    ftype = {f.name: f.type for f in fields(RunConfig)}[name]
    if raw is None:
        return None
    if "bool" in ftype:
        if isinstance(raw, bool):
            return raw
        if str(raw).lower() in ("1", "true", "yes", "on"):
            return True
        if str(raw).lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: not a boolean: {raw!r}")
    try:
        if "int" in ftype:
            return int(raw)
        if "float" in ftype:
            return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None
    return str(raw)


def read_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + p.read_text(encoding="utf-8"))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for k, v in parser["run"].items():
        if k not in known:
            raise ConfigError(f"unknown config key {k!r}")
        out[k] = _coerce(k, v)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and v is not False:
            values[f.name] = _coerce(f.name, v)
    return RunConfig(**values).validate(args.command)


# --- commands ---------------------------------------------------------------------

def _ctx(cfg: RunConfig, command: str):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out, artifacts.meta_block(cfg.hashable(), cfg.seed, command)


def _dos(cfg: RunConfig) -> spectral.SpectralMeasure:
    if cfg.alpha == "golden":
        return spectral.dos_measure(cfg.beta)
    p, q = (int(s) for s in cfg.alpha.split("/"))
    return spectral.dos_measure(cfg.beta, p, q)


def _bbox(cfg: RunConfig):
    r = 2 + cfg.beta * (cfg.delta + 1 / cfg.delta) + 1.0
    return (-r, r, -r, r)


def _curve(cfg: RunConfig, mu):
    bbox = _bbox(cfg)
    return spectral.level_curve(mu, float(np.log(cfg.beta * cfg.delta)), bbox=bbox, grid=(321, 321))


def _mode(cfg: RunConfig, mu=None):
    if cfg.chi_re is not None:
        target = complex(cfg.chi_re, cfg.chi_im)
    else:
        mu = _dos(cfg) if mu is None else mu
        pts = _curve(cfg, mu).vertices()
        target = complex(pts[np.argmax(pts.real)].real, 0.0)
    return eigenmode.find_phase_eigenpair(cfg.beta, cfg.delta, target, N=cfg.N)


def cmd_spectrum(cfg: RunConfig) -> dict:
    out, meta = _ctx(cfg, "spectrum")
    cloud = spectral.spectrum_cloud(cfg.gamma, cfg.delta, cfg.beta, cfg.N, spectral.unit_phases(cfg.phases),
                                    centers=True, alpha=cfg.alpha_value())
    rows = zip(cloud.phase_index, cloud.eigs.real, cloud.eigs.imag, cloud.centers)
    artifacts.write_csv(out / "spectrum.csv", ["phase_index", "re", "im", "center"], rows, meta)
    artifacts.write_svg(out / "spectrum.svg", meta, points=cloud.eigs, title="spectrum cloud")
    summary = {"count": len(cloud.eigs), "interior": len(cloud.interior()),
               "max_abs": float(np.abs(cloud.eigs).max())}
    artifacts.write_json(out / "spectrum.json", {**summary, "config": cfg.hashable()}, meta)
    return summary


def cmd_dos(cfg: RunConfig) -> dict:
    out, meta = _ctx(cfg, "dos")
    mu = _dos(cfg)
    artifacts.write_csv(out / "dos.csv", ["node", "weight"], zip(mu.nodes, mu.weights), meta)
    gaps = spectral.find_gaps(mu, min_bins=3)
    summary = {"moments": {k: mu.moment(k) for k in (1, 2, 3, 4)}, "gaps": gaps, "measure": mu.meta,
               "bin_width": mu.bin_width}
    artifacts.write_json(out / "dos.json", {**summary, "config": cfg.hashable()}, meta)
    return summary


def cmd_potential(cfg: RunConfig) -> dict:
    out, meta = _ctx(cfg, "potential")
    mu = _dos(cfg)
    x0, x1, y0, y1 = _bbox(cfg)
    xs = np.linspace(x0, x1, cfg.grid)
    ys = np.linspace(y0, y1, cfg.grid)
    Z = xs[None, :] + 1j * ys[:, None]
    phi = spectral.log_potential(mu, Z)
    rows = ((z.real, z.imag, p) for z, p in zip(Z.ravel(), phi.ravel()))
    artifacts.write_csv(out / "potential.csv", ["re", "im", "phi"], rows, meta)
    summary = {"grid": cfg.grid, "bbox": [x0, x1, y0, y1], "phi_min": float(phi.min()),
               "phi_max": float(phi.max()), "level": float(np.log(cfg.beta * cfg.delta))}
    artifacts.write_json(out / "potential.json", {**summary, "config": cfg.hashable()}, meta)
    return summary


def cmd_levelcurve(cfg: RunConfig) -> dict:
    out, meta = _ctx(cfg, "levelcurve")
    mu = _dos(cfg)
    curve = _curve(cfg, mu)
    rows = ((i, k, z.real, z.imag) for i, line in enumerate(curve.polylines) for k, z in enumerate(line))
    artifacts.write_csv(out / "levelcurve.csv", ["line", "vertex", "re", "im"], rows, meta)
    artifacts.write_svg(out / "levelcurve.svg", meta, polylines=curve.polylines,
                        title=f"Phi = log({cfg.beta} * {cfg.delta})")
    pts = curve.vertices()
    dev = np.abs(spectral.log_potential(mu, pts) - curve.level) if len(pts) else np.zeros(1)
    closed = [bool(abs(np.asarray(l)[0] - np.asarray(l)[-1]) < 1e-6) for l in curve.polylines]
    summary = {"level": curve.level, "polylines": len(curve.polylines), "vertices": int(len(pts)),
               "closed": closed, "max_deviation": float(dev.max()),
               "radius_min": float(np.abs(pts).min()) if len(pts) else None,
               "radius_max": float(np.abs(pts).max()) if len(pts) else None}
    artifacts.write_json(out / "levelcurve.json", {**summary, "config": cfg.hashable()}, meta)
    return summary


def _mode_summary(m: eigenmode.EigenMode) -> dict:
    gam, gres = eigenmode.gamma_value(m)
    return {"x": m.x, "chi": m.chi, "G": m.G, "decay_rate": m.decay_rate, "residual": m.residual,
            "gamma": gam, "gamma_fit_residual": gres, "n_min": m.xi.n_min}


def cmd_eigvec(cfg: RunConfig) -> dict:
    out, meta = _ctx(cfg, "eigvec")
    m = _mode(cfg)
    rows = zip(m.xi.indices, m.xi.values.real, m.xi.values.imag)
    artifacts.write_csv(out / "eigvec.csv", ["n", "re", "im"], rows, meta)
    summary = _mode_summary(m)
    artifacts.write_json(out / "eigvec.json", {**summary, "config": cfg.hashable()}, meta)
    return summary


def cmd_transfer(cfg: RunConfig) -> dict:
    out, meta = _ctx(cfg, "transfer")
    rng = np.random.default_rng(cfg.seed)
    chi = complex(cfg.chi_re if cfg.chi_re is not None else 1.0, cfg.chi_im)
    alpha = cfg.alpha_value()
    X0 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    Y0 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    start = diffsys.complete_state(X0[0], X0[1], cfg.theta, chi)
    orbit, flag = diffsys.advance(start, alpha, cfg.theta, cfg.beta, chi, cfg.steps)
    rows = ((s.p, *(v for c in s.values for v in (c.real, c.imag))) for s in orbit)
    artifacts.write_csv(out / "transfer.csv",
                        ["p", "re_diag_next", "im_diag_next", "re_sub", "im_sub", "re_diag", "im_diag"],
                        rows, meta)
    summary = {"steps": len(orbit) - 1, "guard": flag, "chi": chi, "theta": cfg.theta}
    if flag is None:
        summary["wronskian_derived"] = diffsys.wronskian_residual(X0, Y0, alpha, cfg.theta, cfg.beta, chi,
                                                                  cfg.steps)
        summary["wronskian_printed"] = diffsys.wronskian_residual(X0, Y0, alpha, cfg.theta, cfg.beta, chi,
                                                                  cfg.steps, "printed")
    artifacts.write_json(out / "transfer.json", {**summary, "config": cfg.hashable()}, meta)
    return summary


def cmd_resolvent(cfg: RunConfig) -> dict:
    out, meta = _ctx(cfg, "resolvent")
    z = complex(cfg.z_re, cfg.z_im)
    pr, qr = (-cfg.p_max, cfg.p_max), (-cfg.q_max, cfg.q_max)
    c = diffsys.resolvent_coefficients(z, cfg.beta, pr, qr, N=max(cfg.N, cfg.p_max + 20),
                                       phase_samples=cfg.phase_samples)
    d = diffsys.d_polynomials(cfg.beta, pr, qr, z)
    for name, tab in (("resolvent_c.csv", c), ("resolvent_d.csv", d)):
        rows = ((p, q, v.real, v.imag) for (p, q), v in sorted(tab.values.items()))
        artifacts.write_csv(out / name, ["p", "q", "re", "im"], rows, meta)
    summary = {"z": z, "asymmetry": c.asymmetry, "p_range": pr, "q_range": qr, "c00": c[(0, 0)]}
    artifacts.write_json(out / "resolvent.json", {**summary, "config": cfg.hashable()}, meta)
    return summary


def cmd_fredholm(cfg: RunConfig) -> dict:
    out, meta = _ctx(cfg, "fredholm")
    m = _mode(cfg)
    gam, _ = eigenmode.gamma_value(m)
    a = fredholm.tan_g_coefficients(cfg.beta, cfg.gamma)
    H = fredholm.assemble_H(gam, m.G, a, (-cfg.window, cfg.window))
    k = fredholm.kernel_dimension(H)
    res = fredholm.kernel_transform_check(m, gam, a=a)
    w = np.linalg.eigvals(H.matrix.entries)
    up, lo = fredholm.essential_spectrum_curve(a, 1024)
    rows = ((i, z.real, z.imag) for i, c in enumerate((up, lo)) for z in c)
    artifacts.write_csv(out / "fredholm_curve.csv", ["curve", "re", "im"], rows, meta)
    artifacts.write_csv(out / "fredholm_eigs.csv", ["re", "im"], zip(w.real, w.imag), meta)
    artifacts.write_svg(out / "fredholm.svg", meta, points=w, polylines=(up, lo),
                        title="eigenvalues of H and a(T) +- i")
    summary = {"mode": _mode_summary(m), "kernel": json.loads(k.to_json()), "transform_residual": res,
               "core": H.core, "band": a.J}
    artifacts.write_json(out / "fredholm.json", {**summary, "config": cfg.hashable()}, meta)
    return summary


def cmd_verify(cfg: RunConfig) -> dict:
    out, meta = _ctx(cfg, "verify")
    rows = checks.run_all(quick=cfg.quick, beta=cfg.beta, delta=cfg.delta, seed=cfg.seed)
    for r in rows:
        print(r.line())
    artifacts.write_csv(out / "verify.csv", ["check", "name", "value", "tol", "passed", "seconds"],
                        ((r.check, r.name, r.value, r.tol, r.passed, round(r.seconds, 3)) for r in rows), meta)
    summary = {"rows": [r.to_dict() for r in rows], "passed": sum(r.passed for r in rows), "total": len(rows)}
    artifacts.write_json(out / "verify.json", {**summary, "config": cfg.hashable()}, meta)
    return summary


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="plain-text file of 'key = value' lines")
    common.add_argument("--out", help="output directory (default ./out)")
    common.add_argument("--alpha", help="'golden' or a convergent 'p/q'")
    for name, kind in (("beta", float), ("delta", float), ("gamma", float), ("N", int), ("phases", int),
                       ("phase-samples", int), ("seed", int), ("chi-re", float), ("chi-im", float),
                       ("z-re", float), ("z-im", float), ("theta", float), ("steps", int), ("p-max", int),
                       ("q-max", int), ("window", int), ("grid", int)):
        common.add_argument(f"--{name}", type=kind, dest=name.replace("-", "_"))
    parser = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"spectrum": "eigenvalue cloud of truncated h_gamma(x delta) over phases",
             "dos": "density of states from a periodic approximant",
             "potential": "logarithmic potential on a grid",
             "levelcurve": "level curve Phi = log(beta delta)",
             "eigvec": "decaying eigenvector on the level curve, with Gamma",
             "transfer": "transfer-matrix orbit and Wronskian residuals",
             "resolvent": "resolvent coefficients c_pq(z) and polynomials d_pq(z)",
             "fredholm": "banded operator H(z), kernel dimension and transform residual",
             "verify": "run the identity checks and print a pass/fail table"}
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
        if name == "verify":
            sp.add_argument("--quick", action="store_true", help="moments, Wronskian, intertwining, symmetries")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        HANDLERS[args.command](cfg)
    except (numlin.NumlinError, diffsys.GuardError, fredholm.GuardError, FloatingPointError,
            np.linalg.LinAlgError, ValueError, OverflowError) as exc:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        meta = artifacts.meta_block(cfg.hashable(), cfg.seed, args.command)
        artifacts.write_json(out / "error.json", {"error": type(exc).__name__, "message": str(exc)}, meta)
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
