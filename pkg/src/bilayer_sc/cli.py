"""Command-line front end: ``bilayer-sc <command> [--config FILE] [--set key=value]``.

Every command writes CSV (to stdout or ``--out``) preceded by one ``#``
metadata line. Exit codes: 0 success, 2 configuration error, 3 infeasible
design, 4 density evolution did not converge (only with ``strict=true``).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .code_sampler import assemble_overall, sample_instance
from .density_evolution import (
    DEParams,
    NonConvergenceError,
    fan_directions,
    lemma1_equivalence_check,
    region_scan,
    run_de,
    scan_grid,
    threshold_on_ray,
)
from .ensemble import CODE_A, CODE_B
from .rate_design import (
    DesignSpec,
    InfeasibleDesign,
    InfeasibleFit,
    NoRelayNeeded,
    design,
    fit_degrees,
)
from .simulator import ChannelPoint, Simulator, sample_correlation_vector
from .theory import ChannelSet, achievable_region_sd, achievable_region_sr, optimal_allocation

EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NONCONVERGENCE = 2, 3, 4


class ConfigError(ValueError):
    pass


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt(conv):
    def f(s):
        s = str(s).strip()
        return None if s.lower() in ("", "none") else conv(s)
    return f


# key -> (default, converter)
OPTIONS = {
    "eps_s1r": (0.2, float),
    "eps_s2r": (0.2, float),
    "eps_s1d": (0.5, float),
    "eps_s2d": (0.5, float),
    "eps_rd": (0.0, float),
    "p": (0.0, float),
    "punctured": (True, _bool),
    "tie_rs1": (None, _opt(float)),
    "code": ("A", str),
    "l1": (None, _opt(int)), "r1": (None, _opt(int)),
    "l2": (None, _opt(int)), "r2": (None, _opt(int)),
    "ls1": (None, _opt(int)), "rs1": (None, _opt(int)),
    "ls2": (None, _opt(int)), "rs2": (None, _opt(int)),
    "L": (None, _opt(int)),
    "w": (None, _opt(int)),
    "M1": (None, _opt(int)),
    "M2": (None, _opt(int)),
    "design_from": ("channels", str),
    "r_max": (10, int),
    "M_base": (100, int),
    "task": ("thresholds", str),
    "rays": ("axis1,diag,axis2", str),
    "origin": ("0,0", str),
    "w_list": ("", str),
    "bisect_tol": (1e-4, float),
    "tol": (1e-10, float),
    "max_iters": (50_000, int),
    "strict": (False, _bool),
    "equiv_degrees": ("4,2,8", str),
    "equiv_eps": (0.3, float),
    "equiv_iters": (200, int),
    "grid_step": (0.02, float),
    "exhaustive": (False, _bool),
    "trials": (100, int),
    "sweep_eps1": ("0.40:0.62:0.01", str),
    "sweep_eps2": ("same", str),
    "seed": (1, int),
    "jobs": (1, int),
}


def defaults():
    return {k: v[0] for k, v in OPTIONS.items()}


def _convert(key, raw, where):
    if key not in OPTIONS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return OPTIONS[key][1](raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {exc}") from None


def parse_config(text, name="<config>"):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{name}:{n}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        out[key] = _convert(key, raw, f"{name}:{n}")
    return out


def _format(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def render_config(cfg):
    return "".join(f"{k} = {_format(cfg[k])}\n" for k in OPTIONS)


def _channels(cfg):
    try:
        return ChannelSet(cfg["eps_s1r"], cfg["eps_s2r"], cfg["eps_s1d"], cfg["eps_s2d"],
                          cfg["eps_rd"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _ensemble(cfg):
    base = {"A": CODE_A, "B": CODE_B}.get(cfg["code"].upper())
    if base is None:
        raise ConfigError(f"unknown code {cfg['code']!r} (use A or B plus degree overrides)")
    over = {k: cfg[k] for k in ("l1", "r1", "l2", "r2", "ls1", "rs1", "ls2", "rs2",
                                "L", "w", "M1", "M2") if cfg[k] is not None}
    try:
        return dataclasses.replace(base, **over)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _floats(s, n=None, what="list"):
    try:
        vals = [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad {what}: {s!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"{what} needs {n} numbers, got {s!r}")
    return vals


def _range(s):
    parts = s.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must be start:stop:step, got {s!r}")
    a, b, st = (float(x) for x in parts)
    if st <= 0 or b < a:
        raise ConfigError(f"empty range {s!r}")
    n = int(round((b - a) / st))
    return np.round(a + st * np.arange(n + 1), 10)


def _rays(cfg):
    named = {"axis1": (1.0, 0.0), "diag": (1.0, 1.0), "axis2": (0.0, 1.0)}
    spec = cfg["rays"].strip()
    if spec.startswith("fan:"):
        n = int(spec[4:])
        return [(f"fan{i}", d) for i, d in enumerate(fan_directions(n))]
    out = []
    for name in spec.split(","):
        name = name.strip()
        if name not in named:
            raise ConfigError(f"unknown ray {name!r} (axis1, diag, axis2 or fan:N)")
        out.append((name, named[name]))
    return out


def _de_params(cfg, ens):
    try:
        return DEParams(ens, p=cfg["p"], punctured=cfg["punctured"], tol=cfg["tol"],
                        max_iters=cfg["max_iters"], strict=cfg["strict"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _meta(**kw):
    return "# " + " ".join(f"{k}={_format(v)}" for k, v in kw.items()) + "\n"


def _csv(header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    return buf.getvalue()


def _g(x):
    return f"{x:.10g}"


def _pentagon_rows(prefix, pent):
    return [(f"{prefix}_corner{i}", _g(x), _g(y)) for i, (x, y) in enumerate(pent.corners)]


def cmd_limits(cfg):
    ch = _channels(cfg)
    p = cfg["p"]
    try:
        opt = optimal_allocation(ch, p, tie_rs1=cfg["tie_rs1"])
        rates = design(DesignSpec(ch, p, cfg["punctured"], cfg["tie_rs1"]))
    except ValueError as exc:
        raise InfeasibleDesign(str(exc)) from None
    rows = [
        ("theta1", _g(opt.alloc.theta1), ""),
        ("theta2", _g(opt.alloc.theta2), ""),
        ("theta_r", _g(opt.alloc.theta_r), ""),
        ("Rs1", _g(opt.Rs1_star), ""),
        ("Rs2", _g(opt.Rs2_star), ""),
        ("Rmax", _g(opt.Rmax), ""),
        ("alpha", _g(opt.alpha), ""),
        ("case", opt.alpha_case, ""),
    ]
    rows += _pentagon_rows("sr", achievable_region_sr(rates, p, rates.punctured))
    rows += _pentagon_rows("sd", achievable_region_sd(rates, p, rates.punctured))
    return _meta(command="limits", p=p) + _csv(["quantity", "x", "y"], rows)


def cmd_design(cfg):
    if cfg["design_from"] == "code":
        ens = _ensemble(cfg)
        rb = ens.rate_bundle()
        rows = [(k, _g(getattr(rb, k))) for k in ("R1", "R2", "Rtilde1", "Rtilde2",
                                                   "Rsynd1", "Rsynd2", "mu1", "mu2")]
        rows += [(k, getattr(ens, k)) for k in ("l1", "r1", "l2", "r2", "ls1", "rs1",
                                                 "ls2", "rs2", "L", "w")]
        return _meta(command="design", source="code", accounting="sum_to_w") + \
            _csv(["quantity", "value"], rows)
    if cfg["design_from"] != "channels":
        raise ConfigError("design_from must be 'channels' or 'code'")
    ch = _channels(cfg)
    spec = DesignSpec(ch, cfg["p"], cfg["punctured"], cfg["tie_rs1"])
    try:
        rb = design(spec)
    except ValueError as exc:
        if isinstance(exc, (InfeasibleDesign, NoRelayNeeded)):
            raise
        raise InfeasibleDesign(str(exc)) from None
    L = cfg["L"] or 600
    w = cfg["w"] or 10
    fit = fit_degrees(rb, cfg["r_max"], cfg["M_base"], L=L, w=w)
    e = fit.ensemble
    rows = [(k, _g(getattr(rb, k))) for k in ("R1", "R2", "Rtilde1", "Rtilde2", "Rsynd1",
                                               "Rsynd2", "mu1", "mu2", "Rs1", "Rs2", "Rprime")]
    if rb.alloc is not None:
        rows += [(k, _g(getattr(rb.alloc, k))) for k in ("theta1", "theta2", "theta_r")]
    rows += [(k, getattr(e, k)) for k in ("l1", "r1", "l2", "r2", "ls1", "rs1", "ls2",
                                          "rs2", "L", "w", "M1", "M2")]
    rows.append(("fit_gap", _g(fit.max_gap())))
    return _meta(command="design", source="channels", p=cfg["p"]) + \
        _csv(["quantity", "value"], rows)


def _map(fn, items, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def cmd_de(cfg):
    if cfg["task"] == "equivalence":
        try:
            l, ls, r = (int(x) for x in cfg["equiv_degrees"].split(","))
        except ValueError:
            raise ConfigError("equiv_degrees must be l,ls,r") from None
        L = cfg["L"] or 100
        w = cfg["w"] or 5
        try:
            diff = lemma1_equivalence_check(l, ls, r, L, w, cfg["equiv_eps"],
                                            cfg["equiv_iters"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return _meta(command="de", task="equivalence") + _csv(
            ["l", "ls", "r", "L", "w", "eps", "iters", "max_diff"],
            [(l, ls, r, L, w, cfg["equiv_eps"], cfg["equiv_iters"], f"{diff:.3e}")])
    if cfg["task"] != "thresholds":
        raise ConfigError("task must be 'thresholds' or 'equivalence'")
    base = _ensemble(cfg)
    ws = [int(x) for x in _floats(cfg["w_list"], what="w_list")] or [base.w]
    origin = tuple(_floats(cfg["origin"], 2, "origin"))
    rays = _rays(cfg)
    pent = achievable_region_sd(base.rate_bundle(), cfg["p"], punctured=cfg["punctured"])
    jobs = [(w, name, d) for w in ws for name, d in rays]

    def one(job):
        w, name, d = job
        prm = _de_params(cfg, base.with_chain(w=w))
        return threshold_on_ray(origin, d, prm, bisect_tol=cfg["bisect_tol"])

    res = _map(one, jobs, cfg["jobs"])
    rows = []
    for (w, name, d), th in zip(jobs, res):
        rows.append((w, base.L, cfg["p"], name, _g(d[0]), _g(d[1]), _g(th.t),
                     _g(th.point[0]), _g(th.point[1]), int(th.origin_decodable),
                     _g(pent.ray_exit(origin, d))))
    header = ["w", "L", "p", "ray", "dir_x", "dir_y", "t", "eps_s1d", "eps_s2d",
              "origin_decodable", "pentagon_t"]
    return _meta(command="de", origin=cfg["origin"], bisect_tol=cfg["bisect_tol"],
                 tol=cfg["tol"], max_iters=cfg["max_iters"]) + _csv(header, rows)


def cmd_region(cfg):
    ens = _ensemble(cfg)
    prm = _de_params(cfg, ens)
    if not 0 < cfg["grid_step"] <= 0.1:
        raise ConfigError("grid_step must lie in (0, 0.1]")
    scan = region_scan(prm, cfg["grid_step"], exhaustive=cfg["exhaustive"])
    pent = achievable_region_sd(ens.rate_bundle(), cfg["p"], punctured=cfg["punctured"])
    top = scan.boundary()
    rows = []
    for x, y in zip(scan.grid, top):
        rows.append((_g(x), "" if np.isnan(y) else _g(y), _g(_pentagon_top(pent, x))))
    return _meta(command="region", L=ens.L, w=ens.w, p=cfg["p"], grid_step=cfg["grid_step"],
                 tol=cfg["tol"]) + _csv(["eps_s1d", "eps_s2d_max", "pentagon_eps_s2d"], rows)


def _pentagon_top(pent, x):
    if x > pent.a:
        return float("nan")
    if x <= pent.c:
        return pent.d
    return pent.d + (pent.b - pent.d) * (x - pent.c) / (pent.a - pent.c)


def cmd_exit_surface(cfg):
    ens = _ensemble(cfg)
    prm = _de_params(cfg, ens)
    grid = scan_grid(cfg["grid_step"])
    pts = [(a, b) for a in grid for b in grid]
    vals = _map(lambda pt: _pair(prm, pt), pts, cfg["jobs"])
    rows = [(_g(a), _g(b), f"{h1:.6e}", f"{h2:.6e}") for (a, b), (h1, h2) in zip(pts, vals)]
    return _meta(command="exit-surface", L=ens.L, w=ens.w, p=cfg["p"], tol=cfg["tol"]) + \
        _csv(["eps_s1d", "eps_s2d", "h1", "h2"], rows)


def _pair(prm, pt):
    res = run_de(pt[0], pt[1], prm, strict=prm.strict)
    return res.h1, res.h2


def _instance(cfg):
    ens = _ensemble(cfg)
    if ens.M1 is None or ens.M2 is None:
        raise ConfigError("simulation needs M1 and M2")
    try:
        return sample_instance(ens, cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_simulate(cfg, inst=None):
    inst = inst or _instance(cfg)
    eps1 = _range(cfg["sweep_eps1"])
    if cfg["sweep_eps2"].strip() == "same":
        eps2 = eps1
    else:
        eps2 = np.full(eps1.size, float(cfg["sweep_eps2"]))
    pts = [ChannelPoint(float(a), float(b), cfg["eps_s1r"], cfg["eps_s2r"])
           for a, b in zip(eps1, eps2)]
    if cfg["trials"] < 1:
        raise ConfigError("trials must be >= 1")
    res = Simulator(inst).ber_sweep(pts, cfg["p"], cfg["trials"], cfg["seed"], jobs=cfg["jobs"])
    e = inst.ensemble
    return res.to_csv(meta=dict(command="simulate", L=e.L, w=e.w, M1=e.M1, M2=e.M2, k=inst.k,
                                sockets="round_robin_per_position",
                                systematic="balanced_random_position_paired"))


COMMANDS = {
    "limits": cmd_limits,
    "design": cmd_design,
    "de": cmd_de,
    "region": cmd_region,
    "exit-surface": cmd_exit_surface,
    "simulate": cmd_simulate,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="bilayer-sc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--jobs", type=int)
        sp.add_argument("--out", help="write CSV here instead of stdout")
        sp.add_argument("--dump-matrix", metavar="PATH",
                        help="write the sampled overall parity-check matrix")
        sp.add_argument("--print-config", action="store_true",
                        help="print the effective configuration and exit")
    return ap


def resolve_config(args):
    cfg = defaults()
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
        cfg.update(parse_config(text, args.config))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        cfg[k] = _convert(k, v, "--set")
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.jobs is not None:
        cfg["jobs"] = args.jobs
    if cfg["jobs"] < 1:
        raise ConfigError("jobs must be >= 1")
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.print_config:
            sys.stdout.write(render_config(cfg))
            return 0
        inst = None
        if args.dump_matrix:
            inst = _instance(cfg)
            z = sample_correlation_vector(inst.k, cfg["p"], cfg["seed"])
            H, _ = assemble_overall(inst, z)
            with open(args.dump_matrix, "w") as fh:
                H.dump(fh)
        if args.command == "simulate":
            text = cmd_simulate(cfg, inst)
        else:
            text = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleDesign, NoRelayNeeded, InfeasibleFit) as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
