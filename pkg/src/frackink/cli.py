"""Command-line front end.

Exit codes: 0 all contracts met, 1 solver failure, 2 contract violation,
64 usage error.  Settings are layered as flags > config file > defaults.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import evolve as ev
from .green import kernel_moment0, kernel_sign_scan, kernel_table
from .asym import exact_kernel, tail_law
from .io import provenance, load_config, write_csv
from .kink import ContinuationError, KinkSolveError, fit_tail, flux_identity, solve_kink
from .spectrum import LanczosError, assemble, low_spectrum, uniqueness_check, wave_stability

EXIT_OK, EXIT_SOLVER, EXIT_CONTRACT, EXIT_USAGE = 0, 1, 2, 64

SHARED = {"alpha": 1.5, "c": 0.0, "L": 200.0, "N": 16384, "seed": 0, "out": "out"}
# the dense block eigensolve needs a small grid
TRAVEL = {"L": 50.0, "N": 1024}
SUB_TOL = {"exponent": 0.03, "prefactor": 0.05}
SUPER_TOL = {"exponent": 0.05, "prefactor": 0.08}

EXTRA = {
    "kink": {"figure1": False, "figure3": False, "background": "whole"},
    "kernel": {"m": 2.0, "x_max": 25.0, "far_field": False},
    "spectrum": {"k": 10},
    "evolve": {"perturb": "odd", "amplitude": 0.05, "T": 40.0, "dt": 0.005},
    "travel": {"c": 0.5, "allow_super_travel": False},
    "sweep": {"alpha_from": 1.1, "alpha_to": 2.4, "alpha_step": 0.1, "k": 6},
}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _shared(p: argparse.ArgumentParser) -> None:
    # None marks "not given" so the config layer can fill in
    p.add_argument("--alpha", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="frackink", description="Fractional phi^4 kinks: profiles, "
                 "kernels, spectra and dynamics.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("kink", help="solve for a kink and fit its tail")
    _shared(p)
    p.add_argument("--figure1", action="store_true", default=None,
                   help="loglog tail data at alpha = 1.5")
    p.add_argument("--figure3", action="store_true", default=None,
                   help="overshoot and tail data at alpha = 2.5")
    p.add_argument("--background", choices=("whole", "lattice"))

    p = sub.add_parser("kernel", help="tabulate the resolvent kernel")
    _shared(p)
    p.add_argument("--m", type=float)
    p.add_argument("--x-max", dest="x_max", type=float)
    p.add_argument("--far-field", dest="far_field", action="store_true", default=None)

    p = sub.add_parser("spectrum", help="low spectrum of the linearised operator")
    _shared(p)
    p.add_argument("--k", type=int)

    p = sub.add_parser("evolve", help="parabolic flow from a perturbed kink")
    _shared(p)
    p.add_argument("--perturb", choices=("odd", "even", "random"))
    p.add_argument("--amplitude", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)

    p = sub.add_parser("travel", help="spectral stability of a travelling kink")
    _shared(p)
    p.add_argument("--allow-super-travel", dest="allow_super_travel", action="store_true",
                   default=None, help="attempt alpha in (2, 4); reported without contracts")

    p = sub.add_parser("sweep", help="lambda_1 over a range of alpha")
    _shared(p)
    p.add_argument("--alpha-from", dest="alpha_from", type=float)
    p.add_argument("--alpha-to", dest="alpha_to", type=float)
    p.add_argument("--alpha-step", dest="alpha_step", type=float)
    p.add_argument("--k", type=int)
    return ap


def _coerce(val: str, like):
    if isinstance(like, bool):
        if val.lower() in ("1", "true", "yes", "on"):
            return True
        if val.lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"expected a boolean, got {val!r}")
    try:
        return type(like)(val)
    except ValueError:
        raise UsageError(f"cannot read {val!r} as {type(like).__name__}") from None


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional config file and explicit flags."""
    cmd = args.command
    defaults = dict(SHARED)
    if cmd == "travel":
        defaults.update(TRAVEL)
    defaults.update(EXTRA.get(cmd, {}))
    cfg = dict(defaults)
    if args.config:
        try:
            raw = load_config(args.config)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from None
        for k, v in raw.items():
            if k not in defaults:
                raise UsageError(f"unknown config key {k!r} for {cmd}")
            cfg[k] = _coerce(v, defaults[k])
    for k, v in vars(args).items():
        if k in defaults and v is not None:
            cfg[k] = v
    if cmd == "kink":
        if cfg["figure1"] and cfg["figure3"]:
            raise UsageError("choose one of --figure1 and --figure3")
        if cfg["figure1"]:
            cfg["alpha"] = 1.5
        if cfg["figure3"]:
            cfg["alpha"] = 2.5
    validate(cmd, cfg)
    return cfg


def validate(cmd: str, cfg: dict) -> None:
    a = cfg["alpha"]
    hi = 4.0 if cmd == "kernel" else 4.0 - 1e-9
    if not 1.0 < a <= hi:
        raise UsageError(f"alpha must lie in (1, 4), got {a}")
    if not abs(cfg["c"]) < 1.0:
        raise UsageError(f"|c| must be below 1, got {cfg['c']}")
    if not cfg["L"] > 0:
        raise UsageError("L must be positive")
    if cfg["N"] < 16 or cfg["N"] % 2:
        raise UsageError("N must be an even integer >= 16")
    if cmd in ("spectrum", "sweep") and not 1 <= cfg["k"] <= 10:
        raise UsageError("k must lie in 1..10")
    if cmd == "evolve":
        if not 0 < cfg["dt"] <= ev.DT_MAX:
            raise UsageError(f"dt must lie in (0, {ev.DT_MAX}]")
        if not cfg["T"] > 0:
            raise UsageError("T must be positive")
    if cmd == "travel" and not 1.0 < a < 2.0 and not cfg["allow_super_travel"]:
        raise UsageError("travelling kinks need alpha in (1, 2); "
                         "pass --allow-super-travel to attempt alpha in (2, 4)")
    if cmd == "kernel" and not cfg["m"] > 0:
        raise UsageError("m must be positive")
    if cmd == "sweep":
        if cfg["alpha_from"] > cfg["alpha_to"] or cfg["alpha_step"] <= 0:
            raise UsageError("sweep needs alpha_from <= alpha_to and a positive step")
        if not (1.0 < cfg["alpha_from"] and cfg["alpha_to"] < 4.0):
            raise UsageError("sweep range must lie inside (1, 4)")


def _out(cfg: dict, stem: str) -> Path:
    return Path(cfg["out"]) / f"{stem}.csv"


def _meta(cfg: dict, **extra) -> dict:
    meta = {k: cfg[k] for k in sorted(cfg) if k not in ("out", "config")}
    meta.update(provenance({k: cfg[k] for k in cfg if k != "out"}))
    meta.update(extra)
    return meta


def _report(ok: dict[str, bool]) -> int:
    bad = [k for k, v in ok.items() if not v]
    for k in bad:
        print(f"contract violated: {k}", file=sys.stderr)
    return EXIT_CONTRACT if bad else EXIT_OK


def cli_kink(cfg: dict) -> int:
    a = cfg["alpha"]
    p = solve_kink(a, cfg["c"], L=cfg["L"], N=cfg["N"], background_kind=cfg["background"],
                   allow_super_travel=False)
    ok = dict(p.checks())
    flux = flux_identity(p)
    ok["flux"] = abs(flux - 4.0 / 3.0) <= 1e-6 * 4.0 / 3.0
    tag = f"kink_a{a:g}"
    write_csv(_out(cfg, tag), {"x": p.x, "phi": p.phi.values, "dphi": p.dphi.values},
              _meta(cfg, residual_norm=p.residual_norm, flux=flux))
    if a == 2.0:
        half = np.abs(p.x) <= p.grid.L / 2.0
        ok["tanh"] = float(np.max(np.abs(p.phi.values - np.tanh(p.x / math.sqrt(2.0)))[half])) <= 1e-8
        return _report(ok)
    tol = SUB_TOL if a < 2.0 else SUPER_TOL
    rows = []
    for q in ("profile_defect", "derivative"):
        fit = fit_tail(p, q)
        rows.append(fit)
        if q == "profile_defect":
            ok["tail_exponent"] = fit.exponent_err <= tol["exponent"]
            ok["tail_prefactor"] = fit.rel_prefactor_err <= tol["prefactor"]
    write_csv(_out(cfg, tag + "_tail"), {
        "quantity": [f.quantity for f in rows],
        "lo": [f.window[0] for f in rows], "hi": [f.window[1] for f in rows],
        "exponent": [f.fitted_exponent for f in rows],
        "prefactor": [f.fitted_prefactor for f in rows],
        "ref_exponent": [f.reference_exponent for f in rows],
        "ref_prefactor": [f.reference_prefactor for f in rows],
        "r_squared": [f.r_squared for f in rows],
        "compensated_prefactor": [f.compensated_prefactor for f in rows],
    }, _meta(cfg))
    if cfg["figure1"] or cfg["figure3"]:
        law = tail_law(a)
        x = p.x
        d = np.abs(1.0 - p.phi.values)
        keep = (x >= 1.0) & (x <= p.grid.L / 2.0) & (d > 0)
        cols = {"log_x": np.log(x[keep]), "log_defect": np.log(d[keep]),
                "log_asymptote": np.log(abs(law.c) * x[keep] ** (-a))}
        if cfg["figure3"]:
            cols["phi"] = p.phi.values[keep]
            ok["overshoot"] = bool(p.phi.values.max() > 1.0)
        write_csv(_out(cfg, "figure1" if cfg["figure1"] else "figure3"), cols, _meta(cfg))
    return _report(ok)


def cli_kernel(cfg: dict) -> int:
    a, m = cfg["alpha"], cfg["m"]
    t = kernel_table(a, m, cfg["c"], cfg["x_max"], far_field=cfg["far_field"])
    ok = {}
    extra = {}
    try:
        mom = kernel_moment0(t)
        extra["moment0"] = mom
        ok["moment0"] = abs(mom - 1.0 / m) <= 1e-6
    except ValueError as exc:
        print(f"moment skipped: {exc}", file=sys.stderr)
    if a in (2.0, 4.0) and m == 2.0 and cfg["c"] == 0.0:
        near = t.x <= 10.0
        ok["closed_form"] = float(np.max(np.abs(t.quadrature[near] - exact_kernel(int(a), t.x[near])))) <= 1e-6
    if a != 2.0 and a != 4.0:
        scan = kernel_sign_scan(t)
        extra["crossings"] = scan.n_crossings
        if a < 2.0:
            ok["positive"] = scan.n_crossings == 0 and bool(np.all(t.quadrature > 0))
        else:
            ok["sign_change"] = scan.n_crossings >= 1 and scan.k0 > 0
    write_csv(_out(cfg, f"kernel_a{a:g}"),
              {"x": t.x, "K": t.values, "K_asym": t.asymptote, "rel_err": t.asym_rel_err,
               "quadrature": t.quadrature},
              _meta(cfg, R_star=t.crossover_radius, **extra))
    return _report(ok)


def cli_spectrum(cfg: dict) -> int:
    p = solve_kink(cfg["alpha"], 0.0, L=cfg["L"], N=cfg["N"], background_kind="lattice")
    r = low_spectrum(assemble(p), cfg["k"], seed=cfg["seed"])
    u = uniqueness_check(r)
    edge = r.essential_edge_estimate
    write_csv(_out(cfg, f"spectrum_a{cfg['alpha']:g}"),
              {"index": np.arange(len(r.eigenvalues)), "eigenvalue": r.eigenvalues,
               "parity": r.parities, "residual": r.residuals},
              _meta(cfg, ground_alignment=r.ground_alignment, verdict=u.holds,
                    essential_edge=edge if edge is not None else math.nan,
                    kappa=r.kappa, sign_definite=u.ground_state_sign_definite))
    ok = {"lambda0": abs(r.lambda0) <= 1e-4, "alignment": r.ground_alignment >= 1 - 1e-6,
          "lambda1": u.holds}
    return _report(ok)


def cli_evolve(cfg: dict) -> int:
    a = cfg["alpha"]
    p = solve_kink(a, 0.0, L=cfg["L"], N=cfg["N"], background_kind="lattice", newton_tol=1e-11)
    u0 = ev.perturb(p, cfg["amplitude"], cfg["perturb"], cfg["seed"])
    desc = f"{cfg['perturb']} bump, amplitude {cfg['amplitude']:g}"
    tr = ev.run(u0, p, cfg["T"], cfg["dt"], descriptor=desc)
    write_csv(_out(cfg, f"evolve_a{a:g}_{cfg['perturb']}"), tr.columns(),
              _meta(cfg, u0=desc, kappa_fit=tr.kappa_fit, shift_rate=tr.shift_rate,
                    max_energy_increase=tr.max_energy_increase))
    if tr.failure_time is not None:
        print(f"decomposition lost at t = {tr.failure_time:g}: {tr.error}", file=sys.stderr)
        return EXIT_SOLVER
    ok = {"energy": tr.max_energy_increase <= 1e-10,
          "orthogonality": float(np.max(np.abs(tr.orthogonality))) <= 1e-8}
    if cfg["perturb"] == "odd":
        ok["odd_shift"] = float(np.max(np.abs(tr.sigmas))) <= 1e-6
    print(f"kappa_fit={tr.kappa_fit:.6g} shift_rate={tr.shift_rate:.6g} "
          f"sigma_inf={tr.sigma_inf:.6g}")
    return _report(ok)


def cli_travel(cfg: dict) -> int:
    sup = cfg["alpha"] > 2.0
    p = solve_kink(cfg["alpha"], cfg["c"], L=cfg["L"], N=cfg["N"], background_kind="lattice",
                   wave=True, allow_super_travel=sup)
    w = wave_stability(p)
    write_csv(_out(cfg, f"travel_a{cfg['alpha']:g}_c{cfg['c']:g}"),
              {"re": w.eigenvalues.real, "im": w.eigenvalues.imag},
              _meta(cfg, max_real_part=w.max_real_part))
    print(f"max Re lambda = {w.max_real_part:.3e}")
    if sup:
        print("alpha > 2: no stability contract asserted", file=sys.stderr)
        return EXIT_OK
    return _report({"stable": w.max_real_part <= 1e-6})


def cli_sweep(cfg: dict) -> int:
    n = int(round((cfg["alpha_to"] - cfg["alpha_from"]) / cfg["alpha_step"]))
    alphas = np.round(cfg["alpha_from"] + cfg["alpha_step"] * np.arange(n + 1), 10)
    rows = {"alpha": [], "lambda0": [], "lambda1": [], "ground_alignment": [], "verdict": [],
            "status": []}
    all_ok = True
    for a in alphas:
        try:
            p = solve_kink(float(a), 0.0, L=cfg["L"], N=cfg["N"], background_kind="lattice")
            r = low_spectrum(assemble(p), cfg["k"], seed=cfg["seed"], edge=False)
            verdict = uniqueness_check(r).holds
            vals = (r.lambda0, r.lambda1, r.ground_alignment, verdict, "ok")
        except (KinkSolveError, LanczosError, ValueError) as exc:
            verdict = False
            vals = (math.nan, math.nan, math.nan, False, type(exc).__name__)
        for k, v in zip(list(rows)[1:], vals):
            rows[k].append(v)
        rows["alpha"].append(float(a))
        all_ok &= bool(verdict)
        print(f"alpha={a:.3f} lambda1={vals[1]:.6f} verdict={vals[3]}")
    write_csv(_out(cfg, "sweep"), rows, _meta(cfg))
    return EXIT_OK if all_ok else EXIT_CONTRACT


COMMANDS = {"kink": cli_kink, "kernel": cli_kernel, "spectrum": cli_spectrum,
            "evolve": cli_evolve, "travel": cli_travel, "sweep": cli_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](cfg)
    except (KinkSolveError, ContinuationError, LanczosError, ev.DecompositionError,
            FloatingPointError, MemoryError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
