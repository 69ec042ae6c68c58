"""Command-line front end: ``rbolab <command> [subcommand] [--flags]``.

Every run writes report.json, CSV series, plot data and MANIFEST.txt into an
output directory keyed by the command and its parameters.  Parameters come
from built-in defaults, then an optional JSON config file, then flags.

Exit status: 0 ok, 2 precondition violated, 3 numerical failure,
64 unknown command, 65 malformed configuration.
"""
from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import serialize as io
from .evolution import (
    ContractionWindowError,
    IntegrationError,
    contraction_window,
    evolve_rk4,
    picard_solve,
)
from .experiments import QuadratureError
from .fourier import (
    SpectralField,
    apply_symbol,
    dealiased_product,
    deriv,
    hilbert_deriv,
    inner_product,
    make_grid,
    neg_second_deriv,
    sobolev_norm,
)
from .linop import (
    DegenerateConstraintError,
    assemble,
    coercivity_estimate,
    constrained_min,
    eigen_report,
    kernel_vector,
    pf2_check,
    stability_index,
)
from .waves import (
    AdmissibilityError,
    bbm_cnoidal,
    bbm_fourier_coeffs,
    bbm_residual,
    bbm_wave_at_speed,
    rbo_deta_dc,
    rbo_dwave_dc,
    rbo_eta,
    rbo_index_analytic,
    rbo_residual,
    rbo_wave,
)

EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3
EXIT_USAGE, EXIT_CONFIG = 64, 65
TWO_PI = 2 * math.pi


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# name -> (type, default, help); choices given as a tuple type
P_RBO = {"c": (float, 4.0, "wave speed"), "L": (float, TWO_PI, "half period")}
P_BBM = {"L": (float, 8.0, "period"), "k": (float, 0.5, "elliptic modulus"),
         "branch": (("plus", "minus"), "plus", "speed branch")}
P_KIND = {"c": (float, 4.0, "rbo wave speed"),
          "L": (float, 0.0, "rbo half period or bbm period (0: 2pi for rbo, 8 for bbm)")}

COMMANDS = {
    "wave rbo": {**P_RBO, "N": (int, 256, "grid points")},
    "wave bbm": {**P_BBM, "N": (int, 512, "grid points")},
    "spectrum rbo": {**P_RBO, "M": (int, 96, "mode window"), "N": (int, 0, "grid points (0: auto)")},
    "spectrum bbm": {**P_BBM, "M": (int, 64, "mode window"), "N": (int, 0, "grid points (0: auto)")},
    "pf2": {"family": (("rbo", "bbm", "power"), "rbo", "sequence family"),
            "eta": (float, 0.8, "decay rate for the rbo family"),
            "L": (float, 8.0, "bbm period"), "k": (float, 0.5, "bbm modulus"),
            "M": (int, 16, "index window")},
    "lemma71": {**P_RBO, "M": (int, 96, "mode window"), "N": (int, 0, "grid points (0: auto)")},
    "evolve": {"kind": (("rbo", "bbm"), "rbo", "wave family"), **P_KIND,
               "k": (float, 0.5, "bbm modulus"), "N": (int, 256, "grid points"),
               "T": (float, 10.0, "final time"), "dt": (float, 1e-3, "time step"),
               "delta": (float, 0.0, "first-harmonic perturbation size"),
               "sample_dt": (float, 0.1, "state output interval")},
    "picard": {"amplitude": (float, 0.1, "H^1 norm of the initial datum"),
               "N": (int, 64, "grid points"), "P": (float, TWO_PI, "period"),
               "fraction": (float, 1.0, "requested time as a fraction of the window"),
               "force": (_bool, False, "skip the contraction-window precondition")},
    "stability": {"kind": (("rbo", "bbm"), "rbo", "wave family"), **P_KIND,
                  "k": (float, 0.5, "bbm modulus"), "N": (int, 256, "grid points"),
                  "delta": (float, 1e-3, "perturbation size"), "T": (float, 50.0, "horizon"),
                  "dt": (float, 1e-3, "time step"), "sample_dt": (float, 0.05, "output interval"),
                  "normalize": (_bool, True, "restore F(u0) = F(phi)")},
    "illposed scan": {"s": (float, -0.5, "Sobolev index"), "t": (float, 1.0, "time"),
                      "Nmin": (int, 32, "smallest N (power of two)"),
                      "Nmax": (int, 2048, "largest N (power of two)")},
    "illposed nonperiodic": {"s": (float, -0.5, "Sobolev index"), "eps": (float, 0.2, "t = N^-eps"),
                             "Ns": (_ints, [16, 32, 64, 128], "comma-separated N values")},
    "index rbo": {**P_RBO, "h": (float, 1e-3, "speed step"), "N": (int, 256, "grid points")},
    "index bbm": {**P_BBM, "h": (float, 1e-4, "speed step"), "N": (int, 512, "grid points")},
}

@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    output: str | None = None
    seed: int = 0
    workers: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        unknown = set(doc) - {"command", "params", "output", "seed", "workers"}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(str(doc.get("command", "")), dict(doc.get("params", {})), doc.get("output"),
                   int(doc.get("seed", 0)), int(doc.get("workers", 1)))

    def run_key(self) -> str:
        parts = [self.command.replace(" ", "-")]
        for k in sorted(self.params):
            v = self.params[k]
            if isinstance(v, list):
                v = "-".join(str(x) for x in v)
            parts.append(f"{k}={v}")
        return "_".join(parts)

    def output_dir(self) -> Path:
        if self.output:
            return Path(self.output)
        return io.default_output_root() / self.run_key()


def _convert(kind, value, name):
    try:
        if isinstance(kind, tuple):
            if value not in kind:
                raise ValueError(f"must be one of {kind}")
            return value
        return kind(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"parameter {name!r}: {e}") from None


def resolve_params(command: str, config_params: dict, flags: dict) -> dict:
    spec = COMMANDS[command]
    unknown = set(config_params) - set(spec)
    if unknown:
        raise ConfigError(f"unknown parameters for {command!r}: {sorted(unknown)}")
    out = {name: default for name, (_, default, _) in spec.items()}
    for src in (config_params, flags):
        for name, value in src.items():
            out[name] = _convert(spec[name][0], value, name)
    return out


# ------------------------------------------------------------- handlers


def _auto_n(N, M, minimum=256):
    return N if N else max(minimum, 2 ** math.ceil(math.log2(4 * M)))


def _profile(kind, p, N):
    if kind == "rbo":
        L = p["L"] or TWO_PI
        return rbo_wave(p["c"], L, make_grid(N, 2 * L))
    L = p["L"] or 8.0
    return bbm_cnoidal(L, p["k"], make_grid(N, L), p.get("branch", "plus"),
                       allow_unstable=p.get("branch", "plus") == "minus")


def run_wave(cfg, out):
    p = cfg.params
    kind = cfg.command.split()[1]
    prof = _profile(kind, p, p["N"])
    vals = prof.values().real
    if kind == "rbo":
        res = rbo_residual(prof)
        n = np.arange(0, 33)
        an = prof.analytic_coeffs(n)
    else:
        res = bbm_residual(prof)
        n = np.arange(0, 9)
        an = prof.analytic_coeffs(n)
    fft_err = float(np.abs(prof.field.mode(n).real - an).max() / np.abs(an).max())
    scale = float(np.abs(vals).max())
    io.write_json(out / "profile.json", io.profile_to_dict(prof))
    io.write_csv(out / "profile.csv", ["x", "phi"], zip(prof.grid.x, vals))
    io.write_columns(out / "profile.dat", "x phi", prof.grid.x, vals)
    io.write_csv(out / "coefficients.csv", ["n", "fft", "analytic"],
                 zip(n, prof.field.mode(n).real, an))
    return {"speed": prof.speed, "params": prof.params, "residual": res,
            "relative_residual": res / scale, "coefficient_error": fft_err,
            "tail_bound": prof.tail_bound, "passed": res / scale < 1e-9}


def _spectrum(cfg):
    p = cfg.params
    kind = cfg.command.split()[1] if " " in cfg.command else "rbo"
    prof = _profile(kind, p, _auto_n(p["N"], p["M"], 256 if kind == "rbo" else 512))
    sym = hilbert_deriv() if kind == "rbo" else neg_second_deriv()
    A = assemble(prof, sym, 1, p["M"])
    return prof, sym, A


def run_spectrum(cfg, out):
    prof, sym, A = _spectrum(cfg)
    rep = eigen_report(A, kernel_vector(A, prof))
    io.write_json(out / "eigenreport.json", rep.to_dict())
    io.write_csv(out / "spectrum.csv", ["index", "eigenvalue"], enumerate(rep.eigenvalues))
    io.write_columns(out / "spectrum.dat", "index eigenvalue",
                     np.arange(rep.eigenvalues.size), rep.eigenvalues)
    lam = rep.eigenvalues
    return {"count_negative": rep.count_negative, "zero_eigenvalue": rep.zero_value,
            "zero_simple": rep.simple_zero, "kernel_alignment": rep.kernel_alignment,
            "lowest": [float(v) for v in lam[:4]], "norm": rep.norm,
            "gershgorin": A.gershgorin_tail(),
            "passed": rep.count_negative == 1 and rep.simple_zero}


def run_pf2(cfg, out):
    p = cfg.params
    n = np.arange(-p["M"], p["M"] + 1)
    if p["family"] == "rbo":
        seq = np.exp(-p["eta"] * np.abs(n))
    elif p["family"] == "bbm":
        seq = bbm_fourier_coeffs(p["L"], p["k"], n)
    else:
        seq = 1.0 + np.abs(n).astype(float)
    res = pf2_check(seq)
    io.write_csv(out / "sequence.csv", ["n", "value"], zip(n, seq))
    return {"passed": res.passed, "failed_condition": res.condition,
            "witness": list(res.witness) if res.witness else None, "value": res.value,
            "quadruples_checked": res.checked}


def run_lemma71(cfg, out):
    p = cfg.params
    prof = rbo_wave(p["c"], p["L"], make_grid(_auto_n(p["N"], p["M"]), 2 * p["L"]))
    A = assemble(prof, hilbert_deriv(), 1, p["M"])
    phi = prof.field
    R = phi + apply_symbol(phi, hilbert_deriv())
    pp = dealiased_product(phi, apply_symbol(phi, deriv()))
    alpha = constrained_min(A, [R])
    beta = constrained_min(A, [R, pp])
    coer = coercivity_estimate(A, [R, pp])
    chi = rbo_dwave_dc(p["c"], p["L"], prof.grid)
    pair = inner_product(chi, R)
    analytic = rbo_index_analytic(p["c"], p["L"])
    rel = abs(pair - analytic) / abs(analytic)
    io.write_columns(out / "lowest_eigenvectors.dat", "basis_index v0",
                     np.arange(A.dim), eigen_report(A).lowest_vectors[:, 0])
    return {"alpha": alpha, "alpha_relative": alpha / A.norm, "beta": beta,
            "coercivity": coer, "chi_pairing": pair, "chi_pairing_analytic": analytic,
            "pairing_relative_error": rel, "deta_dc": rbo_deta_dc(p["c"], p["L"]),
            "eta": rbo_eta(p["c"], p["L"]),
            "passed": abs(alpha) < 1e-5 * A.norm and beta > 0 and pair < 0 and rel < 1e-6}


def run_evolve(cfg, out):
    p = cfg.params
    prof = _profile(p["kind"], p, p["N"])
    sym = hilbert_deriv() if p["kind"] == "rbo" else neg_second_deriv()
    u0 = prof.field
    if p["delta"]:
        u0, _ = ex.perturbed_initial_data(prof, p["delta"], dispersive=sym, normalize=False)
    every = max(1, int(round(p["sample_dt"] / p["dt"])))
    tr = evolve_rk4(u0, p["T"], p["dt"], dispersive=sym, save_every=every, fit_dt=True)
    cols, data = tr.diagnostics_table()
    io.write_csv(out / "diagnostics.csv", cols, data)
    io.write_columns(out / "F.dat", "t F", data[:, 0], data[:, 2])
    snaps = out / "snapshots"
    snaps.mkdir(exist_ok=True)
    for i, (t, u) in enumerate(zip(tr.times, tr.states)):
        io.write_json(snaps / f"state_{i:05d}.json", {"t": t, **io.field_to_dict(u)})
    exact = prof.field.translate(-prof.speed * tr.times[-1])
    rel = sobolev_norm(tr.final - exact, 0.5) / sobolev_norm(exact, 0.5)
    od = ex.orbital_distance(tr.final, prof)
    return {"dt": tr.dt, "steps": int(round(abs(p["T"]) / tr.dt)), "F_drift": tr.drift("F"),
            "E_drift": tr.drift("E"), "G_drift": tr.drift("G"),
            "distance_to_translated_wave": rel, "orbital_distance": od.distance,
            "orbital_shift": od.shift, "warnings": tr.warnings}


def run_picard(cfg, out):
    p = cfg.params
    g = make_grid(p["N"], p["P"])
    u0 = SpectralField.from_function(
        g, lambda x: np.cos(TWO_PI * x / p["P"]) + 0.5 * np.sin(2 * TWO_PI * x / p["P"]))
    u0 = u0 * (p["amplitude"] / sobolev_norm(u0, 1.0))
    T, c0, R = contraction_window(u0)
    res = picard_solve(u0, p["fraction"] * T, c0=c0, enforce_window=not p["force"])
    tr = evolve_rk4(u0, res.times[-1], 1e-3, fit_dt=True)
    err = sobolev_norm(tr.final - res.final, 1.0)
    io.write_csv(out / "ratios.csv", ["iteration", "ratio"],
                 zip(range(2, 2 + res.ratios.size), res.ratios))
    io.write_csv(out / "distances.csv", ["iteration", "distance"],
                 zip(range(1, 1 + res.distances.size), res.distances))
    return {"window": res.window, "c0": res.c0, "R": res.radius, "T": float(res.times[-1]),
            "iterations": res.iterations, "converged": res.converged,
            "max_ratio_after_second": float(res.ratios[1:].max()) if res.ratios.size > 1 else None,
            "rk4_difference": err, "passed": res.converged and err < 1e-6}


def run_stability(cfg, out):
    p = cfg.params
    prof = _profile(p["kind"], p, p["N"])
    sym = hilbert_deriv() if p["kind"] == "rbo" else neg_second_deriv()
    run = ex.stability_run(prof, p["delta"], p["T"], dt=p["dt"], sample_dt=p["sample_dt"],
                           dispersive=sym, normalize=p["normalize"])
    io.write_csv(out / "distance.csv", ["t", "d", "shift", "orthogonality"],
                 zip(run.times, run.distances, run.shifts, run.orthogonality))
    io.write_columns(out / "distance.dat", "t d", run.times, run.distances)
    return {**run.summary(), "slope_over_delta": run.trend_slope / p["delta"] if p["delta"] else None}


def run_illposed_scan(cfg, out):
    p = cfg.params
    if p["Nmin"] < 1 or p["Nmax"] <= p["Nmin"]:
        raise ValueError("need 1 <= Nmin < Nmax")
    Ns = [2**j for j in range(int(math.log2(p["Nmin"])), int(math.log2(p["Nmax"])) + 1)]
    scan = ex.illposed_scan(p["s"], p["t"], Ns)
    comp = [ex.picard2_periodic(n, p["s"], p["t"]).compensated() for n in scan.N]
    io.write_csv(out / "ratios.csv", ["N", "ratio", "compensated"], zip(scan.N, scan.ratios, comp))
    io.write_columns(out / "ratios.dat", "N ratio", scan.N, scan.ratios)
    return {**scan.to_dict(), "compensated": comp}


def _nonperiodic_one(args):
    N, s, eps = args
    return ex.illposed_nonperiodic(N, s, eps)


def run_illposed_nonperiodic(cfg, out):
    p = cfg.params
    jobs = [(int(N), p["s"], p["eps"]) for N in p["Ns"]]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_nonperiodic_one, jobs))
    else:
        results = [_nonperiodic_one(j) for j in jobs]
    comp = [r.compensated for r in results]
    io.write_csv(out / "lower_bound.csv", ["N", "t", "lower_bound", "ratio_proxy", "compensated"],
                 [(r.N, r.t, r.lower_bound, r.ratio_proxy, r.compensated) for r in results])
    io.write_columns(out / "compensated.dat", "N compensated", p["Ns"], comp)
    return {"results": [asdict(r) for r in results],
            "compensated_min": min(comp), "compensated_max": max(comp),
            "passed": min(comp) > 0 and max(comp) / min(comp) < 2}


def run_index(cfg, out):
    p = cfg.params
    kind = cfg.command.split()[1]
    if kind == "rbo":
        g = make_grid(p["N"], 2 * p["L"])
        res = stability_index(lambda c: rbo_wave(c, p["L"], g).field, p["c"], p["h"], hilbert_deriv())
        extra = {"analytic": rbo_index_analytic(p["c"], p["L"])}
    else:
        g = make_grid(p["N"], p["L"])
        c = bbm_cnoidal(p["L"], p["k"], g).speed
        # keep c - h above the small-amplitude limit c*
        cstar = 1 + 4 * math.pi**2 / (p["L"] ** 2 - 4 * math.pi**2)
        h = min(p["h"], 0.25 * (c - cstar))
        res = stability_index(lambda cc: bbm_wave_at_speed(cc, p["L"], g).field, c, h,
                              neg_second_deriv())
        extra = {"speed": c, "h_used": h}
    return {**asdict(res), **extra, "passed": res.I < 0}


HANDLERS = {
    "wave rbo": run_wave, "wave bbm": run_wave,
    "spectrum rbo": run_spectrum, "spectrum bbm": run_spectrum,
    "pf2": run_pf2, "lemma71": run_lemma71, "evolve": run_evolve, "picard": run_picard,
    "stability": run_stability, "illposed scan": run_illposed_scan,
    "illposed nonperiodic": run_illposed_nonperiodic,
    "index rbo": run_index, "index bbm": run_index,
}


def dispatch(cfg: RunConfig) -> tuple[int, dict]:
    """Run one configured command; returns (exit status, report)."""
    if cfg.command not in HANDLERS:
        return EXIT_USAGE, {"error": f"unknown command {cfg.command!r}"}
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    report = {"command": cfg.command, "config": cfg.to_dict()}
    status = EXIT_OK
    try:
        report["results"] = HANDLERS[cfg.command](cfg, out)
    except (ContractionWindowError, AdmissibilityError, DegenerateConstraintError) as e:
        status, report["error"] = EXIT_PRECONDITION, f"{type(e).__name__}: {e}"
    except (IntegrationError, QuadratureError, np.linalg.LinAlgError, FloatingPointError) as e:
        status, report["error"] = EXIT_NUMERICAL, f"{type(e).__name__}: {e}"
    except ValueError as e:
        status, report["error"] = EXIT_PRECONDITION, f"{type(e).__name__}: {e}"
    except (RuntimeError, ArithmeticError) as e:
        status, report["error"] = EXIT_NUMERICAL, f"{type(e).__name__}: {e}"
    report["exit_status"] = status
    io.write_json(out / "report.json", report)
    io.write_manifest(out)
    return status, report


# --------------------------------------------------------------- parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        if "invalid choice" in message and "argument command" in message:
            raise UsageError(message)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rbolab", description="Periodic travelling-wave laboratory for rBO and BBM.")
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help="output directory (default: $RBOLAB_OUTPUT/<run key>)")
    ap.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    ap.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    top = {}
    for name in COMMANDS:
        head, _, tail = name.partition(" ")
        if tail:
            if head not in top:
                top[head] = sub.add_parser(head).add_subparsers(dest="sub", parser_class=_Parser,
                                                                required=True)
            sp = top[head].add_parser(tail)
        else:
            sp = sub.add_parser(head)
        for pname, (kind, default, helptext) in COMMANDS[name].items():
            flag = "--" + pname.replace("_", "-")
            kw = {"dest": pname, "default": argparse.SUPPRESS, "help": f"{helptext} (default {default})"}
            if isinstance(kind, tuple):
                kw["choices"] = kind
            elif kind in (_ints, _floats, _bool):
                kw["type"] = str
            else:
                kw["type"] = kind
            sp.add_argument(flag, **kw)
    return ap


def config_from_args(argv) -> RunConfig:
    ap = build_parser()
    ns = vars(ap.parse_args(argv))
    doc = {}
    if ns.get("config"):
        try:
            doc = json.loads(Path(ns["config"]).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    base = RunConfig.from_dict(doc) if doc else RunConfig("")
    cmd = ns.get("command")
    if cmd:
        cmd = f"{cmd} {ns['sub']}" if ns.get("sub") else cmd
        if base.command and base.command != cmd:
            base.params = {}
        base.command = cmd
    if not base.command:
        raise UsageError("no command given")
    if base.command not in COMMANDS:
        raise UsageError(f"unknown command {base.command!r}")
    flags = {k: v for k, v in ns.items()
             if k in COMMANDS[base.command] and k not in ("command", "sub")}
    base.params = resolve_params(base.command, base.params, flags)
    if ns.get("out"):
        base.output = ns["out"]
    if "seed" in ns:
        base.seed = ns["seed"]
    if "workers" in ns:
        base.workers = ns["workers"]
    return base


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = config_from_args(argv)
    except UsageError as e:
        print(f"rbolab: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"rbolab: malformed configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG
    np.random.seed(cfg.seed)
    status, report = dispatch(cfg)
    summary = report.get("results", {"error": report.get("error")})
    print(io.dumps({"command": cfg.command, "status": status, "output": str(cfg.output_dir()),
                    "results": {k: v for k, v in summary.items()
                                if not isinstance(v, (list, dict))}}), end="")
    return status


if __name__ == "__main__":
    sys.exit(main())
