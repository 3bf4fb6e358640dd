"""Experiment harness and command-line interface.

Each experiment kind maps to one subcommand and one dispatch function;
every run writes CSV tables plus a JSON summary (config echo, results,
wall time, versions) into its output directory.  Configuration can come
from a flat JSON file, from flags, or both; flags win.  Runs are
deterministic given (config, seed): sweep points derive their seeds as
seed XOR point-index.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__, kernels
from .errors import ConfigError, LayoutError, NumericalDivergenceError
from .gamp import GampOptions, gamp_run, gamp_sweep, gamp_init, mse
from .measure import SeedingProfile, homogeneous_matrix, measure, seeded_matrix, total_rate
from .prior import SignalModel, prior_variance, sample_signal
from .replica import landscape, optimal_mse, phase_diagram, transitions
from .sevo import convergence_time, se_block_run, se_run

__all__ = ["ExperimentConfig", "RunRecord", "run_experiment", "success_fraction",
           "reproduce_figure", "main"]

KINDS = ("gamp", "se", "se-block", "potential", "transitions", "phase-diagram",
         "seeded-run", "success-fraction", "figure")

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig7")

# Boundary blocks of a clipped seeded design level off a few small-component
# variances above the bulk, so figure recipes count reconstruction at 6*eps.
_FIGURE_RECON_FACTOR = 6.0


@dataclass
class ExperimentConfig:
    """Flat, JSON-serializable description of one run."""

    kind: str
    # signal model
    rho: float = 0.2
    eps: float = 1e-6
    sigma2: float = 1.0
    # problem size / rates
    n: int = 10_000
    alpha: float = 0.4
    seed: int = 1234
    # solver options
    max_iter: int | None = None
    conv_tol: float = 1e-13
    v_floor: float = 1e-12
    damping: float = 1.0
    # state evolution
    tol: float = 1e-12
    e0: float | None = None
    threshold: float | None = None
    # seeding profile
    profile_lc: int = 30
    profile_lr: int | None = None
    profile_alpha_seed: float = 0.4
    profile_alpha_bulk: float = 0.29
    profile_j: float = 0.2
    profile_w: int = 3
    # sweeps
    rho_list: list = field(default_factory=list)
    eps_list: list = field(default_factory=list)
    n_list: list = field(default_factory=list)
    lc_list: list = field(default_factory=list)
    attempts: int = 5
    # figures
    name: str | None = None
    out: str = "runs/out"

    def model(self) -> SignalModel:
        try:
            return SignalModel(rho=self.rho, eps=self.eps, sigma2=self.sigma2)
        except ValueError as exc:
            raise ConfigError("rho/eps/sigma2", str(exc)) from exc

    def profile(self, lc: int | None = None) -> SeedingProfile:
        lc = self.profile_lc if lc is None else lc
        lr_delta = (self.profile_lr - self.profile_lc
                    if self.profile_lr is not None else 1)
        try:
            return SeedingProfile(Lc=lc, Lr=lc + lr_delta,
                                  alpha_seed=self.profile_alpha_seed,
                                  alpha_bulk=self.profile_alpha_bulk,
                                  J=self.profile_j, W=self.profile_w)
        except ValueError as exc:
            raise ConfigError("profile_*", str(exc)) from exc

    def gamp_options(self, default_max_iter: int = 2000) -> GampOptions:
        try:
            return GampOptions(max_iter=self.max_iter or default_max_iter,
                               conv_tol=self.conv_tol, v_floor=self.v_floor,
                               damping=self.damping)
        except ValueError as exc:
            raise ConfigError("solver options", str(exc)) from exc


@dataclass
class RunRecord:
    """What a run produced; serialized as summary.json in the output dir."""

    config: dict
    results: dict
    wall_time_s: float
    versions: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls(**json.loads(text))


def _versions() -> dict:
    return {"gampcs": __version__, "numpy": np.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
            "kernel_backend": kernels.backend_name()}


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _trace_rows(result, realized_alpha=None):
    rows = []
    n_rows = len(result.mean_v_trace)
    for t in range(n_rows):
        row = [t,
               result.mse_trace[t] if result.mse_trace is not None else float("nan"),
               result.mean_v_trace[t],
               result.residual_trace[t - 1] if t >= 1 else float("nan")]
        if realized_alpha is not None:
            row.append(realized_alpha)
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# experiment dispatchers


def _run_gamp(cfg: ExperimentConfig, out) -> dict:
    model = cfg.model()
    if not 0.0 < cfg.alpha < 1.0:
        raise ConfigError("alpha", f"must be in (0, 1), got {cfg.alpha}")
    m = round(cfg.alpha * cfg.n)
    F = homogeneous_matrix(m, cfg.n, seed=cfg.seed)
    s = sample_signal(model, cfg.n, seed=cfg.seed + 1)
    y = measure(F, s)
    res = gamp_run(F, y, model, cfg.gamp_options(), truth=s)
    realized = m / cfg.n
    _write_csv(out / "trace.csv",
               ["iteration", "mse", "mean_posterior_variance",
                "update_residual", "realized_alpha"],
               _trace_rows(res, realized))
    return {"iterations": res.iterations, "converged": res.converged,
            "final_mse": res.mse_trace[-1], "requested_alpha": cfg.alpha,
            "realized_alpha": realized, "trace_csv": "trace.csv"}


def _run_se(cfg: ExperimentConfig, out) -> dict:
    model = cfg.model()
    if not 0.0 <= cfg.alpha < 1.0:
        raise ConfigError("alpha", f"must be in [0, 1), got {cfg.alpha}")
    if cfg.alpha == 0.0:
        trace_rows = [[0, prior_variance(model)]]
        _write_csv(out / "trace.csv", ["iteration", "mse_predicted"], trace_rows)
        return {"iterations": 0, "final_mse": prior_variance(model),
                "trace_csv": "trace.csv"}
    tr = se_run(model, cfg.alpha, E0=cfg.e0, tol=cfg.tol,
                max_iter=cfg.max_iter or 10_000)
    _write_csv(out / "trace.csv", ["iteration", "mse_predicted"],
               [[t, e] for t, e in enumerate(tr.energies)])
    return {"iterations": len(tr.energies) - 1, "final_mse": tr.final,
            "converged_at": tr.converged_at, "trace_csv": "trace.csv"}


def _run_se_block(cfg: ExperimentConfig, out) -> dict:
    model = cfg.model()
    profile = cfg.profile()
    tr = se_block_run(profile, model, tol=cfg.tol,
                      max_iter=cfg.max_iter or 10_000,
                      stop_threshold=cfg.threshold)
    header = ["iteration"] + [f"mse_block_{p + 1}" for p in range(profile.Lc)]
    _write_csv(out / "trace.csv", header,
               [[t] + list(e) for t, e in enumerate(tr.energies)])
    return {"iterations": len(tr.energies) - 1,
            "converged_at": tr.converged_at,
            "final_max_mse": float(np.max(tr.final)),
            "final_mean_mse": float(np.mean(tr.final)),
            "total_alpha": total_rate(profile), "trace_csv": "trace.csv"}


def _run_potential(cfg: ExperimentConfig, out) -> dict:
    model = cfg.model()
    land = landscape(model, cfg.alpha)
    _write_csv(out / "landscape.csv", ["mse", "potential"],
               zip(land.E, land.phi))
    return {"maxima": [[e, p] for e, p in land.maxima],
            "optimal_mse": land.global_max[0], "landscape_csv": "landscape.csv"}


def _boundary_row(rho, eps, pb):
    return [rho, eps,
            pb.alpha_s if pb.exists else float("nan"),
            pb.alpha_opt if pb.exists else float("nan"),
            pb.alpha_bp if pb.exists else float("nan"),
            int(pb.exists)]


def _run_transitions(cfg: ExperimentConfig, out) -> dict:
    model = cfg.model()
    pb = transitions(model)
    _write_csv(out / "boundaries.csv",
               ["rho", "eps", "alpha_s", "alpha_opt", "alpha_bp", "exists"],
               [_boundary_row(cfg.rho, cfg.eps, pb)])
    return {"alpha_s": pb.alpha_s, "alpha_opt": pb.alpha_opt,
            "alpha_bp": pb.alpha_bp, "exists": pb.exists,
            "boundaries_csv": "boundaries.csv"}


def _run_phase_diagram(cfg: ExperimentConfig, out) -> dict:
    if cfg.eps_list and cfg.rho_list:
        raise ConfigError("rho_list/eps_list", "give one sweep axis, not both")
    if cfg.eps_list:
        points = [(cfg.rho, float(e)) for e in cfg.eps_list]
    elif cfg.rho_list:
        points = [(float(r), cfg.eps) for r in cfg.rho_list]
    else:
        raise ConfigError("rho_list/eps_list", "phase-diagram needs a sweep list")
    rows = [_boundary_row(r, e, pb) for r, e, pb in phase_diagram(points)]
    _write_csv(out / "boundaries.csv",
               ["rho", "eps", "alpha_s", "alpha_opt", "alpha_bp", "exists"],
               rows)
    return {"points": len(rows), "boundaries_csv": "boundaries.csv"}


def _run_seeded(cfg: ExperimentConfig, out) -> dict:
    model = cfg.model()
    profile = cfg.profile()
    if cfg.n % profile.Lc:
        raise ConfigError("n", f"{cfg.n} not divisible by profile_lc={profile.Lc}")
    F, layout = seeded_matrix(profile, cfg.n, seed=cfg.seed)
    s = sample_signal(model, cfg.n, seed=cfg.seed + 1)
    y = measure(F, s)
    res = gamp_run(F, y, model, cfg.gamp_options(), truth=s)
    _write_csv(out / "trace.csv",
               ["iteration", "mse", "mean_posterior_variance",
                "update_residual", "realized_alpha"],
               _trace_rows(res, layout.realized_rate))
    thr = cfg.threshold if cfg.threshold is not None else 2.0 * model.eps
    return {"iterations": res.iterations, "converged": res.converged,
            "final_mse": res.mse_trace[-1],
            "reached_threshold": bool(min(res.mse_trace) <= thr),
            "threshold": thr,
            "requested_alpha": total_rate(profile),
            "realized_alpha": layout.realized_rate, "trace_csv": "trace.csv"}


def _run_to_threshold(F, y, model, opts, truth, threshold, budget):
    """Sweep until the running MSE first dips to threshold or the iteration
    budget runs out; returns (success, crossing iteration, best MSE)."""
    state = gamp_init(model, y, F.shape[1])
    best = mse(state.mean, truth)
    if best <= threshold:
        return True, 0, best
    prev = state.mean
    for t in range(1, budget + 1):
        state = gamp_sweep(state, F, y, model, opts)
        err = mse(state.mean, truth)
        best = min(best, err)
        if err <= threshold:
            return True, t, best
        if float(np.mean((state.mean - prev) ** 2)) < opts.conv_tol:
            return False, t, best
        prev = state.mean
    return False, budget, best


def success_fraction(profile: SeedingProfile, model: SignalModel,
                     n_list, lc_list, attempts: int, seed: int,
                     threshold: float | None = None,
                     time_factor: float = 2.0,
                     opts: GampOptions | None = None) -> list[dict]:
    """Fraction of finite-size runs reconstructing within the predicted time.

    For each block count the coupled state evolution fixes the iteration
    budget (time_factor times its threshold-crossing time); each (n, Lc,
    attempt) run counts as a success if its MSE reaches the threshold within
    that budget.  Attempt seeds derive from seed XOR a running point index.
    If state evolution itself never reaches the threshold the budget is
    undefined and every attempt is reported failed without running.
    """
    if attempts < 1:
        raise ValueError(f"attempts must be >= 1, got {attempts}")
    if threshold is None:
        threshold = 2.0 * model.eps
    lr_delta = profile.Lr - profile.Lc
    rows = []
    point = 0
    for lc in lc_list:
        prof = SeedingProfile(Lc=lc, Lr=lc + lr_delta,
                              alpha_seed=profile.alpha_seed,
                              alpha_bulk=profile.alpha_bulk,
                              J=profile.J, W=profile.W)
        t_pred = convergence_time(model, profile=prof, threshold=threshold)
        budget = None if math.isinf(t_pred) else int(math.ceil(time_factor * t_pred))
        for n in n_list:
            if n % lc:
                raise LayoutError(f"n={n} not divisible by Lc={lc}")
            successes = 0
            realized = None
            for k in range(attempts):
                run_seed = seed ^ point
                point += 1
                if budget is None:
                    continue
                F, layout = seeded_matrix(prof, n, seed=run_seed + 10**6)
                realized = layout.realized_rate
                s = sample_signal(model, n, seed=run_seed)
                y = measure(F, s)
                run_opts = opts or GampOptions(max_iter=budget)
                ok, _, _ = _run_to_threshold(F, y, model, run_opts, s,
                                             threshold, budget)
                successes += int(ok)
            rows.append({"n": n, "lc": lc, "attempts": attempts,
                         "successes": successes,
                         "fraction": successes / attempts,
                         "predicted_iterations":
                             None if budget is None else t_pred,
                         "realized_alpha": realized,
                         "threshold": threshold})
    return rows


def _run_success_fraction(cfg: ExperimentConfig, out) -> dict:
    model = cfg.model()
    if not cfg.n_list or not cfg.lc_list:
        raise ConfigError("n_list/lc_list", "success-fraction needs both lists")
    if cfg.attempts < 1:
        raise ConfigError("attempts", f"must be >= 1, got {cfg.attempts}")
    rows = success_fraction(cfg.profile(), model,
                            [int(x) for x in cfg.n_list],
                            [int(x) for x in cfg.lc_list],
                            cfg.attempts, cfg.seed, threshold=cfg.threshold)
    _write_csv(out / "success.csv",
               ["n", "lc", "realized_alpha", "attempts", "successes",
                "fraction", "predicted_iterations", "threshold"],
               [[r["n"], r["lc"],
                 float("nan") if r["realized_alpha"] is None else r["realized_alpha"],
                 r["attempts"], r["successes"], r["fraction"],
                 float("inf") if r["predicted_iterations"] is None
                 else r["predicted_iterations"],
                 r["threshold"]] for r in rows])
    return {"rows": rows, "success_csv": "success.csv"}


# ---------------------------------------------------------------------------
# figure recipes (desk scale; raise n / grids via flags for paper scale)


def _figure_fig1(cfg, out):
    model = cfg.model()
    horizon = cfg.max_iter or 60
    tr = se_run(model, cfg.alpha, max_iter=horizon)
    m = round(cfg.alpha * cfg.n)
    F = homogeneous_matrix(m, cfg.n, seed=cfg.seed)
    s = sample_signal(model, cfg.n, seed=cfg.seed + 1)
    res = gamp_run(F, measure(F, s), model,
                   cfg.gamp_options(default_max_iter=horizon), truth=s)
    rows = []
    for t in range(max(len(tr.energies), len(res.mse_trace))):
        rows.append([t,
                     tr.energies[min(t, len(tr.energies) - 1)],
                     res.mse_trace[min(t, len(res.mse_trace) - 1)]])
    _write_csv(out / "fig1.csv", ["iteration", "mse_predicted", "mse_algorithm"],
               rows)
    return {"alpha": cfg.alpha, "n": cfg.n, "csv": "fig1.csv"}


def _figure_fig2(cfg, out):
    model = cfg.model()
    rows = []
    for alpha in (0.2305, 0.2817, 0.3559):
        land = landscape(model, alpha)
        rows += [[alpha, e, p] for e, p in zip(land.E, land.phi)]
    _write_csv(out / "fig2.csv", ["alpha", "mse", "potential"], rows)
    return {"alphas": [0.2305, 0.2817, 0.3559], "csv": "fig2.csv"}


def _figure_fig3(cfg, out):
    rows = []
    eps_list = [float(e) for e in cfg.eps_list] or [1e-6, 2.5e-3, 1e-2]
    alphas = np.linspace(0.05, 0.75, 20)
    for eps in eps_list:
        model = SignalModel(rho=0.1, eps=eps, sigma2=cfg.sigma2)
        for alpha in alphas:
            rows.append([eps, float(alpha), se_run(model, float(alpha)).final])
    _write_csv(out / "fig3.csv", ["eps", "alpha", "mse_se"], rows)
    return {"eps_list": eps_list, "csv": "fig3.csv"}


def _figure_fig4(cfg, out):
    model = SignalModel(rho=0.1, eps=cfg.eps, sigma2=cfg.sigma2)
    rows = []
    for alpha in np.linspace(0.05, 0.35, 20):
        rows.append([float(alpha), se_run(model, float(alpha)).final,
                     optimal_mse(model, float(alpha))])
    _write_csv(out / "fig4.csv", ["alpha", "mse_gamp_se", "mse_optimal"], rows)
    return {"rho": model.rho, "eps": model.eps, "csv": "fig4.csv"}


def _figure_fig7(cfg, out):
    model = cfg.model()
    threshold = (cfg.threshold if cfg.threshold is not None
                 else _FIGURE_RECON_FACTOR * model.eps)
    pb = transitions(model)
    if not pb.exists:
        raise ConfigError("rho/eps", "no first-order region at this model; "
                                     "the convergence-time sweep needs one")
    rows = []
    for alpha in np.linspace(pb.alpha_bp + 0.002, pb.alpha_bp + 0.06, 10):
        t = convergence_time(model, alpha=float(alpha), threshold=threshold)
        rows.append(["homogeneous", float(alpha), t])
    for lc in (cfg.lc_list or [10, 20, 30]):
        prof = cfg.profile(lc=int(lc))
        t = convergence_time(model, profile=prof, threshold=threshold)
        rows.append([f"seeded_lc_{lc}", total_rate(prof), t])
    _write_csv(out / "fig7.csv", ["kind", "alpha", "iterations"], rows)
    return {"alpha_bp": pb.alpha_bp, "threshold": threshold, "csv": "fig7.csv"}


_FIGURE_DISPATCH = {"fig1": _figure_fig1, "fig2": _figure_fig2,
                    "fig3": _figure_fig3, "fig4": _figure_fig4,
                    "fig7": _figure_fig7}


def reproduce_figure(cfg: ExperimentConfig, out) -> dict:
    if cfg.name not in _FIGURE_DISPATCH:
        raise ConfigError("name", f"unknown figure {cfg.name!r}; "
                                  f"choose from {', '.join(FIGURES)}")
    return _FIGURE_DISPATCH[cfg.name](cfg, out)


_DISPATCH = {
    "gamp": _run_gamp,
    "se": _run_se,
    "se-block": _run_se_block,
    "potential": _run_potential,
    "transitions": _run_transitions,
    "phase-diagram": _run_phase_diagram,
    "seeded-run": _run_seeded,
    "success-fraction": _run_success_fraction,
    "figure": reproduce_figure,
}


def run_experiment(cfg: ExperimentConfig) -> RunRecord:
    """Dispatch a validated config, write its outputs, return the record."""
    from pathlib import Path

    if cfg.kind not in _DISPATCH:
        raise ConfigError("kind", f"unknown kind {cfg.kind!r}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.time()
    results = _DISPATCH[cfg.kind](cfg, out)
    record = RunRecord(config=asdict(cfg), results=results,
                       wall_time_s=time.time() - start, versions=_versions())
    (out / "summary.json").write_text(record.to_json())
    return record


# ---------------------------------------------------------------------------
# CLI


def _load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    known = {f.name for f in fields(ExperimentConfig)}
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown configuration key")
    return raw


def _csv_list(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat JSON config file; flags override it")
    p.add_argument("--out", help="output directory (default runs/<kind>)")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--tol", type=float)
    p.add_argument("--threshold", type=float,
                   help="reconstruction MSE threshold (default 2*eps)")
    p.add_argument("--conv-tol", type=float, dest="conv_tol")
    p.add_argument("--v-floor", type=float, dest="v_floor")
    p.add_argument("--damping", type=float)
    p.add_argument("--e0", type=float)
    p.add_argument("--profile-lc", type=int, dest="profile_lc")
    p.add_argument("--profile-lr", type=int, dest="profile_lr")
    p.add_argument("--profile-alpha-seed", type=float, dest="profile_alpha_seed")
    p.add_argument("--profile-alpha-bulk", type=float, dest="profile_alpha_bulk")
    p.add_argument("--profile-j", type=float, dest="profile_j")
    p.add_argument("--profile-w", type=int, dest="profile_w")
    p.add_argument("--rho-list", type=_csv_list, dest="rho_list")
    p.add_argument("--eps-list", type=_csv_list, dest="eps_list")
    p.add_argument("--n-list", type=_csv_list, dest="n_list")
    p.add_argument("--lc-list", type=_csv_list, dest="lc_list")
    p.add_argument("--attempts", type=int)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gampcs",
        description="Compressed sensing experiments: G-AMP, state evolution, "
                    "replica phase boundaries, seeded matrices.")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        _add_common(p)
        if kind == "figure":
            p.add_argument("--name", choices=FIGURES, required=True)
    return parser


def build_config(argv) -> ExperimentConfig:
    args = vars(_build_parser().parse_args(argv))
    kind = args.pop("kind")
    raw = {"kind": kind}
    config_path = args.pop("config", None)
    if config_path:
        file_cfg = _load_config_file(config_path)
        file_cfg.pop("kind", None)
        raw.update(file_cfg)
    for key, val in args.items():
        if val is not None:
            raw[key] = val
    raw.setdefault("out", f"runs/{kind}")
    try:
        cfg = ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from exc
    return cfg


def main(argv=None) -> int:
    try:
        cfg = build_config(argv if argv is not None else sys.argv[1:])
        record = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except LayoutError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalDivergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    summary = {k: v for k, v in record.results.items()
               if not isinstance(v, (list, dict))}
    print(f"{cfg.kind}: wrote {cfg.out}/summary.json "
          f"({record.wall_time_s:.2f}s) {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
