"""Reproducible experiment driver.

``gramscope <experiment> --config <path> [--out <dir>] [--seeds a,b,c]``

Configs are line-oriented ``key = value`` text with ``[section]`` headers
(read by :mod:`configparser`).  Each run writes CSV artifacts with
17-significant-digit numbers, a flat ``key = value`` report, and a manifest
recording the code version, config hash, and seed list.  The exit code is 0
exactly when every report row passed.
"""

import argparse
import configparser
import hashlib
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

import gramscope
from gramscope import activations, chebyshev, data, depth, gram, hermite, kill
from gramscope.network import init_net
from gramscope.training import TrainConfig, movement_condition, spectral_predict, train_gd, train_sgd

EXPERIMENTS = (
    "spectrum",
    "approx",
    "kill",
    "train",
    "predict",
    "depth",
    "smoothed",
    "trace",
    "multiclass",
)


class ConfigError(ValueError):
    pass


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


@dataclass
class ReportRow:
    experiment: str
    seed: int
    status: bool
    measured: Dict[str, float]
    tolerances: Dict[str, float]
    wall_clock: float


@dataclass
class RunReport:
    rows: List[ReportRow] = field(default_factory=list)

    @property
    def passed(self):
        return all(r.status for r in self.rows)

    def write(self, path):
        with open(path, "w", newline="\n") as fh:
            for r in self.rows:
                prefix = f"{r.experiment}.seed{r.seed}"
                fh.write(f"{prefix}.status = {'pass' if r.status else 'fail'}\n")
                for k, v in r.measured.items():
                    fh.write(f"{prefix}.{k} = {_fmt(v)}\n")
                for k, v in r.tolerances.items():
                    fh.write(f"{prefix}.tol.{k} = {_fmt(v)}\n")
                fh.write(f"{prefix}.wall_clock_s = {_fmt(r.wall_clock)}\n")
            fh.write(f"overall = {'pass' if self.passed else 'fail'}\n")


@dataclass
class ExperimentConfig:
    name: str
    raw: configparser.ConfigParser
    seeds: List[int]
    outdir: str
    config_bytes: bytes

    def get(self, section, key, fallback=None, cast=str):
        if not self.raw.has_option(section, key):
            if fallback is None:
                raise ConfigError(f"missing config key [{section}] {key}")
            return fallback
        val = self.raw.get(section, key)
        try:
            if cast is bool:
                return val.strip().lower() in ("1", "true", "yes")
            return cast(val)
        except ValueError as exc:
            raise ConfigError(f"bad value for [{section}] {key}: {val!r}") from exc

    def get_list(self, section, key, fallback=None, cast=float):
        if not self.raw.has_option(section, key):
            if fallback is None:
                raise ConfigError(f"missing config key [{section}] {key}")
            return fallback
        return [cast(tok.strip()) for tok in self.raw.get(section, key).split(",") if tok.strip()]


def load_config(path, experiment=None, seeds=None, outdir=None):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        parser.read_string(blob.decode("utf-8"))
    except (configparser.Error, UnicodeDecodeError) as exc:
        line = getattr(exc, "lineno", "?")
        raise ConfigError(f"config parse error at line {line}: {exc}") from exc
    name = experiment or parser.get("experiment", "name", fallback=None)
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
    cfg = ExperimentConfig(
        name=name,
        raw=parser,
        seeds=[],
        outdir=outdir or parser.get("experiment", "out", fallback="gramscope-out"),
        config_bytes=blob,
    )
    seed_list = seeds if seeds is not None else cfg.get_list("run", "seeds", fallback=[0.0])
    cfg.seeds = [int(s) for s in seed_list]
    if not cfg.seeds:
        raise ConfigError("seed list is empty")
    return cfg


def make_dataset(cfg, seed):
    kind = cfg.get("data", "kind", fallback="circle")
    if kind == "circle":
        return data.circle_lift(
            cfg.get("data", "n", cast=int), cfg.get("data", "d", cast=int), seed
        )
    if kind == "lowdim":
        return data.low_dim_embed(
            cfg.get("data", "n", cast=int),
            cfg.get("data", "d_prime", cast=int),
            cfg.get("data", "d", cast=int),
            cfg.get("data", "min_delta", fallback=0.0, cast=float),
            seed,
        )
    if kind == "csv":
        return data.load_csv(cfg.get("data", "path"), seed=seed)
    raise ConfigError(f"unknown data kind {kind!r}")


def activation_list(cfg):
    names = [s.strip() for s in cfg.get("net", "activations", fallback="tanh").split(",")]
    return [activations.catalog(n) for n in names if n]


def compare_orderings(lam_by_activation):
    """Verdict on the kink-vs-smooth eigenvalue ordering
    ``relu > elu > max(tanh, swish)`` for one matched run.

    Equal values are reported as ties rather than failures.
    """
    need = ("relu", "elu", "tanh", "swish")
    missing = [k for k in need if k not in lam_by_activation]
    if missing:
        raise ValueError(f"orderings need activations {missing}")
    lam = {k: float(lam_by_activation[k]) for k in need}
    ties = sorted(
        {a for a in need for b in need if a < b and lam[a] == lam[b]}
    )
    verdict = (
        lam["relu"] > lam["elu"]
        and lam["elu"] > lam["tanh"]
        and lam["elu"] > lam["swish"]
    )
    return {"verdict": bool(verdict), "ties": ties, "lambda_min": lam}


def majority_verdict(verdicts):
    return sum(1 for v in verdicts if v) * 2 > len(verdicts)


# ---------------------------------------------------------------------------
# experiment runners: each returns (csv_files, report_rows)
# csv_files maps filename -> (header, rows); writing happens after the seed
# loop completes so failures never leave partial artifacts behind.
# ---------------------------------------------------------------------------


def _run_spectrum(cfg):
    m = cfg.get("net", "m", cast=int)
    scheme = cfg.get("net", "scheme", fallback="dzps")
    specs = activation_list(cfg)
    csvs, rows = {}, []
    lam_table = {s.name: [] for s in specs}
    for seed in cfg.seeds:
        t0 = time.time()
        ds = make_dataset(cfg, seed)
        lam_here = {}
        for spec in specs:
            net = init_net(scheme, m, ds.dim, seed, spec.name)
            sp = gram.eigen_sym(gram.build_G_finite(ds, net, spec))
            lam_here[spec.name] = sp.lam_min
            lam_table[spec.name].append(sp.lam_min)
            csvs[f"spectrum_{spec.name}_seed{seed}.csv"] = (
                ("index", "eigenvalue", "residual"),
                [(i, sp.eigenvalues[i], sp.residuals[i]) for i in range(ds.n)],
            )
        measured = {f"lam_min_{k}": v for k, v in lam_here.items()}
        status = True
        if all(k in lam_here for k in ("relu", "elu", "tanh", "swish")):
            verdict = compare_orderings(lam_here)
            measured["ordering_ok"] = verdict["verdict"]
            status = verdict["verdict"] or bool(verdict["ties"])
        rows.append(ReportRow("spectrum", seed, status, measured, {}, time.time() - t0))
    if all(k in lam_table for k in ("relu", "elu", "tanh", "swish")) and len(cfg.seeds) > 1:
        per_seed = [
            compare_orderings({k: lam_table[k][i] for k in lam_table})["verdict"]
            for i in range(len(cfg.seeds))
        ]
        rows.append(
            ReportRow(
                "spectrum",
                -1,
                majority_verdict(per_seed),
                {"ordering_majority": majority_verdict(per_seed)},
                {},
                0.0,
            )
        )
    return csvs, rows


def _run_approx(cfg):
    specs = activation_list(cfg)
    degree = cfg.get("run", "p", fallback=60, cast=int)
    taus = cfg.get_list("run", "tau_list", fallback=[3.0, 6.0, 9.0])
    eps_list = cfg.get_list("run", "eps_list", fallback=[1e-1, 1e-2, 1e-3])
    csvs, rows = {}, []
    for spec in specs:
        t0 = time.time()
        series = hermite.expand_activation_deriv(spec, degree)
        csvs[f"hermite_{spec.name}.csv"] = (
            ("k", "coeff", "abs_coeff", "sqrt_2k_plus_1"),
            [
                (k, series.coeffs[k], abs(series.coeffs[k]), np.sqrt(2.0 * k + 1.0))
                for k in range(degree + 1)
            ],
        )
        cheb_rows = []
        worst_ratio = 0.0
        for tau in taus:
            for eps in eps_list:
                p = chebyshev.cheb_degree_for_eps(tau, eps)
                approx = chebyshev.cheb_approx(spec.df, tau, p)
                cheb_rows.append((p, approx.sup_error_estimate, p))
                worst_ratio = max(worst_ratio, approx.sup_error_estimate / eps)
        csvs[f"chebyshev_{spec.name}.csv"] = (("degree", "sup_error", "formula_degree"), cheb_rows)
        rows.append(
            ReportRow(
                "approx",
                cfg.seeds[0],
                worst_ratio <= 3.0,
                {f"{spec.name}_worst_sup_over_eps": worst_ratio},
                {"sup_over_eps": 3.0},
                time.time() - t0,
            )
        )
    return csvs, rows


def _run_kill(cfg):
    p_max = cfg.get("run", "p", fallback=3, cast=int)
    m = cfg.get("net", "m", fallback=50, cast=int)
    specs = activation_list(cfg)
    csvs, rows = {}, []
    for seed in cfg.seeds:
        t0 = time.time()
        ds = make_dataset(cfg, seed)
        table = []
        lam_min = None
        for spec in specs:
            net = init_net("dzps", m, ds.dim, seed, spec.name)
            sp = gram.eigen_sym(gram.build_G_finite(ds, net, spec))
            lam_min = sp.lam_min
            for p in range(1, p_max + 1):
                basis = kill.kill_nullspace(ds, p)
                resid = (
                    kill.kill_residual_smooth(ds, net, basis, spec)
                    if basis.dim
                    else float("nan")
                )
                table.append((p, basis.constraint_count, basis.dim, resid))
        csvs[f"kill_seed{seed}.csv"] = (("p", "constraint_count", "nullspace_dim", "residual"), table)
        final_dim = table[-1][2]
        ok = final_dim == 0 or (
            not np.isnan(table[-1][3]) and table[-1][3] ** 2 >= lam_min - 1e-12
        )
        rows.append(
            ReportRow(
                "kill",
                seed,
                bool(ok),
                {"nullspace_dim": final_dim, "lam_min": lam_min, "residual": table[-1][3]},
                {},
                time.time() - t0,
            )
        )
    return csvs, rows


def _train_one(cfg, seed, use_sgd):
    ds = make_dataset(cfg, seed)
    spec = activation_list(cfg)[0]
    m = cfg.get("net", "m", cast=int)
    scheme = cfg.get("net", "scheme", fallback="dzps")
    net = init_net(scheme, m, ds.dim, seed, spec.name)
    G0 = gram.build_G_finite(ds, net, spec)
    sp = gram.eigen_sym(G0)
    eta = cfg.get("run", "eta", fallback=0.0, cast=float)
    if eta <= 0:
        eta = 0.1 * sp.lam_min / (net.c_phi**2 * ds.n**2)
    tc = TrainConfig(
        eta=eta,
        steps=cfg.get("run", "steps", fallback=200, cast=int),
        batch=cfg.get("run", "batch", fallback=0, cast=int) or None if use_sgd else None,
        record_every=cfg.get("run", "record_every", fallback=1, cast=int),
        seed=seed,
    )
    traj = (train_sgd if use_sgd else train_gd)(net, ds, spec, tc)
    movement_condition(traj, spec, ds.n, sp.lam_min)
    from gramscope.network import forward

    u0 = forward(net, ds, spec)
    preds = [
        spectral_predict(sp, u0, ds.y, eta, net.c_phi, int(t)).value for t in traj.steps
    ]
    return ds, net, sp, tc, traj, preds


def _run_train(cfg, use_sgd=None):
    use_sgd = cfg.raw.has_option("run", "batch") if use_sgd is None else use_sgd
    csvs, rows = {}, []
    for seed in cfg.seeds:
        t0 = time.time()
        ds, net, sp, tc, traj, preds = _train_one(cfg, seed, use_sgd)
        norms = traj.residual_norms()
        csvs[f"train_seed{seed}.csv"] = (
            ("step", "loss", "residual_norm", "max_drift", "movement_ok", "predicted_residual"),
            [
                (int(traj.steps[i]), traj.loss[i], norms[i], traj.max_drift[i],
                 bool(traj.movement_ok[i]), preds[i])
                for i in range(len(traj.steps))
            ],
        )
        monotone = bool(np.all(np.diff(traj.loss) <= 1e-12 * max(traj.loss[0], 1.0)))
        rows.append(
            ReportRow(
                "train",
                seed,
                monotone,
                {
                    "loss_ratio": traj.loss[-1] / traj.loss[0],
                    "lam_min": sp.lam_min,
                    "eta": tc.eta,
                    "monotone": monotone,
                },
                {},
                time.time() - t0,
            )
        )
    return csvs, rows


def _run_predict(cfg):
    tol = cfg.get("run", "tolerance", fallback=0.05, cast=float)
    csvs, rows = {}, []
    for seed in cfg.seeds:
        t0 = time.time()
        ds, net, sp, tc, traj, preds = _train_one(cfg, seed, False)
        norms = traj.residual_norms()
        rel = np.abs(np.array(preds) - norms) / np.maximum(norms, 1e-300)
        csvs[f"predict_seed{seed}.csv"] = (
            ("step", "loss", "residual_norm", "max_drift", "movement_ok", "predicted_residual"),
            [
                (int(traj.steps[i]), traj.loss[i], norms[i], traj.max_drift[i],
                 bool(traj.movement_ok[i]), preds[i])
                for i in range(len(traj.steps))
            ],
        )
        rows.append(
            ReportRow(
                "predict",
                seed,
                bool(np.max(rel) <= tol),
                {"max_rel_prediction_error": float(np.max(rel)), "lam_min": sp.lam_min},
                {"rel": tol},
                time.time() - t0,
            )
        )
    return csvs, rows


def _run_depth(cfg):
    spec = activation_list(cfg)[0]
    L = cfg.get("run", "layers", fallback=8, cast=int)
    m = cfg.get("net", "m", cast=int)
    eps_target = cfg.get("run", "eps_target", fallback=0.1, cast=float)
    csvs, rows = {}, []
    series_phi = hermite.expand_activation(spec, 60)
    a = depth.depth_constant_c(series_phi)
    for seed in cfg.seeds:
        t0 = time.time()
        ds = make_dataset(cfg, seed)
        trace = depth.depth_forward(ds, spec, L, m, seed)
        rho0 = trace.max_offdiag(0)
        pred = [rho0]
        for _ in range(L):
            pred.append(depth.correlation_map(series_phi, pred[-1]))
        table = [
            (
                layer,
                float(np.min(trace.norms[layer])),
                float(np.max(trace.norms[layer])),
                trace.max_offdiag(layer),
                pred[layer],
            )
            for layer in range(L + 1)
        ]
        csvs[f"depth_seed{seed}.csv"] = (
            ("layer", "min_norm", "max_norm", "max_offdiag_corr", "predicted_corr"),
            table,
        )
        measured = [trace.max_offdiag(layer) for layer in range(L + 1)]
        hit = next((i for i, v in enumerate(measured) if v < eps_target), None)
        steps_pred, bound = depth.fixed_point_steps(a, rho0, eps_target)
        norm_ok = all(0.9 < r[1] and r[2] < 1.1 for r in table[1:])
        ok = norm_ok and hit is not None and 0.5 * steps_pred <= hit <= 2.0 * steps_pred
        rows.append(
            ReportRow(
                "depth",
                seed,
                bool(ok),
                {
                    "first_layer_below_target": -1 if hit is None else hit,
                    "surrogate_steps": steps_pred,
                    "surrogate_bound": bound,
                    "contraction_a": a,
                    "norms_ok": norm_ok,
                },
                {"eps_target": eps_target},
                time.time() - t0,
            )
        )
    return csvs, rows


def _run_smoothed(cfg):
    sigma = cfg.get("run", "sigma", cast=float)
    order = cfg.get("run", "p", fallback=2, cast=int)
    csvs, rows = {}, []
    table = []
    for seed in cfg.seeds:
        t0 = time.time()
        ds = make_dataset(cfg, seed)
        sm = data.smoothed(ds, sigma, seed)
        lb0, s0 = gram.min_sv_column_distance(gram.khatri_rao_power(ds.X, order))
        lb1, s1 = gram.min_sv_column_distance(gram.khatri_rao_power(sm.X, order))
        table.append((seed, s0, s1, lb0, lb1))
        ok = lb1 <= s1 + 1e-9 and lb0 <= s0 + 1e-9
        rows.append(
            ReportRow(
                "smoothed",
                seed,
                bool(ok),
                {"sigma_min_base": s0, "sigma_min_smoothed": s1,
                 "column_bound_base": lb0, "column_bound_smoothed": lb1},
                {},
                time.time() - t0,
            )
        )
    csvs["smoothed.csv"] = (
        ("seed", "sigma_min_base", "sigma_min_smoothed", "bound_base", "bound_smoothed"),
        table,
    )
    return csvs, rows


def _run_trace(cfg):
    m = cfg.get("net", "m", cast=int)
    specs = activation_list(cfg)
    csvs, rows = {}, []
    table = []
    for seed in cfg.seeds:
        t0 = time.time()
        ds = make_dataset(cfg, seed)
        for spec in specs:
            net = init_net("dzps", m, ds.dim, seed, spec.name)
            ratio = gram.trace_ratio(gram.build_G_finite(ds, net, spec))
            oracle = spec.deriv_second_moment()
            table.append((seed, spec.name, ratio, oracle))
            rows.append(
                ReportRow(
                    "trace",
                    seed,
                    bool(abs(ratio - oracle) <= 0.05 * max(oracle, 1.0)),
                    {f"{spec.name}_trace_ratio": ratio, f"{spec.name}_oracle": oracle},
                    {"rel": 0.05},
                    time.time() - t0,
                )
            )
    csvs["trace.csv"] = (("seed", "activation", "trace_ratio", "oracle"), table)
    return csvs, rows


def _run_multiclass(cfg):
    m = cfg.get("net", "m", cast=int)
    C = cfg.get("run", "classes", fallback=3, cast=int)
    spec = activation_list(cfg)[0]
    tol = cfg.get("run", "tolerance", fallback=5e-3, cast=float)
    csvs, rows = {}, []
    table = []
    series = hermite.expand_activation_deriv(spec, 80)
    for seed in cfg.seeds:
        t0 = time.time()
        ds = make_dataset(cfg, seed)
        net = init_net("dzps", m, ds.dim, seed, spec.name, n_outputs=C)
        Gm = gram.multiclass_G(ds, net, spec).values
        Ginf = gram.build_G_infinite(
            ds, series, 60, diag_moment=spec.deriv_second_moment()
        ).values
        n = ds.n
        off_max, diag_max = 0.0, 0.0
        for q in range(C):
            for qp in range(C):
                block = Gm[q::C, qp::C]
                if q == qp:
                    diag_max = max(diag_max, float(np.max(np.abs(block - Ginf))))
                else:
                    off_max = max(off_max, float(np.max(np.abs(block))))
        table.append((seed, off_max, diag_max))
        rows.append(
            ReportRow(
                "multiclass",
                seed,
                bool(off_max <= tol and diag_max <= tol),
                {"offdiag_block_max": off_max, "diag_block_dev": diag_max},
                {"entry": tol},
                time.time() - t0,
            )
        )
    csvs["multiclass.csv"] = (("seed", "offdiag_block_max", "diag_block_dev"), table)
    return csvs, rows


_RUNNERS = {
    "spectrum": _run_spectrum,
    "approx": _run_approx,
    "kill": _run_kill,
    "train": _run_train,
    "predict": _run_predict,
    "depth": _run_depth,
    "smoothed": _run_smoothed,
    "trace": _run_trace,
    "multiclass": _run_multiclass,
}


def _finish(cfg, csvs, rows):
    """Write CSVs, report and manifest after all seeds completed."""
    os.makedirs(cfg.outdir, exist_ok=True)
    for fname, (header, table) in csvs.items():
        write_csv(os.path.join(cfg.outdir, fname), header, table)
    report = RunReport(rows=rows)
    report.write(os.path.join(cfg.outdir, "report.txt"))
    with open(os.path.join(cfg.outdir, "manifest.txt"), "w", newline="\n") as fh:
        fh.write(f"version = {gramscope.__version__}\n")
        fh.write(f"kernel_backend = {gramscope.KERNEL_BACKEND}\n")
        fh.write(f"experiment = {cfg.name}\n")
        fh.write(f"config_sha256 = {hashlib.sha256(cfg.config_bytes).hexdigest()}\n")
        fh.write(f"seeds = {','.join(str(s) for s in cfg.seeds)}\n")
    return report


def run(cfg):
    """Execute the configured experiment; returns the report."""
    csvs, rows = _RUNNERS[cfg.name](cfg)
    return _finish(cfg, csvs, rows)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="gramscope",
        description="Gram-matrix spectrum experiments for wide shallow networks",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seeds", default=None, help="comma-separated seed list")
    args = parser.parse_args(argv)
    seeds = None
    if args.seeds:
        try:
            seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        except ValueError:
            print(f"error: bad seed list {args.seeds!r}", file=sys.stderr)
            return 2
    try:
        cfg = load_config(args.config, experiment=args.experiment, seeds=seeds, outdir=args.out)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    # worker threads for the seed loop (numerics release the GIL in BLAS)
    threads = int(os.environ.get("GRAMSCOPE_THREADS", "1"))
    try:
        if threads > 1 and len(cfg.seeds) > 1:
            # run per-seed configs concurrently, merge in seed order after the
            # join barrier (per-experiment CSV tables are concatenated)
            def run_single(seed):
                sub = ExperimentConfig(cfg.name, cfg.raw, [seed], cfg.outdir, cfg.config_bytes)
                return _RUNNERS[cfg.name](sub)

            with ThreadPoolExecutor(max_workers=threads) as pool:
                pieces = list(pool.map(run_single, cfg.seeds))
            csvs, rows = {}, []
            for piece_csvs, piece_rows in pieces:
                for fname, (header, table) in piece_csvs.items():
                    if fname in csvs:
                        csvs[fname][1].extend(table)
                    else:
                        csvs[fname] = (header, list(table))
                rows.extend(piece_rows)
            report = _finish(cfg, csvs, rows)
        else:
            report = run(cfg)
    except (ConfigError, data.InfeasibleDatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for row in report.rows:
        status = "pass" if row.status else "FAIL"
        print(f"[{row.experiment} seed={row.seed}] {status}")
    print("overall:", "pass" if report.passed else "FAIL")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
