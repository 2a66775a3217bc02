"""Verification campaigns and the harnack-verify command line.

Each campaign exercises one capability end to end and writes a JSON
report plus full-precision CSV artifacts into the output directory.
Reports are deterministic for a fixed seed and configuration modulo the
timestamp field.

Exit codes: 0 all checks passed, 1 a numeric check failed, 2 usage
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import closed_forms, control_cost, gaussian_kernel, kinetic_pde
from . import riccati_engine as ric

CAMPAIGNS = (
    "riccati",
    "closed-form",
    "kernel-sharpness",
    "pde-harnack",
    "control-cost",
    "harnack-integrated",
    "errata",
)


@dataclass
class CampaignConfig:
    """Resolved configuration for one campaign run."""

    name: str
    params: dict
    out_dir: str
    seed: int
    jobs: int


DEFAULTS = {
    "riccati": {
        "k1": 1.0,
        "k2": 2.0,
        "n": 1,
        "t_end": 2.0,
        "tol": 1e-10,
        "n_eval": 21,
    },
    "closed-form": {
        "pairs": [[1.0, 2.0], [2.0, 2.0], [1.0, 0.5], [0.0, 1.0], [0.0, 0.0]],
        "t_lo": 0.1,
        "t_hi": 2.0,
        "n_t": 20,
        "rel_tol": 1e-6,
    },
    "kernel-sharpness": {"n": 1, "t_lo": 0.1, "t_hi": 2.0, "n_t": 20, "tol": 1e-8},
    "pde-harnack": {
        "potential": "quadratic_v",
        "t0": 0.2,
        "t1": 0.6,
        "n_grid": 128,
        "extent": 4.0,
        "sigma2": 1.0,
        "scheme": "lie",
        "tolerance": 0.1,
        "region": [-2.0, 2.0, -2.0, 2.0],
    },
    # m = 32 keeps the piecewise-constant optimum within rel_tol of the
    # continuous energy: the discretization excess is O(1/m^2) and crosses
    # 1e-3 between m = 24 and m = 32.
    "control-cost": {"s": 0.0, "t": 1.0, "n_pairs": 20, "m": 32, "box": 2.0,
                     "rel_tol": 1e-3},
    "harnack-integrated": {"s": 1.0, "t": 2.0, "n_pairs": 1000, "box": 3.0},
    "errata": {"t_grid": [0.5, 1.0, 2.0]},
}

POTENTIALS = {
    "zero": kinetic_pde.ZeroPotential,
    "quadratic_v": lambda: kinetic_pde.QuadraticPotential(q_vv=1.0),
    "bilinear": lambda: kinetic_pde.QuadraticPotential(q_xv=1.0),
}


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _campaign_riccati(cfg):
    p = cfg.params
    K = ric.CurvatureBound(k1=p["k1"], k2=p["k2"], n=int(p["n"]))
    times = np.linspace(p["t_end"] / p["n_eval"], p["t_end"], int(p["n_eval"]))
    traj = ric.integrate_S(K, p["t_end"], tol=p["tol"], eval_times=times)
    csv_path = _write(
        os.path.join(cfg.out_dir, "riccati_trajectory.csv"),
        ric.trajectory_to_csv(traj),
    )
    max_eig = max(S.max_eigenvalue() for t, S in traj if t > 0)
    defect = ric.residual_defect(K, traj[:: max(1, len(traj) // 20)])
    expo = ric.exponential_route_residual(K, times)
    dual_gap = 0.0
    for t in times:
        N_int = ric.bound_N(K, float(t), tol=p["tol"]).entries
        N_exp = ric.S_from_M(ric.fundamental_M(K, float(t))).entries
        dual_gap = max(
            dual_gap, float(np.abs(N_int - N_exp).max() / (1 + np.abs(N_exp).max()))
        )
    metrics = {
        "max_eigenvalue_S": max_eig,
        "reintegration_defect": defect,
        "exponential_route_residual": expo,
        "dual_route_gap": dual_gap,
    }
    passed = max_eig <= 1e-8 and dual_gap <= 1e-7
    return metrics, [csv_path], passed


def _campaign_closed_form(cfg):
    p = cfg.params
    times = np.linspace(p["t_lo"], p["t_hi"], int(p["n_t"]))
    worst = 0.0
    lines = ["regime,k1,k2,t,entry,closed_form,oracle,rel_err"]
    for k1, k2 in p["pairs"]:
        K = ric.CurvatureBound(k1=k1, k2=k2, n=1)
        for t in times:
            sf = closed_forms.eval_sfuncs(k1, k2, float(t))
            N_cf = closed_forms.assemble_bound(sf, n=1).entries
            N_or = ric.S_from_M(ric.fundamental_M(K, float(t))).entries
            scale = float(np.abs(N_or).max())
            for lbl, (i, j) in (("xx", (0, 0)), ("xv", (0, 1)), ("vv", (1, 1))):
                rel = abs(N_cf[i, j] - N_or[i, j]) / scale
                worst = max(worst, rel)
                lines.append(
                    f"{sf.regime.tag},{k1!r},{k2!r},{float(t)!r},{lbl},"
                    f"{N_cf[i, j]!r},{N_or[i, j]!r},{rel!r}"
                )
    csv_path = _write(
        os.path.join(cfg.out_dir, "closed_form_agreement.csv"), "\n".join(lines) + "\n"
    )
    metrics = {"worst_relative_error": worst}
    return metrics, [csv_path], worst <= p["rel_tol"]


def _campaign_kernel_sharpness(cfg):
    p = cfg.params
    times = np.linspace(p["t_lo"], p["t_hi"], int(p["n_t"]))
    n = int(p["n"])
    worst = 0.0
    lines = ["t,n,gap"]
    for t in times:
        x0 = np.zeros(n)
        state = gaussian_kernel.kernel_state(x0, x0, float(t))
        gap = gaussian_kernel.sharpness_gap(state)
        worst = max(worst, gap)
        lines.append(f"{float(t)!r},{n},{gap!r}")
    csv_path = _write(
        os.path.join(cfg.out_dir, "kernel_sharpness.csv"), "\n".join(lines) + "\n"
    )
    return {"worst_gap": worst}, [csv_path], worst <= p["tol"]


def _campaign_pde_harnack(cfg):
    p = cfg.params
    pot = POTENTIALS[p["potential"]]()
    field = kinetic_pde.kernel_field(
        p["t0"], extent=p["extent"], n=int(p["n_grid"]), sigma2=p["sigma2"]
    )
    field, evo = kinetic_pde.evolve(field, pot, p["t1"], scheme=p["scheme"])
    region = tuple(p["region"]) if p.get("region") else None
    mrep = kinetic_pde.verify_matrix_harnack(
        field, pot, tolerance=p["tolerance"], region=region
    )
    srep = kinetic_pde.verify_scalar_harnack(
        field, pot, tolerance=p["tolerance"], region=region
    )
    files = [
        _write(os.path.join(cfg.out_dir, "final_field.csv"),
               kinetic_pde.snapshot_csv(field))
    ]
    files.extend(
        kinetic_pde.save_snapshot(field, os.path.join(cfg.out_dir, "final_field"))
    )
    metrics = {
        "matrix_min_margin": mrep.min_margin,
        "matrix_argmin": list(mrep.argmin),
        "scalar_min_margin": srep.min_margin,
        "n_tested": mrep.n_tested,
        "n_untestable": mrep.n_untestable,
        "mass_ledger_discrepancy": evo.ledger_discrepancy,
        "boundary_fraction": field.boundary_fraction,
    }
    return metrics, files, mrep.passed and srep.passed


def _one_cost_pair(args):
    s, t, row, m = args
    x0, v0, x1, v1 = row
    prob = control_cost.ControlProblem.make(s, t, [x0], [v0], [x1], [v1])
    exact = control_cost.energy_cost(prob)
    res = control_cost.transcribe_cost(prob, m=m)
    return exact, res.cost, (s, t, x0, v0, x1, v1)


def _campaign_control_cost(cfg):
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    rows = rng.uniform(-p["box"], p["box"], size=(int(p["n_pairs"]), 4))
    tasks = [(p["s"], p["t"], tuple(map(float, r)), int(p["m"])) for r in rows]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_one_cost_pair, tasks))
    else:
        results = [_one_cost_pair(task) for task in tasks]
    worst = 0.0
    csv_rows = []
    for exact, trans, (s, t, x0, v0, x1, v1) in results:
        gap = abs(trans - exact) / max(1.0, abs(exact))
        worst = max(worst, gap)
        csv_rows.append((s, t, x0, v0, x1, v1, exact, "closed_form", 0, 0.0))
        csv_rows.append((s, t, x0, v0, x1, v1, trans, "transcribe", p["m"], gap))
    csv_path = _write(
        os.path.join(cfg.out_dir, "control_costs.csv"),
        control_cost.cost_csv(csv_rows),
    )
    return {"worst_relative_gap": worst}, [csv_path], worst <= p["rel_tol"]


def _campaign_harnack_integrated(cfg):
    p = cfg.params
    rep = control_cost.verify_harnack_kernel(
        p["s"], p["t"], n_pairs=int(p["n_pairs"]), seed=cfg.seed, box=p["box"]
    )
    metrics = {
        "min_ratio": rep.min_ratio,
        "min_pair": list(rep.min_pair),
        "equality_gap": rep.equality_gap,
    }
    passed = rep.min_ratio >= 1.0 - 1e-6 and rep.equality_gap <= 1e-10
    return metrics, [], passed


def _campaign_errata(cfg):
    p = cfg.params
    rows = []
    for k1, k2 in ((0.0, 0.0), (0.0, 1.0)):
        rows.extend(closed_forms.reconcile(k1, k2, p["t_grid"]))
    csv_path = _write(
        os.path.join(cfg.out_dir, "errata.csv"), closed_forms.errata_csv(rows)
    )
    case5 = [r for r in rows if r.regime == closed_forms.CASE5]
    ok = bool(case5) and all(
        abs(r.ratio - 0.5) < 1e-9 for r in case5 if r.block in ("xx", "xv")
    )
    return {"n_rows": len(rows), "case5_half_ratio": ok}, [csv_path], ok


RUNNERS = {
    "riccati": _campaign_riccati,
    "closed-form": _campaign_closed_form,
    "kernel-sharpness": _campaign_kernel_sharpness,
    "pde-harnack": _campaign_pde_harnack,
    "control-cost": _campaign_control_cost,
    "harnack-integrated": _campaign_harnack_integrated,
    "errata": _campaign_errata,
}


def run_campaign(cfg):
    """Run one campaign; returns the report dict (also written to disk)."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    metrics, files, passed = RUNNERS[cfg.name](cfg)
    report = {
        "campaign": cfg.name,
        "params": cfg.params,
        "seed": cfg.seed,
        "passed": bool(passed),
        "metrics": metrics,
        "artifacts": [os.path.basename(f) for f in files],
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }
    _write(
        os.path.join(cfg.out_dir, f"report_{cfg.name}.json"),
        json.dumps(report, indent=1, sort_keys=True) + "\n",
    )
    return report


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_key(params, campaign, key, value):
    if "." in key:
        scope, bare = key.split(".", 1)
        if scope != campaign:
            return  # entry for another campaign in a shared config
        key = bare
    if key not in params:
        raise KeyError(f"unknown config key {key!r} for campaign {campaign!r}")
    params[key] = value


def parse_cli(argv):
    """Parse arguments into a CampaignConfig."""
    parser = argparse.ArgumentParser(
        prog="harnack-verify",
        description="Verification campaigns for kinetic Harnack bounds.",
    )
    parser.add_argument("campaign", choices=CAMPAIGNS)
    parser.add_argument("--config", help="JSON file of flat (dotted) config keys")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable; dotted keys scope a campaign)",
    )
    parser.add_argument("--out", default="harnack_out", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--jobs",
        type=int,
        default=int(os.environ.get("HARNACK_FORGE_JOBS", "1")),
        help="worker processes for pair sweeps (env HARNACK_FORGE_JOBS)",
    )
    args = parser.parse_args(argv)

    params = dict(DEFAULTS[args.campaign])
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"--config: {exc}")
        if not isinstance(loaded, dict):
            parser.error("--config must contain a JSON object")
        for key, value in loaded.items():
            try:
                _apply_key(params, args.campaign, key, value)
            except KeyError as exc:
                parser.error(str(exc))
    for item in args.set:
        if "=" not in item:
            parser.error(f"--set needs KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        try:
            _apply_key(params, args.campaign, key, _parse_value(value))
        except KeyError as exc:
            parser.error(str(exc))
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    return CampaignConfig(
        name=args.campaign,
        params=params,
        out_dir=args.out,
        seed=args.seed,
        jobs=args.jobs,
    )


def main(argv=None):
    try:
        cfg = parse_cli(argv if argv is not None else sys.argv[1:])
    except SystemExit as exc:  # argparse uses exit code 2 for usage errors
        return int(exc.code) if exc.code is not None else 2
    try:
        report = run_campaign(cfg)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - anything else is internal
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    status = "PASS" if report["passed"] else "FAIL"
    print(f"{cfg.name}: {status}")
    for key, value in report["metrics"].items():
        print(f"  {key} = {value}")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
