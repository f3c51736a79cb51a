"""Command-line surface: ingest gridded curves, run the density pipeline,
small-ball validation, simulation, and the mode-estimation study.

Exit codes: 0 success, 2 input error (unreadable or malformed files, bad
flag values), 3 numeric failure (for example zero total variance, or a
radius the dimension rule cannot resolve).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import artifacts
from .central import mean_curve, median_curve, modal_curve
from .fpca import fit_fpca, variance_explained
from .kde import fit_score_density
from .logdensity import density_product_grid, log_density_from_scores, rank_by_density
from .simulate import SimScenario, generate_sample, run_mode_study, true_score_mode
from .smallball import EigenDecaySpec, ProcessSpec, ScoreLaw, validate_approximation

__all__ = ["AnalysisConfig", "run_analysis", "run_smallball", "main"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


@dataclass
class AnalysisConfig:
    """Pipeline settings; round-trips losslessly through JSON."""

    components: int | None = None  # None: min(n, m, 20)
    r: int = 2
    truncation: int = 2
    kernel: str = "gaussian"
    bandwidth: float | None = None  # None: normal-reference rule
    seed: int = 0
    mc_samples: int = 200_000
    lam: float = 3.0
    out: str = "."
    groups: int = 4

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def save(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "AnalysisConfig":
        with Path(path).open(encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _merge_config(args) -> AnalysisConfig:
    cfg = AnalysisConfig.load(args.config) if args.config else AnalysisConfig()
    for key in cfg.__dataclass_fields__:
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    return cfg


def run_analysis(input_path, config: AnalysisConfig) -> None:
    """Full pipeline: ingest, FPCA, score densities, surrogate density,
    grouping, contour grid and central curves; writes seven artifacts."""
    sample = artifacts.read_curves_csv(input_path)
    if sample.n < 2:
        raise artifacts.CurveFormatError(f"{input_path}: need at least 2 curves, got {sample.n}")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)

    model = fit_fpca(sample, J=config.components)
    variance_explained(model, 1)  # raises on zero total variance
    n_usable = int(np.sum(~model.null_components))
    if config.r > n_usable or config.truncation > n_usable or n_usable < 2:
        raise ValueError(
            f"only {n_usable} usable components; r={config.r}, truncation={config.truncation}"
        )
    densities = [
        fit_score_density(model.scores[:, j], kernel=config.kernel, bandwidth=config.bandwidth)
        for j in range(n_usable)
    ]

    artifacts.write_model_json(out / "model.json", model)
    artifacts.write_scores_csv(out / "scores.csv", model.scores)
    artifacts.write_densities_json(
        out / "densities.json", densities, [d.mode() for d in densities]
    )
    table = []
    for i in range(sample.n):
        for r in range(1, config.r + 1):
            ld = log_density_from_scores(densities, model.scores[i], r)
            table.append((i, r, ld.value, ld.product))
    artifacts.write_logdensity_csv(out / "logdensity.csv", table)
    ranking = rank_by_density(model, densities, config.r, config.groups)
    artifacts.write_groups_csv(out / "groups.csv", ranking.groups, ranking.values)
    artifacts.write_contour_csv(out / "contour.csv", density_product_grid(model, densities))
    med = median_curve(sample)
    artifacts.write_central_csv(
        out / "central.csv",
        sample.grid,
        mean_curve(sample),
        modal_curve(model, densities, config.truncation),
        med.curve,
    )


def _parse_decay(text: str, j_max: int) -> EigenDecaySpec:
    kind, _, param = text.partition(":")
    if kind == "power":
        return EigenDecaySpec.power(float(param), j_max)
    if kind == "geometric":
        return EigenDecaySpec.geometric(float(param), j_max)
    if kind == "gaussian":
        return EigenDecaySpec.gaussian_like(float(param), j_max)
    if kind == "explicit":
        return EigenDecaySpec.explicit([float(v) for v in param.split("/")])
    raise artifacts.CurveFormatError(
        f"unknown decay {text!r}; use power:A, geometric:RHO, gaussian:C or explicit:V1/V2/..."
    )


def _parse_law(name: str) -> ScoreLaw:
    if name == "gaussian":
        return ScoreLaw.gaussian()
    if name.startswith("chi2"):
        df = int(name[4:] or 8)
        return ScoreLaw.standardized_chi2(df)
    raise artifacts.CurveFormatError(f"unknown score law {name!r}; use gaussian or chi2[<df>]")


def run_smallball(args) -> None:
    decay = _parse_decay(args.decay, args.jmax)
    law = _parse_law(args.score_law)
    centers = np.array([float(v) for v in args.center.split(",")]) if args.center else np.zeros(0)
    spec = ProcessSpec(decay=decay, score_law=law, center_scores=centers)
    radii = [float(v) for v in args.radii.split(",") if v.strip()] if args.radii else []
    reports = validate_approximation(
        spec,
        radii,
        lam=args.lam if args.lam is not None else 3.0,
        n_mc=args.mc_samples if args.mc_samples is not None else 200_000,
        seed=args.seed if args.seed is not None else 0,
        tail_n_mc=args.tail_samples,
    )
    out = Path(args.out if args.out is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_smallball_csv(out / "smallball.csv", reports)


def _cmd_fpca(args) -> None:
    sample = artifacts.read_curves_csv(args.input)
    if sample.n < 2:
        raise artifacts.CurveFormatError(f"{args.input}: need at least 2 curves, got {sample.n}")
    model = fit_fpca(sample, J=args.components)
    variance_explained(model, 1)
    out = Path(args.out if args.out is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_model_json(out / "model.json", model)
    artifacts.write_scores_csv(out / "scores.csv", model.scores)


def _cmd_simulate(args) -> None:
    sc = SimScenario(
        model_id=args.model,
        n=args.n,
        m=args.m,
        seed=args.seed if args.seed is not None else 0,
    )
    sample, truth = generate_sample(sc)
    out = Path(args.out if args.out is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_curves_csv(out / "curves.csv", sample)
    with (out / "truth.json").open("w", encoding="utf-8") as fh:
        json.dump(
            {
                "model": args.model,
                "eigenvalues": [float(v) for v in truth.eigenvalues],
                "c": truth.c,
                "score_mode": true_score_mode(args.model),
            },
            fh,
            sort_keys=True,
            indent=1,
        )
        fh.write("\n")


def _cmd_mode_study(args) -> None:
    rows = run_mode_study(
        model_ids=[m.strip() for m in args.models.split(",")],
        B=args.replications,
        n=args.n,
        T_list=[int(t) for t in args.truncations.split(",")],
        estimators=tuple(e.strip() for e in args.estimators.split(",")),
        seed=args.seed if args.seed is not None else 0,
    )
    out = Path(args.out if args.out is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_imse_csv(out / "imse.csv", rows)
    with (out / "imse.json").open("w", encoding="utf-8") as fh:
        json.dump(
            [
                {"model": r.model_id, "estimator": r.estimator, "T": r.T, "imse": r.imse}
                for r in rows
            ],
            fh,
            sort_keys=True,
            indent=1,
        )
        fh.write("\n")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="funcdens", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output directory")

    fp = sub.add_parser("fpca", parents=[common], help="fit FPCA, write model.json and scores.csv")
    fp.add_argument("input")
    fp.add_argument("--components", type=int, default=None)
    fp.set_defaults(func=_cmd_fpca)

    an = sub.add_parser("analyze", parents=[common], help="full pipeline on a curve CSV")
    an.add_argument("input")
    an.add_argument("--config", default=None, help="JSON config; flags override its keys")
    an.add_argument("--components", type=int, default=None)
    an.add_argument("--r", type=int, default=None, help="log-density resolutions 1..r")
    an.add_argument("--truncation", type=int, default=None, help="T for the modal curve")
    an.add_argument("--kernel", choices=["gaussian", "epanechnikov"], default=None)
    an.add_argument("--bandwidth", type=float, default=None)
    an.add_argument("--mc-samples", dest="mc_samples", type=int, default=None)
    an.add_argument("--lambda", dest="lam", type=float, default=None)
    an.add_argument("--groups", type=int, default=None)
    an.set_defaults(func=lambda a: run_analysis(a.input, _merge_config(a)))

    sb = sub.add_parser("smallball", parents=[common], help="Monte Carlo vs q(h) report")
    sb.add_argument("--decay", required=True, help="power:A | geometric:RHO | gaussian:C | explicit:V1/V2/...")
    sb.add_argument("--radii", default="", help="comma-separated decreasing radii")
    sb.add_argument("--score-law", dest="score_law", default="gaussian")
    sb.add_argument("--center", default="", help="comma-separated center scores")
    sb.add_argument("--jmax", type=int, default=200)
    sb.add_argument("--lambda", dest="lam", type=float, default=None)
    sb.add_argument("--mc-samples", dest="mc_samples", type=int, default=None)
    sb.add_argument("--tail-samples", dest="tail_samples", type=int, default=100_000)
    sb.set_defaults(func=run_smallball)

    si = sub.add_parser("simulate", parents=[common], help="draw a synthetic curve sample")
    si.add_argument("--model", required=True, choices=["i", "ii", "iii", "iv"])
    si.add_argument("--n", type=int, required=True)
    si.add_argument("--m", type=int, default=201)
    si.set_defaults(func=_cmd_simulate)

    ms = sub.add_parser("mode-study", parents=[common], help="IMSE study of modal estimators")
    ms.add_argument("--models", default="i,ii,iii,iv")
    ms.add_argument("--replications", type=int, default=100)
    ms.add_argument("--n", type=int, default=100)
    ms.add_argument("--truncations", default="1,2,3,4")
    ms.add_argument("--estimators", default="univariate,multivariate")
    ms.set_defaults(func=_cmd_mode_study)

    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (artifacts.CurveFormatError, OSError, json.JSONDecodeError) as exc:
        print(f"funcdens: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, ArithmeticError) as exc:
        print(f"funcdens: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
