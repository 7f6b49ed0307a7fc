"""Config-driven experiment runner.

Every subcommand reads a JSON config (strictly validated: unknown keys are
rejected), writes a JSON report embedding the resolved config, its hash, and
the seed, and exits 0 on pass, 1 on a failed assertion, 2 on a config error.
Timestamps live in their own report field so re-runs are byte-identical
everywhere else.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict

from . import attacks, distributions, game, hypotheses, theorems, training
from .errors import AdvGameError, ConfigError

SUBCOMMANDS = (
    "risk", "score", "best-response", "no-nash", "rand-gap", "fig1",
    "train", "bat", "evaluate", "alpha-grid",
)

_GAME_KEYS = {"penalty", "lambda", "epsilon", "norm_kind", "eval"}
_EVAL_KEYS = {"method", "n", "seed"}
_DATA_KEYS = {"n_train", "n_test", "seed", "csv"}
_TRAIN_KEYS = {"mode", "epochs", "batch_size", "lr_stages", "momentum",
               "weight_decay", "seed", "sizes"}
_PGD_KEYS = {"preset", "epsilon_inf", "step", "iters", "restarts", "random_init", "seed"}
_CW_KEYS = {"preset", "lr", "binary_search_steps", "initial_const", "iters",
            "abort_early", "seed"}
_ATTACK_KEYS = {"pgd", "cw", "box", "reject_thresholds", "eval_pgd"}
_BAT_KEYS = {"n", "alpha_bat", "first_candidates", "first_best_aua"}
_TOP_KEYS = {"distribution", "game", "hypothesis", "rounds", "improvement_threshold",
             "alpha_thm", "delta", "oracle", "resolution", "data", "train",
             "attack", "bat", "models", "candidates", "out_dir", "seed"}


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown fields in {where}: {sorted(unknown)}")


def _parse_game(raw: dict) -> game.GameConfig:
    _reject_unknown(raw, _GAME_KEYS, "game")
    ev = raw.get("eval", {})
    _reject_unknown(ev, _EVAL_KEYS, "game.eval")
    return game.GameConfig(
        penalty=raw["penalty"],
        lam=float(raw["lambda"]),
        epsilon=float(raw["epsilon"]),
        norm_kind=raw.get("norm_kind", "l2"),
        eval_method=ev.get("method", "quadrature"),
        mc_n=int(ev.get("n", 10000)),
        mc_seed=int(ev.get("seed", 0)),
    )


def _parse_pgd(raw: dict) -> attacks.PgdConfig:
    _reject_unknown(raw, _PGD_KEYS, "attack.pgd")
    if "preset" in raw:
        base = attacks.ATTACK_PRESETS.get(raw["preset"])
        if not isinstance(base, attacks.PgdConfig):
            raise ConfigError(f"unknown pgd preset {raw['preset']!r}")
        fields = asdict(base)
        fields.update({k: v for k, v in raw.items() if k != "preset"})
        return attacks.PgdConfig(**fields)
    return attacks.PgdConfig(
        epsilon_inf=float(raw["epsilon_inf"]),
        step=float(raw["step"]),
        iters=int(raw["iters"]),
        restarts=int(raw.get("restarts", 1)),
        random_init=bool(raw.get("random_init", True)),
        seed=int(raw.get("seed", 0)),
    )


def _parse_cw(raw: dict) -> attacks.CwConfig:
    _reject_unknown(raw, _CW_KEYS, "attack.cw")
    if "preset" in raw:
        base = attacks.ATTACK_PRESETS.get(raw["preset"])
        if not isinstance(base, attacks.CwConfig):
            raise ConfigError(f"unknown cw preset {raw['preset']!r}")
        fields = asdict(base)
        fields.update({k: v for k, v in raw.items() if k != "preset"})
        return attacks.CwConfig(**fields)
    return attacks.CwConfig(
        lr=float(raw.get("lr", 0.01)),
        binary_search_steps=int(raw.get("binary_search_steps", 9)),
        initial_const=float(raw.get("initial_const", 1e-3)),
        iters=int(raw.get("iters", 100)),
        abort_early=bool(raw.get("abort_early", True)),
        seed=int(raw.get("seed", 0)),
    )


def _parse_train(raw: dict, preset: str | None) -> tuple[str, training.TrainConfig]:
    _reject_unknown(raw, _TRAIN_KEYS, "train")
    mode = raw.get("mode", "natural")
    if mode not in ("natural", "adversarial"):
        raise ConfigError("train.mode must be 'natural' or 'adversarial'")
    sizes = tuple(int(s) for s in raw.get("sizes", (2, 32, 32, 2)))
    base = (training.train_paper_preset(sizes) if preset == "paper"
            else training.train_desk_preset(sizes))
    cfg = training.TrainConfig(
        epochs=int(raw.get("epochs", base.epochs)),
        batch_size=int(raw.get("batch_size", base.batch_size)),
        lr_stages=tuple((int(e), float(lr)) for e, lr in
                        raw.get("lr_stages", base.lr_stages)),
        momentum=float(raw.get("momentum", base.momentum)),
        weight_decay=float(raw.get("weight_decay", base.weight_decay)),
        seed=int(raw.get("seed", base.seed)),
        sizes=sizes,
    )
    return mode, cfg


def _load_data(cfg: dict, spec) -> tuple:
    raw = cfg.get("data", {})
    _reject_unknown(raw, _DATA_KEYS, "data")
    if raw.get("csv"):
        full = distributions.measure_from_csv(raw["csv"])
        n_test = int(raw.get("n_test", 0))
        if n_test:
            train = distributions.EmpiricalMeasure(
                full.points[:-n_test], full.labels[:-n_test], full.seed)
            test = distributions.EmpiricalMeasure(
                full.points[-n_test:], full.labels[-n_test:], full.seed)
            return train, test
        return full, None
    if spec is None:
        raise ConfigError("data needs either a csv path or a distribution")
    seed = int(raw.get("seed", 0))
    train = distributions.sample_labeled(spec, int(raw.get("n_train", 2000)), seed)
    test = distributions.sample_labeled(spec, int(raw.get("n_test", 1000)), seed + 1)
    return train, test


def _box(cfg: dict):
    raw = cfg.get("attack", {})
    box = raw.get("box", [0.0, 1.0])
    return None if box is None else (float(box[0]), float(box[1]))


def _config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _emit(out_dir: str, name: str, subcommand: str, resolved: dict,
          results: dict, passed: bool) -> str:
    os.makedirs(out_dir, exist_ok=True)
    report = {
        "subcommand": subcommand,
        "config": resolved,
        "config_hash": _config_hash(resolved),
        "seed": resolved.get("seed", 0),
        "results": results,
        "passed": passed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _spec_of(cfg: dict):
    if "distribution" not in cfg:
        return None
    return distributions.spec_from_dict(cfg["distribution"])


def _hypothesis_of(cfg: dict, spec):
    if "hypothesis" in cfg:
        return hypotheses.hypothesis_from_dict(cfg["hypothesis"])
    if spec is not None:
        return hypotheses.Threshold(0.0)
    raise ConfigError("this subcommand needs a 'hypothesis' or a 'distribution'")


# ---------------------------------------------------------------------------
# Subcommand handlers: return (results dict, passed flag, extra artifact paths)
# ---------------------------------------------------------------------------

def _run_risk(cfg, out_dir, preset):
    spec = _spec_of(cfg)
    gc = _parse_game(cfg["game"])
    h = _hypothesis_of(cfg, spec)
    value = game.risk(h, spec, gc)
    return {"risk": value}, True, []


def _run_score(cfg, out_dir, preset):
    spec = _spec_of(cfg)
    gc = _parse_game(cfg["game"])
    h = _hypothesis_of(cfg, spec)
    attack = game.best_response_attack(h, spec, gc)
    rep = game.adversarial_score(h, attack, spec, gc)
    return {"score": asdict(rep)}, True, []


def _run_best_response(cfg, out_dir, preset):
    spec = _spec_of(cfg)
    gc = _parse_game(cfg["game"])
    h = _hypothesis_of(cfg, spec)
    attack = game.best_response_attack(h, spec, gc)
    rep = game.adversarial_score(h, attack, spec, gc)
    defender = game.best_response_defender(attack, spec, gc)
    rep_def = game.adversarial_score(defender, attack, spec, gc)
    results = {
        "attack_kind": attack.kind,
        "attacker_score": asdict(rep),
        "defender": hypotheses.hypothesis_to_dict(defender),
        "defender_score": asdict(rep_def),
    }
    if isinstance(attack, game.ZoneAttack1D):
        results["zones"] = {
            "pos": [list(p) for p in attack.pieces(1)],
            "neg": [list(p) for p in attack.pieces(-1)],
        }
    return results, True, []


def _run_no_nash(cfg, out_dir, preset):
    spec = _spec_of(cfg)
    gc = _parse_game(cfg["game"])
    rep = theorems.verify_no_pure_nash(
        spec, gc,
        rounds=int(cfg.get("rounds", 5)),
        threshold=float(cfg.get("improvement_threshold", 1e-6)),
    )
    return rep.to_dict(), rep.passed, []


def _run_rand_gap(cfg, out_dir, preset):
    spec = _spec_of(cfg)
    gc = _parse_game(cfg["game"])
    h1 = _hypothesis_of(cfg, spec)
    oracle = cfg.get("oracle", {})
    _reject_unknown(oracle, {"inner", "per_piece", "enabled"}, "oracle")
    rep = theorems.randomization_gap(
        h1, spec, gc,
        alpha_thm=float(cfg["alpha_thm"]),
        delta=None if cfg.get("delta") is None else float(cfg["delta"]),
        run_oracle=bool(oracle.get("enabled", True)),
        oracle_inner=int(oracle.get("inner", 1025)),
        oracle_per_piece=int(oracle.get("per_piece", 256)),
        threshold=float(cfg.get("improvement_threshold", 1e-6)),
    )
    return rep.to_dict(), rep.passed, []


def _run_fig1(cfg, out_dir, preset):
    spec = _spec_of(cfg)
    gc = _parse_game(cfg["game"])
    paths = theorems.fig1_export(spec, gc, out_dir,
                                 resolution=int(cfg.get("resolution", 2001)))
    return {"files": [os.path.basename(p) for p in paths]}, True, paths


def _run_train(cfg, out_dir, preset):
    spec = _spec_of(cfg)
    mode, tc = _parse_train(cfg.get("train", {}), preset)
    attack_raw = cfg.get("attack", {})
    _reject_unknown(attack_raw, _ATTACK_KEYS, "attack")
    box = _box(cfg)
    data, test = _load_data(cfg, spec)
    eval_pgd = _parse_pgd(attack_raw["eval_pgd"]) if "eval_pgd" in attack_raw else None
    if mode == "adversarial":
        pgd = _parse_pgd(attack_raw.get("pgd", {"preset": "pgd_train_paper"}))
        model, trace = training.train_adversarial(
            data, tc, pgd, eval_set=test, eval_attack=eval_pgd, box=box)
    else:
        model, trace = training.train_natural(
            data, tc, eval_set=test, eval_attack=eval_pgd, box=box)
    os.makedirs(out_dir, exist_ok=True)
    ckpt = os.path.join(out_dir, "model.json")
    with open(ckpt, "w") as fh:
        json.dump(hypotheses.hypothesis_to_dict(hypotheses.Mlp(model)), fh)
    trace_path = os.path.join(out_dir, "trace.csv")
    training.trace_to_csv(trace, trace_path)
    results = {
        "mode": mode,
        "final_train_acc": trace[-1].train_acc if trace else None,
        "checkpoint": "model.json",
        "trace": "trace.csv",
    }
    if test is not None:
        results["test_acc"] = attacks.accuracy(hypotheses.Mlp(model),
                                               test.points, test.labels)
    return results, True, [ckpt, trace_path]


def _run_bat(cfg, out_dir, preset):
    spec = _spec_of(cfg)
    _, tc = _parse_train(cfg.get("train", {}), preset)
    attack_raw = cfg.get("attack", {})
    _reject_unknown(attack_raw, _ATTACK_KEYS, "attack")
    bat_raw = cfg.get("bat", {})
    _reject_unknown(bat_raw, _BAT_KEYS, "bat")
    box = _box(cfg)
    data, test = _load_data(cfg, spec)
    pgd = _parse_pgd(attack_raw.get("pgd", {"preset": "pgd_train_paper"}))
    mixture = training.bat(
        data,
        n=int(bat_raw.get("n", 2)),
        alpha_bat=float(bat_raw.get("alpha_bat", 0.2)),
        cfg=tc,
        attack_cfg=pgd,
        box=box,
        first_candidates=int(bat_raw.get("first_candidates", 1)),
        first_best_aua=bool(bat_raw.get("first_best_aua", True)),
        eval_set=test,
    )
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "mixture.json")
    with open(path, "w") as fh:
        json.dump(hypotheses.mixture_to_dict(mixture), fh)
    results = {"weights": list(mixture.weights), "mixture": "mixture.json"}
    if test is not None:
        results["test_acc"] = attacks.accuracy(mixture, test.points, test.labels)
    return results, True, [path]


def _load_model(path):
    with open(path) as fh:
        raw = json.load(fh)
    if "weights" in raw and "hypotheses" in raw:
        return hypotheses.mixture_from_dict(raw)
    return hypotheses.hypothesis_from_dict(raw)


def _run_evaluate(cfg, out_dir, preset):
    spec = _spec_of(cfg)
    attack_raw = cfg.get("attack", {})
    _reject_unknown(attack_raw, _ATTACK_KEYS, "attack")
    box = _box(cfg)
    _, test = _load_data(cfg, spec)
    if test is None:
        raise ConfigError("evaluate needs test data (data.n_test or a csv)")
    pgd = _parse_pgd(attack_raw.get("pgd", {"preset": "pgd_paper"}))
    cw = _parse_cw(attack_raw.get("cw", {"preset": "cw_paper"}))
    thresholds = [float(v) for v in
                  attack_raw.get("reject_thresholds", attacks.CW_REJECT_THRESHOLDS)]
    models = cfg.get("models")
    if not models:
        raise ConfigError("evaluate needs a 'models' list of {name, path}")
    rows = []
    for entry in models:
        _reject_unknown(entry, {"name", "path"}, "models[]")
        model = _load_model(entry["path"])
        row = {
            "name": entry["name"],
            "natural_acc": attacks.accuracy(model, test.points, test.labels),
            "pgd_acc": attacks.accuracy_under_pgd(model, test.points, test.labels,
                                                  pgd, box),
        }
        cw_accs = attacks.accuracy_under_cw(model, test.points, test.labels, cw,
                                            box, thresholds)
        for eps2, acc in cw_accs.items():
            row[f"cw_acc_eps{eps2:g}"] = acc
        rows.append(row)
    os.makedirs(out_dir, exist_ok=True)
    table = os.path.join(out_dir, "evaluation.csv")
    with open(table, "w") as fh:
        cols = list(rows[0].keys())
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in cols) + "\n")
    return {"rows": rows, "table": "evaluation.csv"}, True, [table]


def _run_alpha_grid(cfg, out_dir, preset):
    spec = _spec_of(cfg)
    attack_raw = cfg.get("attack", {})
    _reject_unknown(attack_raw, _ATTACK_KEYS, "attack")
    box = _box(cfg)
    _, test = _load_data(cfg, spec)
    models = cfg.get("models")
    if not models or len(models) != 2:
        raise ConfigError("alpha-grid needs exactly two entries in 'models'")
    h1 = _load_model(models[0]["path"])
    h2 = _load_model(models[1]["path"])
    pgd = _parse_pgd(attack_raw.get("pgd", {"preset": "pgd_paper"}))
    candidates = cfg.get("candidates", [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    best, table = training.grid_search_alpha(h1, h2, test, candidates, pgd, box=box)
    return {"alpha": best, "table": [[a, acc] for a, acc in table]}, True, []


_HANDLERS = {
    "risk": _run_risk,
    "score": _run_score,
    "best-response": _run_best_response,
    "no-nash": _run_no_nash,
    "rand-gap": _run_rand_gap,
    "fig1": _run_fig1,
    "train": _run_train,
    "bat": _run_bat,
    "evaluate": _run_evaluate,
    "alpha-grid": _run_alpha_grid,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="advgame",
        description="Adversarial zero-sum game experiments: theorem checks, "
                    "attacks, training, and evaluation.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="path to a JSON config")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    parser.add_argument("--preset", choices=("paper", "desk"), default="desk",
                        help="training/attack hyperparameter preset family")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a JSON object")
        _reject_unknown(cfg, _TOP_KEYS, "config")
        if args.seed is not None:
            cfg["seed"] = args.seed
            cfg.setdefault("data", {})["seed"] = args.seed
        cfg.setdefault("seed", 0)
        out_dir = args.out or cfg.get("out_dir", "out")
        results, passed, artifacts = _HANDLERS[args.subcommand](cfg, out_dir, args.preset)
    except (ConfigError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        detail = exc.args[0] if exc.args else exc
        print(f"config error: {detail}", file=sys.stderr)
        return 2
    except AdvGameError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    name = f"{args.subcommand.replace('-', '_')}_report.json"
    path = _emit(out_dir, name, args.subcommand, cfg, results, passed)
    print(json.dumps({"resolved_config": cfg, "report": path,
                      "passed": passed}, indent=2, sort_keys=True))
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
