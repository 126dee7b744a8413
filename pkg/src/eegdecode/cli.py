"""Command-line front end.

Every subcommand reads one JSON config (``--config``) merged over the
defaults below, applies ``--set section.key=value`` overrides, and writes
plot-ready CSV/JSON plus ``run_meta.json`` to ``--out``.  Outputs depend
only on the config and seed, never on ``--threads``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import cluster as cluster_mod
from . import mvpa, stats, subject_clf, synth
from .dataset import Dataset, load_dataset, validate
from .errors import ConfigError, DataError
from .grouping import TABLE1_ROWS, Condition, GroupingSpec
from .logreg import FitConfig
from .prep import PrepConfig

log = logging.getLogger("eegdecode")

COMMANDS = ("synth", "decode", "classify", "transfer", "ablate", "behavioral", "correlate", "validate")

DEFAULTS = {
    "dataset": None,
    "seed": 0,
    "prep": {"baseline_window_ms": [-200.0, 0.0], "target_rate_hz": None,
             "mvpa_window_ms": 10.0, "mvpa_stride_ms": None},
    "condition": {"category": "all", "trial_type": "single", "rt_fraction": 0.25, "value": None},
    "classes": [["C"], ["D", "S"]],
    "decode": {"n_seeds": 10, "score": "decision"},
    "fit": {"lam": 0.1, "max_iter": 2000, "tol": 1e-7, "standardize": True,
            "init_jitter": 0.0, "oversample": False},
    "cluster": {"n_perm": 1000, "alpha": 0.05, "cluster_threshold_p": 0.01, "min_cluster_ms": 40.0},
    "bootstrap": {"n_boot": 200, "trials_per_boot": 20, "cv": "five_fold_stratified_gender",
                  "n_folds": 5, "oversample_minority": True, "target_label": "group",
                  "target_rate_hz": 200.0, "val_fraction": 0.2, "decision_threshold": 0.5},
    "classifier": {"kind": "sparse_logreg", "hyperparams": {}},
    "classify": {"rows": "table1", "tasks": {"C vs DS": [["C"], ["D", "S"]], "D vs S": [["D"], ["S"]]},
                 "n_ci_boot": 1000, "n_perm": 1000},
    "transfer": {"train_classes": [["C"], ["D"]], "test_groups": ["S"]},
    "ablate": {"kind": "grid", "method": "classify",
               "time_ends_ms": list(mvpa.TIME_ENDS_MS), "regions": list(mvpa.REGIONS),
               "axis": "trials_train_test", "fractions": [1.0, 0.5, 0.25],
               "n_values": [100, 200, 400, 1000], "b_values": [5, 10, 20, 40],
               "n_ci_boot": 1000, "n_perm": 1000},
    "behavioral": {"lam": 0.1},
    "correlate": {"probabilities": None, "condition": None, "trial_type": None, "task": None,
                  "questionnaires": ["phq9_screen", "phq9_dayof", "sis", "gad7"], "n_perm": 1000},
    "synth": {"preset": "calibration", "snr": "strong", "n_per_group": 20, "n_trials": 40,
              "sample_rate_hz": 200.0, "groups": ["C", "D"], "config": None},
}


class InternalError(Exception):
    pass


# ---------------------------------------------------------------------------
# config handling


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config field {where!r}")
        if isinstance(base[key], dict) and key not in ("tasks", "hyperparams", "config"):
            if not isinstance(value, dict):
                raise ConfigError(f"config field {where!r} must be an object")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_set(cfg: dict, assignment: str) -> None:
    key, sep, raw = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(f"--set expects KEY=VALUE, got {assignment!r}")
    parts = key.split(".")
    node = cfg
    for i, part in enumerate(parts):
        where = ".".join(parts[: i + 1])
        last = i == len(parts) - 1
        if not isinstance(node, dict) or (part not in node and not _free_form(parts[:i])):
            raise ConfigError(f"unknown config field {where!r}")
        if last:
            node[part] = _parse_value(raw)
        else:
            if node.get(part) is None and _free_form(parts[: i + 1]):
                node[part] = {}
            node = node[part]


def _free_form(parts) -> bool:
    return bool(parts) and parts[-1] in ("tasks", "hyperparams", "config")


def load_config(path, sets=(), seed=None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} not found")
        try:
            user = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from None
        if not isinstance(user, dict):
            raise ConfigError(f"{p}: top level must be an object")
        cfg = _merge(cfg, user)
    for s in sets:
        _apply_set(cfg, s)
    if seed is not None:
        cfg["seed"] = seed
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {cfg['seed']!r}")
    return cfg


def _build(cls, section: str, values: dict, **extra):
    try:
        return cls(**values, **extra)
    except TypeError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def _prep(cfg) -> PrepConfig:
    d = dict(cfg["prep"])
    d["baseline_window_ms"] = tuple(d["baseline_window_ms"])
    return _build(PrepConfig, "prep", d)


def _fit(cfg) -> FitConfig:
    return _build(FitConfig, "fit", cfg["fit"], rng_seed=cfg["seed"])


def _cluster_cfg(cfg) -> cluster_mod.ClusterConfig:
    return _build(cluster_mod.ClusterConfig, "cluster", cfg["cluster"], rng_seed=cfg["seed"])


def _boot(cfg) -> subject_clf.BootstrapConfig:
    return _build(subject_clf.BootstrapConfig, "bootstrap", cfg["bootstrap"], rng_seed=cfg["seed"])


def _classifier(cfg) -> subject_clf.ClassifierSpec:
    c = cfg["classifier"]
    return _build(subject_clf.ClassifierSpec, "classifier",
                  {"kind": c.get("kind"), "hyperparams": tuple((c.get("hyperparams") or {}).items())})


def _classes(value, field: str):
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(s, list) for s in value)):
        raise ConfigError(f"{field} must be [[negative groups], [positive groups]]")
    return (tuple(value[0]), tuple(value[1]))


def _condition(cfg, section: dict | None = None) -> Condition | None:
    c = cfg["condition"] if section is None else section
    category, trial_type = c.get("category"), c.get("trial_type", "single")
    if category == "all" and trial_type == "single":
        return None
    if trial_type == "contrast":
        return Condition(_build(GroupingSpec, "condition",
                                dict(category=category, side="a", rt_fraction=c.get("rt_fraction", 0.25),
                                     rng_seed=cfg["seed"])),
                         _build(GroupingSpec, "condition",
                                dict(category=category, side="b", rt_fraction=c.get("rt_fraction", 0.25),
                                     rng_seed=cfg["seed"])))
    return Condition(_build(GroupingSpec, "condition",
                            dict(category=category, side=trial_type, rt_fraction=c.get("rt_fraction", 0.25),
                                 rng_seed=cfg["seed"], value=c.get("value"))))


def _dataset(cfg) -> Dataset:
    path = cfg["dataset"]
    if not path:
        raise ConfigError("no dataset given (set 'dataset' in the config or use --dataset)")
    if not Path(path).is_dir():
        raise ConfigError(f"dataset directory {path} not found")
    return load_dataset(path)


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return "" if v is None else str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _run_meta(out: Path, command: str, cfg: dict) -> None:
    write_json(out / "run_meta.json", {"command": command, "config": cfg, "seed": cfg["seed"],
                                       "tool": "eegdecode", "version": __version__})


def _write_excluded(out: Path, excluded) -> None:
    write_csv(out / "excluded.csv", ["unit", "reason"], sorted(excluded))


# ---------------------------------------------------------------------------
# commands


def cmd_synth(cfg, out: Path, threads: int) -> None:
    s = cfg["synth"]
    if s["config"] is not None:
        sc = synth.SynthConfig.from_dict({**s["config"], "rng_seed": cfg["seed"]})
    elif s["preset"] == "paper":
        sc = synth.paper_shaped_preset(cfg["seed"])
    elif s["preset"] == "calibration":
        sc = synth.calibration_preset(s["snr"], cfg["seed"], int(s["n_per_group"]),
                                      int(s["n_trials"]), float(s["sample_rate_hz"]),
                                      tuple(s["groups"]))
    else:
        raise ConfigError(f"synth.preset must be 'paper' or 'calibration', got {s['preset']!r}")
    n = synth.write_synthetic(sc, out)
    write_json(out / "synth_config.json", sc.to_dict())
    log.info("wrote %d subjects to %s", n, out)


def cmd_validate(cfg, out: Path, threads: int) -> None:
    path = cfg["dataset"]
    if not path or not Path(path).is_dir():
        raise ConfigError(f"dataset directory {path} not found")
    ds = load_dataset(path)
    problems = validate(ds)
    write_csv(out / "violations.csv", ["subject_id", "trial", "field", "message"],
              [(v.subject_id, v.trial_index, v.field, v.message) for v in problems])
    if problems:
        raise DataError(f"{len(problems)} validation violation(s); see violations.csv")


def cmd_decode(cfg, out: Path, threads: int) -> None:
    ds = _dataset(cfg)
    classes = _classes(cfg["classes"], "classes")
    excluded: list = []
    erps = mvpa.build_erps(ds, _condition(cfg), _prep(cfg), excluded)
    labels = mvpa.group_labels(ds, positive=classes[1], negative=classes[0])
    labels = {k: v for k, v in labels.items() if k in erps}
    n_seeds = int(cfg["decode"]["n_seeds"])
    if n_seeds < 1:
        raise ConfigError("decode.n_seeds must be >= 1")
    seeds = [cfg["seed"] + i for i in range(n_seeds)]
    dts = mvpa.decode_timecourse(erps, labels, seeds, _fit(cfg), threads, cfg["decode"]["score"],
                                 channels=ds.layout.names)
    res = cluster_mod.cluster_test(dts.auc_per_seed, _cluster_cfg(cfg), dts.timepoints_ms)
    write_csv(out / "decoding.csv", ["timepoint_ms", "seed", "auc"], dts.rows())
    write_csv(out / "cluster_pointwise.csv", ["timepoint_ms", "observed", "p"],
              zip(dts.timepoints_ms, res.observed + 0.5, res.pointwise_p))
    write_json(out / "cluster.json", res.to_dict())
    largest = res.largest_significant()
    rows = []
    if largest is not None:
        mask = np.zeros(dts.timepoints_ms.size, dtype=bool)
        mask[largest.start_index:largest.stop_index] = True
        imp = mvpa.channel_importance(dts, mask)
        rows = list(zip(ds.layout.names, imp.proportion))
    write_csv(out / "importance.csv", ["channel", "proportion"], rows)
    _write_excluded(out, excluded)
    write_json(out / "summary.json", {
        "lambda": dts.lam, "score": dts.score, "seeds": list(dts.seeds),
        "n_subjects": len(dts.subject_ids), "positive_class": list(classes[1]),
        "negative_class": list(classes[0]), "peak_mean_auc": float(dts.mean_auc.max()),
        "largest_cluster": None if largest is None else largest.to_dict(),
    })


def _table_rows(spec):
    if spec == "table1":
        return TABLE1_ROWS
    if not isinstance(spec, list) or not spec:
        raise ConfigError("classify.rows must be 'table1' or a non-empty list of [category, trial_type]")
    by_key = {(r[2], r[3]): r for r in TABLE1_ROWS}
    rows = []
    for item in spec:
        if not (isinstance(item, list) and len(item) == 2):
            raise ConfigError(f"classify.rows entry {item!r} must be [category, trial_type]")
        key = tuple(item)
        rows.append(by_key.get(key, (key[0], key[1], key[0], key[1])))
    return tuple(rows)


def _tasks(spec) -> dict:
    if not isinstance(spec, dict) or not spec:
        raise ConfigError("classify.tasks must be a non-empty object")
    return {name: _classes(v, f"classify.tasks.{name}") for name, v in spec.items()}


def cmd_classify(cfg, out: Path, threads: int) -> None:
    ds = _dataset(cfg)
    c = cfg["classify"]
    rows = _table_rows(c["rows"])
    tasks = _tasks(c["tasks"])
    clf, boot = _classifier(cfg), _boot(cfg)
    long_rows, wide, probs, excluded = [], {}, [], []
    for block, trial_type, category, side in rows:
        cond = subject_clf.condition_for(category, side, rng_seed=cfg["seed"])
        for task, classes in tasks.items():
            res = subject_clf.run_subject_classification(ds, cond, classes, clf, boot, threads)
            ci = res.with_ci(int(c["n_ci_boot"]), int(c["n_perm"]), cfg["seed"])
            long_rows.append((block, trial_type, task, ci.auc, ci.ci_lo, ci.ci_hi, ci.p_vs_chance,
                              ci.stars(), len(res.probabilities)))
            wide.setdefault((block, trial_type), {})[task] = ci.format(3)
            probs += [(block, trial_type, task, p.unit, p.subject_id, p.group, p.label,
                       p.p_positive_class, p.n_boot_used) for p in res.probabilities]
            excluded += [(f"{block}/{trial_type}/{task}/{u}", r) for u, r in res.excluded]
    write_csv(out / "table1.csv", ["condition", "trial_type", "task", "auc", "ci_lo", "ci_hi",
                                   "p_vs_chance", "significance", "n_units"], long_rows)
    task_names = list(tasks)
    write_csv(out / "table1_formatted.csv", ["Condition", "Trial Type", *task_names],
              [(b, t, *(cells.get(n, "") for n in task_names)) for (b, t), cells in wide.items()])
    write_csv(out / "probabilities.csv", ["condition", "trial_type", "task", "unit", "subject_id",
                                          "group", "label", "p", "n_boot"], probs)
    _write_excluded(out, excluded)
    write_json(out / "report.json", {
        "positive_class": {name: list(cl[1]) for name, cl in tasks.items()},
        "classifier": clf.to_dict(), "rows": [
            dict(zip(["condition", "trial_type", "task", "auc", "ci_lo", "ci_hi", "p_vs_chance",
                      "significance", "n_units"], r)) for r in long_rows]})


def cmd_transfer(cfg, out: Path, threads: int) -> None:
    ds = _dataset(cfg)
    t = cfg["transfer"]
    res = subject_clf.transfer_eval(ds, _classes(t["train_classes"], "transfer.train_classes"),
                                    tuple(t["test_groups"]), _condition(cfg), _classifier(cfg),
                                    _boot(cfg), threads)
    write_csv(out / "transfer_probabilities.csv", ["subject_id", "group", "p", "n_boot"],
              [(p.subject_id, p.group, p.p_positive_class, p.n_boot_used) for p in res.probabilities])
    write_csv(out / "transfer_ttests.csv", ["group_a", "group_b", "t", "p_raw", "p_adj", "significant"],
              [(*r.pair, r.t, r.p_raw, r.p_adj, int(r.significant)) for r in res.ttests])
    write_json(out / "transfer.json", {"mean_p": res.mean_p, "training_auc": res.training.auc,
                                       "positive_class": list(res.training.classes[1])})


def cmd_ablate(cfg, out: Path, threads: int) -> None:
    ds = _dataset(cfg)
    a = cfg["ablate"]
    classes = _classes(cfg["classes"], "classes")
    kind = a["kind"]
    if kind == "grid":
        if a["method"] == "decode":
            erps = mvpa.build_erps(ds, _condition(cfg), _prep(cfg))
            labels = mvpa.group_labels(ds, positive=classes[1], negative=classes[0])
            seeds = [cfg["seed"] + i for i in range(int(cfg["decode"]["n_seeds"]))]
            evaluate = mvpa.decode_evaluator(erps, labels, ds.layout, seeds, _fit(cfg), threads)
        elif a["method"] == "classify":
            evaluate = subject_clf.classification_evaluator(ds, _condition(cfg), classes,
                                                            _classifier(cfg), _boot(cfg), threads)
        else:
            raise ConfigError(f"ablate.method must be 'decode' or 'classify', got {a['method']!r}")
        rows = mvpa.ablation_grid(evaluate, [float(x) for x in a["time_ends_ms"]], list(a["regions"]),
                                  start_ms=ds.epoch_start_ms)
        write_csv(out / "ablation_grid.csv", ["axis", "value", "auc"],
                  [(r.axis, r.value, r.auc) for r in rows])
    elif kind == "budget":
        rows = subject_clf.budget_ablation(ds, a["axis"], [float(f) for f in a["fractions"]],
                                           {"condition": _condition(cfg)}, classes, _classifier(cfg),
                                           _boot(cfg), threads)
        write_csv(out / "budget_ablation.csv", ["axis", "fraction", "condition", "auc"],
                  [(r.axis, r.fraction, r.condition, r.auc) for r in rows])
    elif kind == "bootstrap":
        rows = subject_clf.bootstrap_grid(ds, [int(v) for v in a["n_values"]],
                                          [int(v) for v in a["b_values"]], None, classes,
                                          _classifier(cfg), _boot(cfg), threads,
                                          int(a["n_ci_boot"]), int(a["n_perm"]))
        for param, fname, title in (("N", "bootstrap_n.csv", "Trials Generated (N)"),
                                    ("B", "bootstrap_b.csv", "Trials Mean (B)")):
            write_csv(out / fname, *appendix_table(rows, param, title))
    else:
        raise ConfigError(f"ablate.kind must be 'grid', 'budget' or 'bootstrap', got {kind!r}")


def appendix_table(rows, param: str, title: str):
    """Wide table: one row per grid value, one ``auc (lo, hi)`` column per condition."""
    conds = []
    cells: dict[int, dict[str, str]] = {}
    for r in rows:
        if r.parameter != param:
            continue
        if r.condition not in conds:
            conds.append(r.condition)
        cells.setdefault(r.value, {})[r.condition] = r.result.format(3, brackets="()").rstrip("*")
    return [title, *conds], [(v, *(cells[v].get(c, "") for c in conds)) for v in cells]


def cmd_behavioral(cfg, out: Path, threads: int) -> None:
    ds = _dataset(cfg)
    classes = _classes(cfg["classes"], "classes")
    res = subject_clf.behavioral_baseline(ds, classes, _build(FitConfig, "behavioral",
                                                              {"lam": cfg["behavioral"]["lam"]}))
    write_csv(out / "behavioral_scores.csv", ["subject_id", "label", "score"],
              [(sid, res.labels[sid], res.scores[sid]) for sid in sorted(res.scores)])
    write_json(out / "behavioral.json", {"auc": res.auc, "model": res.model.to_dict(),
                                         "positive_class": list(classes[1])})


def cmd_correlate(cfg, out: Path, threads: int) -> None:
    ds = _dataset(cfg)
    c = cfg["correlate"]
    path = c["probabilities"]
    if not path or not Path(path).is_file():
        raise ConfigError(f"correlate.probabilities: file {path} not found (run classify first)")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for key in ("condition", "trial_type", "task"):
        if c[key] is not None:
            rows = [r for r in rows if r[key] == c[key]]
        elif rows:
            first = rows[0][key]
            rows = [r for r in rows if r[key] == first]
    if not rows:
        raise DataError("no probabilities match the selected condition/task")
    p_by_subject = {r["subject_id"]: float(r["p"]) for r in rows}
    subjects = {s.subject_id: s for s in ds.subjects}
    report, skipped, table = {}, [], []
    groups = sorted({subjects[sid].group.value for sid in p_by_subject if sid in subjects})
    for g in groups:
        ids = sorted(sid for sid in p_by_subject if sid in subjects and subjects[sid].group.value == g)
        entry = {}
        for q in c["questionnaires"]:
            have = [sid for sid in ids if q in subjects[sid].questionnaires]
            if len(have) < 3:
                skipped.append((g, q, "fewer than 3 subjects with scores"))
                continue
            p = [p_by_subject[s] for s in have]
            score = [subjects[s].questionnaires[q] for s in have]
            try:
                rho = stats.spearman(p, score)
            except stats.ZeroVarianceError as exc:
                skipped.append((g, q, str(exc)))
                entry[q] = None
                table.append((g, q, len(have), "undefined (zero variance)"))
                continue
            entry[q] = rho
            table.append((g, q, len(have), rho))
        if {"phq9_screen", "phq9_dayof"} <= set(c["questionnaires"]):
            have = [s for s in ids if {"phq9_screen", "phq9_dayof"} <= set(subjects[s].questionnaires)]
            try:
                cmp = stats.perm_compare_correlations(
                    [p_by_subject[s] for s in have],
                    [subjects[s].questionnaires["phq9_dayof"] for s in have],
                    [subjects[s].questionnaires["phq9_screen"] for s in have],
                    int(c["n_perm"]), cfg["seed"])
                entry["phq9_dayof_vs_screen"] = cmp._asdict()
            except DataError as exc:
                skipped.append((g, "phq9_dayof_vs_screen", str(exc)))
        report[g] = entry
    write_csv(out / "correlation.csv", ["group", "questionnaire", "n", "spearman_rho"], table)
    write_csv(out / "correlation_skipped.csv", ["group", "item", "reason"], skipped)
    write_json(out / "correlation.json", report)


HANDLERS = {
    "synth": cmd_synth, "decode": cmd_decode, "classify": cmd_classify, "transfer": cmd_transfer,
    "ablate": cmd_ablate, "behavioral": cmd_behavioral, "correlate": cmd_correlate,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eegdecode", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="base seed (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="K=V",
                       help="override a config field, e.g. fit.lam=0.2")
        if name != "synth":
            p.add_argument("--dataset", help="dataset directory (overrides the config)")
        else:
            p.add_argument("--preset", choices=("paper", "calibration"), help="synthetic preset")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        sets = list(args.set)
        if getattr(args, "dataset", None):
            sets.append(f"dataset={json.dumps(args.dataset)}")
        if getattr(args, "preset", None):
            sets.append(f"synth.preset={json.dumps(args.preset)}")
        cfg = load_config(args.config, sets, args.seed)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out}: {exc}") from None
        HANDLERS[args.command](cfg, out, args.threads)
        _run_meta(out, args.command, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (AssertionError, InternalError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
