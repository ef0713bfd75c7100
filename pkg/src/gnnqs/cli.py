"""Command-line entry point: ``gnnqs {train,eval,transfer,ablate,ed,export-csv}``.

Exit codes: 0 success, 1 training diverged, 2 configuration or I/O error.
The environment variable ``GNNQS_NUM_THREADS`` caps BLAS threads.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import checkpoint
from .ansatz import Ansatz, ArchConfig, Graph
from .enumeration import SectorEnumeration
from .errors import Diverged, GNNQSError, PatternIncompatible
from .estimators import WeightedSet, energy, local_energies
from .exact import DENSE_CAP, ExactState, exact_energy, exact_overlap, ground_state, group_action
from .hamiltonian import HeisenbergModel, SectorBasis
from .lattice import Cluster, SublatticePattern, assign_sublattice, load_cluster, recommended_pattern, translations
from .optimizer import Monitor, Trainer, TrainConfig, metrics_line
from .reference import default_time_step, reference_energy, relative_error
from .sampler import SamplerConfig, burn_in, draw_samples, init_chains

EXIT_OK, EXIT_DIVERGED, EXIT_CONFIG = 0, 1, 2
CHECKPOINT_FILE = "checkpoint.bin"
CHECKPOINT_META = "checkpoint.json"
METRICS_FILE = "metrics.jsonl"
RESOLVED_FILE = "resolved-config.json"
CSV_COLUMNS = ["update", "outer_iter", "energy_mean", "energy_stderr", "energy_per_site", "acceptance", "lr",
               "energy_exact", "overlap_exact", "symmetric_fraction"]


class ConfigError(GNNQSError, ValueError):
    pass


# ------------------------------------------------------------------ config


@dataclass
class RunConfig:
    """Everything needed to reproduce a training run.

    ``cluster`` is a preset name or a cluster document; ``pattern`` a
    pattern name or per-site labels.  ``seed`` drives both the weight
    initialization and the chains.  ``monitor`` adds exact diagnostics when
    the sector has at most ``DENSE_CAP`` states.
    """

    cluster: str | dict = "square16"
    j2: float = 0.0
    pattern: str | list | None = None
    arch: ArchConfig = field(default_factory=ArchConfig.small)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    out: str = "run"
    monitor: bool = True

    def to_dict(self) -> dict:
        return {
            "cluster": self.cluster,
            "j2": self.j2,
            "pattern": self.pattern,
            "arch": self.arch.to_dict(),
            "sampler": self.sampler.to_dict(),
            "train": self.train.to_dict(),
            "seed": self.seed,
            "out": self.out,
            "monitor": self.monitor,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        unknown = set(doc) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            arch = ArchConfig(**doc.pop("arch", {})) if isinstance(doc.get("arch", {}), dict) else doc.pop("arch")
            sampler = SamplerConfig(**doc.pop("sampler", {}))
            train = TrainConfig(**doc.pop("train", {}))
            return cls(arch=arch, sampler=sampler, train=train, **doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class RunContext:
    cluster: Cluster
    model: HeisenbergModel
    pattern: SublatticePattern
    labels: np.ndarray
    ansatz: Ansatz


def _cluster_of(source) -> tuple[Cluster, np.ndarray | None]:
    try:
        return load_cluster(source)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read cluster file: {exc}") from None


def build_context(cfg: RunConfig, cluster: Cluster | None = None) -> RunContext:
    if cluster is None:
        cluster, custom = _cluster_of(cfg.cluster)
    else:
        custom = None
    pattern = cfg.pattern
    if pattern is None:
        pattern = list(custom) if custom is not None else recommended_pattern(cluster.kind, cfg.j2).value
    encoding = assign_sublattice(cluster, pattern)
    if encoding.pattern not in (SublatticePattern.NONE, SublatticePattern.CUSTOM):
        expected = recommended_pattern(cluster.kind, cfg.j2)
        if encoding.pattern is not expected:
            warnings.warn(f"pattern {encoding.pattern.value} differs from {expected.value}, "
                          f"the usual choice for J2={cfg.j2} on {cluster.kind.value}", stacklevel=2)
    model = HeisenbergModel(cluster, float(cfg.j2))
    ansatz = Ansatz(cfg.arch, Graph.from_model(model), encoding.codes)
    return RunContext(cluster, model, encoding.pattern, encoding.labels, ansatz)


def resolve(cfg: RunConfig, time_step_given: bool = True) -> RunConfig:
    """Materialize derived defaults so the resolved config is self-contained."""
    cluster, _ = _cluster_of(cfg.cluster)
    n = cluster.n_sites
    train = cfg.train
    if not time_step_given:
        train = replace(train, time_step=default_time_step(cluster.kind, n))
    pattern = cfg.pattern
    if pattern is None:
        pattern = recommended_pattern(cluster.kind, cfg.j2).value
    return replace(
        cfg,
        pattern=pattern,
        arch=replace(cfg.arch, seed=cfg.seed),
        sampler=replace(cfg.sampler, seed=cfg.seed).resolved(n),
        train=train,
    )


# ------------------------------------------------------------- exact cache


def _cache_dir() -> Path | None:
    root = os.environ.get("GNNQS_CACHE_DIR")
    path = Path(root) if root else Path.home() / ".cache" / "gnnqs"
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError:
        return None
    return path


def _cache_key(model: HeisenbergModel) -> str:
    doc = {"spec": model.cluster.spec.to_dict(), "j2": float(model.j2), "v": 1}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:20]


def cached_ground_state(model: HeisenbergModel, method: str = "auto") -> ExactState:
    """Exact ground state, reused from the on-disk cache when present."""
    cache = _cache_dir()
    path = cache / f"ed-{_cache_key(model)}.npz" if cache else None
    basis = SectorBasis(model.n_sites)
    if path is not None and path.exists():
        try:
            with np.load(path) as data:
                amp = data["amplitudes"]
                if amp.shape == (len(basis),):
                    return ExactState(amp, float(data["energy"]), basis)
        except (OSError, ValueError, KeyError):
            pass
    state = ground_state(model, method=method)
    if path is not None:
        try:
            tmp = path.with_suffix(".tmp.npz")
            np.savez(tmp, amplitudes=state.amplitudes, energy=state.energy)
            os.replace(tmp, path)
        except OSError:
            pass
    return state


def _enumerable(model: HeisenbergModel, cap: int = DENSE_CAP) -> bool:
    return math.comb(model.n_sites, model.n_sites // 2) <= cap


def make_monitor(ctx: RunContext) -> Monitor:
    enum = SectorEnumeration(ctx.ansatz, ctx.model)
    state = cached_ground_state(ctx.model)
    return Monitor(enum, state, group_action(enum.basis, translations(ctx.cluster)))


# ------------------------------------------------------------------- train


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _checkpoint_meta(cfg: RunConfig, ctx: RunContext, last: dict | None) -> dict:
    return {
        "run": cfg.to_dict(),
        "cluster_spec": ctx.cluster.spec.to_dict(),
        "cluster_name": ctx.cluster.name,
        "pattern": ctx.pattern.value,
        "labels": ctx.labels.tolist(),
        "last_metrics": last,
    }


def train_run(cfg: RunConfig, resume: bool = False, stop=None) -> int:
    """Run one training job into ``cfg.out``; returns an exit code.

    ``stop`` is an optional predicate on metrics records that ends the run
    early (see :meth:`Trainer.run`).
    """
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / RESOLVED_FILE, cfg.to_dict())
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ctx = build_context(cfg)
    monitor = make_monitor(ctx) if cfg.monitor and _enumerable(ctx.model) else None
    trainer = Trainer(ctx.model, ctx.ansatz, cfg.train, cfg.sampler, None, monitor)

    metrics_path = out / METRICS_FILE
    ckpt_path = out / CHECKPOINT_FILE
    mode = "w"
    if resume and ckpt_path.exists():
        meta, arrays = checkpoint.load(ckpt_path)
        trainer.restore(meta, arrays)
        kept = []
        if metrics_path.exists():
            kept = [line for line in metrics_path.read_text().splitlines()
                    if line and json.loads(line)["update"] <= trainer.update]
        metrics_path.write_text("".join(line + "\n" for line in kept))
        mode = "a"

    last: dict = {}

    def save(tr: Trainer) -> None:
        tr.save(ckpt_path, _checkpoint_meta(cfg, ctx, last.get("record")))
        meta = {k: v for k, v in tr.state()[0].items() if k != "rng_states"}
        _write_json(out / CHECKPOINT_META, {**meta, **_checkpoint_meta(cfg, ctx, last.get("record"))})

    with open(metrics_path, mode) as fh:
        def hook(record: dict) -> None:
            last["record"] = record
            fh.write(metrics_line(record) + "\n")
            fh.flush()

        try:
            trainer.run(hooks=[hook], on_checkpoint=save, stop=stop)
        except Diverged as exc:
            save(trainer)
            print(f"diverged: {exc}; last good parameters saved to {ckpt_path}", file=sys.stderr)
            return EXIT_DIVERGED
    save(trainer)
    return EXIT_OK


# -------------------------------------------------------------- evaluation


def _load_checkpoint(path: str | Path):
    path = Path(path)
    if path.is_dir():
        path = path / CHECKPOINT_FILE
    try:
        meta, arrays = checkpoint.load(path)
    except OSError as exc:
        raise ConfigError(f"cannot read checkpoint: {exc}") from None
    if "run" not in meta:
        raise ConfigError("checkpoint lacks run metadata")
    return meta, arrays


def evaluate_params(ctx: RunContext, params: np.ndarray, n_samples: int, n_chains: int, seed: int,
                    oracle: bool = True, burn_in_sweeps: int | None = None, thin_steps: int | None = None) -> dict:
    """MCMC energy report, with exact comparisons when the sector is small enough."""
    sampler = SamplerConfig(n_chains=n_chains, seed=seed, burn_in_sweeps=burn_in_sweeps,
                            thin_steps=thin_steps).resolved(ctx.model.n_sites)
    evaluate = lambda configs: ctx.ansatz.evaluate(params, configs)  # noqa: E731
    chains = init_chains(sampler, ctx.model.n_sites, evaluate)
    burn_in(chains, evaluate, sampler)
    samples = draw_samples(chains, math.ceil(n_samples / n_chains), evaluate, sampler)
    wset = WeightedSet.from_samples(samples)
    est = energy(wset, local_energies(ctx.model, wset.configs, wset.log_amp, wset.phase, evaluate))
    n = ctx.model.n_sites
    report = {
        "cluster": ctx.cluster.name or ctx.cluster.spec.to_dict(),
        "n_sites": n,
        "j2": ctx.model.j2,
        "n_samples": len(wset),
        "burn_in_sweeps": sampler.burn_in_sweeps,
        "thin_steps": sampler.thin_steps,
        "energy": est.mean.real,
        "energy_stderr": est.stderr,
        "energy_per_site": est.mean.real / n,
        "energy_per_site_stderr": est.stderr / n,
        "acceptance": chains.acceptance,
    }
    ref = reference_energy(ctx.cluster.kind, ctx.model.j2, n)
    if ref is not None:
        report["reference_energy_per_site"] = ref
        report["relative_error_reference"] = relative_error(est.mean.real / n, ref)
    if oracle and _enumerable(ctx.model):
        state = cached_ground_state(ctx.model)
        enum = SectorEnumeration(ctx.ansatz, ctx.model, state.basis)
        amp = enum.amplitudes(params)
        report["exact_ground_energy"] = state.energy
        report["exact_energy"] = exact_energy(amp.log_amp, amp.phase, ctx.model, hamiltonian=enum.hamiltonian)[0]
        report["relative_error"] = relative_error(est.mean.real, state.energy)
        report["overlap_exact"] = exact_overlap(amp.log_amp, amp.phase, state)
    return report


def _context_from_checkpoint(meta: dict, arrays: dict, cluster_source=None) -> tuple[RunContext, np.ndarray]:
    cfg = RunConfig.from_dict(meta["run"])
    if cluster_source is None:
        cluster, _ = _cluster_of(cfg.cluster)
        ctx = build_context(cfg, cluster)
    else:
        cluster, custom = _cluster_of(cluster_source)
        pattern = meta["pattern"]
        if pattern == SublatticePattern.CUSTOM.value:
            if custom is None:
                raise PatternIncompatible("checkpoint uses custom labels; the target cluster file must supply codes")
            pattern = list(custom)
        ctx = build_context(replace(cfg, pattern=pattern), cluster)
    if ctx.ansatz.n_params != arrays["params"].size:
        raise ConfigError(f"checkpoint has {arrays['params'].size} parameters, "
                          f"this cluster/pattern needs {ctx.ansatz.n_params} (sublattice code width differs)")
    return ctx, arrays["params"]


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if out:
        Path(out).write_text(text + "\n")


# ---------------------------------------------------------------- commands


def cmd_train(args) -> int:
    cfg, time_step_given = _config_from_args(args)
    return train_run(resolve(cfg, time_step_given), resume=args.resume)


def cmd_eval(args) -> int:
    meta, arrays = _load_checkpoint(args.checkpoint)
    ctx, params = _context_from_checkpoint(meta, arrays, args.cluster)
    report = evaluate_params(ctx, params, args.samples, args.chains, args.seed, oracle=not args.no_oracle,
                             burn_in_sweeps=args.burn_in_sweeps, thin_steps=args.thin_steps)
    _emit(report, args.out)
    return EXIT_OK


def cmd_transfer(args) -> int:
    meta, arrays = _load_checkpoint(args.checkpoint)
    source_kind = meta["cluster_spec"]["kind"]
    target, _ = _cluster_of(args.cluster)
    if target.kind.value != source_kind:
        raise PatternIncompatible(f"checkpoint was trained on a {source_kind} lattice, target is {target.kind.value}")
    ctx, params = _context_from_checkpoint(meta, arrays, args.cluster)
    report = evaluate_params(ctx, params, args.samples, args.chains, args.seed, oracle=not args.no_oracle,
                             burn_in_sweeps=args.burn_in_sweeps, thin_steps=args.thin_steps)
    last = meta.get("last_metrics") or {}
    if "energy_per_site" in last:
        src = last["energy_per_site"]
        report["source_energy_per_site"] = src
        report["relative_difference"] = (report["energy_per_site"] - src) / abs(src)
    _emit(report, args.out)
    return EXIT_OK


def cmd_ablate(args) -> int:
    base, time_step_given = _config_from_args(args)
    base = replace(base, monitor=True)
    cluster, _ = _cluster_of(base.cluster)
    if not _enumerable(HeisenbergModel(cluster, base.j2)):
        raise ConfigError("ablation needs a cluster the exact solver covers")
    with_pattern = base.pattern or recommended_pattern(cluster.kind, base.j2).value
    summary = {"runs": []}
    status = EXIT_OK
    for seed in args.seeds:
        finals = {}
        for label, pattern in (("with_codes", with_pattern), ("without_codes", "none")):
            cfg = replace(base, seed=seed, pattern=pattern, out=str(Path(base.out) / f"seed{seed}" / label))
            code = train_run(resolve(cfg, time_step_given))
            status = max(status, code)
            lines = (Path(cfg.out) / METRICS_FILE).read_text().splitlines()
            finals[label] = json.loads(lines[-1])
        summary["runs"].append({
            "seed": seed,
            "with_codes": {k: finals["with_codes"].get(k) for k in ("overlap_exact", "symmetric_fraction", "energy_mean")},
            "without_codes": {k: finals["without_codes"].get(k) for k in ("overlap_exact", "symmetric_fraction", "energy_mean")},
        })
    runs = summary["runs"]
    summary["with_codes_better"] = sum(r["with_codes"]["overlap_exact"] > r["without_codes"]["overlap_exact"] for r in runs)
    summary["with_codes_symmetric"] = sum(r["with_codes"]["symmetric_fraction"] >= 0.9 for r in runs)
    _write_json(Path(base.out) / "summary.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return status


def cmd_ed(args) -> int:
    cluster, _ = _cluster_of(args.cluster)
    model = HeisenbergModel(cluster, args.j2)
    state = cached_ground_state(model, args.method) if args.method == "auto" else ground_state(model, method=args.method)
    report = {
        "cluster": cluster.name or cluster.spec.to_dict(),
        "n_sites": cluster.n_sites,
        "j2": args.j2,
        "sector_dimension": len(state.basis),
        "energy": state.energy,
        "energy_per_site": state.energy / cluster.n_sites,
    }
    if args.dump:
        np.save(args.dump, state.amplitudes)
        report["eigenvector"] = str(args.dump)
    _emit(report, args.out)
    return EXIT_OK


def cmd_export_csv(args) -> int:
    try:
        records = [json.loads(line) for line in Path(args.metrics).read_text().splitlines() if line.strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read metrics: {exc}") from None
    extra = sorted({k for r in records for k in r} - set(CSV_COLUMNS) - {"schema"})
    columns = [c for c in CSV_COLUMNS if any(c in r for r in records)] + extra
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for r in records:
            writer.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in columns})
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


# ------------------------------------------------------------------ parser


_ARCH_FLAGS = {"embed_dim": int, "hidden_width": int, "hidden_layers": int, "mp_steps": int, "variant": str}
_TRAIN_FLAGS = {"method": str, "time_step": float, "inner_steps": int, "lr0": float, "decay_rate": float,
                "decay_horizon": float, "total_updates": int, "samples_per_update": int, "eval_every": int,
                "eval_samples": int, "checkpoint_every": int}
_SAMPLER_FLAGS = {"n_chains": int, "thin_steps": int, "burn_in_sweeps": int}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run config; flags override its values")
    p.add_argument("--cluster", help="preset name or cluster JSON file")
    p.add_argument("--j2", type=float)
    p.add_argument("--pattern", help="sublattice pattern name (default: the regime's usual one)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--arch", choices=["small", "full"], help="size preset before per-field overrides")
    for name, typ in _ARCH_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), type=typ, dest=f"arch.{name}")
    p.add_argument("--coupling-feature", action="store_true", default=None, dest="arch.include_coupling_edge_feature")
    for name, typ in _TRAIN_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), type=typ, dest=f"train.{name}")
    p.add_argument("--test-mode", action="store_true", default=None, dest="train.test_mode",
                   help="replace sampling by exactly weighted enumeration of the sector")
    for name, typ in _SAMPLER_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), type=typ, dest=f"sampler.{name}")
    p.add_argument("--no-monitor", action="store_true", help="skip exact overlap/symmetry diagnostics")


def _config_from_args(args) -> tuple[RunConfig, bool]:
    doc: dict = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    base = RunConfig()
    merged = {**base.to_dict(), **{k: v for k, v in doc.items() if k not in ("arch", "sampler", "train")}}
    arch = ArchConfig().to_dict() if args.arch == "full" or (args.arch is None and doc.get("arch_preset") == "full") \
        else ArchConfig.small().to_dict()
    merged.pop("arch_preset", None)
    arch.update(doc.get("arch", {}))
    sampler = {**base.sampler.to_dict(), **doc.get("sampler", {})}
    train = {**base.train.to_dict(), **doc.get("train", {})}
    time_step_given = "time_step" in doc.get("train", {})
    for key, value in vars(args).items():
        if value is None:
            continue
        if key.startswith("arch."):
            arch[key[5:]] = value
        elif key.startswith("train."):
            train[key[6:]] = value
            time_step_given |= key == "train.time_step"
        elif key.startswith("sampler."):
            sampler[key[8:]] = value
        elif key in ("cluster", "j2", "pattern", "seed", "out"):
            merged[key] = value
    if getattr(args, "no_monitor", False):
        merged["monitor"] = False
    merged.update(arch=arch, sampler=sampler, train=train)
    try:
        return RunConfig.from_dict(merged), time_step_given
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnnqs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a wave-function")
    _add_run_flags(p)
    p.add_argument("--resume", action="store_true", help="continue from OUT/checkpoint.bin")
    p.set_defaults(func=cmd_train)

    for name, func, helptext in (("eval", cmd_eval, "MCMC energy of a checkpoint"),
                                 ("transfer", cmd_transfer, "evaluate a checkpoint on another cluster")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("checkpoint", help="checkpoint file or run directory")
        p.add_argument("--cluster", required=name == "transfer", help="preset name or cluster JSON file")
        p.add_argument("--samples", type=int, default=20000)
        p.add_argument("--chains", type=int, default=32)
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--burn-in-sweeps", type=int, help="default 10 N sweeps of N steps")
        p.add_argument("--thin-steps", type=int, help="default N")
        p.add_argument("--no-oracle", action="store_true", help="skip exact comparisons")
        p.add_argument("--out", help="also write the JSON report here")
        p.set_defaults(func=func)

    p = sub.add_parser("ablate", help="paired runs with and without sublattice codes")
    _add_run_flags(p)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("ed", help="exact ground state of a small cluster")
    p.add_argument("--cluster", required=True)
    p.add_argument("--j2", type=float, default=0.0)
    p.add_argument("--method", choices=["auto", "dense", "iterative"], default="auto")
    p.add_argument("--dump", help="save the ground-state vector (.npy)")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_ed)

    p = sub.add_parser("export-csv", help="convert metrics.jsonl to CSV")
    p.add_argument("metrics")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_export_csv)
    return parser


def _thread_limit():
    value = os.environ.get("GNNQS_NUM_THREADS")
    if not value:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(int(value))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    limiter = _thread_limit()
    try:
        return args.func(args)
    except (GNNQSError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        if limiter is not None:
            limiter.restore_original_limits()


if __name__ == "__main__":
    sys.exit(main())
