"""Command-line front end: stats, synth, train, evaluate, predict.

Runs are driven by an INI config file plus flag overrides; every command
that produces artifacts writes the fully resolved configuration next to
them, so any result directory can be reproduced from its own contents.
Seeds always come from the config or flags, never from the clock.
"""

import argparse
import configparser
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import feature_encoder, metrics, recurrent_net, synth_gen, text_models, ts_baseline
from .errors import ConfigError, TextPpmError
from .log_model import (AttributeKind, EventLog, chronological_split,
                        format_timestamp, log_stats, parse_csv, write_csv)

DEFAULT_SPLIT = 2.0 / 3.0


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    log: str | None = None
    out: str | None = None
    seed: int | None = None
    schema: dict[str, AttributeKind] = field(default_factory=dict)
    split_fraction: float = DEFAULT_SPLIT
    text_model: str = "bow"  # bow | bong | pv | lda | none
    vector_size: int = 50
    ngram: int = 2
    net: dict[str, object] = field(default_factory=dict)
    abstractions: list[str] = field(default_factory=lambda: ["sequence", "bag", "set"])
    eval_blind: bool = True
    horizon: int = ts_baseline.DEFAULT_HORIZON
    synth_cases: int = 1000
    synth_emission: float = 1.0
    model_dir: str | None = None
    case: str | None = None

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("a seed is required (set --seed or [run] seed)")
        return self.seed

    def require_log(self) -> str:
        if not self.log:
            raise ConfigError("an input log is required (set --log or [data] log)")
        return self.log

    def require_out(self) -> Path:
        if not self.out:
            raise ConfigError("an output directory is required (set --out or [run] out)")
        path = Path(self.out)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def text_kind(self) -> text_models.TextModelKind | None:
        if self.text_model == "none":
            return None
        if self.text_model == "bong":
            return text_models.TextModelKind("bong", self.vector_size, self.ngram)
        return text_models.TextModelKind(self.text_model, self.vector_size)


def parse_schema(value: str) -> dict[str, AttributeKind]:
    """Parse "Name:kind, Name:kind" attribute declarations."""
    schema: dict[str, AttributeKind] = {}
    for chunk in value.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, _, kind = chunk.partition(":")
        name = name.strip()
        try:
            schema[name] = AttributeKind(kind.strip().lower())
        except ValueError:
            raise ConfigError(
                f"attribute {name!r}: unknown kind {kind.strip()!r} "
                f"(expected categorical, numerical or textual)") from None
    return schema


_NET_KEYS = {
    "hidden_units": int, "shared_layers": int, "head_hidden": int,
    "learning_rate": float, "epochs": int, "batch_size": int,
    "val_fraction": float, "patience": int,
}


def load_config(path: str | None, args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if path:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file {path!r} not found")
        if parser.has_section("data"):
            sec = parser["data"]
            cfg.log = sec.get("log", cfg.log)
            if "attributes" in sec:
                cfg.schema = parse_schema(sec["attributes"])
            cfg.split_fraction = sec.getfloat("split_fraction", cfg.split_fraction)
        if parser.has_section("text"):
            sec = parser["text"]
            cfg.text_model = sec.get("model", cfg.text_model).lower()
            cfg.vector_size = sec.getint("vector_size", cfg.vector_size)
            cfg.ngram = sec.getint("ngram", cfg.ngram)
        if parser.has_section("net"):
            for key, cast in _NET_KEYS.items():
                if key in parser["net"]:
                    cfg.net[key] = cast(parser["net"][key])
        if parser.has_section("run"):
            sec = parser["run"]
            if "seed" in sec:
                cfg.seed = sec.getint("seed")
            cfg.out = sec.get("out", cfg.out)
        if parser.has_section("evaluate"):
            sec = parser["evaluate"]
            if "abstractions" in sec:
                cfg.abstractions = [a.strip() for a in sec["abstractions"].split(",")
                                    if a.strip()]
            cfg.eval_blind = sec.getboolean("blind", cfg.eval_blind)
            cfg.horizon = sec.getint("horizon", cfg.horizon)
        if parser.has_section("synth"):
            sec = parser["synth"]
            cfg.synth_cases = sec.getint("n_cases", cfg.synth_cases)
            cfg.synth_emission = sec.getfloat("text_emission_prob", cfg.synth_emission)
        if parser.has_section("predict"):
            sec = parser["predict"]
            cfg.model_dir = sec.get("model_dir", cfg.model_dir)
            cfg.case = sec.get("case", cfg.case)

    # flags override file values
    if getattr(args, "log", None):
        cfg.log = args.log
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "text_model", None):
        cfg.text_model = args.text_model
    if getattr(args, "vector_size", None) is not None:
        cfg.vector_size = args.vector_size
    if getattr(args, "abstraction", None):
        cfg.abstractions = list(args.abstraction)
    if getattr(args, "attributes", None):
        cfg.schema = parse_schema(args.attributes)
    if getattr(args, "model_dir", None):
        cfg.model_dir = args.model_dir
    if getattr(args, "case", None):
        cfg.case = args.case
    if cfg.text_model not in ("bow", "bong", "pv", "lda", "none"):
        raise ConfigError(f"unknown text model {cfg.text_model!r}")
    return cfg


def write_resolved(cfg: RunConfig, out_dir: Path) -> None:
    parser = configparser.ConfigParser()
    parser["data"] = {
        "log": cfg.log or "",
        "attributes": ", ".join(f"{n}:{k.value}" for n, k in cfg.schema.items()),
        "split_fraction": repr(cfg.split_fraction),
    }
    parser["text"] = {"model": cfg.text_model,
                      "vector_size": str(cfg.vector_size),
                      "ngram": str(cfg.ngram)}
    parser["net"] = {k: str(v) for k, v in cfg.net.items()}
    parser["run"] = {"seed": str(cfg.seed), "out": str(cfg.out or "")}
    parser["evaluate"] = {"abstractions": ", ".join(cfg.abstractions),
                          "blind": str(cfg.eval_blind).lower(),
                          "horizon": str(cfg.horizon)}
    parser["synth"] = {"n_cases": str(cfg.synth_cases),
                       "text_emission_prob": repr(cfg.synth_emission)}
    with open(out_dir / "config.resolved.ini", "w", encoding="utf-8") as handle:
        parser.write(handle)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _load_log(cfg: RunConfig) -> EventLog:
    return parse_csv(cfg.require_log(), cfg.schema)


def _train_net(cfg: RunConfig, train_log: EventLog,
               text_kind) -> tuple[feature_encoder.EncoderSpec, recurrent_net.TrainedNet]:
    seed = cfg.require_seed()
    spec = feature_encoder.fit_encoder(train_log, text_kind, seed)
    samples = feature_encoder.encode_log(spec, train_log)
    net_config = recurrent_net.NetConfig(
        input_dim=spec.total_dim,
        n_classes=spec.n_classes,
        n_outcomes=len(spec.activities),
        seed=seed,
        **cfg.net,
    )
    params, history = recurrent_net.train(net_config, samples)
    return spec, recurrent_net.TrainedNet(net_config, params, spec, history)


def cmd_stats(cfg: RunConfig) -> int:
    stats = log_stats(_load_log(cfg))
    for line in stats.lines():
        print(line)
    if cfg.out:
        out = cfg.require_out()
        with open(out / "stats.csv", "w", encoding="utf-8") as handle:
            handle.write("field,value\n")
            for line in stats.lines():
                name, _, value = line.rpartition(" ")
                handle.write(f"{name.strip()},{value}\n")
    return 0


def cmd_synth(cfg: RunConfig) -> int:
    out = cfg.require_out()
    spec = synth_gen.SynthSpec(n_cases=cfg.synth_cases, seed=cfg.require_seed(),
                               text_emission_prob=cfg.synth_emission)
    log, _ = synth_gen.generate(spec)
    target = out / "synthetic.csv"
    write_csv(log, target)
    write_resolved(cfg, out)
    print(f"wrote {log.event_count} events, {len(log)} cases to {target}")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    out = cfg.require_out()
    log = _load_log(cfg)
    train_log, _ = chronological_split(log, cfg.split_fraction)
    spec, net = _train_net(cfg, train_log, cfg.text_kind())
    feature_encoder.save_encoder(spec, out / "encoder.bin")
    recurrent_net.save_checkpoint(net, out / "checkpoint.bin", encoder_ref="encoder.bin")
    with open(out / "history.csv", "w", encoding="utf-8") as handle:
        handle.write("\n".join(recurrent_net.history_rows(net.history)) + "\n")
    write_resolved(cfg, out)
    last = net.history[-1]
    print(f"trained {len(net.history)} epochs on {len(train_log)} cases "
          f"(final train loss {last.train_total:.4f})")
    print(f"artifacts in {out}")
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    out = cfg.require_out()
    log = _load_log(cfg)
    train_log, test_log = chronological_split(log, cfg.split_fraction)

    models: dict[str, object] = {}
    text_kind = cfg.text_kind()
    spec, net = _train_net(cfg, train_log, text_kind)
    if text_kind is None:
        models["lstm-blind"] = net
    else:
        label = cfg.text_model + str(cfg.vector_size)
        models[f"lstm-{label}"] = net
        if cfg.eval_blind:
            _, blind = _train_net(cfg, train_log, None)
            models["lstm-blind"] = blind
    for kind in cfg.abstractions:
        ts = ts_baseline.build(train_log, ts_baseline.Abstraction(kind, cfg.horizon))
        models[f"ats-{kind}"] = ts
        ts_baseline.dump_states_csv(ts, out / f"ats_{kind}_states.csv")

    report = metrics.evaluate_models(models, test_log)
    metrics.report_to_csv(report, out / "report.csv")
    table = metrics.summary_table(report)
    with open(out / "summary.txt", "w", encoding="utf-8") as handle:
        handle.write(table + "\n")
    feature_encoder.save_encoder(spec, out / "encoder.bin")
    recurrent_net.save_checkpoint(net, out / "checkpoint.bin", encoder_ref="encoder.bin")
    write_resolved(cfg, out)
    print(table)
    return 0


def cmd_predict(cfg: RunConfig) -> int:
    model_dir = Path(cfg.model_dir or cfg.out or ".")
    spec = feature_encoder.load_encoder(model_dir / "encoder.bin")
    net = recurrent_net.load_checkpoint(model_dir / "checkpoint.bin", spec)
    if not cfg.case:
        raise ConfigError("predict needs --case (CSV with one running case)")
    case_log = parse_csv(cfg.case, cfg.schema)
    if len(case_log) != 1:
        raise ConfigError(f"expected exactly one case in {cfg.case!r}, "
                          f"found {len(case_log)}")
    events = case_log.traces[0].events
    pred = net.predict_prefix(events)
    print(f"case {case_log.traces[0].case_id!r}, {len(events)} events observed")
    print(f"next activity : {pred.next_activity} (p={pred.next_activity_prob:.3f})")
    print(f"next timestamp: {format_timestamp(pred.next_timestamp)} "
          f"(+{pred.next_delta_seconds / 86400.0:.3f} d)")
    print(f"outcome       : {pred.outcome} (p={pred.outcome_prob:.3f})")
    print(f"completion    : {format_timestamp(pred.completion_timestamp)} "
          f"(cycle {pred.cycle_seconds / 86400.0:.3f} d)")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textppm",
        description="Process prediction from event logs with textual context.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--log", help="event log CSV")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="random seed (mandatory, no default)")
        p.add_argument("--attributes",
                       help='schema, e.g. "Message:textual, Age:numerical"')

    p = sub.add_parser("stats", help="summarize an event log")
    common(p)

    p = sub.add_parser("synth", help="generate a synthetic text-driven log")
    common(p)

    for name, help_text in (("train", "fit encoder and network on the train split"),
                            ("evaluate", "train all configured models, score them")):
        p = sub.add_parser(name, help=help_text)
        common(p)
        p.add_argument("--text-model", choices=["bow", "bong", "pv", "lda", "none"])
        p.add_argument("--vector-size", type=int)
        if name == "evaluate":
            p.add_argument("--abstraction", action="append",
                           choices=["sequence", "bag", "set"],
                           help="baseline abstraction (repeatable)")

    p = sub.add_parser("predict", help="predict one running case from a checkpoint")
    common(p)
    p.add_argument("--model-dir", help="directory with encoder.bin and checkpoint.bin")
    p.add_argument("--case", help="CSV file containing the running case")
    return parser


COMMANDS = {
    "stats": cmd_stats,
    "synth": cmd_synth,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
        return COMMANDS[args.command](cfg)
    except (TextPpmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
