"""Command-line entry point wiring the full pipeline.

Subcommands: synth, import, spectrogram, train, eval, export-images. Any
config key can be overridden on the command line as --section.key=value;
overrides beat the config file, which beats the preset and the defaults.
Every command writes resolved_config.txt into the output directory so each
run's artifacts carry their exact configuration.
"""

from __future__ import annotations

import re
import sys
from argparse import ArgumentParser
from pathlib import Path

from . import dataset as ds
from . import eval_report as er
from . import nn
from .config import ConfigError, PipelineConfig, parse_config
from .filters import apply_sos
from .stft import export_image, log_power, stft, write_matrix
from .trial_store import (
    TrialMeta,
    TrialSet,
    import_csv,
    raw_label_from_name,
    read_archive,
    synthesize_dataset,
    write_archive,
)

COMMANDS = ("synth", "import", "spectrogram", "train", "eval", "export-images")

_OVERRIDE = re.compile(r"^--([a-z][a-z_0-9]*\.[a-z][a-z_0-9]*)=(.*)$")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    overrides = []
    rest = []
    for arg in argv:
        match = _OVERRIDE.match(arg)
        if match:
            overrides.append(f"{match.group(1)}={match.group(2)}")
        else:
            rest.append(arg)

    parser = ArgumentParser(
        prog="eegspect",
        description="EEG movement-execution classification pipeline. "
        "Any config key can be set as --section.key=value.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="path to a key=value config file")
    args = parser.parse_args(rest)

    try:
        cfg = parse_config(args.config, overrides)
        return run(args.command, cfg)
    except Exception as exc:  # single-line diagnostic, nonzero exit
        print(f"eegspect: error: {exc}", file=sys.stderr)
        return 1


def run(command: str, cfg: PipelineConfig) -> int:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    out_dir = Path(cfg["paths.out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_audit(cfg, out_dir)
    handler = {
        "synth": _cmd_synth,
        "import": _cmd_import,
        "spectrogram": _cmd_spectrogram,
        "train": _cmd_train,
        "eval": _cmd_eval,
        "export-images": _cmd_export_images,
    }[command]
    handler(cfg, out_dir)
    return 0


def _cmd_synth(cfg: PipelineConfig, out_dir: Path) -> None:
    trial_set = synthesize_dataset(cfg.synth_spec())
    archive = Path(cfg["paths.archive"])
    archive.parent.mkdir(parents=True, exist_ok=True)
    write_archive(trial_set, archive)
    print(f"wrote {len(trial_set.trials)} trials to {archive}")


def _cmd_import(cfg: PipelineConfig, out_dir: Path) -> None:
    manifest = cfg["import.manifest"]
    if not manifest:
        raise ConfigError("import.manifest: required for the import command")
    manifest_path = Path(manifest)
    fs = cfg["stft.fs"]
    trials = []
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = [p.strip() for p in text.split(",")]
            if len(parts) != 5:
                raise ValueError(
                    f"{manifest_path}:{line_no}: expected path,subject,run,trial,label"
                )
            csv_path, subject, run, trial, label = parts
            meta = TrialMeta(
                subject_id=int(subject),
                run_index=int(run),
                trial_index=int(trial),
                raw_label=raw_label_from_name(label),
                fs=fs,
            )
            trials.append(import_csv(manifest_path.parent / csv_path, meta))
    if not trials:
        raise ValueError(f"{manifest_path}: no trials listed")
    names = tuple(f"C{i+1}" for i in range(trials[0].n_channels))
    trial_set = TrialSet(trials=tuple(trials), channel_names=names, fs=fs)
    archive = Path(cfg["paths.archive"])
    archive.parent.mkdir(parents=True, exist_ok=True)
    write_archive(trial_set, archive)
    print(f"imported {len(trials)} trials to {archive}")


def _cmd_spectrogram(cfg: PipelineConfig, out_dir: Path) -> None:
    examples, _ = _pipeline_examples(cfg)
    manifest = ds.split(
        examples,
        ratios=cfg.ratios(),
        seed=cfg["split.seed"],
        strategy=cfg["split.strategy"],
    )
    spect_dir = out_dir / "spectrograms"
    spect_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "examples.csv", "w", encoding="utf-8") as fh:
        fh.write("id,label\n")
        for ex in examples:
            write_matrix(ex.stacked.values, spect_dir / f"{ex.example_id}.spg")
            fh.write(f"{ex.example_id},{ex.label.name.lower()}\n")
    (out_dir / "split_manifest.json").write_text(ds.manifest_to_json(manifest))
    print(f"wrote {len(examples)} spectrograms and split manifest to {out_dir}")


def _cmd_train(cfg: PipelineConfig, out_dir: Path) -> None:
    examples, _ = _pipeline_examples(cfg)
    scheme = cfg["dataset.scheme"]
    k = ds.n_classes(scheme)
    stft_cfg = cfg.stft_config()
    input_hw = (stft_cfg.one_sided_bins, stft_cfg.n_frames(ds.SLICE_SAMPLES))
    train_cfg = cfg.train_config()
    for subject in sorted({ex.subject_id for ex in examples}):
        subject_examples = [ex for ex in examples if ex.subject_id == subject]
        manifest = ds.split(
            subject_examples,
            ratios=cfg.ratios(),
            seed=cfg["split.seed"],
            strategy=cfg["split.strategy"],
        )
        train_data = ds.to_tensors(subject_examples, manifest.train)
        val_data = ds.to_tensors(subject_examples, manifest.val)
        net = nn.init_net(
            k, train_cfg.seed, input_hw=input_hw, n_blocks=cfg["model.n_blocks"]
        )
        net, history = nn.train(net, train_data, val_data, train_cfg)
        nn.save_checkpoint(net, out_dir / f"subject_{subject}.vgl")
        history.to_csv(out_dir / f"subject_{subject}_history.csv")
        final = history.records[-1].val_acc if history.records else float("nan")
        print(f"subject {subject}: trained {train_cfg.epochs} epochs, val acc {final:.4f}")


def _cmd_eval(cfg: PipelineConfig, out_dir: Path) -> None:
    examples, _ = _pipeline_examples(cfg)
    scheme = cfg["dataset.scheme"]
    k = ds.n_classes(scheme)
    names = ds.class_names(scheme)
    results = []
    for subject in sorted({ex.subject_id for ex in examples}):
        checkpoint = out_dir / f"subject_{subject}.vgl"
        if not checkpoint.exists():
            raise FileNotFoundError(f"missing checkpoint for subject {subject}: {checkpoint}")
        net = nn.load_checkpoint(checkpoint)
        subject_examples = [ex for ex in examples if ex.subject_id == subject]
        manifest = ds.split(
            subject_examples,
            ratios=cfg.ratios(),
            seed=cfg["split.seed"],
            strategy=cfg["split.strategy"],
        )
        x_test, y_test = ds.to_tensors(subject_examples, manifest.test)
        preds, _ = nn.predict(net, x_test, batch_size=cfg["train.batch_size"])
        cm = er.confusion_matrix(preds, y_test, k, names)
        results.append(
            er.SubjectResult(
                subject_id=subject,
                accuracy=er.accuracy(cm),
                confusion=cm,
                scheme=scheme,
                seed=cfg["split.seed"],
                strategy=cfg["split.strategy"],
            )
        )
        er.confusion_to_pgm(cm, out_dir / f"confusion_s{subject}.pgm")
    (out_dir / "results.json").write_text(
        er.results_to_json(results, scheme, config=cfg.resolved)
    )
    table = er.subject_table(results)
    er.table_to_csv(table, out_dir / "table.csv")
    print(f"evaluated {len(results)} subject(s), average accuracy {table.average_percent}%")


def _cmd_export_images(cfg: PipelineConfig, out_dir: Path) -> None:
    trial_set = read_archive(cfg["paths.archive"])
    scheme = cfg["dataset.scheme"]
    chain = cfg.cascades()
    stft_cfg = cfg.stft_config()
    channel = cfg["export.channel"]
    if channel:
        if channel not in trial_set.channel_names:
            raise ValueError(f"export.channel: no channel named {channel!r}")
        ch = trial_set.channel_names.index(channel)
    elif "C6" in trial_set.channel_names:
        ch = trial_set.channel_names.index("C6")
    else:
        ch = 0
    fmt = cfg["export.format"]
    remaining = dict.fromkeys(ds.class_names(scheme))
    for trial in sorted(trial_set.trials, key=lambda t: t.key):
        label = ds.merge_classes(trial.raw_label, scheme)
        if label is None:
            continue
        name = label.name.lower()
        if remaining.get(name) is not None:
            continue
        if trial.n_samples < ds.SLICE_SAMPLES:
            raise ValueError(
                f"trial {trial.name} has {trial.n_samples} samples, need {ds.SLICE_SAMPLES}"
            )
        signal = trial.samples[ch]
        for cascade in chain:
            signal = apply_sos(cascade, signal)
        spect = log_power(stft(signal[: ds.SLICE_SAMPLES], stft_cfg))
        path = out_dir / f"spectrogram_{name}.{fmt}"
        export_image(spect, path, format=fmt)
        remaining[name] = str(path)
    missing = [name for name, path in remaining.items() if path is None]
    if missing:
        raise ValueError(f"archive has no trials for classes: {', '.join(missing)}")
    print(f"wrote {len(remaining)} images to {out_dir} (channel {trial_set.channel_names[ch]})")


def _pipeline_examples(cfg: PipelineConfig):
    trial_set = read_archive(cfg["paths.archive"])
    examples = ds.build_examples(
        trial_set, cfg.cascades(), cfg.stft_config(), cfg["dataset.scheme"]
    )
    return examples, trial_set


def _write_audit(cfg: PipelineConfig, out_dir: Path) -> None:
    lines = [f"{key}={value}" for key, value in cfg.resolved.items()]
    (out_dir / "resolved_config.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    sys.exit(main())
