"""Command-line front door: generate, ablate, eval, serve.

Exit codes are stable: 0 ok, 2 config error, 3 backend error, 4 environment
error.  ``TAUE_HOME`` selects the persistence root for ``serve``.
"""

from __future__ import annotations

import json
import os
import sys
import warnings
from pathlib import Path

import click
import numpy as np
import yaml

from . import metrics as me
from . import pipeline as pl

CROP_SWEEP = (0.25, 0.5, 0.75)
DEFAULT_LAMBDA_SWEEP = (0.0, 0.5, 1.0, 2.0)

EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_ENV = 4

#: top-level config keys that are not PipelineConfig fields
_EXTRA_KEYS = {"out", "lambda_sweep", "addr", "pool_size"}


def load_config_file(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        doc = yaml.safe_load(text)
    else:
        doc = json.loads(text)
    if not isinstance(doc, dict):
        raise pl.ConfigError(f"{path}: config must be a mapping")
    return doc


def split_config(doc: dict) -> tuple[pl.PipelineConfig, dict]:
    extras = {k: doc.pop(k) for k in list(doc) if k in _EXTRA_KEYS}
    return pl.PipelineConfig.from_dict(doc), extras


@click.group()
def main():
    """Training-free layered image generation toolkit."""


def _apply_overrides(cfg_dict: dict, seed, backend) -> dict:
    if seed is not None:
        cfg_dict["seed"] = seed
    if backend is not None:
        cfg_dict["backend"] = backend
    return cfg_dict


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@click.option("--backend", default=None)
@click.option("--out", default=None, type=click.Path())
def generate(config_path, seed, backend, out):
    """Run the full three-phase pipeline and write the output bundle."""
    try:
        doc = load_config_file(config_path)
        cfg, extras = split_config(_apply_overrides(doc, seed, backend))
    except (pl.ConfigError, ValueError) as e:
        _fail(EXIT_CONFIG, str(e))
    out_dir = Path(out or extras.get("out") or "taue_out")
    try:
        layers = pl.generate_layers(cfg)
    except pl.BackendError as e:
        _fail(EXIT_BACKEND, str(e))
    layers.save(out_dir)
    click.echo(json.dumps({"out": str(out_dir),
                           "config": cfg.to_dict(),
                           "metadata": layers.metadata}, indent=2))
    click.echo(f"report: {out_dir / 'metadata.json'}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--axis", required=True,
              type=click.Choice(["crop_ratio", "highpass", "lambda"]))
@click.option("--seed", type=int, default=None)
@click.option("--backend", default=None)
@click.option("--out", default=None, type=click.Path())
def ablate(config_path, axis, seed, backend, out):
    """Sweep one axis and report region-split metrics per cell."""
    try:
        doc = load_config_file(config_path)
        cfg, extras = split_config(_apply_overrides(doc, seed, backend))
    except (pl.ConfigError, ValueError) as e:
        _fail(EXIT_CONFIG, str(e))
    base = cfg.to_dict()
    if axis == "crop_ratio":
        cells = [(f"crop={r}", {"r_crop": r}) for r in CROP_SWEEP]
    elif axis == "highpass":
        cells = [("highpass=on", {"highpass": True}),
                 ("highpass=off", {"highpass": False})]
    else:
        sweep = extras.get("lambda_sweep", list(DEFAULT_LAMBDA_SWEEP))
        cells = [(f"lambda={v}", {"lambda": v}) for v in sweep]
    rows = []
    for label, delta in cells:
        cell_cfg = pl.PipelineConfig.from_dict({**base, **delta})
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                layers = pl.generate_layers(cell_cfg)
        except pl.BackendError as e:
            _fail(EXIT_BACKEND, str(e))
        rows.append((label, me.region_split_eval(layers).to_dict()))
    table = me.format_report_table(rows)
    click.echo(table)
    if out or extras.get("out"):
        out_dir = Path(out or extras["out"])
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"ablation_{axis}.json").write_text(
            json.dumps({"axis": axis, "rows": rows}, indent=2))
        (out_dir / f"ablation_{axis}.txt").write_text(table + "\n")


@main.command("eval")
@click.argument("layerset_dirs", nargs=-1, required=True,
                type=click.Path(exists=True))
@click.option("--annotations", default=None, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path())
def eval_cmd(layerset_dirs, annotations, out):
    """Region-split evaluation over saved layerset directories."""
    if annotations:
        anns = me.load_coco_annotations(annotations)
        kept = me.filter_benchmark(anns)
        click.echo(f"annotations: kept {len(kept)} of {len(anns)}")
    rows = []
    for d in layerset_dirs:
        try:
            layers = pl.LayerSet.load(Path(d))
        except (OSError, KeyError, ValueError) as e:
            click.echo(f"warning: skipping {d}: {e}", err=True)
            continue
        rows.append((Path(d).name, me.region_split_eval(layers).to_dict()))
    if rows:
        agg = {}
        for col in me.METRIC_COLUMNS:
            vals = [r[col] for _, r in rows if r[col] is not None]
            agg[col] = float(np.mean(vals)) if vals else None
        rows.append(("mean", agg))
    click.echo(me.format_report_table(rows))
    if out:
        Path(out).write_text(json.dumps({"rows": rows}, indent=2))


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--addr", default="127.0.0.1:8000")
def serve(config_path, addr):
    """Start the HTTP job service."""
    import uvicorn

    from .service import create_app

    extras = {}
    if config_path:
        try:
            doc = load_config_file(config_path)
            _, extras = split_config(doc)
        except (pl.ConfigError, ValueError) as e:
            _fail(EXIT_CONFIG, str(e))
    addr = extras.get("addr", addr)
    host, _, port = addr.partition(":")
    root = os.environ.get("TAUE_HOME")
    app = create_app(root=root, pool_size=int(extras.get("pool_size", 2)))
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    except OSError as e:
        _fail(EXIT_ENV, f"cannot bind {addr}: {e}")


if __name__ == "__main__":
    main()
