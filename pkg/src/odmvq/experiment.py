"""Method presets and the batch experiment runner.

An experiment trains every (method, noise level, seed) cell, writes its
label map, quantized image and codebook, and appends one row of fidelity and
validity indices to ``metrics.csv``. Afterwards it writes per-noise-level
similarity matrices and per-index "value vs noise" plot data.

Output layout (a pure function of the ExperimentSpec)::

    <output>/metrics.csv            normalised scale (L_max = 1)
    <output>/metrics_255.csv        same rows on the 0..255 scale
    <output>/failures.csv           cells that raised, with the error text
    <output>/cells/<method>/n<noise>_s<seed>/{labels.pgm,quantized.mbi,codebook.txt}
    <output>/similarity/chi2_n<noise>.csv, ftest_n<noise>.csv
    <output>/plots/<INDEX>_<method>.dat
"""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import io as fileio
from .clustering import TrainConfig, XMeansConfig, fcm_train, kmeans_train, som_train, xmeans_select
from .core import Codebook, ContractError, MultibandImage, classify, quantize
from .metrics import fidelity, validity
from .odc import OdcConfig, odc_train
from .odm import OdmConfig
from .optkmeans import OptKmConfig, opt_kmeans_train
from .phantom import ClusterSpec, PhantomSpec, add_noise, generate_phantom, separated_means
from .stats import IndexSample, StatsError, chi2_similarity, f_test, summarize

__all__ = [
    "SpecError",
    "PRESETS",
    "METRIC_COLUMNS",
    "ExperimentSpec",
    "MethodOutput",
    "RunSummary",
    "train_method",
    "load_spec",
    "run_experiment",
    "similarity_tables",
    "read_metrics",
    "output_root",
]

log = logging.getLogger(__name__)

OUTPUT_ENV = "ODMVQ_OUTPUT_DIR"

METRIC_COLUMNS = ("method", "noise_pct", "seed", "me", "mae", "mse", "rmse", "nmse", "psnr_db", "snr_db",
                  "j_e", "d_max", "d_min", "j_o", "db", "xb", "classes_final", "evaluations", "wall_ms")

# indices entering the chi-square similarity, in cell order
CHI2_INDICES = ("me", "mae", "rmse", "psnr_db")
F_INDICES = ("me", "mae", "mse", "rmse", "psnr_db")
PLOT_INDICES = {"ME": "me", "MAE": "mae", "RMSE": "rmse", "PSNR": "psnr_db", "EQ": "j_e", "IC": "j_o"}


class SpecError(ContractError):
    """The experiment description is invalid."""


_ODM_KM = dict(class_count=13, initial_poles=20, historical_phases=10, phase_length=20, initial_step=0.99,
               step_decay=0.9999, min_contradiction=0.1, max_contradiction=0.9, max_crisis=0.9,
               objective_threshold=0.01, max_poles=40, warm_start_iterations=5, subsample=1.0)

PRESETS = {
    "KO": ("som", dict(class_count=13, max_iterations=200, initial_rate=0.1, neighborhood="gaussian",
                       initial_radius=None)),
    "KO-RECT": ("som", dict(class_count=13, max_iterations=200, initial_rate=0.1, neighborhood="rectangular",
                            initial_radius=None)),
    "CM": ("fcm", dict(class_count=13, max_iterations=200, fuzziness=2.0)),
    "KM": ("kmeans", dict(class_count=13, max_iterations=200, initial_rate=0.1)),
    "XM": ("xmeans", dict(min_classes=10, max_classes=14, max_iterations=200, initial_rate=0.1,
                          score="omran_index")),
    "ODC-CAN": ("odc", dict(initial_poles=14, historical_phases=2, phase_length=150, initial_step=0.1,
                            step_decay=0.9999, min_force=0.05, min_contradiction=0.01, max_contradiction=0.98,
                            max_crisis=0.35, max_poles=12, membership="canonical", synthesis=False,
                            intensity_scale=255.0)),
    "ODC-PME": ("odc", dict(initial_poles=14, historical_phases=2, phase_length=150, initial_step=0.1,
                            step_decay=0.9999, min_force=0.05, min_contradiction=0.01, max_contradiction=0.98,
                            max_crisis=0.35, max_poles=12, membership="max_entropy", synthesis=False,
                            intensity_scale=255.0)),
    "EQ-CAN-KM": ("optkm", dict(_ODM_KM, objective="quantization_error", membership="canonical")),
    "IC-CAN-KM": ("optkm", dict(_ODM_KM, objective="omran_index", membership="canonical")),
    "EQ-PME-KM": ("optkm", dict(_ODM_KM, objective="quantization_error", membership="max_entropy")),
    "IC-PME-KM": ("optkm", dict(_ODM_KM, objective="omran_index", membership="max_entropy")),
}


@dataclass
class MethodOutput:
    codebook: Codebook
    classes_final: int
    evaluations: int
    trace: list = field(default_factory=list)


def _take(params: dict, keys: Sequence[str]) -> dict:
    return {k: params[k] for k in keys if k in params}


def _train_som(image, p, seed):
    cfg = TrainConfig(rng_seed=seed, **_take(p, ("class_count", "max_iterations", "initial_rate",
                                                 "neighborhood", "initial_radius")))
    return MethodOutput(som_train(image, cfg), cfg.class_count, cfg.max_iterations)


def _train_kmeans(image, p, seed):
    cfg = TrainConfig(rng_seed=seed, **_take(p, ("class_count", "max_iterations", "initial_rate")))
    return MethodOutput(kmeans_train(image, cfg), cfg.class_count, cfg.max_iterations)


def _train_fcm(image, p, seed):
    cfg = TrainConfig(rng_seed=seed, **_take(p, ("class_count", "max_iterations", "fuzziness")))
    res = fcm_train(image, cfg)
    return MethodOutput(res.codebook, cfg.class_count, res.iterations)


def _train_xmeans(image, p, seed):
    inner = TrainConfig(rng_seed=seed, **_take(p, ("max_iterations", "initial_rate")))
    cfg = XMeansConfig(p["min_classes"], p["max_classes"], inner, p.get("score", "omran_index"))
    res = xmeans_select(image, cfg)
    runs = cfg.max_classes - cfg.min_classes + 1
    return MethodOutput(res.codebook, res.best_classes, runs * inner.max_iterations)


def _train_odc(image, p, seed):
    cfg = OdcConfig(rng_seed=seed, **_take(p, OdcConfig.__dataclass_fields__))
    model = odc_train(image, cfg)
    return MethodOutput(model.codebook, model.codebook.size, cfg.historical_phases * cfg.phase_length)


def _train_optkm(image, p, seed):
    odm = OdmConfig(rng_seed=seed, direction="minimize", **_take(p, (
        "initial_poles", "historical_phases", "phase_length", "initial_step", "step_decay",
        "min_contradiction", "max_contradiction", "max_crisis", "objective_threshold", "max_poles",
        "membership")))
    cfg = OptKmConfig(odm=odm, **_take(p, ("class_count", "objective", "warm_start_iterations", "subsample")))
    res = opt_kmeans_train(image, cfg)
    return MethodOutput(res.codebook, res.codebook.size, res.odm.evaluations, res.odm.trace)


TRAINERS: dict = {
    "som": _train_som,
    "kmeans": _train_kmeans,
    "fcm": _train_fcm,
    "xmeans": _train_xmeans,
    "odc": _train_odc,
    "optkm": _train_optkm,
}


def method_params(method: str, overrides: Optional[dict] = None) -> tuple:
    """Return ``(kind, params)`` for a preset name with string or typed overrides applied."""
    if method not in PRESETS:
        raise SpecError(f"unknown method {method!r}; known: {', '.join(PRESETS)}")
    kind, defaults = PRESETS[method]
    params = dict(defaults)
    for key, value in (overrides or {}).items():
        if key not in params:
            raise SpecError(f"{method}: unknown parameter {key!r}")
        params[key] = _coerce(value, defaults[key]) if isinstance(value, str) else value
    return kind, params


def _coerce(text: str, default):
    text = text.strip()
    if text.lower() in ("none", ""):
        return None
    if isinstance(default, bool):
        if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise SpecError(f"expected a boolean, got {text!r}")
        return text.lower() in ("true", "1", "yes")
    try:
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float) or default is None:
            return float(text)
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    return text


def train_method(method: str, image: MultibandImage, seed: int, overrides: Optional[dict] = None) -> MethodOutput:
    kind, params = method_params(method, overrides)
    return TRAINERS[kind](image, params, seed)


@dataclass(frozen=True)
class ExperimentSpec:
    methods: tuple
    noise_levels: tuple = (0.0,)
    seeds: tuple = (0,)
    output: Optional[str] = None
    phantom: Optional[PhantomSpec] = None
    input_paths: tuple = ()
    overrides: dict = field(default_factory=dict)
    timing: bool = False

    def __post_init__(self):
        if not self.methods:
            raise SpecError("at least one method is required")
        if self.phantom is None and not self.input_paths:
            raise SpecError("an input (phantom or band files) is required")
        for m in self.methods:
            method_params(m, self.overrides.get(m))
        if not self.noise_levels or not self.seeds:
            raise SpecError("need at least one noise level and one seed")


@dataclass
class RunSummary:
    output: Path
    rows: list
    failures: list

    @property
    def exit_code(self) -> int:
        return 2 if self.failures else 0


def output_root(spec_output: Optional[str]) -> Path:
    return Path(spec_output or os.environ.get(OUTPUT_ENV) or "odmvq-output")


def _floats(text: str) -> list:
    return [float(v) for v in text.replace(",", " ").split()]


def parse_cluster(text: str) -> ClusterSpec:
    fields = {}
    for part in text.split(";"):
        if part.strip():
            key, _, value = part.partition("=")
            fields[key.strip()] = value.strip()
    try:
        std = _floats(fields.get("std", "0"))
        return ClusterSpec(tuple(_floats(fields["mean"])), std[0] if len(std) == 1 else tuple(std),
                           float(fields.get("fraction", "1")))
    except (KeyError, ValueError) as exc:
        raise SpecError(f"bad cluster description {text!r}: {exc}") from None


def phantom_from_section(sec) -> PhantomSpec:
    height, width, bands = int(sec.get("height", "64")), int(sec.get("width", "64")), int(sec.get("bands", "3"))
    clusters = [parse_cluster(sec[k]) for k in sorted(sec) if k.startswith("cluster")]
    if not clusters and "random_clusters" in sec:
        k = int(sec["random_clusters"])
        means = separated_means(k, bands, seed=int(sec.get("layout_seed", "0")),
                                min_gap=float(sec.get("min_gap", "0.3")))
        std = float(sec.get("std", "0.03"))
        clusters = [ClusterSpec(tuple(m), std, 1.0 / k) for m in means]
    return PhantomSpec(height, width, bands, clusters)


def load_spec(path) -> ExperimentSpec:
    """Parse an INI experiment description.

    Sections: ``[experiment]`` (methods, noise_levels, seeds, output, timing),
    ``[phantom]`` or ``[input]`` (``bands = a.pgm, b.pgm``) and optional
    ``[method NAME]`` overrides.
    """
    parser = configparser.ConfigParser()
    try:
        if not parser.read(path):
            raise SpecError(f"cannot read experiment spec {path}")
        exp = parser["experiment"]
        methods = tuple(m.strip() for m in exp.get("methods", "").split(",") if m.strip())
        noise = tuple(_floats(exp.get("noise_levels", "0")))
        seeds = tuple(int(s) for s in exp.get("seeds", "0").replace(",", " ").split())
        timing = exp.getboolean("timing", fallback=False)
        phantom = phantom_from_section(parser["phantom"]) if parser.has_section("phantom") else None
        inputs = ()
        if parser.has_section("input"):
            base = Path(path).parent
            inputs = tuple(str(base / p.strip()) for p in parser["input"].get("bands", "").split(",") if p.strip())
        overrides = {s.split(None, 1)[1].strip(): dict(parser[s]) for s in parser.sections()
                     if s.startswith("method ")}
        return ExperimentSpec(methods, noise, seeds, exp.get("output"), phantom, inputs, overrides, timing)
    except (KeyError, ValueError, configparser.Error) as exc:
        raise SpecError(f"invalid experiment spec {path}: {exc}") from None


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return str(value)


def _noise_tag(noise: float) -> str:
    return f"{noise:g}"


def _metric_row(method, noise, seed, image, out: MethodOutput, wall_ms) -> tuple:
    labels = classify(image, out.codebook)
    quant = quantize(image, out.codebook, labels)
    fid = fidelity(image, quant)
    val = validity(image, out.codebook, labels)
    row = dict(method=method, noise_pct=_noise_tag(noise), seed=seed, me=fid.me, mae=fid.mae, mse=fid.mse,
               rmse=fid.rmse, nmse=fid.nmse, psnr_db=fid.psnr, snr_db=fid.snr, j_e=val.j_e, d_max=val.d_max,
               d_min=val.d_min, j_o=val.j_o, db=val.db, xb=val.xb, classes_final=out.classes_final,
               evaluations=out.evaluations, wall_ms=wall_ms)
    return row, labels, quant


def _rescale_row(row: dict, scale: float) -> dict:
    out = dict(row)
    for key in ("me", "mae", "rmse", "j_e", "d_max", "d_min"):
        out[key] = row[key] * scale
    out["mse"] = row["mse"] * scale * scale
    # every term of J_o is linear in the intensity scale once L_max scales too
    out["j_o"] = row["j_o"] * scale
    return out


def _write_csv(path: Path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c, "")) for c in columns])
    path.write_text(buf.getvalue())


def read_metrics(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in METRIC_COLUMNS[3:]:
            if key in row and row[key] != "":
                row[key] = float(row[key])
    return rows


def _input_image(spec: ExperimentSpec, noise: float, seed: int) -> MultibandImage:
    if spec.phantom is not None:
        return generate_phantom(spec.phantom.with_noise(noise), seed)[0]
    return add_noise(fileio.ingest(spec.input_paths), noise, seed)


def similarity_tables(rows: Sequence[dict], methods: Sequence[str]) -> dict:
    """Per noise level: ``{"chi2": matrix rows, "ftest": long rows}``."""
    tables = {}
    noises = sorted({float(r["noise_pct"]) for r in rows})
    for noise in noises:
        at = [r for r in rows if float(r["noise_pct"]) == noise]
        samples = {}
        for m in methods:
            mine = [r for r in at if r["method"] == m]
            if mine:
                samples[m] = {k: summarize([float(r[k]) for r in mine]) for k in F_INDICES}
        present = [m for m in methods if m in samples]
        chi2 = []
        for a in present:
            row = {"method": a}
            for b in present:
                try:
                    row[b] = chi2_similarity([samples[a][k] for k in CHI2_INDICES],
                                             [samples[b][k] for k in CHI2_INDICES]).p_value
                except StatsError:
                    row[b] = math.nan
            chi2.append(row)
        ftest = []
        for i, a in enumerate(present):
            for b in present[i + 1:]:
                for k in F_INDICES:
                    try:
                        res = f_test(samples[a][k], samples[b][k])
                        stat, p = res.statistic, res.p_value
                    except StatsError:
                        stat = p = math.nan
                    ftest.append({"method_a": a, "method_b": b, "index": k, "statistic": stat, "p_value": p})
        tables[noise] = {"methods": present, "chi2": chi2, "ftest": ftest, "samples": samples}
    return tables


def write_similarity(root: Path, rows: Sequence[dict], methods: Sequence[str]) -> list:
    sim_dir = root / "similarity"
    sim_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for noise, tab in similarity_tables(rows, methods).items():
        p = sim_dir / f"chi2_n{_noise_tag(noise)}.csv"
        _write_csv(p, ["method"] + tab["methods"], tab["chi2"])
        q = sim_dir / f"ftest_n{_noise_tag(noise)}.csv"
        _write_csv(q, ["method_a", "method_b", "index", "statistic", "p_value"], tab["ftest"])
        written += [p, q]
    return written


def write_plot_data(root: Path, rows: Sequence[dict], methods: Sequence[str]) -> None:
    plot_dir = root / "plots"
    plot_dir.mkdir(parents=True, exist_ok=True)
    for name, key in PLOT_INDICES.items():
        for m in methods:
            mine = [r for r in rows if r["method"] == m]
            if not mine:
                continue
            lines = ["# noise_pct mean mean_deviation"]
            for noise in sorted({float(r["noise_pct"]) for r in mine}):
                s = summarize([float(r[key]) for r in mine if float(r["noise_pct"]) == noise])
                lines.append(f"{noise!r} {s.mean!r} {s.mean_deviation!r}")
            (plot_dir / f"{name}_{m}.dat").write_text("\n".join(lines) + "\n")


def run_experiment(spec: ExperimentSpec, output: Optional[str] = None,
                   trainer: Callable[..., MethodOutput] = train_method) -> RunSummary:
    """Run every cell; a failing cell is logged to ``failures.csv`` and the run continues."""
    root = output_root(output or spec.output)
    root.mkdir(parents=True, exist_ok=True)
    rows, failures = [], []
    for method in spec.methods:
        for noise in spec.noise_levels:
            for seed in spec.seeds:
                cell = root / "cells" / method / f"n{_noise_tag(noise)}_s{seed}"
                try:
                    image = _input_image(spec, noise, seed)
                    start = time.perf_counter()
                    out = trainer(method, image, seed, spec.overrides.get(method))
                    wall = round((time.perf_counter() - start) * 1000.0, 3) if spec.timing else ""
                    row, labels, quant = _metric_row(method, noise, seed, image, out, wall)
                    cell.mkdir(parents=True, exist_ok=True)
                    fileio.write_labels(cell / "labels.pgm", labels)
                    fileio.save_image(cell / "quantized.mbi", quant)
                    fileio.write_codebook(cell / "codebook.txt", out.codebook,
                                          {"method": method, "noise_pct": _noise_tag(noise), "seed": seed})
                    rows.append(row)
                except Exception as exc:  # recorded per cell; the run continues
                    log.warning("cell %s noise=%g seed=%d failed: %s", method, noise, seed, exc)
                    failures.append({"method": method, "noise_pct": _noise_tag(noise), "seed": seed,
                                     "error": f"{type(exc).__name__}: {exc}"})

    _write_csv(root / "metrics.csv", METRIC_COLUMNS, rows)
    _write_csv(root / "metrics_255.csv", METRIC_COLUMNS, [_rescale_row(r, 255.0) for r in rows])
    _write_csv(root / "failures.csv", ("method", "noise_pct", "seed", "error"), failures)
    write_similarity(root, rows, spec.methods)
    write_plot_data(root, rows, spec.methods)
    return RunSummary(root, rows, failures)
