"""Dataset harness: LR generation, base ingestion, solving and reports."""
import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import imaging
from .errors import ConfigError, DimensionError
from .operators import KERNELS, DownsampleOperator
from .resample import bicubic_upsample
from .solver import SolverOptions, TvTvProblem, solve_tvtv

log = logging.getLogger(__name__)

BUILTIN_BICUBIC = "builtin:bicubic"
IMAGE_EXTS = (".png", ".pgm", ".ppm", ".pnm")
PER_IMAGE_HEADER = ["id", "psnr_base", "ssim_base", "psnr_ours", "ssim_ours",
                    "feas_inf", "seconds", "iters"]
SUMMARY_HEADER = ["shave", "images", "psnr_base", "ssim_base", "psnr_ours", "ssim_ours",
                  "psnr_gain", "ssim_gain", "frac_improved"]


@dataclass
class RunConfig:
    dataset: Path = None
    base: str = BUILTIN_BICUBIC
    scale: int = 2
    beta: float = 1.0
    kernel: str = "bicubic"
    phase: int = 0
    shave: int = 0
    clip: bool = False
    full_swing: bool = False
    out: Path = Path("tvtv_out")
    workers: int = 1
    save_images: bool = True
    solver: SolverOptions = field(default_factory=SolverOptions)

    def validate(self):
        if self.dataset is None or not Path(self.dataset).is_dir():
            raise ConfigError(f"dataset directory not found: {self.dataset}")
        if self.base != BUILTIN_BICUBIC and not Path(self.base).is_dir():
            raise ConfigError(f"base directory not found: {self.base}")
        if self.scale < 2:
            raise ConfigError(f"scale must be an integer >= 2, got {self.scale}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")
        if self.shave < 0:
            raise ConfigError("shave must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self


@dataclass
class MetricsRecord:
    id: str
    psnr_base: float
    ssim_base: float
    psnr_ours: float
    ssim_ours: float
    feas_inf: float
    seconds: float
    iters: int
    converged: bool = True
    # unshaved metrics, filled only when a border shave is configured
    full: dict = None


@dataclass
class RunResult:
    records: list
    failures: list
    out_dir: Path

    @property
    def exit_code(self):
        if not self.records:
            return 3
        return 2 if self.failures else 0


def list_images(directory):
    directory = Path(directory)
    return sorted(p for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_EXTS)


def find_base(base_dir, stem):
    """Base output for ``stem``: exact stem match, else a unique ``stem_*`` file."""
    files = list_images(base_dir)
    exact = [p for p in files if p.stem == stem]
    if exact:
        return exact[0]
    prefixed = [p for p in files if p.stem.startswith(stem + "_")]
    if len(prefixed) == 1:
        return prefixed[0]
    if prefixed:
        raise ConfigError(f"ambiguous base outputs for {stem!r}: {[p.name for p in prefixed]}")
    raise ConfigError(f"no base output for {stem!r} in {base_dir}")


def _match_side(side_y, hr_shape, crop_shape):
    if side_y.shape == crop_shape:
        return side_y
    if side_y.shape == hr_shape:
        return imaging.center_crop(side_y, crop_shape)
    raise DimensionError(f"base output is {side_y.shape}, ground truth is {hr_shape}")


def prepare_instance(hr, config, side=None):
    """Build the TV-TV problem for one HR image.

    Returns ``(problem, ground_truth_y)``. ``side`` is the base method's
    output as an image array; ``None`` selects the built-in bicubic base.
    """
    s = config.scale
    y_full = imaging.luminance(hr, config.full_swing)
    gt = imaging.crop_to_multiple(y_full, s)
    if gt.size == 0:
        raise DimensionError(f"image {y_full.shape} smaller than scale {s}")
    A = DownsampleOperator(gt.shape, s, config.kernel, config.phase)
    b = A.forward(imaging.vectorize(gt))
    if side is None:
        w = bicubic_upsample(imaging.devectorize(b, A.lr_shape), s)
    else:
        w = _match_side(imaging.luminance(side, config.full_swing), y_full.shape, gt.shape)
    problem = TvTvProblem(b, imaging.vectorize(w), gt.shape, s, config.kernel,
                          config.phase, config.beta)
    return problem, gt


def colorize(y_plane, hr_rgb, config):
    """RGB preview: super-resolved Y with bicubic-upsampled LR chroma."""
    s = config.scale
    ycc = imaging.rgb_to_ycbcr(imaging.crop_to_multiple(hr_rgb, s), config.full_swing)
    A = DownsampleOperator(y_plane.shape, s, config.kernel, config.phase)
    out = np.empty(ycc.shape)
    out[..., 0] = y_plane
    for c in (1, 2):
        lr = imaging.devectorize(A.forward(imaging.vectorize(ycc[..., c])), A.lr_shape)
        out[..., c] = bicubic_upsample(lr, s)
    return imaging.ycbcr_to_rgb(out, config.full_swing)


def _quality(est, gt, shave, clip):
    if clip:
        est = np.clip(est, 0.0, imaging.PEAK)
    est = imaging.shave_border(est, shave)
    gt = imaging.shave_border(gt, shave)
    return imaging.psnr(est, gt), imaging.ssim(est, gt)


def process_image(hr_path, config):
    """Solve one image, optionally write its PNG, and return its MetricsRecord."""
    hr_path = Path(hr_path)
    hr = imaging.read_image(hr_path)
    side = None
    if config.base != BUILTIN_BICUBIC:
        side = imaging.read_image(find_base(config.base, hr_path.stem))
    problem, gt = prepare_instance(hr, config, side)
    x_hat, rep = solve_tvtv(problem, config.solver)
    x_plane = imaging.devectorize(x_hat, gt.shape)
    w_plane = imaging.devectorize(problem.w, gt.shape)

    pb, sb = _quality(w_plane, gt, config.shave, config.clip)
    po, so = _quality(x_plane, gt, config.shave, config.clip)
    full = None
    if config.shave > 0:
        fpb, fsb = _quality(w_plane, gt, 0, config.clip)
        fpo, fso = _quality(x_plane, gt, 0, config.clip)
        full = {"psnr_base": fpb, "ssim_base": fsb, "psnr_ours": fpo, "ssim_ours": fso}
    record = MetricsRecord(hr_path.stem, pb, sb, po, so, rep.feas_inf,
                           max(rep.seconds, 1e-9), rep.iterations, rep.converged, full)
    if config.save_images:
        out_img = colorize(x_plane, hr, config) if hr.ndim == 3 else x_plane
        name = f"{hr_path.stem}_x{config.scale}_tvtv.png"
        imaging.write_image(Path(config.out) / name, out_img)
    return record


def _job(args):
    path, config = args
    try:
        return process_image(path, config), None
    except Exception as exc:  # recorded per image, the run carries on
        log.error("%s failed: %s", Path(path).name, exc)
        return None, (Path(path).stem, f"{type(exc).__name__}: {exc}")


def run_dataset(config):
    """Solve every image of the dataset and write the report files."""
    config.validate()
    paths = list_images(config.dataset)
    if not paths:
        raise ConfigError(f"no images in {config.dataset}")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(p, config) for p in paths]
    if config.workers == 1:
        results = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_job, jobs))
    records = [r for r, _ in results if r is not None]
    failures = [f for _, f in results if f is not None]
    result = RunResult(records, failures, out)
    if records:
        write_reports(result, config)
    if failures:
        with open(out / "failures.csv", "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["id", "error"])
            wr.writerows(failures)
    return result


def _fmt_db(v):
    return "inf" if math.isinf(v) else f"{v:.4f}"


def _mean(values):
    return float(np.mean(values)) if values else float("nan")


def summarize(rows):
    """Dataset averages of ``(id, psnr_base, ssim_base, psnr_ours, ssim_ours)`` rows."""
    ours = {r[0]: (r[3], r[4]) for r in rows}
    base = {r[0]: (r[1], r[2]) for r in rows}
    gains = compare_report(ours, base)
    return {
        "images": len(rows),
        "psnr_base": _mean([r[1] for r in rows]),
        "ssim_base": _mean([r[2] for r in rows]),
        "psnr_ours": _mean([r[3] for r in rows]),
        "ssim_ours": _mean([r[4] for r in rows]),
        "psnr_gain": gains.mean_psnr_delta,
        "ssim_gain": gains.mean_ssim_delta,
        "frac_improved": gains.frac_improved,
    }


def write_reports(result, config):
    out = Path(result.out_dir)
    recs = sorted(result.records, key=lambda r: r.id)
    with open(out / "per_image.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(PER_IMAGE_HEADER)
        for r in recs:
            wr.writerow([r.id, _fmt_db(r.psnr_base), f"{r.ssim_base:.4f}", _fmt_db(r.psnr_ours),
                         f"{r.ssim_ours:.4f}", f"{r.feas_inf:.3e}", f"{r.seconds:.3f}", r.iters])

    summaries = [(config.shave, summarize(
        [(r.id, r.psnr_base, r.ssim_base, r.psnr_ours, r.ssim_ours) for r in recs]))]
    if config.shave > 0:
        summaries.append((0, summarize(
            [(r.id, r.full["psnr_base"], r.full["ssim_base"], r.full["psnr_ours"],
              r.full["ssim_ours"]) for r in recs])))
    with open(out / "summary.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(SUMMARY_HEADER)
        for shave, s in summaries:
            wr.writerow([shave, s["images"], _fmt_db(s["psnr_base"]), f"{s['ssim_base']:.4f}",
                         _fmt_db(s["psnr_ours"]), f"{s['ssim_ours']:.4f}",
                         f"{s['psnr_gain']:.4f}", f"{s['ssim_gain']:.4f}",
                         f"{s['frac_improved']:.4f}"])

    with open(out / "timing.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["id", "seconds", "iters", "converged"])
        for r in recs:
            wr.writerow([r.id, f"{r.seconds:.3f}", r.iters, int(r.converged)])
        wr.writerow(["TOTAL", f"{sum(r.seconds for r in recs):.3f}",
                     sum(r.iters for r in recs), ""])


@dataclass
class GainSummary:
    psnr_delta: dict
    ssim_delta: dict
    mean_psnr_delta: float
    mean_ssim_delta: float
    frac_improved: float


def compare_report(ours, base):
    """Per-image and mean PSNR/SSIM deltas of ``ours`` over ``base``.

    Both arguments map image id to ``(psnr, ssim)``. An image counts as
    improved when its PSNR delta is positive.
    """
    if set(ours) != set(base):
        raise ValueError(f"record ids differ: {sorted(set(ours) ^ set(base))}")
    ids = sorted(ours)
    dp, ds = {}, {}
    for i in ids:
        po, pb = ours[i][0], base[i][0]
        dp[i] = 0.0 if po == pb else po - pb
        ds[i] = ours[i][1] - base[i][1]
    n = len(ids)
    return GainSummary(
        psnr_delta=dp, ssim_delta=ds,
        mean_psnr_delta=sum(dp.values()) / n if n else 0.0,
        mean_ssim_delta=sum(ds.values()) / n if n else 0.0,
        frac_improved=sum(1 for v in dp.values() if v > 0) / n if n else 0.0,
    )


def read_per_image(path):
    """Load a ``per_image.csv`` as a list of dicts with numeric fields."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in PER_IMAGE_HEADER[1:-1]:
            r[k] = float(r[k])
        r["iters"] = int(r["iters"])
    return rows


def metrics_dirs(ref_dir, test_dir, shave=0, full_swing=False, clip=False):
    """PSNR/SSIM of every test image against the matching reference (Y channel).

    Test files match a reference by equal stem or by a ``<stem>_`` prefix.
    References are center-cropped to the test size when they are larger.
    """
    tests = list_images(test_dir)
    rows = []
    for ref in list_images(ref_dir):
        hits = [t for t in tests if t.stem == ref.stem or t.stem.startswith(ref.stem + "_")]
        if not hits:
            log.warning("no test image for %s", ref.name)
            continue
        gt = imaging.luminance(imaging.read_image(ref), full_swing)
        est = imaging.luminance(imaging.read_image(hits[0]), full_swing)
        if est.shape != gt.shape:
            gt = imaging.center_crop(gt, est.shape)
        p, s = _quality(est, gt, shave, clip)
        rows.append((ref.stem, p, s))
    return rows


def solve_single(lr_path, side, scale, out_path, config=None):
    """Super-resolve one LR file given a side-information file (or the builtin base).

    Returns the :class:`~tvtv.solver.SolveReport`.
    """
    cfg = replace(config or RunConfig(), scale=scale)
    lr = imaging.read_image(lr_path)
    b_plane = imaging.luminance(lr, cfg.full_swing)
    hr_shape = (b_plane.shape[0] * scale, b_plane.shape[1] * scale)
    if side == BUILTIN_BICUBIC:
        w = bicubic_upsample(b_plane, scale)
    else:
        w = imaging.luminance(imaging.read_image(side), cfg.full_swing)
        if w.shape != hr_shape:
            raise DimensionError(f"side image is {w.shape}, expected {hr_shape}")
    problem = TvTvProblem(imaging.vectorize(b_plane), imaging.vectorize(w), hr_shape, scale,
                          cfg.kernel, cfg.phase, cfg.beta)
    x_hat, rep = solve_tvtv(problem, cfg.solver)
    x_plane = imaging.devectorize(x_hat, hr_shape)
    if lr.ndim == 3:
        ycc = imaging.rgb_to_ycbcr(lr, cfg.full_swing)
        out = np.empty(hr_shape + (3,))
        out[..., 0] = x_plane
        for c in (1, 2):
            out[..., c] = bicubic_upsample(ycc[..., c], scale)
        x_plane = imaging.ycbcr_to_rgb(out, cfg.full_swing)
    os.makedirs(Path(out_path).parent or ".", exist_ok=True)
    imaging.write_image(out_path, x_plane)
    return rep


def parse_config_file(path):
    """Flat ``key = value`` file; ``#`` starts a comment. Keys use - or _."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, val = (t.strip() for t in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


_SOLVER_KEYS = {f.name for f in fields(SolverOptions)}
_SOLVER_ALIASES = {"max_iters": "max_iter"}
_RUN_TYPES = {"dataset": Path, "base": str, "scale": int, "beta": float, "kernel": str,
              "phase": int, "shave": int, "clip": "bool", "full_swing": "bool", "out": Path,
              "workers": int, "save_images": "bool"}


def _to_bool(val):
    if isinstance(val, bool):
        return val
    low = str(val).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {val!r}")


def build_config(values):
    """RunConfig from a flat mapping of option names to (string or typed) values."""
    run_kw, solver_kw = {}, {}
    defaults = SolverOptions()
    for key, val in values.items():
        if val is None:
            continue
        key = _SOLVER_ALIASES.get(key, key)
        try:
            if key in _RUN_TYPES:
                typ = _RUN_TYPES[key]
                run_kw[key] = _to_bool(val) if typ == "bool" else typ(val)
            elif key in _SOLVER_KEYS:
                typ = type(getattr(defaults, key))
                solver_kw[key] = _to_bool(val) if typ is bool else typ(val)
            else:
                raise ConfigError(f"unknown option {key!r}")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {val!r}") from exc
    try:
        solver = SolverOptions(**solver_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(solver=solver, **run_kw)
