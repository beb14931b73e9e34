"""Experiment harness: comparison grids, the one-level entropy study and reporting.

Configs are INI files (see ``configs/``).  Every grid cell is one
(algorithm, n vectors -> K, repetition) triple; cells that cannot run are kept
in the result with a failure reason instead of aborting the grid.
"""
from __future__ import annotations

import configparser
import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import signals
from .baselines import birch, gmm_em, kmeans
from .baselines.birch import default_threshold
from .baselines.common import nearest_centroid
from .cortex import CortexParams, CortexTree
from .errors import ConfigurationError, CortexVQError, UndertrainedTreeError
from .metrics import Phase, gain, rmse_distortion, shannon_entropy, timed
from .transform import NormalizationSpec, NormMode, dwpt_forward, dwpt_inverse, estimate_r_init

ALGORITHMS = ("cortex", "birch", "kmeans", "gmm")
CSV_COLUMNS = ("algorithm", "n", "K", "rep", "seed", "train_rmse", "test_rmse", "wall_s",
               "entropy", "gain")
TEST_SEED_OFFSET = 10_000


def _floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def _grid_points(text):
    points = []
    for item in text.replace(",", " ").split():
        n, _, k = item.partition(":")
        points.append((int(float(n)), int(k)))
    return points


@dataclass
class CortexSettings:
    maturity_threshold: float = 50.0
    k_adapt: float = 0.75
    n_power: float = 0.5
    k_range_power: float = 1.0
    l_base: float = 1.0
    k_base: float = 1.0
    epochs: int = 1
    r_limit_fraction: float = 0.05   # r_limit as a fraction of each level's r_init
    sweep: bool = True               # search r_limit_fraction to land near the target K
    k_tolerance: float = 0.10
    sweep_steps: int = 24

    def params(self, r_init, fraction):
        return CortexParams(r_init=tuple(r_init), r_limit=tuple(fraction * r for r in r_init),
                            maturity_threshold=self.maturity_threshold, k_adapt=self.k_adapt,
                            n_power=self.n_power, k_range_power=self.k_range_power,
                            l_base=self.l_base, k_base=self.k_base)


@dataclass
class ExperimentConfig:
    source: str = "basic_waves"
    window: int = 8
    stride: int = 1
    normalization: str = NormMode.PER_STREAM_MAX_ABS.value
    scale: float = 1.0
    grid: list = field(default_factory=lambda: [(16000, 330)])
    algorithms: tuple = ALGORITHMS
    seeds: tuple = (0,)
    repetitions: int = 3
    test_seed_offset: int = TEST_SEED_OFFSET
    cortex: CortexSettings = field(default_factory=CortexSettings)
    birch_threshold: float = 0.0      # 0 means derive from the data
    birch_branching: int = 50
    kmeans_n_init: int = 1
    gmm_tol: float = 0.01
    gmm_max_iter: int = 100
    out_dir: str = "results"
    serial_timing: bool = True

    def validate(self):
        if not self.algorithms:
            raise ConfigurationError("algorithm list is empty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ConfigurationError(f"unknown algorithms: {sorted(unknown)}")
        if self.source not in ("basic_waves", "lorenz", "gaussian_mixture"):
            raise ConfigurationError(f"unknown source {self.source!r}")
        if not signals.is_power_of_two(self.window) or self.window < 2:
            raise ConfigurationError("window must be a power of two >= 2")
        if not 1 <= self.stride <= self.window:
            raise ConfigurationError("stride must lie in [1, window]")
        if not self.grid:
            raise ConfigurationError("grid is empty")
        for n, k in self.grid:
            if not 1 <= k <= n:
                raise ConfigurationError(f"grid point {n}->{k} needs 1 <= K <= n")
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be >= 1")
        NormMode(self.normalization)
        return self

    @classmethod
    def from_ini(cls, path_or_text):
        parser = configparser.ConfigParser()
        if "\n" in str(path_or_text) or "[" in str(path_or_text):
            parser.read_string(str(path_or_text))
        else:
            if not Path(path_or_text).is_file():
                raise ConfigurationError(f"config file not found: {path_or_text}")
            parser.read(path_or_text)
        return cls.from_parser(parser)

    @classmethod
    def from_parser(cls, p):
        cfg = cls()
        ds = p["dataset"] if p.has_section("dataset") else {}
        cfg.source = ds.get("source", cfg.source)
        cfg.window = int(ds.get("window", cfg.window))
        cfg.stride = int(ds.get("stride", cfg.stride))
        if p.has_section("transform"):
            cfg.normalization = p["transform"].get("normalization", cfg.normalization)
            cfg.scale = float(p["transform"].get("scale", cfg.scale))
        if p.has_section("grid"):
            g = p["grid"]
            cfg.grid = _grid_points(g.get("points", "16000:330"))
            cfg.seeds = tuple(int(s) for s in g.get("seeds", "0").replace(",", " ").split())
            cfg.repetitions = int(g.get("repetitions", cfg.repetitions))
            cfg.test_seed_offset = int(g.get("test_seed_offset", cfg.test_seed_offset))
        if p.has_section("algorithms"):
            names = p["algorithms"].get("names", ",".join(ALGORITHMS))
            cfg.algorithms = tuple(a.strip() for a in names.split(",") if a.strip())
        if p.has_section("cortex"):
            c = p["cortex"]
            cs = CortexSettings()
            for f in ("maturity_threshold", "k_adapt", "n_power", "k_range_power", "l_base",
                      "k_base", "r_limit_fraction", "k_tolerance"):
                if f in c:
                    setattr(cs, f, float(c[f]))
            for f in ("epochs", "sweep_steps"):
                if f in c:
                    setattr(cs, f, int(c[f]))
            if "sweep" in c:
                cs.sweep = c.getboolean("sweep")
            cfg.cortex = cs
        if p.has_section("birch"):
            cfg.birch_threshold = float(p["birch"].get("threshold", 0.0))
            cfg.birch_branching = int(p["birch"].get("branching", 50))
        if p.has_section("kmeans"):
            cfg.kmeans_n_init = int(p["kmeans"].get("n_init", 1))
        if p.has_section("gmm"):
            cfg.gmm_tol = float(p["gmm"].get("tol", cfg.gmm_tol))
            cfg.gmm_max_iter = int(p["gmm"].get("max_iter", cfg.gmm_max_iter))
        if p.has_section("output"):
            cfg.out_dir = p["output"].get("dir", cfg.out_dir)
        return cfg.validate()


# data preparation

def make_stream(source, n_frames, window, stride, seed, offset_frames=0):
    """A stream that frames into exactly ``n_frames`` vectors.

    Lorenz has no randomness, so its "seed" selects a later stretch of the same
    trajectory: ``offset_frames`` frames are skipped before the kept part.
    """
    length = (n_frames - 1) * stride + window
    if source == "basic_waves":
        return signals.basic_waves_for_frames(n_frames, window, stride, seed)
    if source == "lorenz":
        skip = offset_frames * stride
        cfg = signals.LorenzConfig(n_steps=length + skip)
        full = signals.gen_lorenz(cfg)
        return signals.SampleStream(full.samples[skip:], full.sample_rate_hz, full.source, seed)
    if source == "gaussian_mixture":
        base = signals.GaussianMixtureConfig().components
        total = sum(c[2] for c in base)
        counts = [max(1, int(round(length * c[2] / total))) for c in base]
        counts[-1] += length - sum(counts)
        comps = tuple((m, s, n) for (m, s, _), n in zip(base, counts))
        return signals.gen_gaussian_mixture(signals.GaussianMixtureConfig(components=comps, seed=seed))
    raise ConfigurationError(f"unknown source {source!r}")


@dataclass
class PreparedData:
    frames: np.ndarray
    coeffs: np.ndarray
    spec: NormalizationSpec


def prepare(stream, window, stride, spec=None, mode=NormMode.PER_STREAM_MAX_ABS, scale=1.0):
    frames = signals.frame_matrix(stream.samples, window, stride)
    if spec is None:
        spec = NormalizationSpec.fit(stream.samples, mode, scale)
    coeffs = dwpt_forward(frames / spec.scale)
    return PreparedData(frames, coeffs, spec)


def reconstruct(codebook, data: PreparedData):
    idx = codebook.encode_batch(data.coeffs)
    rec = dwpt_inverse(codebook.decode_batch(idx)) * data.spec.scale
    return idx, rec


# algorithm drivers; each returns (codebook, build seconds, info)

def train_cortex(coeffs, settings: CortexSettings, fraction, spec=None):
    r_init = estimate_r_init(coeffs)
    params = settings.params(r_init, fraction)

    def build():
        tree = CortexTree(coeffs.shape[1], params)
        tree.train(coeffs, settings.epochs)
        return tree.finalize(spec)

    return timed(build)


def calibrate_cortex(coeffs, settings: CortexSettings, k_target):
    """Search r_limit (as a fraction of r_init) for a codebook size near ``k_target``.

    K shrinks as r_limit grows, so bisection on log(fraction) is used; the
    closest K seen wins if the tolerance band is never hit.
    """
    def size(frac):
        try:
            return train_cortex(coeffs, settings, frac)[0].K
        except UndertrainedTreeError:
            return 0

    frac = settings.r_limit_fraction
    if not settings.sweep:
        return frac, size(frac)
    lo, hi = 1e-6, 0.999
    best = (math.inf, frac, None)
    for _ in range(settings.sweep_steps):
        k = size(frac)
        err = abs(k - k_target) / k_target
        if err < best[0]:
            best = (err, frac, k)
        if err <= settings.k_tolerance:
            break
        if k > k_target:
            lo = frac
        else:
            hi = frac
        frac = math.sqrt(lo * hi)
    return best[1], best[2]


def _birch_threshold(x, k, cfg):
    """Largest tried threshold (halving from the default) with at least k leaf entries."""
    from .baselines.birch import build_cf_tree
    thr = cfg.birch_threshold or default_threshold(x)
    for _ in range(40):
        if len(build_cf_tree(x, thr, cfg.birch_branching).leaf_entries()) >= k or thr == 0.0:
            return thr
        thr *= 0.5
    return 0.0


@dataclass
class CellResult:
    algorithm: str
    n: int
    K: int
    rep: int
    seed: int
    k_target: int
    train_rmse: float = float("nan")
    test_rmse: float = float("nan")
    wall_s: float = float("nan")
    entropy: float = float("nan")
    gain: float = float("nan")
    status: str = "ok"
    reason: str = ""
    info: dict = field(default_factory=dict)

    @property
    def generalization(self):
        return self.test_rmse / self.train_rmse if self.train_rmse > 0 else float("nan")

    def row(self):
        return {c: getattr(self, c) for c in CSV_COLUMNS}


@dataclass
class ExperimentResult:
    config: dict
    cells: list

    def cell(self, algorithm, n=None, rep=0):
        for c in self.cells:
            if c.algorithm == algorithm and c.rep == rep and (n is None or c.n == n):
                return c
        raise KeyError((algorithm, n, rep))


def run_cell(algorithm, n, k, rep, seed, cfg: ExperimentConfig, cortex_fraction=None):
    """Train one algorithm on one grid point and evaluate it on train and test data."""
    cell = CellResult(algorithm, n, 0, rep, seed, k)
    train_stream = make_stream(cfg.source, n, cfg.window, cfg.stride, seed)
    test_stream = make_stream(cfg.source, n, cfg.window, cfg.stride, seed + cfg.test_seed_offset,
                              offset_frames=n)
    train = prepare(train_stream, cfg.window, cfg.stride, mode=NormMode(cfg.normalization),
                    scale=cfg.scale)
    test = prepare(test_stream, cfg.window, cfg.stride, spec=train.spec)
    x = train.coeffs
    limiter = threadpool_limits(limits=1) if cfg.serial_timing else nullcontext()
    try:
        with limiter:
            if algorithm == "cortex":
                frac = cortex_fraction
                if frac is None:
                    frac, _ = calibrate_cortex(x, cfg.cortex, k)
                cb, secs = train_cortex(x, cfg.cortex, frac, train.spec)
                cell.info["r_limit_fraction"] = frac
            elif algorithm == "birch":
                thr = _birch_threshold(x, k, cfg)
                cb, secs = timed(birch, x, threshold=thr, branching=cfg.birch_branching, k=k)
                cell.info["threshold"] = thr
                cell.info["leaf_entries"] = cb.meta.get("leaf_entries")
            elif algorithm == "kmeans":
                res, secs = timed(kmeans, x, k, seed=seed, n_init=cfg.kmeans_n_init)
                cb = res.codebook
                cell.info["iterations"] = res.n_iter
            elif algorithm == "gmm":
                cb, secs = timed(gmm_em, x, k, tol=cfg.gmm_tol, max_iter=cfg.gmm_max_iter, seed=seed)
                cell.info["iterations"] = cb.meta["iterations"]
            else:
                raise ConfigurationError(f"unknown algorithm {algorithm!r}")
    except (CortexVQError, ValueError) as exc:
        cell.status, cell.reason = "failed", f"{type(exc).__name__}: {exc}"
        return cell

    idx, rec = reconstruct(cb, train)
    _, rec_test = reconstruct(cb, test)
    cell.K = cb.K
    cell.wall_s = secs
    cell.train_rmse = rmse_distortion(train.frames, rec, Phase.TRAIN).rmse
    cell.test_rmse = rmse_distortion(test.frames, rec_test, Phase.TEST).rmse
    cell.entropy = shannon_entropy(np.bincount(idx, minlength=cb.K)).H if cb.K > 1 else 0.0
    if algorithm == "cortex" and abs(cb.K - k) > cfg.cortex.k_tolerance * k:
        cell.info["k_off_target"] = True
    return cell


def _attach_gains(cells):
    for c in cells:
        ref = next((r for r in cells if r.algorithm == "cortex" and r.n == c.n and r.rep == c.rep
                    and r.status == "ok"), None)
        if ref is None or c.status != "ok":
            continue
        try:
            c.gain = gain(c.wall_s, c.train_rmse, ref.wall_s, ref.train_rmse).gain
        except CortexVQError:
            c.gain = float("nan")


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(cfg: ExperimentConfig, serial_timing=True, workers=None) -> ExperimentResult:
    """Run every (algorithm, grid point, repetition) cell.

    With ``serial_timing`` (the default) cells run one after another on a
    single BLAS thread so their wall times are comparable.
    """
    cfg.validate()
    cfg.serial_timing = serial_timing
    jobs = []
    for n, k in cfg.grid:
        for rep in range(cfg.repetitions):
            seed = cfg.seeds[rep % len(cfg.seeds)] + (rep // len(cfg.seeds)) * 1000
            for alg in cfg.algorithms:
                jobs.append((alg, n, k, rep, seed, cfg))
    if serial_timing or (workers or 1) <= 1:
        cells = [run_cell(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell_args, jobs))
    _attach_gains(cells)
    cfg_dict = asdict(cfg)
    return ExperimentResult(cfg_dict, cells)


# reporting

def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def emit_reports(result: ExperimentResult, out_dir, fmt="csv"):
    """Write the cell table (CSV or JSON, both on request) plus per-panel TSV files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = sorted(result.cells, key=lambda c: (c.n, c.rep, ALGORITHMS.index(c.algorithm)
                                                if c.algorithm in ALGORITHMS else 99))
    written = []
    if fmt in ("csv", "both"):
        path = out / "results.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for c in cells:
                w.writerow([_fmt(getattr(c, col)) for col in CSV_COLUMNS])
        written.append(path)
    path = out / "results.json"
    doc = {"config": _jsonable(result.config),
           "cells": [{**{k: _json_float(v) for k, v in c.row().items()},
                      "k_target": c.k_target, "status": c.status, "reason": c.reason,
                      "info": _jsonable(c.info)} for c in cells]}
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))
    written.append(path)

    panels = {"time": "wall_s", "train_rmse": "train_rmse", "test_rmse": "test_rmse",
              "generalization": "generalization", "gain": "gain"}
    for alg in sorted({c.algorithm for c in cells}):
        for panel, attr in panels.items():
            rows = []
            for n in sorted({c.n for c in cells}):
                vals = [getattr(c, attr) for c in cells
                        if c.algorithm == alg and c.n == n and c.status == "ok"]
                vals = [v for v in vals if not math.isnan(v)]
                if vals:
                    rows.append((n, float(np.median(vals))))
            path = out / f"{panel}_{alg}.tsv"
            write_tsv(path, rows)
            written.append(path)
    return written


def _json_float(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _json_float(float(obj))
    return obj


def write_tsv(path, rows):
    with open(path, "w") as fh:
        for a, b in rows:
            fh.write(f"{a!r}\t{b!r}\n")


def read_results_csv(path):
    """Parse a results CSV back into dictionaries with typed values."""
    ints = {"n", "K", "rep", "seed"}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {}
            for k, v in row.items():
                if k == "algorithm":
                    rec[k] = v
                elif k in ints:
                    rec[k] = int(v)
                else:
                    rec[k] = float(v) if v != "" else float("nan")
            out.append(rec)
    return out


# one-level entropy study

@dataclass
class EntropyConfig:
    seed: int = 0
    r_limit: float = 0.6
    k_range_power: float = 3.0
    maturity_threshold: float = 1e6
    n_power: float = 0.75
    k_adapt: float = 0.75
    l_base: float = 1.0
    k_base: float = 1.0
    epochs: int = 15                 # training epochs before entropies are measured
    convergence_epochs: int = 50
    r_limit_sweep: tuple = (0.4, 0.6, 0.8, 1.0, 1.5)
    out_dir: str = "results/entropy"

    @classmethod
    def from_ini(cls, path_or_text):
        parser = configparser.ConfigParser()
        if "\n" in str(path_or_text) or "[" in str(path_or_text):
            parser.read_string(str(path_or_text))
        else:
            if not Path(path_or_text).is_file():
                raise ConfigurationError(f"config file not found: {path_or_text}")
            parser.read(path_or_text)
        cfg = cls()
        if parser.has_section("entropy"):
            e = parser["entropy"]
            for f in ("r_limit", "k_range_power", "maturity_threshold", "n_power", "k_adapt",
                      "l_base", "k_base"):
                if f in e:
                    setattr(cfg, f, float(e[f]))
            for f in ("seed", "epochs", "convergence_epochs"):
                if f in e:
                    setattr(cfg, f, int(e[f]))
            if "r_limit_sweep" in e:
                cfg.r_limit_sweep = tuple(_floats(e["r_limit_sweep"]))
        if parser.has_section("output"):
            cfg.out_dir = parser["output"].get("dir", cfg.out_dir)
        return cfg

    def params(self, r_init, r_limit=None):
        return CortexParams(r_init=r_init, r_limit=self.r_limit if r_limit is None else r_limit,
                            maturity_threshold=self.maturity_threshold, k_adapt=self.k_adapt,
                            n_power=self.n_power, k_range_power=self.k_range_power,
                            l_base=self.l_base, k_base=self.k_base)


@dataclass
class EntropyReportSet:
    K: int
    H_cortex: float
    H_kmeans: float
    H_uniform: float
    H_max: float
    cortex_nodes: np.ndarray
    cortex_probabilities: np.ndarray
    uniform_nodes: np.ndarray
    uniform_probabilities: np.ndarray
    kmeans_nodes: np.ndarray
    kmeans_probabilities: np.ndarray
    new_nodes_per_epoch: list
    node_counts: list
    sweep: list            # (r_limit, K, normalized H, H in bits)
    seconds: float


def visit_entropy(samples, nodes):
    """Normalized entropy (base = node count) of nearest-node visits; also the probabilities."""
    nodes = np.sort(np.asarray(nodes, dtype=np.float64))
    counts = np.bincount(nearest_centroid(samples[:, None], nodes[:, None]), minlength=nodes.size)
    rep = shannon_entropy(counts)
    return rep.H, rep.probabilities, counts


def uniform_nodes(samples, K):
    """``K`` equally spaced nodes spanning the data range."""
    return np.linspace(float(samples.min()), float(samples.max()), K)


def cortex_nodes(tree):
    return np.array([n.value for n in tree.root.cortex])


def entropy_experiment(cfg: EntropyConfig) -> EntropyReportSet:
    """One-level cortex against K-means and a uniform grid on the three-Gaussian stream.

    Entropies are measured after ``cfg.epochs`` epochs; training then continues
    to ``cfg.convergence_epochs`` to record how many nodes each epoch adds.
    The r_limit sweep retrains from scratch for each value.
    """
    import time
    start = time.perf_counter()
    x = signals.gen_gaussian_mixture(signals.GaussianMixtureConfig(seed=cfg.seed)).samples
    r_init = 0.5 * float(x.max() - x.min())
    rows = x[:, None]

    tree = CortexTree(1, cfg.params(r_init))
    new_nodes = tree.train(rows, cfg.epochs)
    nodes = cortex_nodes(tree)
    K = nodes.size
    if K < 2:
        raise UndertrainedTreeError(f"only {K} cortex node(s) after {cfg.epochs} epochs; "
                                    "train longer or lower maturity_threshold")
    h_cortex, p_cortex, _ = visit_entropy(x, nodes)

    km = kmeans(rows, K, seed=cfg.seed)
    km_nodes = km.codebook.centroids[:, 0]
    h_km, p_km, _ = visit_entropy(x, km_nodes)

    u_nodes = uniform_nodes(x, K)
    h_u, p_u, _ = visit_entropy(x, u_nodes)

    counts = list(np.cumsum(new_nodes))
    if cfg.convergence_epochs > cfg.epochs:
        more = tree.train(rows, cfg.convergence_epochs - cfg.epochs)
        new_nodes += more
        counts = list(np.cumsum(new_nodes))

    sweep = []
    for rl in cfg.r_limit_sweep:
        t = CortexTree(1, cfg.params(r_init, rl))
        t.train(rows, cfg.epochs)
        nd = cortex_nodes(t)
        if nd.size < 2:
            sweep.append((rl, int(nd.size), 0.0, 0.0))
            continue
        h, p, _ = visit_entropy(x, nd)
        bits = float(-(p[p > 0] * np.log2(p[p > 0])).sum())
        sweep.append((rl, int(nd.size), h, bits))

    return EntropyReportSet(K, h_cortex, h_km, h_u, 1.0, np.sort(nodes), p_cortex,
                            u_nodes, p_u, np.sort(km_nodes), p_km, [int(v) for v in new_nodes],
                            [int(v) for v in counts], sweep, time.perf_counter() - start)


def emit_entropy_reports(rep: EntropyReportSet, out_dir, fmt="csv"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, nodes, probs in (("cortex", rep.cortex_nodes, rep.cortex_probabilities),
                               ("kmeans", rep.kmeans_nodes, rep.kmeans_probabilities),
                               ("uniform", rep.uniform_nodes, rep.uniform_probabilities)):
        path = out / f"visits_{name}.tsv"
        write_tsv(path, [(float(a), float(b)) for a, b in zip(nodes, probs)])
        written.append(path)
    path = out / "node_count.tsv"
    write_tsv(path, [(i + 1, c) for i, c in enumerate(rep.node_counts)])
    written.append(path)
    path = out / "r_limit_sweep.tsv"
    write_tsv(path, [(rl, bits) for rl, _, _, bits in rep.sweep])
    written.append(path)
    summary = {"K": rep.K, "H_cortex": rep.H_cortex, "H_kmeans": rep.H_kmeans,
               "H_uniform": rep.H_uniform, "H_max": rep.H_max,
               "new_nodes_per_epoch": rep.new_nodes_per_epoch,
               "sweep": [{"r_limit": a, "K": b, "H": c, "H_bits": d} for a, b, c, d in rep.sweep],
               "seconds": rep.seconds}
    if fmt in ("csv", "both"):
        path = out / "entropy.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("method", "K", "H"))
            for m, h in (("cortex", rep.H_cortex), ("kmeans", rep.H_kmeans),
                         ("uniform", rep.H_uniform), ("max", rep.H_max)):
                w.writerow((m, rep.K, repr(float(h))))
        written.append(path)
    path = out / "entropy.json"
    path.write_text(json.dumps(summary, indent=1))
    written.append(path)
    return written


def level_entropies(codebook, coeffs):
    """Normalized visit entropy at each tree level under greedy encoding."""
    out = []
    for counts in codebook.level_visit_counts(coeffs):
        out.append(shannon_entropy(counts).H if counts.size > 1 else 0.0)
    return out


def scaling_ratios(sizes, settings: CortexSettings, fraction, seed=0, window=8, repeats=3):
    """Median cortex build time at each size and the ratio between consecutive sizes."""
    times = []
    for n in sizes:
        data = prepare(make_stream("basic_waves", n, window, 1, seed), window, 1)
        samples = sorted(train_cortex(data.coeffs, settings, fraction)[1] for _ in range(repeats))
        times.append(samples[len(samples) // 2])
    return times, [b / a for a, b in zip(times, times[1:])]
