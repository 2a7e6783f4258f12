"""
Benchmark protocol: per trial, split the labelled source 80/20, pick
hyperparameters on the held-out source part, refit on all source data and
score on the target domain.

Target labels are only ever passed to the final metric.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .adaptation import CopulaAdapter, SolverOptions, coral_transform
from .copula import gcr_fit, gcr_predict
from .datasets import DATA_ENV, SPLITS, DomainSplit, data_dir, load_dataset
from .errors import InvalidInputError
from .regressors import ccc, gpr_fit, gpr_grid, gpr_predict, nmse

__all__ = [
    "METHODS",
    "ExperimentSpec",
    "TrialResult",
    "load_specs",
    "run_experiment",
    "summarize",
    "average_ranks",
]

logger = logging.getLogger(__name__)

METHODS = ("GPR", "GCR", "CT-GPR", "CT-GCR", "CORAL-GCR", "DA-GPR", "DA-GCR")
_METRICS = {"NMSE": (nmse, True), "CCC": (ccc, False)}


@dataclass
class ExperimentSpec:
    dataset: str
    split: str
    name: str = ""
    methods: tuple = METHODS
    grid: dict = field(default_factory=lambda: {"p": [], "lambda": [0.0]})
    trials: int = 10
    subsample: int | None = None
    seed: int = 0
    output: str | None = None
    metric: str = "NMSE"
    rule: dict | None = None
    validation_fraction: float = 0.2
    qmi_samples: int | None = None
    max_iters: int = 500
    coral_eps: float = 1e-6

    def __post_init__(self):
        self.methods = tuple(self.methods)
        if not self.name:
            self.name = Path(self.dataset).stem or self.split
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise InvalidInputError(f"unknown methods: {sorted(unknown)}")
        if not self.methods:
            raise InvalidInputError("at least one method is required")
        if self.split not in SPLITS:
            raise InvalidInputError(f"unknown split {self.split!r}")
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if self.metric not in _METRICS:
            raise InvalidInputError(f"metric must be one of {sorted(_METRICS)}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise InvalidInputError("validation_fraction must lie in (0, 1)")
        self.grid = {"p": [int(p) for p in self.grid.get("p", [])],
                     "lambda": [float(v) for v in self.grid.get("lambda", [0.0])]}
        if any(m.startswith("DA-") for m in self.methods):
            if not self.grid["p"] or not self.grid["lambda"]:
                raise InvalidInputError("DA methods need a non-empty grid for p and lambda")
            if min(self.grid["p"]) < 1 or min(self.grid["lambda"]) < 0.0:
                raise InvalidInputError("grid needs p >= 1 and lambda >= 0")

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "ExperimentSpec":
        """Build a spec from a mapping; ``${COPULA_DA_DATA}`` in ``dataset`` is
        replaced by :func:`data_dir`, other relative paths resolve against ``base``."""
        d = dict(d)
        dataset = str(d["dataset"]).replace("${%s}" % DATA_ENV, str(data_dir()))
        if base is not None and not Path(dataset).is_absolute():
            dataset = str(base / dataset)
        d["dataset"] = dataset
        return cls(**d)

    def check_dimension(self, D: int) -> None:
        too_big = [p for p in self.grid["p"] if p > D]
        if too_big and any(m.startswith("DA-") for m in self.methods):
            raise InvalidInputError(f"grid p values {too_big} exceed the input dimension {D}")


@dataclass
class TrialResult:
    dataset: str
    method: str
    trial: int
    metric: str
    value: float
    p: int | None = None
    lam: float | None = None
    fingerprint: str = ""
    wall_time: float = 0.0
    grid_scores: dict = field(default_factory=dict, repr=False)

    def record(self) -> dict:
        """Report row; wall time is left out so reports are byte-stable."""
        return {"dataset": self.dataset, "method": self.method, "trial": self.trial,
                "metric": self.metric, "value": self.value, "p": self.p,
                "lambda": self.lam, "fingerprint": self.fingerprint}


def load_specs(path) -> list[ExperimentSpec]:
    """Read a JSON or YAML experiment file: one experiment, or ``{"experiments": [...]}``."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        raw = yaml.safe_load(text)
    else:
        raw = json.loads(text)
    items = raw["experiments"] if isinstance(raw, dict) and "experiments" in raw else [raw]
    shared = {k: v for k, v in raw.items() if k != "experiments"} if "experiments" in raw else {}
    return [ExperimentSpec.from_dict({**shared, **item}, base=path.parent) for item in items]


def _fingerprint(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(np.asarray(a, dtype=float))
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()[:16]


def _standardizer(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0.0] = 1.0
    return lambda A: (A - mu) / sd


class _Trial:
    """Data and caches for one trial."""

    def __init__(self, spec: ExperimentSpec, data: DomainSplit, trial: int):
        self.spec = spec
        rng = np.random.default_rng([spec.seed, trial])
        X_S, y_S, X_T = data.X_S, data.y_S, data.X_T
        X_T_keep = np.arange(X_T.shape[0])
        if spec.subsample is not None:
            if X_S.shape[0] > spec.subsample:
                keep = np.sort(rng.choice(X_S.shape[0], spec.subsample, replace=False))
                X_S, y_S = X_S[keep], y_S[keep]
            if X_T.shape[0] > spec.subsample:
                X_T_keep = np.sort(rng.choice(X_T.shape[0], spec.subsample, replace=False))
                X_T = X_T[X_T_keep]
        self.target_rows = X_T_keep
        n = X_S.shape[0]
        n_val = max(1, int(round(spec.validation_fraction * n)))
        perm = rng.permutation(n)
        self.val = np.sort(perm[:n_val])
        self.tr = np.sort(perm[n_val:])
        self.X_S, self.y_S, self.X_T = X_S, y_S, X_T
        self.seed = int(rng.integers(2 ** 31))
        self._adapters = {}

    def adapter(self, p, lam, full: bool) -> CopulaAdapter:
        key = (p, lam, full)
        if key not in self._adapters:
            rows = slice(None) if full else self.tr
            opts = SolverOptions(max_iters=self.spec.max_iters, seed=self.seed)
            self._adapters[key] = CopulaAdapter(
                p=p, lam=lam, options=opts, qmi_samples=self.spec.qmi_samples,
                seed=self.seed,
            ).fit(self.X_S[rows], self.y_S[rows], self.X_T)
        return self._adapters[key]


def _gp_select(F_tr, y_tr, F_val, y_val):
    best = None
    for hyper in gpr_grid(F_tr, y_tr):
        score = nmse(gpr_predict(gpr_fit(F_tr, y_tr, hyper, center=True), F_val), y_val)
        if best is None or score < best[0]:
            best = (score, hyper)
    return best


def _fit_regressor(kind, F, y, hyper=None):
    if kind == "GPR":
        model = gpr_fit(F, y, hyper, center=True)
        return (lambda A: gpr_predict(model, A)), (model.X_train, model.alpha)
    model = gcr_fit(F, y)
    return (lambda A: gcr_predict(model, A)), (model.joint_R,)


def _adapter_arrays(ad: CopulaAdapter) -> tuple:
    marginals = ad.source_marginals + ad.target_marginals
    return (ad.W,) + tuple(m.sorted_values for m in marginals)


def _run_method(method: str, t: _Trial):
    """Return ``(target predictions, p, lambda, learned arrays, grid scores)``."""
    X_S, y_S, X_T = t.X_S, t.y_S, t.X_T
    tr, val = t.tr, t.val
    kind = method.rsplit("-", 1)[-1]

    if method in ("GPR", "GCR"):
        if kind == "GCR":
            predict, learned = _fit_regressor("GCR", X_S, y_S)
            return predict(X_T), None, None, learned, {}
        scale_tr = _standardizer(X_S[tr])
        _, hyper = _gp_select(scale_tr(X_S[tr]), y_S[tr], scale_tr(X_S[val]), y_S[val])
        scale = _standardizer(X_S)
        predict, learned = _fit_regressor("GPR", scale(X_S), y_S, hyper)
        return predict(scale(X_T)), None, None, learned, {}

    if method == "CORAL-GCR":
        aligned = coral_transform(X_S, X_T, eps=t.spec.coral_eps)
        predict, learned = _fit_regressor("GCR", aligned, y_S)
        return predict(X_T - X_T.mean(axis=0)), None, None, learned, {}

    if method.startswith("CT-"):
        hyper = None
        if kind == "GPR":
            ad = CopulaAdapter().fit(X_S[tr], y_S[tr], X_T)
            _, hyper = _gp_select(ad.transform_source(X_S[tr]), y_S[tr],
                                  ad.transform_source(X_S[val]), y_S[val])
        ad = CopulaAdapter().fit(X_S, y_S, X_T)
        predict, learned = _fit_regressor(kind, ad.transform_source(X_S), y_S, hyper)
        return predict(ad.transform_target(X_T)), None, None, _adapter_arrays(ad) + learned, {}

    # DA-*: choose (p, lambda) (and GP hyperparameters) on held-out source rows
    best = None
    scores = {}
    for p in t.spec.grid["p"]:
        for lam in t.spec.grid["lambda"]:
            ad = t.adapter(p, lam, full=False)
            F_tr, F_val = ad.transform_source(X_S[tr]), ad.transform_source(X_S[val])
            if kind == "GPR":
                score, hyper = _gp_select(F_tr, y_S[tr], F_val, y_S[val])
            else:
                predict, _ = _fit_regressor("GCR", F_tr, y_S[tr])
                score, hyper = nmse(predict(F_val), y_S[val]), None
            scores[(p, lam)] = score
            logger.debug("%s p=%d lambda=%g validation NMSE %.6g", method, p, lam, score)
            if best is None or score < best[0]:
                best = (score, p, lam, hyper)
    _, p, lam, hyper = best
    ad = t.adapter(p, lam, full=True)
    predict, learned = _fit_regressor(kind, ad.transform_source(X_S), y_S, hyper)
    return predict(ad.transform_target(X_T)), p, lam, _adapter_arrays(ad) + learned, scores


def _run_trial(spec: ExperimentSpec, data: DomainSplit, trial: int) -> list[TrialResult]:
    metric_fn, _ = _METRICS[spec.metric]
    try:
        t = _Trial(spec, data, trial)
        y_T = data.y_T[t.target_rows]
        rows = []
        for method in spec.methods:
            start = time.perf_counter()
            pred, p, lam, learned, scores = _run_method(method, t)
            value = metric_fn(pred, y_T)
            if not np.isfinite(value):
                raise FloatingPointError(f"{method} produced a non-finite {spec.metric}")
            rows.append(TrialResult(
                dataset=spec.name, method=method, trial=trial, metric=spec.metric,
                value=float(value), p=p, lam=lam, fingerprint=_fingerprint(*learned),
                wall_time=time.perf_counter() - start, grid_scores=scores,
            ))
            logger.info("%s trial %d %s %s=%.4f", spec.name, trial, method, spec.metric, value)
        return rows
    except Exception:
        logger.exception("%s: trial %d aborted", spec.name, trial)
        return []


def run_experiment(spec: ExperimentSpec, data: DomainSplit | None = None,
                   jobs: int = 1) -> list[TrialResult]:
    """Run every trial of ``spec``; ``data`` overrides loading ``spec.dataset``."""
    if data is None:
        data = load_dataset(spec.dataset, spec.split, spec.rule)
    spec.check_dimension(data.X_S.shape[1])
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_trial, [spec] * spec.trials, [data] * spec.trials,
                                   range(spec.trials)))
    else:
        chunks = [_run_trial(spec, data, k) for k in range(spec.trials)]
    return [row for chunk in chunks for row in chunk]


def summarize(results) -> dict:
    """``{dataset: {method: {"mean", "std", "n"}}}`` with sample standard deviation."""
    groups = {}
    for r in results:
        groups.setdefault(r.dataset, {}).setdefault(r.method, []).append(r.value)
    out = {}
    for ds, by_method in groups.items():
        out[ds] = {}
        for method, values in by_method.items():
            v = np.asarray(values)
            out[ds][method] = {
                "mean": float(v.mean()),
                "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
                "n": int(v.size),
            }
    return out


def average_ranks(summary: dict, lower_is_better: bool = True) -> tuple[dict, dict]:
    """Rank methods within each dataset by mean score (1 = best, ties averaged).

    Returns ``(per_dataset_ranks, average_rank)``.
    """
    per_dataset = {}
    for ds, by_method in summary.items():
        methods = list(by_method)
        means = np.array([by_method[m]["mean"] for m in methods])
        ranks = rankdata(means if lower_is_better else -means, method="average")
        per_dataset[ds] = {m: float(r) for m, r in zip(methods, ranks)}
    collected = {}
    for ranks in per_dataset.values():
        for m, r in ranks.items():
            collected.setdefault(m, []).append(r)
    return per_dataset, {m: float(np.mean(r)) for m, r in collected.items()}


def lower_is_better(metric: str) -> bool:
    return _METRICS[metric][1]
