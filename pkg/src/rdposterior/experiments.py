"""Experiment sweeps emitted as deterministic CSV.

Each sweep point expands into one task per replicate; tasks may run in a
thread pool (capped by RDP_POSTERIOR_THREADS) but rows are assembled in task
order, so a given spec and seed always produce byte-identical output.
Calibration is done once per sweep point and shared across its replicates;
per-replicate randomness comes from streams seeded as seed + replicate.
"""

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import glm as glm_mod
from .calibrate import find_m, find_r
from .data import (
    DatasetError,
    PreprocessConfig,
    load_csv,
    load_schema,
    parse_label_rule,
    preprocess_glm,
    synth_bernoulli,
    synth_glm,
)
from .expfam import BetaBernoulli, PrivacyBudget, posterior_update, sup_neighbor_divergence, system_from_json
from .mechanisms import ReleaseRefusedError, RngStream, gaussian_baseline
from .metrics import QuadratureAccuracyError, QuadratureConfig, glm_test_metrics, heldout_loglik, kl_beta, kl_gaussian_mechanism

__all__ = [
    "CSV_HEADER",
    "ExperimentRecord",
    "ExperimentSpec",
    "run_experiment",
    "write_csv",
    "worker_count",
]

CSV_HEADER = ("experiment", "mechanism", "lambda", "epsilon", "coefficient",
              "metric", "value", "replicate", "seed")

KINDS = ("privacy_curve", "kl_curve", "heldout_loglik", "glm_error", "glm_loglik")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    f = float(v)
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    return format(f, ".12g")


@dataclass(frozen=True)
class ExperimentRecord:
    experiment: str
    mechanism: str
    lam: object
    epsilon: object
    coefficient: object
    metric: str
    value: object
    replicate: int
    seed: int

    def to_row(self):
        return [
            self.experiment,
            self.mechanism,
            _fmt(self.lam),
            _fmt(self.epsilon),
            _fmt(self.coefficient),
            self.metric,
            _fmt(self.value),
            str(self.replicate),
            str(self.seed),
        ]


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    name: str = ""
    seed: int = 0
    replicates: int = 1
    lambdas: tuple = ()
    epsilons: tuple = ()
    coefficients: tuple = ()
    mechanisms: tuple = ()
    system: dict = field(default_factory=lambda: {"family": "beta_bernoulli"})
    prior: tuple = (6.0, 18.0)
    n: int = 100
    successes: int = 38
    rho: float = 0.5
    max_iters: int = 500
    quadrature: dict = field(default_factory=dict)
    glm: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates!r}")
        if not self.lambdas:
            raise ValueError("lambda grid must be non-empty")
        if self.kind == "privacy_curve":
            if not self.coefficients:
                raise ValueError("privacy_curve needs a non-empty coefficient grid")
        elif not self.epsilons:
            raise ValueError(f"{self.kind} needs a non-empty epsilon grid")
        if not self.mechanisms:
            object.__setattr__(self, "mechanisms", _DEFAULT_MECHANISMS[self.kind])
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    @classmethod
    def from_json(cls, obj, **overrides):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown experiment spec fields: {sorted(unknown)}")
        merged = dict(obj)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        for key in ("lambdas", "epsilons", "coefficients", "mechanisms", "prior"):
            if key in merged and merged[key] is not None:
                merged[key] = tuple(merged[key])
        return cls(**merged)

    @classmethod
    def load(cls, path, **overrides):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh), **overrides)


_DEFAULT_MECHANISMS = {
    "privacy_curve": ("diffused", "concentrated"),
    "kl_curve": ("diffused", "concentrated", "gaussian"),
    "heldout_loglik": ("direct", "diffused", "concentrated", "gaussian"),
    "glm_error": ("concentrated", "diffused", "ops"),
    "glm_loglik": ("concentrated", "diffused", "ops"),
}

_ERROR_CODES = (
    (ReleaseRefusedError, "error:refused"),
    (QuadratureAccuracyError, "error:accuracy"),
    (DatasetError, "error:data"),
    (ValueError, "error:invalid"),
)


@dataclass(frozen=True)
class _Task:
    experiment: str
    mechanism: str
    lam: object
    epsilon: object
    metric: str
    replicate: int
    seed: int
    fn: object  # () -> (coefficient, value)


def worker_count():
    raw = os.environ.get("RDP_POSTERIOR_THREADS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f"RDP_POSTERIOR_THREADS must be an integer, got {raw!r}") from None
    return max(1, count)


def _run_tasks(tasks):
    def run_one(task):
        try:
            coefficient, value = task.fn()
        except tuple(exc for exc, _ in _ERROR_CODES) as err:
            code = next(code for exc, code in _ERROR_CODES if isinstance(err, exc))
            coefficient, value = None, code
        return ExperimentRecord(
            task.experiment, task.mechanism, task.lam, task.epsilon,
            coefficient, task.metric, value, task.replicate, task.seed,
        )

    workers = worker_count()
    if workers == 1 or len(tasks) <= 1:
        return [run_one(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_one, tasks))


def _raiser(err):
    def fn():
        raise err
    return fn


def _calibrated_parameter(spec, system, mechanism, stats, lam, eps):
    """Calibrate once for a sweep point; returns (coefficient, posterior parameter)."""
    budget = PrivacyBudget(lam, eps)
    eta0 = system.check_param(spec.prior)
    if mechanism == "diffused":
        result = find_r(system, eta0, len(stats), budget, spec.max_iters)
        if not result.satisfied:
            raise ReleaseRefusedError(result)
        return result.coefficient, posterior_update(system, eta0, stats, scale=result.coefficient)
    if mechanism == "concentrated":
        result = find_m(system, eta0, len(stats), budget, spec.max_iters)
        if not result.satisfied:
            raise ReleaseRefusedError(result)
        return result.coefficient, posterior_update(system, eta0 / result.coefficient, stats)
    raise ValueError(f"unknown calibrated mechanism {mechanism!r}")


def _build_privacy_curve(spec):
    system = system_from_json(spec.system)
    eta0 = system.check_param(spec.prior)
    tasks = []
    for mechanism in spec.mechanisms:
        if mechanism not in ("diffused", "concentrated"):
            raise ValueError(f"privacy_curve supports diffused/concentrated, got {mechanism!r}")
        for coefficient in spec.coefficients:
            for lam in spec.lambdas:
                if mechanism == "diffused":
                    def fn(c=coefficient, l=lam):
                        return c, sup_neighbor_divergence(system, eta0, c * spec.n, c, l)
                else:
                    def fn(c=coefficient, l=lam):
                        return c, sup_neighbor_divergence(system, eta0 / c, spec.n, 1.0, l)
                for rep in range(spec.replicates):
                    tasks.append(_Task(spec.name, mechanism, lam, None, "epsilon",
                                       rep, spec.seed + rep, fn))
    return tasks


def _kl_data(spec):
    if not 0 <= spec.successes <= spec.n:
        raise ValueError(f"successes must lie in [0, n], got {spec.successes!r}")
    return [1.0] * spec.successes + [0.0] * (spec.n - spec.successes)


def _build_kl_curve(spec):
    system = system_from_json(spec.system)
    if not isinstance(system, BetaBernoulli):
        raise ValueError("kl_curve is defined for the beta_bernoulli system")
    eta0 = system.check_param(spec.prior)
    data = _kl_data(spec)
    stats = [system.suff_stat(x) for x in data]
    eta_true = posterior_update(system, eta0, stats)
    qcfg = QuadratureConfig(**spec.quadrature) if spec.quadrature else QuadratureConfig()
    tasks = []
    for mechanism in spec.mechanisms:
        for lam in spec.lambdas:
            for eps in spec.epsilons:
                if mechanism == "gaussian":
                    sigma = math.sqrt(lam * system.delta**2 / eps)
                    def fn(s=sigma):
                        return 1.0, kl_gaussian_mechanism(eta0, data, s, qcfg)
                else:
                    try:
                        coefficient, eta_mech = _calibrated_parameter(
                            spec, system, mechanism, stats, lam, eps)
                        def fn(c=coefficient, e=eta_mech):
                            return c, kl_beta(eta_true, e)
                    except ReleaseRefusedError as err:
                        fn = _raiser(err)
                for rep in range(spec.replicates):
                    tasks.append(_Task(spec.name, mechanism, lam, eps, "kl",
                                       rep, spec.seed + rep, fn))
    return tasks


def _build_heldout(spec):
    system = system_from_json(spec.system)
    if not isinstance(system, BetaBernoulli):
        raise ValueError("heldout_loglik is defined for the beta_bernoulli system")
    eta0 = system.check_param(spec.prior)
    data = [float(b) for b in synth_bernoulli(spec.n, spec.rho, spec.seed)]
    heldout = [int(b) for b in synth_bernoulli(spec.n, spec.rho, spec.seed + 1)]
    stats = [system.suff_stat(x) for x in data]
    eta_true = posterior_update(system, eta0, stats)
    budget_cache = {}
    tasks = []
    for mechanism in spec.mechanisms:
        for lam in spec.lambdas:
            for eps in spec.epsilons:
                if mechanism == "direct":
                    def fn(rep_seed, e=eta_true):
                        theta = system.sample_theta(e, RngStream(rep_seed).generator())
                        return 1.0, heldout_loglik(theta[0], heldout)
                elif mechanism == "gaussian":
                    def fn(rep_seed, l=lam, e=eps):
                        out = gaussian_baseline(eta0, data, PrivacyBudget(l, e), RngStream(rep_seed))
                        return 1.0, heldout_loglik(out.theta[0], heldout)
                else:
                    key = (mechanism, lam, eps)
                    if key not in budget_cache:
                        try:
                            budget_cache[key] = _calibrated_parameter(
                                spec, system, mechanism, stats, lam, eps)
                        except ReleaseRefusedError as err:
                            budget_cache[key] = err
                    cached = budget_cache[key]
                    if isinstance(cached, ReleaseRefusedError):
                        def fn(rep_seed, err=cached):
                            raise err
                    else:
                        def fn(rep_seed, ce=cached):
                            coefficient, eta_mech = ce
                            theta = system.sample_theta(eta_mech, RngStream(rep_seed).generator())
                            return coefficient, heldout_loglik(theta[0], heldout)
                for rep in range(spec.replicates):
                    rep_seed = spec.seed + rep
                    tasks.append(_Task(spec.name, mechanism, lam, eps, "heldout_loglik",
                                       rep, rep_seed,
                                       (lambda f=fn, s=rep_seed: f(s))))
    return tasks


def _glm_dataset(spec):
    cfg = dict(spec.glm)
    link = cfg.get("link", "logistic")
    if "data" in cfg:
        schema = load_schema(cfg["schema"])
        ds = load_csv(cfg["data"], schema)
        rule = parse_label_rule(cfg.get("label_rule"))
        pre = PreprocessConfig(split_seed=cfg.get("split_seed", spec.seed), label_rule=rule)
        split = preprocess_glm(ds, pre)
        return link, split.train_x, split.train_y, split.test_x, split.test_y
    n = int(cfg.get("n", 2000))
    d = int(cfg.get("d", 10))
    n_test = int(cfg.get("n_test", max(200, n // 3)))
    data_seed = int(cfg.get("data_seed", spec.seed + 10_000))
    w_norm = float(cfg.get("w_norm", 10.0))
    gen = np.random.Generator(np.random.PCG64(data_seed))
    w_true = gen.standard_normal(d)
    w_true *= w_norm / np.linalg.norm(w_true)
    train_x, train_y = synth_glm(n, d, w_true, link, data_seed + 1)
    test_x, test_y = synth_glm(n_test, d, w_true, link, data_seed + 2)
    return link, train_x, train_y, test_x, test_y


def _build_glm(spec):
    metric = "error_rate" if spec.kind == "glm_error" else "neg_loglik"
    link, train_x, train_y, test_x, test_y = _glm_dataset(spec)
    gspec = glm_mod.binary_spec(link, c=1.0)
    beta0 = float(spec.glm.get("beta0", 1e-3))
    cfg = glm_mod.SamplerConfig(
        burn_in=int(spec.glm.get("burn_in", 1000)),
        thinning=int(spec.glm.get("thinning", 1)),
        width=float(spec.glm.get("width", 1.0)),
    )
    tasks = []
    for mechanism in spec.mechanisms:
        for lam in spec.lambdas:
            for eps in spec.epsilons:
                def fn(rep_seed, mech=mechanism, l=lam, e=eps):
                    stream = RngStream(rep_seed)
                    if mech == "concentrated":
                        ws = glm_mod.concentrated_glm(
                            gspec, train_x, train_y, beta0, PrivacyBudget(l, e), cfg, stream)
                        coefficient = ws.chain_meta["beta"]
                    elif mech == "diffused":
                        ws = glm_mod.diffuse_glm(
                            gspec, train_x, train_y, beta0, PrivacyBudget(l, e), cfg, stream)
                        coefficient = ws.chain_meta["rho"]
                    elif mech == "ops":
                        ws = glm_mod.ops_sample(
                            gspec, train_x, train_y, beta0, e, cfg, stream)
                        coefficient = ws.chain_meta["rho"]
                    else:
                        raise ValueError(f"unknown glm mechanism {mech!r}")
                    value = glm_test_metrics(ws.w, gspec, test_x, test_y)[metric]
                    return coefficient, value
                for rep in range(spec.replicates):
                    rep_seed = spec.seed + rep
                    tasks.append(_Task(spec.name, mechanism, lam, eps, metric,
                                       rep, rep_seed,
                                       (lambda f=fn, s=rep_seed: f(s))))
    return tasks


_BUILDERS = {
    "privacy_curve": _build_privacy_curve,
    "kl_curve": _build_kl_curve,
    "heldout_loglik": _build_heldout,
    "glm_error": _build_glm,
    "glm_loglik": _build_glm,
}


def run_experiment(spec):
    """Execute a sweep and return its records in deterministic order."""
    tasks = _BUILDERS[spec.kind](spec)
    return _run_tasks(tasks)


def write_csv(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in records:
            writer.writerow(record.to_row())
