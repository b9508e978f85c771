"""Experiment harness: each runner returns (statement, header, rows) for a CSV."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .corpus import CorpusSpec, gen_corpus
from .dyadic import Cube, DyadicTree, ShiftedSystem, shifted_average, standard_average
from .maximal import (
    bmo_sandwich,
    chain_field,
    dyadic_maximal,
    paraproduct,
    rmf,
    square_function,
    good_lambda_violations,
)
from .rademacher import EstimatorConfig
from .rmxio import read_rmx
from .space import parse_space
from .stepfn import (
    StepFunction,
    bmo_norm,
    haar_decompose,
    haar_function,
    h1_norm,
    lp_norm,
    weak_l1,
)

EXPERIMENTS = ("opnorm", "weak-type", "good-lambda", "bmo", "transfer", "systems", "paraproduct")


@dataclass
class ExperimentConfig:
    experiment: str = "opnorm"
    space: str = "lp:2"
    n: int = 1
    depth: int = 4
    dim: int = 2
    corpus: str = "random-gaussian"
    count: int = 10
    measure: str = "uniform"
    sparsity: int = 3
    min_depth: int = 3
    files: tuple = ()
    seed: int = 0
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    p: float = 2.0
    q: float = 2.0
    deltas: tuple = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
    weight: str = ""
    beta: str = ""
    grid: int = 0
    min_level: int = 0
    sandwich_depth: int = 4
    out: str = ""

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")

    @property
    def norm_space(self):
        return parse_space(self.space, self.dim)

    def corpus_spec(self, **over) -> CorpusSpec:
        spec = CorpusSpec(
            generator=self.corpus,
            n=self.n,
            depth=self.depth,
            dim=self.dim,
            p=self.norm_space.p,
            count=self.count,
            seed=self.seed,
            measure=self.measure,
            sparsity=self.sparsity,
            atom_q=self.q,
            min_depth=self.min_depth,
            files=list(self.files),
        )
        return replace(spec, **over)

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        """Build from string values (config file or CLI)."""
        est_keys = {"estimator": "mode", "max_len": "max_len", "restarts": "restarts",
                    "grid_res": "grid", "cap": "cap", "iters": "iters"}
        est = {}
        kw = {}
        names = {f.name: f for f in fields(cls)}
        for key, raw in data.items():
            if raw is None:
                continue
            if key in est_keys:
                target = est_keys[key]
                est[target] = raw if target == "mode" else int(raw)
                continue
            if key not in names:
                raise ValueError(f"unknown config key {key!r}")
            kw[key] = _coerce(key, raw)
        seed = int(kw.get("seed", 0))
        kw["estimator"] = EstimatorConfig(seed=seed, **est)
        return cls(**kw)


def _floats(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).replace(",", " ").split())


def _coerce(key: str, raw):
    if not isinstance(raw, str):
        return raw
    if key in ("n", "depth", "dim", "count", "sparsity", "min_depth", "seed", "grid",
               "min_level", "sandwich_depth"):
        return int(raw)
    if key in ("p", "q"):
        return math.inf if raw.strip().lower() == "inf" else float(raw)
    if key == "deltas":
        return _floats(raw)
    if key == "files":
        return tuple(raw.replace(",", " ").split())
    return raw


def _corpus(cfg: ExperimentConfig):
    return gen_corpus(cfg.corpus_spec())


def _weight(cfg: ExperimentConfig, tree: DyadicTree):
    if not cfg.weight:
        return None
    w = read_rmx(cfg.weight)
    if not w.tree.same_shape(tree) or not w.is_scalar:
        raise ValueError("weight file must be scalar and match the corpus tree")
    return w


def _ratio(a: float, b: float) -> float:
    return a / b if b > 0 else 0.0


def _config_for_item(cfg: ExperimentConfig, i: int) -> EstimatorConfig:
    return replace(cfg.estimator, seed=int(np.random.SeedSequence([cfg.seed, i]).generate_state(1)[0]))


# ---------------------------------------------------------------------------


def run_opnorm(cfg: ExperimentConfig):
    """||rmf f||_p / ||f||_p over the corpus (optionally weighted)."""
    header = ["item", "tag", "p", "norm_f", "ratio_rmf_lower", "ratio_rmf_upper",
              "ratio_dyadic_max", "certified"]
    rows = []
    sup = [0.0, 0.0, 0.0]
    for i, item in enumerate(_corpus(cfg)):
        f = item.f
        w = _weight(cfg, f.tree)
        F = rmf(f, _config_for_item(cfg, i))
        nf = lp_norm(f, cfg.p, w)
        vals = [
            _ratio(lp_norm(F.lower_function(), cfg.p, w), nf),
            _ratio(lp_norm(F.upper_function(), cfg.p, w), nf),
            _ratio(lp_norm(dyadic_maximal(f), cfg.p, w), nf),
        ]
        sup = [max(a, b) for a, b in zip(sup, vals)]
        certified = all(e.certified for e in F.estimates)
        rows.append([i, item.tag, cfg.p, nf, *vals, certified])
    rows.append(["sup", "aggregate", cfg.p, "", *sup, all(r[7] for r in rows)])
    return "rmf bounded on L^p: sup_f ||rmf f||_p / ||f||_p", header, rows


def run_weak_type(cfg: ExperimentConfig):
    """Weak (1,1) and H^1 -> weak L^1 ratios of the rmf lower field."""
    header = ["item", "tag", "l1", "h1", "weak_rmf_lower", "ratio_l1", "ratio_h1",
              "l1_rmf_lower", "l1_rmf_upper", "l1_le_h1"]
    rows = []
    sup = [0.0, 0.0]
    for i, item in enumerate(_corpus(cfg)):
        f = item.f
        F = rmf(f, _config_for_item(cfg, i))
        l1 = lp_norm(f, 1)
        h1 = h1_norm(f)
        weak = weak_l1(F.lower_function())
        r1, rh = _ratio(weak, l1), _ratio(weak, h1)
        sup = [max(sup[0], r1), max(sup[1], rh)]
        rows.append([i, item.tag, l1, h1, weak, r1, rh, lp_norm(F.lower_function(), 1),
                     lp_norm(F.upper_function(), 1), l1 <= h1 * (1 + 1e-12)])
    rows.append(["sup", "aggregate", "", "", "", sup[0], sup[1], "", "",
                 all(r[9] for r in rows)])
    return "rmf weak type: lambda |{rmf f > lambda}| against ||f||_1 and ||f||_H1", header, rows


def good_lambda_table(f: StepFunction, F, q: float, deltas) -> tuple:
    """Per delta the worst ratio |{rmf > 2l, M_q f <= d l}| / |{rmf > l}| and total violations."""
    t = f.tree
    m = np.asarray(t.leaf_mass, dtype=float)
    low = F.lower
    mq = dyadic_maximal(f, q).scalar_values()
    values = np.unique(low[low > 0])
    lams = np.unique(np.r_[values, values / 2])
    violations = 0
    worst = {d: 0.0 for d in deltas}
    for lam in lams:
        violations += good_lambda_violations(F.chains, float(lam))
        den = float(m[low > lam].sum())
        if den == 0:
            continue
        for d in deltas:
            num = float(m[(low > 2 * lam) & (mq <= d * lam)].sum())
            worst[d] = max(worst[d], num / den)
    return worst, violations, len(lams)


def run_good_lambda(cfg: ExperimentConfig):
    header = ["item", "tag", "delta", "worst_ratio", "constant", "heights", "containment_violations"]
    rows = []
    agg = {d: 0.0 for d in cfg.deltas}
    total_viol = 0
    for i, item in enumerate(_corpus(cfg)):
        F = rmf(item.f, _config_for_item(cfg, i), min_level=cfg.min_level)
        worst, viol, nl = good_lambda_table(item.f, F, cfg.q, cfg.deltas)
        total_viol += viol
        for d in cfg.deltas:
            const = worst[d] / (d / (1 - d))
            agg[d] = max(agg[d], const)
            rows.append([i, item.tag, d, worst[d], const, nl, viol])
    for d in cfg.deltas:
        rows.append(["sup", "aggregate", d, "", agg[d], "", total_viol])
    return ("good-lambda: |{rmf f > 2 lambda, M_q f <= delta lambda}| <~ delta/(1-delta) "
            "|{rmf f > lambda}|"), header, rows


def run_bmo(cfg: ExperimentConfig):
    header = ["item", "tag", "bmo_rmf_lower", "bmo_f", "ratio", "status", "sandwich_below",
              "sandwich_above", "worst_below", "worst_above"]
    rows = []
    sup = 0.0
    for i, item in enumerate(_corpus(cfg)):
        f = item.f
        ec = _config_for_item(cfg, i)
        F = rmf(f, ec)
        top = bmo_norm(F.lower_function(), 1, "optimal-constant")
        bottom = bmo_norm(f, 1, "average")
        if bottom == 0:
            row = [i, item.tag, top, bottom, "", "skipped"]
        else:
            sup = max(sup, top / bottom)
            row = [i, item.tag, top, bottom, top / bottom, "ok"]
        if f.tree.n == 1 and f.tree.depth <= cfg.sandwich_depth:
            R = bmo_sandwich(f, ec)
            row += [R.below, R.above, R.worst_below, R.worst_above]
        else:
            row += ["", "", "", ""]
        rows.append(row)
    rows.append(["sup", "aggregate", "", "", sup, "", "", "", "", ""])
    return "rmf maps BMO to BMO: ||rmf f||_BMO / ||f||_BMO", header, rows


def transfer(f: StepFunction) -> StepFunction:
    """f composed with the inverse Morton map: the same leaf data on a 1-D tree of depth nN."""
    t = f.tree
    return StepFunction(DyadicTree(1, t.n * t.depth, t.leaf_mass), f.space, f.values)


def transfer_report(f: StepFunction, config: EstimatorConfig, p: float) -> list:
    t = f.tree
    g = transfer(f)
    slack = 0.0
    for k in range(t.depth + 1):
        a = np.asarray(f.averages(k), dtype=float)
        b = np.asarray(g.averages(t.n * k), dtype=float)
        slack = max(slack, float(np.abs(a - b).max()))
    nf, ng = lp_norm(f, p), lp_norm(g, p)
    F = rmf(f, config)
    warm = [e.lower_witness.remap(lambda j: t.n * j) for e in F.estimates]
    G = rmf(g, config, warm_starts=warm)
    rf, rg = lp_norm(F.lower_function(), p), lp_norm(G.lower_function(), p)
    return [slack, nf, ng, abs(nf - ng), rf, rg, rg - rf,
            bool(np.all(G.lower >= F.lower - 1e-12))]


def run_transfer(cfg: ExperimentConfig):
    header = ["item", "tag", "average_slack", "norm_f", "norm_transfer", "norm_slack",
              "rmf_f", "rmf_transfer", "rmf_gap", "leafwise_ok"]
    rows = []
    for i, item in enumerate(_corpus(cfg)):
        rows.append([i, item.tag, *transfer_report(item.f, _config_for_item(cfg, i), cfg.p)])
    return ("dimension transfer: averages and norms preserved, ||rmf f o phi^-1||_p >= "
            "||rmf f||_p"), header, rows


def parse_beta(text: str, n: int) -> dict:
    """``j:b1,..,bn; j:...`` into a dict."""
    beta = {}
    for part in text.replace(" ", "").split(";"):
        if not part:
            continue
        j, _, bits = part.partition(":")
        beta[int(j)] = tuple(int(b) for b in bits.split(","))
        if len(beta[int(j)]) != n:
            raise ValueError(f"beta_{j} needs {n} entries")
    return beta


def random_beta(rng, n: int, M: int) -> dict:
    """Random 0/1 vectors beta_1..beta_M, redrawn until at least one is nonzero."""
    while True:
        bits = rng.integers(0, 2, (M, n))
        if bits.any() or M == 0:
            return {j + 1: tuple(int(x) for x in bits[j]) for j in range(M)}


def systems_report(system: ShiftedSystem, f_unit: np.ndarray, N: int, space, config):
    """Rows (k, identity_exact, max_diff, norm_f, norm_tau) and the rmf discrepancy.

    The truncated rmf is computed on the shifted chains directly and on the
    standard chains of tau_N f pulled back by tau_N^-1; standard point y is
    seeded by the index of x = y + s_N.
    """
    f = system.embed(f_unit)
    tf = system.tau(f, N)
    cells = int(np.prod(system.shape))
    nf = lp_grid(f, space)
    nt = lp_grid(tf, space)
    rows, direct, conj = [], [], []
    for k in range(N, system.M + 1):
        a = shifted_average(system, k, f)
        std = standard_average(system, k, tf)
        b = system.tau_inv(std, N)
        direct.append(a.reshape(cells, space.dim))
        conj.append(std.reshape(cells, space.dim))
        rows.append([k, bool(np.array_equal(a, b)), float(np.abs(a - b).max()), nf, nt])
    coords = np.stack(np.unravel_index(np.arange(cells), system.shape), axis=1)
    s = system.shift_cells(N)
    moved = coords + s
    ok = np.all(moved < system.cells, axis=1)
    keys = np.where(ok, np.ravel_multi_index(tuple(np.minimum(moved, system.cells - 1).T),
                                             system.shape), -1)
    la, _ = chain_field(space, np.stack(direct, axis=1), config)
    lstd, _ = chain_field(space, np.stack(conj, axis=1), config, keys=keys)
    lb = np.zeros(cells)
    lb[keys[ok]] = lstd[ok]
    return rows, float(np.abs(la - lb).max())


def lp_grid(f: np.ndarray, space, p: float = 2.0) -> float:
    """Unnormalised l^p norm of the cell norms (cells have equal volume)."""
    nr = space.norms(np.asarray(f).reshape(-1, space.dim))
    return float(np.sum(nr ** p)) ** (1.0 / p)


def run_systems(cfg: ExperimentConfig):
    header = ["item", "beta", "k", "identity_exact", "max_diff", "norm_f", "norm_tau",
              "rmf_max_diff"]
    space = cfg.norm_space
    M = cfg.grid or cfg.depth
    N = cfg.min_level
    rows = []
    rng = np.random.default_rng(cfg.seed)
    for i in range(cfg.count):
        beta = parse_beta(cfg.beta, cfg.n) if cfg.beta else random_beta(rng, cfg.n, M)
        system = ShiftedSystem(cfg.n, beta, M)
        item_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, i]))
        f_unit = item_rng.standard_normal((2 ** M,) * cfg.n + (space.dim,))
        sub, rmf_diff = systems_report(system, f_unit, N, space, _config_for_item(cfg, i))
        tag = ";".join(f"{j}:{','.join(map(str, b))}" for j, b in sorted(system.beta.items()))
        for r in sub:
            rows.append([i, tag, *r, rmf_diff])
    return ("shifted systems: A^beta_k = tau_N^-1 A_k tau_N for k >= N and the truncated "
            "rmf agrees both ways"), header, rows


def paraproduct_report(b: StepFunction, f: StepFunction, config: EstimatorConfig, p: float):
    P = paraproduct(b, f)
    pc = haar_decompose(P, adapted=False)
    bc = haar_decompose(b, adapted=False)
    slack = 0.0
    for k in range(f.tree.depth):
        want = bc.coeffs[k][:, :, 0][:, :, None] * np.asarray(f.averages(k), dtype=float)[:, None, :]
        slack = max(slack, float(np.abs(pc.coeffs[k] - want).max()) if want.size else 0.0)
    S = square_function(P, config)
    sq_lo = lp_norm(S.lower_function(), p)
    sq_hi = lp_norm(S.upper_function(), p)
    bmo_b = bmo_norm(b, 1, "average")
    rf = lp_norm(rmf(f, config).lower_function(), p)
    rhs = bmo_b * rf
    return [slack, sq_lo, sq_hi, bmo_b, rf, rhs, _ratio(sq_hi, rhs)]


def run_paraproduct(cfg: ExperimentConfig):
    header = ["item", "tag", "coeff_slack", "sq_lower", "sq_upper", "bmo_b", "rmf_f", "rhs",
              "ratio"]
    space = cfg.norm_space
    rows = []
    t = DyadicTree(cfg.n, cfg.depth)
    xi = np.ones(space.dim)
    if cfg.depth:
        h = haar_function(t, Cube.root(cfg.n), 1)
        rows.append(["closed-form", "b=h_root f=const",
                     *paraproduct_report(h, StepFunction.constant(t, space, xi), cfg.estimator, cfg.p)])
    fs = gen_corpus(cfg.corpus_spec(measure="uniform"))
    bs = gen_corpus(cfg.corpus_spec(generator="random-gaussian", dim=1, seed=cfg.seed + 1,
                                    measure="uniform"))
    sup = 0.0
    for i, (bi, fi) in enumerate(zip(bs, fs)):
        rep = paraproduct_report(bi.f, fi.f, _config_for_item(cfg, i), cfg.p)
        sup = max(sup, rep[-1])
        rows.append([i, f"{bi.tag}|{fi.tag}", *rep])
    rows.append(["sup", "aggregate", "", "", "", "", "", "", sup])
    return ("paraproduct: ||S(Pi_b f)||_p <~ ||b||_BMO ||rmf f||_p"), header, rows


RUNNERS = {
    "opnorm": run_opnorm,
    "weak-type": run_weak_type,
    "good-lambda": run_good_lambda,
    "bmo": run_bmo,
    "transfer": run_transfer,
    "systems": run_systems,
    "paraproduct": run_paraproduct,
}


def run(cfg: ExperimentConfig):
    return RUNNERS[cfg.experiment](cfg)
