"""Bound tables and CSV rows for finished runs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction

from .accounting import account_trace, offline_side_indicators
from .pipeline import RunResult

ZERO = Fraction(0)

# Every bound the harness knows, in CSV column order.  A bound that does not
# apply to a run leaves its columns empty.
BOUND_NAMES = (
    "late_requests",
    "alg_total_vs_3Dkf",
    "kf_vs_charge_feas",
    "delay_vs_buy_connect",
    "buy_connect_vs_3Dkf",
    "kf_vs_D1_feas",
    "delay_vs_buy",
    "alg_vs_2kDw",
    "kw_vs_buy_Ddelay_feas",
    "kw_vs_D_feas",
    "virtual_tree_buy_ratio",
    "alg_vs_4D2_feas",
    "buy_vs_2D5_sum_we",
    "alg_vs_osd_feas",
    "indicator_vs_osd_feas",
)


@dataclass(frozen=True)
class Bound:
    name: str
    lhs: Fraction
    rhs: Fraction

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs


def osd_constants(D: int) -> tuple[int, int]:
    """Coefficients (of FEAS buy, of FEAS delay) in the end-to-end service bound.

    gamma = 2(2D+5) bounds ALG by gamma * sum of w(e_i); charging that sum to
    the offline cost gives ALG <= 13 gamma OPT^B + 12 gamma D OPT^D.
    """
    gamma = 2 * (2 * D + 5)
    return 13 * gamma, 12 * gamma * D


def compute_bounds(result: RunResult, feas=None) -> list[Bound]:
    algo, run, tree = result.algorithm, result.run, result.tree
    trace = run.trace
    alg = trace.reported
    k = trace.k
    D = tree.D
    out: list[Bound] = []
    if getattr(run, "pieces", 1) > 1:
        # pieces run independently, so one offline solution over the whole tree does not bound them
        feas = None
    if algo == "fl-deadline":
        late = sum(1 for q in result.instance.requests if trace.served.get(q.id) is None or trace.served[q.id] > q.deadline)
        out.append(Bound("late_requests", Fraction(late), ZERO))
        out.append(Bound("alg_total_vs_3Dkf", alg.total, 3 * (D + 1) * k * run.f))
        if feas is not None:
            out.append(Bound("kf_vs_charge_feas", k * run.f, 2 * (D + 1) * feas.cost.buy + 4 * feas.cost.connect))
    elif algo == "fl-delay":
        out.append(Bound("delay_vs_buy_connect", alg.delay, alg.buy + alg.connect))
        out.append(Bound("buy_connect_vs_3Dkf", alg.buy + alg.connect, 3 * (D + 1) * k * run.f))
        if feas is not None:
            out.append(Bound("kf_vs_D1_feas", k * run.f, (D + 1) * feas.cost.total))
    elif algo in ("mad", "mad-general"):
        out.append(Bound("delay_vs_buy", alg.delay, alg.buy))
        if algo == "mad":
            rhs = sum((2 * k_r * tree.edge_height(r) * tree.weight[r] for r, k_r in run.services_per_root.items()), ZERO)
            out.append(Bound("alg_vs_2kDw", alg.total, rhs))
            if feas is not None:
                kw = sum((k_r * tree.weight[r] for r, k_r in run.services_per_root.items()), ZERO)
                out.append(Bound("kw_vs_buy_Ddelay_feas", kw, feas.cost.buy + D * feas.cost.delay))
                out.append(Bound("kw_vs_D_feas", kw, D * feas.cost.total))
        else:
            out.append(Bound("virtual_tree_buy_ratio", virtual_tree_buy_ratio(result), Fraction(1)))
            if feas is not None:
                out.append(Bound("alg_vs_4D2_feas", alg.total, 4 * D * D * feas.cost.total))
    elif algo == "osd":
        out.append(Bound("delay_vs_buy", alg.delay, alg.buy))
        sum_we = sum((tree.weight[s.element] for s in trace.services), ZERO)
        out.append(Bound("buy_vs_2D5_sum_we", alg.buy, (2 * D + 5) * sum_we))
        if feas is not None:
            cb, cd = osd_constants(D)
            out.append(Bound("alg_vs_osd_feas", alg.total, cb * feas.cost.buy + cd * feas.cost.delay))
            ind = offline_side_indicators(tree, trace, feas)
            lhs = sum((tree.weight[s.element] for s, i in zip(trace.services, ind) if i), ZERO)
            out.append(Bound("indicator_vs_osd_feas", lhs, 3 * feas.cost.buy + 3 * D * feas.cost.delay))
    return out


def virtual_tree_buy_ratio(result: RunResult) -> Fraction:
    """max over virtual trees of concrete buy / (2 D k_i w(r^i)); at most 1 when the per-tree bound holds."""
    run, tree = result.run, result.tree
    per_tree: dict[int, Fraction] = {}
    count: dict[int, int] = {}
    for s in run.trace.services:
        per_tree[s.virtual_tree] = per_tree.get(s.virtual_tree, ZERO) + sum((tree.weight[e] for e in s.tree), ZERO)
        count[s.virtual_tree] = count.get(s.virtual_tree, 0) + 1
    roots = run.virtual.decomposition.roots
    ratios = [per_tree[i] / (2 * tree.D * count[i] * tree.weight[roots[i]]) for i in per_tree]
    return max(ratios, default=ZERO)


def concretization_ratio(result: RunResult) -> Fraction | None:
    """Largest concrete / virtual buy over single transmissions (a statistic, not a bound)."""
    if result.algorithm != "mad-general":
        return None
    tree = result.tree
    ratios = []
    for s in result.trace.services:
        virtual = sum((tree.weight[e] for e in s.virtual_edges), ZERO)
        concrete = sum((tree.weight[e] for e in s.tree), ZERO)
        ratios.append(concrete / virtual)
    return max(ratios, default=None)


def decimal_string(x: Fraction | None, places: int = 6) -> str:
    if x is None:
        return ""
    with localcontext() as ctx:
        ctx.prec = 60
        value = Decimal(x.numerator) / Decimal(x.denominator)
        return str(value.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_EVEN))


def exact_string(x: Fraction | None) -> str:
    if x is None:
        return ""
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class RunReport:
    instance_id: str
    master_seed: int | None
    trial_seed: int | None
    algorithm: str
    n: int
    requests: int
    D: int
    k: int
    alg_buy: Fraction
    alg_connect: Fraction
    alg_delay: Fraction
    feas_total: Fraction | None
    bounds: list[Bound]
    checks: dict[str, bool]
    accountant_agrees: bool
    concretization: Fraction | None = None
    errors: list[str] = field(default_factory=list)

    @property
    def alg_total(self) -> Fraction:
        return self.alg_buy + self.alg_connect + self.alg_delay

    @property
    def ratio(self) -> Fraction | None:
        if self.feas_total is None or self.feas_total == 0:
            return None
        return self.alg_total / self.feas_total

    @property
    def ok(self) -> bool:
        return all(b.ok for b in self.bounds) and all(self.checks.values()) and self.accountant_agrees

    def row(self) -> dict[str, str]:
        out = {
            "instance_id": self.instance_id,
            "master_seed": "" if self.master_seed is None else str(self.master_seed),
            "trial_seed": "" if self.trial_seed is None else str(self.trial_seed),
            "algorithm": self.algorithm,
            "n": str(self.n),
            "requests": str(self.requests),
            "D": str(self.D),
            "k": str(self.k),
        }
        for name in ("alg_buy", "alg_connect", "alg_delay", "alg_total", "feas_total", "ratio"):
            value = getattr(self, name)
            out[name] = decimal_string(value)
            out[name + "_exact"] = exact_string(value)
        out["concretization_ratio"] = decimal_string(self.concretization)
        by_name = {b.name: b for b in self.bounds}
        for name in BOUND_NAMES:
            b = by_name.get(name)
            out[name + "_lhs"] = exact_string(b.lhs) if b else ""
            out[name + "_rhs"] = exact_string(b.rhs) if b else ""
            out[name + "_ok"] = ("true" if b.ok else "false") if b else ""
        out["checks_ok"] = "true" if all(self.checks.values()) else "false"
        out["failed_checks"] = ";".join(sorted(k for k, v in self.checks.items() if not v))
        out["accountant_agrees"] = "true" if self.accountant_agrees else "false"
        return out


def csv_columns() -> list[str]:
    cols = ["instance_id", "master_seed", "trial_seed", "algorithm", "n", "requests", "D", "k"]
    for name in ("alg_buy", "alg_connect", "alg_delay", "alg_total", "feas_total", "ratio"):
        cols += [name, name + "_exact"]
    cols.append("concretization_ratio")
    for name in BOUND_NAMES:
        cols += [name + "_lhs", name + "_rhs", name + "_ok"]
    cols += ["checks_ok", "failed_checks", "accountant_agrees"]
    return cols


def build_report(result: RunResult, original, *, feas=None, instance_id: str = "instance",
                 master_seed: int | None = None, trial_seed: int | None = None) -> RunReport:
    """``original`` is the instance as given (before any embedding)."""
    acct = account_trace(result.instance, result.trace, result.tree)
    agrees = acct.ok and acct.cost == result.trace.reported
    n = original.metric.n if original.metric is not None else len(original.tree.leaves)
    alg = result.trace.reported
    return RunReport(
        instance_id=instance_id,
        master_seed=master_seed,
        trial_seed=trial_seed,
        algorithm=result.algorithm,
        n=n,
        requests=len(original.requests),
        D=result.tree.D,
        k=result.trace.k,
        alg_buy=alg.buy,
        alg_connect=alg.connect,
        alg_delay=alg.delay,
        feas_total=None if feas is None else feas.cost.total,
        bounds=compute_bounds(result, feas),
        checks=dict(result.checks),
        accountant_agrees=agrees,
        concretization=concretization_ratio(result),
        errors=list(acct.errors),
    )


def write_csv(reports: list[RunReport], handle=None) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=csv_columns(), lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.row())
    text = buf.getvalue()
    if handle is not None:
        handle.write(text)
    return text
