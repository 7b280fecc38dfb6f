"""Verification suites: randomized comparisons of the solvers against the
exact oracles, at desk scale.

Each suite returns a list of :class:`Check` rows; a suite passes iff every
row passes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from ._numeric import ceil_log2, floor_log2, number_repr
from .adaptivity_gap import gap_instance, gap_policy
from .generate import (
    full_range_knapsack_instance,
    low_cost_knapsack_instance,
    random_knapsack_instance,
    random_matroid_instance,
    random_minbasis_instance,
    random_cardinality_instance,
)
from .matroid import to_mask
from .metamin import SumOfK, calls_bound, exact_solver, metamin_for, sum_of_k_indices, ub_interval_claim
from .model import Instance
from .objective import ThresholdContext, prob_trank_at_least, width_of
from .oracle import (
    RankDP,
    _knapsack_feasibility,
    opt_adaptive_expectation,
    opt_adaptive_mtrank_cardinality,
    opt_adaptive_rank_knapsack,
    opt_adaptive_rank_matroid,
    opt_nonadaptive,
)
from .policy import exact_expected_objective, exact_success_probability
from .solvers import (
    AdapMGreedy,
    bin_select,
    decomposition_check,
    density_greedy,
    ext_greedy,
    low_cost_universe,
    mgreedy,
    rank_knapsack_solver,
)


@dataclass
class Check:
    suite: str
    name: str
    claim: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.suite:<22} {self.name:<28} [{self.claim}] {self.detail}"


@dataclass
class Knobs:
    seed: int = 0
    trials: int | None = None
    n: int | None = None
    N: tuple[int, ...] = (4, 10, 100)


def _trials(knobs: Knobs, default: int) -> int:
    return default if knobs.trials is None else knobs.trials


def _n(knobs: Knobs, default: int) -> int:
    return default if knobs.n is None else knobs.n


def _tally(suite: str, name: str, claim: str, total: int, failures: list[str]) -> Check:
    detail = f"{total - len(failures)}/{total} held"
    if failures:
        detail += "; first failure: " + failures[0]
    return Check(suite, name, claim, not failures, detail)


# -- knapsack threshold problems ---------------------------------------------------


def no_gap_instances(seed: int, count: int, max_n: int = 10):
    """(instance, t) pairs shared by the no-gap and density checks."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(1, max_n)
        m = rng.randint(1, 4)
        inst = random_knapsack_instance(rng, n, m=m)
        out.append((inst, rng.randint(0, m)))
    return out


def suite_no_gap(knobs: Knobs) -> list[Check]:
    cases = no_gap_instances(knobs.seed, _trials(knobs, 200), _n(knobs, 10))
    gap_fail, dens_fail, prefix_fail = [], [], []
    for idx, (inst, t) in enumerate(cases):
        B = inst.budget
        non = opt_nonadaptive(inst, t=t)
        ada = opt_adaptive_rank_knapsack(inst, B, 1, t)
        if non.value != ada:
            gap_fail.append(f"#{idx}: non-adaptive {non.value} vs adaptive {ada}")
        order = density_greedy(inst, B, t)
        got = 1 - _fail_prob(inst, order, t)
        if got < non.value:
            dens_fail.append(f"#{idx}: greedy {got} < {non.value}")
        if order and inst.cost_of(order[:-1]) > B:
            prefix_fail.append(f"#{idx}: prefix cost {inst.cost_of(order[:-1])} > {B}")
    return [
        _tally("no-gap", "nonadaptive=adaptive", "threshold min-element has no adaptivity gap", len(cases), gap_fail),
        _tally("no-gap", "density-value", "density greedy beats best fixed set", len(cases), dens_fail),
        _tally("no-gap", "density-prefix", "greedy minus last element fits budget", len(cases), prefix_fail),
    ]


def _fail_prob(inst: Instance, S, t: int):
    out = 1
    for e in S:
        out = out * inst.dist(e).above_prob(t)
    return out


def _low_cost_dp(inst: Instance, B, i: int, t: int) -> RankDP:
    allowed = to_mask(low_cost_universe(inst, B, i))
    fits = _knapsack_feasibility(inst.costs, B)
    return RankDP(inst.below_probs(t), lambda mask, e: bool(allowed >> e & 1) and fits(mask, e))


def suite_extgreedy_dominance(knobs: Knobs) -> list[Check]:
    rng = random.Random(knobs.seed)
    trials = _trials(knobs, 100)
    failures = []
    for idx in range(trials):
        i = rng.randint(1, 4)
        n = rng.randint(i, _n(knobs, 12))
        inst = low_cost_knapsack_instance(rng, n, i, m=rng.randint(1, 4))
        B, t = inst.budget, rng.randint(0, inst.m - 1)
        dp = _low_cost_dp(inst, B, i, t)
        low = low_cost_universe(inst, B, i)
        for ell in range(1, i + 1):
            G = ext_greedy(inst, low, B, ell, t).order
            got = prob_trank_at_least(G, ell, t, inst)
            opt = dp.value(0, ell)
            if got < opt:
                failures.append(f"#{idx} l={ell}: {got} < {opt}")
    return [_tally("extgreedy-dominance", "G_l vs adaptive optimum", "greedy dominates low-cost adaptive policies",
                   trials, failures)]


def suite_bin_value(knobs: Knobs) -> list[Check]:
    rng = random.Random(knobs.seed)
    trials = _trials(knobs, 100)
    value_fail, cost_fail, level_fail = [], [], []
    for idx in range(trials):
        i = rng.randint(1, 4)
        n = rng.randint(1, _n(knobs, 12))
        inst = full_range_knapsack_instance(rng, n, m=rng.randint(1, 4))
        B, t = inst.budget, rng.randint(0, inst.m - 1)
        S = rank_knapsack_solver(inst, B, i, t)
        got = prob_trank_at_least(S, i, t, inst)
        opt = opt_adaptive_rank_knapsack(inst, B, i, t)
        if got < opt:
            value_fail.append(f"#{idx}: {got} < {opt}")
        bound = 3 * B + 2 * B * ceil_log2(i)
        if inst.cost_of(S) > bound:
            cost_fail.append(f"#{idx}: cost {inst.cost_of(S)} > {bound}")
        for j, c in enumerate(bin_select(inst, B, i, t).level_costs(inst), 1):
            if c > 2 * B:
                level_fail.append(f"#{idx} level {j}: {c} > {2 * B}")
    return [
        _tally("bin-value", "value", "G u C beats the adaptive optimum", trials, value_fail),
        _tally("bin-value", "cost", "cost(G u C) <= 3B + 2B ceil(log i)", trials, cost_fail),
        _tally("bin-value", "level-cost", "each bin level costs at most 2B", trials, level_fail),
    ]


def suite_cost_bounds(knobs: Knobs) -> list[Check]:
    rng = random.Random(knobs.seed)
    trials = _trials(knobs, 500)
    worst = Fraction(0)
    failures = []
    for idx in range(trials):
        i = rng.randint(1, 16)
        inst = full_range_knapsack_instance(rng, rng.randint(1, _n(knobs, 40)), m=4)
        B, t = inst.budget, rng.randint(0, 3)
        ratio = inst.cost_of(rank_knapsack_solver(inst, B, i, t)) / B
        limit = 3 + 2 * ceil_log2(i)
        worst = max(worst, ratio / limit)
        if ratio > limit:
            failures.append(f"#{idx}: cost/B = {ratio} > {limit}")
    chk = _tally("cost-bounds", "cost ratio", "cost(G u C)/B <= 3 + 2 ceil(log i)", trials, failures)
    chk.detail += f"; max (cost/B)/limit = {float(worst):.4f}"
    return [chk]


# -- matroids -----------------------------------------------------------------------


def suite_mgreedy_opt(knobs: Knobs) -> list[Check]:
    rng = random.Random(knobs.seed)
    trials = _trials(knobs, 100)
    failures = []
    for idx in range(trials):
        inst = random_matroid_instance(rng, rng.randint(1, _n(knobs, 10)), m=rng.randint(1, 4))
        M, t = inst.outer_matroid, rng.randint(0, inst.m - 1)
        basis = mgreedy(inst, M, t)
        for i in range(1, M.rank() + 1):
            got = prob_trank_at_least(basis, i, t, inst)
            opt = opt_adaptive_rank_matroid(inst, M, i, t)
            if got != opt:
                failures.append(f"#{idx} i={i}: {got} != {opt}")
    return [_tally("mgreedy-opt", "basis = adaptive optimum", "matroid greedy is optimal for every rank target",
                   trials, failures)]


def suite_adapmgreedy_opt(knobs: Knobs) -> list[Check]:
    rng = random.Random(knobs.seed)
    trials = _trials(knobs, 100)
    failures, zero_fail = [], []
    for idx in range(trials):
        n = rng.randint(1, _n(knobs, 7))
        B = rng.randint(1, 5)
        inst = random_minbasis_instance(rng, n, B, m=rng.randint(1, 4))
        M, t = inst.inner_matroid, rng.randint(0, inst.m - 1)
        pol = AdapMGreedy(inst, M, B, t)
        for i in range(1, M.rank() + 2):
            got = exact_success_probability(pol, inst, ThresholdContext(t, i), "mtrank", M, collapse=True)
            opt = opt_adaptive_mtrank_cardinality(inst, M, B, i, t)
            if got != opt:
                failures.append(f"#{idx} i={i}: {got} != {opt}")
            if B < i and got != 0:
                zero_fail.append(f"#{idx} B={B} i={i}: {got}")
    return [
        _tally("adapmgreedy-opt", "policy = adaptive optimum", "adaptive matroid greedy is optimal", trials, failures),
        _tally("adapmgreedy-opt", "short budget", "success is 0 when B < i", trials, zero_fail),
    ]


# -- reductions ----------------------------------------------------------------------


def metamin_instances(seed: int, count: int, max_n: int = 6):
    rng = random.Random(seed)
    out = []
    for idx in range(count):
        n = rng.randint(1, max_n)
        m = (3, 7, 15)[idx % 3]
        kind = idx % 3 if n >= 1 else 0
        if kind == 0:
            inst = random_knapsack_instance(rng, n, m=m, max_support=3)
        elif kind == 1:
            inst = random_cardinality_instance(rng, n, m, rng.randint(1, max(1, n - 1)))
        else:
            inst = random_matroid_instance(rng, n, m=m, max_rank=3)
        out.append(inst)
    return out


def metamin_case(inst: Instance) -> dict:
    """Exact E[UB], oracle optimum, interval-claim and call-count facts for one instance."""
    pol = metamin_for(inst, exact_solver(inst))
    ev = exact_expected_objective(pol, inst)
    opt = opt_adaptive_expectation(inst).value
    claim = all(ub_interval_claim(r.call_log, r.ub_value, inst.m) for _, r in ev.outcomes)
    calls = max(len(r.call_log) for _, r in ev.outcomes)
    return {"expected": ev.expected, "expected_ub": ev.expected_ub, "opt": opt, "claim": claim,
            "calls": calls, "bound": calls_bound(inst.m)}


def suite_metamin_4x(knobs: Knobs) -> list[Check]:
    cases = metamin_instances(knobs.seed, _trials(knobs, 50), _n(knobs, 6))
    ratio_fail, claim_fail, call_fail = [], [], []
    worst = 0.0
    for idx, inst in enumerate(cases):
        res = metamin_case(inst)
        if res["expected_ub"] > 4 * res["opt"]:
            ratio_fail.append(f"#{idx}: E[UB]={res['expected_ub']} > 4*{res['opt']}")
        if res["opt"]:
            worst = max(worst, float(res["expected_ub"] / res["opt"]))
        if not res["claim"]:
            claim_fail.append(f"#{idx}")
        if res["calls"] > res["bound"]:
            call_fail.append(f"#{idx}: {res['calls']} calls > {res['bound']}")
    first = _tally("metamin-4x", "E[UB] <= 4 OPT", "threshold reduction loses at most 4x", len(cases), ratio_fail)
    first.detail += f"; max E[UB]/OPT = {worst:.4f}"
    return [
        first,
        _tally("metamin-4x", "UB interval claim", "UB in (a,b] iff fail at a, succeed at b", len(cases), claim_fail),
        _tally("metamin-4x", "call count", "calls <= 1 + ceil(log(floor(log m) + 2))", len(cases), call_fail),
    ]


def sumk_instances(seed: int, count: int, max_n: int = 6):
    rng = random.Random(seed)
    return [random_knapsack_instance(rng, rng.randint(2, max_n), m=3, k=2) for _ in range(count)]


def sumk_case(inst: Instance, index_mode: str = "reversed") -> dict:
    solver = exact_solver(inst)
    pol = SumOfK(solver, inst.objective, inst.k, inst.m, beta=solver.beta, index_mode=index_mode)
    ev = exact_expected_objective(pol, inst)
    opt = opt_adaptive_expectation(inst).value
    runs = {len(r.info["runs"]) for _, r in ev.outcomes}
    return {"expected": ev.expected, "opt": opt, "runs": runs, "indices": sum_of_k_indices(inst.k, index_mode)}


def suite_sumk_8x(knobs: Knobs) -> list[Check]:
    cases = sumk_instances(knobs.seed, _trials(knobs, 20), _n(knobs, 6))
    ratio_fail, run_fail = [], []
    worst = 0.0
    for idx, inst in enumerate(cases):
        res = sumk_case(inst)
        if res["expected"] > 8 * res["opt"]:
            ratio_fail.append(f"#{idx}: {res['expected']} > 8*{res['opt']}")
        if res["opt"]:
            worst = max(worst, float(res["expected"] / res["opt"]))
        if res["runs"] != {floor_log2(inst.k) + 1}:
            run_fail.append(f"#{idx}: runs {sorted(res['runs'])}")
    first = _tally("sumk-8x", "E[f] <= 8 OPT", "sum-of-k reduction loses at most 8x", len(cases), ratio_fail)
    first.detail += f"; max E[f]/OPT = {worst:.4f}"
    return [first, _tally("sumk-8x", "run count", "floor(log k) + 1 binary searches", len(cases), run_fail)]


# -- structural identities ---------------------------------------------------------------


def decomposition_cases(seed: int, count: int):
    """(instance, G, orderings, t, ell) tuples for the rectangle identity."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(1, 8)
        inst = random_knapsack_instance(rng, n, m=rng.randint(1, 4))
        G = rng.sample(range(n), rng.randint(1, n))
        shuffled = G[:]
        rng.shuffle(shuffled)
        orderings = [sorted(G), sorted(G, reverse=True), shuffled]
        out.append((inst, G, orderings, rng.randint(0, inst.m), rng.randint(1, len(G))))
    return out


def suite_decomposition(knobs: Knobs) -> list[Check]:
    cases = decomposition_cases(knobs.seed, _trials(knobs, 500))
    failures, telescope = [], []
    for idx, (inst, G, orders, t, ell) in enumerate(cases):
        for order in orders:
            r = decomposition_check(G, order, inst, t, ell)
            if r != 0:
                failures.append(f"#{idx}: residual {number_repr(r)}")
            if decomposition_check(G, order, inst, t, 1) != 0 or prob_trank_at_least(G, 1, t, inst) != width_of(G, t, inst):
                telescope.append(f"#{idx}")
    return [
        _tally("decomposition", "rectangle identity", "rectangles add up to P(trank >= l)", len(cases), failures),
        _tally("decomposition", "l=1 telescopes", "l = 1 areas sum to width(G)", len(cases), telescope),
    ]


def suite_nesting(knobs: Knobs) -> list[Check]:
    rng = random.Random(knobs.seed)
    trials = _trials(knobs, 1000)
    failures = []
    for idx in range(trials):
        n = rng.randint(1, _n(knobs, 10))
        inst = random_knapsack_instance(rng, n, m=rng.randint(1, 4))
        U = rng.sample(range(n), rng.randint(1, n))
        e = rng.choice(U)
        B = Fraction(rng.randint(int(inst.cost(e)), max(int(inst.cost(e)), 2 * sum(int(inst.cost(u)) for u in U))))
        t = rng.randint(0, inst.m)
        outer = set(ext_greedy(inst, U, B, 0, t).order)
        inner = set(ext_greedy(inst, [u for u in U if u != e], B - inst.cost(e), 0, t).order)
        if not inner <= outer:
            failures.append(f"#{idx}: {sorted(inner - outer)} outside")
    return [_tally("nesting", "smaller greedy is nested", "greedy on U-e with B-c_e sits inside greedy on U",
                   trials, failures)]


def gap_case(N: int) -> dict:
    inst = gap_instance(N)
    adaptive = exact_expected_objective(gap_policy(), inst).expected
    non = opt_nonadaptive(inst)
    opt = opt_adaptive_expectation(inst).value
    return {"N": N, "adaptive": adaptive, "nonadaptive": non.value, "nonadaptive_set": non.members,
            "oracle": opt, "ratio": non.value / adaptive}


def suite_gap_example(knobs: Knobs) -> list[Check]:
    out = []
    for N in knobs.N:
        res = gap_case(N)
        a, na, r = res["adaptive"], res["nonadaptive"], res["ratio"]
        detail = (f"N={N}: adaptive E={number_repr(a)} ({float(a):.6g}), best fixed set "
                  f"{list(res['nonadaptive_set'])} E={number_repr(na)}, ratio={float(r):.4g}")
        out.append(Check("gap-example", f"adaptive<=2/N N={N}", "three-element policy", a <= Fraction(2, N), detail))
        out.append(Check("gap-example", f"fixed-set=1 N={N}", "best fixed set has E = 1", na == 1, detail))
        out.append(Check("gap-example", f"ratio>=N/2 N={N}", "adaptivity gap at least N/2", r >= Fraction(N, 2), detail))
    return out


SUITES: dict[str, Callable[[Knobs], list[Check]]] = {
    "no-gap": suite_no_gap,
    "extgreedy-dominance": suite_extgreedy_dominance,
    "bin-value": suite_bin_value,
    "cost-bounds": suite_cost_bounds,
    "mgreedy-opt": suite_mgreedy_opt,
    "adapmgreedy-opt": suite_adapmgreedy_opt,
    "metamin-4x": suite_metamin_4x,
    "sumk-8x": suite_sumk_8x,
    "decomposition": suite_decomposition,
    "nesting": suite_nesting,
    "gap-example": suite_gap_example,
}


def run_suite(name: str, knobs: Knobs | None = None) -> list[Check]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](knobs or Knobs())
