"""Numerical verification of the package's analytical guarantees.

Each checker evaluates one inequality (or identity) exactly on a small
dense MMDP and reports the margin by which it holds. Margins are signed
so that nonnegative means satisfied; tiny negative margins within the
stated tolerance are accepted as float roundoff. The sweep driver runs
every checker over freshly drawn random instances and summarizes worst
cases into a JSON-serializable report.

The quantities involved:

  identity    eta(new) = eta(old) + E_{s~d_new, a~new}[sum_i A_i^old]
  return      eta(new) >= eta(old) + zeta_old(new) - C * max_s KL(joint)
  gap         zeta_ref(suggested) - zeta_ref(true)
                <= f_ref + sum_i max|A_i|/2 * sum_{s,a}(tilde_i - true)^2
  surrogate   eta(new) >= eta(old) + zeta_old(suggested_new)
                - C * sum_i max_s KL(own_i) - f_old
                - sum_i max|A_i|/2 * sum_{s,a}(tilde_i - new)^2
  kl_product  max_s KL(joint) <= sum_i max_s KL(own_i), with per-state
              equality of the joint KL and the sum of factor KLs

where f_ref = sum_i max|A_i^ref|/2 * |A_joint| * ||d_ref||_2^2, d is the
unnormalized discounted visitation measure, and C scales the worst total
advantage by 4 * gamma / (1 - gamma)^2.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from .tabular import (TabularMMDP, advantage_function, collective_return,
                      joint_policy_table, kl_rows, max_kl, occupancy,
                      perturbed_policies, random_mmdp, random_policies, zeta)

IDENTITY_TOL = 1e-8
INEQUALITY_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    margin: float     # >= -tolerance means the guarantee held
    tolerance: float
    passed: bool
    detail: str = ""


def _result(name: str, margin: float, tolerance: float,
            detail: str = "") -> CheckResult:
    margin = float(margin)
    return CheckResult(name, margin, tolerance, bool(margin >= -tolerance), detail)


def advantage_scale_constant(mmdp: TabularMMDP, joint_table) -> float:
    """C = 4 * gamma * max_{s,a} |sum_i A_i| / (1 - gamma)^2."""
    total = np.zeros((mmdp.n_states, mmdp.n_joint_actions))
    for i in range(mmdp.n_agents):
        total += advantage_function(mmdp, joint_table, i)
    eps = float(np.abs(total).max())
    return 4.0 * eps * mmdp.gamma / (1.0 - mmdp.gamma) ** 2


def advantage_span_penalty(mmdp: TabularMMDP, ref_table) -> float:
    """f term: sum_i max|A_i|/2 * |A_joint| * ||d||_2^2 under ref_table."""
    d = occupancy(mmdp, ref_table)
    d_norm = float(d @ d)
    total = 0.0
    for i in range(mmdp.n_agents):
        max_adv = float(np.abs(advantage_function(mmdp, ref_table, i)).max())
        total += 0.5 * max_adv * mmdp.n_joint_actions * d_norm
    return total


def suggestion_distance_penalty(mmdp: TabularMMDP, ref_table,
                                tilde_tables, target_table) -> float:
    """sum_i max|A_i^ref|/2 * sum_{s,a} (tilde_i(a|s) - target(a|s))^2."""
    total = 0.0
    for i in range(mmdp.n_agents):
        max_adv = float(np.abs(advantage_function(mmdp, ref_table, i)).max())
        gap = float(np.sum((tilde_tables[i] - target_table) ** 2))
        total += 0.5 * max_adv * gap
    return total


def check_policy_difference_identity(mmdp: TabularMMDP, old_table,
                                     new_table) -> CheckResult:
    """The exact change-of-policy identity: the new return equals the old
    plus the total old-advantage averaged over the *new* visitation."""
    d_new = occupancy(mmdp, new_table)
    gain = 0.0
    for i in range(mmdp.n_agents):
        adv = advantage_function(mmdp, old_table, i)
        gain += float(d_new @ np.einsum("sa,sa->s", new_table, adv))
    lhs = collective_return(mmdp, new_table)
    rhs = collective_return(mmdp, old_table) + gain
    scale = max(1.0, abs(lhs), abs(rhs))
    return _result("policy_difference_identity",
                   -abs(lhs - rhs) / scale, IDENTITY_TOL,
                   f"lhs={lhs:.12g} rhs={rhs:.12g}")


def check_return_lower_bound(mmdp: TabularMMDP, old_table,
                             new_table) -> CheckResult:
    """Trust-region style lower bound on the new collective return."""
    eta_new = collective_return(mmdp, new_table)
    eta_old = collective_return(mmdp, old_table)
    z = zeta(mmdp, old_table, [new_table] * mmdp.n_agents)
    c = advantage_scale_constant(mmdp, old_table)
    bound = eta_old + z - c * max_kl(old_table, new_table)
    return _result("return_lower_bound", eta_new - bound, IDENTITY_TOL * 100,
                   f"eta_new={eta_new:.10g} bound={bound:.10g}")


def check_suggestion_gap_bound(mmdp: TabularMMDP, ref_table, true_table,
                               tilde_tables) -> CheckResult:
    """Bound on the advantage-estimate gap from using suggested policies."""
    lhs = (zeta(mmdp, ref_table, tilde_tables)
           - zeta(mmdp, ref_table, [true_table] * mmdp.n_agents))
    rhs = (advantage_span_penalty(mmdp, ref_table)
           + suggestion_distance_penalty(mmdp, ref_table, tilde_tables,
                                         true_table))
    return _result("suggestion_gap_bound", rhs - lhs, INEQUALITY_TOL,
                   f"lhs={lhs:.10g} rhs={rhs:.10g}")


def check_surrogate_lower_bound(mmdp: TabularMMDP, old_own, new_own,
                                tilde_new_tables) -> CheckResult:
    """Combined bound: the new return against the suggestion-based
    surrogate, per-agent own-policy KLs, and both penalty terms.

    old_own and new_own are per-agent policy lists; tilde_new_tables holds
    each agent's suggested joint table whose own factor is its new policy.
    """
    old_table = joint_policy_table(mmdp, old_own)
    new_table = joint_policy_table(mmdp, new_own)
    eta_new = collective_return(mmdp, new_table)
    eta_old = collective_return(mmdp, old_table)
    z = zeta(mmdp, old_table, tilde_new_tables)
    c = advantage_scale_constant(mmdp, old_table)
    kl_sum = sum(max_kl(old_own[i], new_own[i]) for i in range(mmdp.n_agents))
    bound = (eta_old + z - c * kl_sum
             - advantage_span_penalty(mmdp, old_table)
             - suggestion_distance_penalty(mmdp, old_table, tilde_new_tables,
                                           new_table))
    return _result("surrogate_lower_bound", eta_new - bound,
                   IDENTITY_TOL * 100,
                   f"eta_new={eta_new:.10g} bound={bound:.10g}")


def check_kl_product_subadditivity(mmdp: TabularMMDP, old_own,
                                   new_own) -> CheckResult:
    """For product policies the per-state joint KL equals the sum of the
    factor KLs, so the max over states is subadditive across agents."""
    old_table = joint_policy_table(mmdp, old_own)
    new_table = joint_policy_table(mmdp, new_own)
    joint = kl_rows(old_table, new_table)
    factor_sum = np.zeros(mmdp.n_states)
    for i in range(mmdp.n_agents):
        factor_sum += kl_rows(old_own[i], new_own[i])
    factor_err = float(np.abs(joint - factor_sum).max())
    if factor_err > IDENTITY_TOL:
        return _result("kl_product_subadditivity", -factor_err, IDENTITY_TOL,
                       "per-state factorization failed")
    margin = sum(float(kl_rows(old_own[i], new_own[i]).max())
                 for i in range(mmdp.n_agents)) - float(joint.max())
    return _result("kl_product_subadditivity", margin, INEQUALITY_TOL)


CHECK_NAMES = ("policy_difference_identity", "return_lower_bound",
               "suggestion_gap_bound", "surrogate_lower_bound",
               "kl_product_subadditivity")


def run_instance_checks(rng: np.random.Generator, n_states: int,
                        action_sizes, gamma: float,
                        shift: float = 0.3) -> list[CheckResult]:
    """Draw one random instance plus old/new/suggested policies and run
    all five checks on it."""
    mmdp = random_mmdp(rng, n_states, action_sizes, gamma)
    old_own = random_policies(rng, mmdp)
    new_own = perturbed_policies(rng, old_own, shift)
    # Agent i suggests: its own new policy for itself, an imperfect guess
    # (a perturbation of the truth) for everyone else.
    tilde_tables = []
    for i in range(mmdp.n_agents):
        guess = perturbed_policies(rng, new_own, shift)
        guess[i] = new_own[i]
        tilde_tables.append(joint_policy_table(mmdp, guess))

    old_table = joint_policy_table(mmdp, old_own)
    new_table = joint_policy_table(mmdp, new_own)
    return [
        check_policy_difference_identity(mmdp, old_table, new_table),
        check_return_lower_bound(mmdp, old_table, new_table),
        check_suggestion_gap_bound(mmdp, old_table, new_table, tilde_tables),
        check_surrogate_lower_bound(mmdp, old_own, new_own, tilde_tables),
        check_kl_product_subadditivity(mmdp, old_own, new_own),
    ]


def run_verification_sweep(n_instances: int = 1000, seed: int = 0,
                           sizes=((2, (2, 2)), (3, (2, 3)), (4, (3, 3)),
                                  (5, (2, 2, 2))),
                           gammas=(0.5, 0.9)) -> dict:
    """Run all checks across many random instances; summarize worst margins.

    Instance shapes cycle through `sizes` (n_states, per-agent actions)
    crossed with `gammas`. Returns a JSON-ready report dict.
    """
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    stats = {name: {"count": 0, "failures": 0,
                    "worst_margin": float("inf"), "worst_instance": -1}
             for name in CHECK_NAMES}
    combos = [(s, a, g) for (s, a) in sizes for g in gammas]
    for k in range(n_instances):
        n_states, action_sizes, gamma = combos[k % len(combos)]
        for res in run_instance_checks(rng, n_states, action_sizes, gamma):
            entry = stats[res.name]
            entry["count"] += 1
            if not res.passed:
                entry["failures"] += 1
            if res.margin < entry["worst_margin"]:
                entry["worst_margin"] = res.margin
                entry["worst_instance"] = k
    report = {
        "instances": n_instances,
        "seed": seed,
        "elapsed_seconds": time.perf_counter() - start,
        "all_passed": all(v["failures"] == 0 for v in stats.values()),
        "checks": stats,
    }
    return report


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def format_report(report: dict) -> str:
    """Human-readable sweep summary, one line per check."""
    lines = [f"instances: {report['instances']}   seed: {report['seed']}   "
             f"elapsed: {report['elapsed_seconds']:.2f}s"]
    for name in CHECK_NAMES:
        entry = report["checks"][name]
        status = "ok " if entry["failures"] == 0 else "FAIL"
        lines.append(f"  [{status}] {name:<28} checks={entry['count']:<6} "
                     f"failures={entry['failures']:<4} "
                     f"worst_margin={entry['worst_margin']:.3e}")
    lines.append("all passed" if report["all_passed"] else "SOME CHECKS FAILED")
    return "\n".join(lines)
