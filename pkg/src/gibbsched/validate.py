"""Statistical self-checks for the sampler and the control plane.

Each report function runs one falsifiable experiment — sampling distribution
against the closed-form density, reversibility of the single-site dynamics,
contention-window guarantees — and returns a JSON-friendly dict with the
test statistics, p-values, sample counts, and a ``pass`` verdict. The CLI
``validate`` subcommand bundles them; the acceptance tests pin their
thresholds. ``corrupt`` switches break the sampler on purpose so the battery
can demonstrate it actually rejects wrong implementations.
"""
from __future__ import annotations

import inspect
import math

import numpy as np
from scipy import integrate, stats
from scipy.special import logsumexp

from .gibbs import build_profile, interval_log_masses, sample_power
from .mac import (
    contention_degree_bound,
    decision_set_rounds,
    transmitter_contention,
)
from .oracle import objective_value
from .phy import build_link_system
from .scheduler import GibbsPolicy
from .topology import (
    compute_neighborhoods,
    explicit_topology,
    pair_modulation_table,
    ring_topology,
)

DEFAULT_P_THRESHOLD = 0.01


def reference_system():
    """The documented four-flow example network with the two-scheme table."""
    topo = explicit_topology(
        node_ids=list("abcdefgh"),
        link_pairs=[("a", "b"), ("c", "d"), ("e", "f"), ("g", "h")],
        gain_entries={("a", "b"): 1.0, ("c", "d"): 1.0, ("e", "f"): 1.0,
                      ("g", "h"): 1.0, ("c", "b"): 0.25, ("c", "f"): 0.25,
                      ("e", "d"): 0.25, ("a", "d"): 0.25},
        noise=1.0, pmax=40.0,
        one_hop_pairs=[("a", "b"), ("a", "c"), ("a", "d"), ("a", "h"),
                       ("b", "c"), ("c", "d"), ("c", "f"), ("d", "e"),
                       ("e", "f"), ("e", "g"), ("g", "h")])
    return build_link_system(topo, pair_modulation_table())


def reference_profile():
    """The cd link's conditional profile against powers (15, 0, 10, 0) and
    backlogs (10, 100, 10, 0) — the worked example the unit tests freeze."""
    system = reference_system()
    return build_profile(system, np.array([15.0, 0.0, 10.0, 0.0]), 1,
                         np.array([10.0, 100.0, 10.0, 0.0]))


# ---------------------------------------------------------------------------
# sampler distribution


def _merged_chi_square(counts: np.ndarray, probs: np.ndarray, n: int,
                       min_expected: float = 5.0):
    """Interval-frequency test; returns (p, groups, method).

    Neighboring intervals are pooled until every expected count supports the
    chi-square asymptotics. When one interval swallows nearly all the mass
    the pooling collapses to a single cell; the test then falls back to an
    exact binomial on the total count *outside* the dominant interval, which
    stays valid at arbitrarily small expectations.
    """
    obs, exp = [], []
    acc_o = acc_e = 0.0
    for c, p in zip(counts, probs):
        acc_o += c
        acc_e += p * n
        if acc_e >= min_expected:
            obs.append(acc_o)
            exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and exp:
        obs[-1] += acc_o
        exp[-1] += acc_e
    elif acc_e > 0:
        obs.append(acc_o)
        exp.append(acc_e)
    if len(exp) < 2:
        top = int(np.argmax(probs))
        p_rest = float(1.0 - probs[top])
        if p_rest <= 0.0:
            return 1.0, 1, "degenerate"
        p_value = stats.binomtest(int(n - counts[top]), n, p_rest).pvalue
        return float(p_value), 2, "binomial"
    exp = np.array(exp) * (n / sum(exp))  # remove float drift in the margin
    p_value = stats.chisquare(obs, exp).pvalue
    return float(p_value), len(exp), "chi-square"


def sampler_density_report(epsilon: float, kappa: float,
                           n_samples: int = 1_000_000, seed: int = 0,
                           profile=None, corrupt: bool = False,
                           min_ks_count: int = 100) -> dict:
    """Draws against the closed-form interval masses and in-interval law.

    The interval frequencies face a pooled chi-square; within every interval
    holding enough samples, the conditional draws face a KS test against the
    truncated-exponential CDF. ``corrupt`` replaces the in-interval inverse
    CDF with a uniform draw, which the KS battery must catch.
    """
    if profile is None:
        profile = reference_profile()
    rng = np.random.default_rng(seed)
    edges = profile.breakpoints
    widths = np.diff(edges)
    log_m = interval_log_masses(profile, epsilon, kappa)
    probs = np.exp(log_m - logsumexp(log_m))

    if corrupt:
        cdf = np.cumsum(probs)
        idx = np.searchsorted(cdf, rng.random(n_samples) * cdf[-1], side="right")
        idx = np.minimum(idx, probs.size - 1)
        samples = edges[idx] + rng.random(n_samples) * widths[idx]
    else:
        samples = sample_power(profile, epsilon, kappa, rng, size=n_samples)
        idx = np.searchsorted(edges, samples, side="right") - 1
        idx = np.clip(idx, 0, probs.size - 1)

    counts = np.bincount(idx, minlength=probs.size)
    chi_p, chi_groups, chi_method = _merged_chi_square(counts, probs, n_samples)

    rate = epsilon / kappa
    ks_p = {}
    for i in np.flatnonzero(counts >= min_ks_count):
        span = -math.expm1(-rate * widths[i])

        def cond_cdf(x, left=edges[i], span=span):
            return -np.expm1(-rate * (x - left)) / span

        ks_p[int(i)] = float(stats.kstest(samples[idx == i], cond_cdf).pvalue)

    ks_min = min(ks_p.values()) if ks_p else 1.0
    ok = chi_p > DEFAULT_P_THRESHOLD and ks_min > DEFAULT_P_THRESHOLD
    return {"epsilon": epsilon, "kappa": kappa, "n_samples": n_samples,
            "interval_counts": counts.tolist(),
            "chi_square_p": chi_p, "chi_square_groups": chi_groups,
            "chi_square_method": chi_method,
            "ks_p_by_interval": ks_p, "ks_min_p": float(ks_min),
            "corrupted": corrupt, "pass": bool(ok)}


def normalizer_report(epsilon: float, kappa: float, profile=None,
                      tol: float = 1e-9) -> dict:
    """Closed-form interval masses against numeric quadrature of the density."""
    if profile is None:
        profile = reference_profile()
    log_m = interval_log_masses(profile, epsilon, kappa)
    shift = float(log_m.max())
    analytic = float(np.exp(log_m - shift).sum() * (kappa / epsilon))
    edges = profile.breakpoints
    numeric = 0.0
    for i, v in enumerate(profile.weights):
        val, _ = integrate.quad(
            lambda x: math.exp((v - epsilon * x) / kappa - shift),
            edges[i], edges[i + 1], epsrel=1e-13, epsabs=0.0)
        numeric += val
    rel = abs(analytic - numeric) / numeric
    return {"epsilon": epsilon, "kappa": kappa, "analytic": analytic,
            "numeric": numeric, "rel_error": float(rel), "tol": tol,
            "pass": bool(rel <= tol)}


# ---------------------------------------------------------------------------
# reversibility of the single-site dynamics


def detailed_balance_report(n_pairs: int = 1000, epsilon: float = 0.1,
                            seed: int = 1, tol: float = 1e-9) -> dict:
    """Reversibility of single-link moves on a three-link network.

    For random states x and single-coordinate proposals y, the stationary
    density pi(p) ~ exp(U(p)/K) satisfies
    U(x)/K + log f_a(y_a | x_-a) = U(y)/K + log f_a(x_a | x_-a),
    where f_a is the sampler's conditional. Equality must hold to floating-
    point accuracy — it is an algebraic identity, not an approximation.
    """
    topo = explicit_topology(
        node_ids=["s1", "r1", "s2", "r2", "s3", "r3"],
        link_pairs=[("s1", "r1"), ("s2", "r2"), ("s3", "r3")],
        gain_entries={("s1", "r1"): 1.0, ("s2", "r2"): 0.8, ("s3", "r3"): 1.2,
                      ("s2", "r1"): 0.3, ("s3", "r2"): 0.15, ("s1", "r3"): 0.2},
        noise=1.0, pmax=300.0)
    system = build_link_system(topo)
    rng = np.random.default_rng(seed)
    queues = rng.uniform(0.0, 30.0, 3)
    worst = 0.0
    for _ in range(n_pairs):
        x = rng.uniform(0.0, 300.0, 3)
        a = int(rng.integers(0, 3))
        y = x.copy()
        y[a] = rng.uniform(0.0, 300.0)
        kappa = float(np.exp(rng.uniform(np.log(0.1), np.log(100.0))))
        profile = build_profile(system, x, a, queues)
        log_z = logsumexp(interval_log_masses(profile, epsilon, kappa))

        def log_f(q):
            dens = (profile.weight_at(q) - epsilon * q) / kappa
            return float(dens) - float(log_z)

        lhs = objective_value(system, x, queues, epsilon) / kappa + log_f(y[a])
        rhs = objective_value(system, y, queues, epsilon) / kappa + log_f(x[a])
        worst = max(worst, abs(lhs - rhs))
    return {"n_pairs": n_pairs, "epsilon": epsilon,
            "max_abs_log_gap": float(worst), "tol": tol,
            "pass": bool(worst <= tol)}


# ---------------------------------------------------------------------------
# contention windows


def decision_window_is_state_blind() -> bool:
    """The window generator admits no queue or power inputs by construction."""
    params = set(inspect.signature(decision_set_rounds).parameters)
    return params == {"adj", "rng", "w", "rounds"}


def decision_set_report(rounds: int = 1_000_000, w: int = 32, seed: int = 2,
                        alpha: float = 0.001, n_links: int = 9) -> dict:
    """Ring contention windows: validity, frequency floor, symmetry, coverage.

    Every window's winners must be pairwise non-contending; every
    transmitter's selection frequency must not fall significantly below
    0.18/(d_G + 1); by symmetry all transmitters must be selected equally
    often; and over sliding windows of 2*tau rounds every transmitter must
    be selected at least once, tau = ceil(2 (d_G+1) ln(n) / 0.18).
    """
    ring = ring_topology(n_links)
    nbr = compute_neighborhoods(ring)
    _, adj = transmitter_contention(ring, nbr)
    d_g = contention_degree_bound(ring, nbr)
    bound = 0.18 / (d_g + 1)
    rng = np.random.default_rng(seed)
    sel = decision_set_rounds(adj, rng, w, rounds)

    valid = not (sel & (sel @ adj)).any()
    counts = sel.sum(axis=0)
    bound_p = [stats.binomtest(int(c), rounds, bound, alternative="less").pvalue
               for c in counts]
    freq_ok = valid and min(bound_p) >= alpha

    homog_p = float(stats.chisquare(counts).pvalue)

    tau = math.ceil(2.0 * (d_g + 1) * math.log(n_links) / 0.18)
    window = 2 * tau
    n_windows = rounds // window
    per_window = sel[:n_windows * window].reshape(n_windows, window, -1).sum(axis=1)
    min_in_window = int(per_window.min()) if n_windows else 0
    coverage_ok = n_windows > 0 and min_in_window >= 1

    ok = (freq_ok and homog_p > DEFAULT_P_THRESHOLD and coverage_ok
          and decision_window_is_state_blind())
    return {"rounds": rounds, "w": w, "d_g": int(d_g), "bound": bound,
            "all_windows_valid": bool(valid),
            "selection_counts": counts.tolist(),
            "bound_min_p": float(min(bound_p)), "alpha": alpha,
            "homogeneity_p": homog_p,
            "tau": tau, "coverage_windows": int(n_windows),
            "min_selections_per_window": min_in_window,
            "state_blind_interface": decision_window_is_state_blind(),
            "pass": bool(ok)}


def power_independence_report(rounds: int = 20_000, seed: int = 4) -> dict:
    """Update opportunities do not depend on the power/backlog state.

    Two annealing runs are driven through the full policy path with extreme
    opposite states (all-idle/empty vs all-loud/saturated), the state being
    reset before every window. Per link, the two selection frequencies are
    compared by a 2x2 contingency test with a Bonferroni correction.
    """
    configs = {
        "idle": (np.zeros(9), np.zeros(9)),
        "loud": (np.full(9, 50.0), np.full(9, 1e4)),
    }
    tallies = {}
    for name, (powers, queues) in configs.items():
        system = build_link_system(ring_topology(9))
        pol = GibbsPolicy(system, epsilon=0.01, k0=1.0)
        pol._snapshot = queues.copy()
        pol._k0 = 1.0
        rng = np.random.default_rng(seed)
        hits = np.zeros(9)
        for _ in range(rounds):
            pol.virtual_powers = powers.copy()
            hits[pol.anneal_one_slot(0, rng)] += 1
        tallies[name] = hits
    p_values = []
    for i in range(9):
        table = [[tallies["idle"][i], rounds - tallies["idle"][i]],
                 [tallies["loud"][i], rounds - tallies["loud"][i]]]
        p_values.append(float(stats.chi2_contingency(table).pvalue))
    bonferroni = min(min(p_values) * 9, 1.0)
    return {"rounds": rounds,
            "counts_idle": tallies["idle"].tolist(),
            "counts_loud": tallies["loud"].tolist(),
            "min_p_bonferroni": bonferroni,
            "pass": bool(bonferroni > DEFAULT_P_THRESHOLD)}


# ---------------------------------------------------------------------------
# interference bookkeeping


def margin_consistency_report(n_draws: int = 200, seed: int = 3,
                              tol: float = 1e-9) -> dict:
    """Vectorized padded margins against a direct per-link summation."""
    from .topology import random_topology

    topo = random_topology(12, area_side=400.0, seed=seed)
    system = build_link_system(topo)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_draws):
        p = rng.uniform(0.0, 100.0, 12)
        fast = system.virtual_margin(p)
        for l in range(12):
            direct = system.nhat[l] + sum(
                system.m_virt[l, j] * p[j] for j in range(12))
            worst = max(worst, abs(fast[l] - direct) / direct)
    return {"n_draws": n_draws, "max_rel_gap": float(worst), "tol": tol,
            "pass": bool(worst <= tol)}


# ---------------------------------------------------------------------------
# bundle


def run_validation(quick: bool = False, corrupt_sampler: bool = False,
                   seed: int = 0) -> dict:
    """Run the whole battery; ``quick`` shrinks sample sizes for smoke runs,
    ``corrupt_sampler`` breaks the in-interval draw on purpose.

    Quick mode keeps 100k draws for the vectorized sampler checks — they cost
    a fraction of a second either way, and at 10k the fixed-seed KS battery
    sits close enough to the 0.01 threshold that a smoke run could cry wolf.
    """
    scale = 100 if quick else 1
    sampler_scale = min(scale, 10)
    report = {
        "sampler_hot": sampler_density_report(
            epsilon=0.1, kappa=5.0, n_samples=1_000_000 // sampler_scale,
            seed=seed, corrupt=corrupt_sampler),
        "sampler_cold": sampler_density_report(
            epsilon=0.01, kappa=0.5, n_samples=1_000_000 // sampler_scale,
            seed=seed + 1, corrupt=corrupt_sampler),
        "normalizer_hot": normalizer_report(epsilon=0.1, kappa=5.0),
        "normalizer_cold": normalizer_report(epsilon=0.01, kappa=0.5),
        "detailed_balance": detailed_balance_report(
            n_pairs=1000 // min(scale, 10), seed=seed + 2),
        "decision_sets": decision_set_report(
            rounds=1_000_000 // scale, seed=seed + 3),
        "power_independence": power_independence_report(
            rounds=20_000 // scale, seed=seed + 4),
        "margin_consistency": margin_consistency_report(
            n_draws=200 // min(scale, 10), seed=seed + 5),
    }
    report["pass"] = all(check["pass"] for check in report.values())
    return report
