"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np

from padyule import analysis as A
from padyule import graph_process as G
from padyule import limit_dist as L
from padyule import specfun as S
from padyule.params import ModelParams

FOUR = [ModelParams(1, 1, 0), ModelParams(1, 2, 1), ModelParams(1, 1, 2), ModelParams(1, 1, 1)]
P121 = ModelParams(1, 2, 1)


def _report(number, name, ok, elapsed, budget, detail):
    ok = ok and elapsed < budget
    line = (f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}  "
            f"({elapsed:.1f} s of {budget:g} s)  {detail}")
    print(line, flush=True)
    return ok


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def criterion_1():
    def run():
        return [abs(float(np.sum(pmf.values)) + pmf.tail_mass - 1)
                for pmf in (L.limit_pmf(p) for p in FOUR)]
    errs, dt = _timed(run)
    return _report(1, "normalization", max(errs) < 1e-6, dt, 10,
                   f"max |sum + tail - 1| = {max(errs):.2e}")


def criterion_2():
    def run():
        worst = 0.0
        for p in FOUR:
            closed = L.limit_pmf(p, 50).values
            for j in range(51):
                if closed[j] == 0.0:
                    worst = max(worst, abs(L.limit_pmf_oracle(p, j)))
                    continue
                worst = max(worst, abs(closed[j] - L.limit_pmf_oracle(p, j)) / closed[j])
        return worst
    worst, dt = _timed(run)
    return _report(2, "oracle equivalence", worst < 1e-5, dt, 60, f"max rel err = {worst:.2e}")


def criterion_3():
    def run():
        j = np.arange(1, 1001, dtype=float)
        vals = L.limit_pmf(ModelParams(1.5, 1.5, 0), 1000).values[1:]
        return float(np.max(np.abs(vals - 1 / (j * (j + 1)))))
    err, dt = _timed(run)
    return _report(3, "Yule-Simon special case", err < 1e-12, dt, 1, f"max abs err = {err:.2e}")


def criterion_4():
    def run():
        out = {}
        for p in FOUR[:3]:
            asym = L.tail_asymptotic(p)
            lp = L.log_pmf(p, np.array([256, 4096]))
            out[(p.lambda1, p.lambda2, p.mu2)] = [
                abs(math.expm1(lp[k] - asym.log_value(j))) for k, j in enumerate((256, 4096))]
        return out
    devs, dt = _timed(run)
    ok = all(d[1] < 0.05 and d[1] < d[0] for d in devs.values())
    detail = "; ".join(f"{k}: {d[0]:.2e} -> {d[1]:.2e}" for k, d in devs.items())
    return _report(4, "tail asymptotics", ok, dt, 60, detail)


def criterion_5():
    def run():
        grid = [2 ** k for k in range(7, 14)]
        return L.evaluate_critical_decay(ModelParams(1, 1, 1), grid, m=3, eps=0.05)
    recs, dt = _timed(run)
    power = [r.power_scaled for r in recs]
    expo = [r.exp_scaled for r in recs]
    power_ok = all(b < a for a, b in zip(power, power[1:]))
    expo_ok = all(b > a for a, b in zip(expo, expo[1:]))
    detail = (f"j^3 p_j decreasing: {power_ok}; e^(0.05 j) p_j increasing: {expo_ok} "
              f"[{', '.join(f'{v:.2e}' for v in expo)}]")
    return _report(5, "critical regime decay", power_ok and expo_ok, dt, 120, detail)


def criterion_6():
    def run():
        rows = []
        for p, mean in [((1, 1, 1), 1.0), ((1, 1, 2), 0.5), ((2, 3, 2), 2.0)]:
            m, _ = L.summed_moments(ModelParams(*p))
            rows.append((p, abs(m - mean) / mean, L.expectation(ModelParams(*p)) == mean))
        inf_ok = (L.expectation(ModelParams(1, 2, 0)) == math.inf
                  and L.summed_moments(ModelParams(1, 2, 0))[0] == math.inf)
        _, var = L.summed_moments(ModelParams(1, 1, 1))
        var_err = abs(var - 2.0) / 2.0
        return rows, inf_ok, var_err, L.variance(ModelParams(1, 1, 1))
    (rows, inf_ok, var_err, var_closed), dt = _timed(run)
    ok = (all(err < 1e-4 and closed for _, err, closed in rows) and inf_ok
          and var_err < 1e-4 and var_closed == 2.0)
    detail = ", ".join(f"{p}: {err:.1e}" for p, err, _ in rows)
    return _report(6, "moments", ok, dt, 30,
                   f"mean rel err {detail}; inf at (1,2,0): {inf_ok}; variance rel err {var_err:.1e}")


def criterion_7():
    trials = 1_000_000

    def run():
        worst = 0.0
        for state in ([1], [2], [1, 1]):
            s = G.DegreeState(state)
            probs = G.transition_probabilities(s, P121)
            freq = G.transition_frequencies(s, P121, trials, seed=2024)
            if not set(freq) <= set(probs):
                return math.inf
            for word, p in probs.items():
                sd = math.sqrt(trials * p * (1 - p))
                worst = max(worst, abs(freq.get(word, 0) - trials * p) / sd)
        return worst
    worst, dt = _timed(run)
    return _report(7, "kernel exactness", worst <= 4, dt, 60, f"max |z| = {worst:.2f}")


def criterion_8():
    def run():
        a = A.embedding_equivalence_test(P121, 500, 20_000, 1)
        b = A.embedding_equivalence_test(ModelParams(1, 1, 2), 500, 20_000, 2)
        c = A.embedding_equivalence_test(P121, 500, 20_000, 3, yule_params=ModelParams(1, 3, 1))
        return a, b, c
    (a, b, c), dt = _timed(run)
    ok = a.passed and b.passed and not c.passed
    detail = "; ".join(f"{name}: {r.chi_square:.1f} vs {r.chi_square_threshold:.1f} ({r.verdict})"
                       for name, r in [("(1,2,1)", a), ("(1,1,2)", b), ("control", c)])
    return _report(8, "embedding", ok, dt, 300, detail)


def criterion_9():
    def run():
        out = {}
        for p in (ModelParams(1, 1, 0), P121):
            pmf = L.limit_pmf(p)
            tv = []
            for t in (1000, 100_000):
                ens = A.ensemble_degree_distribution(A.EnsembleSpec(p, t, 200, 5), workers=4)
                tv.append(A.compare_distributions(ens, pmf).total_variation)
            out[(p.lambda1, p.lambda2, p.mu2)] = tv
        return out
    tvs, dt = _timed(run)
    ok = all(tv[1] <= 0.05 and tv[1] < tv[0] for tv in tvs.values())
    detail = "; ".join(f"{k}: {v[0]:.4f} -> {v[1]:.4f}" for k, v in tvs.items())
    return _report(9, "convergence to the limit", ok, dt, 600, detail)


def criterion_10():
    def run():
        worst = 0.0
        for j in (500, 1000, 2000):
            for z in (0.5, 1.0, 2.0):
                lead = S.u_asymptotic_b0(j, z).log_leading
                worst = max(worst, abs(math.expm1(S.log_hyp_u_b0(j, z) - lead)))
        return worst, abs(S.gauss_2f1(1, 1, 2, 0.5) - 2 * math.log(2))
    (worst, err), dt = _timed(run)
    return _report(10, "special-function cross-routes", worst < 0.05 and err < 1e-10, dt, 10,
                   f"max U deviation = {worst:.2e}; 2F1 err = {err:.1e}")


def criterion_11():
    def run():
        return A.fit_power_law_exponent(L.limit_pmf(ModelParams(2, 1, 0), 1000), 100, 1000).slope
    slope, dt = _timed(run)
    return _report(11, "power-law exponent", abs(slope + 3) < 0.05, dt, 10, f"slope = {slope:.4f}")


def _check(capsys, criterion):
    # the PASS/FAIL line goes straight to the terminal
    with capsys.disabled():
        print()
        ok = criterion()
    assert ok


def test_criterion_1_normalization(capsys):
    _check(capsys, criterion_1)


def test_criterion_2_oracle_equivalence(capsys):
    _check(capsys, criterion_2)


def test_criterion_3_yule_simon(capsys):
    _check(capsys, criterion_3)


def test_criterion_4_tail_asymptotics(capsys):
    _check(capsys, criterion_4)


def test_criterion_5_critical_decay(capsys):
    _check(capsys, criterion_5)


def test_criterion_6_moments(capsys):
    _check(capsys, criterion_6)


def test_criterion_7_kernel_exactness(capsys):
    _check(capsys, criterion_7)


def test_criterion_8_embedding(capsys):
    _check(capsys, criterion_8)


def test_criterion_9_convergence(capsys):
    _check(capsys, criterion_9)


def test_criterion_10_special_functions(capsys):
    _check(capsys, criterion_10)


def test_criterion_11_power_law_exponent(capsys):
    _check(capsys, criterion_11)


if __name__ == "__main__":
    results = [fn() for fn in (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                               criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
                               criterion_11)]
    sys.exit(0 if all(results) else 1)
