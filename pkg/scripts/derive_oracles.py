"""Recompute the reference numbers frozen into the test suite.

Independent of the ``msnn`` package: every value is re-derived here from the
model equations with mpmath at 40 significant digits. Run it and compare the
printout with the constants in ``tests/oracle_values.py``.
"""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 40


def sigma(z):
    return 1 / (1 + mp.e ** (-z))


def memductance(x, r_on, r_off):
    return x / r_on + (1 - x) / r_off


def dxdt(x, vd, v_on=mp.mpf("0.1"), v_off=mp.mpf(0), k=mp.mpf("0.015"), tau=mp.mpf("1e-6")):
    return ((1 - x) * sigma((vd - v_on) / k) - x * sigma((v_off - vd) / k)) / tau


def dvdt(v, x1, x2, i_in, c=mp.mpf("100e-12"), e_rest=mp.mpf(0), e_reset=mp.mpf("0.05")):
    g1 = memductance(x1, mp.mpf(1e3), mp.mpf(1e5))
    g2 = memductance(x2, mp.mpf(1e3), mp.mpf(1e5))
    return (i_in - g1 * (v - e_rest) - g2 * (v - e_reset)) / c


def alpha(t, a, tau):
    # solution of tau I' = a - I, tau a' = -a with I(0) = 0, a(0) = a
    return a * (t / tau) * mp.e ** (-t / tau)


def rest_point(drive2_ref):
    """Zero-input fixed point (v, x1, x2); M2 sees v - drive2_ref."""
    def eqs(v, x1, x2):
        return [dvdt(v, x1, x2, 0), dxdt(x1, v), dxdt(x2, v - drive2_ref)]
    return mp.findroot(eqs, (mp.mpf("0.015"), mp.mpf("0.013"), mp.mpf("0.0001")))


def binom_band(n, p, lo, hi):
    return mp.fsum(mp.binomial(n, k) * p ** k * (1 - p) ** (n - k)
                   for k in range(n + 1) if lo <= mp.mpf(k) / n <= hi)


def main():
    out = {}
    out["memductance_x0"] = memductance(0, 1e3, 1e5)
    out["memductance_x1"] = memductance(1, 1e3, 1e5)
    out["memductance_half"] = memductance(mp.mpf("0.5"), 1e3, 1e5)
    out["dxdt_x0_at_von"] = dxdt(0, mp.mpf("0.1"))
    out["dxdt_x1_at_voff"] = dxdt(1, 0)
    out["euler_step_x0_at_von"] = 0 + mp.mpf("1e-9") * dxdt(0, mp.mpf("0.1"))
    out["dvdt_quiescent"] = dvdt(0, 0, 0, 0)
    out["dvdt_input_only"] = mp.mpf("1e-6") / mp.mpf("100e-12")
    out["alpha_at_tau"] = alpha(mp.mpf(1), mp.mpf("1e-6"), mp.mpf(1))
    out["alpha_charge"] = mp.quad(lambda t: alpha(t, mp.mpf("1e-6"), mp.mpf("10e-9")), [0, mp.inf])
    for dt_us in ("0.5", "1", "2", "3", "5", "8"):
        out[f"window_{dt_us}us"] = alpha(mp.mpf(dt_us) * mp.mpf("1e-6"), mp.mpf("1e-6"), mp.mpf("3e-6"))
    out["poisson_mean_200k_35us"] = mp.mpf("200e3") * mp.mpf("35e-6")
    out["chance_band_prob_160"] = binom_band(160, mp.mpf("0.25"), mp.mpf("0.14"), mp.mpf("0.36"))
    v, x1, x2 = rest_point(mp.mpf("0.05"))
    out["rest_reset_v"], out["rest_reset_x1"], out["rest_reset_x2"] = v, x1, x2
    v, x1, x2 = rest_point(mp.mpf(0))
    out["rest_printed_v"], out["rest_printed_x1"], out["rest_printed_x2"] = v, x1, x2
    out["type1_recurrent_1024"] = 1024 * 1023
    out["type2_plastic_default"] = 1024 * 320
    # spike ceiling: spikes at steps 0, r+1, 2(r+1), ... inside 35 us at dt = 1 ns, r = 3000
    out["refractory_ceiling_35us"] = mp.ceil(mp.mpf(35000) / 3001)
    for key, val in out.items():
        print(f"{key:28s} {mp.nstr(val, 15)}")


if __name__ == "__main__":
    main()
