"""Independent evaluation of the Afromowitz AlGaAs index formula.

Prints the fixture values frozen into tests/test_materials.cpp. Uses mpmath
at 40 digits and symbolic differentiation for the group index, so it shares
no code path with the C++ implementation.
"""
import mpmath as mp

mp.mp.dps = 40
HC = mp.mpf("1239.841984")


def index(x, lam):
    x = mp.mpf(x)
    e0 = mp.mpf("3.65") + mp.mpf("0.871") * x + mp.mpf("0.179") * x**2
    ed = mp.mpf("36.1") - mp.mpf("2.45") * x
    eg = mp.mpf("1.424") + mp.mpf("1.266") * x + mp.mpf("0.26") * x**2
    e = HC / lam
    eta = mp.pi * ed / (2 * e0**3 * (e0**2 - eg**2))
    n2 = 1 + ed / e0 + ed * e**2 / e0**3 + eta / mp.pi * e**4 * mp.log(
        (2 * e0**2 - eg**2 - e**2) / (eg**2 - e**2))
    return mp.sqrt(n2)


def group(x, lam):
    return index(x, lam) - lam * mp.diff(lambda l: index(x, l), lam)


for x, lam in [(0.25, 1520), (0.80, 1520), (0.35, 760), (0.90, 760), (0.0, 1520)]:
    print(f"n(x={x}, {lam} nm) = {mp.nstr(index(x, mp.mpf(lam)), 17)}")
print(f"n_g(x=0, 1520 nm) = {mp.nstr(group(0.0, mp.mpf(1520)), 17)}")
