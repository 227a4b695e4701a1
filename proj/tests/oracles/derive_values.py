"""Independent high-precision evaluations used to freeze expected values in the unit tests."""
from mpmath import mp, mpf, sqrt, log, exp, tanh, pi, quad, inf, npdf

mp.dps = 40

# schedule T=4, c0=2, c1=1
T, c0, c1 = 4, 2, 1
b1 = mpf(T) ** (-c0)
r = c1 * log(T) / T
betas = [b1] + [r * min(b1 * (1 + r) ** t, 1) for t in range(1, T)]
alphas = [1 - b for b in betas]
abar = []
p = mpf(1)
for a in alphas:
    p *= a
    abar.append(p)
print("beta", [mp.nstr(b, 17) for b in betas])
print("abar", [mp.nstr(a, 17) for a in abar])
print("ratio t=2", mp.nstr(betas[1] / (1 - abar[0]), 17), "bound", mp.nstr(4 * c1 * log(T) / T, 17))

# coefficients
a, ab = mpf("0.9"), mpf("0.5")
print("ddim eta", mp.nstr((1 - a) / (1 + sqrt((a - ab) / (1 - ab))), 17))
print("ddpm sigma", mp.nstr(sqrt((1 - a) * (a - ab) / (1 - ab)), 17))

# targets: mixture +-1 at abar=0.5
ab = mpf("0.5")
m = sqrt(ab)
f = lambda x: (npdf(x, m, sqrt(1 - ab)) + npdf(x, -m, sqrt(1 - ab))) / 2
print("mixture logpdf(0)", mp.nstr(log(f(0)), 17), "integral", quad(f, [-inf, inf]))
print("tail logpdf(40)", mp.nstr(log(npdf(40, 0, 1)), 17))

# posterior quantities by brute-force Bayes sums
def post(x, ab):
    w = [exp(-(x - s * sqrt(ab)) ** 2 / (2 * (1 - ab))) for s in (-1, 1)]
    z = sum(w)
    mean = (w[1] - w[0]) / z
    second = 1
    return mean, second - mean ** 2
mu, var = post(mpf(1), ab)
print("post mean", mp.nstr(mu, 17), "tanh form", mp.nstr(tanh(sqrt(ab) / (1 - ab)), 17))
print("post var", mp.nstr(var, 17))
print("score", mp.nstr((sqrt(ab) * mu - 1) / (1 - ab), 17))
# log-density derivative cross-check
g = lambda x: log((npdf(x, m, sqrt(1 - ab)) + npdf(x, -m, sqrt(1 - ab))) / 2)
print("dlogp", mp.nstr(mp.diff(g, 1), 17))

# KL 1D var 1 vs var 2
print("kl", mp.nstr(mpf(1) / 2 * (log(2) + mpf(1) / 2 - 1), 17))

# TV N(0,1) vs N(0,9) by quadrature
tv = quad(lambda x: abs(npdf(x, 0, 1) - npdf(x, 0, 3)) / 2, [-inf, -sqrt(9 * log(9) / 8), 0, sqrt(9 * log(9) / 8), inf])
print("tv 1 vs 9", mp.nstr(tv, 17))

# one-step (eta=sigma=0) off-subspace variance
print("onestep off var", mp.nstr(mpf("0.5") / mpf("0.9"), 17), "target", mp.nstr(1 - mpf("0.5") / mpf("0.9"), 17))
# one-step lower bound example
print("thm4", mp.nstr(min(sqrt(mpf(8) / 2) * abs(mpf("0.5") / mpf("0.4") - 1), 1) / 100, 17))
